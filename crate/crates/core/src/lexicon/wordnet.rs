//! Import from WordNet 3.x noun database files (`data.noun`, `index.noun`).
//!
//! Only the fields needed for hyponym counts and depths are read: the
//! pointer lists of each synset in `data.noun`, and the synset offsets and
//! sense-tag counts of each lemma in `index.noun`.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;

use super::{LexEntry, Lexicon, DEFAULT_TOP_K};
use crate::{Error, Result};

#[derive(Debug, Default)]
struct Synset {
    hypernyms: Vec<u64>,
    hyponyms: u32,
}

#[derive(Debug)]
struct IndexRow {
    lemma: String,
    tag_count: u64,
    offsets: Vec<u64>,
    byte: u64,
}

fn parse_error(path: &Path, offset: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

/// Iterates non-header lines with their starting byte offsets.
fn data_lines(text: &str) -> impl Iterator<Item = (u64, &str)> {
    let mut pos = 0u64;
    text.split_inclusive('\n').filter_map(move |raw| {
        let start = pos;
        pos += raw.len() as u64;
        let line = raw.trim_end_matches(['\n', '\r']);
        (!line.is_empty() && !line.starts_with(' ')).then_some((start, line))
    })
}

fn read_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| parse_error(path, 0, format!("cannot read: {e}")))?;
    String::from_utf8(bytes).map_err(|e| {
        parse_error(path, e.utf8_error().valid_up_to() as u64, "invalid UTF-8")
    })
}

fn parse_data(path: &Path, text: &str) -> Result<HashMap<u64, Synset>> {
    let mut synsets = HashMap::new();
    for (byte, line) in data_lines(text) {
        let err = |m: String| parse_error(path, byte, m);
        let body = line.split(" | ").next().unwrap_or(line);
        let fields: Vec<&str> = body.split_whitespace().collect();
        let field = |i: usize| {
            fields
                .get(i)
                .copied()
                .ok_or_else(|| err(format!("truncated synset record (field {i})")))
        };
        let offset: u64 = field(0)?
            .parse()
            .map_err(|_| err(format!("bad synset offset {:?}", fields[0])))?;
        if offset != byte {
            return Err(err(format!(
                "synset offset {offset} does not match its byte position"
            )));
        }
        let w_cnt = usize::from_str_radix(field(3)?, 16)
            .map_err(|_| err(format!("bad word count {:?}", fields[3])))?;
        let p_idx = 4 + 2 * w_cnt;
        let p_cnt: usize = field(p_idx)?
            .parse()
            .map_err(|_| err(format!("bad pointer count {:?}", fields[p_idx])))?;
        let mut synset = Synset::default();
        for p in 0..p_cnt {
            let base = p_idx + 1 + 4 * p;
            let symbol = field(base)?;
            let target: u64 = field(base + 1)?
                .parse()
                .map_err(|_| err(format!("bad pointer target {:?}", fields[base + 1])))?;
            let pos = field(base + 2)?;
            field(base + 3)?;
            if pos != "n" {
                continue;
            }
            match symbol {
                "@" | "@i" => synset.hypernyms.push(target),
                "~" => synset.hyponyms += 1,
                _ => {}
            }
        }
        synsets.insert(offset, synset);
    }
    if synsets.is_empty() {
        return Err(parse_error(path, text.len() as u64, "no synset records"));
    }
    Ok(synsets)
}

fn parse_index(path: &Path, text: &str) -> Result<Vec<IndexRow>> {
    let mut rows = Vec::new();
    for (byte, line) in data_lines(text) {
        let err = |m: String| parse_error(path, byte, m);
        let fields: Vec<&str> = line.split_whitespace().collect();
        let num = |i: usize| -> Result<u64> {
            let f = fields
                .get(i)
                .ok_or_else(|| err(format!("truncated index record (field {i})")))?;
            f.parse().map_err(|_| err(format!("bad number {f:?} in field {i}")))
        };
        let synset_cnt = num(2)? as usize;
        let p_cnt = num(3)? as usize;
        let tag_idx = 4 + p_cnt + 1;
        let tag_count = num(tag_idx)?;
        let offsets = (0..synset_cnt)
            .map(|k| num(tag_idx + 1 + k))
            .collect::<Result<Vec<_>>>()?;
        rows.push(IndexRow {
            lemma: fields[0].to_lowercase(),
            tag_count,
            offsets,
            byte,
        });
    }
    if rows.is_empty() {
        return Err(parse_error(path, text.len() as u64, "no index records"));
    }
    Ok(rows)
}

/// Shortest hypernym-path length to the root for every synset. With several
/// roots a virtual root sits at depth 0 and the real roots at depth 1.
fn synset_depths(path: &Path, synsets: &HashMap<u64, Synset>) -> Result<HashMap<u64, u32>> {
    let mut children: HashMap<u64, Vec<u64>> = HashMap::new();
    let mut roots = Vec::new();
    let mut offsets: Vec<u64> = synsets.keys().copied().collect();
    offsets.sort_unstable();
    for &off in &offsets {
        let s = &synsets[&off];
        if s.hypernyms.is_empty() {
            roots.push(off);
        }
        for &parent in &s.hypernyms {
            if !synsets.contains_key(&parent) {
                return Err(parse_error(
                    path,
                    off,
                    format!("hypernym pointer to missing synset {parent}"),
                ));
            }
            children.entry(parent).or_default().push(off);
        }
    }
    if roots.is_empty() {
        return Err(parse_error(path, 0, "hierarchy has no root synset"));
    }
    let root_depth = if roots.len() > 1 { 1 } else { 0 };
    let mut depth = HashMap::with_capacity(synsets.len());
    let mut queue = VecDeque::new();
    for &r in &roots {
        depth.insert(r, root_depth);
        queue.push_back(r);
    }
    while let Some(node) = queue.pop_front() {
        let d = depth[&node];
        for &child in children.get(&node).map(Vec::as_slice).unwrap_or(&[]) {
            if let Entry::Vacant(e) = depth.entry(child) {
                e.insert(d + 1);
                queue.push_back(child);
            }
        }
    }
    if let Some(&orphan) = offsets.iter().find(|o| !depth.contains_key(o)) {
        return Err(parse_error(path, orphan, "synset not reachable from any root"));
    }
    Ok(depth)
}

/// Imports noun lemmas with globals over the top [`DEFAULT_TOP_K`] lemmas.
pub fn import_wordnet(db_dir: impl AsRef<Path>) -> Result<Lexicon> {
    import_wordnet_top_k(db_dir, DEFAULT_TOP_K)
}

pub fn import_wordnet_top_k(db_dir: impl AsRef<Path>, top_k: usize) -> Result<Lexicon> {
    let dir = db_dir.as_ref();
    let data_path = dir.join("data.noun");
    let index_path = dir.join("index.noun");
    let synsets = parse_data(&data_path, &read_file(&data_path)?)?;
    let rows = parse_index(&index_path, &read_file(&index_path)?)?;
    let depths = synset_depths(&data_path, &synsets)?;

    let mut ranked: Vec<(u64, LexEntry)> = Vec::with_capacity(rows.len());
    let mut seen = std::collections::HashSet::new();
    for row in rows {
        if row.offsets.is_empty() {
            return Err(parse_error(&index_path, row.byte, "lemma without synsets"));
        }
        if !seen.insert(row.lemma.clone()) {
            return Err(parse_error(
                &index_path,
                row.byte,
                format!("duplicate lemma {:?}", row.lemma),
            ));
        }
        let mut hypo_sum = 0u64;
        let mut depth_sum = 0u64;
        for off in &row.offsets {
            let synset = synsets.get(off).ok_or_else(|| {
                parse_error(&index_path, row.byte, format!("unknown synset offset {off}"))
            })?;
            hypo_sum += synset.hyponyms as u64;
            depth_sum += depths[off] as u64;
        }
        let n = row.offsets.len() as u64;
        // round half up: floor((2s + n) / 2n)
        let hypo = ((2 * hypo_sum + n) / (2 * n)) as u32;
        let depth = depth_sum as f64 / n as f64;
        let entry = LexEntry::new(&row.lemma, hypo, depth)
            .map_err(|e| parse_error(&index_path, row.byte, e.to_string()))?;
        ranked.push((row.tag_count, entry));
    }
    ranked.sort_by(|(ta, a), (tb, b)| tb.cmp(ta).then_with(|| a.lemma.cmp(&b.lemma)));
    let ranked: Vec<LexEntry> = ranked.into_iter().map(|(_, e)| e).collect();
    Lexicon::from_ranked(ranked, top_k, dir.display().to_string())
}

/// A synset for [`write_stub_database`]. `hypernyms` index into the slice
/// passed alongside.
#[derive(Debug, Clone)]
pub struct StubSynset {
    pub lemmas: Vec<String>,
    pub hypernyms: Vec<usize>,
    pub tag_count: u64,
}

const STUB_HEADER: &str = "  1 This is a generated stub in WordNet 3.0 database layout.\n";

/// Writes a minimal `data.noun`/`index.noun` pair for the given hierarchy.
///
/// Offsets are real byte positions so the result is readable by
/// [`import_wordnet`] and by other WordNet tools that seek by offset.
pub fn write_stub_database(dir: impl AsRef<Path>, synsets: &[StubSynset]) -> Result<()> {
    let dir = dir.as_ref();
    let mut hyponyms: Vec<Vec<usize>> = vec![Vec::new(); synsets.len()];
    for (i, s) in synsets.iter().enumerate() {
        for &p in &s.hypernyms {
            if p >= synsets.len() {
                return Err(Error::contract(format!("synset {i} has bad hypernym {p}")));
            }
            hyponyms[p].push(i);
        }
    }

    // Offsets are fixed-width, so each record's length is known up front.
    let record = |i: usize, offsets: &[u64]| -> String {
        let s = &synsets[i];
        let mut line = format!("{:08} 03 n {:02x}", offsets[i], s.lemmas.len());
        for lemma in &s.lemmas {
            line.push_str(&format!(" {lemma} 0"));
        }
        line.push_str(&format!(" {:03}", s.hypernyms.len() + hyponyms[i].len()));
        for &p in &s.hypernyms {
            line.push_str(&format!(" @ {:08} n 0000", offsets[p]));
        }
        for &c in &hyponyms[i] {
            line.push_str(&format!(" ~ {:08} n 0000", offsets[c]));
        }
        line.push_str(" | stub gloss\n");
        line
    };
    let zeros = vec![0u64; synsets.len()];
    let mut offsets = Vec::with_capacity(synsets.len());
    let mut pos = STUB_HEADER.len() as u64;
    for i in 0..synsets.len() {
        offsets.push(pos);
        pos += record(i, &zeros).len() as u64;
    }
    let mut data = String::from(STUB_HEADER);
    for i in 0..synsets.len() {
        data.push_str(&record(i, &offsets));
    }

    let mut by_lemma: std::collections::BTreeMap<String, (u64, Vec<u64>)> = Default::default();
    for (i, s) in synsets.iter().enumerate() {
        for lemma in &s.lemmas {
            let slot = by_lemma.entry(lemma.to_lowercase()).or_default();
            slot.0 += s.tag_count;
            slot.1.push(offsets[i]);
        }
    }
    let mut index = String::from(STUB_HEADER);
    for (lemma, (tags, offs)) in by_lemma {
        index.push_str(&format!("{lemma} n {} 2 @ ~ {} {tags}", offs.len(), offs.len()));
        for off in offs {
            index.push_str(&format!(" {off:08}"));
        }
        index.push_str(" \n");
    }

    fs::create_dir_all(dir)?;
    fs::write(dir.join("data.noun"), data)?;
    fs::write(dir.join("index.noun"), index)?;
    Ok(())
}

/// Convenience for a single-lemma-per-synset hierarchy given as
/// `(lemma, parent lemma)` edges; `None` marks a root.
pub fn stub_from_edges(edges: &[(&str, Option<&str>)]) -> Result<Vec<StubSynset>> {
    let index: HashMap<&str, usize> = edges.iter().enumerate().map(|(i, (l, _))| (*l, i)).collect();
    edges
        .iter()
        .map(|(lemma, parent)| {
            let hypernyms = match parent {
                Some(p) => vec![*index
                    .get(p)
                    .ok_or_else(|| Error::contract(format!("unknown parent {p:?}")))?],
                None => Vec::new(),
            };
            Ok(StubSynset {
                lemmas: vec![lemma.to_string()],
                hypernyms,
                tag_count: 1,
            })
        })
        .collect()
}
