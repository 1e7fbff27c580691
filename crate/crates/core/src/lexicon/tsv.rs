//! Compact lexicon TSV.
//!
//! ```text
//! lemma	hypo	depth
//! animal	1	1
//! dog	0	2
//! #avg_global_hypo=0.5
//! #da_global=1.5
//! ```
#![allow(clippy::tabs_in_doc_comments)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{LexEntry, Lexicon};
use crate::{Error, Result};

const HEADER: &str = "lemma\thypo\tdepth";
const AVG_KEY: &str = "#avg_global_hypo=";
const DA_KEY: &str = "#da_global=";

/// Rounds to 9 significant digits and prints the shortest decimal that
/// parses back to the rounded value.
pub(crate) fn fmt_sig9(value: f64) -> String {
    let rounded: f64 = format!("{value:.8e}")
        .parse()
        .expect("scientific notation always parses");
    format!("{rounded}")
}

pub fn render_lexicon(lexicon: &Lexicon) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for e in lexicon.entries() {
        let _ = writeln!(out, "{}\t{}\t{}", e.lemma, e.hyponym_count, fmt_sig9(e.depth));
    }
    let _ = writeln!(out, "{AVG_KEY}{}", fmt_sig9(lexicon.avg_global_hypo()));
    let _ = writeln!(out, "{DA_KEY}{}", fmt_sig9(lexicon.da_global()));
    out
}

pub fn save_lexicon(lexicon: &Lexicon, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_lexicon(lexicon))?;
    Ok(())
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_lexicon(&text, path)
}

pub fn parse_lexicon(text: &str, path: &Path) -> Result<Lexicon> {
    let err = |line: usize, message: String| Error::Line {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, HEADER)) => {}
        Some((n, other)) => return Err(err(n, format!("expected header {HEADER:?}, got {other:?}"))),
        None => return Err(err(1, "empty file".into())),
    }

    let mut entries: Vec<LexEntry> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut avg = None;
    let mut da = None;
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let parse = |v: &str| {
                v.parse::<f64>()
                    .map_err(|e| err(n, format!("bad global value {v:?}: {e}")))
            };
            if let Some(v) = line.strip_prefix(AVG_KEY) {
                avg = Some(parse(v)?);
            } else if let Some(v) = line.strip_prefix(DA_KEY) {
                da = Some(parse(v)?);
            } else {
                return Err(err(n, format!("unknown comment line #{rest}")));
            }
            continue;
        }
        if avg.is_some() || da.is_some() {
            return Err(err(n, "entry after trailing global lines".into()));
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err(n, format!("expected 3 columns, found {}", cols.len())));
        }
        let hypo: u32 = cols[1]
            .parse()
            .map_err(|e| err(n, format!("bad hyponym count {:?}: {e}", cols[1])))?;
        let depth: f64 = cols[2]
            .parse()
            .map_err(|e| err(n, format!("bad depth {:?}: {e}", cols[2])))?;
        let entry = LexEntry::new(cols[0], hypo, depth).map_err(|e| err(n, e.to_string()))?;
        if !seen.insert(entry.lemma.clone()) {
            return Err(err(n, format!("duplicate lemma {:?}", entry.lemma)));
        }
        entries.push(entry);
    }

    let last = text.lines().count();
    if entries.is_empty() {
        return Err(err(last.max(1), "no entries".into()));
    }
    let avg = avg.ok_or_else(|| err(last, "missing #avg_global_hypo line".into()))?;
    let da = da.ok_or_else(|| err(last, "missing #da_global line".into()))?;
    Lexicon::new(entries, avg, da, path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn lexicon() -> Lexicon {
        Lexicon::new(
            [
                LexEntry::new("animal", 7, 1.0 / 3.0).unwrap(),
                LexEntry::new("dog", 18, 13.5).unwrap(),
                LexEntry::new("pipe", 0, 9.0).unwrap(),
            ],
            std::f64::consts::PI,
            8.25,
            "test",
        )
        .unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn round_trip_three_entries() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.tsv");
        save_lexicon(&lexicon(), &path).unwrap();
        let loaded = load_lexicon(&path).unwrap();
        let entries: Vec<_> = loaded.entries().map(|e| e.lemma.as_str()).collect();
        assert_eq!(entries, ["animal", "dog", "pipe"]);
        assert_eq!(loaded.lookup("dog").unwrap().hyponym_count, 18);
        assert_eq!(loaded.lookup("animal").unwrap().depth, 0.333333333);
        assert_eq!(loaded.avg_global_hypo(), 3.14159265);

        let path2 = dir.path().join("lex2.tsv");
        save_lexicon(&loaded, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn two_column_row_reports_line() {
        let text = "lemma\thypo\tdepth\ndog\t3\t2\ncat\t4\n#avg_global_hypo=1\n#da_global=1\n";
        let err = parse_lexicon(text, &PathBuf::from("x.tsv")).unwrap_err();
        match err {
            Error::Line { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_error() {
        assert!(parse_lexicon("lemma\thypo\tdepth\n", &PathBuf::from("x")).is_err());
    }

    #[test]
    fn duplicate_row_is_error() {
        let text = "lemma\thypo\tdepth\ndog\t3\t2\ndog\t4\t1\n#avg_global_hypo=1\n#da_global=1\n";
        let err = parse_lexicon(text, &PathBuf::from("x")).unwrap_err();
        assert!(matches!(err, Error::Line { line: 3, .. }), "{err}");
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(2.0), "2");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(123456789.4), "123456789");
        assert_eq!(fmt_sig9(7.25), "7.25");
    }
}
