//! Lexical database: hyponym counts and synset depths per noun lemma.
//!
//! A [`Lexicon`] is built once (WordNet import or TSV load) and is read-only
//! afterwards. Lookups fold case; plural stripping is left to callers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod demo;
mod tsv;
pub mod wordnet;

pub use demo::demo_lexicon;
pub use tsv::{load_lexicon, parse_lexicon, render_lexicon, save_lexicon};
pub use wordnet::import_wordnet;

/// Number of top-ranked lemmas used for the global normalizers.
pub const DEFAULT_TOP_K: usize = 30_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexEntry {
    pub lemma: String,
    /// Mean number of direct hyponyms over the lemma's noun synsets.
    pub hyponym_count: u32,
    /// Mean shortest path length from the lemma's noun synsets to the root.
    pub depth: f64,
}

impl LexEntry {
    pub fn new(lemma: &str, hyponym_count: u32, depth: f64) -> Result<Self> {
        let lemma = normalize_lemma(lemma)
            .ok_or_else(|| Error::contract(format!("invalid lemma {lemma:?}")))?;
        if !(depth.is_finite() && depth >= 0.0) {
            return Err(Error::contract(format!(
                "depth of {lemma:?} must be finite and non-negative, got {depth}"
            )));
        }
        Ok(LexEntry {
            lemma,
            hyponym_count,
            depth,
        })
    }
}

fn normalize_lemma(raw: &str) -> Option<String> {
    let lemma = raw.trim().to_lowercase();
    (!lemma.is_empty() && !lemma.contains(['\t', '\n', '\r'])).then_some(lemma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: BTreeMap<String, LexEntry>,
    avg_global_hypo: f64,
    da_global: f64,
    source: String,
}

impl Lexicon {
    /// Builds a lexicon with explicit globals. Duplicate lemmas are rejected.
    pub fn new(
        entries: impl IntoIterator<Item = LexEntry>,
        avg_global_hypo: f64,
        da_global: f64,
        source: impl Into<String>,
    ) -> Result<Self> {
        if !(avg_global_hypo.is_finite() && avg_global_hypo > 0.0) {
            return Err(Error::DegenerateLexicon(format!(
                "avg_global_hypo must be positive, got {avg_global_hypo}"
            )));
        }
        if !(da_global.is_finite() && da_global > 0.0) {
            return Err(Error::DegenerateLexicon(format!(
                "da_global must be positive, got {da_global}"
            )));
        }
        let mut map = BTreeMap::new();
        for entry in entries {
            let lemma = entry.lemma.clone();
            if map.insert(lemma.clone(), entry).is_some() {
                return Err(Error::contract(format!("duplicate lemma {lemma:?}")));
            }
        }
        Ok(Lexicon {
            entries: map,
            avg_global_hypo,
            da_global,
            source: source.into(),
        })
    }

    /// Builds a lexicon whose globals are computed from `ranked` (most
    /// relevant first) with [`compute_globals`].
    pub fn from_ranked(
        ranked: Vec<LexEntry>,
        top_k: usize,
        source: impl Into<String>,
    ) -> Result<Self> {
        let (avg, da) = compute_globals(&ranked, top_k)?;
        Lexicon::new(ranked, avg, da, source)
    }

    pub fn lookup(&self, lemma: &str) -> Option<&LexEntry> {
        if lemma.is_empty() {
            return None;
        }
        match self.entries.get(lemma) {
            Some(entry) => Some(entry),
            None => self.entries.get(&lemma.to_lowercase()),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &LexEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn avg_global_hypo(&self) -> f64 {
        self.avg_global_hypo
    }

    pub fn da_global(&self) -> f64 {
        self.da_global
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Means of hyponym count and depth over the first `top_k` entries.
///
/// `entries` must already be in relevance order; fewer than `top_k` entries
/// means all of them are used.
pub fn compute_globals(entries: &[LexEntry], top_k: usize) -> Result<(f64, f64)> {
    if entries.is_empty() {
        return Err(Error::DegenerateLexicon("no entries".into()));
    }
    if top_k == 0 {
        return Err(Error::contract("top_k must be at least 1"));
    }
    let selected = &entries[..entries.len().min(top_k)];
    let n = selected.len() as f64;
    let hypo = selected.iter().map(|e| e.hyponym_count as f64).sum::<f64>() / n;
    let depth = selected.iter().map(|e| e.depth).sum::<f64>() / n;
    if hypo <= 0.0 {
        return Err(Error::DegenerateLexicon(
            "all selected hyponym counts are zero".into(),
        ));
    }
    if depth <= 0.0 {
        return Err(Error::DegenerateLexicon(
            "all selected depths are zero".into(),
        ));
    }
    Ok((hypo, depth))
}
