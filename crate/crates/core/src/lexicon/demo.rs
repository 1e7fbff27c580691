//! A small bundled lexicon for demos and offline runs.

use std::path::Path;

use super::{parse_lexicon, Lexicon};

/// `lemma parent` pairs the demo lexicon is built from.
pub const DEMO_HIERARCHY: &str = include_str!("../../resources/demo_hierarchy.txt");
pub const DEMO_LEXICON_TSV: &str = include_str!("../../resources/demo_lexicon.tsv");

pub fn demo_lexicon() -> Lexicon {
    parse_lexicon(DEMO_LEXICON_TSV, Path::new("<demo lexicon>")).expect("bundled demo lexicon parses")
}

/// Parses [`DEMO_HIERARCHY`] into `(lemma, parent)` edges.
pub fn demo_edges() -> Vec<(&'static str, Option<&'static str>)> {
    DEMO_HIERARCHY
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (lemma, parent) = l.split_once(' ').expect("demo hierarchy line has two fields");
            (lemma, (parent != "-").then_some(parent))
        })
        .collect()
}
