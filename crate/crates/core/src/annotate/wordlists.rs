//! Bundled word lists. Each resource is one lowercase entry per line; `#`
//! starts a comment line.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

const VERBS: &str = include_str!("../../resources/verbs.txt");
const IRREGULAR: &str = include_str!("../../resources/irregular_verbs.txt");
const GAZETTEER: &str = include_str!("../../resources/gazetteer.txt");
const NUMBER_WORDS: &str = include_str!("../../resources/number_words.txt");
const NOUNS: &str = include_str!("../../resources/nouns.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IrregularKind {
    Present,
    Past,
    Participle,
    Ing,
}

pub(crate) struct WordLists {
    pub verbs: HashSet<&'static str>,
    pub irregular: HashMap<&'static str, (&'static str, IrregularKind)>,
    pub gazetteer: HashSet<&'static str>,
    pub number_words: HashSet<&'static str>,
    pub nouns: Vec<&'static str>,
}

fn entries(text: &'static str) -> impl Iterator<Item = &'static str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub(crate) fn lists() -> &'static WordLists {
    static LISTS: OnceLock<WordLists> = OnceLock::new();
    LISTS.get_or_init(|| {
        let irregular = entries(IRREGULAR)
            .map(|line| {
                let mut cols = line.split('\t');
                let form = cols.next().expect("irregular form");
                let lemma = cols.next().expect("irregular lemma");
                let kind = match cols.next().expect("irregular kind") {
                    "present" => IrregularKind::Present,
                    "past" => IrregularKind::Past,
                    "participle" => IrregularKind::Participle,
                    "ing" => IrregularKind::Ing,
                    other => panic!("unknown irregular kind {other}"),
                };
                (form, (lemma, kind))
            })
            .collect();
        WordLists {
            verbs: entries(VERBS).collect(),
            irregular,
            gazetteer: entries(GAZETTEER).collect(),
            number_words: entries(NUMBER_WORDS).collect(),
            nouns: entries(NOUNS).collect(),
        }
    })
}

/// Noun and verb vocabulary used for random caption replacement.
pub fn replacement_vocabulary() -> Vec<&'static str> {
    let l = lists();
    let mut verbs: Vec<&str> = l.verbs.iter().copied().collect();
    verbs.sort_unstable();
    let mut vocab = l.nouns.clone();
    vocab.extend(verbs);
    vocab
}
