//! Rule-based tokenizer and annotator.
//!
//! Every count used by the generality metrics comes from here. The rules are
//! a fixed cascade applied per token, in order:
//!
//! 1. **Number**: digits with optional `.`, `,` or `%`, or a bundled number
//!    word.
//! 2. **Time designator**: `am`/`pm` right after a number is neither a verb
//!    nor an entity.
//! 3. **Entity**: capitalized and not sentence-initial, all-caps with at
//!    least two letters, or capitalized and in the bundled gazetteer.
//! 4. **Verb**: modal/auxiliary, irregular form, or a regular inflection of a
//!    bundled verb. A word right after a determiner is never a verb.
//! 5. **Noun**: the singularized lemma is in the lexicon.
//!
//! Present indicative covers base and third-person-singular forms, the
//! present forms of *be*/*have*/*do*, and the modals *can, will, may, must,
//! shall*. Infinitives after *to*, `-ing` forms and past forms do not count.

use serde::{Deserialize, Serialize};

use crate::lexicon::Lexicon;

mod wordlists;

pub use wordlists::replacement_vocabulary;
use wordlists::{lists, IrregularKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Pos {
    Noun,
    Propn,
    Verb,
    Num,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerbForm {
    PresInd,
    OtherVerb,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub lemma: String,
    pub pos: Pos,
    pub is_entity: bool,
    pub is_numeric: bool,
    pub verb_form: VerbForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedCaption {
    pub tokens: Vec<Token>,
    pub n_word: usize,
    pub ent: usize,
    pub num: usize,
    pub v_total: usize,
    pub count_pres_ind: usize,
    /// Lexicon lemmas of the common nouns, in caption order.
    pub nouns: Vec<String>,
}

impl AnnotatedCaption {
    pub fn from_tokens(tokens: Vec<Token>) -> Self {
        let n_word = tokens
            .iter()
            .filter(|t| t.text.chars().any(char::is_alphanumeric))
            .count();
        let ent = tokens.iter().filter(|t| t.is_entity).count();
        let num = tokens.iter().filter(|t| t.is_numeric).count();
        let v_total = tokens.iter().filter(|t| t.pos == Pos::Verb).count();
        let count_pres_ind = tokens
            .iter()
            .filter(|t| t.verb_form == VerbForm::PresInd)
            .count();
        let nouns = tokens
            .iter()
            .filter(|t| t.pos == Pos::Noun)
            .map(|t| t.lemma.clone())
            .collect();
        AnnotatedCaption {
            tokens,
            n_word,
            ent,
            num,
            v_total,
            count_pres_ind,
            nouns,
        }
    }
}

const MODALS_PRESENT: [&str; 5] = ["can", "will", "may", "must", "shall"];
const MODALS_OTHER: [&str; 4] = ["could", "would", "should", "might"];
const DETERMINERS: [&str; 17] = [
    "a", "an", "the", "this", "these", "those", "my", "your", "his", "its", "our", "their",
    "some", "any", "every", "each", "no",
];

struct RawToken {
    text: String,
    sentence_start: bool,
}

fn split_words(text: &str) -> Vec<RawToken> {
    let mut out = Vec::new();
    let mut sentence_start = true;
    for word in text.split_whitespace() {
        let trimmed = word.trim_matches(|c: char| !c.is_alphanumeric());
        let tail = &word[word.trim_end_matches(|c: char| !c.is_alphanumeric()).len()..];
        let mut first = true;
        for fragment in trimmed.split(['-', '/']) {
            let fragment = fragment.trim_matches(|c: char| !c.is_alphanumeric());
            if fragment.is_empty() {
                continue;
            }
            out.push(RawToken {
                text: fragment.to_string(),
                sentence_start: sentence_start && first,
            });
            first = false;
        }
        if !first {
            sentence_start = false;
        }
        if tail.contains(['.', '!', '?']) {
            sentence_start = true;
        }
    }
    out
}

/// Splits on whitespace, strips surrounding punctuation and splits internal
/// hyphens and slashes. Empty fragments are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    split_words(text).into_iter().map(|t| t.text).collect()
}

fn is_numeric_literal(word: &str) -> bool {
    word.chars().any(|c| c.is_ascii_digit())
        && word
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '%'))
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

fn is_all_caps(word: &str) -> bool {
    let letters: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
    letters.len() >= 2 && letters.iter().all(|c| c.is_uppercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Inflection {
    Base,
    ThirdSingular,
    Present,
    Past,
    Participle,
    Ing,
}

fn undouble(stem: &str) -> Option<&str> {
    let bytes = stem.as_bytes();
    let n = bytes.len();
    (n >= 2 && bytes[n - 1] == bytes[n - 2]).then(|| &stem[..n - 1])
}

/// Verb lemma and inflection of a lowercase word, if it is a known verb.
fn verb_lemma(lower: &str) -> Option<(String, Inflection)> {
    let l = lists();
    if let Some((lemma, kind)) = l.irregular.get(lower) {
        let inflection = match kind {
            IrregularKind::Present => Inflection::Present,
            IrregularKind::Past => Inflection::Past,
            IrregularKind::Participle => Inflection::Participle,
            IrregularKind::Ing => Inflection::Ing,
        };
        return Some((lemma.to_string(), inflection));
    }
    if l.verbs.contains(lower) || matches!(lower, "be" | "have" | "do") {
        return Some((lower.to_string(), Inflection::Base));
    }
    let known = |stem: &str| l.verbs.contains(stem).then(|| stem.to_string());

    if let Some(stem) = lower.strip_suffix("ies") {
        if let Some(v) = known(&format!("{stem}y")) {
            return Some((v, Inflection::ThirdSingular));
        }
    }
    if let Some(stem) = lower.strip_suffix("es") {
        if let Some(v) = known(stem) {
            return Some((v, Inflection::ThirdSingular));
        }
    }
    if let Some(stem) = lower.strip_suffix('s') {
        if !stem.ends_with('s') {
            if let Some(v) = known(stem) {
                return Some((v, Inflection::ThirdSingular));
            }
        }
    }
    if let Some(stem) = lower.strip_suffix("ied") {
        if let Some(v) = known(&format!("{stem}y")) {
            return Some((v, Inflection::Past));
        }
    }
    if let Some(stem) = lower.strip_suffix("ed") {
        let candidates = [Some(stem.to_string()), Some(format!("{stem}e")), undouble(stem).map(str::to_string)];
        if let Some(v) = candidates.into_iter().flatten().find_map(|c| known(&c)) {
            return Some((v, Inflection::Past));
        }
    }
    if let Some(stem) = lower.strip_suffix("ing") {
        let candidates = [
            Some(stem.to_string()),
            Some(format!("{stem}e")),
            undouble(stem).map(str::to_string),
            stem.strip_suffix('y').map(|s| format!("{s}ie")),
        ];
        if let Some(v) = candidates.into_iter().flatten().find_map(|c| known(&c)) {
            return Some((v, Inflection::Ing));
        }
    }
    None
}

/// Lexicon form of a (possibly plural) noun.
pub fn singularize(lower: &str, lexicon: &Lexicon) -> Option<String> {
    if lexicon.lookup(lower).is_some() {
        return Some(lower.to_string());
    }
    let mut candidates = Vec::new();
    if let Some(stem) = lower.strip_suffix("ies") {
        candidates.push(format!("{stem}y"));
    }
    if let Some(stem) = lower.strip_suffix("es") {
        candidates.push(stem.to_string());
    }
    if let Some(stem) = lower.strip_suffix('s') {
        if !stem.ends_with('s') {
            candidates.push(stem.to_string());
        }
    }
    candidates
        .into_iter()
        .find(|c| !c.is_empty() && lexicon.lookup(c).is_some())
}

struct Context<'a> {
    prev_lower: Option<&'a str>,
    prev_numeric: bool,
}

fn classify(raw: &RawToken, ctx: &Context<'_>, lexicon: &Lexicon) -> Token {
    let l = lists();
    let text = raw.text.clone();
    let lower = text.to_lowercase();
    let token = |lemma: String, pos: Pos, verb_form: VerbForm| Token {
        text: text.clone(),
        lemma,
        pos,
        is_entity: pos == Pos::Propn,
        is_numeric: pos == Pos::Num,
        verb_form,
    };

    if is_numeric_literal(&text) || l.number_words.contains(lower.as_str()) {
        return token(lower, Pos::Num, VerbForm::None);
    }
    if ctx.prev_numeric && matches!(lower.as_str(), "am" | "pm" | "a.m" | "p.m") {
        return token(lower, Pos::Other, VerbForm::None);
    }

    let capitalized = is_capitalized(&text) && text != "I";
    let in_gazetteer = l.gazetteer.contains(lower.as_str());
    let entity = (capitalized && (!raw.sentence_start || in_gazetteer)) || is_all_caps(&text);
    if entity {
        return token(lower, Pos::Propn, VerbForm::None);
    }

    let after_determiner = ctx.prev_lower.is_some_and(|p| DETERMINERS.contains(&p));
    if !after_determiner {
        if MODALS_PRESENT.contains(&lower.as_str()) {
            return token(lower, Pos::Verb, VerbForm::PresInd);
        }
        if MODALS_OTHER.contains(&lower.as_str()) {
            return token(lower, Pos::Verb, VerbForm::OtherVerb);
        }
        if let Some((lemma, inflection)) = verb_lemma(&lower) {
            let infinitive = ctx.prev_lower == Some("to");
            let present = match inflection {
                Inflection::Base => !infinitive && lemma != "be",
                Inflection::ThirdSingular | Inflection::Present => true,
                Inflection::Past | Inflection::Participle | Inflection::Ing => false,
            };
            let form = if present {
                VerbForm::PresInd
            } else {
                VerbForm::OtherVerb
            };
            return token(lemma, Pos::Verb, form);
        }
    }

    if let Some(lemma) = singularize(&lower, lexicon) {
        return token(lemma, Pos::Noun, VerbForm::None);
    }
    token(lower, Pos::Other, VerbForm::None)
}

pub fn annotate(text: &str, lexicon: &Lexicon) -> AnnotatedCaption {
    let raw = split_words(text);
    let mut tokens: Vec<Token> = Vec::with_capacity(raw.len());
    for (i, r) in raw.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &tokens[j]);
        let prev_lower = i.checked_sub(1).map(|j| raw[j].text.to_lowercase());
        let ctx = Context {
            prev_lower: prev_lower.as_deref(),
            prev_numeric: prev.is_some_and(|t| t.is_numeric),
        };
        let token = classify(r, &ctx, lexicon);
        tokens.push(token);
    }
    AnnotatedCaption::from_tokens(tokens)
}
