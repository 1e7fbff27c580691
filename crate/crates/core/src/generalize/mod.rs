//! Caption generalization at two levels through a chat-completion endpoint,
//! with an offline mock and an append-only response cache.

use serde::{Deserialize, Serialize};

use crate::annotate::{annotate, Pos};
use crate::genmetrics::CaptionRecord;
use crate::lexicon::Lexicon;
use crate::{Error, Result};

mod cache;
#[cfg(feature = "http")]
mod http;

pub use cache::{cache_key, CacheEntry, ResponseCache};
#[cfg(feature = "http")]
pub use http::{HttpChatClient, HttpConfig, ENV_KEY, ENV_URL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    General,
    FiveWord,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::General => "general",
            Level::FiveWord => "five-word",
        }
    }
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "general" => Ok(Level::General),
            "five-word" => Ok(Level::FiveWord),
            _ => Err(Error::contract(format!("unknown level {s:?} (expected general or five-word)"))),
        }
    }
}

const GENERAL_PREFIX: &str = "Convert this caption of an image to a more general caption:";
const GENERAL_SUFFIX: &str = ";";
const FIVE_WORD_PREFIX: &str = "Make this caption of an image extremely general (result in less than 5 words): ";
const FIVE_WORD_SUFFIX: &str = ".";

pub const FIVE_WORD_LIMIT: usize = 5;
pub const MOCK_FALLBACK: &str = "an image";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

pub fn build_prompt(caption: &str, level: Level) -> Result<String> {
    if caption.trim().is_empty() {
        return Err(Error::EmptyCaption);
    }
    Ok(match level {
        Level::General => format!("{GENERAL_PREFIX}{caption}{GENERAL_SUFFIX}"),
        Level::FiveWord => format!("{FIVE_WORD_PREFIX}{caption}{FIVE_WORD_SUFFIX}"),
    })
}

/// Inverse of [`build_prompt`].
pub fn parse_prompt(prompt: &str) -> Option<(String, Level)> {
    if let Some(rest) = prompt.strip_prefix(GENERAL_PREFIX) {
        return Some((rest.strip_suffix(GENERAL_SUFFIX)?.to_string(), Level::General));
    }
    let rest = prompt.strip_prefix(FIVE_WORD_PREFIX)?;
    Some((rest.strip_suffix(FIVE_WORD_SUFFIX)?.to_string(), Level::FiveWord))
}

/// One user message in, the first text segment of the reply out.
pub trait ChatClient {
    fn complete(&mut self, model: &str, prompt: &str) -> Result<String>;
}

/// Keeps the nouns and verbs that are neither entities nor numerals, lower
/// cased and in order. Five-word requests keep the first five.
pub fn mock_generalize(caption: &str, level: Level, lexicon: &Lexicon) -> String {
    let annotated = annotate(caption, lexicon);
    let mut kept: Vec<String> = annotated
        .tokens
        .iter()
        .filter(|t| !t.is_entity && !t.is_numeric && matches!(t.pos, Pos::Noun | Pos::Verb))
        .map(|t| t.text.to_lowercase())
        .collect();
    if level == Level::FiveWord {
        kept.truncate(FIVE_WORD_LIMIT);
    }
    if kept.is_empty() {
        MOCK_FALLBACK.to_string()
    } else {
        kept.join(" ")
    }
}

/// Offline stand-in for the chat endpoint. Recovers the caption from the
/// prompt and applies [`mock_generalize`].
pub struct MockChatClient {
    lexicon: Lexicon,
    calls: usize,
}

impl MockChatClient {
    pub fn new(lexicon: Lexicon) -> Self {
        MockChatClient { lexicon, calls: 0 }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl ChatClient for MockChatClient {
    fn complete(&mut self, _model: &str, prompt: &str) -> Result<String> {
        self.calls += 1;
        let (caption, level) = parse_prompt(prompt)
            .ok_or_else(|| Error::Provider("mock client got an unrecognized prompt".into()))?;
        Ok(mock_generalize(&caption, level, &self.lexicon))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizeRequest {
    pub caption: String,
    pub level: Level,
    pub model: String,
    pub max_retries: u32,
}

fn clean_reply(reply: &str) -> String {
    let quotes: &[char] = &['"', '\'', '`', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}'];
    let mut s = reply.trim();
    loop {
        let next = s.trim_matches(quotes).trim();
        if next == s {
            return s.to_string();
        }
        s = next;
    }
}

pub fn first_words(text: &str, n: usize) -> String {
    text.split_whitespace().take(n).collect::<Vec<_>>().join(" ")
}

/// Generalizes one caption. A cache hit returns without calling the client.
/// Five-word replies that run long are retried up to `max_retries` times,
/// then truncated.
pub fn generalize_caption(
    client: &mut dyn ChatClient,
    cache: Option<&mut ResponseCache>,
    request: &GeneralizeRequest,
) -> Result<String> {
    let prompt = build_prompt(&request.caption, request.level)?;
    if let Some(hit) = cache
        .as_deref()
        .and_then(|c| c.get(request.level, &request.caption, &request.model))
    {
        return Ok(hit.to_string());
    }
    let mut attempt = 0;
    let result = loop {
        let reply = clean_reply(&client.complete(&request.model, &prompt)?);
        if reply.is_empty() {
            return Err(Error::Provider("empty reply".into()));
        }
        if request.level == Level::General || reply.split_whitespace().count() <= FIVE_WORD_LIMIT {
            break reply;
        }
        if attempt >= request.max_retries {
            break first_words(&reply, FIVE_WORD_LIMIT);
        }
        attempt += 1;
    };
    if let Some(cache) = cache {
        cache.insert(request.level, &request.caption, &request.model, &result)?;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedRecord {
    pub id: String,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generalized: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Order-preserving; a failing record carries an `error` instead of
/// aborting the batch.
pub fn batch_generalize(
    records: &[CaptionRecord],
    level: Level,
    model: &str,
    max_retries: u32,
    client: &mut dyn ChatClient,
    mut cache: Option<&mut ResponseCache>,
) -> Vec<GeneralizedRecord> {
    records
        .iter()
        .map(|rec| {
            let request = GeneralizeRequest {
                caption: rec.caption.clone(),
                level,
                model: model.to_string(),
                max_retries,
            };
            let outcome = generalize_caption(client, cache.as_deref_mut(), &request);
            GeneralizedRecord {
                id: rec.id.clone(),
                caption: rec.caption.clone(),
                generalized: outcome.as_ref().ok().cloned(),
                error: outcome.err().map(|e| e.to_string()),
            }
        })
        .collect()
}
