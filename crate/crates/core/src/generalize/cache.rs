//! Append-only JSONL cache of generalization results.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::Level;
use crate::diffusion::codec::fnv1a64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    /// FNV-1a 64 of the key tuple, hex encoded.
    pub key: String,
    pub level: Level,
    pub caption: String,
    pub model: String,
    pub response: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Hash of `(level, caption, model)`. Fields are joined with a unit
/// separator so no two distinct tuples share an encoding.
pub fn cache_key(level: Level, caption: &str, model: &str) -> u64 {
    let joined = format!("{}\u{1f}{}\u{1f}{}", level.as_str(), caption, model);
    fnv1a64(joined.as_bytes())
}

#[derive(Debug, Default)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: HashMap<u64, Vec<CacheEntry>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache::default()
    }

    /// Loads `path` if it exists; later inserts are appended to it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut cache = ResponseCache {
            path: Some(path.clone()),
            entries: HashMap::new(),
        };
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let entry: CacheEntry = serde_json::from_str(&line).map_err(|e| Error::Line {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                cache.remember(entry);
            }
        }
        Ok(cache)
    }

    fn remember(&mut self, entry: CacheEntry) {
        let key = cache_key(entry.level, &entry.caption, &entry.model);
        let bucket = self.entries.entry(key).or_default();
        bucket.retain(|e| !(e.level == entry.level && e.caption == entry.caption && e.model == entry.model));
        bucket.push(entry);
    }

    pub fn get(&self, level: Level, caption: &str, model: &str) -> Option<&str> {
        self.entries
            .get(&cache_key(level, caption, model))?
            .iter()
            .find(|e| e.level == level && e.caption == caption && e.model == model)
            .map(|e| e.response.as_str())
    }

    pub fn insert(&mut self, level: Level, caption: &str, model: &str, response: &str) -> Result<()> {
        let entry = CacheEntry {
            key: format!("{:016x}", cache_key(level, caption, model)),
            level,
            caption: caption.to_string(),
            model: model.to_string(),
            response: response.to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        };
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(file, "{}", serde_json::to_string(&entry)?)?;
        }
        self.remember(entry);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generalize::{generalize_caption, ChatClient, GeneralizeRequest};

    struct Counting(usize);

    impl ChatClient for Counting {
        fn complete(&mut self, _: &str, _: &str) -> Result<String> {
            self.0 += 1;
            Ok(format!("reply {}", self.0))
        }
    }

    #[test]
    fn keys_are_deterministic_and_distinct() {
        assert_eq!(cache_key(Level::General, "a", "m"), cache_key(Level::General, "a", "m"));
        assert_ne!(cache_key(Level::General, "a", "m"), cache_key(Level::FiveWord, "a", "m"));
        assert_ne!(cache_key(Level::General, "a", "m1"), cache_key(Level::General, "a", "m2"));
    }

    #[test]
    fn hit_skips_client_and_persists() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let req = GeneralizeRequest {
            caption: "a red dog".into(),
            level: Level::General,
            model: "m".into(),
            max_retries: 0,
        };
        let mut client = Counting(0);
        let mut cache = ResponseCache::open(&path).unwrap();
        let first = generalize_caption(&mut client, Some(&mut cache), &req).unwrap();
        let second = generalize_caption(&mut client, Some(&mut cache), &req).unwrap();
        assert_eq!(first, second);
        assert_eq!(client.0, 1);

        let mut reopened = ResponseCache::open(&path).unwrap();
        assert_eq!(reopened.len(), 1);
        let third = generalize_caption(&mut client, Some(&mut reopened), &req).unwrap();
        assert_eq!(third, first);
        assert_eq!(client.0, 1);
    }

    #[test]
    fn colliding_bucket_compares_full_key() {
        let mut cache = ResponseCache::in_memory();
        cache.insert(Level::General, "a", "m", "x").unwrap();
        // force a second tuple into the same bucket
        let key = cache_key(Level::General, "a", "m");
        cache.entries.get_mut(&key).unwrap().push(CacheEntry {
            key: format!("{key:016x}"),
            level: Level::General,
            caption: "b".into(),
            model: "m".into(),
            response: "y".into(),
            timestamp: 0,
        });
        assert_eq!(cache.get(Level::General, "a", "m"), Some("x"));
        assert_eq!(cache.get(Level::General, "b", "m"), None);
    }

    #[test]
    fn corrupt_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(&path, "\n{oops\n").unwrap();
        let err = ResponseCache::open(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
