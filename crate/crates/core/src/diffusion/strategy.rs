//! Mitigation strategies applied while building each training sample.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::fusion::{FusionConfig, FusionMode};
use crate::annotate::{replacement_vocabulary, tokenize};
use crate::{Error, Result};

pub const DEFAULT_GN_SIGMA: f64 = 0.1;
pub const DEFAULT_MC_ALTERNATES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MitigationStrategy {
    None,
    DualFusion(FusionConfig),
    /// Gaussian noise on the text embedding; `sigma` is relative to the
    /// embedding's RMS.
    GaussianNoise { sigma: f64 },
    RandomCaption,
    CaptionWordRepeat,
    MultipleCaptions,
}

impl MitigationStrategy {
    /// Parses a strategy name. `fusion` and `sigma` fill in the parameters
    /// of the strategies that take them.
    pub fn parse(name: &str, fusion: FusionConfig, sigma: f64) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => MitigationStrategy::None,
            "dual_fusion" | "fusion" => MitigationStrategy::DualFusion(fusion.clamped()),
            "gaussian_noise" | "gn" => MitigationStrategy::GaussianNoise { sigma },
            "random_caption" | "rc" => MitigationStrategy::RandomCaption,
            "caption_word_repeat" | "cwr" => MitigationStrategy::CaptionWordRepeat,
            "multiple_captions" | "mc" => MitigationStrategy::MultipleCaptions,
            _ => {
                return Err(Error::contract(format!("unknown strategy {name:?}")));
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            MitigationStrategy::None => "none".into(),
            MitigationStrategy::DualFusion(f) => match f.mode {
                FusionMode::Token => format!("dual_fusion(token,w_lat={})", f.w_lat),
                FusionMode::Embedding => {
                    format!("dual_fusion(embedding,w_lat={},w_emb={})", f.w_lat, f.w_emb)
                }
            },
            MitigationStrategy::GaussianNoise { sigma } => format!("gaussian_noise(sigma={sigma})"),
            MitigationStrategy::RandomCaption => "random_caption".into(),
            MitigationStrategy::CaptionWordRepeat => "caption_word_repeat".into(),
            MitigationStrategy::MultipleCaptions => "multiple_captions".into(),
        }
    }

    pub fn needs_fusion_set(&self) -> bool {
        matches!(self, MitigationStrategy::DualFusion(_))
    }
}

/// Same number of words as `caption`, drawn uniformly from the bundled
/// noun and verb lists.
pub fn random_caption(caption: &str, rng: &mut impl Rng) -> String {
    let vocab = replacement_vocabulary();
    let n = tokenize(caption).len().max(1);
    (0..n)
        .map(|_| *vocab.choose(rng).expect("vocabulary is non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Picks a random word of the caption and inserts a copy at a random
/// position.
pub fn repeat_word(caption: &str, rng: &mut impl Rng) -> String {
    let mut words = tokenize(caption);
    if words.is_empty() {
        return caption.to_string();
    }
    let pick = rng.random_range(0..words.len());
    let at = rng.random_range(0..=words.len());
    let word = words[pick].clone();
    words.insert(at, word);
    words.join(" ")
}

pub fn pick_alternate<'a>(caption: &'a str, alternates: &'a [String], rng: &mut impl Rng) -> &'a str {
    alternates.choose(rng).map_or(caption, String::as_str)
}

/// Deterministic stand-in for a captioning model producing alternate
/// captions: a prefix from a small set combined with dropping one word.
pub fn mock_paraphrases(caption: &str, count: usize) -> Vec<String> {
    const PREFIXES: [&str; 5] = ["", "a photo of ", "an image of ", "a picture of ", "a view of "];
    let words = tokenize(caption);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let prefix = PREFIXES[k % PREFIXES.len()];
        let drop = k / PREFIXES.len() % (words.len() + 1);
        let kept: Vec<&str> = words
            .iter()
            .enumerate()
            .filter(|(i, _)| drop == 0 || words.len() < 2 || *i != drop - 1)
            .map(|(_, w)| w.as_str())
            .collect();
        out.push(format!("{prefix}{}", kept.join(" ")).trim().to_string());
    }
    out
}

/// Adds `N(0, (sigma * rms)^2)` noise to each component.
pub fn noisy_embedding(emb: &[f64], sigma: f64, rng: &mut impl Rng) -> Vec<f64> {
    let rms = (emb.iter().map(|v| v * v).sum::<f64>() / emb.len().max(1) as f64).sqrt();
    let std = sigma * rms;
    if std <= 0.0 || !std.is_finite() {
        return emb.to_vec();
    }
    let normal = Normal::new(0.0, std).expect("positive std");
    emb.iter().map(|v| v + normal.sample(rng)).collect()
}
