//! Dual fusion: convex blending of a fusion sample into the training latent
//! and caption conditioning.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// Fusion caption appended to the training caption before encoding.
    Token,
    /// Training and fusion captions encoded separately and blended.
    Embedding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub mode: FusionMode,
    pub w_lat: f64,
    /// Ignored in token mode.
    #[serde(default)]
    pub w_emb: f64,
}

impl FusionConfig {
    /// Weights are clamped into `[0, 1]`.
    pub fn new(mode: FusionMode, w_lat: f64, w_emb: f64) -> Self {
        FusionConfig {
            mode,
            w_lat: w_lat.clamp(0.0, 1.0),
            w_emb: w_emb.clamp(0.0, 1.0),
        }
    }

    pub fn clamped(self) -> Self {
        FusionConfig::new(self.mode, self.w_lat, self.w_emb)
    }
}

fn blend(a: &[f64], b: &[f64], w: f64) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::contract(format!("fusion weight {w} outside [0, 1]")));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y).collect())
}

/// `(1 - w_lat) lat_ft + w_lat lat_fu`
pub fn fuse_latents(lat_ft: &[f64], lat_fu: &[f64], w_lat: f64) -> Result<Vec<f64>> {
    blend(lat_ft, lat_fu, w_lat)
}

/// `(1 - w_emb) e_ft + w_emb e_fu`, not re-normalized.
pub fn fuse_embeddings(e_ft: &[f64], e_fu: &[f64], w_emb: f64) -> Result<Vec<f64>> {
    blend(e_ft, e_fu, w_emb)
}

/// Appends the fusion caption after a single space.
pub fn token_fuse(y_ft: &str, y_fu: &str) -> String {
    format!("{y_ft} {y_fu}").trim().to_string()
}
