//! Visual and text encoders of the toy model.

use crate::annotate::tokenize;
use crate::image::ToyImage;
use crate::{Error, Result};

pub const DEFAULT_POOL: usize = 2;
pub const DEFAULT_TEXT_DIM: usize = 64;

/// `p x p` block means, flattened row-major.
pub fn visual_encode(image: &ToyImage, pool: usize) -> Result<Vec<f64>> {
    let (h, w) = (image.height(), image.width());
    if pool == 0 || h % pool != 0 || w % pool != 0 {
        return Err(Error::contract(format!(
            "pool factor {pool} does not divide {h}x{w}"
        )));
    }
    let (lh, lw) = (h / pool, w / pool);
    let area = (pool * pool) as f64;
    let mut latent = vec![0f64; lh * lw];
    for y in 0..h {
        for x in 0..w {
            latent[(y / pool) * lw + x / pool] += image.get(y, x) as f64;
        }
    }
    latent.iter_mut().for_each(|v| *v /= area);
    Ok(latent)
}

/// Nearest-neighbour upsample of an `lh x lw` latent, clamped to `[0, 1]`.
pub fn visual_decode(latent: &[f64], lh: usize, lw: usize, pool: usize) -> Result<ToyImage> {
    if latent.len() != lh * lw {
        return Err(Error::DimensionMismatch {
            expected: lh * lw,
            actual: latent.len(),
        });
    }
    let (h, w) = (lh * pool, lw * pool);
    let pixels = (0..h * w)
        .map(|i| {
            let (y, x) = (i / w, i % w);
            latent[(y / pool) * lw + x / pool].clamp(0.0, 1.0) as f32
        })
        .collect();
    ToyImage::new(h, w, pixels)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

/// Signed hashed bag of lowercase tokens, L2-normalized.
///
/// Each token adds `+1` (hash bit 63 clear) or `-1` at `hash % dim`. An
/// empty caption encodes to the zero vector.
pub fn text_encode(caption: &str, dim: usize) -> Vec<f64> {
    let mut emb = vec![0f64; dim];
    if dim == 0 {
        return emb;
    }
    for token in tokenize(caption) {
        let h = fnv1a64(token.to_lowercase().as_bytes());
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        emb[(h % dim as u64) as usize] += sign;
    }
    let norm = emb.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        emb.iter_mut().for_each(|v| *v /= norm);
    }
    emb
}
