//! Toy copy-detection descriptor and the `RLFT` feature file format.
//!
//! The descriptor concatenates an 8x8 block-mean thumbnail (64 values) with
//! an 8-bin gradient-orientation histogram (8 values), then mean-centers and
//! L2-normalizes the 72-vector. Histogram bins hold gradient magnitude
//! averaged over interior pixels so both halves live on a comparable scale.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use super::{FeatureMatrix, NORM_TOLERANCE};
use crate::image::ToyImage;
use crate::tensor::LeReader;
use crate::{Error, Result};

pub const TOY_FEATURE_DIM: usize = 72;
const GRID: usize = 8;
const BINS: usize = 8;
const MAGIC: &[u8; 4] = b"RLFT";
const VERSION: u32 = 1;
/// Rows within this distance of unit norm are re-normalized on load.
const RENORMALIZE_TOLERANCE: f64 = 1e-3;

pub fn toy_features(image: &ToyImage) -> Result<Vec<f32>> {
    grid_features(image.pixels(), image.height(), image.width())
}

/// Descriptor of an arbitrary real-valued `h x w` grid.
///
/// A grid whose centered descriptor vanishes (e.g. all zeros) maps to the
/// first basis vector so every image has a unit-norm descriptor.
pub fn grid_features(pixels: &[f32], h: usize, w: usize) -> Result<Vec<f32>> {
    if h < GRID || w < GRID {
        return Err(Error::contract(format!(
            "image is {h}x{w}, descriptor needs at least {GRID}x{GRID}"
        )));
    }
    if pixels.len() != h * w {
        return Err(Error::DimensionMismatch {
            expected: h * w,
            actual: pixels.len(),
        });
    }
    let px = |y: usize, x: usize| pixels[y * w + x] as f64;
    let mut feat = [0f64; TOY_FEATURE_DIM];

    for gy in 0..GRID {
        let (y0, y1) = (gy * h / GRID, (gy + 1) * h / GRID);
        for gx in 0..GRID {
            let (x0, x1) = (gx * w / GRID, (gx + 1) * w / GRID);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += px(y, x);
                }
            }
            feat[gy * GRID + gx] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }

    let interior = ((h - 2) * (w - 2)) as f64;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let dx = (px(y, x + 1) - px(y, x - 1)) / 2.0;
            let dy = (px(y + 1, x) - px(y - 1, x)) / 2.0;
            let mag = dx.hypot(dy);
            if mag == 0.0 {
                continue;
            }
            let angle = dy.atan2(dx);
            let bin = (((angle + PI) / (2.0 * PI)) * BINS as f64).floor() as usize;
            feat[GRID * GRID + bin.min(BINS - 1)] += mag / interior;
        }
    }

    let mean = feat.iter().sum::<f64>() / TOY_FEATURE_DIM as f64;
    feat.iter_mut().for_each(|v| *v -= mean);
    let norm = feat.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        let mut unit = vec![0f32; TOY_FEATURE_DIM];
        unit[0] = 1.0;
        return Ok(unit);
    }
    Ok(feat.iter().map(|v| (v / norm) as f32).collect())
}

pub fn features_to_bytes(m: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.n() as u32).to_le_bytes());
    out.extend_from_slice(&(m.d() as u32).to_le_bytes());
    for &v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn features_from_bytes(bytes: &[u8]) -> Result<FeatureMatrix> {
    let mut reader = LeReader::new(bytes);
    if reader.take(4)? != MAGIC {
        return Err(Error::format("bad magic, expected RLFT"));
    }
    let version = reader.u32()?;
    if version != VERSION {
        return Err(Error::format(format!("unsupported feature version {version}")));
    }
    let n = reader.u32()? as usize;
    let d = reader.u32()? as usize;
    let count = n
        .checked_mul(d)
        .ok_or_else(|| Error::format("feature payload size overflows"))?;
    let mut rows = reader.f32s(count)?;
    reader.finish()?;
    if n == 0 || d == 0 {
        return Err(Error::format("feature file has no rows"));
    }
    for (i, row) in rows.chunks_exact_mut(d).enumerate() {
        let norm = super::row_norm(row);
        let off = (norm - 1.0).abs();
        if off <= NORM_TOLERANCE {
            continue;
        }
        if off > RENORMALIZE_TOLERANCE {
            return Err(Error::format(format!(
                "row {i} has norm {norm}, beyond the re-normalization tolerance"
            )));
        }
        row.iter_mut().for_each(|v| *v = (*v as f64 / norm) as f32);
    }
    FeatureMatrix::new(n, d, rows)
}

pub fn save_features(m: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, features_to_bytes(m))?;
    Ok(())
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    features_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
    }

    #[test]
    fn self_similarity_is_one() {
        let pixels: Vec<f32> = (0..256).map(|i| ((i * 37) % 101) as f32 / 100.0).collect();
        let img = ToyImage::new(16, 16, pixels).unwrap();
        let f = toy_features(&img).unwrap();
        assert_eq!(f.len(), TOY_FEATURE_DIM);
        assert!((cosine(&f, &f) - 1.0).abs() < 1e-6);
        assert_eq!(f, toy_features(&img).unwrap());
    }

    #[test]
    fn negated_constant_is_anticorrelated() {
        // 8x8 constants: block part is c everywhere, histogram empty. The
        // centered descriptor of -c is the exact negation of that of c.
        let pos = grid_features(&[0.7; 64], 8, 8).unwrap();
        let neg = grid_features(&[-0.7; 64], 8, 8).unwrap();
        assert!(cosine(&pos, &neg) < 0.0);
        assert!((cosine(&pos, &neg) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn translated_one_hot_is_not_a_copy() {
        let mut a = vec![0f32; 256];
        a[2 * 16 + 2] = 1.0;
        let mut b = vec![0f32; 256];
        b[13 * 16 + 13] = 1.0;
        let fa = toy_features(&ToyImage::new(16, 16, a).unwrap()).unwrap();
        let fb = toy_features(&ToyImage::new(16, 16, b).unwrap()).unwrap();
        assert!(cosine(&fa, &fb) < 1.0 - 1e-3);
    }

    #[test]
    fn too_small_image() {
        assert!(toy_features(&ToyImage::filled(7, 16, 0.5).unwrap()).is_err());
    }

    #[test]
    fn blank_image_maps_to_basis_vector() {
        let f = toy_features(&ToyImage::filled(8, 8, 0.0).unwrap()).unwrap();
        assert_eq!(f[0], 1.0);
        assert_eq!(f.iter().filter(|v| **v != 0.0).count(), 1);
    }

    fn matrix() -> FeatureMatrix {
        FeatureMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0, 4.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![-1.0, 0.5, 0.25, 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.rlft");
        let m = matrix();
        save_features(&m, &path).unwrap();
        let back = load_features(&path).unwrap();
        assert_eq!(features_to_bytes(&back), fs::read(&path).unwrap());
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_file_reports_lengths() {
        let bytes = features_to_bytes(&matrix());
        let err = features_from_bytes(&bytes[..bytes.len() - 3]).unwrap_err().to_string();
        assert!(err.contains(&format!("expected {}", bytes.len())), "{err}");
        assert!(err.contains(&format!("has {}", bytes.len() - 3)), "{err}");
    }

    #[test]
    fn zero_norm_row_is_rejected() {
        let mut bytes = features_to_bytes(&matrix());
        for b in &mut bytes[16..32] {
            *b = 0;
        }
        assert!(features_from_bytes(&bytes).is_err());
    }

    #[test]
    fn slightly_off_rows_are_renormalized() {
        let mut bytes = features_to_bytes(&matrix());
        // second row is e3; scale it to norm 1.0005
        bytes[16 + 16 + 8..16 + 16 + 12].copy_from_slice(&1.0005f32.to_le_bytes());
        let m = features_from_bytes(&bytes).unwrap();
        assert_eq!(m.row(1)[2], 1.0);
        bytes[16 + 16 + 8..16 + 16 + 12].copy_from_slice(&1.01f32.to_le_bytes());
        assert!(features_from_bytes(&bytes).is_err());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = features_to_bytes(&matrix());
        bytes[3] = b'X';
        assert!(features_from_bytes(&bytes).is_err());
    }
}
