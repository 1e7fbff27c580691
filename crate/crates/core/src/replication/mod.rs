//! Replication score from copy-detection features.
//!
//! For every generated image the similarity `s(g)` is its best cosine match
//! over the training set. R is the 0.95 nearest-rank quantile of those
//! scores: 95% of generations have a best match strictly below R (up to one
//! rank of discreteness). Higher R means more replication.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

mod features;
mod frechet;

pub use features::{
    features_from_bytes, features_to_bytes, grid_features, load_features, save_features,
    toy_features, TOY_FEATURE_DIM,
};
pub use frechet::{fit_gaussian, frechet_distance, GaussianFit};

/// Row norm tolerance for stored features.
pub const NORM_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_QUANTILE: f64 = 0.95;

/// `n x d` matrix of L2-normalized feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    rows: Vec<f32>,
}

fn row_norm(row: &[f32]) -> f64 {
    row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
}

impl FeatureMatrix {
    /// Wraps already-normalized rows; any row norm off by more than
    /// [`NORM_TOLERANCE`] is an error.
    pub fn new(n: usize, d: usize, rows: Vec<f32>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::contract("feature matrix needs n >= 1 and d >= 1"));
        }
        if rows.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                actual: rows.len(),
            });
        }
        for (i, row) in rows.chunks_exact(d).enumerate() {
            let norm = row_norm(row);
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::contract(format!("row {i} has norm {norm}, expected 1")));
            }
        }
        Ok(FeatureMatrix { n, d, rows })
    }

    /// Normalizes each row; zero rows are an error.
    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            let norm = row_norm(row);
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::contract(format!("row {i} cannot be normalized")));
            }
            data.extend(row.iter().map(|&v| (v as f64 / norm) as f32));
        }
        FeatureMatrix::new(rows.len(), d, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.rows.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.rows
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDistribution {
    s_values: Vec<f64>,
}

impl SimilarityDistribution {
    /// Sorts the values ascending.
    pub fn new(mut s_values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = s_values.iter().find(|v| !v.is_finite()) {
            return Err(Error::contract(format!("non-finite similarity {bad}")));
        }
        s_values.sort_by(f64::total_cmp);
        Ok(SimilarityDistribution { s_values })
    }

    pub fn values(&self) -> &[f64] {
        &self.s_values
    }

    pub fn len(&self) -> usize {
        self.s_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub r: f64,
    pub quantile: f64,
    pub n_gen: usize,
    pub n_train: usize,
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// Best training match for every generated row, sorted ascending.
pub fn similarity_scores(
    train: &FeatureMatrix,
    generated: &FeatureMatrix,
) -> Result<SimilarityDistribution> {
    if train.d != generated.d {
        return Err(Error::DimensionMismatch {
            expected: train.d,
            actual: generated.d,
        });
    }
    let scores = generated
        .rows()
        .map(|g| {
            train
                .rows()
                .map(|x| dot(x, g).clamp(-1.0, 1.0))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    SimilarityDistribution::new(scores)
}

/// 1-based nearest rank `ceil(q * n)`, robust to `q * n` landing a hair
/// above an integer in floating point.
pub fn nearest_rank(q: f64, n: usize) -> usize {
    let x = q * n as f64;
    let rank = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    (rank as usize).clamp(1, n)
}

pub fn replication_score(s: &SimilarityDistribution, quantile: f64) -> Result<ReplicationResult> {
    if s.is_empty() {
        return Err(Error::contract("empty similarity distribution"));
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::contract(format!("quantile {quantile} outside (0, 1]")));
    }
    let rank = nearest_rank(quantile, s.len());
    Ok(ReplicationResult {
        r: s.values()[rank - 1],
        quantile,
        n_gen: s.len(),
        n_train: 0,
    })
}

/// Similarity distribution and R in one call, with `n_train` filled in.
pub fn replication_from_features(
    train: &FeatureMatrix,
    generated: &FeatureMatrix,
) -> Result<ReplicationResult> {
    let s = similarity_scores(train, generated)?;
    let mut result = replication_score(&s, DEFAULT_QUANTILE)?;
    result.n_train = train.n;
    Ok(result)
}
