//! Fréchet distance between Gaussian fits of two feature sets.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::FeatureMatrix;
use crate::{Error, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-9;
const PSD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianFit {
    /// `cov` is row-major `d x d`; it must be symmetric and PSD within
    /// tolerance.
    pub fn new(mean: Vec<f64>, cov: Vec<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::contract("empty Gaussian"));
        }
        if cov.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                actual: cov.len(),
            });
        }
        let fit = GaussianFit {
            mean: DVector::from_vec(mean),
            cov: DMatrix::from_row_slice(d, d, &cov),
        };
        fit.validate()?;
        Ok(fit)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        for i in 0..d {
            for j in 0..i {
                if (self.cov[(i, j)] - self.cov[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                    return Err(Error::contract(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(self.cov.clone());
        let scale = eig.eigenvalues.amax().max(1.0);
        if let Some(min) = eig.eigenvalues.iter().copied().reduce(f64::min) {
            if min < -PSD_TOLERANCE * scale {
                return Err(Error::contract(format!(
                    "covariance not positive semidefinite (eigenvalue {min})"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    /// Covariance entry `(i, j)`.
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[(i, j)]
    }
}

/// Sample mean and unbiased (n - 1) covariance.
pub fn fit_gaussian(features: &FeatureMatrix) -> Result<GaussianFit> {
    let n = features.n();
    if n < 2 {
        return Err(Error::contract("Gaussian fit needs at least two rows"));
    }
    let d = features.d();
    let data = DMatrix::from_row_iterator(n, d, features.as_slice().iter().map(|&v| v as f64));
    let mean = data.row_mean().transpose();
    let mut centered = data;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / (n as f64 - 1.0);
    // Exact symmetry regardless of summation order.
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let fit = GaussianFit { mean, cov };
    fit.validate()?;
    Ok(fit)
}

fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))`.
///
/// The trace of the cross term is taken as the sum of square roots of the
/// eigenvalues of `S_a^(1/2) S_b S_a^(1/2)`, which shares its spectrum with
/// `S_a S_b` and is symmetric.
pub fn frechet_distance(a: &GaussianFit, b: &GaussianFit) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let diff = &a.mean - &b.mean;
    let sqrt_a = psd_sqrt(&a.cov);
    let mut inner = &sqrt_a * &b.cov * &sqrt_a;
    inner = (&inner + inner.transpose()) * 0.5;
    let cross: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let fd = diff.norm_squared() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
    Ok(fd.max(0.0))
}
