use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_T_MAX: usize = 100;
pub const DEFAULT_BETA_1: f64 = 1e-4;
pub const DEFAULT_BETA_T: f64 = 0.02;

/// Linear-beta DDPM constants, indexed by step `t` in `1..=t_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSchedule {
    t_max: usize,
    betas: Vec<f64>,
    alphas: Vec<f64>,
    alpha_bars: Vec<f64>,
}

impl DiffusionSchedule {
    pub fn t_max(&self) -> usize {
        self.t_max
    }

    fn check(&self, t: usize) -> Result<usize> {
        if t == 0 || t > self.t_max {
            return Err(Error::contract(format!(
                "time step {t} outside 1..={}",
                self.t_max
            )));
        }
        Ok(t - 1)
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alphas[t - 1]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bars[t - 1]
    }
}

impl Default for DiffusionSchedule {
    fn default() -> Self {
        make_schedule(DEFAULT_T_MAX, DEFAULT_BETA_1, DEFAULT_BETA_T).expect("default schedule")
    }
}

pub fn make_schedule(t_max: usize, beta_1: f64, beta_t: f64) -> Result<DiffusionSchedule> {
    if t_max == 0 {
        return Err(Error::contract("t_max must be at least 1"));
    }
    if !(beta_1 > 0.0 && beta_1 <= beta_t && beta_t < 1.0) {
        return Err(Error::contract(format!(
            "need 0 < beta_1 <= beta_T < 1, got beta_1 = {beta_1}, beta_T = {beta_t}"
        )));
    }
    let betas: Vec<f64> = (0..t_max)
        .map(|i| {
            if t_max == 1 {
                beta_1
            } else {
                beta_1 + (beta_t - beta_1) * i as f64 / (t_max - 1) as f64
            }
        })
        .collect();
    let alphas: Vec<f64> = betas.iter().map(|b| 1.0 - b).collect();
    let alpha_bars = alphas
        .iter()
        .scan(1.0, |acc, a| {
            *acc *= a;
            Some(*acc)
        })
        .collect();
    Ok(DiffusionSchedule {
        t_max,
        betas,
        alphas,
        alpha_bars,
    })
}

/// Closed-form forward marginal `sqrt(ab_t) x0 + sqrt(1 - ab_t) eps`.
pub fn forward_sample(
    x0: &[f64],
    t: usize,
    eps: &[f64],
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    let i = schedule.check(t)?;
    if eps.len() != x0.len() {
        return Err(Error::DimensionMismatch {
            expected: x0.len(),
            actual: eps.len(),
        });
    }
    let ab = schedule.alpha_bars[i];
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    Ok(x0.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}
