//! Ancestral sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::codec::{text_encode, visual_decode};
use super::net::{time_embedding, DenoiserNet};
use super::schedule::DiffusionSchedule;
use super::train::from_diffusion_space;
use crate::image::ToyImage;
use crate::{Error, Result};

/// A trained denoiser together with the geometry needed to decode samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionModel {
    pub net: DenoiserNet,
    pub schedule: DiffusionSchedule,
    pub image_h: usize,
    pub image_w: usize,
    pub pool: usize,
}

impl DiffusionModel {
    pub fn latent_shape(&self) -> (usize, usize) {
        (self.image_h / self.pool, self.image_w / self.pool)
    }

    fn check(&self) -> Result<()> {
        let (lh, lw) = self.latent_shape();
        if self.pool == 0 || lh * self.pool != self.image_h || lw * self.pool != self.image_w {
            return Err(Error::contract("pool factor does not divide the image size"));
        }
        if lh * lw != self.net.config().latent_dim {
            return Err(Error::DimensionMismatch {
                expected: self.net.config().latent_dim,
                actual: lh * lw,
            });
        }
        Ok(())
    }
}

pub fn sample(model: &DiffusionModel, caption: &str, seed: u64) -> Result<ToyImage> {
    let mut images = sample_batch(model, &[caption.to_string()], &[seed])?;
    Ok(images.remove(0))
}

/// Runs one reverse chain per caption, each driven by its own seed.
///
/// `x_T ~ N(0, I)`, then for `t = T..1`:
/// `x_{t-1} = (x_t - beta_t / sqrt(1 - ab_t) * eps_hat) / sqrt(alpha_t) + sqrt(beta_t) z`
/// with `z = 0` on the last step.
pub fn sample_batch(model: &DiffusionModel, captions: &[String], seeds: &[u64]) -> Result<Vec<ToyImage>> {
    model.check()?;
    if captions.len() != seeds.len() {
        return Err(Error::DimensionMismatch {
            expected: captions.len(),
            actual: seeds.len(),
        });
    }
    let config = *model.net.config();
    let d = config.latent_dim;
    let n = captions.len();
    let mut rngs: Vec<ChaCha8Rng> = seeds.iter().map(|&s| ChaCha8Rng::seed_from_u64(s)).collect();
    let embeddings: Vec<Vec<f64>> = captions.iter().map(|c| text_encode(c, config.text_dim)).collect();
    let mut x: Vec<f64> = rngs
        .iter_mut()
        .flat_map(|rng| (0..d).map(|_| StandardNormal.sample(rng)).collect::<Vec<f64>>())
        .collect();

    let schedule = &model.schedule;
    for t in (1..=schedule.t_max()).rev() {
        let temb = time_embedding(t, config.time_dim);
        let mut input = Vec::with_capacity(n * config.input_dim());
        for i in 0..n {
            input.extend_from_slice(&x[i * d..(i + 1) * d]);
            input.extend_from_slice(&temb);
            input.extend_from_slice(&embeddings[i]);
        }
        let eps_hat = model.net.predict(input)?;
        let (alpha, beta, ab) = (schedule.alpha(t), schedule.beta(t), schedule.alpha_bar(t));
        let coef = beta / (1.0 - ab).sqrt();
        let inv_sqrt_alpha = 1.0 / alpha.sqrt();
        let sigma = beta.sqrt();
        for (i, rng) in rngs.iter_mut().enumerate() {
            for j in 0..d {
                let k = i * d + j;
                let mean = (x[k] - coef * eps_hat[k]) * inv_sqrt_alpha;
                x[k] = if t > 1 {
                    let z: f64 = StandardNormal.sample(rng);
                    mean + sigma * z
                } else {
                    mean
                };
            }
        }
    }

    let (lh, lw) = model.latent_shape();
    x.chunks_exact(d)
        .map(|chunk| visual_decode(&from_diffusion_space(chunk), lh, lw, model.pool))
        .collect()
}
