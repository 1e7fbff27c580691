//! One optimizer step of the noise-prediction objective, with the
//! mitigation strategy applied while the batch is assembled.
//!
//! Randomness comes from two independent streams: `noise` draws batch
//! indices, time steps and the forward-process noise; `aug` draws everything
//! a strategy needs (fusion partners, replacement words, embedding noise).
//! Strategies therefore never perturb the latent pathway's random draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::codec::text_encode;
use super::fusion::{fuse_embeddings, fuse_latents, token_fuse, FusionMode};
use super::net::{mse_loss_grad, time_embedding, Adam, DenoiserNet, NetConfig};
use super::schedule::DiffusionSchedule;
use super::strategy::{noisy_embedding, pick_alternate, random_caption, repeat_word, MitigationStrategy};
use crate::{Error, Result};

/// Encoded training pair. `latent` is the visual encoding in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSample {
    pub latent: Vec<f64>,
    pub caption: String,
    #[serde(default)]
    pub alternates: Vec<String>,
}

pub struct TrainRngs {
    pub noise: ChaCha8Rng,
    pub aug: ChaCha8Rng,
}

impl TrainRngs {
    pub fn from_seeds(noise: u64, aug: u64) -> Self {
        TrainRngs {
            noise: ChaCha8Rng::seed_from_u64(noise),
            aug: ChaCha8Rng::seed_from_u64(aug),
        }
    }
}

/// Latents enter the diffusion process scaled from `[0, 1]` to `[-1, 1]`.
pub fn to_diffusion_space(latent: &[f64]) -> Vec<f64> {
    latent.iter().map(|v| 2.0 * v - 1.0).collect()
}

pub fn from_diffusion_space(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| (v + 1.0) / 2.0).collect()
}

/// Denoiser input rows for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchInputs {
    pub t: Vec<usize>,
    pub eps: Vec<f64>,
    /// Clean latents after fusion, in `[0, 1]` latent space.
    pub latents: Vec<f64>,
    pub x_t: Vec<f64>,
    pub emb: Vec<f64>,
}

impl BatchInputs {
    pub fn input_rows(&self, config: &NetConfig) -> Vec<f64> {
        let (d, k) = (config.latent_dim, config.text_dim);
        let mut rows = Vec::with_capacity(self.t.len() * config.input_dim());
        for (i, &t) in self.t.iter().enumerate() {
            rows.extend_from_slice(&self.x_t[i * d..(i + 1) * d]);
            rows.extend(time_embedding(t, config.time_dim));
            rows.extend_from_slice(&self.emb[i * k..(i + 1) * k]);
        }
        rows
    }
}

pub fn prepare_batch(
    config: &NetConfig,
    schedule: &DiffusionSchedule,
    batch: &[&TrainSample],
    strategy: &MitigationStrategy,
    fusion: &[TrainSample],
    rngs: &mut TrainRngs,
) -> Result<BatchInputs> {
    if batch.is_empty() {
        return Err(Error::contract("empty training batch"));
    }
    if strategy.needs_fusion_set() && fusion.is_empty() {
        return Err(Error::contract(format!(
            "strategy {} needs a non-empty fusion dataset",
            strategy.label()
        )));
    }
    let d = config.latent_dim;
    let mut out = BatchInputs {
        t: Vec::with_capacity(batch.len()),
        eps: Vec::with_capacity(batch.len() * d),
        latents: Vec::with_capacity(batch.len() * d),
        x_t: Vec::with_capacity(batch.len() * d),
        emb: Vec::with_capacity(batch.len() * config.text_dim),
    };
    for sample in batch {
        if sample.latent.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: sample.latent.len(),
            });
        }
        let t = rngs.noise.random_range(1..=schedule.t_max());
        let eps: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rngs.noise)).collect();

        let text = |caption: &str| text_encode(caption, config.text_dim);
        let (latent, emb) = match strategy {
            MitigationStrategy::None => (sample.latent.clone(), text(&sample.caption)),
            MitigationStrategy::DualFusion(f) => {
                let partner = &fusion[rngs.aug.random_range(0..fusion.len())];
                let latent = fuse_latents(&sample.latent, &partner.latent, f.w_lat)?;
                let emb = match f.mode {
                    FusionMode::Token => text(&token_fuse(&sample.caption, &partner.caption)),
                    FusionMode::Embedding => {
                        fuse_embeddings(&text(&sample.caption), &text(&partner.caption), f.w_emb)?
                    }
                };
                (latent, emb)
            }
            MitigationStrategy::GaussianNoise { sigma } => (
                sample.latent.clone(),
                noisy_embedding(&text(&sample.caption), *sigma, &mut rngs.aug),
            ),
            MitigationStrategy::RandomCaption => (
                sample.latent.clone(),
                text(&random_caption(&sample.caption, &mut rngs.aug)),
            ),
            MitigationStrategy::CaptionWordRepeat => (
                sample.latent.clone(),
                text(&repeat_word(&sample.caption, &mut rngs.aug)),
            ),
            MitigationStrategy::MultipleCaptions => (
                sample.latent.clone(),
                text(pick_alternate(&sample.caption, &sample.alternates, &mut rngs.aug)),
            ),
        };

        let x0 = to_diffusion_space(&latent);
        let x_t = super::schedule::forward_sample(&x0, t, &eps, schedule)?;
        out.t.push(t);
        out.eps.extend_from_slice(&eps);
        out.latents.extend_from_slice(&latent);
        out.x_t.extend_from_slice(&x_t);
        out.emb.extend_from_slice(&emb);
    }
    Ok(out)
}

/// Builds the batch, takes one Adam step on the noise-prediction loss and
/// returns the pre-update loss.
pub fn train_step(
    net: &mut DenoiserNet,
    adam: &mut Adam,
    schedule: &DiffusionSchedule,
    batch: &[&TrainSample],
    strategy: &MitigationStrategy,
    fusion: &[TrainSample],
    rngs: &mut TrainRngs,
) -> Result<f64> {
    let config = *net.config();
    let inputs = prepare_batch(&config, schedule, batch, strategy, fusion, rngs)?;
    let (loss, grad) = loss_and_grad(net, &inputs)?;
    adam.update(net.params_mut(), &grad);
    Ok(loss)
}

/// Noise-prediction loss on a prepared batch and its exact gradient with
/// respect to every parameter.
pub fn loss_and_grad(net: &DenoiserNet, inputs: &BatchInputs) -> Result<(f64, Vec<f64>)> {
    let cache = net.forward(inputs.input_rows(net.config()))?;
    let (loss, d_out) = mse_loss_grad(&inputs.eps, &cache.output)?;
    Ok((loss, net.backward(&cache, &d_out)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 20_000,
            batch: 32,
            lr: 1e-3,
        }
    }
}

/// Runs `config.steps` steps, sampling batches uniformly with replacement.
/// Returns the per-step losses.
pub fn train(
    net: &mut DenoiserNet,
    schedule: &DiffusionSchedule,
    data: &[TrainSample],
    fusion: &[TrainSample],
    strategy: &MitigationStrategy,
    config: &TrainConfig,
    rngs: &mut TrainRngs,
) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::contract("empty training set"));
    }
    if config.batch == 0 {
        return Err(Error::contract("batch size must be positive"));
    }
    let mut adam = Adam::new(net.params().len(), config.lr);
    let mut losses = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let batch: Vec<&TrainSample> = (0..config.batch)
            .map(|_| &data[rngs.noise.random_range(0..data.len())])
            .collect();
        losses.push(train_step(net, &mut adam, schedule, &batch, strategy, fusion, rngs)?);
    }
    Ok(losses)
}
