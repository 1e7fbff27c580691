//! End-to-end replication experiment: synthesize a duplicated dataset,
//! train one denoiser per strategy and seed, sample from the training
//! captions, and score replication and distribution distance.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::codec::{visual_encode, DEFAULT_POOL, DEFAULT_TEXT_DIM};
use super::fusion::{FusionConfig, FusionMode};
use super::net::{DenoiserNet, NetConfig, DEFAULT_HIDDEN, DEFAULT_TIME_DIM};
use super::sample::{sample_batch, DiffusionModel};
use super::schedule::{make_schedule, DEFAULT_BETA_1, DEFAULT_BETA_T, DEFAULT_T_MAX};
use super::strategy::{mock_paraphrases, MitigationStrategy, DEFAULT_GN_SIGMA, DEFAULT_MC_ALTERNATES};
use super::synth::{gen_fusion_dataset, gen_synth_dataset, CaptionStyle, SynthSpec};
use super::train::{train, TrainConfig, TrainRngs, TrainSample};
use crate::image::ToyImage;
use crate::replication::{fit_gaussian, frechet_distance, replication_from_features, toy_features, FeatureMatrix};
use crate::{Error, Result};

fn default_fusion_weights() -> Vec<FusionConfig> {
    vec![FusionConfig::new(FusionMode::Embedding, 0.1, 0.5)]
}
fn default_t_max() -> usize {
    DEFAULT_T_MAX
}
fn default_steps() -> usize {
    TrainConfig::default().steps
}
fn default_lr() -> f64 {
    TrainConfig::default().lr
}
fn default_batch() -> usize {
    TrainConfig::default().batch
}
fn default_hidden() -> usize {
    DEFAULT_HIDDEN
}
fn default_fusion_size() -> usize {
    64
}
fn default_gn_sigma() -> f64 {
    DEFAULT_GN_SIGMA
}
fn default_mc_alternates() -> usize {
    DEFAULT_MC_ALTERNATES
}
fn default_pool() -> usize {
    DEFAULT_POOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: SynthSpec,
    /// Strategy names; each `dual_fusion` entry expands to one run per
    /// element of `fusion_weights`.
    pub strategies: Vec<String>,
    #[serde(default = "default_fusion_weights")]
    pub fusion_weights: Vec<FusionConfig>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_t_max")]
    pub t_max: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_pool")]
    pub pool: usize,
    #[serde(default = "default_fusion_size")]
    pub fusion_size: usize,
    #[serde(default = "default_gn_sigma")]
    pub gn_sigma: f64,
    #[serde(default = "default_mc_alternates")]
    pub mc_alternates: usize,
    /// Generated images per run; defaults to `dataset.n_base`, cycling
    /// through the base captions.
    #[serde(default)]
    pub n_gen: Option<usize>,
    /// Held-out images for the Fréchet distance; defaults to `dataset.n_base`.
    #[serde(default)]
    pub heldout_size: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Fills in the optional sizes so the echoed config is fully explicit.
    pub fn resolved(mut self) -> Self {
        self.n_gen.get_or_insert(self.dataset.n_base);
        self.heldout_size.get_or_insert(self.dataset.n_base);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset
            .validate()
            .map_err(|e| Error::config("dataset", e.to_string()))?;
        if self.strategies.is_empty() {
            return Err(Error::config("strategies", "at least one strategy is required"));
        }
        self.expand_strategies()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        if self.t_max == 0 {
            return Err(Error::config("t_max", "must be at least 1"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch", "must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("lr", "must be positive"));
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden", "must be at least 1"));
        }
        if self.pool == 0 || !self.dataset.height.is_multiple_of(self.pool) || !self.dataset.width.is_multiple_of(self.pool) {
            return Err(Error::config("pool", "must divide the image height and width"));
        }
        if !(self.gn_sigma >= 0.0 && self.gn_sigma.is_finite()) {
            return Err(Error::config("gn_sigma", "must be non-negative"));
        }
        if self.n_gen == Some(0) {
            return Err(Error::config("n_gen", "must be at least 1"));
        }
        if matches!(self.heldout_size, Some(0 | 1)) {
            return Err(Error::config("heldout_size", "must be at least 2"));
        }
        Ok(())
    }

    pub fn expand_strategies(&self) -> Result<Vec<MitigationStrategy>> {
        let mut out = Vec::new();
        for (i, name) in self.strategies.iter().enumerate() {
            let field = format!("strategies[{i}]");
            let parsed = MitigationStrategy::parse(name, default_fusion_weights()[0], self.gn_sigma)
                .map_err(|_| Error::config(&field, format!("unknown strategy {name:?}")))?;
            if parsed.needs_fusion_set() {
                if self.fusion_weights.is_empty() {
                    return Err(Error::config("fusion_weights", "dual_fusion needs at least one entry"));
                }
                if self.fusion_size == 0 {
                    return Err(Error::config("fusion_size", "dual_fusion needs a fusion set"));
                }
                for (j, w) in self.fusion_weights.iter().enumerate() {
                    if !(w.w_lat.is_finite() && w.w_emb.is_finite()) {
                        return Err(Error::config(format!("fusion_weights[{j}]"), "weights must be finite"));
                    }
                    out.push(MitigationStrategy::DualFusion(w.clamped()));
                }
            } else {
                out.push(parsed);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub label: String,
    pub strategy: MitigationStrategy,
    pub caption_style: CaptionStyle,
    pub seed: u64,
    /// Replication score of the generated images against the distinct
    /// training images.
    pub r: f64,
    /// Fréchet distance between generated and held-out feature fits.
    pub fd: f64,
    pub n_gen: usize,
    pub n_train: usize,
    /// Mean loss over the last 100 steps.
    pub final_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub results: Vec<StrategyResult>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Record wall time per run. Off by default so reports stay
    /// byte-identical across re-runs.
    pub timings: bool,
    pub keep_samples: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    pub label: String,
    pub seed: u64,
    pub images: Vec<ToyImage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub samples: Vec<SampleGrid>,
}

/// SplitMix64 finalizer, used to derive independent stream seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_DATA: u64 = 1;
const STREAM_FUSION: u64 = 2;
const STREAM_HELDOUT: u64 = 3;
const STREAM_INIT: u64 = 4;
const STREAM_NOISE: u64 = 5;
const STREAM_AUG: u64 = 6;
const STREAM_GEN: u64 = 7;

fn features_of(images: &[ToyImage]) -> Result<FeatureMatrix> {
    let rows = images.iter().map(toy_features).collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_rows(&rows)
}

/// Everything a single seed's runs share: data, fusion set, held-out fit
/// and the reference features.
struct SeedContext {
    train: Vec<TrainSample>,
    fusion: Vec<TrainSample>,
    base_captions: Vec<String>,
    base_features: FeatureMatrix,
    heldout_features: FeatureMatrix,
}

fn seed_context(config: &ExperimentConfig, seed: u64, strategies: &[MitigationStrategy]) -> Result<SeedContext> {
    let spec = SynthSpec {
        seed: derive_seed(seed ^ config.dataset.seed, STREAM_DATA),
        ..config.dataset
    };
    let data = gen_synth_dataset(&spec)?;
    let alternates = if strategies.contains(&MitigationStrategy::MultipleCaptions) {
        config.mc_alternates
    } else {
        0
    };
    let train = encode_samples(
        data.samples.iter().map(|s| (&s.image, s.caption.as_str())),
        config.pool,
        alternates,
    )?;
    let fusion = if strategies.iter().any(MitigationStrategy::needs_fusion_set) {
        default_fusion_set(config.fusion_size, &config.model_spec(), seed)?
    } else {
        Vec::new()
    };
    let heldout_spec = SynthSpec {
        n_base: config.heldout_size.unwrap_or(config.dataset.n_base).max(2),
        dup_factor: 1,
        dup_fraction: 0.0,
        seed: derive_seed(seed, STREAM_HELDOUT),
        ..config.dataset
    };
    let heldout = gen_synth_dataset(&heldout_spec)?;
    Ok(SeedContext {
        train,
        fusion,
        base_features: features_of(&data.base_images)?,
        heldout_features: features_of(&heldout.base_images)?,
        base_captions: data.base_captions,
    })
}

/// Geometry and capacity of a toy model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub height: usize,
    pub width: usize,
    pub pool: usize,
    pub hidden: usize,
    pub t_max: usize,
}

impl ModelSpec {
    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            latent_dim: (self.height / self.pool) * (self.width / self.pool),
            time_dim: DEFAULT_TIME_DIM,
            text_dim: DEFAULT_TEXT_DIM,
            hidden: self.hidden,
        }
    }
}

impl ExperimentConfig {
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            height: self.dataset.height,
            width: self.dataset.width,
            pool: self.pool,
            hidden: self.hidden,
            t_max: self.t_max,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            steps: self.steps,
            batch: self.batch,
            lr: self.lr,
        }
    }
}

/// Trains one model and returns it with its loss trace. Initialization and
/// both training rng streams are derived from `seed`.
pub fn train_model(
    spec: &ModelSpec,
    train_config: &TrainConfig,
    seed: u64,
    train_set: &[TrainSample],
    fusion: &[TrainSample],
    strategy: &MitigationStrategy,
) -> Result<(DiffusionModel, Vec<f64>)> {
    let schedule = make_schedule(spec.t_max, DEFAULT_BETA_1, DEFAULT_BETA_T)?;
    let mut net = DenoiserNet::init(
        spec.net_config(),
        &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_INIT)),
    );
    let mut rngs = TrainRngs::from_seeds(derive_seed(seed, STREAM_NOISE), derive_seed(seed, STREAM_AUG));
    let losses = train(&mut net, &schedule, train_set, fusion, strategy, train_config, &mut rngs)?;
    Ok((
        DiffusionModel {
            net,
            schedule,
            image_h: spec.height,
            image_w: spec.width,
            pool: spec.pool,
        },
        losses,
    ))
}

/// Encodes `(image, caption)` pairs, attaching mock paraphrases when
/// `alternates > 0`.
pub fn encode_samples<'a>(
    pairs: impl IntoIterator<Item = (&'a ToyImage, &'a str)>,
    pool: usize,
    alternates: usize,
) -> Result<Vec<TrainSample>> {
    pairs
        .into_iter()
        .map(|(image, caption)| {
            Ok(TrainSample {
                latent: visual_encode(image, pool)?,
                caption: caption.to_string(),
                alternates: if alternates > 0 {
                    mock_paraphrases(caption, alternates)
                } else {
                    Vec::new()
                },
            })
        })
        .collect()
}

/// The fusion set used when none is supplied.
pub fn default_fusion_set(size: usize, spec: &ModelSpec, seed: u64) -> Result<Vec<TrainSample>> {
    let pairs = gen_fusion_dataset(size, spec.height, spec.width, derive_seed(seed, STREAM_FUSION))?;
    encode_samples(pairs.iter().map(|(i, c)| (i, c.as_str())), spec.pool, 0)
}

/// Mean loss over the last 100 steps.
pub fn tail_mean(losses: &[f64]) -> Option<f64> {
    let tail = &losses[losses.len().saturating_sub(100)..];
    (!tail.is_empty()).then(|| tail.iter().sum::<f64>() / tail.len() as f64)
}

pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<ExperimentRun> {
    config.validate()?;
    let config = config.clone().resolved();
    let strategies = config.expand_strategies()?;
    let n_gen = config.n_gen.unwrap_or(config.dataset.n_base);
    let mut results = Vec::new();
    let mut samples = Vec::new();
    for &seed in &config.seeds {
        let ctx = seed_context(&config, seed, &strategies)?;
        let gen_captions: Vec<String> = (0..n_gen)
            .map(|i| ctx.base_captions[i % ctx.base_captions.len()].clone())
            .collect();
        let gen_base = derive_seed(seed, STREAM_GEN);
        let gen_seeds: Vec<u64> = (0..n_gen as u64).map(|i| derive_seed(gen_base, i)).collect();
        for strategy in &strategies {
            let started = Instant::now();
            let (model, losses) = train_model(
                &config.model_spec(),
                &config.train_config(),
                seed,
                &ctx.train,
                &ctx.fusion,
                strategy,
            )?;
            let images = sample_batch(&model, &gen_captions, &gen_seeds)?;
            let gen_features = features_of(&images)?;
            let rep = replication_from_features(&ctx.base_features, &gen_features)?;
            let fd = frechet_distance(&fit_gaussian(&gen_features)?, &fit_gaussian(&ctx.heldout_features)?)?;
            results.push(StrategyResult {
                label: strategy.label(),
                strategy: *strategy,
                caption_style: config.dataset.caption_style,
                seed,
                r: rep.r,
                fd,
                n_gen,
                n_train: ctx.train.len(),
                final_loss: tail_mean(&losses),
                wall_time_s: options.timings.then(|| started.elapsed().as_secs_f64()),
            });
            if options.keep_samples {
                samples.push(SampleGrid {
                    label: strategy.label(),
                    seed,
                    images,
                });
            }
        }
    }
    Ok(ExperimentRun {
        report: ExperimentReport { config, results },
        samples,
    })
}
