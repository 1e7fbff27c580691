//! Toy conditional DDPM with dual fusion enhancement and the baseline
//! mitigation strategies.

pub mod codec;
pub mod experiment;
pub mod fusion;
pub mod net;
pub mod sample;
pub mod schedule;
pub mod strategy;
pub mod synth;
pub mod train;

pub use codec::{text_encode, visual_decode, visual_encode};
pub use experiment::{run_experiment, train_model, ExperimentConfig, ExperimentReport, ModelSpec, RunOptions, StrategyResult};
pub use fusion::{fuse_embeddings, fuse_latents, token_fuse, FusionConfig, FusionMode};
pub use net::{Adam, DenoiserNet, NetConfig};
pub use sample::{sample, sample_batch, DiffusionModel};
pub use schedule::{forward_sample, make_schedule, DiffusionSchedule};
pub use strategy::MitigationStrategy;
pub use synth::{gen_fusion_dataset, gen_synth_dataset, CaptionStyle, SynthSpec};
pub use train::{train, train_step, TrainConfig, TrainRngs, TrainSample};

pub use crate::image::ToyImage;
