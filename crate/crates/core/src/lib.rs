//! Caption generality scoring, training-data replication measurement and
//! replication mitigation for a desk-scale conditional diffusion model.
//!
//! The crate is organised bottom-up:
//!
//! * [`lexicon`] loads hyponym counts and synset depths (WordNet import or
//!   compact TSV).
//! * [`annotate`] is a rule-based tokenizer/tagger producing the counts the
//!   generality metrics need.
//! * [`genmetrics`] computes SI, BT, TM, DA and the generality score GS.
//! * [`generalize`] rewrites captions through a chat-completion endpoint (or
//!   an offline mock) with a persistent response cache.
//! * [`replication`] computes the replication score R from copy-detection
//!   features and a feature-space Fréchet distance.
//! * [`diffusion`] is a small conditional DDPM with hand-written backprop,
//!   dual fusion training, baseline mitigations and the experiment harness.
//! * [`tensor`] reads and writes the little-endian tensor file format.

pub mod annotate;
pub mod diffusion;
pub mod error;
pub mod generalize;
pub mod genmetrics;
pub mod image;
pub mod json;
pub mod lexicon;
pub mod replication;
pub mod tensor;

pub use error::{Error, Result};
