//! Joint extraction of entity/relation triplets as a sequence tagging task.
//!
//! The pipeline: a deterministic codec turns triplet annotations into
//! per-token BIES tags and back ([`codec`]), a Bi-LSTM encoder / LSTM decoder
//! tagger with a biased log-likelihood objective learns the tags ([`model`]),
//! and a harness handles corpora, training and the triplet-level evaluation
//! protocol ([`corpus`], [`train`], [`eval`]). [`synth`] generates small
//! deterministic corpora on which the whole pipeline is exercised.

pub mod codec;
pub mod corpus;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod synth;
pub mod tags;
pub mod train;

pub use error::{Error, Result};
