//! Effective run settings: defaults, optional TOML config file, flag
//! overrides. The merged result is echoed into every report so runs are
//! reproducible from their outputs alone.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tritag::model::{Hyperparameters, RmspropConfig};
use tritag::synth::GeneratorConfig;
use tritag::tags::RelationSet;
use tritag::train::TrainOptions;
use tritag::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub seed: u64,
    pub model: ModelSettings,
    pub train: TrainSettings,
    pub synth: SynthSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: 42,
            model: ModelSettings::default(),
            train: TrainSettings::default(),
            synth: SynthSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub embed_dim: usize,
    pub enc_hidden: usize,
    pub dec_hidden: usize,
    /// Tag-vector dimension; omitted means "tag count".
    pub tag_dim: Option<usize>,
    pub alpha: f64,
    pub dropout: f64,
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            enc_hidden: 32,
            dec_hidden: 64,
            tag_dim: None,
            alpha: 10.0,
            dropout: 0.5,
            learning_rate: 1e-3,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
    /// Share of the test set held out for validation; 0 evaluates/trains
    /// without a validation split.
    pub val_fraction: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            batch_size: 32,
            patience: 5,
            clip_norm: 5.0,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub n_train: usize,
    pub n_test: usize,
    pub vocab_size: usize,
    pub max_triplets: usize,
    pub max_entity_len: usize,
    pub sentence_len: [usize; 2],
    pub relations: Vec<String>,
}

impl Default for SynthSettings {
    fn default() -> Self {
        let generator = GeneratorConfig::default();
        Self {
            n_train: 2000,
            n_test: 200,
            vocab_size: generator.vocab_size,
            max_triplets: generator.max_triplets,
            max_entity_len: generator.max_entity_len,
            sentence_len: [generator.sentence_len.0, generator.sentence_len.1],
            relations: GeneratorConfig::default_relations().names().to_vec(),
        }
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                toml::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            embed_dim: self.model.embed_dim,
            enc_hidden: self.model.enc_hidden,
            dec_hidden: self.model.dec_hidden,
            tag_dim: self.model.tag_dim,
            alpha: self.model.alpha,
            dropout: self.model.dropout,
            rmsprop: RmspropConfig {
                learning_rate: self.model.learning_rate,
                decay: self.model.rmsprop_decay,
                epsilon: self.model.rmsprop_epsilon,
            },
            seed: self.seed,
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            max_epochs: self.train.max_epochs,
            batch_size: self.train.batch_size,
            patience: self.train.patience,
            clip_norm: if self.train.clip_norm > 0.0 {
                Some(self.train.clip_norm)
            } else {
                None
            },
        }
    }

    pub fn relation_set(&self) -> Result<RelationSet> {
        RelationSet::new(self.synth.relations.clone())
    }

    pub fn generator_config(&self, n_sentences: usize, seed: u64) -> Result<GeneratorConfig> {
        Ok(GeneratorConfig {
            n_sentences,
            relations: self.relation_set()?,
            vocab_size: self.synth.vocab_size,
            max_triplets: self.synth.max_triplets,
            max_entity_len: self.synth.max_entity_len,
            sentence_len: (self.synth.sentence_len[0], self.synth.sentence_len[1]),
            seed,
        })
    }
}
