//! The end-to-end tagger: embedding, Bi-LSTM encoder, LSTM decoder with
//! tag-vector feedback, softmax output, biased objective, exact gradients
//! and RMSprop.

mod backward;
mod checkpoint;
mod forward;
mod params;
mod rmsprop;

pub use backward::backward;
pub use checkpoint::{load_word_vectors, Checkpoint, NamedTensor, WordVectors};
pub use forward::{
    biased_loss, bilstm_encode, decoder_cell, embed, encoder_cell, forward, predict_tags, softmax,
    DecoderStep, DropoutPlan, ForwardTrace, LstmStep, Mode,
};
pub use params::{
    describe_shapes, init_parameters, DecoderLstm, EncoderLstm, Gradients, ModelDims, Parameters,
    Peephole,
};
pub use rmsprop::{clip_global_norm, rmsprop_step, RmspropConfig, RmspropState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Word-vocabulary index reserved for unknown words.
pub const UNK_INDEX: usize = 0;

/// All model hyperparameters.
///
/// The full-scale reference setting is `embed_dim = 300`, `enc_hidden = 300`,
/// `dec_hidden = 600`, `dropout = 0.5`, `alpha = 10`; desk-scale runs use
/// smaller dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Word embedding dimension (d).
    pub embed_dim: usize,
    /// Encoder hidden size per direction.
    pub enc_hidden: usize,
    /// Decoder hidden size.
    pub dec_hidden: usize,
    /// Tag-prediction-vector dimension; `None` means "use the tag count".
    pub tag_dim: Option<usize>,
    /// Bias weight on relational (non-O) tags in the objective; 1 = unbiased.
    pub alpha: f64,
    /// Embedding dropout probability.
    pub dropout: f64,
    /// Use classical diagonal peephole weights instead of the default full
    /// matrices.
    #[serde(default)]
    pub diagonal_peepholes: bool,
    /// Learn the decoder's first tag-vector input instead of feeding zeros.
    #[serde(default)]
    pub learned_start_tag: bool,
    pub rmsprop: RmspropConfig,
    pub seed: u64,
}

impl Hyperparameters {
    pub fn new(embed_dim: usize, enc_hidden: usize, dec_hidden: usize) -> Self {
        Self {
            embed_dim,
            enc_hidden,
            dec_hidden,
            tag_dim: None,
            alpha: 10.0,
            dropout: 0.5,
            diagonal_peepholes: false,
            learned_start_tag: false,
            rmsprop: RmspropConfig::default(),
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.enc_hidden == 0 || self.dec_hidden == 0 {
            return Err(Error::Config("model dimensions must be >= 1".into()));
        }
        if self.tag_dim == Some(0) {
            return Err(Error::Config("tag_dim must be >= 1".into()));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        self.rmsprop.validate()
    }

    /// The tag-vector dimension to use for a vocabulary of `n_tags` tags.
    pub fn tag_dim_for(&self, n_tags: usize) -> usize {
        self.tag_dim.unwrap_or(n_tags)
    }
}
