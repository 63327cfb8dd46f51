//! Checkpoint container and pretrained word-vector loading.
//!
//! A checkpoint is a single JSON document:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "hyper": { ... },               // Hyperparameters
//!   "words": ["<unk>", ...],        // word vocabulary, index = position
//!   "relations": ["CP", ...],       // relation set, order fixes tag indices
//!   "tags": ["O", "B-CP-1", ...],   // tag text forms, index = position
//!   "tensors": [ {"name": "embedding", "shape": [V, d], "data": [...]}, ... ],
//!   "rmsprop": [ ... ] | null       // optional optimizer state, same layout
//! }
//! ```
//!
//! Tensor data is row-major. Loading validates every tensor name and shape
//! against the shape table implied by the hyperparameters and vocabulary
//! sizes, and the tag list against the relation set.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::WordVocab;
use crate::error::{Error, Result};
use crate::model::params::{describe_shapes, Parameters};
use crate::model::rmsprop::RmspropState;
use crate::model::Hyperparameters;
use crate::tags::{build_tag_vocabulary, RelationSet, TagVocabulary};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub hyper: Hyperparameters,
    pub words: Vec<String>,
    pub relations: Vec<String>,
    pub tags: Vec<String>,
    pub tensors: Vec<NamedTensor>,
    pub rmsprop: Option<Vec<NamedTensor>>,
}

impl Checkpoint {
    pub fn build(
        hyper: &Hyperparameters,
        vocab: &WordVocab,
        tag_vocab: &TagVocabulary,
        params: &Parameters,
        rmsprop: Option<&RmspropState>,
    ) -> Self {
        let tensors = params
            .tensors()
            .into_iter()
            .map(|t| NamedTensor {
                name: t.name,
                shape: t.shape,
                data: t.data.to_vec(),
            })
            .collect();
        let rmsprop = rmsprop.map(|state| {
            state
                .mean_square
                .iter()
                .map(|(name, data)| NamedTensor {
                    name: name.clone(),
                    shape: vec![data.len()],
                    data: data.clone(),
                })
                .collect()
        });
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            hyper: hyper.clone(),
            words: vocab.words().to_vec(),
            relations: tag_vocab.relations().names().to_vec(),
            tags: tag_vocab.tags().iter().map(ToString::to_string).collect(),
            tensors,
            rmsprop,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        serde_json::to_writer(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let checkpoint: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
        checkpoint.validate()?;
        Ok(checkpoint)
    }

    /// Checks the format version, the tag list, and every tensor shape
    /// against what the hyperparameters and vocabulary sizes dictate.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {} (expected {})",
                self.format_version, CHECKPOINT_FORMAT_VERSION
            )));
        }
        self.hyper.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
        let relations = RelationSet::new(self.relations.clone())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let tag_vocab = build_tag_vocabulary(&relations);
        let expected_tags: Vec<String> =
            tag_vocab.tags().iter().map(ToString::to_string).collect();
        if self.tags != expected_tags {
            return Err(Error::Checkpoint(
                "tag list does not match the relation set".into(),
            ));
        }
        let expected = describe_shapes(&self.hyper, self.words.len(), tag_vocab.len());
        if self.tensors.len() != expected.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                expected.len(),
                self.tensors.len()
            )));
        }
        for (tensor, (name, shape)) in self.tensors.iter().zip(expected.iter()) {
            if &tensor.name != name {
                return Err(Error::Checkpoint(format!(
                    "tensor {} out of order (expected {name})",
                    tensor.name
                )));
            }
            if &tensor.shape != shape {
                return Err(Error::Checkpoint(format!(
                    "tensor {} has shape {:?}, expected {shape:?}",
                    tensor.name, tensor.shape
                )));
            }
            if tensor.data.len() != shape.iter().product::<usize>() {
                return Err(Error::Checkpoint(format!(
                    "tensor {} has {} values for shape {shape:?}",
                    tensor.name,
                    tensor.data.len()
                )));
            }
        }
        Ok(())
    }

    pub fn relation_set(&self) -> Result<RelationSet> {
        RelationSet::new(self.relations.clone())
    }

    pub fn word_vocab(&self) -> WordVocab {
        WordVocab::from_words(self.words.clone())
    }

    /// Reconstructs the parameter tensors. Call [`Checkpoint::validate`]
    /// first (loading does).
    pub fn parameters(&self) -> Result<Parameters> {
        let relations = self.relation_set()?;
        let n_tags = build_tag_vocabulary(&relations).len();
        let dims = crate::model::params::ModelDims::from_hyper(
            &self.hyper,
            self.words.len(),
            n_tags,
        );
        let mut params = Parameters::zeros_configured(
            dims,
            self.hyper.diagonal_peepholes,
            self.hyper.learned_start_tag,
        );
        for (target, source) in params.tensors_mut().into_iter().zip(self.tensors.iter()) {
            if target.name != source.name || target.data.len() != source.data.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor {} does not fit parameter {}",
                    source.name, target.name
                )));
            }
            target.data.copy_from_slice(&source.data);
        }
        Ok(params)
    }

    pub fn rmsprop_state(&self) -> Option<RmspropState> {
        self.rmsprop.as_ref().map(|tensors| RmspropState {
            mean_square: tensors
                .iter()
                .map(|t| (t.name.clone(), t.data.clone()))
                .collect(),
        })
    }
}

/// Pretrained word vectors loaded from the text interchange format:
/// one line per word, `word v1 v2 ... vd`, base-10 floats.
#[derive(Debug, Clone)]
pub struct WordVectors {
    dim: usize,
    map: HashMap<String, Vec<f64>>,
}

impl WordVectors {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Word lookup, lowercased like the word vocabulary.
    pub fn get(&self, word: &str) -> Option<&Vec<f64>> {
        self.map.get(&word.to_lowercase())
    }
}

/// Loads a word-vector file, checking that every row has `expected_dim`
/// values.
pub fn load_word_vectors(path: impl AsRef<Path>, expected_dim: usize) -> Result<WordVectors> {
    let file = std::fs::File::open(path.as_ref())?;
    read_word_vectors(file, expected_dim)
}

pub fn read_word_vectors(reader: impl Read, expected_dim: usize) -> Result<WordVectors> {
    let reader = BufReader::new(reader);
    let mut map = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| Error::Corpus {
                line: lineno,
                reason: "empty vector line".into(),
            })?
            .to_lowercase();
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Corpus {
                    line: lineno,
                    reason: format!("bad float `{f}`: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != expected_dim {
            return Err(Error::Corpus {
                line: lineno,
                reason: format!(
                    "vector for `{word}` has {} values, expected {expected_dim}",
                    values.len()
                ),
            });
        }
        map.insert(word, values);
    }
    Ok(WordVectors {
        dim: expected_dim,
        map,
    })
}
