//! Corpus ingestion: JSONL loading, word vocabulary, validation split.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AnnotatedSentence, SentenceRecord};
use crate::error::{Error, Result};
use crate::tags::RelationSet;

/// Token string used for out-of-vocabulary words.
pub const UNK_TOKEN: &str = "<unk>";

/// Word-to-index mapping with a shared UNK row at index 0.
/// Words are lowercased both when the vocabulary is built and at lookup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordVocab {
    words: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl WordVocab {
    /// Rebuilds a vocabulary from an existing word list (e.g. a checkpoint).
    pub fn from_words(words: Vec<String>) -> Self {
        let mut vocab = Self {
            words,
            index: HashMap::new(),
        };
        vocab.rebuild_index();
        vocab
    }

    /// Builds a vocabulary from sentences, in first-seen order after UNK.
    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a AnnotatedSentence>) -> Self {
        let mut vocab = Self {
            words: vec![UNK_TOKEN.to_string()],
            index: HashMap::from([(UNK_TOKEN.to_string(), 0)]),
        };
        for sentence in sentences {
            for token in &sentence.tokens {
                let lower = token.to_lowercase();
                if !vocab.index.contains_key(&lower) {
                    vocab.index.insert(lower.clone(), vocab.words.len());
                    vocab.words.push(lower);
                }
            }
        }
        vocab
    }

    /// Rebuilds the lookup table after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Index for a word, falling back to UNK.
    pub fn lookup(&self, word: &str) -> usize {
        self.index
            .get(&word.to_lowercase())
            .copied()
            .unwrap_or(crate::model::UNK_INDEX)
    }

    pub fn ids(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.lookup(t)).collect()
    }
}

/// A validated collection of sentences sharing one relation set and word
/// vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub sentences: Vec<AnnotatedSentence>,
    pub relations: RelationSet,
    pub vocab: WordVocab,
    /// Sentences dropped at ingestion because their gold entities overlap
    /// (out of scope, rejected with a warning count rather than a crash).
    pub dropped_overlapping: usize,
}

impl Corpus {
    /// Builds a corpus from in-memory sentences, applying the same
    /// validation as [`load_corpus`].
    pub fn from_sentences(
        sentences: Vec<AnnotatedSentence>,
        relations: RelationSet,
    ) -> Result<Self> {
        let mut kept = Vec::with_capacity(sentences.len());
        let mut dropped = 0;
        for sentence in sentences {
            match sentence.validate(&relations) {
                Ok(()) => kept.push(sentence),
                Err(Error::OverlappingEntities(_)) => dropped += 1,
                Err(e) => return Err(e),
            }
        }
        if kept.is_empty() {
            return Err(Error::Corpus {
                line: 0,
                reason: "empty corpus".into(),
            });
        }
        let vocab = WordVocab::from_sentences(&kept);
        Ok(Self {
            sentences: kept,
            relations,
            vocab,
            dropped_overlapping: dropped,
        })
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn total_triplets(&self) -> usize {
        self.sentences.iter().map(|s| s.triplets.len()).sum()
    }

    /// The same sentences viewed through a different word vocabulary
    /// (evaluation corpora are looked up through the training vocabulary).
    pub fn with_vocab(&self, vocab: &WordVocab) -> Corpus {
        Corpus {
            sentences: self.sentences.clone(),
            relations: self.relations.clone(),
            vocab: vocab.clone(),
            dropped_overlapping: self.dropped_overlapping,
        }
    }

    /// Serializes to the JSONL corpus format.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for sentence in &self.sentences {
            out.push_str(
                &serde_json::to_string(&SentenceRecord::from_sentence(sentence))
                    .expect("sentence records are serializable"),
            );
            out.push('\n');
        }
        out
    }
}

/// Loads a JSONL corpus file: one sentence record per line.
///
/// Malformed lines and unknown relations abort with the offending line
/// number; sentences with overlapping gold entities are dropped and counted.
pub fn load_corpus(path: impl AsRef<Path>, relations: &RelationSet) -> Result<Corpus> {
    let file = std::fs::File::open(path.as_ref())?;
    read_corpus(BufReader::new(file), relations)
}

/// [`load_corpus`] over any reader (used by tests and the CLI).
pub fn read_corpus(reader: impl Read, relations: &RelationSet) -> Result<Corpus> {
    let reader = BufReader::new(reader);
    let mut sentences = Vec::new();
    let mut dropped = 0;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord =
            serde_json::from_str(&line).map_err(|e| Error::Corpus {
                line: lineno,
                reason: e.to_string(),
            })?;
        let sentence = record.into_sentence().map_err(|e| Error::Corpus {
            line: lineno,
            reason: e.to_string(),
        })?;
        match sentence.validate(relations) {
            Ok(()) => sentences.push(sentence),
            Err(Error::OverlappingEntities(_)) => dropped += 1,
            Err(e) => {
                return Err(Error::Corpus {
                    line: lineno,
                    reason: e.to_string(),
                })
            }
        }
    }
    if sentences.is_empty() {
        return Err(Error::Corpus {
            line: 0,
            reason: "empty corpus".into(),
        });
    }
    let vocab = WordVocab::from_sentences(&sentences);
    Ok(Corpus {
        sentences,
        relations: relations.clone(),
        vocab,
        dropped_overlapping: dropped,
    })
}

/// Splits a corpus into (evaluation, validation) parts.
///
/// The validation part holds `round(fraction * n)` sentences (round half
/// up), drawn by a seeded shuffle; both parts share the source corpus's
/// relation set and word vocabulary.
pub fn split_validation(corpus: &Corpus, fraction: f64, seed: u64) -> Result<(Corpus, Corpus)> {
    if !(0.0..1.0).contains(&fraction) || fraction <= 0.0 {
        return Err(Error::Config(format!(
            "validation fraction must be in (0, 1), got {fraction}"
        )));
    }
    if corpus.is_empty() {
        return Err(Error::Corpus {
            line: 0,
            reason: "cannot split an empty corpus".into(),
        });
    }
    let n = corpus.len();
    let val_size = ((fraction * n as f64) + 0.5).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let pick = |indices: &[usize]| Corpus {
        sentences: indices.iter().map(|&i| corpus.sentences[i].clone()).collect(),
        relations: corpus.relations.clone(),
        vocab: corpus.vocab.clone(),
        dropped_overlapping: 0,
    };
    let validation = pick(&order[..val_size]);
    let evaluation = pick(&order[val_size..]);
    Ok((evaluation, validation))
}
