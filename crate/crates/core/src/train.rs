//! Training loop: shuffled mini-batches with summed sentence gradients,
//! global-norm clipping, RMSprop updates, per-epoch validation triplet F1
//! and early stopping on it.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::encode;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::eval::{aggregate, EvalReport, SentenceEval};
use crate::model::{
    backward, clip_global_norm, forward, init_parameters, predict_tags, rmsprop_step,
    DropoutPlan, Hyperparameters, Parameters, RmspropState, WordVectors,
};
use crate::tags::{Tag, TagVocabulary};

/// Loop controls, separate from the model hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub max_epochs: usize,
    pub batch_size: usize,
    /// Early-stopping patience on validation triplet F1 (used only when a
    /// validation part is given).
    pub patience: usize,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            batch_size: 32,
            patience: 5,
            clip_norm: Some(5.0),
        }
    }
}

/// One line of training history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Summed biased loss over the epoch (the objective being minimized).
    pub train_loss: f64,
    /// Same loss divided by the token count, for readability only.
    pub mean_token_loss: f64,
    pub val_triplet_f1: Option<f64>,
}

#[derive(Debug)]
pub struct TrainResult {
    /// Parameters of the best epoch (by validation F1; last epoch when no
    /// validation part is given).
    pub params: Parameters,
    pub optimizer_state: RmspropState,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// A sentence prepared for the model: word ids and gold tag ids.
struct Encoded {
    token_ids: Vec<usize>,
    gold: Vec<usize>,
}

fn encode_corpus(corpus: &Corpus, tag_vocab: &TagVocabulary) -> Result<Vec<Encoded>> {
    corpus
        .sentences
        .iter()
        .map(|sentence| {
            let tags = encode(sentence, tag_vocab)?;
            let gold = tags
                .iter()
                .map(|t| {
                    tag_vocab
                        .index_of(t)
                        .ok_or_else(|| Error::Sentence(format!("tag {t} not in vocabulary")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Encoded {
                token_ids: corpus.vocab.ids(&sentence.tokens),
                gold,
            })
        })
        .collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sentence dropout seed, independent of thread scheduling.
fn sentence_seed(base: u64, epoch: usize, sentence: usize) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(epoch as u64)) ^ sentence as u64)
}

/// Trains a model on `train_corpus`, optionally early-stopping on
/// `validation` triplet F1. The per-epoch callback receives each history
/// record as it is produced.
pub fn train(
    train_corpus: &Corpus,
    validation: Option<&Corpus>,
    tag_vocab: &TagVocabulary,
    hyper: &Hyperparameters,
    options: &TrainOptions,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainResult> {
    train_with_embeddings(
        train_corpus,
        validation,
        tag_vocab,
        hyper,
        options,
        None,
        &mut on_epoch,
    )
}

pub fn train_with_embeddings(
    train_corpus: &Corpus,
    validation: Option<&Corpus>,
    tag_vocab: &TagVocabulary,
    hyper: &Hyperparameters,
    options: &TrainOptions,
    pretrained: Option<&WordVectors>,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainResult> {
    hyper.validate()?;
    if options.batch_size == 0 || options.max_epochs == 0 {
        return Err(Error::Config("batch_size and max_epochs must be >= 1".into()));
    }
    let encoded = encode_corpus(train_corpus, tag_vocab)?;
    let total_tokens: usize = encoded.iter().map(|e| e.token_ids.len()).sum();

    let mut init_rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut params = init_parameters(
        hyper,
        train_corpus.vocab.words(),
        tag_vocab.len(),
        &mut init_rng,
        pretrained,
    )?;
    let mut state = RmspropState::new();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(splitmix64(hyper.seed ^ 0x5u64));

    let mut history = Vec::new();
    let mut best_params = params.clone();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut epochs_since_best = 0;
    let mut stopped_early = false;

    let mut order: Vec<usize> = (0..encoded.len()).collect();
    for epoch in 0..options.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for (batch_index, batch) in order.chunks(options.batch_size).enumerate() {
            let results: Vec<Result<(f64, Parameters)>> = batch
                .par_iter()
                .map(|&idx| {
                    let sample = &encoded[idx];
                    let mut rng =
                        ChaCha8Rng::seed_from_u64(sentence_seed(hyper.seed, epoch, idx));
                    let (trace, loss) = forward(
                        &params,
                        hyper.alpha,
                        hyper.dropout,
                        &sample.token_ids,
                        Some(&sample.gold),
                        DropoutPlan::Train(&mut rng),
                    )?;
                    let loss = loss.expect("loss requested");
                    let grads = backward(&trace, &sample.gold, &params, hyper)?;
                    Ok((loss, grads))
                })
                .collect();

            let mut batch_grads: Option<Parameters> = None;
            let mut batch_loss = 0.0;
            for result in results {
                let (loss, grads) = result?;
                batch_loss += loss;
                match &mut batch_grads {
                    None => batch_grads = Some(grads),
                    Some(total) => total.add_assign(&grads)?,
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "loss in epoch {epoch}, batch {batch_index}"
                )));
            }
            let mut batch_grads = batch_grads.expect("batches are non-empty");
            if let Some(max_norm) = options.clip_norm {
                clip_global_norm(&mut batch_grads, max_norm);
            }
            rmsprop_step(&mut params, &batch_grads, &mut state, &hyper.rmsprop)?;
            epoch_loss += batch_loss;
        }

        let val_f1 = match validation {
            Some(val) if !val.is_empty() => {
                Some(evaluate_corpus(&params, hyper, val, tag_vocab)?.triplet.f1)
            }
            _ => None,
        };
        let record = EpochRecord {
            epoch,
            train_loss: epoch_loss,
            mean_token_loss: epoch_loss / total_tokens as f64,
            val_triplet_f1: val_f1,
        };
        on_epoch(&record);
        history.push(record);

        match val_f1 {
            Some(f1) => {
                if f1 > best_f1 {
                    best_f1 = f1;
                    best_params = params.clone();
                    best_epoch = epoch;
                    epochs_since_best = 0;
                } else {
                    epochs_since_best += 1;
                    if epochs_since_best >= options.patience {
                        stopped_early = true;
                        break;
                    }
                }
            }
            None => {
                best_params = params.clone();
                best_epoch = epoch;
            }
        }
    }

    Ok(TrainResult {
        params: best_params,
        optimizer_state: state,
        history,
        best_epoch,
        stopped_early,
    })
}

/// Greedy tag prediction for one sentence (eval mode).
pub fn predict_sentence_tags(
    params: &Parameters,
    hyper: &Hyperparameters,
    token_ids: &[usize],
    tag_vocab: &TagVocabulary,
) -> Result<Vec<Tag>> {
    let (trace, _) = forward(params, hyper.alpha, hyper.dropout, token_ids, None, DropoutPlan::Eval)?;
    tag_vocab.decode_indices(&predict_tags(&trace.probs))
}

/// Runs the model over a corpus and scores it against the gold triplets.
pub fn evaluate_corpus(
    params: &Parameters,
    hyper: &Hyperparameters,
    corpus: &Corpus,
    tag_vocab: &TagVocabulary,
) -> Result<EvalReport> {
    let evals = predictions(params, hyper, corpus, tag_vocab)?;
    Ok(aggregate(evals.iter().map(|(_, eval)| eval)))
}

/// Per-sentence predicted tags plus the derived evaluation view, in corpus
/// order.
pub fn predictions(
    params: &Parameters,
    hyper: &Hyperparameters,
    corpus: &Corpus,
    tag_vocab: &TagVocabulary,
) -> Result<Vec<(Vec<Tag>, SentenceEval)>> {
    corpus
        .sentences
        .par_iter()
        .map(|sentence| {
            let ids = corpus.vocab.ids(&sentence.tokens);
            let tags = predict_sentence_tags(params, hyper, &ids, tag_vocab)?;
            let eval = SentenceEval::from_tags(sentence.triplets.clone(), &tags);
            Ok((tags, eval))
        })
        .collect()
}

/// Fraction of tokens whose predicted tag equals the gold tag, over a whole
/// corpus (eval mode). The overfitting sanity checks use this.
pub fn tag_accuracy(
    params: &Parameters,
    hyper: &Hyperparameters,
    corpus: &Corpus,
    tag_vocab: &TagVocabulary,
) -> Result<f64> {
    let encoded = encode_corpus(corpus, tag_vocab)?;
    let mut correct = 0usize;
    let mut total = 0usize;
    for sample in &encoded {
        let (trace, _) = forward(
            params,
            hyper.alpha,
            hyper.dropout,
            &sample.token_ids,
            None,
            DropoutPlan::Eval,
        )?;
        let pred = predict_tags(&trace.probs);
        total += sample.gold.len();
        correct += pred
            .iter()
            .zip(sample.gold.iter())
            .filter(|(a, b)| a == b)
            .count();
    }
    Ok(correct as f64 / total as f64)
}

/// One row of a bias-weight sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Trains and evaluates once per alpha value. Row `i` runs with seed
/// `hyper.seed + i`, so duplicate alphas yield independent rows.
pub fn alpha_sweep(
    train_corpus: &Corpus,
    validation: Option<&Corpus>,
    eval_corpus: &Corpus,
    alphas: &[f64],
    tag_vocab: &TagVocabulary,
    hyper: &Hyperparameters,
    options: &TrainOptions,
    mut on_epoch: impl FnMut(f64, &EpochRecord),
) -> Result<Vec<SweepRow>> {
    if alphas.is_empty() {
        return Err(Error::Config("alpha sweep needs at least one alpha".into()));
    }
    let mut rows = Vec::with_capacity(alphas.len());
    for (row, &alpha) in alphas.iter().enumerate() {
        let mut run_hyper = hyper.clone();
        run_hyper.alpha = alpha;
        run_hyper.seed = hyper.seed + row as u64;
        let result = train(
            train_corpus,
            validation,
            tag_vocab,
            &run_hyper,
            options,
            |record| on_epoch(alpha, record),
        )?;
        let report = evaluate_corpus(&result.params, &run_hyper, eval_corpus, tag_vocab)?;
        rows.push(SweepRow {
            alpha,
            seed: run_hyper.seed,
            precision: report.triplet.precision,
            recall: report.triplet.recall,
            f1: report.triplet.f1,
        });
    }
    Ok(rows)
}
