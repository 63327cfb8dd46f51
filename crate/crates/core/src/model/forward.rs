//! Forward pass: embedding with inverted dropout, the two encoder LSTM
//! directions, the decoder unrolled left-to-right with tag-vector feedback,
//! and the softmax output with the biased objective.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::params::{DecoderLstm, EncoderLstm, Parameters};
use crate::tags::OTHER_INDEX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// How embedding dropout is driven for one forward pass.
///
/// `Fixed` replays a given multiplier mask; gradient checks use it to keep
/// the loss a deterministic function of the parameters.
pub enum DropoutPlan<'a> {
    Eval,
    Train(&'a mut ChaCha8Rng),
    Fixed(&'a Array2<f64>),
}

impl DropoutPlan<'_> {
    fn mode(&self) -> Mode {
        match self {
            DropoutPlan::Eval => Mode::Eval,
            _ => Mode::Train,
        }
    }
}

/// Cached activations of one LSTM step.
#[derive(Debug, Clone)]
pub struct LstmStep {
    pub input_gate: Array1<f64>,
    pub forget_gate: Array1<f64>,
    pub candidate: Array1<f64>,
    pub output_gate: Array1<f64>,
    pub cell: Array1<f64>,
    pub hidden: Array1<f64>,
}

/// Cached activations of one decoder step, including the tag vector.
#[derive(Debug, Clone)]
pub struct DecoderStep {
    pub input_gate: Array1<f64>,
    pub forget_gate: Array1<f64>,
    pub candidate: Array1<f64>,
    pub output_gate: Array1<f64>,
    pub cell: Array1<f64>,
    pub hidden: Array1<f64>,
    pub tag_vector: Array1<f64>,
}

/// Everything the backward pass needs from one forward run.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub token_ids: Vec<usize>,
    /// Dropout multiplier per embedding coordinate (ones in eval mode,
    /// `{0, 1/(1-p)}` in train mode).
    pub dropout_mask: Array2<f64>,
    /// Post-dropout embedding rows, one per token.
    pub embedded: Array2<f64>,
    /// Forward-direction encoder steps, in token order.
    pub enc_fwd: Vec<LstmStep>,
    /// Backward-direction encoder steps, stored in token order but computed
    /// right-to-left.
    pub enc_bwd: Vec<LstmStep>,
    /// Concatenated `[forward, backward]` encoder outputs per token.
    pub enc_concat: Vec<Array1<f64>>,
    pub dec: Vec<DecoderStep>,
    pub logits: Vec<Array1<f64>>,
    pub probs: Vec<Array1<f64>>,
    pub mode: Mode,
}

impl ForwardTrace {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stabilized softmax (max-shifted).
pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.mapv(|x| (x - max).exp());
    let sum = out.sum();
    out /= sum;
    out
}

/// Looks up embedding rows and applies inverted dropout.
///
/// In eval mode the rows are returned verbatim; in train mode each
/// coordinate is kept with probability `1 - dropout_p` and scaled by
/// `1/(1 - dropout_p)`, and the multiplier mask is returned alongside.
pub fn embed(
    token_ids: &[usize],
    embedding: &Array2<f64>,
    dropout_p: f64,
    plan: &mut DropoutPlan<'_>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let n_words = embedding.nrows();
    let dim = embedding.ncols();
    for &id in token_ids {
        if id >= n_words {
            return Err(Error::Shape(format!(
                "token id {id} out of range (vocabulary size {n_words})"
            )));
        }
    }
    let mut rows = Array2::zeros((token_ids.len(), dim));
    for (t, &id) in token_ids.iter().enumerate() {
        rows.row_mut(t).assign(&embedding.row(id));
    }
    let mask = match plan {
        DropoutPlan::Eval => Array2::ones((token_ids.len(), dim)),
        DropoutPlan::Train(rng) => {
            if dropout_p == 0.0 {
                Array2::ones((token_ids.len(), dim))
            } else {
                let keep = 1.0 - dropout_p;
                let scale = 1.0 / keep;
                let mut mask = Array2::zeros((token_ids.len(), dim));
                for v in mask.iter_mut() {
                    if rng.random::<f64>() < keep {
                        *v = scale;
                    }
                }
                mask
            }
        }
        DropoutPlan::Fixed(mask) => {
            if mask.shape() != rows.shape() {
                return Err(Error::Shape(format!(
                    "dropout mask shape {:?} does not match embedded shape {:?}",
                    mask.shape(),
                    rows.shape()
                )));
            }
            (*mask).clone()
        }
    };
    rows *= &mask;
    Ok((rows, mask))
}

/// One encoder LSTM step.
///
/// The input and forget gates peep at the previous cell, the output gate at
/// the freshly updated one; the candidate has no peephole.
pub fn encoder_cell(
    p: &EncoderLstm,
    input: &Array1<f64>,
    h_prev: &Array1<f64>,
    c_prev: &Array1<f64>,
) -> Result<LstmStep> {
    if input.len() != p.input() || h_prev.len() != p.hidden() || c_prev.len() != p.hidden() {
        return Err(Error::Shape(format!(
            "encoder cell expects input {}, state {}; got input {}, h {}, c {}",
            p.input(),
            p.hidden(),
            input.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let input_gate = (p.w_xi.dot(input) + p.w_hi.dot(h_prev) + p.w_ci.apply(c_prev) + &p.b_i)
        .mapv(sigmoid);
    let forget_gate = (p.w_xf.dot(input) + p.w_hf.dot(h_prev) + p.w_cf.apply(c_prev) + &p.b_f)
        .mapv(sigmoid);
    let candidate = (p.w_xz.dot(input) + p.w_hz.dot(h_prev) + &p.b_z).mapv(f64::tanh);
    let cell = &forget_gate * c_prev + &input_gate * &candidate;
    let output_gate = (p.w_xo.dot(input) + p.w_ho.dot(h_prev) + p.w_co.apply(&cell) + &p.b_o)
        .mapv(sigmoid);
    let hidden = &output_gate * &cell.mapv(f64::tanh);
    Ok(LstmStep {
        input_gate,
        forget_gate,
        candidate,
        output_gate,
        cell,
        hidden,
    })
}

/// One decoder LSTM step.
///
/// Where the encoder gates peep at the cell, the decoder's input, forget and
/// candidate paths take the previous tag vector instead; only the output
/// gate keeps a peephole (on the fresh cell). The step ends with the linear
/// tag-vector projection.
pub fn decoder_cell(
    p: &DecoderLstm,
    input: &Array1<f64>,
    h_prev: &Array1<f64>,
    c_prev: &Array1<f64>,
    tag_prev: &Array1<f64>,
) -> Result<DecoderStep> {
    if input.len() != p.input()
        || h_prev.len() != p.hidden()
        || c_prev.len() != p.hidden()
        || tag_prev.len() != p.tag_dim()
    {
        return Err(Error::Shape(format!(
            "decoder cell expects input {}, state {}, tag {}; got input {}, h {}, c {}, tag {}",
            p.input(),
            p.hidden(),
            p.tag_dim(),
            input.len(),
            h_prev.len(),
            c_prev.len(),
            tag_prev.len()
        )));
    }
    let input_gate = (p.w_xi.dot(input) + p.w_hi.dot(h_prev) + p.w_ti.dot(tag_prev) + &p.b_i)
        .mapv(sigmoid);
    let forget_gate = (p.w_xf.dot(input) + p.w_hf.dot(h_prev) + p.w_tf.dot(tag_prev) + &p.b_f)
        .mapv(sigmoid);
    let candidate = (p.w_xz.dot(input) + p.w_hz.dot(h_prev) + p.w_tz.dot(tag_prev) + &p.b_z)
        .mapv(f64::tanh);
    let cell = &forget_gate * c_prev + &input_gate * &candidate;
    let output_gate = (p.w_xo.dot(input) + p.w_ho.dot(h_prev) + p.w_co.apply(&cell) + &p.b_o)
        .mapv(sigmoid);
    let hidden = &output_gate * &cell.mapv(f64::tanh);
    let tag_vector = p.w_ts.dot(&hidden) + &p.b_ts;
    Ok(DecoderStep {
        input_gate,
        forget_gate,
        candidate,
        output_gate,
        cell,
        hidden,
        tag_vector,
    })
}

/// Runs both encoder directions from zero initial states and concatenates
/// `[forward, backward]` per token.
pub fn bilstm_encode(
    params: &Parameters,
    embedded: &Array2<f64>,
) -> Result<(Vec<LstmStep>, Vec<LstmStep>, Vec<Array1<f64>>)> {
    let n = embedded.nrows();
    if n == 0 {
        return Err(Error::Shape("cannot encode an empty sequence".into()));
    }
    let hidden = params.enc_fwd.hidden();

    let run = |p: &EncoderLstm, order: &mut dyn Iterator<Item = usize>| -> Result<Vec<(usize, LstmStep)>> {
        let mut h = Array1::zeros(hidden);
        let mut c = Array1::zeros(hidden);
        let mut steps = Vec::with_capacity(n);
        for t in order {
            let step = encoder_cell(p, &embedded.row(t).to_owned(), &h, &c)?;
            h = step.hidden.clone();
            c = step.cell.clone();
            steps.push((t, step));
        }
        Ok(steps)
    };

    let fwd_steps = run(&params.enc_fwd, &mut (0..n))?;
    let bwd_steps = run(&params.enc_bwd, &mut (0..n).rev())?;

    let mut fwd: Vec<Option<LstmStep>> = vec![None; n];
    for (t, step) in fwd_steps {
        fwd[t] = Some(step);
    }
    let mut bwd: Vec<Option<LstmStep>> = vec![None; n];
    for (t, step) in bwd_steps {
        bwd[t] = Some(step);
    }
    let fwd: Vec<LstmStep> = fwd.into_iter().map(|s| s.expect("all steps filled")).collect();
    let bwd: Vec<LstmStep> = bwd.into_iter().map(|s| s.expect("all steps filled")).collect();

    let concat = fwd
        .iter()
        .zip(bwd.iter())
        .map(|(f, b)| {
            let mut v = Array1::zeros(2 * hidden);
            v.slice_mut(ndarray::s![..hidden]).assign(&f.hidden);
            v.slice_mut(ndarray::s![hidden..]).assign(&b.hidden);
            v
        })
        .collect();
    Ok((fwd, bwd, concat))
}

/// Full forward pass; computes the biased loss when gold tags are given.
///
/// The decoder starts from zero hidden/cell states and a zero tag vector,
/// and feeds each step's continuous tag vector into the next step in both
/// training and inference.
pub fn forward(
    params: &Parameters,
    alpha: f64,
    dropout_p: f64,
    token_ids: &[usize],
    gold: Option<&[usize]>,
    mut plan: DropoutPlan<'_>,
) -> Result<(ForwardTrace, Option<f64>)> {
    if token_ids.is_empty() {
        return Err(Error::Shape("cannot run forward on an empty sentence".into()));
    }
    if let Some(gold) = gold {
        if gold.len() != token_ids.len() {
            return Err(Error::Shape(format!(
                "gold tags ({}) do not match tokens ({})",
                gold.len(),
                token_ids.len()
            )));
        }
    }
    let dims = params.dims();
    let mode = plan.mode();
    let (embedded, dropout_mask) = embed(token_ids, &params.embedding, dropout_p, &mut plan)?;
    let (enc_fwd, enc_bwd, enc_concat) = bilstm_encode(params, &embedded)?;

    let mut dec = Vec::with_capacity(token_ids.len());
    let mut h = Array1::zeros(dims.dec_hidden);
    let mut c = Array1::zeros(dims.dec_hidden);
    let mut tag_vec = params
        .dec
        .t_start
        .clone()
        .unwrap_or_else(|| Array1::zeros(dims.tag_dim));
    let mut logits = Vec::with_capacity(token_ids.len());
    let mut probs = Vec::with_capacity(token_ids.len());
    for enc in &enc_concat {
        let step = decoder_cell(&params.dec, enc, &h, &c, &tag_vec)?;
        h = step.hidden.clone();
        c = step.cell.clone();
        tag_vec = step.tag_vector.clone();
        let y = params.w_out.dot(&step.tag_vector) + &params.b_out;
        probs.push(softmax(&y));
        logits.push(y);
        dec.push(step);
    }

    let loss = gold
        .map(|gold| biased_loss(&probs, gold, alpha))
        .transpose()?;

    Ok((
        ForwardTrace {
            token_ids: token_ids.to_vec(),
            dropout_mask,
            embedded,
            enc_fwd,
            enc_bwd,
            enc_concat,
            dec,
            logits,
            probs,
            mode,
        },
        loss,
    ))
}

/// The biased negative log-likelihood of one sentence (to minimize).
///
/// `O` tokens contribute `-log p(gold)`, relational tokens contribute
/// `-alpha * log p(gold)`. The two sums are accumulated separately and
/// combined as `loss_other + alpha * loss_relational`, so the loss is affine
/// in alpha by construction.
pub fn biased_loss(probs: &[Array1<f64>], gold: &[usize], alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
    }
    if probs.len() != gold.len() {
        return Err(Error::Shape(format!(
            "{} probability vectors for {} gold tags",
            probs.len(),
            gold.len()
        )));
    }
    let mut loss_other = 0.0;
    let mut loss_relational = 0.0;
    for (p, &g) in probs.iter().zip(gold.iter()) {
        if g >= p.len() {
            return Err(Error::Shape(format!(
                "gold tag index {g} out of range (n_tags={})",
                p.len()
            )));
        }
        let nll = -p[g].ln();
        if g == OTHER_INDEX {
            loss_other += nll;
        } else {
            loss_relational += nll;
        }
    }
    Ok(loss_other + alpha * loss_relational)
}

/// Greedy per-step argmax over the tag probabilities; ties break toward the
/// lowest index.
pub fn predict_tags(probs: &[Array1<f64>]) -> Vec<usize> {
    probs
        .iter()
        .map(|p| {
            let mut best = 0;
            for (i, &v) in p.iter().enumerate() {
                if v > p[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}
