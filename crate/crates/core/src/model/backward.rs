//! Reverse-mode backpropagation through time for the biased objective.
//!
//! Gradients flow through the softmax, the tag-vector projection, the
//! decoder recurrence (including the tag-vector feedback edge into the next
//! step's gates), both encoder directions with their cell peepholes, and the
//! dropout mask into the embedding table.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::forward::{ForwardTrace, LstmStep};
use crate::model::params::{EncoderLstm, Gradients, Parameters};
use crate::model::Hyperparameters;
use crate::tags::OTHER_INDEX;

/// `m += a (outer) b`, skipping zero rows.
fn add_outer(m: &mut Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) {
    for (i, &ai) in a.iter().enumerate() {
        if ai != 0.0 {
            m.row_mut(i).scaled_add(ai, b);
        }
    }
}

fn sigmoid_grad(activated: &Array1<f64>) -> Array1<f64> {
    activated.mapv(|s| s * (1.0 - s))
}

fn tanh_grad(activated: &Array1<f64>) -> Array1<f64> {
    activated.mapv(|z| 1.0 - z * z)
}

/// Gradient of the biased loss with respect to every parameter, for the
/// sentence captured in `trace`.
pub fn backward(
    trace: &ForwardTrace,
    gold: &[usize],
    params: &Parameters,
    hyper: &Hyperparameters,
) -> Result<Gradients> {
    let n = trace.len();
    let dims = params.dims();
    if gold.len() != n {
        return Err(Error::Shape(format!(
            "gold tags ({}) do not match trace length ({n})",
            gold.len()
        )));
    }
    if trace.embedded.ncols() != dims.embed_dim
        || trace.dec.len() != n
        || trace.probs.first().map(|p| p.len()) != Some(dims.n_tags)
        || trace.enc_concat.first().map(|h| h.len()) != Some(dims.enc_out())
    {
        return Err(Error::Shape(
            "trace was produced with differently shaped parameters".into(),
        ));
    }
    let alpha = hyper.alpha;
    let mut grads = params.zeros_like();

    // Decoder sweep, right to left, carrying the three recurrent edges:
    // hidden state, cell state, and the tag-vector feedback.
    let mut d_hidden_rec = Array1::<f64>::zeros(dims.dec_hidden);
    let mut d_cell_rec = Array1::<f64>::zeros(dims.dec_hidden);
    let mut d_tag_rec = Array1::<f64>::zeros(dims.tag_dim);
    let mut d_enc_concat = vec![Array1::<f64>::zeros(dims.enc_out()); n];
    let dec_zero_hidden = Array1::<f64>::zeros(dims.dec_hidden);
    let dec_zero_tag = Array1::<f64>::zeros(dims.tag_dim);

    for t in (0..n).rev() {
        let step = &trace.dec[t];
        let weight = if gold[t] == OTHER_INDEX { 1.0 } else { alpha };
        let mut d_logit = trace.probs[t].clone();
        d_logit[gold[t]] -= 1.0;
        d_logit *= weight;

        add_outer(&mut grads.w_out, &d_logit, &step.tag_vector);
        grads.b_out += &d_logit;

        let d_tag = params.w_out.t().dot(&d_logit) + &d_tag_rec;
        add_outer(&mut grads.dec.w_ts, &d_tag, &step.hidden);
        grads.dec.b_ts += &d_tag;

        let d_hidden = params.dec.w_ts.t().dot(&d_tag) + &d_hidden_rec;
        let tanh_cell = step.cell.mapv(f64::tanh);
        let d_output = &d_hidden * &tanh_cell;
        let d_output_pre = &d_output * &sigmoid_grad(&step.output_gate);
        let d_cell = &d_hidden * &step.output_gate * &tanh_cell.mapv(|v| 1.0 - v * v)
            + params.dec.w_co.apply_transpose(&d_output_pre)
            + &d_cell_rec;

        let (cell_prev, hidden_prev, tag_prev) = if t > 0 {
            let prev = &trace.dec[t - 1];
            (&prev.cell, &prev.hidden, &prev.tag_vector)
        } else {
            (&dec_zero_hidden, &dec_zero_hidden, &dec_zero_tag)
        };

        let d_forget_pre = &(&d_cell * cell_prev) * &sigmoid_grad(&step.forget_gate);
        let d_input_pre = &(&d_cell * &step.candidate) * &sigmoid_grad(&step.input_gate);
        let d_cand_pre = &(&d_cell * &step.input_gate) * &tanh_grad(&step.candidate);

        let enc = &trace.enc_concat[t];
        add_outer(&mut grads.dec.w_xi, &d_input_pre, enc);
        add_outer(&mut grads.dec.w_hi, &d_input_pre, hidden_prev);
        add_outer(&mut grads.dec.w_ti, &d_input_pre, tag_prev);
        grads.dec.b_i += &d_input_pre;
        add_outer(&mut grads.dec.w_xf, &d_forget_pre, enc);
        add_outer(&mut grads.dec.w_hf, &d_forget_pre, hidden_prev);
        add_outer(&mut grads.dec.w_tf, &d_forget_pre, tag_prev);
        grads.dec.b_f += &d_forget_pre;
        add_outer(&mut grads.dec.w_xz, &d_cand_pre, enc);
        add_outer(&mut grads.dec.w_hz, &d_cand_pre, hidden_prev);
        add_outer(&mut grads.dec.w_tz, &d_cand_pre, tag_prev);
        grads.dec.b_z += &d_cand_pre;
        add_outer(&mut grads.dec.w_xo, &d_output_pre, enc);
        add_outer(&mut grads.dec.w_ho, &d_output_pre, hidden_prev);
        grads.dec.w_co.accumulate(&d_output_pre, &step.cell);
        grads.dec.b_o += &d_output_pre;

        d_enc_concat[t] = params.dec.w_xi.t().dot(&d_input_pre)
            + params.dec.w_xf.t().dot(&d_forget_pre)
            + params.dec.w_xz.t().dot(&d_cand_pre)
            + params.dec.w_xo.t().dot(&d_output_pre);

        d_hidden_rec = params.dec.w_hi.t().dot(&d_input_pre)
            + params.dec.w_hf.t().dot(&d_forget_pre)
            + params.dec.w_hz.t().dot(&d_cand_pre)
            + params.dec.w_ho.t().dot(&d_output_pre);
        d_tag_rec = params.dec.w_ti.t().dot(&d_input_pre)
            + params.dec.w_tf.t().dot(&d_forget_pre)
            + params.dec.w_tz.t().dot(&d_cand_pre);
        d_cell_rec = &d_cell * &step.forget_gate;
    }

    // After the t = 0 step the tag-vector carry is the gradient with respect
    // to the decoder's start vector, when that start is learned.
    if let Some(t_start_grad) = &mut grads.dec.t_start {
        *t_start_grad += &d_tag_rec;
    }

    // Split the concatenated encoder gradient and run each direction in its
    // own processing order (forward: left to right; backward: right to left).
    let h = dims.enc_hidden;
    let fwd_ext: Vec<Array1<f64>> = d_enc_concat
        .iter()
        .map(|d| d.slice(ndarray::s![..h]).to_owned())
        .collect();
    let bwd_ext: Vec<Array1<f64>> = (0..n)
        .rev()
        .map(|t| d_enc_concat[t].slice(ndarray::s![h..]).to_owned())
        .collect();

    let fwd_inputs: Vec<Array1<f64>> = (0..n).map(|t| trace.embedded.row(t).to_owned()).collect();
    let bwd_inputs: Vec<Array1<f64>> =
        (0..n).rev().map(|t| trace.embedded.row(t).to_owned()).collect();
    let fwd_steps: Vec<&LstmStep> = trace.enc_fwd.iter().collect();
    let bwd_steps: Vec<&LstmStep> = trace.enc_bwd.iter().rev().collect();

    let d_fwd_inputs =
        encoder_backward(&params.enc_fwd, &mut grads.enc_fwd, &fwd_inputs, &fwd_steps, &fwd_ext);
    let d_bwd_inputs =
        encoder_backward(&params.enc_bwd, &mut grads.enc_bwd, &bwd_inputs, &bwd_steps, &bwd_ext);

    // Embedding gradient: both directions, then through the dropout mask.
    for t in 0..n {
        let d_embedded = &d_fwd_inputs[t] + &d_bwd_inputs[n - 1 - t];
        let masked = &d_embedded * &trace.dropout_mask.row(t);
        grads
            .embedding
            .row_mut(trace.token_ids[t])
            .scaled_add(1.0, &masked);
    }

    Ok(grads)
}

/// BPTT through one encoder direction. All slices are in processing order;
/// returns the gradient with respect to each step's input vector.
fn encoder_backward(
    p: &EncoderLstm,
    g: &mut EncoderLstm,
    inputs: &[Array1<f64>],
    steps: &[&LstmStep],
    d_hidden_ext: &[Array1<f64>],
) -> Vec<Array1<f64>> {
    let n = steps.len();
    let hidden = p.hidden();
    let zero = Array1::<f64>::zeros(hidden);
    let mut d_hidden_rec = Array1::<f64>::zeros(hidden);
    let mut d_cell_rec = Array1::<f64>::zeros(hidden);
    let mut d_inputs = vec![Array1::<f64>::zeros(p.input()); n];

    for t in (0..n).rev() {
        let step = steps[t];
        let d_hidden = &d_hidden_ext[t] + &d_hidden_rec;
        let tanh_cell = step.cell.mapv(f64::tanh);
        let d_output = &d_hidden * &tanh_cell;
        let d_output_pre = &d_output * &sigmoid_grad(&step.output_gate);
        // Cell gradient: through the hidden state, through the output gate's
        // peephole on the fresh cell, and the carry from step t+1 (its cell
        // recurrence plus the input/forget peepholes on this cell).
        let d_cell = &d_hidden * &step.output_gate * &tanh_cell.mapv(|v| 1.0 - v * v)
            + p.w_co.apply_transpose(&d_output_pre)
            + &d_cell_rec;

        let (cell_prev, hidden_prev) = if t > 0 {
            (&steps[t - 1].cell, &steps[t - 1].hidden)
        } else {
            (&zero, &zero)
        };

        let d_forget_pre = &(&d_cell * cell_prev) * &sigmoid_grad(&step.forget_gate);
        let d_input_pre = &(&d_cell * &step.candidate) * &sigmoid_grad(&step.input_gate);
        let d_cand_pre = &(&d_cell * &step.input_gate) * &tanh_grad(&step.candidate);

        let x = &inputs[t];
        add_outer(&mut g.w_xi, &d_input_pre, x);
        add_outer(&mut g.w_hi, &d_input_pre, hidden_prev);
        g.w_ci.accumulate(&d_input_pre, cell_prev);
        g.b_i += &d_input_pre;
        add_outer(&mut g.w_xf, &d_forget_pre, x);
        add_outer(&mut g.w_hf, &d_forget_pre, hidden_prev);
        g.w_cf.accumulate(&d_forget_pre, cell_prev);
        g.b_f += &d_forget_pre;
        add_outer(&mut g.w_xz, &d_cand_pre, x);
        add_outer(&mut g.w_hz, &d_cand_pre, hidden_prev);
        g.b_z += &d_cand_pre;
        add_outer(&mut g.w_xo, &d_output_pre, x);
        add_outer(&mut g.w_ho, &d_output_pre, hidden_prev);
        g.w_co.accumulate(&d_output_pre, &step.cell);
        g.b_o += &d_output_pre;

        d_inputs[t] = p.w_xi.t().dot(&d_input_pre)
            + p.w_xf.t().dot(&d_forget_pre)
            + p.w_xz.t().dot(&d_cand_pre)
            + p.w_xo.t().dot(&d_output_pre);

        d_hidden_rec = p.w_hi.t().dot(&d_input_pre)
            + p.w_hf.t().dot(&d_forget_pre)
            + p.w_hz.t().dot(&d_cand_pre)
            + p.w_ho.t().dot(&d_output_pre);
        d_cell_rec = &d_cell * &step.forget_gate
            + p.w_ci.apply_transpose(&d_input_pre)
            + p.w_cf.apply_transpose(&d_forget_pre);
    }
    d_inputs
}
