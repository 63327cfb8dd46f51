//! Independent reference implementations used only by the acceptance suite.
//!
//! Everything here is deliberately written without the library's own code
//! paths: plain nested `Vec`s, scalar loops, and exhaustive enumeration.

use ndarray::{Array1, Array2};
use tritag::codec::TaggedEntity;
use tritag::model::{DecoderLstm, EncoderLstm, Parameters};
use tritag::tags::{Position, Role, Tag};

// ---------------------------------------------------------------------------
// Straight-line transcription of the forward graph and objective
// ---------------------------------------------------------------------------

fn mat(a: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).to_vec()).collect()
}

fn vec1(a: &Array1<f64>) -> Vec<f64> {
    a.to_vec()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| {
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(v.iter()) {
                acc += a * b;
            }
            acc
        })
        .collect()
}

struct EncoderMats {
    w_xi: Vec<Vec<f64>>,
    w_hi: Vec<Vec<f64>>,
    w_ci: Vec<Vec<f64>>,
    b_i: Vec<f64>,
    w_xf: Vec<Vec<f64>>,
    w_hf: Vec<Vec<f64>>,
    w_cf: Vec<Vec<f64>>,
    b_f: Vec<f64>,
    w_xz: Vec<Vec<f64>>,
    w_hz: Vec<Vec<f64>>,
    b_z: Vec<f64>,
    w_xo: Vec<Vec<f64>>,
    w_ho: Vec<Vec<f64>>,
    w_co: Vec<Vec<f64>>,
    b_o: Vec<f64>,
}

impl EncoderMats {
    fn from(p: &EncoderLstm) -> Self {
        Self {
            w_xi: mat(&p.w_xi),
            w_hi: mat(&p.w_hi),
            w_ci: mat(&p.w_ci.to_matrix()),
            b_i: vec1(&p.b_i),
            w_xf: mat(&p.w_xf),
            w_hf: mat(&p.w_hf),
            w_cf: mat(&p.w_cf.to_matrix()),
            b_f: vec1(&p.b_f),
            w_xz: mat(&p.w_xz),
            w_hz: mat(&p.w_hz),
            b_z: vec1(&p.b_z),
            w_xo: mat(&p.w_xo),
            w_ho: mat(&p.w_ho),
            w_co: mat(&p.w_co.to_matrix()),
            b_o: vec1(&p.b_o),
        }
    }

    /// One memory-block step: input and forget gates peep at the previous
    /// cell, the output gate at the new one.
    fn step(&self, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.b_i.len();
        let xi = matvec(&self.w_xi, x);
        let hi = matvec(&self.w_hi, h);
        let ci = matvec(&self.w_ci, c);
        let xf = matvec(&self.w_xf, x);
        let hf = matvec(&self.w_hf, h);
        let cf = matvec(&self.w_cf, c);
        let xz = matvec(&self.w_xz, x);
        let hz = matvec(&self.w_hz, h);
        let mut i_gate = vec![0.0; n];
        let mut f_gate = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut c_new = vec![0.0; n];
        for j in 0..n {
            i_gate[j] = sigmoid(xi[j] + hi[j] + ci[j] + self.b_i[j]);
            f_gate[j] = sigmoid(xf[j] + hf[j] + cf[j] + self.b_f[j]);
            z[j] = (xz[j] + hz[j] + self.b_z[j]).tanh();
            c_new[j] = f_gate[j] * c[j] + i_gate[j] * z[j];
        }
        let xo = matvec(&self.w_xo, x);
        let ho = matvec(&self.w_ho, h);
        let co = matvec(&self.w_co, &c_new);
        let mut h_new = vec![0.0; n];
        for j in 0..n {
            let o = sigmoid(xo[j] + ho[j] + co[j] + self.b_o[j]);
            h_new[j] = o * c_new[j].tanh();
        }
        (h_new, c_new)
    }
}

struct DecoderMats {
    w_xi: Vec<Vec<f64>>,
    w_hi: Vec<Vec<f64>>,
    w_ti: Vec<Vec<f64>>,
    b_i: Vec<f64>,
    w_xf: Vec<Vec<f64>>,
    w_hf: Vec<Vec<f64>>,
    w_tf: Vec<Vec<f64>>,
    b_f: Vec<f64>,
    w_xz: Vec<Vec<f64>>,
    w_hz: Vec<Vec<f64>>,
    w_tz: Vec<Vec<f64>>,
    b_z: Vec<f64>,
    w_xo: Vec<Vec<f64>>,
    w_ho: Vec<Vec<f64>>,
    w_co: Vec<Vec<f64>>,
    b_o: Vec<f64>,
    w_ts: Vec<Vec<f64>>,
    b_ts: Vec<f64>,
}

impl DecoderMats {
    fn from(p: &DecoderLstm) -> Self {
        Self {
            w_xi: mat(&p.w_xi),
            w_hi: mat(&p.w_hi),
            w_ti: mat(&p.w_ti),
            b_i: vec1(&p.b_i),
            w_xf: mat(&p.w_xf),
            w_hf: mat(&p.w_hf),
            w_tf: mat(&p.w_tf),
            b_f: vec1(&p.b_f),
            w_xz: mat(&p.w_xz),
            w_hz: mat(&p.w_hz),
            w_tz: mat(&p.w_tz),
            b_z: vec1(&p.b_z),
            w_xo: mat(&p.w_xo),
            w_ho: mat(&p.w_ho),
            w_co: mat(&p.w_co),
            b_o: vec1(&p.b_o),
            w_ts: mat(&p.w_ts),
            b_ts: vec1(&p.b_ts),
        }
    }

    /// One decoder step: gates read the encoder vector, the previous decoder
    /// hidden state, and the previous tag vector; the output gate peeps at
    /// the new cell; ends with the tag-vector projection.
    fn step(&self, x: &[f64], h: &[f64], c: &[f64], t_prev: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.b_i.len();
        let xi = matvec(&self.w_xi, x);
        let hi = matvec(&self.w_hi, h);
        let ti = matvec(&self.w_ti, t_prev);
        let xf = matvec(&self.w_xf, x);
        let hf = matvec(&self.w_hf, h);
        let tf = matvec(&self.w_tf, t_prev);
        let xz = matvec(&self.w_xz, x);
        let hz = matvec(&self.w_hz, h);
        let tz = matvec(&self.w_tz, t_prev);
        let mut i_gate = vec![0.0; n];
        let mut f_gate = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut c_new = vec![0.0; n];
        for j in 0..n {
            i_gate[j] = sigmoid(xi[j] + hi[j] + ti[j] + self.b_i[j]);
            f_gate[j] = sigmoid(xf[j] + hf[j] + tf[j] + self.b_f[j]);
            z[j] = (xz[j] + hz[j] + tz[j] + self.b_z[j]).tanh();
            c_new[j] = f_gate[j] * c[j] + i_gate[j] * z[j];
        }
        let xo = matvec(&self.w_xo, x);
        let ho = matvec(&self.w_ho, h);
        let co = matvec(&self.w_co, &c_new);
        let mut h_new = vec![0.0; n];
        for j in 0..n {
            let o = sigmoid(xo[j] + ho[j] + co[j] + self.b_o[j]);
            h_new[j] = o * c_new[j].tanh();
        }
        let mut tag = self.b_ts.clone();
        let th = matvec(&self.w_ts, &h_new);
        for j in 0..tag.len() {
            tag[j] += th[j];
        }
        (h_new, c_new, tag)
    }
}

/// The whole forward graph and biased objective, transcribed scalar by
/// scalar: embedding lookup (no dropout), both encoder directions from zero
/// states, concatenation, the left-to-right decoder with tag-vector
/// feedback from a zero start, the linear softmax layer, and the
/// O-vs-relational weighted negative log-likelihood.
pub fn straight_line_loss(params: &Parameters, token_ids: &[usize], gold: &[usize], alpha: f64) -> f64 {
    let embedding = mat(&params.embedding);
    let fwd = EncoderMats::from(&params.enc_fwd);
    let bwd = EncoderMats::from(&params.enc_bwd);
    let dec = DecoderMats::from(&params.dec);
    let w_y = mat(&params.w_out);
    let b_y = vec1(&params.b_out);
    let n = token_ids.len();
    let h_enc = fwd.b_i.len();

    let xs: Vec<Vec<f64>> = token_ids.iter().map(|&id| embedding[id].clone()).collect();

    let mut h = vec![0.0; h_enc];
    let mut c = vec![0.0; h_enc];
    let mut fwd_h = Vec::with_capacity(n);
    for x in &xs {
        let (h_new, c_new) = fwd.step(x, &h, &c);
        fwd_h.push(h_new.clone());
        h = h_new;
        c = c_new;
    }
    let mut h = vec![0.0; h_enc];
    let mut c = vec![0.0; h_enc];
    let mut bwd_h = vec![Vec::new(); n];
    for t in (0..n).rev() {
        let (h_new, c_new) = bwd.step(&xs[t], &h, &c);
        bwd_h[t] = h_new.clone();
        h = h_new;
        c = c_new;
    }

    let h_dec = dec.b_i.len();
    let t_dim = dec.b_ts.len();
    let mut h = vec![0.0; h_dec];
    let mut c = vec![0.0; h_dec];
    let mut tag = vec![0.0; t_dim];
    let mut loss = 0.0;
    for t in 0..n {
        let mut concat = fwd_h[t].clone();
        concat.extend_from_slice(&bwd_h[t]);
        let (h_new, c_new, tag_new) = dec.step(&concat, &h, &c, &tag);
        h = h_new;
        c = c_new;
        tag = tag_new;

        let mut y = b_y.clone();
        let wy_t = matvec(&w_y, &tag);
        for j in 0..y.len() {
            y[j] += wy_t[j];
        }
        // Softmax exactly as printed: exp(y_i) / sum_j exp(y_j).
        let denom: f64 = y.iter().map(|v| v.exp()).sum();
        let p_gold = y[gold[t]].exp() / denom;
        if gold[t] == 0 {
            loss -= p_gold.ln();
        } else {
            loss -= alpha * p_gold.ln();
        }
    }
    loss
}

// ---------------------------------------------------------------------------
// Strict-repair extraction by candidate enumeration
// ---------------------------------------------------------------------------

/// Extracts entities by enumerating every span and keeping those that spell
/// a well-formed unit: a single `S`, or `B I* E`, with one relation and role
/// throughout. Under the strict repair policy these candidates are exactly
/// the runs the scan-based decoder keeps.
pub fn extract_entities_oracle(tags: &[Tag]) -> Vec<TaggedEntity> {
    let mut out = Vec::new();
    for start in 0..tags.len() {
        for end in start..tags.len() {
            if let Some(entity) = candidate(tags, start, end) {
                out.push(entity);
            }
        }
    }
    out.sort_by_key(|e| e.mention.start);
    out
}

fn candidate(tags: &[Tag], start: usize, end: usize) -> Option<TaggedEntity> {
    let span = &tags[start..=end];
    let head = match &span[0] {
        Tag::Entity { position, relation, role } => (position, relation.clone(), *role),
        Tag::Other => return None,
    };
    let make = |relation: String, role: Role| {
        Some(TaggedEntity {
            mention: tritag::data::EntityMention { start, end },
            relation,
            role,
        })
    };
    if span.len() == 1 {
        return if *head.0 == Position::Single {
            make(head.1, head.2)
        } else {
            None
        };
    }
    if *head.0 != Position::Begin {
        return None;
    }
    for (offset, tag) in span.iter().enumerate().skip(1) {
        match tag {
            Tag::Entity { position, relation, role }
                if *relation == head.1 && *role == head.2 =>
            {
                let expected = if offset == span.len() - 1 {
                    Position::End
                } else {
                    Position::Inside
                };
                if *position != expected {
                    return None;
                }
            }
            _ => return None,
        }
    }
    make(head.1, head.2)
}

// ---------------------------------------------------------------------------
// Pairing oracles
// ---------------------------------------------------------------------------

fn start_distance(a: &TaggedEntity, b: &TaggedEntity) -> usize {
    a.mention.start.abs_diff(b.mention.start)
}

/// Nearest-principle pairing computed the flat way: sort every candidate
/// pair once by (distance, role-1 start, role-2 start) and sweep, skipping
/// already-matched entities.
pub fn greedy_pairs_oracle(firsts: &[TaggedEntity], seconds: &[TaggedEntity]) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(usize, usize, usize, (usize, usize))> = Vec::new();
    for (i, a) in firsts.iter().enumerate() {
        for (j, b) in seconds.iter().enumerate() {
            candidates.push((start_distance(a, b), a.mention.start, b.mention.start, (i, j)));
        }
    }
    candidates.sort();
    let mut used_first = vec![false; firsts.len()];
    let mut used_second = vec![false; seconds.len()];
    let mut pairs = Vec::new();
    for (_, _, _, (i, j)) in candidates {
        if !used_first[i] && !used_second[j] {
            used_first[i] = true;
            used_second[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

/// Exhaustive minimal-total-distance matchings of maximal size: every
/// argmin matching, as sorted index-pair sets.
pub fn min_total_matchings(
    firsts: &[TaggedEntity],
    seconds: &[TaggedEntity],
) -> (usize, Vec<Vec<(usize, usize)>>) {
    let size = firsts.len().min(seconds.len());
    let mut best_total = usize::MAX;
    let mut best: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut current: Vec<(usize, usize)> = Vec::new();
    let mut used_second = vec![false; seconds.len()];

    fn recurse(
        firsts: &[TaggedEntity],
        seconds: &[TaggedEntity],
        size: usize,
        next_first: usize,
        taken: usize,
        total: usize,
        used_second: &mut Vec<bool>,
        current: &mut Vec<(usize, usize)>,
        best_total: &mut usize,
        best: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if taken == size {
            let mut sorted = current.clone();
            sorted.sort();
            match total.cmp(best_total) {
                std::cmp::Ordering::Less => {
                    *best_total = total;
                    *best = vec![sorted];
                }
                std::cmp::Ordering::Equal => best.push(sorted),
                std::cmp::Ordering::Greater => {}
            }
            return;
        }
        if next_first >= firsts.len() {
            return;
        }
        let remaining_firsts = firsts.len() - next_first;
        let needed = size - taken;
        // Option 1: leave this role-1 entity unmatched (only when enough remain).
        if remaining_firsts > needed {
            recurse(
                firsts, seconds, size, next_first + 1, taken, total, used_second, current,
                best_total, best,
            );
        }
        // Option 2: match it with any free role-2 entity.
        for j in 0..seconds.len() {
            if used_second[j] {
                continue;
            }
            used_second[j] = true;
            current.push((next_first, j));
            recurse(
                firsts,
                seconds,
                size,
                next_first + 1,
                taken + 1,
                total + start_distance(&firsts[next_first], &seconds[j]),
                used_second,
                current,
                best_total,
                best,
            );
            current.pop();
            used_second[j] = false;
        }
    }

    recurse(
        firsts,
        seconds,
        size,
        0,
        0,
        0,
        &mut used_second,
        &mut current,
        &mut best_total,
        &mut best,
    );
    if size == 0 {
        return (0, vec![Vec::new()]);
    }
    best.sort();
    best.dedup();
    (best_total, best)
}

// ---------------------------------------------------------------------------
// Maximum-matching oracle for scoring
// ---------------------------------------------------------------------------

/// Maximum one-to-one matching size between gold and predicted keys,
/// computed by trying every assignment.
pub fn max_matching_oracle<K: PartialEq + Clone>(gold: &[K], pred: &[K]) -> usize {
    fn recurse<K: PartialEq>(gold: &[K], pred: &[K], next: usize, used: &mut Vec<bool>) -> usize {
        if next >= pred.len() {
            return 0;
        }
        // Leave pred[next] unmatched.
        let mut best = recurse(gold, pred, next + 1, used);
        for (i, g) in gold.iter().enumerate() {
            if !used[i] && *g == pred[next] {
                used[i] = true;
                best = best.max(1 + recurse(gold, pred, next + 1, used));
                used[i] = false;
            }
        }
        best
    }
    let mut used = vec![false; gold.len()];
    recurse(gold, pred, 0, &mut used)
}
