//! Learnable parameter tensors, their shapes, and initialization.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Hyperparameters, WordVectors};

/// A gate's cell connection: a full matrix as the cell equations are
/// written, or the classical diagonal variant behind a config toggle.
#[derive(Debug, Clone, PartialEq)]
pub enum Peephole {
    Full(Array2<f64>),
    Diagonal(Array1<f64>),
}

impl Peephole {
    fn zeros(hidden: usize, diagonal: bool) -> Self {
        if diagonal {
            Peephole::Diagonal(Array1::zeros(hidden))
        } else {
            Peephole::Full(Array2::zeros((hidden, hidden)))
        }
    }

    /// The gate contribution `W c` (elementwise `w * c` when diagonal).
    pub fn apply(&self, cell: &Array1<f64>) -> Array1<f64> {
        match self {
            Peephole::Full(w) => w.dot(cell),
            Peephole::Diagonal(w) => w * cell,
        }
    }

    /// The pulled-back gradient `W^T d` (elementwise when diagonal).
    pub fn apply_transpose(&self, d: &Array1<f64>) -> Array1<f64> {
        match self {
            Peephole::Full(w) => w.t().dot(d),
            Peephole::Diagonal(w) => w * d,
        }
    }

    /// Accumulates the weight gradient for `d_gate = dL/d(pre-activation)`
    /// against the cell input.
    pub fn accumulate(&mut self, d_gate: &Array1<f64>, cell: &Array1<f64>) {
        match self {
            Peephole::Full(w) => {
                for (i, &g) in d_gate.iter().enumerate() {
                    if g != 0.0 {
                        w.row_mut(i).scaled_add(g, cell);
                    }
                }
            }
            Peephole::Diagonal(w) => {
                for ((w, &g), &c) in w.iter_mut().zip(d_gate.iter()).zip(cell.iter()) {
                    *w += g * c;
                }
            }
        }
    }

    /// Expands to an equivalent full matrix (used by reference oracles).
    pub fn to_matrix(&self) -> Array2<f64> {
        match self {
            Peephole::Full(w) => w.clone(),
            Peephole::Diagonal(w) => Array2::from_diag(w),
        }
    }

    pub fn fill(&mut self, value: f64) {
        match self {
            Peephole::Full(w) => w.fill(value),
            Peephole::Diagonal(w) => w.fill(value),
        }
    }
}

impl TensorLike for Peephole {
    fn shape_vec(&self) -> Vec<usize> {
        match self {
            Peephole::Full(w) => w.shape_vec(),
            Peephole::Diagonal(w) => w.shape_vec(),
        }
    }
    fn flat(&self) -> &[f64] {
        match self {
            Peephole::Full(w) => w.flat(),
            Peephole::Diagonal(w) => w.flat(),
        }
    }
}

impl TensorLikeMut for Peephole {
    fn flat_mut(&mut self) -> &mut [f64] {
        match self {
            Peephole::Full(w) => w.flat_mut(),
            Peephole::Diagonal(w) => w.flat_mut(),
        }
    }
}

/// All sizes that fix the parameter shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelDims {
    pub n_words: usize,
    pub embed_dim: usize,
    pub enc_hidden: usize,
    pub dec_hidden: usize,
    pub tag_dim: usize,
    pub n_tags: usize,
}

impl ModelDims {
    pub fn from_hyper(hyper: &Hyperparameters, n_words: usize, n_tags: usize) -> Self {
        Self {
            n_words,
            embed_dim: hyper.embed_dim,
            enc_hidden: hyper.enc_hidden,
            dec_hidden: hyper.dec_hidden,
            tag_dim: hyper.tag_dim_for(n_tags),
            n_tags,
        }
    }

    /// Dimension of the concatenated encoder output fed to the decoder.
    pub fn enc_out(&self) -> usize {
        2 * self.enc_hidden
    }
}

/// One LSTM direction of the encoder.
///
/// Gate inputs are the word vector (`x`), the previous hidden state (`h`)
/// and, for the input/forget/output gates, a cell peephole (`c`). Peephole
/// weights are full matrices, matching how the cell equations are written;
/// the output gate peeps at the freshly updated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLstm {
    pub w_xi: Array2<f64>,
    pub w_hi: Array2<f64>,
    pub w_ci: Peephole,
    pub b_i: Array1<f64>,
    pub w_xf: Array2<f64>,
    pub w_hf: Array2<f64>,
    pub w_cf: Peephole,
    pub b_f: Array1<f64>,
    pub w_xz: Array2<f64>,
    pub w_hz: Array2<f64>,
    pub b_z: Array1<f64>,
    pub w_xo: Array2<f64>,
    pub w_ho: Array2<f64>,
    pub w_co: Peephole,
    pub b_o: Array1<f64>,
}

impl EncoderLstm {
    fn zeros(input: usize, hidden: usize, diagonal: bool) -> Self {
        Self {
            w_xi: Array2::zeros((hidden, input)),
            w_hi: Array2::zeros((hidden, hidden)),
            w_ci: Peephole::zeros(hidden, diagonal),
            b_i: Array1::zeros(hidden),
            w_xf: Array2::zeros((hidden, input)),
            w_hf: Array2::zeros((hidden, hidden)),
            w_cf: Peephole::zeros(hidden, diagonal),
            b_f: Array1::zeros(hidden),
            w_xz: Array2::zeros((hidden, input)),
            w_hz: Array2::zeros((hidden, hidden)),
            b_z: Array1::zeros(hidden),
            w_xo: Array2::zeros((hidden, input)),
            w_ho: Array2::zeros((hidden, hidden)),
            w_co: Peephole::zeros(hidden, diagonal),
            b_o: Array1::zeros(hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_i.len()
    }

    pub fn input(&self) -> usize {
        self.w_xi.ncols()
    }
}

/// The decoder LSTM.
///
/// Gate inputs are the concatenated encoder vector (`x`), the previous
/// decoder hidden state (`h`) and the previous tag vector (`t`); only the
/// output gate keeps a cell peephole, again on the fresh cell. `w_ts`/`b_ts`
/// project the hidden state to the tag vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderLstm {
    pub w_xi: Array2<f64>,
    pub w_hi: Array2<f64>,
    pub w_ti: Array2<f64>,
    pub b_i: Array1<f64>,
    pub w_xf: Array2<f64>,
    pub w_hf: Array2<f64>,
    pub w_tf: Array2<f64>,
    pub b_f: Array1<f64>,
    pub w_xz: Array2<f64>,
    pub w_hz: Array2<f64>,
    pub w_tz: Array2<f64>,
    pub b_z: Array1<f64>,
    pub w_xo: Array2<f64>,
    pub w_ho: Array2<f64>,
    pub w_co: Peephole,
    pub b_o: Array1<f64>,
    pub w_ts: Array2<f64>,
    pub b_ts: Array1<f64>,
    /// Learned tag vector fed into the first decoder step; `None` means the
    /// default zero start.
    pub t_start: Option<Array1<f64>>,
}

impl DecoderLstm {
    fn zeros(
        input: usize,
        hidden: usize,
        tag_dim: usize,
        diagonal: bool,
        learned_start: bool,
    ) -> Self {
        Self {
            w_xi: Array2::zeros((hidden, input)),
            w_hi: Array2::zeros((hidden, hidden)),
            w_ti: Array2::zeros((hidden, tag_dim)),
            b_i: Array1::zeros(hidden),
            w_xf: Array2::zeros((hidden, input)),
            w_hf: Array2::zeros((hidden, hidden)),
            w_tf: Array2::zeros((hidden, tag_dim)),
            b_f: Array1::zeros(hidden),
            w_xz: Array2::zeros((hidden, input)),
            w_hz: Array2::zeros((hidden, hidden)),
            w_tz: Array2::zeros((hidden, tag_dim)),
            b_z: Array1::zeros(hidden),
            w_xo: Array2::zeros((hidden, input)),
            w_ho: Array2::zeros((hidden, hidden)),
            w_co: Peephole::zeros(hidden, diagonal),
            b_o: Array1::zeros(hidden),
            w_ts: Array2::zeros((tag_dim, hidden)),
            b_ts: Array1::zeros(tag_dim),
            t_start: learned_start.then(|| Array1::zeros(tag_dim)),
        }
    }

    pub fn hidden(&self) -> usize {
        self.b_i.len()
    }

    pub fn input(&self) -> usize {
        self.w_xi.ncols()
    }

    pub fn tag_dim(&self) -> usize {
        self.b_ts.len()
    }
}

/// All learnable weights of the model.
///
/// The same structure doubles as gradient storage: [`Gradients`] mirrors
/// every field shape by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub embedding: Array2<f64>,
    pub enc_fwd: EncoderLstm,
    pub enc_bwd: EncoderLstm,
    pub dec: DecoderLstm,
    pub w_out: Array2<f64>,
    pub b_out: Array1<f64>,
}

/// Per-parameter gradients; identical layout to [`Parameters`].
pub type Gradients = Parameters;

/// Flat mutable view over one named tensor.
pub struct TensorMut<'a> {
    pub name: String,
    pub data: &'a mut [f64],
}

/// Flat read-only view over one named tensor.
pub struct TensorRef<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

impl EncoderLstm {
    fn tensors(&self, prefix: &str) -> Vec<TensorRef<'_>> {
        let items: [(&str, &dyn TensorLike); 15] = [
            ("w_xi", &self.w_xi),
            ("w_hi", &self.w_hi),
            ("w_ci", &self.w_ci),
            ("b_i", &self.b_i),
            ("w_xf", &self.w_xf),
            ("w_hf", &self.w_hf),
            ("w_cf", &self.w_cf),
            ("b_f", &self.b_f),
            ("w_xz", &self.w_xz),
            ("w_hz", &self.w_hz),
            ("b_z", &self.b_z),
            ("w_xo", &self.w_xo),
            ("w_ho", &self.w_ho),
            ("w_co", &self.w_co),
            ("b_o", &self.b_o),
        ];
        items
            .into_iter()
            .map(|(name, t)| TensorRef {
                name: format!("{prefix}.{name}"),
                shape: t.shape_vec(),
                data: t.flat(),
            })
            .collect()
    }

    fn tensors_mut(&mut self, prefix: &str) -> Vec<TensorMut<'_>> {
        let items: [(&str, &mut dyn TensorLikeMut); 15] = [
            ("w_xi", &mut self.w_xi),
            ("w_hi", &mut self.w_hi),
            ("w_ci", &mut self.w_ci),
            ("b_i", &mut self.b_i),
            ("w_xf", &mut self.w_xf),
            ("w_hf", &mut self.w_hf),
            ("w_cf", &mut self.w_cf),
            ("b_f", &mut self.b_f),
            ("w_xz", &mut self.w_xz),
            ("w_hz", &mut self.w_hz),
            ("b_z", &mut self.b_z),
            ("w_xo", &mut self.w_xo),
            ("w_ho", &mut self.w_ho),
            ("w_co", &mut self.w_co),
            ("b_o", &mut self.b_o),
        ];
        items
            .into_iter()
            .map(|(name, t)| TensorMut {
                name: format!("{prefix}.{name}"),
                data: t.flat_mut(),
            })
            .collect()
    }
}

impl DecoderLstm {
    fn tensors(&self, prefix: &str) -> Vec<TensorRef<'_>> {
        let mut items: Vec<(&str, &dyn TensorLike)> = vec![
            ("w_xi", &self.w_xi),
            ("w_hi", &self.w_hi),
            ("w_ti", &self.w_ti),
            ("b_i", &self.b_i),
            ("w_xf", &self.w_xf),
            ("w_hf", &self.w_hf),
            ("w_tf", &self.w_tf),
            ("b_f", &self.b_f),
            ("w_xz", &self.w_xz),
            ("w_hz", &self.w_hz),
            ("w_tz", &self.w_tz),
            ("b_z", &self.b_z),
            ("w_xo", &self.w_xo),
            ("w_ho", &self.w_ho),
            ("w_co", &self.w_co),
            ("b_o", &self.b_o),
            ("w_ts", &self.w_ts),
            ("b_ts", &self.b_ts),
        ];
        if let Some(t_start) = &self.t_start {
            items.push(("t_start", t_start));
        }
        items
            .into_iter()
            .map(|(name, t)| TensorRef {
                name: format!("{prefix}.{name}"),
                shape: t.shape_vec(),
                data: t.flat(),
            })
            .collect()
    }

    fn tensors_mut(&mut self, prefix: &str) -> Vec<TensorMut<'_>> {
        let mut items: Vec<(&str, &mut dyn TensorLikeMut)> = vec![
            ("w_xi", &mut self.w_xi),
            ("w_hi", &mut self.w_hi),
            ("w_ti", &mut self.w_ti),
            ("b_i", &mut self.b_i),
            ("w_xf", &mut self.w_xf),
            ("w_hf", &mut self.w_hf),
            ("w_tf", &mut self.w_tf),
            ("b_f", &mut self.b_f),
            ("w_xz", &mut self.w_xz),
            ("w_hz", &mut self.w_hz),
            ("w_tz", &mut self.w_tz),
            ("b_z", &mut self.b_z),
            ("w_xo", &mut self.w_xo),
            ("w_ho", &mut self.w_ho),
            ("w_co", &mut self.w_co),
            ("b_o", &mut self.b_o),
            ("w_ts", &mut self.w_ts),
            ("b_ts", &mut self.b_ts),
        ];
        if let Some(t_start) = &mut self.t_start {
            items.push(("t_start", t_start));
        }
        items
            .into_iter()
            .map(|(name, t)| TensorMut {
                name: format!("{prefix}.{name}"),
                data: t.flat_mut(),
            })
            .collect()
    }
}

trait TensorLike {
    fn shape_vec(&self) -> Vec<usize>;
    fn flat(&self) -> &[f64];
}

trait TensorLikeMut {
    fn flat_mut(&mut self) -> &mut [f64];
}

impl TensorLike for Array1<f64> {
    fn shape_vec(&self) -> Vec<usize> {
        vec![self.len()]
    }
    fn flat(&self) -> &[f64] {
        self.as_slice().expect("owned arrays are contiguous")
    }
}

impl TensorLike for Array2<f64> {
    fn shape_vec(&self) -> Vec<usize> {
        self.shape().to_vec()
    }
    fn flat(&self) -> &[f64] {
        self.as_slice().expect("owned arrays are contiguous")
    }
}

impl TensorLikeMut for Array1<f64> {
    fn flat_mut(&mut self) -> &mut [f64] {
        self.as_slice_mut().expect("owned arrays are contiguous")
    }
}

impl TensorLikeMut for Array2<f64> {
    fn flat_mut(&mut self) -> &mut [f64] {
        self.as_slice_mut().expect("owned arrays are contiguous")
    }
}

impl Parameters {
    /// All-zero parameters with the given dimensions and the default
    /// structure (full peephole matrices, zero decoder start).
    pub fn zeros(dims: ModelDims) -> Self {
        Self::zeros_configured(dims, false, false)
    }

    /// All-zero parameters with explicit structure toggles.
    pub fn zeros_configured(dims: ModelDims, diagonal_peepholes: bool, learned_start: bool) -> Self {
        Self {
            embedding: Array2::zeros((dims.n_words, dims.embed_dim)),
            enc_fwd: EncoderLstm::zeros(dims.embed_dim, dims.enc_hidden, diagonal_peepholes),
            enc_bwd: EncoderLstm::zeros(dims.embed_dim, dims.enc_hidden, diagonal_peepholes),
            dec: DecoderLstm::zeros(
                dims.enc_out(),
                dims.dec_hidden,
                dims.tag_dim,
                diagonal_peepholes,
                learned_start,
            ),
            w_out: Array2::zeros((dims.n_tags, dims.tag_dim)),
            b_out: Array1::zeros(dims.n_tags),
        }
    }

    /// Zeroed gradients matching `self`'s shapes and structure.
    pub fn zeros_like(&self) -> Gradients {
        let mut grads = self.clone();
        for tensor in grads.tensors_mut() {
            tensor.data.fill(0.0);
        }
        grads
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            n_words: self.embedding.nrows(),
            embed_dim: self.embedding.ncols(),
            enc_hidden: self.enc_fwd.hidden(),
            dec_hidden: self.dec.hidden(),
            tag_dim: self.dec.tag_dim(),
            n_tags: self.b_out.len(),
        }
    }

    /// All tensors, named and flattened row-major, in a fixed order.
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        let mut out = vec![TensorRef {
            name: "embedding".to_string(),
            shape: self.embedding.shape_vec(),
            data: self.embedding.flat(),
        }];
        out.extend(self.enc_fwd.tensors("enc_fwd"));
        out.extend(self.enc_bwd.tensors("enc_bwd"));
        out.extend(self.dec.tensors("dec"));
        out.push(TensorRef {
            name: "w_out".to_string(),
            shape: self.w_out.shape_vec(),
            data: self.w_out.flat(),
        });
        out.push(TensorRef {
            name: "b_out".to_string(),
            shape: self.b_out.shape_vec(),
            data: self.b_out.flat(),
        });
        out
    }

    /// Mutable counterpart of [`Parameters::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = vec![TensorMut {
            name: "embedding".to_string(),
            data: self.embedding.flat_mut(),
        }];
        out.extend(self.enc_fwd.tensors_mut("enc_fwd"));
        out.extend(self.enc_bwd.tensors_mut("enc_bwd"));
        out.extend(self.dec.tensors_mut("dec"));
        out.push(TensorMut {
            name: "w_out".to_string(),
            data: self.w_out.flat_mut(),
        });
        out.push(TensorMut {
            name: "b_out".to_string(),
            data: self.b_out.flat_mut(),
        });
        out
    }

    pub fn n_values(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    /// Elementwise `self += other`. Shapes must match.
    pub fn add_assign(&mut self, other: &Parameters) -> Result<()> {
        let others = other.tensors();
        for (mine, theirs) in self.tensors_mut().into_iter().zip(others.iter()) {
            if mine.name != theirs.name || mine.data.len() != theirs.data.len() {
                return Err(Error::Shape(format!(
                    "cannot accumulate {} into {}",
                    theirs.name, mine.name
                )));
            }
            for (a, b) in mine.data.iter_mut().zip(theirs.data.iter()) {
                *a += *b;
            }
        }
        Ok(())
    }

    /// True when every value is finite.
    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

/// The (name, shape) table forced by the hyperparameters and vocabulary
/// sizes. Checkpoint loading validates against this.
pub fn describe_shapes(
    hyper: &Hyperparameters,
    n_words: usize,
    n_tags: usize,
) -> Vec<(String, Vec<usize>)> {
    let dims = ModelDims::from_hyper(hyper, n_words, n_tags);
    Parameters::zeros_configured(dims, hyper.diagonal_peepholes, hyper.learned_start_tag)
        .tensors()
        .into_iter()
        .map(|t| (t.name, t.shape))
        .collect()
}

/// Initializes parameters.
///
/// Weight matrices are Glorot-uniform (`±sqrt(6 / (fan_in + fan_out))`);
/// biases are zero except the forget-gate biases, which start at 1.0.
/// Embedding rows are uniform in ±0.05, then overwritten by pretrained
/// vectors where the word is covered. Deterministic given the seed.
pub fn init_parameters(
    hyper: &Hyperparameters,
    words: &[String],
    n_tags: usize,
    rng: &mut ChaCha8Rng,
    pretrained: Option<&WordVectors>,
) -> Result<Parameters> {
    hyper.validate()?;
    if let Some(vectors) = pretrained {
        if vectors.dim() != hyper.embed_dim {
            return Err(Error::Config(format!(
                "pretrained vectors have dimension {}, model expects {}",
                vectors.dim(),
                hyper.embed_dim
            )));
        }
    }
    let dims = ModelDims::from_hyper(hyper, words.len(), n_tags);
    let mut params =
        Parameters::zeros_configured(dims, hyper.diagonal_peepholes, hyper.learned_start_tag);
    for tensor in params.tensors_mut() {
        if tensor.name == "embedding" {
            for v in tensor.data.iter_mut() {
                *v = rng.random_range(-0.05..0.05);
            }
        } else if tensor.name.ends_with(".b_f") {
            tensor.data.fill(1.0);
        } else if tensor.name.contains(".b_") || tensor.name == "b_out" || tensor.name.ends_with(".t_start") {
            // biases and the learned start vector stay zero
        } else {
            // Diagonal peepholes reuse the bound of their full-matrix
            // counterpart (fan_in + fan_out is the same 2h either way).
            let shape = matrix_shape(&tensor.name, dims);
            let bound = (6.0 / (shape.0 + shape.1) as f64).sqrt();
            for v in tensor.data.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
    }
    if let Some(vectors) = pretrained {
        for (row, word) in words.iter().enumerate() {
            if let Some(values) = vectors.get(word) {
                for (col, &v) in values.iter().enumerate() {
                    params.embedding[(row, col)] = v;
                }
            }
        }
    }
    Ok(params)
}

/// (rows, cols) of a named weight matrix, for fan-in/fan-out computation.
fn matrix_shape(name: &str, dims: ModelDims) -> (usize, usize) {
    let field = name.rsplit('.').next().unwrap_or(name);
    if name == "w_out" {
        return (dims.n_tags, dims.tag_dim);
    }
    if name.starts_with("enc_") {
        let cols = match field {
            "w_xi" | "w_xf" | "w_xz" | "w_xo" => dims.embed_dim,
            _ => dims.enc_hidden,
        };
        return (dims.enc_hidden, cols);
    }
    // decoder
    if field == "w_ts" {
        return (dims.tag_dim, dims.dec_hidden);
    }
    let cols = match field {
        "w_xi" | "w_xf" | "w_xz" | "w_xo" => dims.enc_out(),
        "w_ti" | "w_tf" | "w_tz" => dims.tag_dim,
        _ => dims.dec_hidden,
    };
    (dims.dec_hidden, cols)
}
