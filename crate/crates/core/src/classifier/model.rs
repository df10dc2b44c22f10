//! Parameters and forward computation of the three phrase classifiers.

use super::linalg::{argmax, dot, sigmoid, softmax, Mat};
use super::ClassifierError;
use crate::text::{Label, Phrase, Vocabulary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

pub const NUM_CLASSES: usize = 3;
/// Lower bound on the true-class probability inside the loss.
pub const PROB_FLOOR: f64 = 1e-12;
const INIT_SCALE: f64 = 0.08;
const FORGET_BIAS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Lstm,
    BiLstm,
    AttBiLstm,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Lstm, Architecture::BiLstm, Architecture::AttBiLstm];

    pub fn has_backward(self) -> bool {
        !matches!(self, Architecture::Lstm)
    }

    pub fn has_attention(self) -> bool {
        matches!(self, Architecture::AttBiLstm)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Lstm => "lstm",
            Architecture::BiLstm => "bilstm",
            Architecture::AttBiLstm => "attbilstm",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Architecture {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "lstm" => Ok(Architecture::Lstm),
            "bilstm" => Ok(Architecture::BiLstm),
            "attbilstm" => Ok(Architecture::AttBiLstm),
            _ => Err(ClassifierError::UnknownArchitecture(s.to_owned())),
        }
    }
}

/// Word embeddings. Logically a `dim x vocab` matrix whose column `k` is the
/// vector of word `k`; stored one word per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub vectors: Mat,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.vectors.cols
    }

    pub fn vocab_size(&self) -> usize {
        self.vectors.rows
    }

    pub fn column(&self, id: usize) -> &[f64] {
        self.vectors.row(id)
    }
}

/// One LSTM direction. Gate blocks are stacked in the order input, forget,
/// cell candidate, output; each block has `hidden` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmDirectionParams {
    pub input_weights: Mat,
    pub recurrent_weights: Mat,
    pub bias: Vec<f64>,
}

impl LstmDirectionParams {
    pub fn new_random(input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let input_weights = Mat::uniform(4 * hidden, input_dim, INIT_SCALE, rng);
        let recurrent_weights = Mat::uniform(4 * hidden, hidden, INIT_SCALE, rng);
        let mut bias = Mat::uniform(1, 4 * hidden, INIT_SCALE, rng).data;
        for b in &mut bias[hidden..2 * hidden] {
            *b += FORGET_BIAS;
        }
        Self {
            input_weights,
            recurrent_weights,
            bias,
        }
    }

    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_weights: Mat::zeros(4 * hidden, input_dim),
            recurrent_weights: Mat::zeros(4 * hidden, hidden),
            bias: vec![0.0; 4 * hidden],
        }
    }

    pub fn hidden(&self) -> usize {
        self.recurrent_weights.cols
    }

    pub fn input_dim(&self) -> usize {
        self.input_weights.cols
    }

    fn check_shapes(&self) -> Result<(), ClassifierError> {
        let p = self.hidden();
        if self.recurrent_weights.rows != 4 * p
            || self.input_weights.rows != 4 * p
            || self.bias.len() != 4 * p
        {
            return Err(ClassifierError::Shape(format!(
                "lstm direction: recurrent {}x{}, input {}x{}, bias {}",
                self.recurrent_weights.rows,
                self.recurrent_weights.cols,
                self.input_weights.rows,
                self.input_weights.cols,
                self.bias.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionHead {
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputHead {
    /// `3 x hidden`
    pub weights: Mat,
    pub bias: Vec<f64>,
}

/// Every trainable tensor. Also used as the gradient and Adam-moment container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub embedding: EmbeddingTable,
    pub forward: LstmDirectionParams,
    pub backward: Option<LstmDirectionParams>,
    pub attention: Option<AttentionHead>,
    pub output: OutputHead,
}

impl Parameters {
    pub fn zeros_like(other: &Parameters) -> Parameters {
        let zero_mat = |m: &Mat| Mat::zeros(m.rows, m.cols);
        let zero_dir = |d: &LstmDirectionParams| LstmDirectionParams {
            input_weights: zero_mat(&d.input_weights),
            recurrent_weights: zero_mat(&d.recurrent_weights),
            bias: vec![0.0; d.bias.len()],
        };
        Parameters {
            embedding: EmbeddingTable {
                vectors: zero_mat(&other.embedding.vectors),
            },
            forward: zero_dir(&other.forward),
            backward: other.backward.as_ref().map(zero_dir),
            attention: other.attention.as_ref().map(|a| AttentionHead {
                w: vec![0.0; a.w.len()],
            }),
            output: OutputHead {
                weights: zero_mat(&other.output.weights),
                bias: vec![0.0; other.output.bias.len()],
            },
        }
    }

    /// All tensors in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.embedding.vectors.data];
        for dir in std::iter::once(&self.forward).chain(self.backward.as_ref()) {
            out.push(&dir.input_weights.data);
            out.push(&dir.recurrent_weights.data);
            out.push(&dir.bias);
        }
        if let Some(a) = &self.attention {
            out.push(&a.w);
        }
        out.push(&self.output.weights.data);
        out.push(&self.output.bias);
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![&mut self.embedding.vectors.data];
        for dir in std::iter::once(&mut self.forward).chain(self.backward.as_mut()) {
            out.push(&mut dir.input_weights.data);
            out.push(&mut dir.recurrent_weights.data);
            out.push(&mut dir.bias);
        }
        if let Some(a) = &mut self.attention {
            out.push(&mut a.w);
        }
        out.push(&mut self.output.weights.data);
        out.push(&mut self.output.bias);
        out
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, k: f64) {
        for s in self.slices_mut() {
            for v in s {
                *v *= k;
            }
        }
    }
}

/// Sizes of a classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub vocab: usize,
    pub embedding: usize,
    pub hidden: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Self {
            vocab: 0,
            embedding: 32,
            hidden: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub architecture: Architecture,
    pub vocab: Vocabulary,
    pub params: Parameters,
    pub seed: u64,
}

/// Output of [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: Label,
    pub probs: [f64; NUM_CLASSES],
    /// Per-token attention weights, present only for the attention model.
    pub attention: Option<Vec<f64>>,
}

impl ClassifierModel {
    /// Freshly initialized model: uniform(-0.08, 0.08) weights, forget bias +1.
    pub fn new(architecture: Architecture, vocab: Vocabulary, embedding: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::with_rng(architecture, vocab, embedding, hidden, seed, &mut rng)
    }

    pub(crate) fn with_rng(
        architecture: Architecture,
        vocab: Vocabulary,
        embedding: usize,
        hidden: usize,
        seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let v = vocab.len();
        let params = Parameters {
            embedding: EmbeddingTable {
                vectors: Mat::uniform(v, embedding, INIT_SCALE, rng),
            },
            forward: LstmDirectionParams::new_random(embedding, hidden, rng),
            backward: architecture
                .has_backward()
                .then(|| LstmDirectionParams::new_random(embedding, hidden, rng)),
            attention: architecture.has_attention().then(|| AttentionHead {
                w: Mat::uniform(1, hidden, INIT_SCALE, rng).data,
            }),
            output: OutputHead {
                weights: Mat::uniform(NUM_CLASSES, hidden, INIT_SCALE, rng),
                bias: vec![0.0; NUM_CLASSES],
            },
        };
        Self {
            architecture,
            vocab,
            params,
            seed,
        }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            vocab: self.params.embedding.vocab_size(),
            embedding: self.params.embedding.dim(),
            hidden: self.params.forward.hidden(),
        }
    }

    /// Check that component presence and tensor shapes agree with the architecture.
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let p = &self.params;
        let d = p.embedding.dim();
        let h = p.forward.hidden();
        if p.embedding.vocab_size() != self.vocab.len() {
            return Err(ClassifierError::Shape(format!(
                "embedding has {} columns, vocabulary has {} words",
                p.embedding.vocab_size(),
                self.vocab.len()
            )));
        }
        if p.backward.is_some() != self.architecture.has_backward()
            || p.attention.is_some() != self.architecture.has_attention()
        {
            return Err(ClassifierError::Shape(format!(
                "components do not match architecture {}",
                self.architecture
            )));
        }
        for dir in std::iter::once(&p.forward).chain(p.backward.as_ref()) {
            dir.check_shapes()?;
            if dir.input_dim() != d || dir.hidden() != h {
                return Err(ClassifierError::Shape("lstm direction size mismatch".into()));
            }
        }
        if let Some(a) = &p.attention {
            if a.w.len() != h {
                return Err(ClassifierError::Shape("attention vector size".into()));
            }
        }
        if p.output.weights.rows != NUM_CLASSES || p.output.weights.cols != h || p.output.bias.len() != NUM_CLASSES {
            return Err(ClassifierError::Shape("output head size".into()));
        }
        if !p.is_finite() {
            return Err(ClassifierError::NonFinite);
        }
        Ok(())
    }

    pub fn classify_text(&self, phrase_text: &str) -> Result<Classification, ClassifierError> {
        let phrase = crate::text::tokenize(phrase_text, &self.vocab)?;
        classify(&phrase, self)
    }
}

/// Look up the embedding column of every token.
pub fn embed_sequence(phrase: &Phrase, table: &EmbeddingTable) -> Result<Vec<Vec<f64>>, ClassifierError> {
    phrase
        .tokens
        .iter()
        .map(|&id| {
            if id >= table.vocab_size() {
                Err(ClassifierError::TokenOutOfRange {
                    id,
                    vocab: table.vocab_size(),
                })
            } else {
                Ok(table.column(id).to_vec())
            }
        })
        .collect()
}

/// Activations of one direction over a sequence, kept for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct DirectionTrace {
    pub hidden: usize,
    /// Activated gates per step, `[i | f | g | o]`, `4 * hidden` each.
    pub gates: Vec<f64>,
    pub cell: Vec<f64>,
    pub tanh_cell: Vec<f64>,
    pub h: Vec<f64>,
}

impl DirectionTrace {
    pub fn steps(&self) -> usize {
        self.h.len() / self.hidden
    }

    pub fn h_at(&self, t: usize) -> &[f64] {
        &self.h[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn cell_at(&self, t: usize) -> &[f64] {
        &self.cell[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn tanh_cell_at(&self, t: usize) -> &[f64] {
        &self.tanh_cell[t * self.hidden..(t + 1) * self.hidden]
    }

    pub fn gates_at(&self, t: usize) -> &[f64] {
        &self.gates[t * 4 * self.hidden..(t + 1) * 4 * self.hidden]
    }
}

/// Standard LSTM recurrence from zero state.
pub(crate) fn run_direction(params: &LstmDirectionParams, inputs: &[&[f64]]) -> DirectionTrace {
    let p = params.hidden();
    let steps = inputs.len();
    let mut trace = DirectionTrace {
        hidden: p,
        gates: vec![0.0; steps * 4 * p],
        cell: vec![0.0; steps * p],
        tanh_cell: vec![0.0; steps * p],
        h: vec![0.0; steps * p],
    };
    let mut z = vec![0.0; 4 * p];
    let zero = vec![0.0; p];
    for (t, x) in inputs.iter().enumerate() {
        z.copy_from_slice(&params.bias);
        params.input_weights.matvec_add(x, &mut z);
        let h_prev = if t == 0 { zero.clone() } else { trace.h_at(t - 1).to_vec() };
        params.recurrent_weights.matvec_add(&h_prev, &mut z);
        let c_prev = if t == 0 { zero.clone() } else { trace.cell_at(t - 1).to_vec() };

        let gates = &mut trace.gates[t * 4 * p..(t + 1) * 4 * p];
        for k in 0..p {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[p + k]);
            let g = z[2 * p + k].tanh();
            let o = sigmoid(z[3 * p + k]);
            gates[k] = i;
            gates[p + k] = f;
            gates[2 * p + k] = g;
            gates[3 * p + k] = o;
            let c = f * c_prev[k] + i * g;
            let tc = c.tanh();
            trace.cell[t * p + k] = c;
            trace.tanh_cell[t * p + k] = tc;
            trace.h[t * p + k] = o * tc;
        }
    }
    trace
}

fn check_inputs(inputs: &[Vec<f64>], params: &LstmDirectionParams) -> Result<(), ClassifierError> {
    params.check_shapes()?;
    if inputs.is_empty() {
        return Err(ClassifierError::EmptySequence);
    }
    if let Some(x) = inputs.iter().find(|x| x.len() != params.input_dim()) {
        return Err(ClassifierError::Shape(format!(
            "input of length {} for lstm expecting {}",
            x.len(),
            params.input_dim()
        )));
    }
    Ok(())
}

/// All hidden states of one LSTM direction reading `inputs` in order.
pub fn lstm_forward(inputs: &[Vec<f64>], params: &LstmDirectionParams) -> Result<Vec<Vec<f64>>, ClassifierError> {
    check_inputs(inputs, params)?;
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let trace = run_direction(params, &refs);
    Ok((0..trace.steps()).map(|t| trace.h_at(t).to_vec()).collect())
}

/// Per-token sum of forward states and backward states (the backward
/// direction reads the sequence last to first).
pub fn bilstm_states(
    inputs: &[Vec<f64>],
    fwd: &LstmDirectionParams,
    bwd: &LstmDirectionParams,
) -> Result<Vec<Vec<f64>>, ClassifierError> {
    check_inputs(inputs, fwd)?;
    check_inputs(inputs, bwd)?;
    if fwd.hidden() != bwd.hidden() {
        return Err(ClassifierError::Shape("directions differ in hidden size".into()));
    }
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let rev: Vec<&[f64]> = refs.iter().rev().copied().collect();
    let f = run_direction(fwd, &refs);
    let b = run_direction(bwd, &rev);
    let t_len = refs.len();
    Ok((0..t_len)
        .map(|i| {
            f.h_at(i)
                .iter()
                .zip(b.h_at(t_len - 1 - i))
                .map(|(a, b)| a + b)
                .collect()
        })
        .collect())
}

/// Softmax over `w . tanh(h_i)`.
pub fn attention_weights(states: &[Vec<f64>], head: &AttentionHead) -> Result<Vec<f64>, ClassifierError> {
    if states.is_empty() {
        return Err(ClassifierError::EmptySequence);
    }
    let scores = states
        .iter()
        .map(|h| {
            if h.len() != head.w.len() {
                return Err(ClassifierError::Shape("state/attention size mismatch".into()));
            }
            let th: Vec<f64> = h.iter().map(|v| v.tanh()).collect();
            Ok(dot(&head.w, &th))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(softmax(&scores))
}

/// `tanh(sum_i alpha_i h_i)`
pub fn summarize(states: &[Vec<f64>], alpha: &[f64]) -> Result<Vec<f64>, ClassifierError> {
    if states.len() != alpha.len() || states.is_empty() {
        return Err(ClassifierError::Shape(format!(
            "{} states, {} weights",
            states.len(),
            alpha.len()
        )));
    }
    let total: f64 = alpha.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(ClassifierError::Shape(format!("weights sum to {total}")));
    }
    let p = states[0].len();
    let mut r = vec![0.0; p];
    for (h, &a) in states.iter().zip(alpha) {
        if h.len() != p {
            return Err(ClassifierError::Shape("ragged states".into()));
        }
        super::linalg::axpy(a, h, &mut r);
    }
    Ok(r.into_iter().map(f64::tanh).collect())
}

/// `softmax(W feature + b)`
pub fn output_probs(feature: &[f64], head: &OutputHead) -> [f64; NUM_CLASSES] {
    let mut logits = head.bias.clone();
    head.weights.matvec_add(feature, &mut logits);
    let p = softmax(&logits);
    [p[0], p[1], p[2]]
}

/// Cross-entropy of one prediction, with the true-class probability floored.
pub fn loss(probs: &[f64; NUM_CLASSES], label: Label) -> f64 {
    -probs[label.index()].max(PROB_FLOOR).ln()
}

/// Full classification pipeline for the model's architecture.
pub fn classify(phrase: &Phrase, model: &ClassifierModel) -> Result<Classification, ClassifierError> {
    let p = &model.params;
    let inputs = embed_sequence(phrase, &p.embedding)?;
    if inputs.is_empty() {
        return Err(ClassifierError::EmptySequence);
    }
    let (feature, attention) = match model.architecture {
        Architecture::Lstm => {
            let states = lstm_forward(&inputs, &p.forward)?;
            (states.last().cloned().expect("non-empty"), None)
        }
        Architecture::BiLstm => {
            let bwd = p.backward.as_ref().ok_or(ClassifierError::MissingComponent("backward lstm"))?;
            let fwd = lstm_forward(&inputs, &p.forward)?;
            let rev: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
            let bwd = lstm_forward(&rev, bwd)?;
            let h: Vec<f64> = fwd.last().expect("non-empty").iter().zip(bwd.last().expect("non-empty")).map(|(a, b)| a + b).collect();
            (h, None)
        }
        Architecture::AttBiLstm => {
            let bwd = p.backward.as_ref().ok_or(ClassifierError::MissingComponent("backward lstm"))?;
            let head = p.attention.as_ref().ok_or(ClassifierError::MissingComponent("attention"))?;
            let states = bilstm_states(&inputs, &p.forward, bwd)?;
            let alpha = attention_weights(&states, head)?;
            (summarize(&states, &alpha)?, Some(alpha))
        }
    };
    let probs = output_probs(&feature, &p.output);
    Ok(Classification {
        label: Label::from_index(argmax(&probs)).expect("three classes"),
        probs,
        attention,
    })
}
