//! Exact gradients of the mean cross-entropy through the full classifier.

use super::linalg::{axpy, dot, softmax};
use super::model::{
    run_direction, Architecture, ClassifierModel, DirectionTrace, LstmDirectionParams, Parameters, PROB_FLOOR,
};
use super::ClassifierError;
use crate::text::LabeledPhrase;

/// Gradient of the mean batch loss, shaped like the model parameters.
/// Components the architecture does not use are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: Parameters,
    pub loss: f64,
}

struct Forward<'a> {
    inputs: Vec<&'a [f64]>,
    fwd: DirectionTrace,
    bwd: Option<DirectionTrace>,
    /// Summed states, attention model only.
    states: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    feature: Vec<f64>,
    probs: Vec<f64>,
}

fn forward<'a>(model: &'a ClassifierModel, tokens: &[usize]) -> Result<Forward<'a>, ClassifierError> {
    let p = &model.params;
    let vocab = p.embedding.vocab_size();
    if tokens.is_empty() {
        return Err(ClassifierError::EmptySequence);
    }
    let inputs = tokens
        .iter()
        .map(|&id| {
            if id < vocab {
                Ok(p.embedding.column(id))
            } else {
                Err(ClassifierError::TokenOutOfRange { id, vocab })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let t_len = inputs.len();
    let fwd = run_direction(&p.forward, &inputs);
    let bwd = match (&p.backward, model.architecture.has_backward()) {
        (Some(b), true) => {
            let rev: Vec<&[f64]> = inputs.iter().rev().copied().collect();
            Some(run_direction(b, &rev))
        }
        (None, false) => None,
        _ => return Err(ClassifierError::MissingComponent("backward lstm")),
    };
    let summed = |i: usize| -> Vec<f64> {
        let b = bwd.as_ref().expect("bidirectional");
        fwd.h_at(i)
            .iter()
            .zip(b.h_at(t_len - 1 - i))
            .map(|(x, y)| x + y)
            .collect()
    };
    let mut states = Vec::new();
    let mut alpha = Vec::new();
    let feature = match model.architecture {
        Architecture::Lstm => fwd.h_at(t_len - 1).to_vec(),
        Architecture::BiLstm => {
            let b = bwd.as_ref().expect("bidirectional");
            fwd.h_at(t_len - 1).iter().zip(b.h_at(t_len - 1)).map(|(x, y)| x + y).collect()
        }
        Architecture::AttBiLstm => {
            let head = p.attention.as_ref().ok_or(ClassifierError::MissingComponent("attention"))?;
            states = (0..t_len).map(summed).collect();
            let scores: Vec<f64> = states
                .iter()
                .map(|h| {
                    let th: Vec<f64> = h.iter().map(|v| v.tanh()).collect();
                    dot(&head.w, &th)
                })
                .collect();
            alpha = softmax(&scores);
            let mut r = vec![0.0; fwd.hidden];
            for (h, &a) in states.iter().zip(&alpha) {
                axpy(a, h, &mut r);
            }
            r.into_iter().map(f64::tanh).collect()
        }
    };
    let mut logits = p.output.bias.clone();
    p.output.weights.matvec_add(&feature, &mut logits);
    let probs = softmax(&logits);
    Ok(Forward {
        inputs,
        fwd,
        bwd,
        states,
        alpha,
        feature,
        probs,
    })
}

/// Backpropagation through time for one direction. `dh[t]` is the loss
/// gradient w.r.t. the hidden state at step `t` from layers above; input
/// gradients are accumulated into `dx[t]`.
fn direction_backward(
    params: &LstmDirectionParams,
    trace: &DirectionTrace,
    inputs: &[&[f64]],
    dh: &[Vec<f64>],
    grad: &mut LstmDirectionParams,
    dx: &mut [Vec<f64>],
) {
    let p = trace.hidden;
    let steps = trace.steps();
    let mut dh_next = vec![0.0; p];
    let mut dc_next = vec![0.0; p];
    let mut dz = vec![0.0; 4 * p];
    let zero = vec![0.0; p];
    for t in (0..steps).rev() {
        let gates = trace.gates_at(t);
        let tc = trace.tanh_cell_at(t);
        let c_prev = if t == 0 { &zero[..] } else { trace.cell_at(t - 1) };
        let h_prev = if t == 0 { &zero[..] } else { trace.h_at(t - 1) };
        for k in 0..p {
            let (i, f, g, o) = (gates[k], gates[p + k], gates[2 * p + k], gates[3 * p + k]);
            let dh_k = dh[t][k] + dh_next[k];
            let d_o = dh_k * tc[k];
            let dc = dh_k * o * (1.0 - tc[k] * tc[k]) + dc_next[k];
            dz[k] = dc * g * i * (1.0 - i);
            dz[p + k] = dc * c_prev[k] * f * (1.0 - f);
            dz[2 * p + k] = dc * i * (1.0 - g * g);
            dz[3 * p + k] = d_o * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        grad.input_weights.outer_add(&dz, inputs[t]);
        grad.recurrent_weights.outer_add(&dz, h_prev);
        axpy(1.0, &dz, &mut grad.bias);
        params.input_weights.matvec_t_add(&dz, &mut dx[t]);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        params.recurrent_weights.matvec_t_add(&dz, &mut dh_next);
    }
}

/// Accumulate `scale * dLoss/dParams` for one phrase into `grad`; returns the loss.
fn accumulate(
    model: &ClassifierModel,
    sample: &LabeledPhrase,
    scale: f64,
    grad: &mut Parameters,
) -> Result<f64, ClassifierError> {
    let fw = forward(model, &sample.phrase.tokens)?;
    let p = &model.params;
    let y = sample.label.index();
    let py = fw.probs[y];
    let loss = -py.max(PROB_FLOOR).ln();
    if py < PROB_FLOOR {
        // Loss is clamped here: flat in every parameter.
        return Ok(loss);
    }
    let hidden = fw.fwd.hidden;
    let t_len = fw.inputs.len();

    let mut dlogits = fw.probs.clone();
    dlogits[y] -= 1.0;
    dlogits.iter_mut().for_each(|v| *v *= scale);
    grad.output.weights.outer_add(&dlogits, &fw.feature);
    axpy(1.0, &dlogits, &mut grad.output.bias);
    let mut dfeature = vec![0.0; hidden];
    p.output.weights.matvec_t_add(&dlogits, &mut dfeature);

    // Gradient w.r.t. each forward state and each backward trace step.
    let mut dh_fwd = vec![vec![0.0; hidden]; t_len];
    let mut dh_bwd = vec![vec![0.0; hidden]; t_len];
    match model.architecture {
        Architecture::Lstm => dh_fwd[t_len - 1].copy_from_slice(&dfeature),
        Architecture::BiLstm => {
            dh_fwd[t_len - 1].copy_from_slice(&dfeature);
            dh_bwd[t_len - 1].copy_from_slice(&dfeature);
        }
        Architecture::AttBiLstm => {
            let head = p.attention.as_ref().expect("checked in forward");
            let dr: Vec<f64> = dfeature
                .iter()
                .zip(&fw.feature)
                .map(|(d, hs)| d * (1.0 - hs * hs))
                .collect();
            let dalpha: Vec<f64> = fw.states.iter().map(|h| dot(&dr, h)).collect();
            let mean: f64 = fw.alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
            let gw = &mut grad.attention.as_mut().expect("same shape as model").w;
            for i in 0..t_len {
                let ds = fw.alpha[i] * (dalpha[i] - mean);
                let h = &fw.states[i];
                let dh = &mut dh_fwd[i];
                for k in 0..hidden {
                    let th = h[k].tanh();
                    gw[k] += ds * th;
                    dh[k] = fw.alpha[i] * dr[k] + ds * head.w[k] * (1.0 - th * th);
                }
                dh_bwd[t_len - 1 - i].copy_from_slice(dh);
            }
        }
    }

    let dim = p.embedding.dim();
    let mut dx = vec![vec![0.0; dim]; t_len];
    direction_backward(&p.forward, &fw.fwd, &fw.inputs, &dh_fwd, &mut grad.forward, &mut dx);
    if let (Some(bp), Some(bt)) = (&p.backward, &fw.bwd) {
        let rev_inputs: Vec<&[f64]> = fw.inputs.iter().rev().copied().collect();
        let mut dx_rev = vec![vec![0.0; dim]; t_len];
        let gb = grad.backward.as_mut().expect("same shape as model");
        direction_backward(bp, bt, &rev_inputs, &dh_bwd, gb, &mut dx_rev);
        for (i, d) in dx_rev.into_iter().enumerate() {
            axpy(1.0, &d, &mut dx[t_len - 1 - i]);
        }
    }
    for (&id, d) in sample.phrase.tokens.iter().zip(&dx) {
        axpy(1.0, d, grad.embedding.vectors.row_mut(id));
    }
    Ok(loss)
}

/// Analytic gradient of the mean cross-entropy over `batch`.
pub fn gradients(batch: &[LabeledPhrase], model: &ClassifierModel) -> Result<Gradients, ClassifierError> {
    let mut params = Parameters::zeros_like(&model.params);
    let loss = gradients_into(batch, model, &mut params)?;
    Ok(Gradients { params, loss })
}

/// Like [`gradients`] but accumulates into a caller-owned, zeroed buffer.
pub(crate) fn gradients_into(
    batch: &[LabeledPhrase],
    model: &ClassifierModel,
    grad: &mut Parameters,
) -> Result<f64, ClassifierError> {
    if batch.is_empty() {
        return Err(ClassifierError::EmptyBatch);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for sample in batch {
        total += accumulate(model, sample, scale, grad)?;
    }
    Ok(total * scale)
}

/// Mean loss over `batch` by forward evaluation only.
pub fn mean_loss(batch: &[LabeledPhrase], model: &ClassifierModel) -> Result<f64, ClassifierError> {
    if batch.is_empty() {
        return Err(ClassifierError::EmptyBatch);
    }
    let mut total = 0.0;
    for s in batch {
        let fw = forward(model, &s.phrase.tokens)?;
        total += -fw.probs[s.label.index()].max(PROB_FLOOR).ln();
    }
    Ok(total / batch.len() as f64)
}
