//! Adam training loop and accuracy evaluation.

use super::backprop::{gradients_into, mean_loss};
use super::model::{classify, Architecture, ClassifierModel, Parameters};
use super::ClassifierError;
use crate::text::{tokenize, CorpusEntry, LabeledPhrase, Vocabulary};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub embedding_dim: usize,
    pub hidden_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            embedding_dim: 32,
            hidden_dim: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::Config(m.to_owned()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam betas must lie in [0, 1)");
        }
        if self.epsilon <= 0.0 || self.embedding_dim == 0 || self.hidden_dim == 0 {
            return bad("epsilon and layer sizes must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean mini-batch loss of each epoch.
    pub loss_curve: Vec<f64>,
    /// Loss over the whole training set after the last update.
    pub final_loss: f64,
}

struct Adam {
    m: Parameters,
    v: Parameters,
    step: i32,
}

impl Adam {
    fn new(params: &Parameters) -> Self {
        Self {
            m: Parameters::zeros_like(params),
            v: Parameters::zeros_like(params),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut Parameters, grad: &Parameters, cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.step);
        let c2 = 1.0 - cfg.beta2.powi(self.step);
        let lr = cfg.learning_rate;
        for (((p, g), m), v) in params
            .slices_mut()
            .into_iter()
            .zip(grad.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut())
        {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
            }
        }
    }
}

pub fn tokenize_entries(entries: &[CorpusEntry], vocab: &Vocabulary) -> Result<Vec<LabeledPhrase>, ClassifierError> {
    entries
        .iter()
        .map(|e| {
            Ok(LabeledPhrase {
                phrase: tokenize(&e.text, vocab)?,
                label: e.label,
            })
        })
        .collect()
}

/// Train on labeled corpus entries. The vocabulary is built from `train` only.
pub fn train(
    train: &[CorpusEntry],
    config: &TrainConfig,
    architecture: Architecture,
) -> Result<(ClassifierModel, TrainReport), ClassifierError> {
    if train.is_empty() {
        return Err(ClassifierError::EmptyBatch);
    }
    let vocab = Vocabulary::build(train.iter().map(|e| e.text.split_whitespace()));
    let data = tokenize_entries(train, &vocab)?;
    train_phrases(&data, vocab, config, architecture)
}

/// Train on already tokenized phrases.
pub fn train_phrases(
    data: &[LabeledPhrase],
    vocab: Vocabulary,
    config: &TrainConfig,
    architecture: Architecture,
) -> Result<(ClassifierModel, TrainReport), ClassifierError> {
    config.validate()?;
    if data.is_empty() {
        return Err(ClassifierError::EmptyBatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = ClassifierModel::with_rng(
        architecture,
        vocab,
        config.embedding_dim,
        config.hidden_dim,
        config.seed,
        &mut rng,
    );
    let mut adam = Adam::new(&model.params);
    let mut grad = Parameters::zeros_like(&model.params);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut batch = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            grad.scale(0.0);
            let loss = gradients_into(&batch, &model, &mut grad)?;
            if !loss.is_finite() {
                return Err(ClassifierError::Diverged { epoch, loss });
            }
            adam.update(&mut model.params, &grad, config);
            epoch_loss += loss;
            batches += 1;
        }
        let mean = epoch_loss / batches as f64;
        if !mean.is_finite() || !model.params.is_finite() {
            return Err(ClassifierError::Diverged { epoch, loss: mean });
        }
        loss_curve.push(mean);
    }
    let final_loss = mean_loss(data, &model)?;
    Ok((model, TrainReport { loss_curve, final_loss }))
}

/// Fraction of phrases whose argmax label is correct.
pub fn evaluate_accuracy(model: &ClassifierModel, test: &[LabeledPhrase]) -> Result<f64, ClassifierError> {
    if test.is_empty() {
        return Err(ClassifierError::EmptyBatch);
    }
    let mut correct = 0usize;
    for s in test {
        if classify(&s.phrase, model)?.label == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::linalg::Mat;
    use crate::text::{Label, Phrase};

    fn toy_corpus() -> Vec<CorpusEntry> {
        let goals = ["go to the lab", "walk to the hall", "move to the lift", "go to the cafe", "head to the school",
            "drive to the bank", "go to the lobby", "find the kitchen", "walk to the gym", "go to the store"];
        let cons = ["keep away from people", "avoid the table", "stay away from dogs", "watch out the chairs",
            "don't collide with people", "avoid carts", "mind the bench", "keep away from kids", "avoid the desk",
            "stay clear of the crowd"];
        let fill = ["you know", "robot", "please", "um", "thanks", "hey robot", "i mean", "okay", "well", "so"];
        let mut out = Vec::new();
        for (set, label) in [(goals, Label::Goal), (cons, Label::Constraint), (fill, Label::Uninformative)] {
            out.extend(set.iter().map(|t| CorpusEntry { text: t.to_string(), label }));
        }
        out
    }

    fn small_config(seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 8,
            seed,
            embedding_dim: 8,
            hidden_dim: 12,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn toy_corpus_reaches_low_loss() {
        let corpus = toy_corpus();
        assert_eq!(corpus.len(), 30);
        for arch in Architecture::ALL {
            let (model, report) = train(&corpus, &small_config(1), arch).unwrap();
            assert!(report.final_loss < 0.05, "{arch}: {}", report.final_loss);
            assert!(*report.loss_curve.last().unwrap() < 0.05);
            let data = tokenize_entries(&corpus, &model.vocab).unwrap();
            assert_eq!(evaluate_accuracy(&model, &data).unwrap(), 1.0);
        }
    }

    #[test]
    fn training_is_bit_reproducible() {
        let corpus = toy_corpus();
        let mut cfg = small_config(4);
        cfg.epochs = 5;
        let (a, ra) = train(&corpus, &cfg, Architecture::AttBiLstm).unwrap();
        let (b, rb) = train(&corpus, &cfg, Architecture::AttBiLstm).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn rejects_bad_config() {
        let corpus = toy_corpus();
        let cfg = TrainConfig { learning_rate: 0.0, ..TrainConfig::default() };
        assert!(matches!(train(&corpus, &cfg, Architecture::Lstm), Err(ClassifierError::Config(_))));
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        assert!(train(&corpus, &cfg, Architecture::Lstm).is_err());
        assert!(train(&[], &TrainConfig::default(), Architecture::Lstm).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let corpus = toy_corpus();
        let cfg = TrainConfig { learning_rate: f64::MAX, epochs: 3, ..small_config(2) };
        assert!(matches!(train(&corpus, &cfg, Architecture::Lstm), Err(ClassifierError::Diverged { .. })));
    }

    #[test]
    fn prior_only_model_scores_one_third() {
        // Output weights zero: the prediction is the bias argmax for every phrase.
        let vocab = Vocabulary::build([["a", "b", "c"]]);
        let mut model = ClassifierModel::new(Architecture::Lstm, vocab, 3, 4, 0);
        model.params.output.weights = Mat::zeros(3, 4);
        model.params.output.bias = vec![0.2, 0.1, 0.0];
        let test: Vec<LabeledPhrase> = (0..9)
            .map(|i| LabeledPhrase {
                phrase: Phrase { tokens: vec![2 + i % 3], surface: String::new() },
                label: Label::from_index(i % 3).unwrap(),
            })
            .collect();
        assert!((evaluate_accuracy(&model, &test).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}
