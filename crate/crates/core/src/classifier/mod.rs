//! Three-way phrase classifier: embedding, forward/backward LSTM, optional
//! location-based attention, and a softmax output layer; with exact
//! gradients and Adam training.

mod backprop;
mod checkpoint;
pub mod linalg;
mod model;
mod train;

pub use backprop::{gradients, mean_loss, Gradients};
pub use checkpoint::CHECKPOINT_FORMAT;
pub use model::{
    attention_weights, bilstm_states, classify, embed_sequence, loss, lstm_forward, output_probs, summarize,
    Architecture, AttentionHead, Classification, ClassifierModel, Dims, EmbeddingTable, LstmDirectionParams,
    OutputHead, Parameters, NUM_CLASSES, PROB_FLOOR,
};
pub use train::{evaluate_accuracy, tokenize_entries, train, train_phrases, TrainConfig, TrainReport};

use crate::text::TextError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("token id {id} out of range for vocabulary of {vocab}")]
    TokenOutOfRange { id: usize, vocab: usize },
    #[error("empty input sequence")]
    EmptySequence,
    #[error("empty batch")]
    EmptyBatch,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("model is missing its {0}")]
    MissingComponent(&'static str),
    #[error("non-finite parameter or loss")]
    NonFinite,
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("unknown architecture {0:?}")]
    UnknownArchitecture(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Text(#[from] TextError),
}
