//! JSON checkpoints.

use super::model::{Architecture, ClassifierModel, Dims, Parameters};
use super::ClassifierError;
use crate::text::Vocabulary;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CHECKPOINT_FORMAT: &str = "langnav-classifier/1";

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    architecture: Architecture,
    dims: Dims,
    seed: u64,
    vocab: Vocabulary,
    params: Parameters,
}

impl ClassifierModel {
    pub fn to_json(&self) -> Result<String, ClassifierError> {
        let ckpt = Checkpoint {
            format: CHECKPOINT_FORMAT.to_owned(),
            architecture: self.architecture,
            dims: self.dims(),
            seed: self.seed,
            vocab: self.vocab.clone(),
            params: self.params.clone(),
        };
        serde_json::to_string(&ckpt).map_err(|e| ClassifierError::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| ClassifierError::Checkpoint(e.to_string()))?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(ClassifierError::Checkpoint(format!("unsupported format {:?}", ckpt.format)));
        }
        let model = ClassifierModel {
            architecture: ckpt.architecture,
            vocab: ckpt.vocab,
            params: ckpt.params,
            seed: ckpt.seed,
        };
        model.validate()?;
        if model.dims() != ckpt.dims {
            return Err(ClassifierError::Shape(format!(
                "declared dims {:?} disagree with tensors {:?}",
                ckpt.dims,
                model.dims()
            )));
        }
        if !model.params.is_finite() {
            return Err(ClassifierError::NonFinite);
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        std::fs::write(path, self.to_json()?).map_err(|e| ClassifierError::Checkpoint(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let text = std::fs::read_to_string(path).map_err(|e| ClassifierError::Checkpoint(e.to_string()))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(arch: Architecture) -> ClassifierModel {
        let vocab = Vocabulary::build([["go", "to", "the", "lab"]]);
        ClassifierModel::new(arch, vocab, 4, 5, 11)
    }

    #[test]
    fn round_trip_is_exact() {
        for arch in Architecture::ALL {
            let m = model(arch);
            let back = ClassifierModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(m, back);
            let a = m.classify_text("go to the lab").unwrap();
            let b = back.classify_text("go to the lab").unwrap();
            assert_eq!(a.probs, b.probs);
        }
    }

    #[test]
    fn rejects_wrong_format_and_shapes() {
        let m = model(Architecture::BiLstm);
        let json = m.to_json().unwrap().replace(CHECKPOINT_FORMAT, "other/9");
        assert!(ClassifierModel::from_json(&json).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["dims"]["hidden"] = 7.into();
        assert!(ClassifierModel::from_json(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["architecture"] = "attbilstm".into();
        assert!(ClassifierModel::from_json(&v.to_string()).is_err());
    }
}
