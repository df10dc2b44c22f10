use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

const PAD: &str = "<pad>";
const UNK: &str = "<unk>";

/// Word/id bijection with reserved PAD and UNK ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        let words = vec![PAD.to_owned(), UNK.to_owned()];
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Self { words, index }
    }

    /// Build from token sequences; ids are assigned in first-occurrence order.
    pub fn build<I, S, W>(sequences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = W>,
        W: AsRef<str>,
    {
        let mut vocab = Self::new();
        for seq in sequences {
            for w in seq {
                vocab.insert(w.as_ref());
            }
        }
        vocab
    }

    pub fn insert(&mut self, word: &str) -> usize {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len();
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        id
    }

    /// Id of `word`, or `UNK_ID` if unseen.
    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: usize) -> Option<&str> {
        self.words.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.len() <= 2
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(words: Vec<String>) -> Self {
        // Reserved entries are always at 0 and 1, whatever the file says.
        let mut vocab = Vocabulary::new();
        for w in words.iter().skip(2) {
            vocab.insert(w);
        }
        vocab
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids() {
        let v = Vocabulary::build([["a", "b", "a"]]);
        assert_eq!(v.id(PAD), PAD_ID);
        assert_eq!(v.id(UNK), UNK_ID);
        assert_eq!(v.id("a"), 2);
        assert_eq!(v.id("b"), 3);
        assert_eq!(v.id("zzz"), UNK_ID);
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn bijection_survives_serde() {
        let v = Vocabulary::build([["go", "to", "the", "lift"]]);
        let s = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        for (i, w) in v.words().iter().enumerate() {
            assert_eq!(back.id(w), i);
            assert_eq!(back.word(i), Some(w.as_str()));
        }
    }
}
