//! Word-vector lexicon.
//!
//! Text format, one entry per line: `word, tag, v1, ..., vm`. The word may
//! contain spaces (multiword place names). Blank lines and lines starting
//! with `#` are ignored. Tags: `loc`, `obj`, `noun`, `verb`, `adj`, `adv`.

use super::GroundingError;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub const DEFAULT_LEXICON: &str = include_str!("../../../../assets/lexicon.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    /// A named place that can be a goal.
    Loc,
    /// A physical object the detector can report.
    Obj,
    Noun,
    Verb,
    Adj,
    Adv,
}

impl PosTag {
    pub fn is_groundable(self) -> bool {
        matches!(self, PosTag::Loc | PosTag::Obj)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Loc => "loc",
            PosTag::Obj => "obj",
            PosTag::Noun => "noun",
            PosTag::Verb => "verb",
            PosTag::Adj => "adj",
            PosTag::Adv => "adv",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "loc" => PosTag::Loc,
            "obj" => PosTag::Obj,
            "noun" => PosTag::Noun,
            "verb" => PosTag::Verb,
            "adj" => PosTag::Adj,
            "adv" => PosTag::Adv,
            other => return Err(format!("unknown tag {other:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexEntry {
    pub word: String,
    pub tag: PosTag,
    pub vector: Vec<f64>,
    norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    entries: Vec<LexEntry>,
    index: HashMap<String, usize>,
    dim: usize,
    max_words: usize,
}

impl Lexicon {
    pub fn parse(text: &str) -> Result<Self, GroundingError> {
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        let mut dim = 0;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| GroundingError::Lexicon { line: line_no, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(err("expected word, tag and at least one component".into()));
            }
            let word = fields[0].split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
            if word.is_empty() {
                return Err(err("empty word".into()));
            }
            let tag: PosTag = fields[1].parse().map_err(err)?;
            let vector = fields[2..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| err(format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if dim == 0 {
                dim = vector.len();
            } else if vector.len() != dim {
                return Err(err(format!("{} components, expected {dim}", vector.len())));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(err("non-finite component".into()));
            }
            let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(err(format!("zero vector for {word:?}")));
            }
            if index.insert(word.clone(), entries.len()).is_some() {
                return Err(err(format!("duplicate word {word:?}")));
            }
            entries.push(LexEntry { word, tag, vector, norm });
        }
        if entries.is_empty() {
            return Err(GroundingError::Lexicon { line: 0, msg: "no entries".into() });
        }
        let max_words = entries.iter().map(|e| e.word.split(' ').count()).max().unwrap_or(1);
        Ok(Self { entries, index, dim, max_words })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GroundingError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GroundingError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The lexicon bundled with the crate.
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn get(&self, word: &str) -> Option<&LexEntry> {
        self.index.get(word).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest entry, in words.
    pub fn max_words(&self) -> usize {
        self.max_words
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    /// Cosine similarity of two lexicon words, clamped to [-1, 1].
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, GroundingError> {
        let ea = self.get(a).ok_or_else(|| GroundingError::UnknownWord(a.to_owned()))?;
        let eb = self.get(b).ok_or_else(|| GroundingError::UnknownWord(b.to_owned()))?;
        let dot: f64 = ea.vector.iter().zip(&eb.vector).map(|(x, y)| x * y).sum();
        Ok((dot / (ea.norm * eb.norm)).clamp(-1.0, 1.0))
    }

    /// Words whose similarity to `word` is at least `min_cos`, most similar first.
    pub fn synonyms(&self, word: &str, min_cos: f64) -> Result<Vec<(&str, f64)>, GroundingError> {
        let mut out = Vec::new();
        for e in &self.entries {
            if e.word != word {
                let c = self.cosine(word, &e.word)?;
                if c >= min_cos {
                    out.push((e.word.as_str(), c));
                }
            }
        }
        out.sort_by(|a, b| b.1.total_cmp(&a.1));
        Ok(out)
    }

    /// Lexicon form of `word`, folding regular plurals when the plural itself is absent.
    pub fn lemma(&self, word: &str) -> Option<String> {
        if self.contains(word) {
            return Some(word.to_owned());
        }
        let (head, last) = match word.rsplit_once(' ') {
            Some((h, l)) => (Some(h), l),
            None => (None, word),
        };
        let candidates = [
            last.strip_suffix("ies").map(|s| format!("{s}y")),
            last.strip_suffix("es").map(str::to_owned),
            last.strip_suffix('s').map(str::to_owned),
        ];
        candidates
            .into_iter()
            .flatten()
            .filter(|s| !s.is_empty())
            .map(|s| match head {
                Some(h) => format!("{h} {s}"),
                None => s,
            })
            .find(|c| self.contains(c))
    }
}

/// Cosine similarity between two lexicon words.
pub fn cosine_similarity(a: &str, b: &str, lex: &Lexicon) -> Result<f64, GroundingError> {
    lex.cosine(a, b)
}
