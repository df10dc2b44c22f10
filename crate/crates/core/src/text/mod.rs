//! Instruction text front end: normalization, phrase splitting, tokenization,
//! vocabulary, and the synthetic labeled corpus.

mod corpus;
mod vocab;

pub use corpus::{generate_corpus, Corpus, CorpusEntry, CorpusRecord, Grammar, Split};
pub use vocab::{Vocabulary, PAD_ID, UNK_ID};

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Words that split an instruction into phrases, in addition to commas.
pub const CONJUNCTIONS: [&str; 4] = ["and", "then", "but", "also"];

const COMMA: &str = ",";

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("instruction text is empty")]
    EmptyInput,
    #[error("instruction contains no phrases after splitting")]
    NoPhrases,
    #[error("corpus: {0}")]
    Corpus(String),
    #[error("grammar: {0}")]
    Grammar(String),
    #[error("io: {0}")]
    Io(String),
}

/// The three phrase classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Goal,
    Constraint,
    Uninformative,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Goal, Label::Constraint, Label::Uninformative];

    pub fn index(self) -> usize {
        match self {
            Label::Goal => 0,
            Label::Constraint => 1,
            Label::Uninformative => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Goal => "goal",
            Label::Constraint => "constraint",
            Label::Uninformative => "uninformative",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = TextError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "goal" => Ok(Label::Goal),
            "constraint" => Ok(Label::Constraint),
            "uninformative" => Ok(Label::Uninformative),
            other => Err(TextError::Corpus(format!("unknown label {other:?}"))),
        }
    }
}

/// A tokenized phrase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrase {
    pub tokens: Vec<usize>,
    pub surface: String,
}

impl Phrase {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.surface.split_whitespace()
    }
}

/// A phrase with its ground-truth class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPhrase {
    pub phrase: Phrase,
    pub label: Label,
}

/// A raw instruction and the phrases it splits into.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub raw: String,
    pub phrases: Vec<Phrase>,
}

impl Instruction {
    pub fn parse(raw: &str, vocab: &Vocabulary) -> Result<Self, TextError> {
        let normalized = normalize(raw)?;
        let phrases = split_phrases(&normalized)?
            .iter()
            .map(|p| tokenize(p, vocab))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            raw: raw.to_owned(),
            phrases,
        })
    }
}

/// Lowercase, drop punctuation except commas (kept as standalone tokens) and
/// word-internal apostrophes/hyphens, and collapse whitespace.
pub fn normalize(raw: &str) -> Result<String, TextError> {
    let lowered = raw.trim().to_lowercase();
    if lowered.is_empty() {
        return Err(TextError::EmptyInput);
    }
    let chars: Vec<char> = lowered.chars().collect();
    let mut out = String::with_capacity(chars.len() + 8);
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            out.push(c);
        } else if c == ',' {
            out.push_str(" , ");
        } else if c == '\'' || c == '-' {
            let inner = i > 0
                && i + 1 < chars.len()
                && chars[i - 1].is_alphanumeric()
                && chars[i + 1].is_alphanumeric();
            out.push(if inner { c } else { ' ' });
        } else {
            out.push(' ');
        }
    }
    let collapsed = out.split_whitespace().collect::<Vec<_>>().join(" ");
    if collapsed.is_empty() {
        return Err(TextError::EmptyInput);
    }
    Ok(collapsed)
}

pub fn is_separator(token: &str) -> bool {
    token == COMMA || CONJUNCTIONS.contains(&token)
}

/// Split normalized text into maximal runs of non-separator tokens.
pub fn split_phrases(text: &str) -> Result<Vec<String>, TextError> {
    let mut phrases = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for token in text.split_whitespace() {
        if is_separator(token) {
            if !current.is_empty() {
                phrases.push(current.join(" "));
                current.clear();
            }
        } else {
            current.push(token);
        }
    }
    if !current.is_empty() {
        phrases.push(current.join(" "));
    }
    if phrases.is_empty() {
        return Err(TextError::NoPhrases);
    }
    Ok(phrases)
}

/// Map whitespace-delimited words to vocabulary ids; unseen words become UNK.
pub fn tokenize(phrase_text: &str, vocab: &Vocabulary) -> Result<Phrase, TextError> {
    let words: Vec<&str> = phrase_text.split_whitespace().collect();
    if words.is_empty() {
        return Err(TextError::EmptyInput);
    }
    Ok(Phrase {
        tokens: words.iter().map(|w| vocab.id(w)).collect(),
        surface: words.join(" "),
    })
}
