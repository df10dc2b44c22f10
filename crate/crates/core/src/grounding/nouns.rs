use super::{GroundingError, Lexicon, PosTag};
use crate::text::CONJUNCTIONS;
use serde::{Deserialize, Serialize};

const STOP_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "some", "any", "all", "every", "each", "my", "your", "our",
    "their", "his", "her", "its", "me", "you", "i", "we", "it", "they", "them", "us", "him", "please", "not",
    "never", "don't", "do", "does", "doesn't", "can", "can't", "will", "won't", "should", "let", "let's", "out",
    "up", "off", "away", "as", "so", "if", "when", "where", "what", "how", "which", "who", "there", "here", "then",
    "or", "very", "too", "just", "also", "um", "uh", "hey", "ok", "okay", "well", "oh", "hmm", "is", "are", "be",
    "was", "were", "am", "have", "has", "had", "no", "yes", "more", "most", "again", "now", "while", "until",
    "because", "about", "really", "less", "other", "another", "one", "two", "three",
];

/// Prepositions end a noun group once a noun has been collected.
const PREPOSITIONS: &[&str] = &[
    "to", "of", "in", "on", "at", "for", "from", "with", "by", "into", "onto", "near", "past", "through",
    "over", "under", "around", "behind", "next", "toward", "towards", "beside", "between", "inside", "outside",
    "across", "along", "via", "during", "after", "before", "without",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Noun {
    /// Lexicon form (plural folded), or the raw word when unknown.
    pub word: String,
    /// The text as written in the phrase.
    pub surface: String,
    /// `None` for words missing from the lexicon.
    pub tag: Option<PosTag>,
}

impl Noun {
    pub fn is_known(&self) -> bool {
        self.tag.is_some()
    }
}

/// Content nouns of a phrase, in order.
///
/// Known place and object words are matched longest first (so multiword
/// names win over their parts) with plural folding. Words the lexicon
/// marks as verbs, adjectives, adverbs or generic nouns are dropped, as are
/// stop-words and conjunctions; any other word is kept as an unknown noun.
/// A preposition after the first noun ends the scan, so trailing modifiers
/// such as "in the shop" do not contribute.
pub fn extract_nouns(phrase_text: &str, lex: &Lexicon) -> Result<Vec<Noun>, GroundingError> {
    let words: Vec<&str> = phrase_text.split_whitespace().collect();
    let mut nouns = Vec::new();
    let mut i = 0;
    'scan: while i < words.len() {
        let w = words[i];
        if CONJUNCTIONS.contains(&w) || w == "," {
            i += 1;
            continue;
        }
        for len in (1..=lex.max_words().min(words.len() - i)).rev() {
            let surface = words[i..i + len].join(" ");
            if let Some(lemma) = lex.lemma(&surface) {
                let tag = lex.get(&lemma).expect("lemma is an entry").tag;
                if tag.is_groundable() {
                    nouns.push(Noun {
                        word: lemma,
                        surface,
                        tag: Some(tag),
                    });
                }
                i += len;
                continue 'scan;
            }
        }
        if PREPOSITIONS.contains(&w) {
            if !nouns.is_empty() {
                break;
            }
        } else if !STOP_WORDS.contains(&w) {
            nouns.push(Noun {
                word: w.to_owned(),
                surface: w.to_owned(),
                tag: None,
            });
        }
        i += 1;
    }
    if nouns.is_empty() {
        return Err(GroundingError::NoNoun(phrase_text.to_owned()));
    }
    Ok(nouns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(text: &str) -> Vec<String> {
        extract_nouns(text, &Lexicon::shipped()).unwrap().into_iter().map(|n| n.word).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(words("go to the restaurant"), ["restaurant"]);
        assert_eq!(words("watch out the table and chairs"), ["table", "chair"]);
        assert_eq!(words("walk to the information desk"), ["information desk"]);
        assert_eq!(words("go to the thrift shop to buy some water"), ["thrift shop"]);
        assert_eq!(words("watch out the table in the shop"), ["table"]);
        assert_eq!(words("keep away from the people"), ["people"]);
        assert_eq!(words("stay away from children"), ["children"]);
    }

    #[test]
    fn unknown_words_are_flagged() {
        let lex = Lexicon::shipped();
        let n = extract_nouns("go to the zxqv", &lex).unwrap();
        assert_eq!(n.len(), 1);
        assert!(!n[0].is_known());
        assert_eq!(n[0].word, "zxqv");
    }

    #[test]
    fn no_noun_is_an_error() {
        let lex = Lexicon::shipped();
        assert!(matches!(extract_nouns("go away please", &lex), Err(GroundingError::NoNoun(_))));
    }

    #[test]
    fn surface_is_kept() {
        let lex = Lexicon::shipped();
        let n = extract_nouns("avoid the benches", &lex).unwrap();
        assert_eq!((n[0].word.as_str(), n[0].surface.as_str()), ("bench", "benches"));
    }
}
