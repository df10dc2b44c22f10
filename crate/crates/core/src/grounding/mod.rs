//! Grounding: goal nouns to named map locations, constraint nouns to
//! detected objects, both by cosine similarity in the lexicon space.

mod lexicon;
mod nouns;

pub use lexicon::{cosine_similarity, LexEntry, Lexicon, PosTag, DEFAULT_LEXICON};
pub use nouns::{extract_nouns, Noun};

use crate::classifier::{ClassifierError, ClassifierModel};
use crate::geometry::Point2;
use crate::text::{normalize, split_phrases, tokenize, Label, TextError};
use crate::world::{DetectionFrame, SemanticMap};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("lexicon line {line}: {msg}")]
    Lexicon { line: usize, msg: String },
    #[error("word {0:?} is not in the lexicon")]
    UnknownWord(String),
    #[error("no noun found in {0:?}")]
    NoNoun(String),
    #[error("no location matches {noun:?} (best score {best:.3})")]
    NoMatch { noun: String, best: f64 },
    #[error("map has no named locations")]
    EmptyMap,
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundingConfig {
    /// Constraint groundings need a similarity strictly above this.
    pub constraint_threshold: f64,
    /// Goal groundings need a similarity strictly above this.
    pub goal_threshold: f64,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        Self {
            constraint_threshold: 0.6,
            goal_threshold: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalGrounding {
    pub location: String,
    pub position: Point2,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintGrounding {
    pub noun: String,
    pub label: String,
    pub object_id: u32,
    /// Robot-frame position from the triggering detection.
    pub position: Point2,
    pub radius: f64,
    pub moving: bool,
    pub score: f64,
    pub timestamp: f64,
}

/// Named location most similar to `goal_noun`; the first declared wins ties.
pub fn ground_goal(
    goal_noun: &str,
    map: &SemanticMap,
    lex: &Lexicon,
    cfg: &GroundingConfig,
) -> Result<GoalGrounding, GroundingError> {
    if map.locations.is_empty() {
        return Err(GroundingError::EmptyMap);
    }
    if !lex.contains(goal_noun) {
        return Err(GroundingError::UnknownWord(goal_noun.to_owned()));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, loc) in map.locations.iter().enumerate() {
        let score = lex.cosine(goal_noun, &loc.name)?;
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    let (i, score) = best.expect("non-empty");
    if score <= cfg.goal_threshold {
        return Err(GroundingError::NoMatch {
            noun: goal_noun.to_owned(),
            best: score,
        });
    }
    let loc = &map.locations[i];
    Ok(GoalGrounding {
        location: loc.name.clone(),
        position: loc.position,
        score,
    })
}

/// Every (noun, detection) pair whose similarity exceeds the threshold.
/// Unknown nouns and detector labels missing from the lexicon never match.
pub fn ground_constraints(
    nouns: &[String],
    frame: &DetectionFrame,
    lex: &Lexicon,
    cfg: &GroundingConfig,
) -> Vec<ConstraintGrounding> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for noun in nouns {
        for det in &frame.detections {
            let Ok(score) = lex.cosine(noun, &det.label) else {
                continue;
            };
            if score > cfg.constraint_threshold && seen.insert((noun.as_str(), det.object_id)) {
                out.push(ConstraintGrounding {
                    noun: noun.clone(),
                    label: det.label.clone(),
                    object_id: det.object_id,
                    position: det.position,
                    radius: det.radius,
                    moving: det.moving,
                    score,
                    timestamp: frame.timestamp,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseParse {
    pub text: String,
    pub tokens: Vec<String>,
    pub label: Label,
    pub probs: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<Vec<f64>>,
    pub nouns: Vec<Noun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedCommand {
    pub instruction_id: u64,
    pub phrases: Vec<PhraseParse>,
    /// First noun of the last goal phrase that has one.
    pub goal_noun: Option<Noun>,
    /// Nouns from all constraint phrases, first occurrence order.
    pub constraint_nouns: Vec<Noun>,
}

impl ParsedCommand {
    pub fn constraint_words(&self) -> Vec<String> {
        self.constraint_nouns.iter().map(|n| n.word.clone()).collect()
    }
}

/// Normalize, split, classify each phrase and extract its nouns.
pub fn parse_command(
    raw: &str,
    instruction_id: u64,
    model: &ClassifierModel,
    lex: &Lexicon,
) -> Result<ParsedCommand, GroundingError> {
    let norm = normalize(raw)?;
    let mut phrases = Vec::new();
    let mut goal_noun = None;
    let mut constraint_nouns: Vec<Noun> = Vec::new();
    for text in split_phrases(&norm)? {
        let phrase = tokenize(&text, &model.vocab)?;
        let c = crate::classifier::classify(&phrase, model)?;
        let mut parse = PhraseParse {
            tokens: text.split_whitespace().map(str::to_owned).collect(),
            text,
            label: c.label,
            probs: c.probs,
            attention: c.attention,
            nouns: Vec::new(),
            error: None,
        };
        if c.label != Label::Uninformative {
            match extract_nouns(&parse.text, lex) {
                Ok(nouns) => parse.nouns = nouns,
                Err(e) => parse.error = Some(e.to_string()),
            }
        }
        match c.label {
            Label::Goal => {
                if let Some(n) = parse.nouns.first() {
                    goal_noun = Some(n.clone());
                }
            }
            Label::Constraint => {
                for n in &parse.nouns {
                    if !constraint_nouns.iter().any(|m| m.word == n.word) {
                        constraint_nouns.push(n.clone());
                    }
                }
            }
            Label::Uninformative => {}
        }
        phrases.push(parse);
    }
    Ok(ParsedCommand {
        instruction_id,
        phrases,
        goal_noun,
        constraint_nouns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Cell, Detection, GridMap, NamedLocation, Pose};
    use proptest::prelude::*;

    fn map_with(names: &[&str]) -> SemanticMap {
        SemanticMap {
            name: "t".into(),
            grid: GridMap::new(10, 10, 1.0, Point2::default(), Cell::Free),
            start: Pose::default(),
            locations: names
                .iter()
                .enumerate()
                .map(|(i, n)| NamedLocation {
                    name: n.to_string(),
                    position: Point2::new(i as f64 + 0.5, 1.5),
                })
                .collect(),
            objects: vec![],
        }
    }

    fn det(id: u32, label: &str, x: f64, y: f64) -> Detection {
        Detection {
            object_id: id,
            label: label.into(),
            position: Point2::new(x, y),
            radius: 0.25,
            moving: false,
        }
    }

    #[test]
    fn goal_examples() {
        let lex = Lexicon::shipped();
        let cfg = GroundingConfig::default();
        let m = map_with(&["restaurant", "information desk", "laboratory", "lift", "hall"]);
        let g = ground_goal("lift", &m, &lex, &cfg).unwrap();
        assert_eq!((g.location.as_str(), g.score), ("lift", 1.0));
        assert_eq!(g.position, Point2::new(3.5, 1.5));
        assert_eq!(ground_goal("restaurant", &m, &lex, &cfg).unwrap().location, "restaurant");
        assert_eq!(ground_goal("elevator", &m, &lex, &cfg).unwrap().location, "lift");
        let m2 = map_with(&["school", "cafe"]);
        assert_eq!(ground_goal("school", &m2, &lex, &cfg).unwrap().location, "school");
        assert!(matches!(ground_goal("dog", &m, &lex, &cfg), Err(GroundingError::NoMatch { .. })));
        assert!(matches!(ground_goal("zxqv", &m, &lex, &cfg), Err(GroundingError::UnknownWord(_))));
        assert!(matches!(ground_goal("lift", &map_with(&[]), &lex, &cfg), Err(GroundingError::EmptyMap)));
    }

    #[test]
    fn goal_ties_go_to_first_declared() {
        let lex = Lexicon::parse("a, loc, 1, 0\nb, loc, 2, 0\nq, noun, 1, 1").unwrap();
        let g = ground_goal("q", &map_with(&["b", "a"]), &lex, &GroundingConfig::default()).unwrap();
        assert_eq!(g.location, "b");
    }

    #[test]
    fn people_person_similarity_is_frozen() {
        let lex = Lexicon::shipped();
        let s = lex.cosine("people", "person").unwrap();
        assert!(s > GroundingConfig::default().constraint_threshold);
        assert!((s - PEOPLE_PERSON).abs() < 1e-12, "{s:.17}");
    }

    // Computed from the shipped lexicon file with numpy.
    const PEOPLE_PERSON: f64 = 0.994_739_508_541_486_8;

    #[test]
    fn constraint_examples() {
        let lex = Lexicon::shipped();
        let cfg = GroundingConfig::default();
        let people = vec!["people".to_string()];
        assert!(ground_constraints(&people, &DetectionFrame::default(), &lex, &cfg).is_empty());
        let frame = DetectionFrame {
            timestamp: 2.0,
            detections: vec![det(4, "person", 2.0, 1.0), det(5, "table", 1.0, 0.0)],
        };
        let g = ground_constraints(&people, &frame, &lex, &cfg);
        assert_eq!(g.len(), 1);
        assert_eq!((g[0].object_id, g[0].position, g[0].timestamp), (4, Point2::new(2.0, 1.0), 2.0));
        assert!(ground_constraints(&["zxqv".into()], &frame, &lex, &cfg).is_empty());
        let toy = Lexicon::parse("table, obj, 1, 0\nperson, obj, 0, 1").unwrap();
        let only_person = DetectionFrame { timestamp: 0.0, detections: vec![det(1, "person", 1.0, 1.0)] };
        assert!(ground_constraints(&["table".into()], &only_person, &toy, &cfg).is_empty());
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_scale_invariant(
            a in proptest::collection::vec(-1.0..1.0f64, 4),
            b in proptest::collection::vec(-1.0..1.0f64, 4),
            k in 0.01..100.0f64,
        ) {
            prop_assume!(a.iter().any(|v| v.abs() > 1e-3) && b.iter().any(|v| v.abs() > 1e-3));
            let line = |w: &str, v: &[f64]| format!("{w}, noun, {}", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
            let scaled: Vec<f64> = a.iter().map(|x| x * k).collect();
            let lex = Lexicon::parse(&[line("a", &a), line("b", &b), line("c", &scaled)].join("\n")).unwrap();
            let ab = lex.cosine("a", "b").unwrap();
            prop_assert!((ab - lex.cosine("b", "a").unwrap()).abs() < 1e-15);
            prop_assert!((ab - lex.cosine("c", "b").unwrap()).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&ab));
        }

        #[test]
        fn constraint_grounding_monotone_and_above_threshold(
            labels in proptest::collection::vec(0usize..6, 0..8),
            extra in proptest::collection::vec(0usize..6, 0..4),
        ) {
            const LABELS: [&str; 6] = ["person", "child", "table", "dog", "cart", "chair"];
            let lex = Lexicon::shipped();
            let cfg = GroundingConfig::default();
            let nouns = vec!["people".to_string(), "chair".to_string(), "kid".to_string()];
            let mk = |ls: &[usize], offset: u32| ls.iter().enumerate()
                .map(|(i, &l)| det(offset + i as u32, LABELS[l], i as f64, 0.0)).collect::<Vec<_>>();
            let small = DetectionFrame { timestamp: 0.0, detections: mk(&labels, 0) };
            let mut big = small.clone();
            big.detections.extend(mk(&extra, 100));
            let a = ground_constraints(&nouns, &small, &lex, &cfg);
            let b = ground_constraints(&nouns, &big, &lex, &cfg);
            for g in &a {
                prop_assert!(g.score > cfg.constraint_threshold);
                prop_assert!(b.iter().any(|h| h.object_id == g.object_id && h.noun == g.noun));
            }
        }

        #[test]
        fn goal_argmax_invariant_under_monotone_transform(idx in proptest::collection::vec(0usize..8, 1..6)) {
            const NAMES: [&str; 8] = ["restaurant", "cafe", "cafeteria", "school", "classroom", "lift", "hall", "lab"];
            let lex = Lexicon::shipped();
            let mut names: Vec<&str> = idx.iter().map(|&i| NAMES[i]).collect();
            names.dedup();
            let m = map_with(&names);
            let cfg = GroundingConfig { goal_threshold: -1.0, ..GroundingConfig::default() };
            let best = ground_goal("diner", &m, &lex, &cfg).unwrap().location;
            // Argmax under the strictly increasing map s -> exp(3 s) - 1, first index wins ties.
            let scores: Vec<f64> = names.iter().map(|n| (3.0 * lex.cosine("diner", n).unwrap()).exp() - 1.0).collect();
            let mut bi = 0;
            for (i, s) in scores.iter().enumerate() {
                if *s > scores[bi] { bi = i; }
            }
            prop_assert_eq!(best, names[bi]);
        }
    }
}
