//! Synthetic labeled phrase corpus generated from a template grammar.

use super::{normalize, split_phrases, Label, TextError};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

/// The grammar shipped with the crate.
pub const DEFAULT_GRAMMAR: &str = include_str!("../../../../assets/grammar.toml");

/// Minimum phrase count in the test split once the corpus has 500+ instructions.
const MIN_TEST_PHRASES: usize = 300;
const MIN_INSTRUCTIONS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Templates {
    pub goal: Vec<String>,
    pub constraint: Vec<String>,
    pub filler: Vec<String>,
}

impl Templates {
    pub fn for_label(&self, label: Label) -> &[String] {
        match label {
            Label::Goal => &self.goal,
            Label::Constraint => &self.constraint,
            Label::Uninformative => &self.filler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grammar {
    /// Probability of 0, 1, 2, ... constraint phrases per instruction.
    pub constraint_count_weights: Vec<f64>,
    /// Probability of 0, 1, 2, ... filler phrases per instruction.
    pub filler_count_weights: Vec<f64>,
    pub joiners: Vec<String>,
    pub test_fraction: f64,
    pub slots: BTreeMap<String, Vec<String>>,
    pub templates: Templates,
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let g: Grammar = toml::from_str(text).map_err(|e| TextError::Grammar(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Io(e.to_string()))?;
        Self::parse(&text)
    }

    pub fn shipped() -> Self {
        Self::parse(DEFAULT_GRAMMAR).expect("shipped grammar is valid")
    }

    fn validate(&self) -> Result<(), TextError> {
        let err = |m: String| Err(TextError::Grammar(m));
        for (name, w) in [
            ("constraint_count_weights", &self.constraint_count_weights),
            ("filler_count_weights", &self.filler_count_weights),
        ] {
            if w.is_empty() || w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return err(format!("{name} must be non-negative with positive sum"));
            }
        }
        if self.joiners.is_empty() {
            return err("no joiners".into());
        }
        if !(0.0..1.0).contains(&self.test_fraction) || self.test_fraction == 0.0 {
            return err("test_fraction must be in (0, 1)".into());
        }
        for label in Label::ALL {
            if self.templates.for_label(label).is_empty() {
                return err(format!("no {label} templates"));
            }
        }
        for (slot, values) in &self.slots {
            for v in values {
                let norm = normalize(v).map_err(|_| TextError::Grammar(format!("empty value in slot {slot}")))?;
                if norm.split_whitespace().any(super::is_separator) {
                    return err(format!("slot {slot} value {v:?} contains a separator"));
                }
            }
        }
        for label in Label::ALL {
            for t in self.templates.for_label(label) {
                for slot in template_slots(t) {
                    if self.slots.get(slot).is_none_or(|v| v.is_empty()) {
                        return err(format!("template {t:?} uses unknown slot {{{slot}}}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Number of phrases a template yields after splitting (slot values never split).
    pub fn fragments_of(&self, template: &str) -> usize {
        let mut text = template.to_owned();
        for slot in template_slots(template) {
            text = text.replacen(&format!("{{{slot}}}"), "x", 1);
        }
        normalize(&text)
            .ok()
            .and_then(|n| split_phrases(&n).ok())
            .map_or(0, |p| p.len())
    }
}

fn template_slots(template: &str) -> Vec<&str> {
    let mut slots = Vec::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else { break };
        slots.push(&rest[start + 1..start + len]);
        rest = &rest[start + len + 1..];
    }
    slots
}

/// A labeled phrase surface as stored in a corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub text: String,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One line of the corpus file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub phrase: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub seed: u64,
    pub train: Vec<CorpusEntry>,
    pub test: Vec<CorpusEntry>,
    /// The instructions the phrases came from, in generation order.
    pub instructions: Vec<String>,
}

impl Corpus {
    pub fn label_counts(entries: &[CorpusEntry]) -> [usize; 3] {
        let mut counts = [0; 3];
        for e in entries {
            counts[e.label.index()] += 1;
        }
        counts
    }

    pub fn train_counts(&self) -> [usize; 3] {
        Self::label_counts(&self.train)
    }

    pub fn test_counts(&self) -> [usize; 3] {
        Self::label_counts(&self.test)
    }

    pub fn records(&self) -> impl Iterator<Item = CorpusRecord> + '_ {
        let tag = |split| {
            move |e: &CorpusEntry| CorpusRecord {
                phrase: e.text.clone(),
                label: e.label,
                split: Some(split),
            }
        };
        self.train
            .iter()
            .map(tag(Split::Train))
            .chain(self.test.iter().map(tag(Split::Test)))
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<(), TextError> {
        for rec in self.records() {
            let line = serde_json::to_string(&rec).map_err(|e| TextError::Io(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| TextError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TextError> {
        let file = std::fs::File::create(path).map_err(|e| TextError::Io(e.to_string()))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_jsonl(&mut w)?;
        w.flush().map_err(|e| TextError::Io(e.to_string()))
    }

    /// Read a corpus file. Records without a `split` field go to training.
    pub fn read_jsonl(input: impl BufRead) -> Result<Self, TextError> {
        let mut corpus = Corpus {
            seed: 0,
            train: Vec::new(),
            test: Vec::new(),
            instructions: Vec::new(),
        };
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| TextError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CorpusRecord = serde_json::from_str(&line)
                .map_err(|e| TextError::Corpus(format!("line {}: {e}", lineno + 1)))?;
            let entry = CorpusEntry {
                text: rec.phrase,
                label: rec.label,
            };
            match rec.split.unwrap_or(Split::Train) {
                Split::Train => corpus.train.push(entry),
                Split::Test => corpus.test.push(entry),
            }
        }
        if corpus.train.is_empty() {
            return Err(TextError::Corpus("no training records".into()));
        }
        Ok(corpus)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TextError> {
        let file = std::fs::File::open(path).map_err(|e| TextError::Io(e.to_string()))?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }
}

fn fill_template(template: &str, grammar: &Grammar, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut used: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        let len = rest[start..].find('}').expect("validated template");
        out.push_str(&rest[..start]);
        let slot = &rest[start + 1..start + len];
        let values = &grammar.slots[slot];
        let taken = used.entry(slot).or_default();
        // Distinct values within one template when possible ("table and chairs").
        let mut pick = rng.random_range(0..values.len());
        if taken.len() < values.len() {
            while taken.contains(&pick) {
                pick = rng.random_range(0..values.len());
            }
        }
        taken.push(pick);
        out.push_str(&values[pick]);
        rest = &rest[start + len + 1..];
    }
    out.push_str(rest);
    out
}

fn distinct_words(s: &str) -> Vec<&str> {
    let mut words: Vec<&str> = s.split_whitespace().collect();
    words.sort_unstable();
    words.dedup();
    words
}

/// Expand the grammar into `n_instructions` instructions and split the
/// resulting phrases into disjoint train/test sets of surface strings.
pub fn generate_corpus(
    grammar: &Grammar,
    seed: u64,
    n_instructions: usize,
) -> Result<Corpus, TextError> {
    if n_instructions < MIN_INSTRUCTIONS {
        return Err(TextError::Corpus(format!(
            "need at least {MIN_INSTRUCTIONS} instructions, got {n_instructions}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_constraints = WeightedIndex::new(&grammar.constraint_count_weights)
        .map_err(|e| TextError::Grammar(e.to_string()))?;
    let n_fillers = WeightedIndex::new(&grammar.filler_count_weights)
        .map_err(|e| TextError::Grammar(e.to_string()))?;

    let mut occurrences: Vec<CorpusEntry> = Vec::new();
    let mut instructions = Vec::with_capacity(n_instructions);
    for _ in 0..n_instructions {
        let mut parts: Vec<(String, Label)> = Vec::new();
        let goal = grammar.templates.goal.choose(&mut rng).expect("non-empty");
        parts.push((fill_template(goal, grammar, &mut rng), Label::Goal));
        for _ in 0..n_constraints.sample(&mut rng) {
            let t = grammar.templates.constraint.choose(&mut rng).expect("non-empty");
            parts.push((fill_template(t, grammar, &mut rng), Label::Constraint));
        }
        for _ in 0..n_fillers.sample(&mut rng) {
            let t = grammar.templates.filler.choose(&mut rng).expect("non-empty");
            parts.push((fill_template(t, grammar, &mut rng), Label::Uninformative));
        }
        parts.shuffle(&mut rng);

        let mut sentence = String::new();
        for (i, (text, label)) in parts.iter().enumerate() {
            if i > 0 {
                sentence.push_str(grammar.joiners.choose(&mut rng).expect("non-empty"));
            }
            sentence.push_str(text);
            let norm = normalize(text)?;
            for fragment in split_phrases(&norm)? {
                occurrences.push(CorpusEntry {
                    text: fragment,
                    label: *label,
                });
            }
        }
        instructions.push(sentence);
    }

    // Assign whole surface strings to one split so train and test are disjoint.
    let mut surfaces: Vec<&str> = Vec::new();
    let mut seen = HashMap::new();
    for e in &occurrences {
        seen.entry(e.text.as_str()).or_insert_with(|| {
            surfaces.push(e.text.as_str());
        });
    }
    let mut frequency: HashMap<&str, usize> = HashMap::new();
    for e in &occurrences {
        *frequency.entry(e.text.as_str()).or_default() += 1;
    }
    surfaces.shuffle(&mut rng);

    let mut target = (grammar.test_fraction * occurrences.len() as f64).ceil() as usize;
    if n_instructions >= 500 {
        target = target.max(MIN_TEST_PHRASES);
    }
    // A surface may move to test only while each of its words keeps at least
    // one training surface, so test phrases are novel combinations of known words.
    let mut word_surfaces: HashMap<&str, usize> = HashMap::new();
    for s in &surfaces {
        for w in distinct_words(s) {
            *word_surfaces.entry(w).or_default() += 1;
        }
    }
    let mut in_test: HashMap<&str, bool> = HashMap::new();
    let mut test_total = 0;
    for s in &surfaces {
        let words = distinct_words(s);
        let to_test = test_total < target && words.iter().all(|w| word_surfaces[w] >= 2);
        if to_test {
            test_total += frequency[s];
            for w in words {
                *word_surfaces.get_mut(w).expect("counted") -= 1;
            }
        }
        in_test.insert(s, to_test);
    }

    let (test, train): (Vec<_>, Vec<_>) = occurrences
        .iter()
        .cloned()
        .partition(|e| in_test[e.text.as_str()]);
    let corpus = Corpus {
        seed,
        train,
        test,
        instructions,
    };
    for (name, counts) in [("train", corpus.train_counts()), ("test", corpus.test_counts())] {
        if counts.contains(&0) {
            return Err(TextError::Corpus(format!(
                "{name} split is missing a class: {counts:?}"
            )));
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn shipped_grammar_parses() {
        let g = Grammar::shipped();
        assert!(g.templates.goal.iter().all(|t| g.fragments_of(t) == 1));
        assert_eq!(g.fragments_of("watch out the {object} and {object}"), 2);
    }

    #[test]
    fn rejects_tiny_request() {
        assert!(generate_corpus(&Grammar::shipped(), 1, 9).is_err());
    }

    #[test]
    fn seed_7_has_large_test_split() {
        let c = generate_corpus(&Grammar::shipped(), 7, 500).unwrap();
        assert!(c.test.len() >= 300, "test split {}", c.test.len());
        assert_eq!(c.instructions.len(), 500);
    }

    #[test]
    fn splits_are_disjoint_and_non_empty() {
        let c = generate_corpus(&Grammar::shipped(), 3, 200).unwrap();
        let train: HashSet<_> = c.train.iter().map(|e| &e.text).collect();
        assert!(c.test.iter().all(|e| !train.contains(&e.text)));
        assert!(c.train_counts().iter().all(|&n| n > 0));
        assert!(c.test_counts().iter().all(|&n| n > 0));
    }

    #[test]
    fn deterministic_per_seed() {
        let g = Grammar::shipped();
        let a = generate_corpus(&g, 11, 100).unwrap();
        let b = generate_corpus(&g, 11, 100).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_jsonl(&mut ba).unwrap();
        b.write_jsonl(&mut bb).unwrap();
        assert_eq!(ba, bb);
        let c = generate_corpus(&g, 12, 100).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn label_histogram_matches_mixing_weights() {
        let g = Grammar::shipped();
        let c = generate_corpus(&g, 7, 500).unwrap();
        // Expected phrases per instruction, from the weights and per-template fragment counts.
        let mean_count = |w: &[f64]| {
            let total: f64 = w.iter().sum();
            w.iter().enumerate().map(|(k, p)| k as f64 * p / total).sum::<f64>()
        };
        let mean_frags = |ts: &[String]| {
            ts.iter().map(|t| g.fragments_of(t) as f64).sum::<f64>() / ts.len() as f64
        };
        let expected = [
            mean_frags(&g.templates.goal),
            mean_count(&g.constraint_count_weights) * mean_frags(&g.templates.constraint),
            mean_count(&g.filler_count_weights) * mean_frags(&g.templates.filler),
        ];
        let total_expected: f64 = expected.iter().sum();
        let mut counts = c.train_counts();
        for (i, n) in c.test_counts().iter().enumerate() {
            counts[i] += n;
        }
        let total: usize = counts.iter().sum();
        for i in 0..3 {
            let observed = counts[i] as f64 / total as f64;
            let want = expected[i] / total_expected;
            assert!(
                (observed - want).abs() <= 0.05,
                "class {i}: observed {observed:.3}, expected {want:.3}"
            );
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let c = generate_corpus(&Grammar::shipped(), 5, 50).unwrap();
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let back = Corpus::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back.train, c.train);
        assert_eq!(back.test, c.test);
        let first = std::str::from_utf8(&buf).unwrap().lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(first).unwrap();
        assert!(v["phrase"].is_string());
        assert!(["goal", "constraint", "uninformative"].contains(&v["label"].as_str().unwrap()));
    }

    #[test]
    fn records_without_split_are_training() {
        let data = "{\"phrase\": \"go home\", \"label\": \"goal\"}\n";
        let c = Corpus::read_jsonl(data.as_bytes()).unwrap();
        assert_eq!(c.train.len(), 1);
        assert!(c.test.is_empty());
    }
}
