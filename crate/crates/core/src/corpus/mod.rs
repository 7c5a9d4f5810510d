//! Data model for graded (prompt, response) exchanges: TSV parsing,
//! tokenization, vocabulary construction, dataset splitting, and the
//! synthetic-corpus generator.

mod synth;

pub use synth::{synthesize_corpus, SynthesisConfig};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

/// Number of joint (language, meaning) classes.
pub const NUM_CLASSES: usize = 4;

/// Reserved vocabulary entry that absorbs out-of-vocabulary words.
pub const UNKNOWN_TOKEN: &str = "<unk>";
/// Sequence-start boundary label used by boundary-wrapped language models.
pub const START_TOKEN: &str = "_start_";
/// Sequence-end boundary label used by boundary-wrapped language models.
pub const END_TOKEN: &str = "_end_";

/// One graded exchange: a written prompt, the transcript of the spoken
/// response, and the two gold correctness flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExchange {
    pub id: String,
    pub prompt: String,
    pub response: String,
    pub language_correct: bool,
    pub meaning_correct: bool,
}

impl LabeledExchange {
    pub fn gold_label(&self) -> ClassLabel {
        ClassLabel {
            language_correct: self.language_correct,
            meaning_correct: self.meaning_correct,
        }
    }

    /// Gold decision: accept only when both flags are correct.
    pub fn gold_decision(&self) -> Decision {
        if self.gold_label().accept() {
            Decision::Accept
        } else {
            Decision::Reject
        }
    }

    pub fn prompt_tokens(&self) -> Vec<String> {
        tokenize(&self.prompt)
    }

    pub fn response_tokens(&self) -> Vec<String> {
        tokenize(&self.response)
    }
}

/// Joint correctness class. Index mapping is fixed so persisted models stay
/// portable: 0=(C,C), 1=(C,I), 2=(I,C), 3=(I,I).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassLabel {
    pub language_correct: bool,
    pub meaning_correct: bool,
}

impl ClassLabel {
    pub fn new(language_correct: bool, meaning_correct: bool) -> Self {
        ClassLabel {
            language_correct,
            meaning_correct,
        }
    }

    pub fn index(self) -> usize {
        let lang = usize::from(!self.language_correct);
        let mean = usize::from(!self.meaning_correct);
        lang * 2 + mean
    }

    pub fn from_index(index: usize) -> Result<Self> {
        if index >= NUM_CLASSES {
            return Err(Error::validation(format!(
                "class index {index} out of range 0..{NUM_CLASSES}"
            )));
        }
        Ok(ClassLabel {
            language_correct: index / 2 == 0,
            meaning_correct: index % 2 == 0,
        })
    }

    /// Accept is reserved for the fully-correct class (index 0).
    pub fn accept(self) -> bool {
        self.language_correct && self.meaning_correct
    }

    pub fn all() -> [ClassLabel; NUM_CLASSES] {
        [
            ClassLabel::new(true, true),
            ClassLabel::new(true, false),
            ClassLabel::new(false, true),
            ClassLabel::new(false, false),
        ]
    }
}

/// Binary grading decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        matches!(self, Decision::Accept)
    }
}

#[derive(Serialize, Deserialize, Clone)]
struct VocabularyData {
    words: Vec<String>,
    unknown_index: usize,
}

/// Ordered word list with a reserved unknown entry.
///
/// Indices are contiguous from 0; the unknown token is always present and
/// collects every out-of-vocabulary lookup.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, usize>,
    unknown_index: usize,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.unknown_index == other.unknown_index
    }
}

impl From<VocabularyData> for Vocabulary {
    fn from(data: VocabularyData) -> Self {
        let index = data
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words: data.words,
            index,
            unknown_index: data.unknown_index,
        }
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        VocabularyData {
            words: v.words,
            unknown_index: v.unknown_index,
        }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from a token corpus, keeping words with frequency
    /// at least `min_count`, ordered by descending frequency then
    /// lexicographically. The unknown token is appended last.
    pub fn build(corpus: &[Vec<String>], min_count: usize) -> Result<Self> {
        Self::build_inner(corpus, min_count, false)
    }

    /// Like [`Vocabulary::build`] but guarantees the boundary labels
    /// `_start_` and `_end_` are present even if absent from the corpus.
    pub fn build_with_boundaries(corpus: &[Vec<String>], min_count: usize) -> Result<Self> {
        Self::build_inner(corpus, min_count, true)
    }

    fn build_inner(corpus: &[Vec<String>], min_count: usize, boundaries: bool) -> Result<Self> {
        if min_count < 1 {
            return Err(Error::validation("min_count must be >= 1"));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for seq in corpus {
            for tok in seq {
                // The reserved literal never counts as a regular word.
                if tok == UNKNOWN_TOKEN {
                    continue;
                }
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut words: Vec<String> = ranked.into_iter().map(|(w, _)| w.to_string()).collect();
        let unknown_index = words.len();
        words.push(UNKNOWN_TOKEN.to_string());
        if boundaries {
            for tok in [START_TOKEN, END_TOKEN] {
                if !words.iter().any(|w| w == tok) {
                    words.push(tok.to_string());
                }
            }
        }

        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Ok(Vocabulary {
            words,
            index,
            unknown_index,
        })
    }

    /// Builds directly from an explicit word list (unknown appended last).
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut out: Vec<String> = Vec::new();
        for w in words {
            let w = w.into();
            if w != UNKNOWN_TOKEN && !out.contains(&w) {
                out.push(w);
            }
        }
        let unknown_index = out.len();
        out.push(UNKNOWN_TOKEN.to_string());
        let index = out
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words: out,
            index,
            unknown_index,
        }
    }

    /// Total number of entries, including the unknown token.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        // The unknown entry is always present.
        false
    }

    pub fn unknown_index(&self) -> usize {
        self.unknown_index
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Index lookup that falls back to the unknown entry.
    pub fn index_or_unknown(&self, word: &str) -> usize {
        self.index_of(word).unwrap_or(self.unknown_index)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Per-prompt list of known-correct responses, stored tokenized.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGrammar {
    entries: BTreeMap<String, Vec<Vec<String>>>,
}

impl ReferenceGrammar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prompt_id: impl Into<String>, tokens: Vec<String>) {
        self.entries.entry(prompt_id.into()).or_default().push(tokens);
    }

    pub fn entries_for(&self, prompt_id: &str) -> Option<&[Vec<String>]> {
        self.entries.get(prompt_id).map(Vec::as_slice)
    }

    pub fn prompt_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads the grammar TSV: `prompt-id \t correct-response`, one entry per
    /// line, repeated prompt ids allowed. Responses are tokenized on load.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut grammar = ReferenceGrammar::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.splitn(2, '\t');
            let id = fields.next().unwrap_or_default();
            let response = fields
                .next()
                .ok_or_else(|| Error::parse(i + 1, "expected 2 tab-separated fields"))?;
            if id.is_empty() {
                return Err(Error::parse(i + 1, "empty prompt id"));
            }
            grammar.insert(id, tokenize(response));
        }
        Ok(grammar)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, entries) in &self.entries {
            for tokens in entries {
                out.push_str(id);
                out.push('\t');
                out.push_str(&tokens.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// Punctuation stripped from token edges.
const EDGE_PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', '(', ')'];

/// Lowercases, splits on whitespace, strips leading/trailing punctuation per
/// token, and drops tokens that end up empty.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|tok| tok.trim_matches(EDGE_PUNCTUATION))
        .filter(|tok| !tok.is_empty())
        .map(str::to_string)
        .collect()
}

/// Parses a dataset TSV with columns `id, prompt, response, language(0/1),
/// meaning(0/1)`. Row numbers in errors are 1-based.
pub fn parse_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledExchange>> {
    let text = fs::read_to_string(path)?;
    parse_dataset_str(&text)
}

pub fn parse_dataset_str(text: &str) -> Result<Vec<LabeledExchange>> {
    let mut out = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(Error::parse(
                row,
                format!("expected 5 tab-separated fields, got {}", fields.len()),
            ));
        }
        let id = fields[0];
        if id.is_empty() {
            return Err(Error::parse(row, "empty id"));
        }
        if !seen.insert(id) {
            return Err(Error::validation(format!(
                "duplicate exchange id `{id}` at line {row}"
            )));
        }
        let flag = |s: &str, name: &str| -> Result<bool> {
            match s {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::parse(
                    row,
                    format!("{name} flag must be 0 or 1, got `{other}`"),
                )),
            }
        };
        out.push(LabeledExchange {
            id: id.to_string(),
            prompt: fields[1].to_string(),
            response: fields[2].to_string(),
            language_correct: flag(fields[3], "language")?,
            meaning_correct: flag(fields[4], "meaning")?,
        });
    }
    Ok(out)
}

/// Serializes exchanges back to the dataset TSV format.
pub fn dataset_to_tsv(dataset: &[LabeledExchange]) -> String {
    let mut out = String::new();
    for ex in dataset {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            ex.id,
            ex.prompt,
            ex.response,
            u8::from(ex.language_correct),
            u8::from(ex.meaning_correct)
        ));
    }
    out
}

pub fn write_dataset(path: impl AsRef<Path>, dataset: &[LabeledExchange]) -> Result<()> {
    fs::write(path, dataset_to_tsv(dataset))?;
    Ok(())
}

/// Uniform random partition without replacement. `|train| =
/// round(train_fraction * N)`; both sides preserve the input order.
pub fn split(
    dataset: &[LabeledExchange],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledExchange>, Vec<LabeledExchange>)> {
    if dataset.is_empty() {
        return Err(Error::validation("cannot split an empty dataset"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::validation(format!(
            "train fraction must lie in (0,1), got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let n_train = ((train_fraction * n as f64).round() as usize).min(n);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    order.shuffle(&mut rng);

    let mut in_train = vec![false; n];
    for &i in order.iter().take(n_train) {
        in_train[i] = true;
    }
    let mut train = Vec::with_capacity(n_train);
    let mut validation = Vec::with_capacity(n - n_train);
    for (i, ex) in dataset.iter().enumerate() {
        if in_train[i] {
            train.push(ex.clone());
        } else {
            validation.push(ex.clone());
        }
    }
    Ok((train, validation))
}
