//! Synthetic-corpus generator.
//!
//! Stands in for non-redistributable challenge data: every prompt gets a
//! canonical correct response; emitted responses are either canonical,
//! language-corrupted (swap/drop/duplicate), meaning-corrupted (content
//! words replaced by another prompt's), or both, drawn per the configured
//! rates. Prompt and response surface vocabularies are disjoint.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LabeledExchange, ReferenceGrammar};
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

/// Parameters for [`synthesize_corpus`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisConfig {
    /// Distinct surface words available to prompts.
    pub prompt_vocab_size: usize,
    /// Distinct surface words available to responses (function + content).
    pub response_vocab_size: usize,
    pub num_prompts: usize,
    pub responses_per_prompt: usize,
    /// Probability that an emitted response carries a language corruption.
    pub language_error_rate: f64,
    /// Probability that an emitted response carries a meaning corruption.
    pub meaning_error_rate: f64,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            prompt_vocab_size: 30,
            response_vocab_size: 60,
            num_prompts: 20,
            responses_per_prompt: 50,
            language_error_rate: 0.3,
            meaning_error_rate: 0.2,
            seed: 0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("language_error_rate", self.language_error_rate),
            ("meaning_error_rate", self.meaning_error_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::validation(format!(
                    "{name} must lie in [0,1], got {rate}"
                )));
            }
        }
        for (name, size) in [
            ("prompt_vocab_size", self.prompt_vocab_size),
            ("response_vocab_size", self.response_vocab_size),
            ("num_prompts", self.num_prompts),
            ("responses_per_prompt", self.responses_per_prompt),
        ] {
            if size < 1 {
                return Err(Error::validation(format!("{name} must be >= 1")));
            }
        }
        if self.response_vocab_size < 6 {
            return Err(Error::validation(
                "response_vocab_size must be >= 6 (function + content words)",
            ));
        }
        Ok(())
    }
}

/// Prompt-id of an exchange: the id prefix before the last `-`, or the whole
/// id when there is none. Synthetic ids follow `<prompt-id>-r<counter>`.
pub(crate) fn prompt_id_of(exchange_id: &str) -> &str {
    match exchange_id.rfind('-') {
        Some(pos) => &exchange_id[..pos],
        None => exchange_id,
    }
}

struct PromptTemplate {
    id: String,
    prompt_tokens: Vec<String>,
    canonical: Vec<String>,
    /// Positions in `canonical` holding content words.
    content_positions: Vec<usize>,
    content_words: Vec<String>,
}

/// Generates a labeled dataset and its reference grammar.
pub fn synthesize_corpus(
    config: &SynthesisConfig,
) -> Result<(Vec<LabeledExchange>, ReferenceGrammar)> {
    config.validate()?;
    let mut rng = rng_from_seed(config.seed);

    // Distinct consonant alphabets keep the two surface vocabularies disjoint.
    let mut taken = HashSet::new();
    let prompt_words = make_words(&mut rng, config.prompt_vocab_size, "gjkqvwz", &mut taken);
    let response_words = make_words(&mut rng, config.response_vocab_size, "bdflmnprst", &mut taken);

    let function_count = (config.response_vocab_size / 5).clamp(2, 8);
    let (function_words, content_pool) = response_words.split_at(function_count);

    let templates = build_templates(
        &mut rng,
        config.num_prompts,
        &prompt_words,
        function_words,
        content_pool,
    );

    let mut grammar = ReferenceGrammar::new();
    for t in &templates {
        grammar.insert(t.id.clone(), t.canonical.clone());
    }

    let mut dataset = Vec::with_capacity(config.num_prompts * config.responses_per_prompt);
    for (pi, t) in templates.iter().enumerate() {
        for r in 0..config.responses_per_prompt {
            let language_error = rng.random::<f64>() < config.language_error_rate;
            let meaning_error = rng.random::<f64>() < config.meaning_error_rate;

            let mut tokens = t.canonical.clone();
            if meaning_error {
                corrupt_meaning(&mut rng, &mut tokens, t, pi, &templates);
            }
            if language_error {
                corrupt_language(&mut rng, &mut tokens);
            }

            dataset.push(LabeledExchange {
                id: format!("{}-r{:04}", t.id, r),
                prompt: t.prompt_tokens.join(" "),
                response: tokens.join(" "),
                language_correct: !language_error,
                meaning_correct: !meaning_error,
            });
        }
    }
    Ok((dataset, grammar))
}

fn make_words(
    rng: &mut ChaCha8Rng,
    count: usize,
    consonants: &str,
    taken: &mut HashSet<String>,
) -> Vec<String> {
    let consonants: Vec<char> = consonants.chars().collect();
    let vowels: Vec<char> = "aeiou".chars().collect();
    let mut words = Vec::with_capacity(count);
    while words.len() < count {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(consonants[rng.random_range(0..consonants.len())]);
            w.push(vowels[rng.random_range(0..vowels.len())]);
        }
        if taken.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

fn build_templates(
    rng: &mut ChaCha8Rng,
    num_prompts: usize,
    prompt_words: &[String],
    function_words: &[String],
    content_pool: &[String],
) -> Vec<PromptTemplate> {
    let mut templates = Vec::with_capacity(num_prompts);
    let mut next_content = 0usize;
    for i in 0..num_prompts {
        // Anchor word ties each prompt to a stable surface form.
        let anchor = prompt_words[i % prompt_words.len()].clone();
        let extra = rng.random_range(2..=4);
        let mut prompt_tokens = vec![anchor];
        for _ in 0..extra {
            prompt_tokens.push(prompt_words[rng.random_range(0..prompt_words.len())].clone());
        }

        // Draw content words round-robin so prompts get disjoint content
        // sets whenever the pool is large enough.
        let content_count = rng.random_range(2..=3);
        let mut content_words = Vec::with_capacity(content_count);
        for _ in 0..content_count {
            content_words.push(content_pool[next_content % content_pool.len()].clone());
            next_content += 1;
        }

        // Canonical form interleaves function and content words.
        let mut canonical = Vec::new();
        let mut content_positions = Vec::new();
        for (k, cw) in content_words.iter().enumerate() {
            canonical.push(function_words[rng.random_range(0..function_words.len())].clone());
            if k == 0 {
                canonical.push(function_words[rng.random_range(0..function_words.len())].clone());
            }
            content_positions.push(canonical.len());
            canonical.push(cw.clone());
        }

        templates.push(PromptTemplate {
            id: format!("p{i:04}"),
            prompt_tokens,
            canonical,
            content_positions,
            content_words,
        });
    }
    templates
}

fn corrupt_meaning(
    rng: &mut ChaCha8Rng,
    tokens: &mut [String],
    own: &PromptTemplate,
    own_index: usize,
    templates: &[PromptTemplate],
) {
    if templates.len() < 2 {
        // Single-prompt corpus: fall back to reversing the content words so
        // the surface form still changes.
        for (k, &pos) in own.content_positions.iter().enumerate() {
            let donor = &own.content_words[own.content_words.len() - 1 - k];
            tokens[pos] = donor.clone();
        }
        return;
    }
    // Pick a donor prompt with different content words.
    let mut donor_index = rng.random_range(0..templates.len());
    for _ in 0..8 {
        if donor_index != own_index && templates[donor_index].content_words != own.content_words {
            break;
        }
        donor_index = rng.random_range(0..templates.len());
    }
    if donor_index == own_index {
        donor_index = (own_index + 1) % templates.len();
    }
    let donor = &templates[donor_index];
    for (k, &pos) in own.content_positions.iter().enumerate() {
        tokens[pos] = donor.content_words[k % donor.content_words.len()].clone();
    }
}

fn corrupt_language(rng: &mut ChaCha8Rng, tokens: &mut Vec<String>) {
    match rng.random_range(0..3u32) {
        0 => {
            // Swap an adjacent pair of distinct words.
            let candidates: Vec<usize> = (0..tokens.len().saturating_sub(1))
                .filter(|&i| tokens[i] != tokens[i + 1])
                .collect();
            if let Some(&i) = pick(rng, &candidates) {
                tokens.swap(i, i + 1);
            } else {
                // Degenerate all-equal sequence: duplicating still changes it.
                let i = rng.random_range(0..tokens.len());
                let w = tokens[i].clone();
                tokens.insert(i, w);
            }
        }
        1 if tokens.len() >= 2 => {
            let i = rng.random_range(0..tokens.len());
            tokens.remove(i);
        }
        _ => {
            let i = rng.random_range(0..tokens.len());
            let w = tokens[i].clone();
            tokens.insert(i, w);
        }
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, slice: &'a [T]) -> Option<&'a T> {
    if slice.is_empty() {
        None
    } else {
        slice.get(rng.random_range(0..slice.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    #[test]
    fn zero_rates_yield_all_correct_and_grammar_matches() {
        let config = SynthesisConfig {
            language_error_rate: 0.0,
            meaning_error_rate: 0.0,
            num_prompts: 5,
            responses_per_prompt: 10,
            seed: 3,
            ..SynthesisConfig::default()
        };
        let (dataset, grammar) = synthesize_corpus(&config).unwrap();
        assert_eq!(dataset.len(), 50);
        for ex in &dataset {
            assert!(ex.language_correct && ex.meaning_correct);
            let entries = grammar.entries_for(prompt_id_of(&ex.id)).unwrap();
            let tokens = tokenize(&ex.response);
            assert!(
                entries.iter().any(|e| e == &tokens),
                "response `{}` must match a grammar entry",
                ex.response
            );
        }
    }

    #[test]
    fn full_language_rate_marks_every_exchange() {
        let config = SynthesisConfig {
            language_error_rate: 1.0,
            meaning_error_rate: 0.0,
            num_prompts: 4,
            responses_per_prompt: 8,
            seed: 9,
            ..SynthesisConfig::default()
        };
        let (dataset, grammar) = synthesize_corpus(&config).unwrap();
        for ex in &dataset {
            assert!(!ex.language_correct && ex.meaning_correct);
            // The corrupted surface must differ from every grammar entry.
            let entries = grammar.entries_for(prompt_id_of(&ex.id)).unwrap();
            let tokens = tokenize(&ex.response);
            assert!(entries.iter().all(|e| e != &tokens));
        }
    }

    #[test]
    fn empirical_rates_track_config() {
        let config = SynthesisConfig {
            language_error_rate: 0.3,
            meaning_error_rate: 0.2,
            num_prompts: 20,
            responses_per_prompt: 50,
            seed: 42,
            ..SynthesisConfig::default()
        };
        let (dataset, _) = synthesize_corpus(&config).unwrap();
        assert_eq!(dataset.len(), 1000);
        let lang_err =
            dataset.iter().filter(|e| !e.language_correct).count() as f64 / dataset.len() as f64;
        let mean_err =
            dataset.iter().filter(|e| !e.meaning_correct).count() as f64 / dataset.len() as f64;
        assert!((lang_err - 0.3).abs() < 0.05, "language rate {lang_err}");
        assert!((mean_err - 0.2).abs() < 0.05, "meaning rate {mean_err}");
    }

    #[test]
    fn deterministic_given_seed() {
        let config = SynthesisConfig {
            seed: 11,
            ..SynthesisConfig::default()
        };
        let (d1, g1) = synthesize_corpus(&config).unwrap();
        let (d2, g2) = synthesize_corpus(&config).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn ids_are_unique() {
        let (dataset, _) = synthesize_corpus(&SynthesisConfig::default()).unwrap();
        let mut ids: Vec<&str> = dataset.iter().map(|e| e.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), dataset.len());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = SynthesisConfig::default();
        c.language_error_rate = 1.5;
        assert!(synthesize_corpus(&c).is_err());
        let mut c = SynthesisConfig::default();
        c.num_prompts = 0;
        assert!(synthesize_corpus(&c).is_err());
    }
}
