//! Synthetic audit corpora.
//!
//! Two generators:
//!
//! * [`gen_synthetic`] — multi-domain corpora where each domain has a
//!   distinct keyword vocabulary (so routing is learnable) and a distinct
//!   log-linear ground-truth rule
//!   `ln(y) = a_d + b_d ln(1+input_len) + c_d ln(1+output_len) + noise`,
//!   published alongside the samples so tests can score predictors against
//!   the exact rule.
//! * [`gen_content_driven`] — a corpus where every prompt and answer has the
//!   same token count and the count is driven purely by difficulty keywords;
//!   length-only predictors are blind on it by construction.
//!
//! Each sample draws from its own RNG stream derived from the master seed,
//! so generation is deterministic regardless of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::sample::AuditSample;
use crate::hashing::mix_seed;

/// Shared filler vocabulary, domain-neutral.
const FILLER: &[&str] = &[
    "please", "consider", "the", "following", "and", "explain", "carefully", "result", "value",
    "given", "find", "show", "that", "with", "for", "then", "what", "would", "happen", "state",
];

/// Per-domain keyword vocabularies. Disjoint by construction.
const DOMAIN_WORDS: &[(&str, &[&str])] = &[
    (
        "general",
        &[
            "summarize", "opinion", "history", "culture", "describe", "compare", "argue",
            "story", "daily", "travel", "advice", "custom", "tradition", "letter", "review",
            "plan",
        ],
    ),
    (
        "math",
        &[
            "integral", "polynomial", "theorem", "matrix", "prime", "algebra", "geometry",
            "derivative", "vertex", "modulo", "fraction", "equation", "lemma", "angle",
            "median", "proof",
        ],
    ),
    (
        "coding",
        &[
            "function", "compile", "array", "python", "loop", "debug", "recursion", "string",
            "pointer", "runtime", "refactor", "module", "binary", "stack", "thread", "syntax",
        ],
    ),
    (
        "medical",
        &[
            "symptom", "diagnosis", "patient", "dosage", "therapy", "infection", "chronic",
            "syndrome", "antibody", "lesion", "prognosis", "clinical", "vaccine", "biopsy",
            "tumor", "renal",
        ],
    ),
];

/// Log-linear ground-truth coefficients per built-in domain. Extra domains
/// beyond these get procedurally shifted copies.
const DOMAIN_COEFS: &[(f64, f64, f64)] = &[
    (3.4, 0.55, 0.45), // general
    (3.9, 0.70, 0.35), // math
    (3.0, 0.40, 0.75), // coding
    (3.8, 0.45, 0.35), // medical
];

/// Parameters of one synthetic corpus; the same spec always yields a
/// byte-identical dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub domain_count: usize,
    pub samples_per_domain: usize,
    pub seed: u64,
    /// Standard deviation of the log-space noise on the count rule.
    pub noise_scale: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            domain_count: 4,
            samples_per_domain: 1000,
            seed: 7,
            noise_scale: 0.15,
        }
    }
}

/// Published ground-truth rule for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRule {
    pub domain: String,
    pub intercept: f64,
    pub input_coef: f64,
    pub output_coef: f64,
}

impl DomainRule {
    /// Noise-free ln-count under the rule.
    pub fn ln_count(&self, input_len: u64, output_len: u64) -> f64 {
        self.intercept
            + self.input_coef * (1.0 + input_len as f64).ln()
            + self.output_coef * (1.0 + output_len as f64).ln()
    }

    /// Noise-free count, rounded and clamped to at least 1.
    pub fn count(&self, input_len: u64, output_len: u64) -> u64 {
        self.ln_count(input_len, output_len).exp().round().max(1.0) as u64
    }
}

/// Samples plus the header describing how they were produced.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub spec: SyntheticSpec,
    pub rules: Vec<DomainRule>,
    #[serde(skip)]
    pub samples: Vec<AuditSample>,
}

fn domain_name(idx: usize) -> String {
    if idx < DOMAIN_WORDS.len() {
        DOMAIN_WORDS[idx].0.to_string()
    } else {
        format!("domain{idx}")
    }
}

fn domain_vocab(idx: usize) -> Vec<String> {
    if idx < DOMAIN_WORDS.len() {
        DOMAIN_WORDS[idx].1.iter().map(|w| w.to_string()).collect()
    } else {
        (0..16).map(|k| format!("field{idx}term{k}")).collect()
    }
}

fn domain_rule(idx: usize) -> DomainRule {
    let (intercept, input_coef, output_coef) = if idx < DOMAIN_COEFS.len() {
        DOMAIN_COEFS[idx]
    } else {
        // Shift procedurally generated domains around the general rule.
        let k = (idx - DOMAIN_COEFS.len() + 1) as f64;
        (3.4 + 0.2 * k, 0.55 - 0.03 * k, 0.45 + 0.02 * k)
    };
    DomainRule {
        domain: domain_name(idx),
        intercept,
        input_coef,
        output_coef,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &'a [String]) -> &'a str {
    &words[rng.random_range(0..words.len())]
}

fn pick_static(rng: &mut ChaCha8Rng, words: &[&'static str]) -> &'static str {
    words[rng.random_range(0..words.len())]
}

fn build_prompt(rng: &mut ChaCha8Rng, domain_idx: usize, vocab: &[String]) -> String {
    let total_words = rng.random_range(8..=96usize);
    let keyword_slots = rng.random_range(3..=8usize).min(total_words);
    let mut words: Vec<String> = Vec::with_capacity(total_words + 6);
    for i in 0..total_words {
        // Spread keywords across the prompt at a fixed stride.
        if i < keyword_slots {
            words.push(pick(rng, vocab).to_string());
        } else {
            words.push(pick_static(rng, FILLER).to_string());
        }
    }
    // Domain texture: arithmetic garnish for math, a code fence for coding.
    if domain_idx == 1 && rng.random_bool(0.6) {
        let a: u32 = rng.random_range(1..40);
        let b: u32 = rng.random_range(1..40);
        words.push(format!("{a} + {b} = ?"));
    }
    if domain_idx == 2 && rng.random_bool(0.5) {
        words.push("```".to_string());
        words.push(pick(rng, vocab).to_string());
        words.push("```".to_string());
    }
    if rng.random_bool(0.3) {
        words.push("?".to_string());
    }
    words.join(" ")
}

fn build_answer(rng: &mut ChaCha8Rng, vocab: &[String]) -> String {
    let total_words = rng.random_range(4..=160usize);
    let mut words: Vec<String> = Vec::with_capacity(total_words);
    for i in 0..total_words {
        if i % 9 == 3 {
            words.push(pick(rng, vocab).to_string());
        } else {
            words.push(pick_static(rng, FILLER).to_string());
        }
    }
    words.join(" ")
}

/// Generate a multi-domain corpus. Samples are ordered domain-major, each
/// carrying its domain label; the returned header publishes the per-domain
/// rules.
pub fn gen_synthetic(spec: &SyntheticSpec) -> SyntheticDataset {
    assert!(spec.noise_scale >= 0.0, "noise_scale must be nonnegative");
    let rules: Vec<DomainRule> = (0..spec.domain_count).map(domain_rule).collect();
    let mut samples = Vec::with_capacity(spec.domain_count * spec.samples_per_domain);
    for d in 0..spec.domain_count {
        let vocab = domain_vocab(d);
        let rule = &rules[d];
        for i in 0..spec.samples_per_domain {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, d as u64, i as u64));
            let prompt = build_prompt(&mut rng, d, &vocab);
            let answer = build_answer(&mut rng, &vocab);
            let mut s = AuditSample::new(prompt, answer, 1).with_domain(rule.domain.clone());
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * spec.noise_scale;
            let ln_y = rule.ln_count(s.input_len, s.output_len) + noise;
            s.reasoning_tokens = ln_y.exp().round().max(1.0) as u64;
            samples.push(s);
        }
    }
    SyntheticDataset {
        spec: spec.clone(),
        rules,
        samples,
    }
}

/// Difficulty tiers for the content-driven corpus: marker words and the
/// token count they induce. Tiers sit a factor of three apart so a single
/// constant prediction can satisfy at most one tier at a 33% tolerance.
const CONTENT_TIERS: &[(&[&str], f64)] = &[
    (&["effortless", "breeze"], 150.0),
    (&["moderate", "routine"], 450.0),
    (&["convoluted", "intricate"], 1350.0),
    (&["labyrinthine", "formidable"], 4050.0),
];

/// Prompt word budget for the content corpus; every prompt has exactly this
/// many tokens so length carries no signal.
const CONTENT_PROMPT_WORDS: usize = 20;
const CONTENT_ANSWER_WORDS: usize = 8;

/// Spec for the content-driven corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentSpec {
    pub samples: usize,
    pub seed: u64,
    pub noise_scale: f64,
}

impl Default for ContentSpec {
    fn default() -> Self {
        ContentSpec {
            samples: 1200,
            seed: 11,
            noise_scale: 0.1,
        }
    }
}

/// Generate the matched-length, keyword-driven corpus. Tiers rotate
/// round-robin so any contiguous split stays balanced.
pub fn gen_content_driven(spec: &ContentSpec) -> Vec<AuditSample> {
    assert!(spec.noise_scale >= 0.0, "noise_scale must be nonnegative");
    let mut samples = Vec::with_capacity(spec.samples);
    for i in 0..spec.samples {
        let tier = i % CONTENT_TIERS.len();
        let (markers, target) = CONTENT_TIERS[tier];
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, 0xC0DE, i as u64));
        let mut words: Vec<String> = Vec::with_capacity(CONTENT_PROMPT_WORDS);
        for j in 0..CONTENT_PROMPT_WORDS {
            // Two marker slots at fixed positions, filler elsewhere.
            if j == 4 || j == 13 {
                words.push(pick_static(&mut rng, markers).to_string());
            } else {
                words.push(pick_static(&mut rng, FILLER).to_string());
            }
        }
        let prompt = words.join(" ");
        let answer = (0..CONTENT_ANSWER_WORDS)
            .map(|_| pick_static(&mut rng, FILLER).to_string())
            .collect::<Vec<_>>()
            .join(" ");
        let noise: f64 = rng.sample::<f64, _>(StandardNormal) * spec.noise_scale;
        let count = (target.ln() + noise).exp().round().max(1.0) as u64;
        samples.push(AuditSample::new(prompt, answer, count).with_domain("content"));
    }
    samples
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sample::serialize_jsonl;

    #[test]
    fn same_spec_yields_identical_bytes() {
        let spec = SyntheticSpec {
            domain_count: 3,
            samples_per_domain: 40,
            seed: 7,
            noise_scale: 0.2,
        };
        let a = serialize_jsonl(&gen_synthetic(&spec).samples);
        let b = serialize_jsonl(&gen_synthetic(&spec).samples);
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_counts_follow_the_published_rule() {
        let spec = SyntheticSpec {
            domain_count: 4,
            samples_per_domain: 50,
            seed: 3,
            noise_scale: 0.0,
        };
        let ds = gen_synthetic(&spec);
        for s in &ds.samples {
            let rule = ds
                .rules
                .iter()
                .find(|r| Some(&r.domain) == s.domain.as_ref())
                .unwrap();
            assert_eq!(s.reasoning_tokens, rule.count(s.input_len, s.output_len));
        }
    }

    #[test]
    fn counts_per_domain_label() {
        let spec = SyntheticSpec {
            domain_count: 4,
            samples_per_domain: 100,
            seed: 1,
            noise_scale: 0.1,
        };
        let ds = gen_synthetic(&spec);
        assert_eq!(ds.samples.len(), 400);
        for d in 0..4 {
            let name = domain_name(d);
            let n = ds
                .samples
                .iter()
                .filter(|s| s.domain.as_deref() == Some(&name))
                .count();
            assert_eq!(n, 100);
        }
    }

    #[test]
    fn lengths_are_recomputed_from_texts() {
        let ds = gen_synthetic(&SyntheticSpec {
            domain_count: 2,
            samples_per_domain: 20,
            seed: 9,
            noise_scale: 0.1,
        });
        for s in &ds.samples {
            assert_eq!(s.input_len, crate::data::tokenize_count(&s.prompt));
            assert_eq!(s.output_len, crate::data::tokenize_count(&s.answer));
            assert!(s.reasoning_tokens >= 1);
        }
    }

    #[test]
    fn content_corpus_has_matched_lengths_and_spread_counts() {
        let samples = gen_content_driven(&ContentSpec {
            samples: 200,
            seed: 5,
            noise_scale: 0.05,
        });
        assert_eq!(samples.len(), 200);
        let il = samples[0].input_len;
        let ol = samples[0].output_len;
        for s in &samples {
            assert_eq!(s.input_len, il);
            assert_eq!(s.output_len, ol);
        }
        let max = samples.iter().map(|s| s.reasoning_tokens).max().unwrap();
        let min = samples.iter().map(|s| s.reasoning_tokens).min().unwrap();
        assert!(max as f64 / min as f64 > 10.0, "tiers not separated");
    }
}
