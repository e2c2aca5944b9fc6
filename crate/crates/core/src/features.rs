//! Feature extraction for the prediction policy and the router.
//!
//! A feature vector is conceptually dense with a fixed width `7 + H`:
//! seven handcrafted components followed by an `H`-wide hashed bag-of-words
//! block over the lowercased prompt tokens. Vectors are stored sparsely
//! (sorted index/value pairs) because the hashed block is almost entirely
//! zero for realistic prompts.
//!
//! Layout:
//!
//! ```text
//! 0  ln(1 + input_len)
//! 1  ln(1 + output_len)
//! 2  output_len / input_len          (0 when the prompt is empty)
//! 3  digit-character fraction of the prompt
//! 4  math-symbol fraction of the prompt  (+ - * / = ^)
//! 5  question-mark count
//! 6  code-fence indicator             ("```" present)
//! 7.. hashed token frequencies, FNV-1a modulo H
//! ```

use serde::{Deserialize, Serialize};

use crate::data::{tokens, AuditSample};
use crate::hashing::token_bucket;

/// Number of handcrafted components before the hashed block.
pub const DENSE_FEATURES: usize = 7;

/// Version of the layout above; persisted artifacts embed it and loading
/// rejects a mismatch.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

/// Feature-space configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Width of the hashed bag-of-words block.
    pub hash_width: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { hash_width: 4096 }
    }
}

impl FeatureConfig {
    /// Total feature dimensionality.
    pub fn feature_dim(&self) -> usize {
        DENSE_FEATURES + self.hash_width
    }
}

/// Sparse view of one fixed-width feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    /// Width of the dense vector this represents.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nonzero components, sorted by index.
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(index as u32), |(i, _)| *i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for (i, v) in &self.entries {
            dense[*i as usize] = *v;
        }
        dense
    }
}

/// Hashed bag-of-words of `prompt`: token frequencies over `hash_width`
/// buckets, indices in `0..hash_width`, sorted. Empty prompts hash to
/// nothing.
pub fn prompt_bow(prompt: &str, hash_width: usize) -> Vec<(u32, f64)> {
    let mut counts: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
    let mut total = 0u64;
    for tok in tokens(prompt) {
        let lower = tok.to_lowercase();
        let bucket = token_bucket(&lower, hash_width) as u32;
        *counts.entry(bucket).or_insert(0.0) += 1.0;
        total += 1;
    }
    if total == 0 {
        return Vec::new();
    }
    counts
        .into_iter()
        .map(|(i, c)| (i, c / total as f64))
        .collect()
}

/// Extract the policy feature vector for one sample. Pure and deterministic.
pub fn extract_features(sample: &AuditSample, config: &FeatureConfig) -> FeatureVector {
    let mut entries: Vec<(u32, f64)> = Vec::new();
    let mut push = |idx: usize, value: f64| {
        if value != 0.0 {
            entries.push((idx as u32, value));
        }
    };

    push(0, (1.0 + sample.input_len as f64).ln());
    push(1, (1.0 + sample.output_len as f64).ln());
    let ratio = if sample.input_len == 0 {
        0.0
    } else {
        sample.output_len as f64 / sample.input_len as f64
    };
    push(2, ratio);

    let char_total = sample.prompt.chars().count();
    if char_total > 0 {
        let mut digits = 0usize;
        let mut math_syms = 0usize;
        for c in sample.prompt.chars() {
            if c.is_ascii_digit() {
                digits += 1;
            }
            if matches!(c, '+' | '-' | '*' | '/' | '=' | '^') {
                math_syms += 1;
            }
        }
        push(3, digits as f64 / char_total as f64);
        push(4, math_syms as f64 / char_total as f64);
    }
    push(5, sample.prompt.matches('?').count() as f64);
    push(6, if sample.prompt.contains("```") { 1.0 } else { 0.0 });

    for (bucket, freq) in prompt_bow(&sample.prompt, config.hash_width) {
        entries.push((DENSE_FEATURES as u32 + bucket, freq));
    }

    FeatureVector {
        dim: config.feature_dim(),
        entries,
    }
}
