//! Prompt-domain router: multinomial logistic regression over hashed
//! bag-of-words features of the prompt text alone. Selects which adapter
//! delta to apply before prediction.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::AuditSample;
use crate::error::{Error, Result};
use crate::features::prompt_bow;
use crate::hashing::{fnv1a, mix_seed};
use crate::optim::Adam;

/// Router training configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RouterConfig {
    pub hash_width: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            hash_width: 4096,
            epochs: 400,
            learning_rate: 0.05,
        }
    }
}

/// Linear softmax classifier with its domain-label table. Labels are sorted,
/// so adapter lookup is by label rather than index position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouterModel {
    pub labels: Vec<String>,
    pub hash_width: usize,
    /// Row-major `labels.len() x hash_width`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl RouterModel {
    pub fn domain_count(&self) -> usize {
        self.labels.len()
    }

    fn logits(&self, bow: &[(u32, f64)]) -> Vec<f64> {
        let mut logits = self.bias.clone();
        for d in 0..self.labels.len() {
            let row = d * self.hash_width;
            for (i, x) in bow {
                logits[d] += self.weights[row + *i as usize] * x;
            }
        }
        logits
    }
}

fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Train the router by full-batch cross-entropy descent. Starts from zero
/// weights, so the fit is convex and independent of any seed; at least two
/// distinct labels are required.
pub fn train_router(samples: &[(String, String)], config: &RouterConfig) -> Result<RouterModel> {
    let mut labels: Vec<String> = samples.iter().map(|(_, d)| d.clone()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(Error::Config(format!(
            "router needs at least 2 distinct domains, got {}",
            labels.len()
        )));
    }
    let d_count = labels.len();
    let width = config.hash_width;
    let mut model = RouterModel {
        labels: labels.clone(),
        hash_width: width,
        weights: vec![0.0; d_count * width],
        bias: vec![0.0; d_count],
    };

    let encoded: Vec<(Vec<(u32, f64)>, usize)> = samples
        .iter()
        .map(|(prompt, domain)| {
            let class = labels.binary_search(domain).expect("label in table");
            (prompt_bow(prompt, width), class)
        })
        .collect();

    let dim = d_count * width + d_count;
    let mut optimizer = Adam::new(dim, config.learning_rate);
    let mut flat = vec![0.0; dim];
    let n = encoded.len() as f64;
    for _ in 0..config.epochs {
        let mut grad = vec![0.0; dim];
        for (bow, class) in &encoded {
            let mut probs = model.logits(bow);
            softmax_in_place(&mut probs);
            for d in 0..d_count {
                let residual = probs[d] - if d == *class { 1.0 } else { 0.0 };
                let row = d * width;
                for (i, x) in bow {
                    grad[row + *i as usize] += residual * x / n;
                }
                grad[d_count * width + d] += residual / n;
            }
        }
        flat[..d_count * width].copy_from_slice(&model.weights);
        flat[d_count * width..].copy_from_slice(&model.bias);
        optimizer.step(&mut flat, &grad);
        model.weights.copy_from_slice(&flat[..d_count * width]);
        model.bias.copy_from_slice(&flat[d_count * width..]);
    }
    Ok(model)
}

/// Classify a prompt: argmax of the class probabilities, ties broken toward
/// the lowest domain index. Returns the index and the full probability
/// vector.
pub fn route(model: &RouterModel, prompt: &str) -> (usize, Vec<f64>) {
    let bow = prompt_bow(prompt, model.hash_width);
    let mut probs = model.logits(&bow);
    softmax_in_place(&mut probs);
    let mut best = 0usize;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    (best, probs)
}

/// Draw the router training set: a fixed fraction of each domain's samples,
/// chosen by a seeded shuffle so the subset is stable across runs.
pub fn router_training_split(
    samples: &[AuditSample],
    fraction: f64,
    seed: u64,
) -> Result<Vec<(String, String)>> {
    if !(0.0 < fraction && fraction <= 1.0) {
        return Err(Error::Config("fraction must lie in (0, 1]".into()));
    }
    let mut by_domain: BTreeMap<&str, Vec<&AuditSample>> = BTreeMap::new();
    for s in samples {
        let domain = s
            .domain
            .as_deref()
            .ok_or_else(|| Error::Config("router split requires labeled samples".into()))?;
        by_domain.entry(domain).or_default().push(s);
    }
    let mut pairs = Vec::new();
    for (domain, group) in by_domain {
        let take = ((group.len() as f64 * fraction).ceil() as usize).max(1);
        let mut indices: Vec<usize> = (0..group.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, fnv1a(domain.as_bytes()), 0));
        indices.shuffle(&mut rng);
        for &i in indices.iter().take(take) {
            pairs.push((group[i].prompt.clone(), domain.to_string()));
        }
    }
    Ok(pairs)
}
