//! Length-only comparison models: a two-layer MLP over just
//! `ln(1+input_len)` and `ln(1+output_len)`, in a regression variant
//! (squared error on the log-count) and a five-way bucket-classification
//! variant. By construction these see no prompt content, which is exactly
//! the gap the full-feature policy is supposed to close.

use serde::{Deserialize, Serialize};

use crate::data::{bucketize, AuditSample, BucketScheme};
use crate::error::{Error, Result};
use crate::optim::Adam;

/// Two inputs: log input length, log output length.
const INPUT_DIM: usize = 2;
/// Bucket classes in classification mode.
const CLASS_COUNT: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    Regression,
    Classification,
}

/// Training configuration for the length-only models.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            hidden_dim: 16,
            epochs: 400,
            learning_rate: 1e-2,
            seed: 0,
        }
    }
}

/// A trained length-only model. Parameters are flat:
/// `[w1 (h x 2), b1 (h), w2 (out x h), b2 (out)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub mode: BaselineMode,
    pub hidden_dim: usize,
    pub values: Vec<f64>,
    /// Bucket scheme used to train (and decode) a classifier.
    pub scheme: Option<BucketScheme>,
}

fn param_count(hidden: usize, out: usize) -> usize {
    hidden * INPUT_DIM + hidden + out * hidden + out
}

impl BaselineModel {
    pub fn out_dim(&self) -> usize {
        match self.mode {
            BaselineMode::Regression => 1,
            BaselineMode::Classification => CLASS_COUNT,
        }
    }

    pub fn from_parts(
        mode: BaselineMode,
        hidden_dim: usize,
        values: Vec<f64>,
        scheme: Option<BucketScheme>,
    ) -> Result<Self> {
        let model = BaselineModel {
            mode,
            hidden_dim,
            values,
            scheme,
        };
        if model.values.len() != param_count(hidden_dim, model.out_dim()) {
            return Err(Error::Incompatible(format!(
                "baseline holds {} values, layout wants {}",
                model.values.len(),
                param_count(hidden_dim, model.out_dim())
            )));
        }
        if mode == BaselineMode::Classification && model.scheme.is_none() {
            return Err(Error::Incompatible(
                "classification baseline without a bucket scheme".into(),
            ));
        }
        Ok(model)
    }

    fn inputs(sample: &AuditSample) -> [f64; INPUT_DIM] {
        [
            (1.0 + sample.input_len as f64).ln(),
            (1.0 + sample.output_len as f64).ln(),
        ]
    }

    /// Forward pass: hidden activations and raw outputs.
    fn forward(&self, x: &[f64; INPUT_DIM]) -> (Vec<f64>, Vec<f64>) {
        let h = self.hidden_dim;
        let out_dim = self.out_dim();
        let (w1, rest) = self.values.split_at(h * INPUT_DIM);
        let (b1, rest) = rest.split_at(h);
        let (w2, b2) = rest.split_at(out_dim * h);
        let mut hidden = Vec::with_capacity(h);
        for u in 0..h {
            let pre = w1[u * INPUT_DIM] * x[0] + w1[u * INPUT_DIM + 1] * x[1] + b1[u];
            hidden.push(pre.tanh());
        }
        let mut outputs = Vec::with_capacity(out_dim);
        for o in 0..out_dim {
            let mut acc = b2[o];
            for u in 0..h {
                acc += w2[o * h + u] * hidden[u];
            }
            outputs.push(acc);
        }
        (hidden, outputs)
    }

    /// Regression prediction in counts.
    pub fn predict_count(&self, sample: &AuditSample) -> Result<u64> {
        if self.mode != BaselineMode::Regression {
            return Err(Error::Config("predict_count needs a regression model".into()));
        }
        let (_, out) = self.forward(&Self::inputs(sample));
        Ok(out[0].exp().round().max(1.0) as u64)
    }

    /// Classification prediction: the argmax bucket.
    pub fn predict_bucket(&self, sample: &AuditSample) -> Result<usize> {
        if self.mode != BaselineMode::Classification {
            return Err(Error::Config("predict_bucket needs a classifier".into()));
        }
        let (_, out) = self.forward(&Self::inputs(sample));
        let mut best = 0usize;
        for (i, v) in out.iter().enumerate() {
            if *v > out[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// Representative count for a bucket: the geometric mean of its edges (a
/// zero lower edge counts as 1), and 1.5x the lower edge for the unbounded
/// top bucket.
fn representative_count(bucket: usize, scheme: &BucketScheme) -> u64 {
    let edges = &scheme.edges;
    if bucket >= edges.len() {
        return (edges[edges.len() - 1] as f64 * 1.5).round() as u64;
    }
    let lo = if bucket == 0 { 0 } else { edges[bucket - 1] } as f64;
    let hi = edges[bucket] as f64;
    (lo.max(1.0) * hi).sqrt().round().max(1.0) as u64
}

/// Decode a classifier's bucket into a count so error metrics can be
/// computed for it.
pub fn bucket_predict_count(
    model: &BaselineModel,
    sample: &AuditSample,
    scheme: &BucketScheme,
) -> Result<u64> {
    Ok(representative_count(model.predict_bucket(sample)?, scheme))
}

/// Train a length-only MLP. Regression minimizes squared error on
/// `ln(count)`; classification minimizes cross-entropy over the five bucket
/// labels of `scheme`.
pub fn train_len_mlp(
    dataset: &[AuditSample],
    mode: BaselineMode,
    scheme: Option<&BucketScheme>,
    config: &BaselineConfig,
) -> Result<BaselineModel> {
    if dataset.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    let scheme = match (mode, scheme) {
        (BaselineMode::Classification, None) => {
            return Err(Error::Config("classification needs a bucket scheme".into()))
        }
        (_, s) => s.cloned(),
    };
    let h = config.hidden_dim;
    let out_dim = match mode {
        BaselineMode::Regression => 1,
        BaselineMode::Classification => CLASS_COUNT,
    };

    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut values = vec![0.0; param_count(h, out_dim)];
    let w1_scale = 1.0 / (INPUT_DIM as f64).sqrt();
    for v in values.iter_mut().take(h * INPUT_DIM) {
        *v = rng.random_range(-w1_scale..w1_scale);
    }
    let head_scale = 1.0 / (h as f64).sqrt();
    for v in values[h * INPUT_DIM + h..h * INPUT_DIM + h + out_dim * h].iter_mut() {
        *v = rng.random_range(-head_scale..head_scale);
    }
    let mut model = BaselineModel {
        mode,
        hidden_dim: h,
        values,
        scheme: scheme.clone(),
    };

    let inputs: Vec<[f64; INPUT_DIM]> = dataset.iter().map(BaselineModel::inputs).collect();
    let targets_ln: Vec<f64> = dataset
        .iter()
        .map(|s| (s.reasoning_tokens as f64).ln())
        .collect();
    let classes: Vec<usize> = match (&mode, &scheme) {
        (BaselineMode::Classification, Some(scheme)) => dataset
            .iter()
            .map(|s| bucketize(s.reasoning_tokens, scheme))
            .collect(),
        _ => Vec::new(),
    };
    if mode == BaselineMode::Regression {
        // Center the output bias on the mean log-count.
        let mean = targets_ln.iter().sum::<f64>() / targets_ln.len() as f64;
        let b2_start = h * INPUT_DIM + h + out_dim * h;
        model.values[b2_start] = mean;
    }

    let n = dataset.len() as f64;
    let mut optimizer = Adam::new(model.values.len(), config.learning_rate);
    let mut grad = vec![0.0; model.values.len()];
    for epoch in 0..config.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (i, x) in inputs.iter().enumerate() {
            let (hidden, outputs) = model.forward(x);
            // d(loss)/d(output)
            let d_out: Vec<f64> = match mode {
                BaselineMode::Regression => {
                    let err = outputs[0] - targets_ln[i];
                    loss += 0.5 * err * err / n;
                    vec![err / n]
                }
                BaselineMode::Classification => {
                    let max = outputs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = outputs.iter().map(|o| (o - max).exp()).collect();
                    let sum: f64 = exps.iter().sum();
                    let class = classes[i];
                    loss -= (exps[class] / sum).ln() / n;
                    exps.iter()
                        .enumerate()
                        .map(|(k, e)| {
                            let p = e / sum;
                            (p - if k == class { 1.0 } else { 0.0 }) / n
                        })
                        .collect()
                }
            };
            backprop(&model, x, &hidden, &d_out, &mut grad);
        }
        if !loss.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite baseline loss at epoch {epoch}"
            )));
        }
        optimizer.step(&mut model.values, &grad);
    }
    Ok(model)
}

fn backprop(
    model: &BaselineModel,
    x: &[f64; INPUT_DIM],
    hidden: &[f64],
    d_out: &[f64],
    grad: &mut [f64],
) {
    let h = model.hidden_dim;
    let out_dim = model.out_dim();
    let w2_start = h * INPUT_DIM + h;
    let b2_start = w2_start + out_dim * h;
    for o in 0..out_dim {
        grad[b2_start + o] += d_out[o];
        for u in 0..h {
            grad[w2_start + o * h + u] += d_out[o] * hidden[u];
        }
    }
    for u in 0..h {
        let mut d_h = 0.0;
        for o in 0..out_dim {
            d_h += d_out[o] * model.values[w2_start + o * h + u];
        }
        let d_pre = d_h * (1.0 - hidden[u] * hidden[u]);
        grad[h * INPUT_DIM + u] += d_pre;
        grad[u * INPUT_DIM] += d_pre * x[0];
        grad[u * INPUT_DIM + 1] += d_pre * x[1];
    }
}
