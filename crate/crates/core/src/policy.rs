//! The stochastic token-count prediction policy.
//!
//! A small feed-forward network maps a feature vector to the parameters of
//! a log-normal distribution over the hidden count: one tanh hidden layer,
//! then two scalar heads — `mu`, the mean of the log-count, and `s`, the
//! log of its standard deviation. Working in log space keeps predictions
//! positive and makes the error multiplicative, which is the shape the
//! relative-error reward cares about.
//!
//! Everything downstream needs exact densities: sampling records the
//! log-probability of the drawn latent under the unscaled policy, the KL
//! between two heads is closed-form Gaussian, and gradients of both are
//! hand-derived backpropagation (no autodiff).
//!
//! ```text
//! h      = tanh(W1 x + b1)
//! mu     = w_mu . h + b_mu
//! sigma  = exp(w_s . h + b_s)
//! z      ~ Normal(mu, (tau * sigma)^2)        sampling at temperature tau
//! count  = max(1, round(exp(z)))
//! ```

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

const LN_2PI: f64 = 1.8378770664093453;

/// Layer dimensions of the policy network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyShape {
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl PolicyShape {
    pub fn new(input_dim: usize, hidden_dim: usize) -> Self {
        assert!(input_dim > 0 && hidden_dim > 0);
        PolicyShape {
            input_dim,
            hidden_dim,
        }
    }

    /// Total parameter count: W1, b1, and the two scalar heads.
    pub fn param_count(&self) -> usize {
        self.hidden_dim * self.input_dim + 3 * self.hidden_dim + 2
    }

    fn w1(&self) -> std::ops::Range<usize> {
        0..self.hidden_dim * self.input_dim
    }

    fn b1(&self) -> std::ops::Range<usize> {
        let start = self.hidden_dim * self.input_dim;
        start..start + self.hidden_dim
    }

    fn w_mu(&self) -> std::ops::Range<usize> {
        let start = self.hidden_dim * (self.input_dim + 1);
        start..start + self.hidden_dim
    }

    fn b_mu(&self) -> usize {
        self.hidden_dim * (self.input_dim + 2)
    }

    fn w_s(&self) -> std::ops::Range<usize> {
        let start = self.hidden_dim * (self.input_dim + 2) + 1;
        start..start + self.hidden_dim
    }

    fn b_s(&self) -> usize {
        self.hidden_dim * (self.input_dim + 3) + 1
    }
}

/// Flat parameter vector of the policy network.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    shape: PolicyShape,
    values: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(shape: PolicyShape) -> Self {
        PolicyParams {
            shape,
            values: vec![0.0; shape.param_count()],
        }
    }

    /// Deterministic scaled-uniform initialization: hidden weights at
    /// 1/sqrt(fan_in), head weights small, biases zero.
    pub fn init(shape: PolicyShape, seed: u64) -> Self {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut params = PolicyParams::zeros(shape);
        let w1_scale = 1.0 / (shape.input_dim as f64).sqrt();
        for i in params.shape.w1() {
            params.values[i] = rng.random_range(-w1_scale..w1_scale);
        }
        let head_scale = 1.0 / (shape.hidden_dim as f64).sqrt();
        for i in params.shape.w_mu() {
            params.values[i] = rng.random_range(-head_scale..head_scale);
        }
        for i in params.shape.w_s() {
            params.values[i] = 0.1 * rng.random_range(-head_scale..head_scale);
        }
        params
    }

    pub fn from_values(shape: PolicyShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.param_count() {
            return Err(Error::Shape(format!(
                "expected {} parameters for shape {}x{}, got {}",
                shape.param_count(),
                shape.input_dim,
                shape.hidden_dim,
                values.len()
            )));
        }
        Ok(PolicyParams { shape, values })
    }

    pub fn shape(&self) -> &PolicyShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Write `ln(target)` into the mu bias and `ln(spread)` into the sigma
    /// bias. Used to center a fresh network on the label distribution
    /// before gradient training.
    pub fn center_heads(&mut self, mu_bias: f64, s_bias: f64) {
        let b_mu = self.shape.b_mu();
        let b_s = self.shape.b_s();
        self.values[b_mu] = mu_bias;
        self.values[b_s] = s_bias;
    }
}

/// Mean and standard deviation of the log-count distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistParams {
    pub mu: f64,
    pub sigma: f64,
}

impl DistParams {
    pub fn new(mu: f64, sigma: f64) -> Self {
        assert!(sigma > 0.0, "sigma must be positive");
        DistParams { mu, sigma }
    }
}

/// One sampled prediction: the continuous latent, the rounded count and the
/// density of the latent under the generating (unscaled) policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rollout {
    pub latent: f64,
    pub count: u64,
    pub logprob: f64,
}

fn latent_to_count(latent: f64) -> u64 {
    let c = latent.exp().round();
    if c >= 1.0 {
        c as u64
    } else {
        1
    }
}

pub(crate) struct ForwardCache {
    pub hidden: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
}

/// Forward pass without dimension checks; callers validate once up front.
pub(crate) fn forward_cache(params: &PolicyParams, features: &FeatureVector) -> ForwardCache {
    let shape = params.shape;
    let values = &params.values;
    let b1 = shape.b1().start;
    let mut hidden = Vec::with_capacity(shape.hidden_dim);
    for u in 0..shape.hidden_dim {
        let row = u * shape.input_dim;
        let mut acc = values[b1 + u];
        for (i, x) in features.entries() {
            acc += values[row + *i as usize] * x;
        }
        hidden.push(acc.tanh());
    }
    let w_mu = shape.w_mu().start;
    let w_s = shape.w_s().start;
    let mut mu = values[shape.b_mu()];
    let mut s = values[shape.b_s()];
    for u in 0..shape.hidden_dim {
        mu += values[w_mu + u] * hidden[u];
        s += values[w_s + u] * hidden[u];
    }
    ForwardCache {
        hidden,
        mu,
        sigma: s.exp(),
    }
}

/// Evaluate the policy head for one feature vector.
pub fn forward(params: &PolicyParams, features: &FeatureVector) -> Result<DistParams> {
    if features.dim() != params.shape.input_dim {
        return Err(Error::Dimension {
            expected: params.shape.input_dim,
            actual: features.dim(),
        });
    }
    let cache = forward_cache(params, features);
    Ok(DistParams {
        mu: cache.mu,
        sigma: cache.sigma,
    })
}

/// Draw one prediction. `temperature` scales the sampling spread only;
/// zero means greedy (`z = mu`). The recorded log-probability is always the
/// density under the unscaled policy so importance ratios stay well defined.
pub fn sample_prediction<R: Rng + ?Sized>(
    dist: &DistParams,
    temperature: f64,
    rng: &mut R,
) -> Rollout {
    assert!(temperature >= 0.0, "temperature must be nonnegative");
    let latent = if temperature == 0.0 {
        dist.mu
    } else {
        let eps: f64 = rng.sample(StandardNormal);
        dist.mu + temperature * dist.sigma * eps
    };
    Rollout {
        latent,
        count: latent_to_count(latent),
        logprob: normal_logpdf(latent, dist.mu, dist.sigma),
    }
}

/// Log density of `z` under `Normal(mu, sigma^2)`.
pub(crate) fn normal_logpdf(z: f64, mu: f64, sigma: f64) -> f64 {
    let t = (z - mu) / sigma;
    -0.5 * LN_2PI - sigma.ln() - 0.5 * t * t
}

/// Closed-form Gaussian KL(a || b).
pub fn kl_divergence(a: &DistParams, b: &DistParams) -> f64 {
    assert!(a.sigma > 0.0 && b.sigma > 0.0);
    (b.sigma / a.sigma).ln()
        + (a.sigma * a.sigma + (a.mu - b.mu) * (a.mu - b.mu)) / (2.0 * b.sigma * b.sigma)
        - 0.5
}

/// Accumulate `scale * d(objective)/d(theta)` into `out` given the head
/// sensitivities `d_mu = d(objective)/d(mu)` and `d_s = d(objective)/d(s)`
/// at a cached forward pass.
pub(crate) fn accumulate_head_grad(
    params: &PolicyParams,
    features: &FeatureVector,
    cache: &ForwardCache,
    d_mu: f64,
    d_s: f64,
    scale: f64,
    out: &mut [f64],
) {
    let shape = params.shape;
    let values = &params.values;
    let w_mu = shape.w_mu().start;
    let w_s = shape.w_s().start;
    let b1 = shape.b1().start;
    out[shape.b_mu()] += scale * d_mu;
    out[shape.b_s()] += scale * d_s;
    for u in 0..shape.hidden_dim {
        let h = cache.hidden[u];
        out[w_mu + u] += scale * d_mu * h;
        out[w_s + u] += scale * d_s * h;
        let d_h = d_mu * values[w_mu + u] + d_s * values[w_s + u];
        let d_pre = d_h * (1.0 - h * h);
        out[b1 + u] += scale * d_pre;
        let row = u * shape.input_dim;
        for (i, x) in features.entries() {
            out[row + *i as usize] += scale * d_pre * x;
        }
    }
}

/// Head sensitivities of `log N(z; mu, sigma)`: returns `(d/d mu, d/d s)`
/// with `s = ln sigma`.
pub(crate) fn logprob_head_grad(z: f64, mu: f64, sigma: f64) -> (f64, f64) {
    let t = (z - mu) / sigma;
    (t / sigma, t * t - 1.0)
}

/// Log-probability of `latent` under the policy at `features`, plus its
/// exact gradient with respect to every parameter.
pub fn logprob_and_grad(
    params: &PolicyParams,
    features: &FeatureVector,
    latent: f64,
) -> (f64, Vec<f64>) {
    assert_eq!(features.dim(), params.shape.input_dim, "feature dim mismatch");
    assert!(latent.is_finite());
    let cache = forward_cache(params, features);
    let logprob = normal_logpdf(latent, cache.mu, cache.sigma);
    let (d_mu, d_s) = logprob_head_grad(latent, cache.mu, cache.sigma);
    let mut grad = vec![0.0; params.shape.param_count()];
    accumulate_head_grad(params, features, &cache, d_mu, d_s, 1.0, &mut grad);
    (logprob, grad)
}

/// Head sensitivities of `KL(a || ref)` with respect to a's `mu` and `s`.
pub(crate) fn kl_head_grad(a_mu: f64, a_sigma: f64, reference: &DistParams) -> (f64, f64) {
    let var_b = reference.sigma * reference.sigma;
    let d_mu = (a_mu - reference.mu) / var_b;
    let d_s = a_sigma * a_sigma / var_b - 1.0;
    (d_mu, d_s)
}

/// `KL(policy(features) || reference)` and its gradient with respect to the
/// policy parameters; the reference distribution is a constant.
pub fn kl_to_ref_and_grad(
    params: &PolicyParams,
    features: &FeatureVector,
    reference: &DistParams,
) -> (f64, Vec<f64>) {
    assert_eq!(features.dim(), params.shape.input_dim, "feature dim mismatch");
    let cache = forward_cache(params, features);
    let value = kl_divergence(
        &DistParams {
            mu: cache.mu,
            sigma: cache.sigma,
        },
        reference,
    );
    let (d_mu, d_s) = kl_head_grad(cache.mu, cache.sigma, reference);
    let mut grad = vec![0.0; params.shape.param_count()];
    accumulate_head_grad(params, features, &cache, d_mu, d_s, 1.0, &mut grad);
    (value, grad)
}
