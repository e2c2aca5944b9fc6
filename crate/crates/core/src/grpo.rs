//! Base-model regression and group-relative policy optimization.
//!
//! Training happens in two stages. `train_base` fits the policy head by
//! Gaussian negative log-likelihood on the log-counts — the general-purpose
//! model. `train_grpo` then specializes a copy per domain by ascending the
//! clipped surrogate
//!
//! ```text
//! J = mean_i[ min(r_i A_i, clip(r_i, 1-eps, 1+eps) A_i) ] - beta * KL(pi || pi_ref)
//! r_i = exp(logprob(z_i) - old_logprob_i)
//! ```
//!
//! where the advantages `A_i` are each rollout's reward centered and scaled
//! against its own group, the old log-probabilities come from the snapshot
//! taken at the start of the outer iteration, and `pi_ref` stays frozen at
//! the base model for the whole run. The difference between the tuned and
//! base parameters is emitted as a domain adapter delta.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::AuditSample;
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureConfig, FeatureVector};
use crate::hashing::{fnv1a, mix_seed};
use crate::optim::Adam;
use crate::policy::{
    accumulate_head_grad, forward_cache, kl_head_grad, logprob_head_grad, normal_logpdf,
    sample_prediction, DistParams, PolicyParams, PolicyShape, Rollout,
};

/// Hyperparameters shared by the GRPO stages.
#[derive(Debug, Clone, PartialEq)]
pub struct GrpoConfig {
    /// Rollouts sampled per prompt.
    pub group_size: usize,
    /// Clip range of the surrogate ratio.
    pub clip_eps: f64,
    /// Weight of the KL penalty against the frozen reference.
    pub kl_beta: f64,
    /// Gradient epochs per outer iteration; above 1 the ratios leave 1 and
    /// clipping becomes active.
    pub inner_epochs: usize,
    /// Outer iterations (snapshot + rollouts + updates).
    pub outer_iters: usize,
    pub learning_rate: f64,
    /// Stabilizer added to the group standard deviation.
    pub adv_eps: f64,
    /// Sampling temperature for rollouts.
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            group_size: 8,
            clip_eps: 0.2,
            kl_beta: 0.001,
            inner_epochs: 2,
            outer_iters: 120,
            learning_rate: 1e-2,
            adv_eps: 1e-8,
            temperature: 0.8,
            seed: 0,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(Error::Config("group_size must be at least 2".into()));
        }
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return Err(Error::Config("clip_eps must lie in (0, 1)".into()));
        }
        if self.kl_beta < 0.0 {
            return Err(Error::Config("kl_beta must be nonnegative".into()));
        }
        if self.inner_epochs < 1 {
            return Err(Error::Config("inner_epochs must be at least 1".into()));
        }
        if self.temperature < 0.0 {
            return Err(Error::Config("temperature must be nonnegative".into()));
        }
        Ok(())
    }

    /// Stable digest of the configuration, recorded as adapter provenance.
    pub fn digest(&self) -> String {
        format!("{:016x}", fnv1a(format!("{self:?}").as_bytes()))
    }
}

/// Relative-error reward, clipped to `[0, 1]`: 1 at an exact match, 0 once
/// the prediction is off by the full magnitude of the truth.
pub fn reward(pred_count: u64, truth: u64) -> Result<f64> {
    if truth < 1 {
        return Err(Error::Input("reward truth must be >= 1".into()));
    }
    let rel = (pred_count as f64 - truth as f64).abs() / truth as f64;
    Ok((1.0 - rel).max(0.0))
}

/// Group-relative advantages: rewards centered on their mean and scaled by
/// the population standard deviation (plus `adv_eps`). A constant group
/// yields exactly zero advantages.
pub fn compute_advantages(rewards: &[f64], adv_eps: f64) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(Error::GroupSize(rewards.len()));
    }
    // A constant group carries no signal; short-circuit to exact zeros
    // rather than leaking rounding residue through the division.
    if rewards.iter().all(|r| *r == rewards[0]) {
        return Ok(vec![0.0; rewards.len()]);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + adv_eps;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}

/// The sampled group for one prompt: rollouts, their rewards, the derived
/// advantages and the snapshot log-probabilities the ratios divide by.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutGroup {
    pub rollouts: Vec<Rollout>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
    pub old_logprobs: Vec<f64>,
}

impl RolloutGroup {
    pub fn new(rollouts: Vec<Rollout>, rewards: Vec<f64>, adv_eps: f64) -> Result<Self> {
        if rollouts.len() != rewards.len() {
            return Err(Error::Input(format!(
                "rollouts ({}) and rewards ({}) disagree",
                rollouts.len(),
                rewards.len()
            )));
        }
        let advantages = compute_advantages(&rewards, adv_eps)?;
        let old_logprobs = rollouts.iter().map(|r| r.logprob).collect();
        Ok(RolloutGroup {
            rollouts,
            rewards,
            advantages,
            old_logprobs,
        })
    }

    pub fn len(&self) -> usize {
        self.rollouts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rollouts.is_empty()
    }
}

/// Domain-specific parameter difference produced by GRPO training.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterDelta {
    pub domain: String,
    pub shape: PolicyShape,
    pub delta: Vec<f64>,
    /// Digest of the training configuration that produced this delta.
    pub provenance: String,
}

/// Diagnostics from one gradient update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrpoStepStats {
    pub objective: f64,
    pub mean_reward: f64,
    pub mean_kl: f64,
    pub clip_fraction: f64,
}

fn check_batch(params: &PolicyParams, batch: &[(FeatureVector, RolloutGroup)]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::Input("empty rollout batch".into()));
    }
    for (features, group) in batch {
        if features.dim() != params.shape().input_dim {
            return Err(Error::Dimension {
                expected: params.shape().input_dim,
                actual: features.dim(),
            });
        }
        if group.is_empty() {
            return Err(Error::GroupSize(0));
        }
    }
    Ok(())
}

struct ObjectiveEval {
    value: f64,
    mean_kl: f64,
    clip_fraction: f64,
    grad: Option<Vec<f64>>,
}

/// Shared evaluation of the surrogate objective; gradient accumulation is
/// optional so the finite-difference oracle can call the value path alone.
fn eval_objective(
    params: &PolicyParams,
    ref_params: &PolicyParams,
    batch: &[(FeatureVector, RolloutGroup)],
    config: &GrpoConfig,
    with_grad: bool,
) -> Result<ObjectiveEval> {
    check_batch(params, batch)?;
    if ref_params.shape() != params.shape() {
        return Err(Error::Shape(
            "reference and current policy shapes differ".into(),
        ));
    }
    let groups = batch.len() as f64;
    let mut grad = with_grad.then(|| vec![0.0; params.shape().param_count()]);
    let mut surrogate = 0.0;
    let mut kl_sum = 0.0;
    let mut clipped = 0usize;
    let mut total = 0usize;

    for (features, group) in batch {
        let cache = forward_cache(params, features);
        let ref_cache = forward_cache(ref_params, features);
        let ref_dist = DistParams::new(ref_cache.mu, ref_cache.sigma);
        let n = group.len() as f64;

        for i in 0..group.len() {
            let z = group.rollouts[i].latent;
            let adv = group.advantages[i];
            let ratio = (normal_logpdf(z, cache.mu, cache.sigma) - group.old_logprobs[i]).exp();
            let unclipped = ratio * adv;
            let clamped = ratio.clamp(1.0 - config.clip_eps, 1.0 + config.clip_eps) * adv;
            total += 1;
            if unclipped <= clamped {
                surrogate += unclipped / (groups * n);
                if let Some(g) = grad.as_deref_mut() {
                    // d/dtheta [ratio * adv] = adv * ratio * dlogprob/dtheta
                    let (d_mu, d_s) = logprob_head_grad(z, cache.mu, cache.sigma);
                    let scale = adv * ratio / (groups * n);
                    accumulate_head_grad(params, features, &cache, d_mu, d_s, scale, g);
                }
            } else {
                // The clipped branch is constant in theta.
                surrogate += clamped / (groups * n);
                clipped += 1;
            }
        }

        let kl = crate::policy::kl_divergence(&DistParams::new(cache.mu, cache.sigma), &ref_dist);
        kl_sum += kl;
        if config.kl_beta > 0.0 {
            if let Some(g) = grad.as_deref_mut() {
                let (d_mu, d_s) = kl_head_grad(cache.mu, cache.sigma, &ref_dist);
                accumulate_head_grad(
                    params,
                    features,
                    &cache,
                    d_mu,
                    d_s,
                    -config.kl_beta / groups,
                    g,
                );
            }
        }
    }

    let mean_kl = kl_sum / groups;
    Ok(ObjectiveEval {
        value: surrogate - config.kl_beta * mean_kl,
        mean_kl,
        clip_fraction: clipped as f64 / total as f64,
        grad,
    })
}

/// Value of the clipped surrogate objective (with KL penalty) at `params`.
pub fn grpo_objective(
    params: &PolicyParams,
    ref_params: &PolicyParams,
    batch: &[(FeatureVector, RolloutGroup)],
    config: &GrpoConfig,
) -> Result<f64> {
    Ok(eval_objective(params, ref_params, batch, config, false)?.value)
}

/// Objective value and its exact gradient with respect to `params`.
pub fn grpo_objective_grad(
    params: &PolicyParams,
    ref_params: &PolicyParams,
    batch: &[(FeatureVector, RolloutGroup)],
    config: &GrpoConfig,
) -> Result<(f64, Vec<f64>)> {
    let eval = eval_objective(params, ref_params, batch, config, true)?;
    Ok((eval.value, eval.grad.expect("gradient requested")))
}

/// One ascent update of `params` on the surrogate objective.
pub fn grpo_step(
    params: &mut PolicyParams,
    optimizer: &mut Adam,
    ref_params: &PolicyParams,
    batch: &[(FeatureVector, RolloutGroup)],
    config: &GrpoConfig,
) -> Result<GrpoStepStats> {
    let eval = eval_objective(params, ref_params, batch, config, true)?;
    let mut grad = eval.grad.expect("gradient requested");
    if !eval.value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Diverged(format!(
            "non-finite surrogate objective ({})",
            eval.value
        )));
    }
    // Adam minimizes; flip the sign to ascend.
    for g in &mut grad {
        *g = -*g;
    }
    optimizer.step(params.values_mut(), &grad);
    let mean_reward = {
        let (mut sum, mut n) = (0.0, 0usize);
        for (_, group) in batch {
            sum += group.rewards.iter().sum::<f64>();
            n += group.rewards.len();
        }
        sum / n as f64
    };
    Ok(GrpoStepStats {
        objective: eval.value,
        mean_reward,
        mean_kl: eval.mean_kl,
        clip_fraction: eval.clip_fraction,
    })
}

/// Configuration of the base (regression) stage.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for BaseConfig {
    fn default() -> Self {
        BaseConfig {
            epochs: 400,
            learning_rate: 1e-2,
            hidden_dim: 32,
            seed: 0,
        }
    }
}

/// Mean Gaussian negative log-likelihood of the log-counts under the policy
/// head.
pub fn mean_nll(
    params: &PolicyParams,
    dataset: &[AuditSample],
    features: &FeatureConfig,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Config("empty dataset".into()));
    }
    let mut sum = 0.0;
    for sample in dataset {
        let fv = extract_features(sample, features);
        if fv.dim() != params.shape().input_dim {
            return Err(Error::Dimension {
                expected: params.shape().input_dim,
                actual: fv.dim(),
            });
        }
        let cache = forward_cache(params, &fv);
        sum -= normal_logpdf((sample.reasoning_tokens as f64).ln(), cache.mu, cache.sigma);
    }
    Ok(sum / dataset.len() as f64)
}

/// Mean reward of greedy predictions over a dataset; the evaluation behind
/// adapter-lift comparisons.
pub fn mean_greedy_reward(
    params: &PolicyParams,
    dataset: &[AuditSample],
    features: &FeatureConfig,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Config("empty dataset".into()));
    }
    let mut sum = 0.0;
    for sample in dataset {
        let fv = extract_features(sample, features);
        let cache = forward_cache(params, &fv);
        let pred = cache.mu.exp().round().max(1.0) as u64;
        sum += reward(pred, sample.reasoning_tokens)?;
    }
    Ok(sum / dataset.len() as f64)
}

/// Per-sample head sensitivities are clamped during regression training:
/// the NLL gradient scales with 1/sigma^2, and on nearly noiseless data a
/// single outlier can inject a spike that destabilizes the variance head.
/// The loss itself stays the exact Gaussian NLL.
const HEAD_GRAD_LIMIT: f64 = 100.0;

/// Fit the general-purpose model: full-batch Adam on the mean negative
/// log-likelihood of `ln(reasoning_tokens)`. Heads start centered on the
/// label distribution so early gradients stay tame; everything is
/// deterministic in the seed.
pub fn train_base(
    dataset: &[AuditSample],
    config: &BaseConfig,
    features: &FeatureConfig,
) -> Result<PolicyParams> {
    if dataset.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    if dataset.iter().any(|s| s.reasoning_tokens < 1) {
        return Err(Error::Config("dataset contains a zero token count".into()));
    }
    let shape = PolicyShape::new(features.feature_dim(), config.hidden_dim);
    let mut params = PolicyParams::init(shape, config.seed);

    let inputs: Vec<FeatureVector> = dataset.iter().map(|s| extract_features(s, features)).collect();
    let targets: Vec<f64> = dataset
        .iter()
        .map(|s| (s.reasoning_tokens as f64).ln())
        .collect();
    let n = targets.len() as f64;
    let target_mean = targets.iter().sum::<f64>() / n;
    let target_var = targets.iter().map(|t| (t - target_mean).powi(2)).sum::<f64>() / n;
    params.center_heads(target_mean, target_var.sqrt().max(0.05).ln());

    let mut optimizer = Adam::new(shape.param_count(), config.learning_rate);
    let mut grad = vec![0.0; shape.param_count()];
    for epoch in 0..config.epochs {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for (fv, z) in inputs.iter().zip(&targets) {
            let cache = forward_cache(&params, fv);
            loss -= normal_logpdf(*z, cache.mu, cache.sigma) / n;
            let (d_mu, d_s) = logprob_head_grad(*z, cache.mu, cache.sigma);
            let d_mu = d_mu.clamp(-HEAD_GRAD_LIMIT, HEAD_GRAD_LIMIT);
            let d_s = d_s.clamp(-HEAD_GRAD_LIMIT, HEAD_GRAD_LIMIT);
            // Gradient of the negative log-likelihood.
            accumulate_head_grad(&params, fv, &cache, d_mu, d_s, -1.0 / n, &mut grad);
        }
        if !loss.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite regression loss at epoch {epoch}"
            )));
        }
        optimizer.step(params.values_mut(), &grad);
    }
    if !params.is_finite() {
        return Err(Error::Diverged("non-finite parameters after training".into()));
    }
    Ok(params)
}

/// Per-iteration entry of the training metrics log.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GrpoIterStats {
    pub iteration: usize,
    pub mean_reward: f64,
    pub mean_kl: f64,
    pub clip_fraction: f64,
}

impl std::fmt::Display for GrpoIterStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "iter={} mean_reward={:.6} mean_kl={:.6} clip_fraction={:.4}",
            self.iteration, self.mean_reward, self.mean_kl, self.clip_fraction
        )
    }
}

/// Result of a GRPO run: the adapter delta plus the per-iteration log.
#[derive(Debug, Clone)]
pub struct GrpoOutcome {
    pub delta: AdapterDelta,
    pub iterations: Vec<GrpoIterStats>,
}

/// Specialize `base` on one domain's dataset and return the parameter
/// delta. The reference policy is `base`, frozen; the old policy is
/// re-snapshotted every outer iteration.
pub fn train_grpo(
    base: &PolicyParams,
    dataset: &[AuditSample],
    domain: &str,
    config: &GrpoConfig,
    features: &FeatureConfig,
) -> Result<GrpoOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    if base.shape().input_dim != features.feature_dim() {
        return Err(Error::Dimension {
            expected: features.feature_dim(),
            actual: base.shape().input_dim,
        });
    }

    let inputs: Vec<FeatureVector> = dataset.iter().map(|s| extract_features(s, features)).collect();
    let mut params = base.clone();
    let mut optimizer = Adam::new(base.shape().param_count(), config.learning_rate);
    let mut iterations = Vec::with_capacity(config.outer_iters);

    for iter in 0..config.outer_iters {
        let snapshot = params.clone();
        let mut batch: Vec<(FeatureVector, RolloutGroup)> = Vec::with_capacity(dataset.len());
        for (p, (sample, fv)) in dataset.iter().zip(&inputs).enumerate() {
            let cache = forward_cache(&snapshot, fv);
            let dist = DistParams::new(cache.mu, cache.sigma);
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(config.seed, iter as u64, p as u64));
            let mut rollouts = Vec::with_capacity(config.group_size);
            let mut rewards = Vec::with_capacity(config.group_size);
            for _ in 0..config.group_size {
                let rollout = sample_prediction(&dist, config.temperature, &mut rng);
                rewards.push(reward(rollout.count, sample.reasoning_tokens)?);
                rollouts.push(rollout);
            }
            batch.push((fv.clone(), RolloutGroup::new(rollouts, rewards, config.adv_eps)?));
        }

        let mut last_stats = None;
        for _ in 0..config.inner_epochs {
            last_stats = Some(grpo_step(&mut params, &mut optimizer, base, &batch, config)?);
        }
        if !params.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite parameters at outer iteration {iter}; last stable iteration {}",
                iter.saturating_sub(1)
            )));
        }
        let stats = last_stats.expect("inner_epochs >= 1");
        iterations.push(GrpoIterStats {
            iteration: iter,
            mean_reward: stats.mean_reward,
            mean_kl: stats.mean_kl,
            clip_fraction: stats.clip_fraction,
        });
    }

    let delta: Vec<f64> = params
        .values()
        .iter()
        .zip(base.values())
        .map(|(tuned, b)| tuned - b)
        .collect();
    Ok(GrpoOutcome {
        delta: AdapterDelta {
            domain: domain.to_string(),
            shape: *base.shape(),
            delta,
            provenance: config.digest(),
        },
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, SyntheticSpec};
    use crate::features::extract_features;

    #[test]
    fn reward_triple() {
        assert_eq!(reward(2000, 2000).unwrap(), 1.0);
        assert_eq!(reward(1500, 2000).unwrap(), 0.75);
        assert_eq!(reward(5000, 2000).unwrap(), 0.0);
        assert!(reward(1, 0).is_err());
    }

    #[test]
    fn advantages_match_hand_computation() {
        let adv = compute_advantages(&[0.5, 1.0, 0.0, 0.5], 1e-8).unwrap();
        let expect = [0.0, 1.41421, -1.41421, 0.0];
        for (a, e) in adv.iter().zip(expect) {
            assert!((a - e).abs() < 1e-4, "{a} vs {e}");
        }
        assert!(adv.iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn constant_rewards_zero_advantages() {
        let adv = compute_advantages(&[0.7, 0.7, 0.7], 1e-8).unwrap();
        assert_eq!(adv, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn single_reward_is_a_group_error() {
        assert!(matches!(
            compute_advantages(&[1.0], 1e-8),
            Err(Error::GroupSize(1))
        ));
    }

    fn tiny_features() -> (FeatureConfig, FeatureVector) {
        let cfg = FeatureConfig { hash_width: 8 };
        let fv = extract_features(&AuditSample::new("probe question", "ok", 100), &cfg);
        (cfg, fv)
    }

    /// Build a group with prescribed ratios and advantages: the policy is
    /// the zero network (mu=0, sigma=1), so the new logprob at latent 0 is
    /// the standard-normal constant; old logprobs are offset to hit the
    /// target ratios exactly.
    fn group_with_ratios(fv: &FeatureVector, params: &PolicyParams, specs: &[(f64, f64)]) -> RolloutGroup {
        let cache = forward_cache(params, fv);
        let lp_new = normal_logpdf(0.0, cache.mu, cache.sigma);
        let rollouts: Vec<Rollout> = specs
            .iter()
            .map(|(ratio, _)| Rollout {
                latent: 0.0,
                count: 1,
                logprob: lp_new - ratio.ln(),
            })
            .collect();
        let old_logprobs = rollouts.iter().map(|r| r.logprob).collect();
        RolloutGroup {
            rollouts,
            rewards: vec![0.5; specs.len()],
            advantages: specs.iter().map(|(_, a)| *a).collect(),
            old_logprobs,
        }
    }

    #[test]
    fn clip_arithmetic_matches_hand_evaluation() {
        let (cfg, fv) = tiny_features();
        let shape = PolicyShape::new(cfg.feature_dim(), 4);
        let params = PolicyParams::zeros(shape);
        let config = GrpoConfig {
            kl_beta: 0.0,
            ..GrpoConfig::default()
        };
        // ratio 1.5 with A=1 clips to 1.2; ratio 0.5 with A=-1 takes the
        // clipped branch at -0.8.
        let group = group_with_ratios(&fv, &params, &[(1.5, 1.0), (0.5, -1.0)]);
        let batch = vec![(fv, group)];
        let value = grpo_objective(&params, &params, &batch, &config).unwrap();
        assert!((value - (1.2 + -0.8) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fresh_snapshot_has_unit_ratios_and_no_clipping() {
        let (cfg, fv) = tiny_features();
        let shape = PolicyShape::new(cfg.feature_dim(), 4);
        let params = PolicyParams::init(shape, 5);
        let config = GrpoConfig {
            kl_beta: 0.0,
            ..GrpoConfig::default()
        };
        let cache = forward_cache(&params, &fv);
        let dist = DistParams::new(cache.mu, cache.sigma);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rollouts: Vec<Rollout> = (0..6)
            .map(|_| sample_prediction(&dist, 0.8, &mut rng))
            .collect();
        let rewards: Vec<f64> = (0..6).map(|i| i as f64 / 6.0).collect();
        let group = RolloutGroup::new(rollouts, rewards.clone(), 1e-8).unwrap();
        let mean_adv = group.advantages.iter().sum::<f64>() / 6.0;
        let batch = vec![(fv, group)];
        let eval = eval_objective(&params, &params, &batch, &config, false).unwrap();
        // With pi = pi_old every ratio is 1: surrogate = mean(A_i) and the
        // clip never binds.
        assert!((eval.value - mean_adv).abs() < 1e-12);
        assert_eq!(eval.clip_fraction, 0.0);
    }

    #[test]
    fn train_base_is_deterministic() {
        let ds = gen_synthetic(&SyntheticSpec {
            domain_count: 1,
            samples_per_domain: 60,
            seed: 2,
            noise_scale: 0.1,
        });
        let cfg = FeatureConfig { hash_width: 64 };
        let base_cfg = BaseConfig {
            epochs: 40,
            hidden_dim: 8,
            ..BaseConfig::default()
        };
        let a = train_base(&ds.samples, &base_cfg, &cfg).unwrap();
        let b = train_base(&ds.samples, &base_cfg, &cfg).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn train_base_lowers_the_loss() {
        let ds = gen_synthetic(&SyntheticSpec {
            domain_count: 1,
            samples_per_domain: 80,
            seed: 4,
            noise_scale: 0.1,
        });
        let cfg = FeatureConfig { hash_width: 64 };
        let base_cfg = BaseConfig {
            epochs: 60,
            hidden_dim: 8,
            seed: 1,
            ..BaseConfig::default()
        };
        let shape = PolicyShape::new(cfg.feature_dim(), base_cfg.hidden_dim);
        let mut init = PolicyParams::init(shape, base_cfg.seed);
        let targets: Vec<f64> = ds
            .samples
            .iter()
            .map(|s| (s.reasoning_tokens as f64).ln())
            .collect();
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / targets.len() as f64;
        init.center_heads(mean, var.sqrt().max(0.05).ln());
        let loss_before = mean_nll(&init, &ds.samples, &cfg).unwrap();
        let trained = train_base(&ds.samples, &base_cfg, &cfg).unwrap();
        let loss_after = mean_nll(&trained, &ds.samples, &cfg).unwrap();
        assert!(loss_after < loss_before, "{loss_after} !< {loss_before}");
    }

    #[test]
    fn constant_targets_converge_to_their_log() {
        let samples: Vec<AuditSample> = (0..50)
            .map(|i| AuditSample::new(format!("question number {i}"), "fixed answer", 700))
            .collect();
        let cfg = FeatureConfig { hash_width: 64 };
        let params = train_base(
            &samples,
            &BaseConfig {
                epochs: 200,
                hidden_dim: 8,
                ..BaseConfig::default()
            },
            &cfg,
        )
        .unwrap();
        for s in &samples {
            let dist =
                crate::policy::forward(&params, &extract_features(s, &cfg)).unwrap();
            assert!(
                (dist.mu - 700.0f64.ln()).abs() / 700.0f64.ln() < 0.01,
                "mu {} vs ln(700) {}",
                dist.mu,
                700.0f64.ln()
            );
        }
    }

    #[test]
    fn empty_dataset_is_a_config_error() {
        let cfg = FeatureConfig { hash_width: 16 };
        assert!(matches!(
            train_base(&[], &BaseConfig::default(), &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_outer_iters_gives_zero_delta() {
        let ds = gen_synthetic(&SyntheticSpec {
            domain_count: 1,
            samples_per_domain: 10,
            seed: 6,
            noise_scale: 0.1,
        });
        let cfg = FeatureConfig { hash_width: 32 };
        let base = train_base(
            &ds.samples,
            &BaseConfig {
                epochs: 10,
                hidden_dim: 4,
                ..BaseConfig::default()
            },
            &cfg,
        )
        .unwrap();
        let outcome = train_grpo(
            &base,
            &ds.samples,
            "general",
            &GrpoConfig {
                outer_iters: 0,
                ..GrpoConfig::default()
            },
            &cfg,
        )
        .unwrap();
        assert!(outcome.delta.delta.iter().all(|d| *d == 0.0));
        assert!(outcome.iterations.is_empty());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            GrpoConfig { group_size: 1, ..GrpoConfig::default() },
            GrpoConfig { clip_eps: 0.0, ..GrpoConfig::default() },
            GrpoConfig { clip_eps: 1.0, ..GrpoConfig::default() },
            GrpoConfig { kl_beta: -0.1, ..GrpoConfig::default() },
            GrpoConfig { inner_epochs: 0, ..GrpoConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
