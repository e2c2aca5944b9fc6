//! Predictive auditing of hidden reasoning-token usage in opaque LLM APIs.
//!
//! Commercial LLM endpoints bill for reasoning tokens the caller never sees.
//! This crate trains a small stochastic predictor of the hidden token count
//! from prompt/answer pairs alone, specializes it per domain with
//! group-relative policy optimization, routes incoming prompts to the right
//! domain adapter, and flags reported counts that fall outside a tolerance
//! interval around the prediction.
//!
//! Pipeline outline:
//!
//! 1. [`data`] — corpus ingestion, tokenization, prompt templates, synthetic
//!    corpora for desk-scale experiments.
//! 2. [`policy`] + [`features`] — a feed-forward policy whose head emits a
//!    log-normal distribution over the token count, with exact
//!    log-probabilities and hand-derived gradients.
//! 3. [`grpo`] — base-model regression plus clipped-surrogate fine-tuning
//!    that emits per-domain parameter deltas.
//! 4. [`router`] + [`store`] — domain classification and adapter composition.
//! 5. [`audit`], [`metrics`], [`inflation`] — per-sample verdicts, accuracy
//!    metrics and misreporting simulation.

pub mod audit;
pub mod baselines;
pub mod data;
pub mod error;
pub mod features;
pub mod grpo;
pub mod hashing;
pub mod inflation;
pub mod metrics;
pub mod optim;
pub mod policy;
pub mod router;
pub mod store;

pub use audit::{
    audit_dataset, audit_sample, AuditConfig, AuditReport, DatasetVerdict, GapDirection,
    ModelStack, OraclePredictor, Prediction, Predictor, SampleVerdict,
};
pub use baselines::{bucket_predict_count, train_len_mlp, BaselineConfig, BaselineMode, BaselineModel};
pub use data::{
    bucketize, gen_content_driven, gen_synthetic, parse_jsonl, render_template, serialize_jsonl,
    tokenize_count, AuditSample, BucketScheme, ContentSpec, DomainRule, PromptMode, SyntheticDataset,
    SyntheticSpec,
};
pub use error::{Error, Result};
pub use features::{extract_features, prompt_bow, FeatureConfig, FeatureVector};
pub use grpo::{
    compute_advantages, grpo_objective, grpo_objective_grad, grpo_step, mean_greedy_reward,
    mean_nll, reward, train_base, train_grpo, AdapterDelta, BaseConfig, GrpoConfig, GrpoIterStats,
    GrpoOutcome, GrpoStepStats, RolloutGroup,
};
pub use inflation::{evaluate_detection, inflate, DetectionPoint, InflationStrategy};
pub use metrics::{compute_metrics, threshold_sweep, MetricsReport};
pub use optim::Adam;
pub use policy::{
    forward, kl_divergence, kl_to_ref_and_grad, logprob_and_grad, sample_prediction, DistParams,
    PolicyParams, PolicyShape, Rollout,
};
pub use router::{route, train_router, router_training_split, RouterConfig, RouterModel};
pub use store::{apply_delta, load_artifact, save_artifact, Artifact, Manifest, SCHEMA_VERSION};
