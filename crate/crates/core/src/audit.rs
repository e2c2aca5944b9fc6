//! End-to-end auditing: route the prompt, compose the matching adapter,
//! predict greedily, expand the prediction into a tolerance interval and
//! flag claimed counts that fall outside it. Per-sample verdicts aggregate
//! into a dataset-level inflation call.
//!
//! Gaps are normalized by the prediction — the auditor's reference — since
//! the claimed value is the untrusted quantity. Flagging is two-sided with
//! the direction recorded: billing audits care about over-reporting, but
//! under-reports surface predictor problems and are worth seeing too.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::AuditSample;
use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureConfig};
use crate::grpo::AdapterDelta;
use crate::policy::{forward, sample_prediction, PolicyParams};
use crate::router::{route, RouterModel};
use crate::store;

/// Something that can predict a hidden count for a sample.
pub trait Predictor {
    fn predict(&self, sample: &AuditSample) -> Result<Prediction>;
}

/// A predicted count plus how it was obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub count: u64,
    /// Routed domain label, when a router was involved.
    pub domain: Option<String>,
    /// True when the routed domain had no stored adapter and the base model
    /// answered instead.
    pub used_fallback: bool,
}

/// The trained model bundle: base parameters, per-domain composed
/// parameters, and the router. Immutable once built; composition happens up
/// front so routing is a table lookup.
#[derive(Debug, Clone)]
pub struct ModelStack {
    base: PolicyParams,
    composed: BTreeMap<String, PolicyParams>,
    router: RouterModel,
    features: FeatureConfig,
}

impl ModelStack {
    pub fn new(
        base: PolicyParams,
        deltas: Vec<AdapterDelta>,
        router: RouterModel,
        features: FeatureConfig,
    ) -> Result<Self> {
        if base.shape().input_dim != features.feature_dim() {
            return Err(Error::Dimension {
                expected: features.feature_dim(),
                actual: base.shape().input_dim,
            });
        }
        let mut composed = BTreeMap::new();
        for delta in deltas {
            let params = store::apply_delta(&base, &delta)?;
            composed.insert(delta.domain.clone(), params);
        }
        Ok(ModelStack {
            base,
            composed,
            router,
            features,
        })
    }

    /// Load `base.json`, every `delta-*.json` and `router.json` from a model
    /// directory.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let (base, features) = store::load_artifact(&store::base_file(dir))?.as_policy()?;
        let router = store::load_artifact(&store::router_file(dir))?.as_router()?;
        let mut deltas = Vec::new();
        let mut names: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.starts_with("delta-") && n.ends_with(".json"))
            .collect();
        names.sort();
        for name in names {
            let (delta, delta_features) =
                store::load_artifact(&dir.join(&name))?.as_adapter()?;
            if delta_features != features {
                return Err(Error::Incompatible(format!(
                    "adapter {name} was trained on a different feature space"
                )));
            }
            deltas.push(delta);
        }
        ModelStack::new(base, deltas, router, features)
    }

    pub fn feature_config(&self) -> &FeatureConfig {
        &self.features
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> {
        self.composed.keys().map(|s| s.as_str())
    }

    fn routed_params(&self, prompt: &str) -> (&PolicyParams, String, bool) {
        let (idx, _) = route(&self.router, prompt);
        let label = self.router.labels[idx].clone();
        match self.composed.get(&label) {
            Some(params) => (params, label, false),
            None => (&self.base, label, true),
        }
    }

    /// Greedy count through routing and adapter composition.
    pub fn greedy_count(&self, sample: &AuditSample) -> Result<Prediction> {
        let (params, label, fallback) = self.routed_params(&sample.prompt);
        let dist = forward(params, &extract_features(sample, &self.features))?;
        Ok(Prediction {
            count: dist.mu.exp().round().max(1.0) as u64,
            domain: Some(label),
            used_fallback: fallback,
        })
    }

    /// `k` temperature samples through the same routed model.
    pub fn sampled_counts<R: Rng + ?Sized>(
        &self,
        sample: &AuditSample,
        k: usize,
        temperature: f64,
        rng: &mut R,
    ) -> Result<Vec<u64>> {
        let (params, _, _) = self.routed_params(&sample.prompt);
        let dist = forward(params, &extract_features(sample, &self.features))?;
        Ok((0..k)
            .map(|_| sample_prediction(&dist, temperature, rng).count)
            .collect())
    }
}

impl Predictor for ModelStack {
    fn predict(&self, sample: &AuditSample) -> Result<Prediction> {
        self.greedy_count(sample)
    }
}

/// Test stub that answers with the ground truth. Gives detection sweeps a
/// predictor with zero error so interval logic can be checked in isolation.
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePredictor;

impl Predictor for OraclePredictor {
    fn predict(&self, sample: &AuditSample) -> Result<Prediction> {
        Ok(Prediction {
            count: sample.reasoning_tokens,
            domain: sample.domain.clone(),
            used_fallback: false,
        })
    }
}

/// Which side of the tolerance interval a claim landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapDirection {
    Over,
    Under,
    Within,
}

/// Verdict for one audited sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleVerdict {
    pub predicted: u64,
    pub claimed: u64,
    /// `(claimed - predicted) / predicted`.
    pub relative_gap: f64,
    pub flagged: bool,
    pub direction: GapDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub used_fallback: bool,
}

/// Dataset-level call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DatasetVerdict {
    #[serde(rename = "clean")]
    Clean,
    #[serde(rename = "suspicious-inflation")]
    SuspiciousInflation,
}

/// Audit thresholds. The tolerance reuses the 33% accuracy threshold by
/// default; the dataset-level cutoffs are configuration, not claims.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    /// Half-width of the per-sample tolerance interval around the
    /// prediction.
    pub tolerance: f64,
    /// Flagged fraction above which the dataset is called suspicious.
    pub frac_threshold: f64,
    /// Aggregate relative gap above which the dataset is called suspicious.
    pub agg_threshold: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            tolerance: 0.33,
            frac_threshold: 0.2,
            agg_threshold: 0.15,
        }
    }
}

/// Verdicts plus dataset aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub verdicts: Vec<SampleVerdict>,
    pub flagged_fraction: f64,
    /// `(sum claimed - sum predicted) / sum predicted`.
    pub aggregate_gap: f64,
    pub verdict: DatasetVerdict,
}

impl AuditReport {
    /// One verdict per line.
    pub fn verdicts_jsonl(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            out.push_str(&serde_json::to_string(v).expect("verdict serializes"));
            out.push('\n');
        }
        out
    }

    /// The aggregates without the per-sample list.
    pub fn summary_json(&self, config: &AuditConfig) -> serde_json::Value {
        serde_json::json!({
            "samples": self.verdicts.len(),
            "flagged_fraction": self.flagged_fraction,
            "aggregate_gap": self.aggregate_gap,
            "verdict": self.verdict,
            "tolerance": config.tolerance,
            "frac_threshold": config.frac_threshold,
            "agg_threshold": config.agg_threshold,
        })
    }
}

/// Audit one sample: flag iff the claimed count lies outside
/// `[pred*(1-tolerance), pred*(1+tolerance)]`.
pub fn audit_sample<P: Predictor + ?Sized>(
    predictor: &P,
    sample: &AuditSample,
    tolerance: f64,
) -> Result<SampleVerdict> {
    if tolerance <= 0.0 {
        return Err(Error::Input("tolerance must be positive".into()));
    }
    let claimed = sample
        .claimed_tokens
        .ok_or_else(|| Error::Input("sample carries no claimed count".into()))?;
    let prediction = predictor.predict(sample)?;
    let predicted = prediction.count.max(1);
    let relative_gap = (claimed as f64 - predicted as f64) / predicted as f64;
    let flagged = relative_gap.abs() > tolerance;
    let direction = if !flagged {
        GapDirection::Within
    } else if relative_gap > 0.0 {
        GapDirection::Over
    } else {
        GapDirection::Under
    };
    Ok(SampleVerdict {
        predicted,
        claimed,
        relative_gap,
        flagged,
        direction,
        domain: prediction.domain,
        used_fallback: prediction.used_fallback,
    })
}

/// Audit a dataset: per-sample verdicts plus the aggregate inflation call.
pub fn audit_dataset<P: Predictor + ?Sized>(
    predictor: &P,
    samples: &[AuditSample],
    config: &AuditConfig,
) -> Result<AuditReport> {
    if samples.is_empty() {
        return Err(Error::Input("nothing to audit".into()));
    }
    let mut verdicts = Vec::with_capacity(samples.len());
    let mut claimed_total = 0u64;
    let mut predicted_total = 0u64;
    let mut flagged = 0usize;
    for sample in samples {
        let verdict = audit_sample(predictor, sample, config.tolerance)?;
        claimed_total += verdict.claimed;
        predicted_total += verdict.predicted;
        if verdict.flagged {
            flagged += 1;
        }
        verdicts.push(verdict);
    }
    let flagged_fraction = flagged as f64 / samples.len() as f64;
    let aggregate_gap =
        (claimed_total as f64 - predicted_total as f64) / predicted_total as f64;
    let verdict = if flagged_fraction > config.frac_threshold || aggregate_gap > config.agg_threshold
    {
        DatasetVerdict::SuspiciousInflation
    } else {
        DatasetVerdict::Clean
    };
    Ok(AuditReport {
        verdicts,
        flagged_fraction,
        aggregate_gap,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fixed-count predictor for interval arithmetic tests.
    struct Constant(u64);

    impl Predictor for Constant {
        fn predict(&self, _: &AuditSample) -> Result<Prediction> {
            Ok(Prediction {
                count: self.0,
                domain: None,
                used_fallback: false,
            })
        }
    }

    fn claimed_sample(claimed: u64) -> AuditSample {
        AuditSample::new("p", "a", 1000).with_claimed(claimed)
    }

    #[test]
    fn exact_claim_is_within() {
        let v = audit_sample(&Constant(1000), &claimed_sample(1000), 0.33).unwrap();
        assert!(!v.flagged);
        assert_eq!(v.direction, GapDirection::Within);
        assert_eq!(v.relative_gap, 0.0);
    }

    #[test]
    fn forty_percent_over_is_flagged() {
        let v = audit_sample(&Constant(1000), &claimed_sample(1400), 0.33).unwrap();
        assert!(v.flagged);
        assert_eq!(v.direction, GapDirection::Over);
        assert!((v.relative_gap - 0.4).abs() < 1e-12);
    }

    #[test]
    fn thirty_percent_over_is_not_flagged() {
        let v = audit_sample(&Constant(1000), &claimed_sample(1300), 0.33).unwrap();
        assert!(!v.flagged);
        assert!((v.relative_gap - 0.3).abs() < 1e-12);
    }

    #[test]
    fn under_reports_are_surfaced_too() {
        let v = audit_sample(&Constant(1000), &claimed_sample(500), 0.33).unwrap();
        assert!(v.flagged);
        assert_eq!(v.direction, GapDirection::Under);
    }

    #[test]
    fn missing_claim_is_an_input_error() {
        let sample = AuditSample::new("p", "a", 1000);
        assert!(audit_sample(&Constant(1000), &sample, 0.33).is_err());
    }

    #[test]
    fn truthful_claims_with_oracle_never_flag() {
        let samples: Vec<AuditSample> = (1..50)
            .map(|i| {
                let y = i * 37;
                AuditSample::new(format!("q{i}"), "a", y).with_claimed(y)
            })
            .collect();
        for tolerance in [0.01, 0.33, 1.0] {
            let config = AuditConfig {
                tolerance,
                ..AuditConfig::default()
            };
            let report = audit_dataset(&OraclePredictor, &samples, &config).unwrap();
            assert_eq!(report.flagged_fraction, 0.0);
            assert_eq!(report.aggregate_gap, 0.0);
            assert_eq!(report.verdict, DatasetVerdict::Clean);
        }
    }

    #[test]
    fn uniform_inflation_is_suspicious() {
        let samples: Vec<AuditSample> = (1..=20)
            .map(|i| {
                let y = i * 100;
                AuditSample::new(format!("q{i}"), "a", y).with_claimed(y + y / 2)
            })
            .collect();
        let report = audit_dataset(&OraclePredictor, &samples, &AuditConfig::default()).unwrap();
        assert_eq!(report.flagged_fraction, 1.0);
        assert_eq!(report.verdict, DatasetVerdict::SuspiciousInflation);
    }

    #[test]
    fn alternating_small_gaps_stay_clean() {
        let samples: Vec<AuditSample> = (0..40)
            .map(|i| {
                let y = 1000u64;
                let claimed = if i % 2 == 0 { 1100 } else { 900 };
                AuditSample::new(format!("q{i}"), "a", y).with_claimed(claimed)
            })
            .collect();
        let report = audit_dataset(&OraclePredictor, &samples, &AuditConfig::default()).unwrap();
        assert_eq!(report.flagged_fraction, 0.0);
        assert!(report.aggregate_gap.abs() < 1e-9);
        assert_eq!(report.verdict, DatasetVerdict::Clean);
    }

    #[test]
    fn raising_claims_never_unflags_over() {
        let base = claimed_sample(1400);
        let verdict_low = audit_sample(&Constant(1000), &base, 0.33).unwrap();
        assert!(verdict_low.flagged);
        for extra in [1u64, 100, 10_000] {
            let higher = claimed_sample(1400 + extra);
            let v = audit_sample(&Constant(1000), &higher, 0.33).unwrap();
            assert!(v.flagged);
            assert_eq!(v.direction, GapDirection::Over);
        }
    }

    #[test]
    fn empty_dataset_is_an_input_error() {
        assert!(audit_dataset(&OraclePredictor, &[], &AuditConfig::default()).is_err());
    }

    #[test]
    fn verdict_lines_parse_back() {
        let samples = vec![
            AuditSample::new("a", "b", 100).with_claimed(100),
            AuditSample::new("c", "d", 100).with_claimed(220),
        ];
        let report = audit_dataset(&OraclePredictor, &samples, &AuditConfig::default()).unwrap();
        let jsonl = report.verdicts_jsonl();
        assert_eq!(jsonl.lines().count(), 2);
        for line in jsonl.lines() {
            let v: SampleVerdict = serde_json::from_str(line).unwrap();
            assert_eq!(v.flagged, v.relative_gap.abs() > 0.33);
        }
    }
}
