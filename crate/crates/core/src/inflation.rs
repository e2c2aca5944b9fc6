//! Misreporting simulation: transform ground-truth counts into claimed
//! counts under parameterized provider strategies, then score how the audit
//! responds across inflation rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit::{AuditReport, DatasetVerdict};
use crate::data::AuditSample;
use crate::error::Result;
use crate::hashing::mix_seed;

/// How the simulated provider misreports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InflationStrategy {
    /// Report the truth.
    None,
    /// Scale every count by `1 + rate`.
    Multiplicative,
    /// Pad every count by `rate` tokens.
    Additive,
    /// Scale a random `p_sel` fraction of samples, leave the rest honest.
    Selective { p_sel: f64 },
}

/// Claimed count for one truth under a strategy. Never below 1;
/// deterministic for a given RNG stream.
pub fn inflate<R: Rng + ?Sized>(
    truth: u64,
    strategy: InflationStrategy,
    rate: f64,
    rng: &mut R,
) -> u64 {
    assert!(rate >= 0.0, "rate must be nonnegative");
    let claimed = match strategy {
        InflationStrategy::None => truth,
        InflationStrategy::Multiplicative => (truth as f64 * (1.0 + rate)).round() as u64,
        InflationStrategy::Additive => truth + rate.round() as u64,
        InflationStrategy::Selective { p_sel } => {
            assert!((0.0..=1.0).contains(&p_sel), "p_sel must lie in [0, 1]");
            if rng.random_bool(p_sel) {
                (truth as f64 * (1.0 + rate)).round() as u64
            } else {
                truth
            }
        }
    };
    claimed.max(1)
}

/// One point of a detection sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionPoint {
    pub rate: f64,
    pub flagged_fraction: f64,
    pub verdict: DatasetVerdict,
}

/// For each rate: forge claimed counts over the dataset, run the audit
/// closure, and record the flagged fraction and dataset verdict. Claims are
/// drawn from per-(rate, sample) RNG streams so the sweep is deterministic
/// and order-independent.
pub fn evaluate_detection<F>(
    audit: F,
    samples: &[AuditSample],
    strategy: InflationStrategy,
    rates: &[f64],
    seed: u64,
) -> Result<Vec<DetectionPoint>>
where
    F: Fn(&[AuditSample]) -> Result<AuditReport>,
{
    let mut points = Vec::with_capacity(rates.len());
    for (rate_idx, rate) in rates.iter().enumerate() {
        let forged: Vec<AuditSample> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(mix_seed(seed, rate_idx as u64, i as u64));
                let claimed = inflate(s.reasoning_tokens, strategy, *rate, &mut rng);
                s.clone().with_claimed(claimed)
            })
            .collect();
        let report = audit(&forged)?;
        points.push(DetectionPoint {
            rate: *rate,
            flagged_fraction: report.flagged_fraction,
            verdict: report.verdict,
        });
    }
    Ok(points)
}
