//! Evaluation metrics for count predictions.
//!
//! * Pass@1 — fraction of greedy predictions whose relative error is
//!   strictly below the threshold.
//! * Pass@k — fraction of samples where any of the temperature samples
//!   passes the same strict test; the greedy prediction is not pooled in.
//! * Average error — mean relative deviation of the greedy predictions.
//! * Aggregated error — relative deviation of the summed predictions from
//!   the summed truths, the dataset-level cumulative bias.
//!
//! The pass test is strict (`< delta`): a prediction sitting exactly on the
//! threshold fails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four dataset metrics plus the threshold and sample count they were
/// computed at. Fields hold raw fractions; the JSON form reports
/// percentages at two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pass1: f64,
    pub pass5: f64,
    pub avg_error: f64,
    pub agg_error: f64,
    pub delta: f64,
    pub count: usize,
}

fn pct2(fraction: f64) -> f64 {
    (fraction * 10_000.0).round() / 100.0
}

impl MetricsReport {
    /// One JSON object with percentages rounded to two decimal places.
    pub fn table_json(&self) -> serde_json::Value {
        serde_json::json!({
            "pass1_pct": pct2(self.pass1),
            "pass5_pct": pct2(self.pass5),
            "avg_error_pct": pct2(self.avg_error),
            "agg_error_pct": pct2(self.agg_error),
            "delta": self.delta,
            "count": self.count,
        })
    }
}

impl std::fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Pass@1 {:.2}%  Pass@5 {:.2}%  AVG {:.2}%  AGG {:.2}%  (delta {}, n {})",
            pct2(self.pass1),
            pct2(self.pass5),
            pct2(self.avg_error),
            pct2(self.agg_error),
            self.delta,
            self.count
        )
    }
}

fn validate_inputs(greedy: &[u64], sampled: Option<&[Vec<u64>]>, truths: &[u64], delta: f64) -> Result<()> {
    if greedy.len() != truths.len() {
        return Err(Error::Input(format!(
            "greedy predictions ({}) and truths ({}) disagree",
            greedy.len(),
            truths.len()
        )));
    }
    if let Some(sampled) = sampled {
        if sampled.len() != truths.len() {
            return Err(Error::Input(format!(
                "sampled predictions ({}) and truths ({}) disagree",
                sampled.len(),
                truths.len()
            )));
        }
    }
    if truths.is_empty() {
        return Err(Error::Input("no samples to evaluate".into()));
    }
    if truths.iter().any(|y| *y < 1) {
        return Err(Error::Input("truths must be >= 1".into()));
    }
    if delta <= 0.0 {
        return Err(Error::Input("delta must be positive".into()));
    }
    Ok(())
}

/// Compute all four metrics at threshold `delta`.
pub fn compute_metrics(
    greedy: &[u64],
    sampled: &[Vec<u64>],
    truths: &[u64],
    delta: f64,
) -> Result<MetricsReport> {
    validate_inputs(greedy, Some(sampled), truths, delta)?;
    let n = truths.len();
    let mut pass1_hits = 0usize;
    let mut pass5_hits = 0usize;
    let mut err_sum = 0.0f64;
    let mut pred_total = 0u64;
    let mut truth_total = 0u64;
    for i in 0..n {
        let truth = truths[i] as f64;
        let rel = (greedy[i] as f64 - truth).abs() / truth;
        if rel < delta {
            pass1_hits += 1;
        }
        let mut any = false;
        for s in &sampled[i] {
            if (*s as f64 - truth).abs() / truth < delta {
                any = true;
            }
        }
        if any {
            pass5_hits += 1;
        }
        err_sum += rel;
        pred_total += greedy[i];
        truth_total += truths[i];
    }
    Ok(MetricsReport {
        pass1: pass1_hits as f64 / n as f64,
        pass5: pass5_hits as f64 / n as f64,
        avg_error: err_sum / n as f64,
        agg_error: (pred_total as f64 - truth_total as f64).abs() / truth_total as f64,
        delta,
        count: n,
    })
}

/// Pass@1 rate at each threshold. Thresholds must be positive and sorted
/// ascending; the resulting curve is monotone by construction.
pub fn threshold_sweep(
    greedy: &[u64],
    truths: &[u64],
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if thresholds.is_empty() {
        return Err(Error::Input("no thresholds given".into()));
    }
    for pair in thresholds.windows(2) {
        if pair[1] < pair[0] {
            return Err(Error::Input("thresholds must be sorted ascending".into()));
        }
    }
    let mut curve = Vec::with_capacity(thresholds.len());
    for t in thresholds {
        validate_inputs(greedy, None, truths, *t)?;
        let mut hits = 0usize;
        for i in 0..truths.len() {
            let rel = (greedy[i] as f64 - truths[i] as f64).abs() / truths[i] as f64;
            if rel < *t {
                hits += 1;
            }
        }
        curve.push((*t, hits as f64 / truths.len() as f64));
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example() {
        let greedy = [100, 200, 400];
        let truths = [100, 300, 300];
        let sampled = vec![vec![100], vec![200], vec![400]];
        let report = compute_metrics(&greedy, &sampled, &truths, 0.33).unwrap();
        assert!((report.pass1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((report.avg_error - 2.0 / 9.0).abs() < 1e-12);
        assert_eq!(report.agg_error, 0.0); // signed deviations cancel
    }

    #[test]
    fn any_passing_sample_counts_for_pass5() {
        let report = compute_metrics(
            &[1000],
            &[vec![400, 290, 500, 100, 350]],
            &[300],
            0.33,
        )
        .unwrap();
        assert_eq!(report.pass1, 0.0);
        assert_eq!(report.pass5, 1.0); // 290 is 3.3% off
    }

    #[test]
    fn perfect_predictions() {
        let truths = [50, 700, 12000];
        let sampled: Vec<Vec<u64>> = truths.iter().map(|y| vec![*y; 5]).collect();
        let report = compute_metrics(&truths, &sampled, &truths, 0.33).unwrap();
        assert_eq!(report.pass1, 1.0);
        assert_eq!(report.pass5, 1.0);
        assert_eq!(report.avg_error, 0.0);
        assert_eq!(report.agg_error, 0.0);
    }

    #[test]
    fn boundary_error_fails_the_strict_test() {
        // |400 - 300| / 300 = 1/3: fails at delta 1/3, passes at 0.5.
        let curve = threshold_sweep(&[100, 200, 400], &[100, 300, 300], &[0.1, 0.3, 0.5, 1.0])
            .unwrap();
        let rates: Vec<f64> = curve.iter().map(|(_, r)| *r).collect();
        assert!((rates[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((rates[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(rates[2], 1.0);
        assert_eq!(rates[3], 1.0);
    }

    #[test]
    fn length_mismatch_is_an_input_error() {
        assert!(compute_metrics(&[1, 2], &[vec![1], vec![2]], &[1], 0.33).is_err());
        assert!(compute_metrics(&[1], &[vec![1], vec![2]], &[1], 0.33).is_err());
    }

    #[test]
    fn zero_truth_is_rejected() {
        assert!(compute_metrics(&[1], &[vec![1]], &[0], 0.33).is_err());
    }

    #[test]
    fn table_json_reports_two_decimal_percentages() {
        let report = MetricsReport {
            pass1: 1.0 / 3.0,
            pass5: 0.5,
            avg_error: 2.0 / 9.0,
            agg_error: 0.12345,
            delta: 0.33,
            count: 3,
        };
        let json = report.table_json();
        assert_eq!(json["pass1_pct"], 33.33);
        assert_eq!(json["pass5_pct"], 50.0);
        assert_eq!(json["avg_error_pct"], 22.22);
        assert_eq!(json["agg_error_pct"], 12.35);
    }
}
