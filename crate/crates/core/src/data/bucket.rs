//! Discretization of token counts into five per-domain usage buckets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Five half-open count intervals for one domain: `[0, e0) [e0, e1) [e1, e2)
/// [e2, e3) [e3, inf)`. Edges are left-inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketScheme {
    pub domain: String,
    pub edges: [u64; 4],
}

impl BucketScheme {
    pub fn new(domain: impl Into<String>, edges: [u64; 4]) -> Result<Self> {
        if !(edges[0] < edges[1] && edges[1] < edges[2] && edges[2] < edges[3]) {
            return Err(Error::Config(format!(
                "bucket edges must be strictly increasing, got {edges:?}"
            )));
        }
        Ok(BucketScheme {
            domain: domain.into(),
            edges,
        })
    }

    /// Equal-frequency edges from observed counts: quintile boundaries,
    /// nudged upward where ties would collapse an interval.
    pub fn from_counts(domain: impl Into<String>, counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Config("cannot derive buckets from no counts".into()));
        }
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let mut edges = [0u64; 4];
        let mut prev = 0u64;
        for (i, edge) in edges.iter_mut().enumerate() {
            let q = sorted[(n * (i + 1) / 5).min(n - 1)];
            *edge = q.max(prev + 1);
            prev = *edge;
        }
        BucketScheme::new(domain, edges)
    }

    pub fn bucket_count(&self) -> usize {
        5
    }
}

/// Map a count to its bucket index in `0..=4`.
pub fn bucketize(count: u64, scheme: &BucketScheme) -> usize {
    scheme.edges.iter().take_while(|e| count >= **e).count()
}
