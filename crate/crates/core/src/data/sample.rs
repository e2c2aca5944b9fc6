//! Audit corpus records and JSONL ingestion.
//!
//! Wire format: one JSON object per line with fields `prompt`, `answer`,
//! `reasoning_tokens` and optional `domain`, `claimed_tokens`. Token lengths
//! are never read from disk; they are recomputed from the texts on ingestion
//! so they can not drift from the tokenizer.

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize_count;
use crate::error::{Error, Result};

/// One prompt/answer pair with its ground-truth hidden reasoning-token count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditSample {
    pub prompt: String,
    pub answer: String,
    /// Ground-truth hidden count; at least 1 (the reward divides by it).
    pub reasoning_tokens: u64,
    pub domain: Option<String>,
    /// Count reported by the service, when auditing billing.
    pub claimed_tokens: Option<u64>,
    /// Tokens in `prompt`, always `tokenize_count(&prompt)`.
    pub input_len: u64,
    /// Tokens in `answer`, always `tokenize_count(&answer)`.
    pub output_len: u64,
}

impl AuditSample {
    /// Build a sample, computing the token lengths.
    ///
    /// Panics if `reasoning_tokens` is zero; corpus ingestion goes through
    /// [`parse_jsonl`], which reports that case as an error instead.
    pub fn new(prompt: impl Into<String>, answer: impl Into<String>, reasoning_tokens: u64) -> Self {
        assert!(reasoning_tokens >= 1, "reasoning_tokens must be >= 1");
        let prompt = prompt.into();
        let answer = answer.into();
        let input_len = tokenize_count(&prompt);
        let output_len = tokenize_count(&answer);
        AuditSample {
            prompt,
            answer,
            reasoning_tokens,
            domain: None,
            claimed_tokens: None,
            input_len,
            output_len,
        }
    }

    pub fn with_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain = Some(domain.into());
        self
    }

    pub fn with_claimed(mut self, claimed: u64) -> Self {
        self.claimed_tokens = Some(claimed);
        self
    }
}

/// On-disk shape of one record.
#[derive(Serialize, Deserialize)]
struct RawRecord {
    prompt: String,
    answer: String,
    reasoning_tokens: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    claimed_tokens: Option<u64>,
}

/// Parse a JSONL corpus. Line numbers in errors are 1-based; blank lines are
/// skipped. Records are returned in input order.
pub fn parse_jsonl<I, S>(lines: I) -> Result<Vec<AuditSample>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut samples = Vec::new();
    for (idx, line) in lines.into_iter().enumerate() {
        let line = line.as_ref();
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Schema {
            line: line_no,
            message: e.to_string(),
        })?;
        if raw.reasoning_tokens < 1 {
            return Err(Error::Rejected {
                line: line_no,
                message: "reasoning_tokens must be >= 1".into(),
            });
        }
        let mut sample = AuditSample::new(raw.prompt, raw.answer, raw.reasoning_tokens);
        sample.domain = raw.domain;
        sample.claimed_tokens = raw.claimed_tokens;
        samples.push(sample);
    }
    Ok(samples)
}

/// Serialize samples back to JSONL, one record per line with a trailing
/// newline. `parse_jsonl` of the output reproduces the input samples.
pub fn serialize_jsonl(samples: &[AuditSample]) -> String {
    let mut out = String::new();
    for s in samples {
        let raw = RawRecord {
            prompt: s.prompt.clone(),
            answer: s.answer.clone(),
            reasoning_tokens: s.reasoning_tokens,
            domain: s.domain.clone(),
            claimed_tokens: s.claimed_tokens,
        };
        out.push_str(&serde_json::to_string(&raw).expect("record serializes"));
        out.push('\n');
    }
    out
}
