//! Corpus ingestion, tokenization, prompt templates, bucket discretization
//! and synthetic dataset generation.

mod bucket;
mod sample;
mod synthetic;
mod template;
mod tokenize;

pub use bucket::{bucketize, BucketScheme};
pub use sample::{parse_jsonl, serialize_jsonl, AuditSample};
pub use synthetic::{
    gen_content_driven, gen_synthetic, ContentSpec, DomainRule, SyntheticDataset, SyntheticSpec,
};
pub use template::{render_template, PromptMode};
pub use tokenize::{tokenize_count, tokens};
