//! Persistence and composition of the base model, per-domain deltas, the
//! router and the baselines.
//!
//! Every artifact is one JSON file: a `schema` version, a `kind` tag, the
//! feature-space header (schema version and hash width) and the flat
//! parameter values. JSON floats round-trip f64 exactly and serialize
//! deterministically, so save/load reproduces an artifact bit for bit and
//! identical training runs produce identical files. Writes replace the
//! whole file via a temporary sibling, so readers never observe partial
//! state.
//!
//! Directory layout: `base.json`, one `delta-<domain>.json` per adapter,
//! `router.json`, and `manifest.json` with content digests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{BaselineMode, BaselineModel};
use crate::data::BucketScheme;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, DENSE_FEATURES, FEATURE_SCHEMA_VERSION};
use crate::grpo::AdapterDelta;
use crate::policy::{PolicyParams, PolicyShape};
use crate::router::RouterModel;

/// Version of the artifact file layout.
pub const SCHEMA_VERSION: u32 = 1;

/// On-disk artifact body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    Policy {
        feature_schema: u32,
        hash_width: usize,
        input_dim: usize,
        hidden_dim: usize,
        values: Vec<f64>,
    },
    AdapterDelta {
        feature_schema: u32,
        hash_width: usize,
        input_dim: usize,
        hidden_dim: usize,
        domain: String,
        provenance: String,
        values: Vec<f64>,
    },
    Router {
        feature_schema: u32,
        hash_width: usize,
        labels: Vec<String>,
        weights: Vec<f64>,
        bias: Vec<f64>,
    },
    Baseline {
        feature_schema: u32,
        mode: BaselineMode,
        hidden_dim: usize,
        values: Vec<f64>,
        scheme: Option<BucketScheme>,
    },
}

#[derive(Serialize, Deserialize)]
struct StoredFile {
    schema: u32,
    #[serde(flatten)]
    body: Artifact,
}

impl Artifact {
    pub fn policy(params: &PolicyParams, features: &FeatureConfig) -> Artifact {
        assert_eq!(params.shape().input_dim, features.feature_dim());
        Artifact::Policy {
            feature_schema: FEATURE_SCHEMA_VERSION,
            hash_width: features.hash_width,
            input_dim: params.shape().input_dim,
            hidden_dim: params.shape().hidden_dim,
            values: params.values().to_vec(),
        }
    }

    pub fn adapter(delta: &AdapterDelta, features: &FeatureConfig) -> Artifact {
        assert_eq!(delta.shape.input_dim, features.feature_dim());
        Artifact::AdapterDelta {
            feature_schema: FEATURE_SCHEMA_VERSION,
            hash_width: features.hash_width,
            input_dim: delta.shape.input_dim,
            hidden_dim: delta.shape.hidden_dim,
            domain: delta.domain.clone(),
            provenance: delta.provenance.clone(),
            values: delta.delta.clone(),
        }
    }

    pub fn router(model: &RouterModel) -> Artifact {
        Artifact::Router {
            feature_schema: FEATURE_SCHEMA_VERSION,
            hash_width: model.hash_width,
            labels: model.labels.clone(),
            weights: model.weights.clone(),
            bias: model.bias.clone(),
        }
    }

    pub fn baseline(model: &BaselineModel) -> Artifact {
        Artifact::Baseline {
            feature_schema: FEATURE_SCHEMA_VERSION,
            mode: model.mode,
            hidden_dim: model.hidden_dim,
            values: model.values.clone(),
            scheme: model.scheme.clone(),
        }
    }

    fn check_feature_schema(found: u32) -> Result<()> {
        if found != FEATURE_SCHEMA_VERSION {
            return Err(Error::Incompatible(format!(
                "feature schema {found}, this build expects {FEATURE_SCHEMA_VERSION}"
            )));
        }
        Ok(())
    }

    pub fn as_policy(&self) -> Result<(PolicyParams, FeatureConfig)> {
        match self {
            Artifact::Policy {
                feature_schema,
                hash_width,
                input_dim,
                hidden_dim,
                values,
            } => {
                Self::check_feature_schema(*feature_schema)?;
                let features = FeatureConfig {
                    hash_width: *hash_width,
                };
                if features.feature_dim() != *input_dim {
                    return Err(Error::Incompatible(format!(
                        "input_dim {} does not match hash_width {} + {}",
                        input_dim, hash_width, DENSE_FEATURES
                    )));
                }
                let shape = PolicyShape::new(*input_dim, *hidden_dim);
                Ok((PolicyParams::from_values(shape, values.clone())?, features))
            }
            other => Err(Error::Incompatible(format!(
                "expected a policy artifact, found {}",
                other.kind_name()
            ))),
        }
    }

    pub fn as_adapter(&self) -> Result<(AdapterDelta, FeatureConfig)> {
        match self {
            Artifact::AdapterDelta {
                feature_schema,
                hash_width,
                input_dim,
                hidden_dim,
                domain,
                provenance,
                values,
            } => {
                Self::check_feature_schema(*feature_schema)?;
                let shape = PolicyShape::new(*input_dim, *hidden_dim);
                if values.len() != shape.param_count() {
                    return Err(Error::Incompatible(format!(
                        "delta holds {} values, shape wants {}",
                        values.len(),
                        shape.param_count()
                    )));
                }
                Ok((
                    AdapterDelta {
                        domain: domain.clone(),
                        shape,
                        delta: values.clone(),
                        provenance: provenance.clone(),
                    },
                    FeatureConfig {
                        hash_width: *hash_width,
                    },
                ))
            }
            other => Err(Error::Incompatible(format!(
                "expected an adapter delta artifact, found {}",
                other.kind_name()
            ))),
        }
    }

    pub fn as_router(&self) -> Result<RouterModel> {
        match self {
            Artifact::Router {
                feature_schema,
                hash_width,
                labels,
                weights,
                bias,
            } => {
                Self::check_feature_schema(*feature_schema)?;
                if weights.len() != labels.len() * hash_width || bias.len() != labels.len() {
                    return Err(Error::Incompatible("router weight table malformed".into()));
                }
                Ok(RouterModel {
                    labels: labels.clone(),
                    hash_width: *hash_width,
                    weights: weights.clone(),
                    bias: bias.clone(),
                })
            }
            other => Err(Error::Incompatible(format!(
                "expected a router artifact, found {}",
                other.kind_name()
            ))),
        }
    }

    pub fn as_baseline(&self) -> Result<BaselineModel> {
        match self {
            Artifact::Baseline {
                feature_schema,
                mode,
                hidden_dim,
                values,
                scheme,
            } => {
                Self::check_feature_schema(*feature_schema)?;
                BaselineModel::from_parts(*mode, *hidden_dim, values.clone(), scheme.clone())
            }
            other => Err(Error::Incompatible(format!(
                "expected a baseline artifact, found {}",
                other.kind_name()
            ))),
        }
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Artifact::Policy { .. } => "policy",
            Artifact::AdapterDelta { .. } => "adapter_delta",
            Artifact::Router { .. } => "router",
            Artifact::Baseline { .. } => "baseline",
        }
    }
}

/// Serialize an artifact to its canonical byte form.
pub fn artifact_bytes(artifact: &Artifact) -> Vec<u8> {
    let mut bytes = serde_json::to_vec(&StoredFile {
        schema: SCHEMA_VERSION,
        body: artifact.clone(),
    })
    .expect("artifact serializes");
    bytes.push(b'\n');
    bytes
}

/// Atomically write `artifact` to `path` (whole-file replace).
pub fn save_artifact(path: &Path, artifact: &Artifact) -> Result<()> {
    write_atomic(path, &artifact_bytes(artifact))
}

/// Load and validate an artifact; a wrong schema version is rejected before
/// anything is interpreted.
pub fn load_artifact(path: &Path) -> Result<Artifact> {
    let bytes = std::fs::read(path)?;
    let stored: StoredFile = serde_json::from_slice(&bytes)?;
    if stored.schema != SCHEMA_VERSION {
        return Err(Error::Incompatible(format!(
            "artifact schema {} in {}, this build expects {SCHEMA_VERSION}",
            stored.schema,
            path.display()
        )));
    }
    Ok(stored.body)
}

/// Write bytes via a temporary sibling plus rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Compose an adapter onto the base model: elementwise sum, inputs
/// untouched.
pub fn apply_delta(base: &PolicyParams, delta: &AdapterDelta) -> Result<PolicyParams> {
    if *base.shape() != delta.shape {
        return Err(Error::Shape(format!(
            "base is {}x{}, delta is {}x{}",
            base.shape().input_dim,
            base.shape().hidden_dim,
            delta.shape.input_dim,
            delta.shape.hidden_dim
        )));
    }
    let values = base
        .values()
        .iter()
        .zip(&delta.delta)
        .map(|(b, d)| b + d)
        .collect();
    PolicyParams::from_values(*base.shape(), values)
}

/// File-name conventions inside a model directory.
pub fn base_file(dir: &Path) -> PathBuf {
    dir.join("base.json")
}

pub fn delta_file(dir: &Path, domain: &str) -> PathBuf {
    dir.join(format!("delta-{domain}.json"))
}

pub fn router_file(dir: &Path) -> PathBuf {
    dir.join("router.json")
}

pub fn manifest_file(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

/// Content digests of the files in a model directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn record(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.entries.insert(name.into(), sha256_hex(bytes));
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)
    }

    pub fn load(path: &Path) -> Result<Manifest> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    /// Recompute every digest relative to `dir` and compare.
    pub fn verify(&self, dir: &Path) -> Result<()> {
        for (name, digest) in &self.entries {
            let bytes = std::fs::read(dir.join(name))?;
            let found = sha256_hex(&bytes);
            if found != *digest {
                return Err(Error::Incompatible(format!(
                    "digest mismatch for {name}: manifest {digest}, file {found}"
                )));
            }
        }
        Ok(())
    }
}
