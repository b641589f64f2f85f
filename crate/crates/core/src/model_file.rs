//! Model persistence.
//!
//! A model is one JSON document. Every real is written with 17 significant
//! digits, so loading a saved model reproduces each `f64` bit-for-bit.
//! Private models carry only the released quantities; dual coefficients and
//! training entries are written for non-private `svm` models alone, and saving
//! a private model checks that neither key slipped in.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{Database, Example};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::mechanisms::{Claims, FeatureMap, PrivateModel};
use crate::numfmt::to_json_string;
use crate::rff::RandomFeatureMap;
use crate::solver::{identity_features, SvmModel};

pub const FORMAT_VERSION: u32 = 1;

/// Keys that must never appear in a released model.
pub const FORBIDDEN_PRIVATE_KEYS: [&str; 2] = ["alphas", "entries"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismTag {
    Svm,
    PrivateFinite,
    PrivateRff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format_version: u32,
    mechanism: MechanismTag,
    kernel: KernelSpec,
    #[serde(rename = "C")]
    c: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    d_hat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    omegas: Option<Vec<Vec<f64>>>,
    /// Primal weights; absent for non-linear `svm` models, which have no finite primal form.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    claimed: Option<Claims>,
    n: usize,
    dim: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    entries: Option<Vec<Example>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    kkt_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LoadedModel {
    Svm(SvmModel),
    Private(PrivateModel),
}

impl LoadedModel {
    pub fn dim(&self) -> usize {
        match self {
            LoadedModel::Svm(m) => m.support.dim(),
            LoadedModel::Private(m) => m.feature_map.input_dim(),
        }
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        match self {
            LoadedModel::Svm(m) => m.decision(x),
            LoadedModel::Private(m) => m.decision(x),
        }
    }
}

impl From<SvmModel> for LoadedModel {
    fn from(m: SvmModel) -> Self {
        LoadedModel::Svm(m)
    }
}

impl From<PrivateModel> for LoadedModel {
    fn from(m: PrivateModel) -> Self {
        LoadedModel::Private(m)
    }
}

fn svm_document(m: &SvmModel) -> Result<ModelDocument> {
    let weights = match m.kernel {
        KernelSpec::Linear => Some(m.primal_weights(identity_features)?.0),
        _ => None,
    };
    Ok(ModelDocument {
        format_version: FORMAT_VERSION,
        mechanism: MechanismTag::Svm,
        kernel: m.kernel,
        c: m.c,
        lambda: None,
        d_hat: None,
        seed: None,
        omegas: None,
        weights,
        claimed: None,
        n: m.support.len(),
        dim: m.support.dim(),
        alphas: Some(m.alphas.clone()),
        entries: Some(m.support.entries().to_vec()),
        objective: Some(m.objective),
        kkt_residual: Some(m.kkt_residual),
    })
}

fn private_document(m: &PrivateModel) -> ModelDocument {
    let (mechanism, d_hat, seed, omegas) = match &m.feature_map {
        FeatureMap::Identity { .. } => (MechanismTag::PrivateFinite, None, None, None),
        FeatureMap::Random(map) => (
            MechanismTag::PrivateRff,
            Some(map.d_hat()),
            Some(map.seed()),
            Some(map.omegas().to_vec()),
        ),
    };
    ModelDocument {
        format_version: FORMAT_VERSION,
        mechanism,
        kernel: m.kernel,
        c: m.c,
        lambda: Some(m.lambda),
        d_hat,
        seed,
        omegas,
        weights: Some(m.w_hat.clone()),
        claimed: Some(m.claimed.clone()),
        n: m.claimed.n,
        dim: m.feature_map.input_dim(),
        alphas: None,
        entries: None,
        objective: None,
        kkt_residual: None,
    }
}

/// Names of forbidden keys found anywhere in `value`.
pub fn forbidden_keys(value: &Value) -> Vec<String> {
    let mut found = Vec::new();
    collect_forbidden(value, &mut found);
    found
}

fn collect_forbidden(value: &Value, found: &mut Vec<String>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                if FORBIDDEN_PRIVATE_KEYS.contains(&k.as_str()) {
                    found.push(k.clone());
                }
                collect_forbidden(v, found);
            }
        }
        Value::Array(items) => items.iter().for_each(|v| collect_forbidden(v, found)),
        _ => {}
    }
}

pub fn svm_to_string(m: &SvmModel) -> Result<String> {
    to_json_string(&svm_document(m)?)
}

/// Serializes a released model, refusing if the document would leak
/// dual coefficients or training entries.
pub fn private_to_string(m: &PrivateModel) -> Result<String> {
    let value = serde_json::to_value(private_document(m))?;
    if let Some(key) = forbidden_keys(&value).into_iter().next() {
        return Err(Error::ReleaseContract(key));
    }
    to_json_string(&value)
}

pub fn model_to_string(m: &LoadedModel) -> Result<String> {
    match m {
        LoadedModel::Svm(s) => svm_to_string(s),
        LoadedModel::Private(p) => private_to_string(p),
    }
}

pub fn save_model(m: &LoadedModel, path: &Path) -> Result<()> {
    let mut text = model_to_string(m)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    model_from_str(&fs::read_to_string(path)?)
}

pub fn model_from_str(text: &str) -> Result<LoadedModel> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Malformed("missing integer format_version".into()))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(Error::Version {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: FORMAT_VERSION,
        });
    }
    let doc: ModelDocument =
        serde_json::from_value(value).map_err(|e| Error::Malformed(e.to_string()))?;
    from_document(doc)
}

fn missing(field: &str) -> Error {
    Error::Malformed(format!("missing field {field:?}"))
}

fn from_document(doc: ModelDocument) -> Result<LoadedModel> {
    doc.kernel
        .validate()
        .map_err(|e| Error::Malformed(e.to_string()))?;
    if doc.mechanism != MechanismTag::Svm {
        if let Some(key) = [doc.alphas.is_some(), doc.entries.is_some()]
            .iter()
            .zip(FORBIDDEN_PRIVATE_KEYS)
            .find_map(|(present, k)| present.then_some(k))
        {
            return Err(Error::ReleaseContract(key.into()));
        }
    }
    match doc.mechanism {
        MechanismTag::Svm => {
            let entries = doc.entries.ok_or_else(|| missing("entries"))?;
            let alphas = doc.alphas.ok_or_else(|| missing("alphas"))?;
            let support = Database::new(entries)?;
            if alphas.len() != support.len() || support.len() != doc.n || support.dim() != doc.dim {
                return Err(Error::Malformed("svm sizes are inconsistent".into()));
            }
            Ok(LoadedModel::Svm(SvmModel {
                alphas,
                support,
                kernel: doc.kernel,
                c: doc.c,
                objective: doc.objective.ok_or_else(|| missing("objective"))?,
                kkt_residual: doc.kkt_residual.ok_or_else(|| missing("kkt_residual"))?,
            }))
        }
        MechanismTag::PrivateFinite | MechanismTag::PrivateRff => {
            let w_hat = doc.weights.ok_or_else(|| missing("weights"))?;
            let lambda = doc.lambda.ok_or_else(|| missing("lambda"))?;
            let feature_map = if doc.mechanism == MechanismTag::PrivateRff {
                let omegas = doc.omegas.ok_or_else(|| missing("omegas"))?;
                let map = RandomFeatureMap::from_parts(
                    doc.kernel,
                    omegas,
                    doc.seed.ok_or_else(|| missing("seed"))?,
                )?;
                if Some(map.d_hat()) != doc.d_hat {
                    return Err(Error::Malformed("d_hat disagrees with omegas".into()));
                }
                FeatureMap::Random(map)
            } else {
                FeatureMap::Identity { dim: doc.dim }
            };
            if feature_map.input_dim() != doc.dim || feature_map.feature_dim() != w_hat.len() {
                return Err(Error::Malformed("weights do not match the feature map".into()));
            }
            Ok(LoadedModel::Private(PrivateModel {
                w_hat,
                feature_map,
                kernel: doc.kernel,
                c: doc.c,
                lambda,
                claimed: doc.claimed.ok_or_else(|| missing("claimed"))?,
            }))
        }
    }
}
