//! Binary classifiers over seven-dimensional BLEU feature vectors.
//!
//! Every model produces a signed decision score with the machine class on the
//! positive side. A score of exactly zero is classified as machine.

pub mod adaboost;
pub mod linear;
pub mod sgd;
pub mod smo;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adaboost::{AdaBoostHyper, AdaBoostParams, AdaBoostTrace, Stump};
pub use linear::{LinearHyper, LinearParams};
pub use sgd::{SgdHyper, SgdTrace};
pub use smo::{SmoHyper, SmoParams, SmoSolution, SupportVector};

use crate::bleu::{FeatureVector, FEATURE_DIM, FEATURE_SCHEMA_VERSION};
use crate::dataset::{Label, LabeledExample};

/// Identifies the model file layout.
pub const MODEL_FORMAT: &str = "btdetect-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set contains only {0} examples; both labels are required")]
    SingleClass(Label),
    #[error("non-finite value in example {example}, feature {feature}")]
    NonFinite { example: usize, feature: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("SMO did not converge after {iterations} iterations (KKT violation {violation:.3e})")]
    NotConverged { iterations: usize, violation: f64 },
    #[error("feature schema mismatch: model expects `{model}`, features are `{features}`")]
    SchemaMismatch { model: String, features: String },
    #[error("example `{0}` has no features")]
    MissingFeatures(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt model file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("unsupported model file {path}: {message}")]
    UnsupportedVersion { path: PathBuf, message: String },
}

/// A feature vector with its gold label, as consumed by the trainers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub features: [f64; FEATURE_DIM],
    pub label: Label,
}

impl LabeledPoint {
    pub fn new(features: [f64; FEATURE_DIM], label: Label) -> Self {
        Self { features, label }
    }

    pub fn sign(&self) -> f64 {
        self.label.sign()
    }
}

/// Extracts trainer input from featurized examples.
pub fn points_from_examples(examples: &[LabeledExample]) -> Result<Vec<LabeledPoint>, ClassifyError> {
    examples
        .iter()
        .map(|ex| {
            let fv = ex
                .features
                .as_ref()
                .ok_or_else(|| ClassifyError::MissingFeatures(ex.example_id.clone()))?;
            if fv.schema_version() != FEATURE_SCHEMA_VERSION {
                return Err(ClassifyError::SchemaMismatch {
                    model: FEATURE_SCHEMA_VERSION.to_string(),
                    features: fv.schema_version().to_string(),
                });
            }
            Ok(LabeledPoint::new(*fv.values(), ex.label))
        })
        .collect()
}

pub(crate) fn validate_training_set(points: &[LabeledPoint]) -> Result<(), ClassifyError> {
    let first = points.first().ok_or(ClassifyError::EmptyTrainingSet)?;
    for (example, p) in points.iter().enumerate() {
        if let Some(feature) = p.features.iter().position(|v| !v.is_finite()) {
            return Err(ClassifyError::NonFinite { example, feature });
        }
    }
    if points.iter().all(|p| p.label == first.label) {
        return Err(ClassifyError::SingleClass(first.label));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64; FEATURE_DIM], b: &[f64; FEATURE_DIM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Linear,
    Adaboost,
    SvmSmo,
    SvmSgd,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Linear,
        ClassifierKind::Adaboost,
        ClassifierKind::SvmSmo,
        ClassifierKind::SvmSgd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Linear => "linear",
            ClassifierKind::Adaboost => "adaboost",
            ClassifierKind::SvmSmo => "svm_smo",
            ClassifierKind::SvmSgd => "svm_sgd",
        }
    }

    /// Column header used in report tables.
    pub fn display_name(self) -> &'static str {
        match self {
            ClassifierKind::Linear => "LINEAR",
            ClassifierKind::Adaboost => "ADABOOST",
            ClassifierKind::SvmSmo => "SVM(SMO)",
            ClassifierKind::SvmSgd => "SVM(SGD)",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "linear" => Ok(ClassifierKind::Linear),
            "adaboost" => Ok(ClassifierKind::Adaboost),
            "svm_smo" | "smo" => Ok(ClassifierKind::SvmSmo),
            "svm_sgd" | "sgd" => Ok(ClassifierKind::SvmSgd),
            other => Err(format!("unknown classifier `{other}` (expected linear, adaboost, svm_smo or svm_sgd)")),
        }
    }
}

/// Hyperparameters for every classifier kind. `seed` feeds the trainers that
/// shuffle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainingConfig {
    pub linear: LinearHyper,
    pub adaboost: AdaBoostHyper,
    pub smo: SmoHyper,
    pub sgd: SgdHyper,
}

impl TrainingConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.linear.seed = seed;
        self.sgd.seed = seed;
        self
    }

    pub fn train(&self, kind: ClassifierKind, points: &[LabeledPoint]) -> Result<TrainedModel, ClassifyError> {
        match kind {
            ClassifierKind::Linear => linear::train_linear(points, &self.linear),
            ClassifierKind::Adaboost => adaboost::train_adaboost(points, &self.adaboost),
            ClassifierKind::SvmSmo => smo::train_svm_smo(points, &self.smo),
            ClassifierKind::SvmSgd => sgd::train_svm_sgd(points, &self.sgd),
        }
    }
}

/// Kind-specific learned state together with the hyperparameters used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Linear {
        hyperparameters: LinearHyper,
        parameters: LinearParams,
    },
    Adaboost {
        hyperparameters: AdaBoostHyper,
        parameters: AdaBoostParams,
    },
    SvmSmo {
        hyperparameters: SmoHyper,
        parameters: SmoParams,
    },
    SvmSgd {
        hyperparameters: SgdHyper,
        parameters: LinearParams,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub feature_schema_version: String,
    #[serde(flatten)]
    pub spec: ModelSpec,
}

/// Decision score and thresholded label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        Self {
            label: Label::from_score(score),
            score,
        }
    }
}

impl TrainedModel {
    pub fn new(spec: ModelSpec) -> Self {
        Self {
            feature_schema_version: FEATURE_SCHEMA_VERSION.to_string(),
            spec,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.spec {
            ModelSpec::Linear { .. } => ClassifierKind::Linear,
            ModelSpec::Adaboost { .. } => ClassifierKind::Adaboost,
            ModelSpec::SvmSmo { .. } => ClassifierKind::SvmSmo,
            ModelSpec::SvmSgd { .. } => ClassifierKind::SvmSgd,
        }
    }

    /// Signed decision value on raw features, machine-positive.
    pub fn decision_value(&self, features: &[f64; FEATURE_DIM]) -> f64 {
        match &self.spec {
            ModelSpec::Linear { parameters, .. } | ModelSpec::SvmSgd { parameters, .. } => {
                parameters.decision_value(features)
            }
            ModelSpec::Adaboost { parameters, .. } => parameters.decision_value(features),
            ModelSpec::SvmSmo { parameters, .. } => parameters.decision_value(features),
        }
    }

    pub fn predict_values(&self, features: &[f64; FEATURE_DIM]) -> Prediction {
        Prediction::from_score(self.decision_value(features))
    }

    /// Checks that the model and features share a schema, then predicts.
    pub fn predict(&self, features: &FeatureVector) -> Result<Prediction, ClassifyError> {
        self.check_schema(features.schema_version())?;
        Ok(self.predict_values(features.values()))
    }

    pub fn check_schema(&self, schema_version: &str) -> Result<(), ClassifyError> {
        if self.feature_schema_version != schema_version {
            return Err(ClassifyError::SchemaMismatch {
                model: self.feature_schema_version.clone(),
                features: schema_version.to_string(),
            });
        }
        Ok(())
    }
}

/// Free-function form of [`TrainedModel::predict`].
pub fn predict(model: &TrainedModel, features: &FeatureVector) -> Result<Prediction, ClassifyError> {
    model.predict(features)
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format: &'static str,
    format_version: u32,
    #[serde(flatten)]
    model: &'a TrainedModel,
}

/// Serializes a model to pretty JSON, the on-disk model format.
pub fn model_to_json(model: &TrainedModel) -> String {
    let file = ModelFileOut {
        format: MODEL_FORMAT,
        format_version: MODEL_FORMAT_VERSION,
        model,
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
    text.push('\n');
    text
}

/// Parses the on-disk model format. `origin` names the source in errors.
pub fn model_from_json(text: &str, origin: &Path) -> Result<TrainedModel, ClassifyError> {
    let corrupt = |message: String| ClassifyError::Corrupt {
        path: origin.to_path_buf(),
        message,
    };
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| corrupt("top level is not an object".into()))?;
    let format = obj.remove("format");
    if format.as_ref().and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
        return Err(corrupt(format!("missing or wrong `format` marker: {format:?}")));
    }
    match obj.remove("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == MODEL_FORMAT_VERSION as u64 => {}
        other => {
            return Err(ClassifyError::UnsupportedVersion {
                path: origin.to_path_buf(),
                message: format!("format_version {other:?}, expected {MODEL_FORMAT_VERSION}"),
            })
        }
    }
    serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))
}

/// Writes `model` to `path` through a temporary file and an atomic rename.
pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<(), ClassifyError> {
    let path = path.as_ref();
    crate::records::write_atomic(path, model_to_json(model).as_bytes()).map_err(|source| ClassifyError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel, ClassifyError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ClassifyError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&text, path)
}
