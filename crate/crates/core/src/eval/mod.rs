//! Accuracy and F1 on held-out data, and the end-to-end experiment runner.

mod experiment;
mod report;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use experiment::{
    extractor_from_settings, is_known_setting, run_experiment, run_with_translator, training_from_settings,
    CorpusConfig, ExperimentConfig, ExperimentError, ExperimentOutput, Task,
};
pub use report::{ClassifierResult, ConfigEcho, DatasetSummary, ExperimentReport, MetricRow};

use crate::classify::{ClassifyError, LabeledPoint, TrainedModel};
use crate::dataset::Label;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("test set is empty")]
    EmptyTestSet,
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Counts with machine as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn from_labels(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut m = Self::default();
        for (truth, predicted) in pairs {
            m.record(truth, predicted);
        }
        m
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Machine, Label::Machine) => self.tp += 1,
            (Label::Human, Label::Machine) => self.fp += 1,
            (Label::Human, Label::Human) => self.tn += 1,
            (Label::Machine, Label::Human) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> Result<Metrics, EvalError> {
        let total = self.total();
        if total == 0 {
            return Err(EvalError::EmptyTestSet);
        }
        let f1_positive = f1(self.tp, self.fp, self.fn_);
        let f1_negative = f1(self.tn, self.fn_, self.fp);
        Ok(Metrics {
            accuracy: (self.tp + self.tn) as f64 / total as f64,
            f1_positive,
            f1_macro: (f1_positive + f1_negative) / 2.0,
            confusion: *self,
        })
    }
}

/// `2tp / (2tp + fp + fn)`, or 0 when the denominator is 0.
fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub f1_positive: f64,
    pub f1_macro: f64,
    pub confusion: ConfusionMatrix,
}

/// Scores `model` on `test_set`.
pub fn evaluate(model: &TrainedModel, test_set: &[LabeledPoint]) -> Result<Metrics, EvalError> {
    if test_set.is_empty() {
        return Err(EvalError::EmptyTestSet);
    }
    ConfusionMatrix::from_labels(
        test_set
            .iter()
            .map(|p| (p.label, model.predict_values(&p.features).label)),
    )
    .metrics()
}

/// Like [`evaluate`], but first checks the examples' feature schema against
/// the model's.
pub fn evaluate_examples(
    model: &TrainedModel,
    test_set: &[crate::dataset::LabeledExample],
) -> Result<Metrics, EvalError> {
    for example in test_set {
        if let Some(fv) = &example.features {
            model.check_schema(fv.schema_version())?;
        }
    }
    let points = crate::classify::points_from_examples(test_set)?;
    evaluate(model, &points)
}
