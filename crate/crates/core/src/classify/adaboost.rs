//! Discrete AdaBoost over single-feature decision stumps.

use serde::{Deserialize, Serialize};

use super::{validate_training_set, ClassifyError, LabeledPoint, ModelSpec, TrainedModel};
use crate::bleu::FEATURE_DIM;

/// Floor on the weighted error used when computing a stump weight, so a
/// perfect stump still gets a finite weight.
const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaBoostHyper {
    pub rounds: usize,
}

impl Default for AdaBoostHyper {
    fn default() -> Self {
        Self { rounds: 50 }
    }
}

/// Votes `polarity` when `features[feature] > threshold`, else `-polarity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: f64,
    pub weight: f64,
}

impl Stump {
    pub fn vote(&self, features: &[f64; FEATURE_DIM]) -> f64 {
        if features[self.feature] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostParams {
    pub stumps: Vec<Stump>,
}

impl AdaBoostParams {
    pub fn decision_value(&self, features: &[f64; FEATURE_DIM]) -> f64 {
        self.stumps.iter().map(|s| s.weight * s.vote(features)).sum()
    }
}

/// Per-round diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdaBoostTrace {
    /// Weighted error of the stump accepted in each round.
    pub errors: Vec<f64>,
    /// Running product of `2 * sqrt(e * (1 - e))`, the training-error bound.
    pub bounds: Vec<f64>,
    /// Ensemble training error after each round.
    pub training_errors: Vec<f64>,
}

pub fn train_adaboost(points: &[LabeledPoint], hyper: &AdaBoostHyper) -> Result<TrainedModel, ClassifyError> {
    let (parameters, _) = fit_with_trace(points, hyper)?;
    Ok(TrainedModel::new(ModelSpec::Adaboost {
        hyperparameters: *hyper,
        parameters,
    }))
}

/// Trains and also returns the per-round trace.
pub fn fit_with_trace(
    points: &[LabeledPoint],
    hyper: &AdaBoostHyper,
) -> Result<(AdaBoostParams, AdaBoostTrace), ClassifyError> {
    if hyper.rounds == 0 {
        return Err(ClassifyError::InvalidHyperparameter("rounds must be at least 1".into()));
    }
    validate_training_set(points)?;

    let n = points.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut stumps = Vec::new();
    let mut trace = AdaBoostTrace::default();
    let mut bound = 1.0;
    let mut scores = vec![0.0; n];

    for _ in 0..hyper.rounds {
        let (mut stump, error) = best_stump(points, &weights);
        if error >= 0.5 {
            break;
        }
        let clamped = error.max(MIN_ERROR);
        stump.weight = 0.5 * ((1.0 - clamped) / clamped).ln();

        let mut total = 0.0;
        for (i, p) in points.iter().enumerate() {
            let vote = stump.vote(&p.features);
            scores[i] += stump.weight * vote;
            weights[i] *= (-stump.weight * p.sign() * vote).exp();
            total += weights[i];
        }
        for w in &mut weights {
            *w /= total;
        }

        bound *= 2.0 * (error * (1.0 - error)).sqrt();
        let wrong = points
            .iter()
            .zip(&scores)
            .filter(|(p, &s)| super::Label::from_score(s) != p.label)
            .count();
        trace.errors.push(error);
        trace.bounds.push(bound);
        trace.training_errors.push(wrong as f64 / n as f64);
        stumps.push(stump);

        if error == 0.0 {
            break;
        }
    }
    Ok((AdaBoostParams { stumps }, trace))
}

/// Lowest weighted-error stump. Thresholds are midpoints between consecutive
/// distinct values, plus the maximum value (a constant vote). Ties keep the
/// first candidate in (feature, threshold, polarity) order.
fn best_stump(points: &[LabeledPoint], weights: &[f64]) -> (Stump, f64) {
    let total_pos: f64 = points
        .iter()
        .zip(weights)
        .filter(|(p, _)| p.sign() > 0.0)
        .map(|(_, w)| w)
        .sum();
    let total_neg: f64 = weights.iter().sum::<f64>() - total_pos;

    let mut best = (
        Stump {
            feature: 0,
            threshold: 0.0,
            polarity: 1.0,
            weight: 0.0,
        },
        f64::INFINITY,
    );
    let mut order: Vec<usize> = (0..points.len()).collect();
    for feature in 0..FEATURE_DIM {
        order.sort_by(|&a, &b| points[a].features[feature].total_cmp(&points[b].features[feature]));
        // weight of positives / negatives with value <= current threshold
        let mut pos_below = 0.0;
        let mut neg_below = 0.0;
        let mut k = 0;
        while k < order.len() {
            let value = points[order[k]].features[feature];
            while k < order.len() && points[order[k]].features[feature] == value {
                let i = order[k];
                if points[i].sign() > 0.0 {
                    pos_below += weights[i];
                } else {
                    neg_below += weights[i];
                }
                k += 1;
            }
            let threshold = match order.get(k) {
                Some(&next) => value + (points[next].features[feature] - value) / 2.0,
                None => value,
            };
            // polarity +1: predict machine above threshold
            let err_pos = pos_below + (total_neg - neg_below);
            let err_neg = neg_below + (total_pos - pos_below);
            for (polarity, err) in [(1.0, err_pos), (-1.0, err_neg)] {
                let err = err.clamp(0.0, 1.0);
                if err < best.1 {
                    best = (
                        Stump {
                            feature,
                            threshold,
                            polarity,
                            weight: 0.0,
                        },
                        err,
                    );
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;

    fn point(first: f64, label: Label) -> LabeledPoint {
        let mut f = [0.5; FEATURE_DIM];
        f[0] = first;
        LabeledPoint::new(f, label)
    }

    #[test]
    fn single_stump_solves_threshold_data() {
        let pts: Vec<_> = (0..10)
            .map(|i| point(i as f64 / 10.0, if i >= 6 { Label::Machine } else { Label::Human }))
            .collect();
        let (params, trace) = fit_with_trace(&pts, &AdaBoostHyper::default()).unwrap();
        assert_eq!(params.stumps.len(), 1);
        let s = params.stumps[0];
        assert_eq!(s.feature, 0);
        assert!((s.threshold - 0.55).abs() < 1e-12);
        assert!(s.weight.is_finite() && s.weight > 0.0);
        assert_eq!(trace.errors, vec![0.0]);
        for p in &pts {
            assert_eq!(Label::from_score(params.decision_value(&p.features)), p.label);
        }
    }

    #[test]
    fn bound_decreases_and_dominates_training_error() {
        // XOR-like data on two features needs several rounds
        let mut pts = Vec::new();
        for i in 0..40 {
            let a = (i % 8) as f64 / 8.0;
            let b = ((i * 3) % 7) as f64 / 7.0;
            let mut f = [0.0; FEATURE_DIM];
            f[1] = a;
            f[2] = b;
            let label = if (a > 0.5) ^ (b > 0.4) { Label::Machine } else { Label::Human };
            pts.push(LabeledPoint::new(f, label));
        }
        let (_, trace) = fit_with_trace(&pts, &AdaBoostHyper { rounds: 30 }).unwrap();
        assert!(trace.bounds.len() > 1);
        for w in trace.bounds.windows(2) {
            assert!(w[1] < w[0], "{:?}", trace.bounds);
        }
        for (err, bound) in trace.training_errors.iter().zip(&trace.bounds) {
            assert!(err <= bound);
        }
    }

    #[test]
    fn zero_rounds_is_an_error() {
        let pts = vec![point(0.1, Label::Human), point(0.9, Label::Machine)];
        assert!(matches!(
            train_adaboost(&pts, &AdaBoostHyper { rounds: 0 }),
            Err(ClassifyError::InvalidHyperparameter(_))
        ));
    }

    #[test]
    fn uninformative_data_stops_early() {
        let pts = vec![point(0.5, Label::Human), point(0.5, Label::Machine)];
        let (params, trace) = fit_with_trace(&pts, &AdaBoostHyper::default()).unwrap();
        assert!(params.stumps.is_empty());
        assert!(trace.errors.is_empty());
    }
}
