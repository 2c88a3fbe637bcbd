//! Linear SVM trained by stochastic subgradient descent on
//! `lambda/2 |w|^2 + mean(max(0, 1 - y (w.x + b)))`, with iterate averaging.
//!
//! The step size is `1 / (1 + lambda t)`. The bias is not regularized. The
//! returned model is the running average of all iterates.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::LinearParams;
use super::{dot, validate_training_set, ClassifyError, LabeledPoint, ModelSpec, TrainedModel};
use crate::bleu::FEATURE_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdHyper {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SgdHyper {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SgdTrace {
    /// Full-set objective of the averaged iterate at the end of each epoch.
    pub objectives: Vec<f64>,
}

/// Regularized hinge objective of `params` over `points`.
pub fn objective(points: &[LabeledPoint], params: &LinearParams, lambda: f64) -> f64 {
    let hinge: f64 = points
        .iter()
        .map(|p| (1.0 - p.sign() * params.decision_value(&p.features)).max(0.0))
        .sum();
    0.5 * lambda * dot(&params.weights, &params.weights) + hinge / points.len() as f64
}

pub fn train_svm_sgd(points: &[LabeledPoint], hyper: &SgdHyper) -> Result<TrainedModel, ClassifyError> {
    let (parameters, _) = fit_with_trace(points, hyper)?;
    Ok(TrainedModel::new(ModelSpec::SvmSgd {
        hyperparameters: *hyper,
        parameters,
    }))
}

pub fn fit_with_trace(points: &[LabeledPoint], hyper: &SgdHyper) -> Result<(LinearParams, SgdTrace), ClassifyError> {
    validate_training_set(points)?;
    if !(hyper.lambda > 0.0 && hyper.lambda.is_finite()) {
        return Err(ClassifyError::InvalidHyperparameter(format!(
            "lambda must be positive, got {}",
            hyper.lambda
        )));
    }
    if hyper.epochs == 0 {
        return Err(ClassifyError::InvalidHyperparameter("epochs must be at least 1".into()));
    }

    let lambda = hyper.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut w = [0.0; FEATURE_DIM];
    let mut b = 0.0;
    let mut avg_w = [0.0; FEATURE_DIM];
    let mut avg_b = 0.0;
    let mut t: u64 = 0;
    let mut trace = SgdTrace::default();

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let p = &points[i];
            let y = p.sign();
            let eta = 1.0 / (1.0 + lambda * t as f64);
            let margin = y * (dot(&w, &p.features) + b);
            let shrink = 1.0 - eta * lambda;
            for wk in &mut w {
                *wk *= shrink;
            }
            if margin < 1.0 {
                for (wk, xk) in w.iter_mut().zip(&p.features) {
                    *wk += eta * y * xk;
                }
                b += eta * y;
            }
            t += 1;
            let rate = 1.0 / t as f64;
            for (a, wk) in avg_w.iter_mut().zip(&w) {
                *a += (wk - *a) * rate;
            }
            avg_b += (b - avg_b) * rate;
        }
        let params = LinearParams {
            weights: avg_w,
            bias: avg_b,
        };
        trace.objectives.push(objective(points, &params, lambda));
    }
    Ok((
        LinearParams {
            weights: avg_w,
            bias: avg_b,
        },
        trace,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;

    fn separable() -> Vec<LabeledPoint> {
        (0..40)
            .map(|i| {
                let t = (i / 2) as f64 / 20.0;
                if i % 2 == 0 {
                    LabeledPoint::new([0.1 + 0.2 * t; 7], Label::Human)
                } else {
                    LabeledPoint::new([0.7 + 0.2 * t; 7], Label::Machine)
                }
            })
            .collect()
    }

    #[test]
    fn separable_training_accuracy() {
        let pts = separable();
        let model = train_svm_sgd(&pts, &SgdHyper::default()).unwrap();
        for p in &pts {
            assert_eq!(model.predict_values(&p.features).label, p.label);
        }
    }

    #[test]
    fn same_seed_same_model() {
        let pts = separable();
        let h = SgdHyper { seed: 5, ..SgdHyper::default() };
        assert_eq!(train_svm_sgd(&pts, &h).unwrap(), train_svm_sgd(&pts, &h).unwrap());
    }

    #[test]
    fn averaged_objective_does_not_increase() {
        let pts = separable();
        let (_, trace) = fit_with_trace(&pts, &SgdHyper::default()).unwrap();
        assert_eq!(trace.objectives.len(), 100);
        for w in trace.objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-3, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let pts = separable();
        let h = SgdHyper { lambda: 0.0, ..SgdHyper::default() };
        assert!(fit_with_trace(&pts, &h).is_err());
        let h = SgdHyper { epochs: 0, ..SgdHyper::default() };
        assert!(fit_with_trace(&pts, &h).is_err());
    }
}
