//! L2-regularized hinge-loss linear classifier trained by dual coordinate
//! descent, in the style of LIBLINEAR's L1-loss SVC solver. The bias is
//! learned as the weight of a constant feature equal to 1.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, validate_training_set, ClassifyError, LabeledPoint, ModelSpec, TrainedModel};
use crate::bleu::FEATURE_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearHyper {
    pub c: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for LinearHyper {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iterations: 1000,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

/// Weight vector and bias of a linear decision function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
}

impl LinearParams {
    pub fn decision_value(&self, features: &[f64; FEATURE_DIM]) -> f64 {
        dot(&self.weights, features) + self.bias
    }
}

pub fn train_linear(points: &[LabeledPoint], hyper: &LinearHyper) -> Result<TrainedModel, ClassifyError> {
    let parameters = fit(points, hyper)?;
    Ok(TrainedModel::new(ModelSpec::Linear {
        hyperparameters: *hyper,
        parameters,
    }))
}

pub(crate) fn fit(points: &[LabeledPoint], hyper: &LinearHyper) -> Result<LinearParams, ClassifyError> {
    validate_training_set(points)?;
    if !(hyper.c > 0.0 && hyper.c.is_finite()) {
        return Err(ClassifyError::InvalidHyperparameter(format!("C must be positive, got {}", hyper.c)));
    }
    if hyper.tolerance.is_nan() || hyper.tolerance <= 0.0 {
        return Err(ClassifyError::InvalidHyperparameter("tolerance must be positive".into()));
    }

    let n = points.len();
    let c = hyper.c;
    let diag: Vec<f64> = points.iter().map(|p| dot(&p.features, &p.features) + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = [0.0; FEATURE_DIM];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);

    let mut converged = false;
    for _ in 0..hyper.max_iterations {
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let p = &points[i];
            let y = p.sign();
            let g = y * (dot(&w, &p.features) + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * y;
                for (wk, xk) in w.iter_mut().zip(&p.features) {
                    *wk += delta * xk;
                }
                b += delta;
            }
        }
        if pg_max - pg_min <= hyper.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "linear solver reached {} iterations without meeting tolerance {}",
            hyper.max_iterations,
            hyper.tolerance
        );
    }
    Ok(LinearParams { weights: w, bias: b })
}
