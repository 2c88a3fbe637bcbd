//! Linear-kernel soft-margin SVM solved in the dual by sequential minimal
//! optimization.
//!
//! Each step picks the maximal violating pair (the first-order working set
//! selection of LIBSVM) and solves the two-variable subproblem analytically,
//! which keeps `sum(alpha_i * y_i)` at zero and every `alpha_i` in `[0, C]`.
//! The solver stops once the KKT gap `max(-y G) over I_up - min(-y G) over
//! I_low` falls to `tolerance`.

use serde::{Deserialize, Serialize};

use super::{dot, validate_training_set, ClassifyError, LabeledPoint, ModelSpec, TrainedModel};
use crate::bleu::FEATURE_DIM;

/// Curvature floor for degenerate pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoHyper {
    pub c: f64,
    pub tolerance: f64,
    /// Iteration budget in units of `10 * n` pair updates.
    pub max_passes: usize,
}

impl Default for SmoHyper {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 10,
        }
    }
}

impl SmoHyper {
    pub fn iteration_cap(&self, n: usize) -> usize {
        self.max_passes.saturating_mul(n.max(1)).saturating_mul(10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub alpha: f64,
    pub sign: f64,
    pub features: [f64; FEATURE_DIM],
}

/// Support vectors plus the primal weights they induce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
    pub support_vectors: Vec<SupportVector>,
}

impl SmoParams {
    pub fn decision_value(&self, features: &[f64; FEATURE_DIM]) -> f64 {
        dot(&self.weights, features) + self.bias
    }
}

/// Full dual state on exit.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    pub signs: Vec<f64>,
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
    pub iterations: usize,
    /// KKT gap at exit.
    pub violation: f64,
}

impl SmoSolution {
    /// `sum(alpha_i * y_i)`, zero at any feasible point.
    pub fn equality_residual(&self) -> f64 {
        self.alphas.iter().zip(&self.signs).map(|(a, y)| a * y).sum()
    }

    pub fn params(&self, points: &[LabeledPoint]) -> SmoParams {
        let support_vectors = self
            .alphas
            .iter()
            .zip(points)
            .filter(|(&a, _)| a > 0.0)
            .map(|(&alpha, p)| SupportVector {
                alpha,
                sign: p.sign(),
                features: p.features,
            })
            .collect();
        SmoParams {
            weights: self.weights,
            bias: self.bias,
            support_vectors,
        }
    }
}

pub fn train_svm_smo(points: &[LabeledPoint], hyper: &SmoHyper) -> Result<TrainedModel, ClassifyError> {
    let solution = solve(points, hyper)?;
    Ok(TrainedModel::new(ModelSpec::SvmSmo {
        hyperparameters: *hyper,
        parameters: solution.params(points),
    }))
}

pub fn solve(points: &[LabeledPoint], hyper: &SmoHyper) -> Result<SmoSolution, ClassifyError> {
    validate_training_set(points)?;
    if !(hyper.c > 0.0 && hyper.c.is_finite()) {
        return Err(ClassifyError::InvalidHyperparameter(format!("C must be positive, got {}", hyper.c)));
    }
    if hyper.tolerance.is_nan() || hyper.tolerance <= 0.0 {
        return Err(ClassifyError::InvalidHyperparameter("tolerance must be positive".into()));
    }

    let n = points.len();
    let c = hyper.c;
    let y: Vec<f64> = points.iter().map(LabeledPoint::sign).collect();
    let x: Vec<&[f64; FEATURE_DIM]> = points.iter().map(|p| &p.features).collect();
    let diag: Vec<f64> = x.iter().map(|xi| dot(xi, xi)).collect();
    let mut alpha = vec![0.0; n];
    // gradient of 1/2 a'Qa - e'a with Q_ij = y_i y_j <x_i, x_j>
    let mut grad = vec![-1.0; n];

    let cap = hyper.iteration_cap(n);
    let mut iterations = 0;
    let violation = loop {
        let (i, j, gap) = select_pair(&alpha, &grad, &y, c);
        if gap <= hyper.tolerance {
            break gap;
        }
        if iterations >= cap {
            return Err(ClassifyError::NotConverged {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;
        let (i, j) = (i.expect("violating pair"), j.expect("violating pair"));

        let q_ij = y[i] * y[j] * dot(x[i], x[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let quad = (diag[i] + diag[j] + 2.0 * q_ij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = (diag[i] + diag[j] - 2.0 * q_ij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;

        let di = (ai - old_i) * y[i];
        let dj = (aj - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (di * dot(x[t], x[i]) + dj * dot(x[t], x[j]));
        }
    };

    let mut weights = [0.0; FEATURE_DIM];
    for t in 0..n {
        if alpha[t] > 0.0 {
            for (w, xv) in weights.iter_mut().zip(x[t]) {
                *w += alpha[t] * y[t] * xv;
            }
        }
    }
    let bias = -rho(&alpha, &grad, &y, c);
    Ok(SmoSolution {
        alphas: alpha,
        signs: y,
        weights,
        bias,
        iterations,
        violation,
    })
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha > 0.0) || (y < 0.0 && alpha < c)
}

/// Maximal violating pair and the KKT gap.
fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> (Option<usize>, Option<usize>, f64) {
    let mut g_max = f64::NEG_INFINITY;
    let mut g_min = f64::INFINITY;
    let (mut i, mut j) = (None, None);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && v > g_max {
            g_max = v;
            i = Some(t);
        }
        if in_low(alpha[t], y[t], c) && v < g_min {
            g_min = v;
            j = Some(t);
        }
    }
    let gap = if i.is_some() && j.is_some() { g_max - g_min } else { 0.0 };
    (i, j, gap)
}

/// Offset of the decision function: the mean of `y_i G_i` over free vectors,
/// or the midpoint of its feasible interval when no vector is free.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(seed: u64, n: usize) -> Vec<LabeledPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let f: [f64; FEATURE_DIM] = std::array::from_fn(|_| rng.random::<f64>());
                let label = if i % 2 == 0 { Label::Machine } else { Label::Human };
                LabeledPoint::new(f, label)
            })
            .collect()
    }

    #[test]
    fn dual_feasibility_on_random_sets() {
        for seed in 0..10 {
            let pts = random_points(seed, 30);
            let hyper = SmoHyper::default();
            let sol = solve(&pts, &hyper).unwrap();
            assert!(sol.alphas.iter().all(|&a| (0.0..=hyper.c).contains(&a)));
            assert!(sol.equality_residual().abs() <= 1e-6);
            assert!(sol.violation <= hyper.tolerance);
        }
    }

    #[test]
    fn separable_set_positive_margin() {
        let mut pts = Vec::new();
        for i in 0..15 {
            let t = i as f64 / 15.0;
            pts.push(LabeledPoint::new([0.1 + 0.2 * t; 7], Label::Human));
            pts.push(LabeledPoint::new([0.7 + 0.2 * t; 7], Label::Machine));
        }
        let sol = solve(&pts, &SmoHyper::default()).unwrap();
        for p in &pts {
            let score = dot(&sol.weights, &p.features) + sol.bias;
            assert!(p.sign() * score > 0.0);
        }
        let model = train_svm_smo(&pts, &SmoHyper::default()).unwrap();
        for p in &pts {
            assert_eq!(model.predict_values(&p.features).label, p.label);
        }
    }

    #[test]
    fn iteration_cap_reports_violation() {
        let pts = random_points(1, 40);
        let hyper = SmoHyper {
            max_passes: 0,
            ..SmoHyper::default()
        };
        match solve(&pts, &hyper) {
            Err(ClassifyError::NotConverged { iterations, violation }) => {
                assert_eq!(iterations, 0);
                assert!(violation > hyper.tolerance);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
