//! Generators shared by the integration tests.
#![allow(dead_code)]

use btdetect::classify::LabeledPoint;
use btdetect::dataset::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DIM: usize = 7;

/// `n` points in the unit cube, half per class, each at distance at least
/// `margin` from a random hyperplane through the cube's centre.
pub fn separable_set(seed: u64, n: usize, margin: f64) -> Vec<LabeledPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = [0.0f64; DIM];
    for v in &mut w {
        *v = rng.random_range(-1.0..1.0);
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut w {
        *v /= norm;
    }
    let b = -w.iter().map(|v| v * 0.5).sum::<f64>();

    let (mut machine, mut human) = (0, 0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: [f64; DIM] = std::array::from_fn(|_| rng.random::<f64>());
        let d = w.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() + b;
        if d.abs() < margin {
            continue;
        }
        if d > 0.0 && machine < n / 2 {
            machine += 1;
            out.push(LabeledPoint::new(x, Label::Machine));
        } else if d < 0.0 && human < n - n / 2 {
            human += 1;
            out.push(LabeledPoint::new(x, Label::Human));
        }
    }
    out
}

pub fn accuracy(model: &btdetect::classify::TrainedModel, points: &[LabeledPoint]) -> f64 {
    let correct = points
        .iter()
        .filter(|p| model.predict_values(&p.features).label == p.label)
        .count();
    correct as f64 / points.len() as f64
}
