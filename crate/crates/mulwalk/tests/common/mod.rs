//! Shared randomized-instance generators for the integration suites.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use mulwalk::{CoefficientVector, Distribution, Norm};

/// A random nondegenerate finite-support mean-one law with 2–4 atoms.
pub fn random_mean_one_dist(rng: &mut ChaCha8Rng) -> Distribution {
    loop {
        let s = rng.random_range(2..=4);
        let mut values: Vec<f64> = (0..s).map(|_| rng.random_range(0.0..3.0)).collect();
        // mass exactly at zero keeps the near-zero-mass certificate in play
        if rng.random::<f64>() < 0.4 {
            values[0] = 0.0;
        }
        let weights: Vec<f64> = (0..s).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        if mean < 1e-3 {
            continue;
        }
        let atoms: Vec<(f64, f64)> = values
            .iter()
            .zip(&probs)
            .map(|(&v, &p)| (v / mean, p))
            .collect();
        match Distribution::finite(&atoms) {
            Ok(d) if !d.is_degenerate() => return d,
            _ => continue,
        }
    }
}

/// Random coefficients with `n ≤ max_n`, `d ≤ max_d`, and a random norm.
pub fn random_cv(rng: &mut ChaCha8Rng, max_n: usize, max_d: usize) -> CoefficientVector {
    loop {
        let n = rng.random_range(0..=max_n);
        let d = rng.random_range(1..=max_d);
        let norm = [Norm::L1, Norm::L2, Norm::Linf][rng.random_range(0..3)];
        let coeffs: Vec<Vec<f64>> = (0..=n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let cv = CoefficientVector::new(coeffs, norm).expect("finite coordinates");
        if cv.l1_mass() > 1e-6 {
            return cv;
        }
    }
}
