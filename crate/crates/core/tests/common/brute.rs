//! Direct-definition reimplementations used as test oracles.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn sorted_lower_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[(s.len() - 1) / 2]
}

pub fn two_pass(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1e-300)
}

pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}

/// Rank = 1 + number strictly below + half the number of other equal values.
pub fn brute_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let below = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn random_corpus(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(1..=10_000);
    match rng.random_range(0..3) {
        0 => (0..n).map(|_| rng.random::<f64>()).collect(),
        1 => (0..n).map(|_| rng.random_range(0..20) as f64).collect(),
        _ => (0..n).map(|_| rng.random_range(-1e3..1e3)).collect(),
    }
}
