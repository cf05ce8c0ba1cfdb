//! Independent oracles shared by the integration suites.
//!
//! These deliberately avoid the library's incremental update paths: the
//! statistics oracles recompute from scratch, and the closed-form
//! expansion evaluates explicit powers.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Two-pass mean and sample standard deviation.
pub fn two_pass_stats(xs: &[f64]) -> (f64, f64) {
    assert!(!xs.is_empty());
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Exponentially weighted mean after the whole stream, via explicit powers:
/// `(1-a)^(n-1) x1 + sum_{j=2..n} a (1-a)^(n-j) xj`.
pub fn ewma_mean_closed_form(xs: &[f64], alpha: f64) -> f64 {
    assert!(!xs.is_empty());
    let n = xs.len();
    let mut total = (1.0 - alpha).powi(n as i32 - 1) * xs[0];
    for (j, &x) in xs.iter().enumerate().skip(1) {
        total += alpha * (1.0 - alpha).powi((n - 1 - j) as i32) * x;
    }
    total
}

/// Exponentially weighted variance after the whole stream, by direct
/// re-evaluation of the recurrences from the boundary condition.
pub fn ewma_var_direct(xs: &[f64], alpha: f64) -> f64 {
    assert!(!xs.is_empty());
    let mut mean = xs[0];
    let mut var = 0.0;
    for &x in &xs[1..] {
        let d = x - mean;
        mean += alpha * d;
        var = (1.0 - alpha) * (var + alpha * d * d);
    }
    var
}

pub fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    let err = (got - want).abs() / want.abs().max(1.0);
    assert!(
        err < tol,
        "{what}: got {got}, want {want} (relative error {err:e} >= {tol:e})"
    );
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform stream in [lo, hi).
pub fn uniform_stream(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Gaussian noise around `mean` with a held level shift of `shift` from
/// `shift_at` onwards.
pub fn noise_with_shift(
    seed: u64,
    n: usize,
    mean: f64,
    sd: f64,
    shift_at: usize,
    shift: f64,
) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(mean, sd).unwrap();
    (0..n)
        .map(|i| normal.sample(&mut rng) + if i >= shift_at { shift } else { 0.0 })
        .collect()
}

/// Fixed-layout synthetic timestamps, five minutes apart, long enough for
/// multi-day streams.
pub fn synthetic_timestamps(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let minutes = i * 5;
            let day = minutes / (24 * 60);
            let rem = minutes % (24 * 60);
            format!(
                "2020-01-{:02} {:02}:{:02}:00",
                1 + day,
                rem / 60,
                rem % 60
            )
        })
        .collect()
}
