//! Monte Carlo oracles shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;

/// One draw of a noncentral χ²₂(λ): `(Z₁ + √λ)² + Z₂²`.
pub fn ncx2<R: Rng>(rng: &mut R, lambda: f64) -> f64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    (a + lambda.sqrt()).powi(2) + b * b
}

/// A Bernoulli frequency with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub p: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_hits(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self { p, se: (p * (1.0 - p) / n as f64).sqrt() }
    }

    /// `|value - p|` in standard errors, with a floor on the error for
    /// estimates at 0 or 1.
    pub fn z(&self, value: f64, n: u64) -> f64 {
        let floor = 1.0 / n as f64;
        (value - self.p).abs() / self.se.max(floor)
    }
}

pub fn count<R: Rng>(rng: &mut R, n: u64, mut event: impl FnMut(&mut R) -> bool) -> u64 {
    let mut hits = 0;
    for _ in 0..n {
        if event(rng) {
            hits += 1;
        }
    }
    hits
}

/// `Pr{χ²₂(a²) > b²}`.
pub fn mc_marcum_q1<R: Rng>(rng: &mut R, a: f64, b: f64, n: u64) -> Estimate {
    Estimate::from_hits(count(rng, n, |r| ncx2(r, a * a) > b * b), n)
}

pub fn mc_ncx2_cdf<R: Rng>(rng: &mut R, x: f64, lambda: f64, n: u64) -> Estimate {
    Estimate::from_hits(count(rng, n, |r| ncx2(r, lambda) <= x), n)
}

/// `Pr{X/Y <= z}` with `X ~ χ²₂(η₁)`, `Y ~ χ²₂(η₂)`.
pub fn mc_f_cdf<R: Rng>(rng: &mut R, z: f64, eta1: f64, eta2: f64, n: u64) -> Estimate {
    Estimate::from_hits(count(rng, n, |r| ncx2(r, eta1) <= z * ncx2(r, eta2)), n)
}

/// Probability that a χ²₂(λ) falls below the K-th smallest of N-1 central
/// χ²₂ draws.
pub fn mc_pmiss1<R: Rng>(rng: &mut R, n_pairs: usize, k: usize, lambda: f64, n: u64) -> Estimate {
    let mut nulls = vec![0.0; n_pairs - 1];
    let hits = count(rng, n, |r| {
        for v in nulls.iter_mut() {
            *v = ncx2(r, 0.0);
        }
        nulls.sort_by(f64::total_cmp);
        ncx2(r, lambda) < nulls[k - 1]
    });
    Estimate::from_hits(hits, n)
}

/// Expected number of surviving null pairs that beat the true pair after
/// coherent combining, sampled from complex matched-filter outputs with
/// `h = √f_r_w_t`, `σ² = 1`. Returns `(mean, standard error)`.
pub fn mc_stage2_union<R: Rng>(
    rng: &mut R,
    n_pairs: usize,
    k: usize,
    alpha: f64,
    snr_tot: f64,
    f_r_w_t: f64,
    n: u64,
) -> (f64, f64) {
    let e1 = alpha * snr_tot / n_pairs as f64;
    let e2 = (1.0 - alpha) * snr_tot / (n_pairs - k) as f64;
    let h = f_r_w_t.sqrt();
    let cn = |r: &mut R, var: f64| {
        let s = (var / 2.0).sqrt();
        let re: f64 = r.sample(StandardNormal);
        let im: f64 = r.sample(StandardNormal);
        (re * s, im * s)
    };
    let mut nulls: Vec<(f64, f64)> = vec![(0.0, 0.0); n_pairs - 1];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        for v in nulls.iter_mut() {
            *v = cn(rng, e1);
        }
        nulls.sort_by(|a, b| (a.0 * a.0 + a.1 * a.1).total_cmp(&(b.0 * b.0 + b.1 * b.1)));
        let (tr, ti) = cn(rng, e1 + e2);
        let t = ((e1 + e2) * h + tr).powi(2) + ti * ti;
        let mut wins = 0u32;
        for &(r1, i1) in &nulls[k..] {
            let (r2, i2) = cn(rng, e2);
            if (r1 + r2).powi(2) + (i1 + i2).powi(2) > t {
                wins += 1;
            }
        }
        sum += wins as f64;
        sum_sq += (wins * wins) as f64;
    }
    let mean = sum / n as f64;
    let var = sum_sq / n as f64 - mean * mean;
    (mean, (var / n as f64).sqrt())
}

/// Fixed pseudo-random parameter grid.
pub fn grid<R: Rng>(rng: &mut R, points: usize, ranges: &[(f64, f64)]) -> Vec<Vec<f64>> {
    (0..points).map(|_| ranges.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect()).collect()
}
