//! Special functions for two-degree-of-freedom noncentral χ² statistics.
//!
//! `χ²₂(λ)` is the sum of two squared unit-variance Gaussians whose means
//! have squared norm `λ`. Every series here
//! is a Poisson mixture, summed over a window of the mixing index that
//! carries all but a negligible fraction of its mass.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::error::{invalid, Result};

/// Index window `[lo, hi]` holding all but ~1e-40 of a Poisson(mean) law.
fn poisson_window(mean: f64) -> (u64, u64) {
    if mean <= 0.0 {
        return (0, 0);
    }
    let sd = mean.sqrt();
    let lo = (mean - 15.0 * sd - 15.0).floor().max(0.0) as u64;
    let hi = (mean + 15.0 * sd + 30.0).ceil() as u64;
    (lo, hi)
}

/// Walks Poisson(mean) probabilities from `start` upward.
struct PoissonWalk {
    ln_mean: f64,
    ln_p: f64,
    n: u64,
    degenerate: bool,
}

impl PoissonWalk {
    fn new(mean: f64, start: u64) -> Self {
        if mean <= 0.0 {
            return Self { ln_mean: f64::NEG_INFINITY, ln_p: 0.0, n: start, degenerate: true };
        }
        let ln_mean = mean.ln();
        let ln_p = start as f64 * ln_mean - mean - ln_gamma(start as f64 + 1.0);
        Self { ln_mean, ln_p, n: start, degenerate: false }
    }

    /// Probability at the current index, then advance.
    fn next_p(&mut self) -> f64 {
        let p = if self.degenerate {
            if self.n == 0 { 1.0 } else { 0.0 }
        } else {
            self.ln_p.exp()
        };
        self.n += 1;
        if !self.degenerate {
            self.ln_p += self.ln_mean - (self.n as f64).ln();
        }
        p
    }
}

/// `(cdf, sf)` of `χ²₂(lambda)` at `x`, each accurate in its own tail.
pub fn noncentral_chi2_parts(x: f64, lambda: f64) -> (f64, f64) {
    if x.is_nan() || lambda.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x.is_infinite() {
        return (1.0, 0.0);
    }
    let mu = 0.5 * lambda;
    let nu = 0.5 * x;
    if mu <= 0.0 {
        return (-(-nu).exp_m1(), (-nu).exp());
    }
    let (lo, hi) = poisson_window(mu);
    let len = (hi - lo + 1) as usize;

    // P(Pois(nu) = n) for n in lo..=hi+1
    let mut p_nu = Vec::with_capacity(len + 1);
    let mut walk = PoissonWalk::new(nu, lo);
    for _ in 0..=len {
        p_nu.push(walk.next_p());
    }
    let mut walk = PoissonWalk::new(mu, lo);
    let p_mu: Vec<f64> = (0..len).map(|_| walk.next_p()).collect();

    // sf = Σ p_mu(n)·Pr{Pois(nu) ≤ n}, upward recurrence of positive terms
    let mut below = gamma_ur(lo as f64 + 1.0, nu);
    let mut sf = 0.0;
    for i in 0..len {
        if i > 0 {
            below += p_nu[i];
        }
        sf += p_mu[i] * below.min(1.0);
    }
    // cdf = Σ p_mu(n)·Pr{Pois(nu) > n}, downward recurrence of positive terms
    let mut above = gamma_lr(hi as f64 + 1.0, nu);
    let mut cdf = 0.0;
    for i in (0..len).rev() {
        if i + 1 < len {
            above += p_nu[i + 1];
        }
        cdf += p_mu[i] * above.min(1.0);
    }
    (cdf.clamp(0.0, 1.0), sf.clamp(0.0, 1.0))
}

/// First-order Marcum Q function `Q₁(a, b) = Pr{χ²₂(a²) > b²}`.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    if !(a >= 0.0 && b >= 0.0) {
        return Err(invalid(format!("Marcum Q needs a, b >= 0, got ({a}, {b})")));
    }
    Ok(noncentral_chi2_parts(b * b, a * a).1)
}

/// CDF of `χ²₂(lambda)`; zero for `x <= 0`.
pub fn noncentral_chi2_cdf(x: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(invalid(format!("noncentrality must be >= 0, got {lambda}")));
    }
    Ok(noncentral_chi2_parts(x, lambda).0)
}

/// `ln` of the density of the k-th smallest of `n - 1` i.i.d. `χ²₂(0)`.
/// Callers guarantee `1 <= k <= n - 1` and `x >= 0`.
pub(crate) fn ln_order_stat_pdf(x: f64, k: usize, n: usize) -> f64 {
    let (kf, nf) = (k as f64, n as f64);
    let ln_c = ln_gamma(nf) - std::f64::consts::LN_2 - ln_gamma(kf) - ln_gamma(nf - kf);
    let ln_cdf = if k == 1 { 0.0 } else { (kf - 1.0) * (-(-0.5 * x).exp_m1()).ln() };
    ln_c + ln_cdf - 0.5 * (nf - kf) * x
}

/// Density of the k-th smallest of `n - 1` i.i.d. `χ²₂(0)` variables.
pub fn order_stat_pdf(x: f64, k: usize, n: usize) -> Result<f64> {
    if n < 2 || k < 1 || k > n - 1 {
        return Err(invalid(format!("order statistic needs 1 <= k <= n-1, got k = {k}, n = {n}")));
    }
    if !(x >= 0.0) {
        return Err(invalid(format!("order statistic density needs x >= 0, got {x}")));
    }
    if x == 0.0 && k > 1 {
        return Ok(0.0);
    }
    Ok(ln_order_stat_pdf(x, k, n).exp())
}

/// `Σ_{m=k+1}^{n-1} f_{T(m)}(x)`: the summed densities of all order
/// statistics above the k-th.
pub(crate) fn upper_order_stats_density(x: f64, k: usize, n: usize) -> f64 {
    if k + 1 > n - 1 {
        return 0.0;
    }
    let f = 0.5 * (-0.5 * x).exp();
    let cdf = -(-0.5 * x).exp_m1();
    if cdf <= 0.0 {
        return 0.0;
    }
    // Pr{Bin(n-2, F) >= k}
    (n - 1) as f64 * f * beta_reg(k as f64, (n - 1 - k) as f64, cdf.min(1.0))
}

/// Truncation point beyond which every order statistic of `n - 1` central
/// `χ²₂` variables has tail mass below `tail`.
pub(crate) fn order_stat_xmax(n: usize, tail: f64) -> f64 {
    2.0 * ((n.max(2) - 1) as f64 / tail).ln()
}

/// `Pr{X < s·Y}` for independent `X ~ χ²₂(lx)`, `Y ~ χ²₂(ly)`, via the Rician
/// comparison identity `Q₁(a,b) - w·e^{-(a²+b²)/2}·I₀(ab)` written as a
/// single Poisson mixture of positive terms.
pub fn chi2_ratio_cdf(s: f64, lx: f64, ly: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s.is_infinite() {
        return 1.0;
    }
    let w = 1.0 / (1.0 + s);
    let mu = 0.5 * s * ly * w; // a²/2
    let nu = 0.5 * lx * w; // b²/2
    let (lo, hi) = poisson_window(mu);
    let mut walk_mu = PoissonWalk::new(mu, lo);
    let mut walk_nu = PoissonWalk::new(nu, lo);
    // Pr{Pois(nu) <= n - 1} at n = lo
    let mut below = if lo == 0 {
        0.0
    } else if nu <= 0.0 {
        1.0
    } else {
        gamma_ur(lo as f64, nu)
    };
    let mut total = 0.0;
    for _ in lo..=hi {
        let pm = walk_mu.next_p();
        let pn = walk_nu.next_p();
        total += pm * (below + (1.0 - w) * pn);
        below = (below + pn).min(1.0);
    }
    total.clamp(0.0, 1.0)
}

/// Poisson(mean) probabilities covering all but `tail` of the mass.
fn poisson_support(mean: f64, tail: f64) -> (u64, Vec<f64>) {
    if mean <= 0.0 {
        return (0, vec![1.0]);
    }
    let mode = mean.floor() as u64;
    let ln_mean = mean.ln();
    let ln_pmode = mode as f64 * ln_mean - mean - ln_gamma(mode as f64 + 1.0);
    let mut down = Vec::new();
    let mut up = vec![ln_pmode.exp()];
    let mut mass = up[0];
    let (mut ln_lo, mut ln_hi) = (ln_pmode, ln_pmode);
    let (mut lo, mut hi) = (mode, mode);
    while mass < 1.0 - tail {
        let p_lo = if lo > 0 { (ln_lo + (lo as f64).ln() - ln_mean).exp() } else { 0.0 };
        let p_hi = (ln_hi + ln_mean - (hi as f64 + 1.0).ln()).exp();
        if lo > 0 && p_lo >= p_hi {
            ln_lo += (lo as f64).ln() - ln_mean;
            lo -= 1;
            down.push(p_lo);
            mass += p_lo;
        } else {
            ln_hi += ln_mean - (hi as f64 + 1.0).ln();
            hi += 1;
            up.push(p_hi);
            mass += p_hi;
        }
        if p_lo == 0.0 && p_hi == 0.0 {
            break;
        }
    }
    down.reverse();
    down.extend(up);
    (lo, down)
}

/// CDF of the doubly noncentral F distribution with (2, 2) degrees of
/// freedom: `Pr{(X/2)/(Y/2) <= z}`, `X ~ χ²₂(eta1)`, `Y ~ χ²₂(eta2)`.
///
/// Evaluated as a double Poisson mixture of central beta CDFs, truncated once
/// the omitted mixing mass of each index is below 1e-10.
pub fn doubly_noncentral_f_cdf(z: f64, eta1: f64, eta2: f64) -> Result<f64> {
    if !(eta1 >= 0.0 && eta2 >= 0.0) {
        return Err(invalid(format!("noncentralities must be >= 0, got ({eta1}, {eta2})")));
    }
    if z.is_nan() {
        return Err(invalid("z is NaN"));
    }
    if z <= 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(1.0);
    }
    let t = z / (1.0 + z);
    let (i0, wi) = poisson_support(0.5 * eta1, 1e-10);
    let (k0, wk) = poisson_support(0.5 * eta2, 1e-10);
    let mut total = 0.0;
    for (di, &pi) in wi.iter().enumerate() {
        let a = (i0 + di as u64) as f64 + 1.0;
        for (dk, &pk) in wk.iter().enumerate() {
            let weight = pi * pk;
            if weight < 1e-300 {
                continue;
            }
            let b = (k0 + dk as u64) as f64 + 1.0;
            total += weight * beta_reg(a, b, t);
        }
    }
    Ok(total.clamp(0.0, 1.0))
}
