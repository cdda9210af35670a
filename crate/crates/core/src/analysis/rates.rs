//! Large-deviations decay rates of the bound and the rate-optimal
//! parameters. Rates are per unit of `E_tot·|γ|²/σ²`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub i1: f64,
    pub i2: f64,
    pub i: f64,
}

pub fn decay_rates(n: usize, k: usize, alpha: f64, f_r_w_t: f64) -> Result<DecayRates> {
    if n < 2 || k < 1 || k > n - 1 {
        return Err(invalid(format!("need 1 <= K <= N-1, got N = {n}, K = {k}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha = {alpha} outside (0, 1]")));
    }
    let (nf, rem) = (n as f64, (n - k) as f64);
    let xi1 = 2.0 * f_r_w_t * alpha / nf;
    let xi2 = 2.0 * f_r_w_t * (alpha / nf + (1.0 - alpha) / rem);
    let i1 = xi1 / (2.0 * (1.0 + 1.0 / rem));
    let i2 = xi2 / 4.0;
    Ok(DecayRates { i1, i2, i: i1.min(i2) })
}

/// Decay rate of exhaustive search.
pub fn es_decay_rate(n: usize, f_r_w_t: f64) -> f64 {
    f_r_w_t / (2.0 * n as f64)
}

/// The stage fraction that equalizes both rates for a given `K`.
pub fn balanced_alpha(n: usize, k: usize) -> f64 {
    let (nf, kf) = (n as f64, k as f64);
    let rem = nf - kf;
    nf * (rem + 1.0) / (kf * (rem + 1.0) + 2.0 * rem * rem)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticOptimum {
    pub k: usize,
    pub alpha: f64,
    /// Optimal rate with `f_r_w_t = 1`; scale linearly for other gains.
    pub rate: f64,
}

/// Rate-maximizing `(K*, α*)`. `round` is half away from zero.
pub fn optimal_asymptotic_params(n: usize) -> Result<AsymptoticOptimum> {
    if n < 2 {
        return Err(invalid(format!("need N >= 2, got {n}")));
    }
    let nf = n as f64;
    let k = n - (nf.sqrt().round() as usize);
    let kf = k as f64;
    let rem = nf - kf;
    let rate = 1.0 / (2.0 * (nf - kf * (rem - 1.0) / (2.0 * rem)));
    Ok(AsymptoticOptimum { k, alpha: balanced_alpha(n, k), rate })
}
