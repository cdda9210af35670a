//! Upper bound on the OTSS misalignment probability for the single-path
//! model with ideal beams.
//!
//! The bound is `p1 + p̄2`: `p1` is the exact probability that the true pair
//! is eliminated in stage 1, and `p̄2` is a union bound over the surviving
//! competitors losing the coherently combined stage-2 comparison.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::ln_gamma;

use super::special::{
    chi2_ratio_cdf, doubly_noncentral_f_cdf, ln_order_stat_pdf, noncentral_chi2_parts, order_stat_xmax,
    upper_order_stats_density,
};
use crate::error::{invalid, Result};
use crate::quad::integrate;

/// Bound arguments. `snr_tot = E_tot·|γ|²/σ²` (linear) and
/// `f_r_w_t = F_R·W_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub snr_tot: f64,
    pub f_r_w_t: f64,
}

impl BoundInputs {
    pub fn new(n: usize, k: usize, alpha: f64, snr_tot: f64, f_r_w_t: f64) -> Result<Self> {
        let b = Self { n, k, alpha, snr_tot, f_r_w_t };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.k < 1 || self.k > self.n - 1 {
            return Err(invalid(format!("need N >= 2 and 1 <= K <= N-1, got N = {}, K = {}", self.n, self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        if !(self.snr_tot > 0.0 && self.snr_tot.is_finite()) {
            return Err(invalid(format!("snr_tot must be positive, got {}", self.snr_tot)));
        }
        if !(self.f_r_w_t > 0.0 && self.f_r_w_t.is_finite()) {
            return Err(invalid(format!("f_r_w_t must be positive, got {}", self.f_r_w_t)));
        }
        Ok(())
    }

    /// Per-pair stage-1 energy in snr units.
    pub fn e1(&self) -> f64 {
        self.alpha * self.snr_tot / self.n as f64
    }

    /// Per-pair stage-2 energy in snr units.
    pub fn e2(&self) -> f64 {
        (1.0 - self.alpha) * self.snr_tot / (self.n - self.k) as f64
    }

    /// Noncentrality of the true pair's stage-1 statistic.
    pub fn lambda1(&self) -> f64 {
        2.0 * self.f_r_w_t * self.e1()
    }

    /// Noncentrality of the true pair's combined statistic.
    pub fn lambda2(&self) -> f64 {
        2.0 * self.f_r_w_t * (self.e1() + self.e2())
    }
}

/// Stage-1 term by the finite alternating series: `(value, error estimate)`.
/// The series cancels catastrophically once `K` grows beyond a few tens.
pub fn pmiss1_series(inputs: &BoundInputs) -> (f64, f64) {
    let (n, k) = (inputs.n, inputs.k);
    let lambda = inputs.lambda1();
    let ln_c = ln_gamma(n as f64) - ln_gamma(k as f64) - ln_gamma((n - k) as f64);
    let (mut sum, mut comp, mut abs_sum) = (0.0f64, 0.0f64, 0.0f64);
    for j in 0..k {
        let m = (n - k + j) as f64;
        let ln_t = ln_c + ln_binomial((k - 1) as u64, j as u64) - m.ln() - (m + 1.0).ln() - lambda * m / (2.0 * (m + 1.0));
        let t = if j % 2 == 0 { ln_t.exp() } else { -ln_t.exp() };
        abs_sum += t.abs();
        // Neumaier compensation
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
    }
    (sum + comp, 4.0 * k as f64 * f64::EPSILON * abs_sum)
}

/// Stage-1 term by quadrature of `∫ F_{χ²₂(λ)}(x)·f_{T(K)}(x) dx`.
pub fn pmiss1_quadrature(inputs: &BoundInputs) -> f64 {
    let (n, k) = (inputs.n, inputs.k);
    let lambda = inputs.lambda1();
    let xmax = order_stat_xmax(n, 1e-16);
    let q = integrate(
        |x| {
            if x <= 0.0 {
                return 0.0;
            }
            let w = ln_order_stat_pdf(x, k, n).exp();
            if w == 0.0 {
                0.0
            } else {
                w * noncentral_chi2_parts(x, lambda).0
            }
        },
        0.0,
        xmax,
        1e-11,
        1e-300,
        16,
        4000,
    );
    q.value.clamp(0.0, 1.0)
}

/// Probability that the true pair is eliminated in stage 1.
pub fn pmiss1(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let (value, err) = pmiss1_series(inputs);
    if value > 0.0 && value <= 1.0 && err <= 1e-10 * value {
        return Ok(value);
    }
    Ok(pmiss1_quadrature(inputs))
}

/// Stage-2 union bound with a flag for the `E^(2) = 0` regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage2Bound {
    pub value: f64,
    /// Stage 2 spends no energy (`alpha = 1`).
    pub degenerate: bool,
}

const STAGE2_TAIL: f64 = 1e-12;
const STAGE2_REL_TOL: f64 = 1e-8;

/// Union bound on the stage-2 miss probability, summed over every surviving
/// competitor. All competitors are integrated at once through the summed
/// density of the order statistics above the K-th.
pub fn pmiss2_bound(inputs: &BoundInputs) -> Result<Stage2Bound> {
    inputs.validate()?;
    let (n, k) = (inputs.n, inputs.k);
    let degenerate = inputs.alpha >= 1.0;
    if k == n - 1 {
        return Ok(Stage2Bound { value: 0.0, degenerate });
    }
    let xmax = order_stat_xmax(n, STAGE2_TAIL);
    let value = if degenerate {
        // E2 -> 0: the combined comparison collapses onto the stage-1 values
        let lambda1 = inputs.lambda1();
        integrate(
            |x| {
                let w = upper_order_stats_density(x, k, n);
                if w == 0.0 { 0.0 } else { w * noncentral_chi2_parts(x, lambda1).0 }
            },
            0.0,
            xmax,
            STAGE2_REL_TOL,
            1e-300,
            16,
            4000,
        )
        .value
    } else {
        let c = inputs.e1() / inputs.e2();
        let s = 1.0 / (1.0 + c);
        let lambda2 = inputs.lambda2();
        integrate(
            |x| {
                let w = upper_order_stats_density(x, k, n);
                if w == 0.0 { 0.0 } else { w * chi2_ratio_cdf(s, lambda2, c * x) }
            },
            0.0,
            xmax,
            STAGE2_REL_TOL,
            1e-300,
            16,
            4000,
        )
        .value
    };
    Ok(Stage2Bound { value: value.max(0.0), degenerate })
}

/// The same bound evaluated one competitor at a time with the doubly
/// noncentral F mixture. Slow; kept as an independent cross-check.
pub fn pmiss2_bound_termwise(inputs: &BoundInputs, rel_tol: f64) -> Result<f64> {
    inputs.validate()?;
    let (n, k) = (inputs.n, inputs.k);
    if k == n - 1 {
        return Ok(0.0);
    }
    if inputs.alpha >= 1.0 {
        return Err(invalid("termwise stage-2 bound needs alpha < 1"));
    }
    let c = inputs.e1() / inputs.e2();
    let z = 1.0 / (1.0 + c);
    let lambda2 = inputs.lambda2();
    let xmax = order_stat_xmax(n, STAGE2_TAIL);
    let mut total = 0.0;
    for j in 1..n - k {
        let q = integrate(
            |x| {
                if x <= 0.0 {
                    return 0.0;
                }
                let w = ln_order_stat_pdf(x, k + j, n).exp();
                if w < 1e-18 {
                    return 0.0;
                }
                w * doubly_noncentral_f_cdf(z, lambda2, c * x).unwrap_or(f64::NAN)
            },
            0.0,
            xmax,
            rel_tol,
            1e-16,
            8,
            2000,
        );
        total += q.value;
    }
    Ok(total)
}

/// The complete bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub pmiss1: f64,
    pub pmiss2: f64,
    /// `pmiss1 + pmiss2`, possibly above one.
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub value: f64,
    pub degenerate_stage2: bool,
}

pub fn pmiss_upper_bound(inputs: &BoundInputs) -> Result<UpperBound> {
    let p1 = pmiss1(inputs)?;
    let p2 = pmiss2_bound(inputs)?;
    let raw = p1 + p2.value;
    Ok(UpperBound { pmiss1: p1, pmiss2: p2.value, raw, value: raw.clamp(0.0, 1.0), degenerate_stage2: p2.degenerate })
}
