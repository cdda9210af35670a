//! Brute-force minimization of the misalignment bound over `(K, α)`.

use serde::{Deserialize, Serialize};

use super::bound::{pmiss1, pmiss2_bound, BoundInputs};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptimum {
    pub k: usize,
    pub alpha: f64,
    pub value: f64,
}

/// The grid `{step, 2·step, …, 1}`.
pub fn alpha_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.01) {
        return Err(invalid(format!("alpha step must lie in (0, 0.01], got {step}")));
    }
    let m = (1.0 / step - 1e-9).ceil() as usize;
    Ok((1..=m).map(|i| if i == m { 1.0 } else { i as f64 * step }).collect())
}

/// Minimizes the raw bound over `K ∈ [1, N-1]` and the α grid. Ties go to the
/// smaller `K`, then the smaller `α`.
pub fn optimize_bound_params(n: usize, snr_tot: f64, f_r_w_t: f64, alpha_step: f64) -> Result<BoundOptimum> {
    let alphas = alpha_grid(alpha_step)?;
    BoundInputs::new(n, 1, 1.0, snr_tot, f_r_w_t)?;
    let mut best = BoundOptimum { k: 0, alpha: 0.0, value: f64::INFINITY };
    for k in 1..n {
        for &alpha in &alphas {
            let b = BoundInputs { n, k, alpha, snr_tot, f_r_w_t };
            let p1 = pmiss1(&b)?;
            // the stage-2 term is nonnegative, so this point cannot win
            if p1 > best.value {
                continue;
            }
            let total = p1 + pmiss2_bound(&b)?.value;
            if total < best.value {
                best = BoundOptimum { k, alpha, value: total };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = alpha_grid(0.01).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!((g[0] - 0.01).abs() < 1e-15);
        assert!(alpha_grid(0.02).is_err());
        assert!(alpha_grid(0.0).is_err());
        assert_eq!(alpha_grid(0.003).unwrap().len(), 334);
    }

    #[test]
    fn small_problem_beats_every_grid_point() {
        let (n, snr) = (8, 20.0);
        let best = optimize_bound_params(n, snr, 1.0, 0.01).unwrap();
        for k in 1..n {
            for &a in &[0.3, 0.55, 0.8, 1.0] {
                let b = BoundInputs::new(n, k, a, snr, 1.0).unwrap();
                let v = pmiss1(&b).unwrap() + pmiss2_bound(&b).unwrap().value;
                assert!(best.value <= v + 1e-15);
            }
        }
    }
}
