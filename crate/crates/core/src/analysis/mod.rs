//! Special functions, the misalignment bound, decay rates and parameter
//! optimizers.

mod bound;
mod optimize;
mod rates;
mod special;

pub use bound::{
    pmiss1, pmiss1_quadrature, pmiss1_series, pmiss2_bound, pmiss2_bound_termwise, pmiss_upper_bound, BoundInputs,
    Stage2Bound, UpperBound,
};
pub use optimize::{alpha_grid, optimize_bound_params, BoundOptimum};
pub use rates::{balanced_alpha, decay_rates, es_decay_rate, optimal_asymptotic_params, AsymptoticOptimum, DecayRates};
pub use special::{
    chi2_ratio_cdf, doubly_noncentral_f_cdf, marcum_q1, noncentral_chi2_cdf, noncentral_chi2_parts, order_stat_pdf,
};
