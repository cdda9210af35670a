//! Noisy beam-pair measurements and the three search schemes: exhaustive
//! search (ES), equal-allocation hierarchical search (HS) and the
//! optimized two-stage search (OTSS).
//!
//! Pilots are abstracted to their energy: the matched-filter output for a
//! pair with effective channel `h` trained with energy `E` is
//! `r = E·h + z`, `z ~ CN(0, E·σ²)`. Pair indices are 0-based.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_normal, ChannelRealization, PathComponent};
use crate::codebook::{pair_gains, pair_gains_from_paths, HierarchicalCodebooks, Stage};
use crate::error::{invalid, Result};

/// Total training energy and noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingBudget {
    pub e_tot: f64,
    pub sigma2: f64,
}

impl TrainingBudget {
    pub fn new(e_tot: f64, sigma2: f64) -> Result<Self> {
        if !(e_tot > 0.0 && e_tot.is_finite()) {
            return Err(invalid(format!("training energy must be positive, got {e_tot}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(invalid(format!("noise variance must be positive, got {sigma2}")));
        }
        Ok(Self { e_tot, sigma2 })
    }

    /// Unit noise variance with `E_tot·|γ|²/σ²` given in dB (and `|γ|² = 1`).
    pub fn from_db(budget_db: f64) -> Result<Self> {
        Self::new(10f64.powf(budget_db / 10.0), 1.0)
    }
}

/// OTSS design parameters: `k` pairs eliminated after stage 1, fraction
/// `alpha` of the budget spent in stage 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OtssParams {
    pub k: usize,
    pub alpha: f64,
}

impl OtssParams {
    pub fn new(k: usize, alpha: f64, n: usize) -> Result<Self> {
        let p = Self { k, alpha };
        p.validate(n)?;
        Ok(p)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if n < 2 || self.k < 1 || self.k > n - 1 {
            return Err(invalid(format!("K = {} outside [1, {}]", self.k, n.saturating_sub(1))));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(invalid(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        Ok(())
    }

    /// Per-pair stage-1 energy `α·E_tot/N`.
    pub fn e1(&self, n: usize, e_tot: f64) -> f64 {
        self.alpha * e_tot / n as f64
    }

    /// Per-pair stage-2 energy `(1-α)·E_tot/(N-K)`.
    pub fn e2(&self, n: usize, e_tot: f64) -> f64 {
        (1.0 - self.alpha) * e_tot / (n - self.k) as f64
    }

    /// The ES special case `α = 1, K = N-1`.
    pub fn exhaustive(n: usize) -> Self {
        Self { k: n - 1, alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeTag {
    Exhaustive,
    TwoStage,
    Hierarchical,
}

/// Record of one search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub scheme: SchemeTag,
    /// `|r_l|` of every measurement in the first (or only) sweep.
    pub stage1_stats: Vec<f64>,
    /// Pairs kept for stage 2, ascending.
    pub survivors: Vec<usize>,
    /// `|r_l^(1) + r_l^(2)|` for each survivor, aligned with `survivors`.
    pub stage2_stats: Vec<f64>,
    pub chosen: usize,
    /// Strongest pair by true effective gain.
    pub l_opt: usize,
    pub energy_used: f64,
}

impl SearchTrace {
    pub fn aligned(&self) -> bool {
        self.chosen == self.l_opt
    }
}

/// Matched-filter output `energy·h + z`, `z ~ CN(0, energy·σ²)`. Zero energy
/// yields exactly zero and draws nothing from `rng`.
pub fn measure<R: Rng + ?Sized>(h: Complex64, energy: f64, sigma2: f64, rng: &mut R) -> Complex64 {
    if energy == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    h * energy + complex_normal(rng, energy * sigma2)
}

/// `argmax_l |h_l|²`, ties to the smallest index.
pub fn best_pair(gains: &[Complex64]) -> usize {
    argmax_first(gains.iter().map(|h| h.norm_sqr()))
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

/// Reusable buffers for the hot simulation loop.
#[derive(Debug, Default, Clone)]
pub struct Searcher {
    r1: Vec<Complex64>,
    order: Vec<usize>,
    survivors: Vec<usize>,
    combined: Vec<f64>,
}

impl Searcher {
    pub fn new() -> Self {
        Self::default()
    }

    /// ES decision: each pair gets `E_tot/N`; the largest `|r_l|` wins.
    pub fn exhaustive<R: Rng + ?Sized>(&mut self, gains: &[Complex64], budget: TrainingBudget, rng: &mut R) -> usize {
        let e = budget.e_tot / gains.len() as f64;
        argmax_first(gains.iter().map(|&h| measure(h, e, budget.sigma2, rng).norm()))
    }

    /// OTSS decision. `params` must be valid for `gains.len()`.
    pub fn otss<R: Rng + ?Sized>(
        &mut self,
        gains: &[Complex64],
        budget: TrainingBudget,
        params: OtssParams,
        rng: &mut R,
    ) -> usize {
        let n = gains.len();
        let e1 = params.e1(n, budget.e_tot);
        let e2 = params.e2(n, budget.e_tot);
        self.r1.clear();
        self.r1.extend(gains.iter().map(|&h| measure(h, e1, budget.sigma2, rng)));

        // rank ascending by (|r|, index) and drop the first K
        let r1 = &self.r1;
        self.order.clear();
        self.order.extend(0..n);
        let key = |&a: &usize, &b: &usize| r1[a].norm_sqr().total_cmp(&r1[b].norm_sqr()).then(a.cmp(&b));
        self.order.select_nth_unstable_by(params.k - 1, key);
        self.survivors.clear();
        self.survivors.extend_from_slice(&self.order[params.k..]);
        self.survivors.sort_unstable();

        self.combined.clear();
        for &l in &self.survivors {
            let r2 = measure(gains[l], e2, budget.sigma2, rng);
            self.combined.push((self.r1[l] + r2).norm());
        }
        self.survivors[argmax_first(self.combined.iter().copied())]
    }
}

/// Exhaustive search with a full trace.
pub fn exhaustive_search<R: Rng + ?Sized>(gains: &[Complex64], budget: TrainingBudget, rng: &mut R) -> Result<SearchTrace> {
    if gains.is_empty() {
        return Err(invalid("no beam pairs to search"));
    }
    let e = budget.e_tot / gains.len() as f64;
    let stats: Vec<f64> = gains.iter().map(|&h| measure(h, e, budget.sigma2, rng).norm()).collect();
    let chosen = argmax_first(stats.iter().copied());
    Ok(SearchTrace {
        scheme: SchemeTag::Exhaustive,
        stage1_stats: stats,
        survivors: Vec::new(),
        stage2_stats: Vec::new(),
        chosen,
        l_opt: best_pair(gains),
        energy_used: e * gains.len() as f64,
    })
}

/// OTSS with a full trace. Consumes `rng` exactly as [`Searcher::otss`].
pub fn otss<R: Rng + ?Sized>(
    gains: &[Complex64],
    budget: TrainingBudget,
    params: OtssParams,
    rng: &mut R,
) -> Result<SearchTrace> {
    let n = gains.len();
    params.validate(n)?;
    let mut s = Searcher::new();
    let chosen = s.otss(gains, budget, params, rng);
    let e1 = params.e1(n, budget.e_tot);
    let e2 = params.e2(n, budget.e_tot);
    Ok(SearchTrace {
        scheme: SchemeTag::TwoStage,
        stage1_stats: s.r1.iter().map(|r| r.norm()).collect(),
        survivors: s.survivors.clone(),
        stage2_stats: s.combined.clone(),
        chosen,
        l_opt: best_pair(gains),
        energy_used: e1 * n as f64 + e2 * (n - params.k) as f64,
    })
}

/// Effective channels of every pair a hierarchical plan can visit.
#[derive(Debug, Clone)]
pub struct HierarchyGains {
    /// Per stage: gains of (Tx level beam, Rx level beam), `t·|rx| + r`.
    stage_gains: Vec<Vec<Complex64>>,
    rx_sizes: Vec<usize>,
    stages: Vec<Stage>,
}

impl HierarchyGains {
    pub fn new(hcb: &HierarchicalCodebooks, h: &ChannelRealization) -> Result<Self> {
        let mut stage_gains = Vec::with_capacity(hcb.stages.len());
        let mut rx_sizes = Vec::with_capacity(hcb.stages.len());
        for st in &hcb.stages {
            let tx = &hcb.tx_levels[st.tx_level - 1];
            let rx = &hcb.rx_levels[st.rx_level - 1];
            stage_gains.push(pair_gains(tx, rx, h)?);
            rx_sizes.push(rx.len());
        }
        Ok(Self { stage_gains, rx_sizes, stages: hcb.stages.clone() })
    }

    /// Ideal-beam hierarchy gains from path metadata only.
    pub fn from_paths(hcb: &HierarchicalCodebooks, paths: &[PathComponent]) -> Result<Self> {
        let mut stage_gains = Vec::with_capacity(hcb.stages.len());
        let mut rx_sizes = Vec::with_capacity(hcb.stages.len());
        for st in &hcb.stages {
            let rx = &hcb.rx_levels[st.rx_level - 1];
            stage_gains.push(pair_gains_from_paths(&hcb.tx_levels[st.tx_level - 1], rx, paths)?);
            rx_sizes.push(rx.len());
        }
        Ok(Self { stage_gains, rx_sizes, stages: hcb.stages.clone() })
    }

    /// Builds the gains from precomputed per-stage tables.
    pub fn from_tables(stages: Vec<Stage>, stage_gains: Vec<Vec<Complex64>>, rx_sizes: Vec<usize>) -> Self {
        Self { stage_gains, rx_sizes, stages }
    }

    pub fn measurements(&self) -> usize {
        self.stages.iter().map(Stage::measurements).sum()
    }
}

/// Outcome of a hierarchical search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsOutcome {
    /// Index into the last-level Tx codebook.
    pub tx: usize,
    /// Index into the last-level Rx codebook.
    pub rx: usize,
    /// `(tx, rx)` retained after each stage.
    pub stage_choices: Vec<(usize, usize)>,
    pub energy_used: f64,
}

/// Equal-allocation hierarchical search over precomputed gains: every one of
/// the plan's measurements gets `E_tot/N_HS`; at each stage the strongest
/// `|r|` among the scanned children is kept (ties to the first scanned).
pub fn hierarchical_search_gains<R: Rng + ?Sized>(
    gains: &HierarchyGains,
    budget: TrainingBudget,
    rng: &mut R,
) -> HsOutcome {
    let total = gains.measurements();
    let e = budget.e_tot / total as f64;
    let (mut tx, mut rx) = (0usize, 0usize);
    let mut choices = Vec::with_capacity(gains.stages.len());
    let mut prev: Option<Stage> = None;
    for (s, st) in gains.stages.iter().enumerate() {
        let tx_base = match prev {
            Some(p) if p.tx_level < st.tx_level => 2 * tx,
            Some(_) => tx,
            None => 0,
        };
        let rx_base = match prev {
            Some(p) if p.rx_level < st.rx_level => 2 * rx,
            Some(_) => rx,
            None => 0,
        };
        let tx_cands = if st.scan_tx { 2 } else { 1 };
        let rx_cands = if st.scan_rx { 2 } else { 1 };
        let mut best = (tx_base, rx_base);
        let mut best_v = f64::NEG_INFINITY;
        for dt in 0..tx_cands {
            for dr in 0..rx_cands {
                let (t, r) = (tx_base + dt, rx_base + dr);
                let h = gains.stage_gains[s][t * gains.rx_sizes[s] + r];
                let v = measure(h, e, budget.sigma2, rng).norm();
                if v > best_v {
                    best_v = v;
                    best = (t, r);
                }
            }
        }
        (tx, rx) = best;
        choices.push(best);
        prev = Some(*st);
    }
    HsOutcome { tx, rx, stage_choices: choices, energy_used: e * total as f64 }
}

/// Hierarchical search directly on a channel realization.
pub fn hierarchical_search<R: Rng + ?Sized>(
    h: &ChannelRealization,
    hcb: &HierarchicalCodebooks,
    budget: TrainingBudget,
    rng: &mut R,
) -> Result<HsOutcome> {
    let gains = HierarchyGains::new(hcb, h)?;
    Ok(hierarchical_search_gains(&gains, budget, rng))
}

/// Feedback bits `(log₂ C(N,K), log₂(N-K), log₂ N)` for OTSS stage 1,
/// OTSS stage 2 and ES.
pub fn feedback_overhead_bits(n: usize, k: usize) -> Result<(f64, f64, f64)> {
    if n < 2 || k < 1 || k > n - 1 {
        return Err(invalid(format!("need 1 <= K <= N-1, got N = {n}, K = {k}")));
    }
    let ln2 = std::f64::consts::LN_2;
    let stage1 = statrs::function::factorial::ln_binomial(n as u64, k as u64) / ln2;
    Ok((stage1, ((n - k) as f64).log2(), (n as f64).log2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_path_gains(n: usize, l_opt: usize, amplitude: f64) -> Vec<Complex64> {
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        g[l_opt] = Complex64::new(amplitude, 0.0);
        g
    }

    #[test]
    fn zero_energy_measurement_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let before = rng.clone();
        assert_eq!(measure(Complex64::new(3.0, 1.0), 0.0, 1.0, &mut rng), Complex64::new(0.0, 0.0));
        assert_eq!(rng, before);
    }

    #[test]
    fn params_validation() {
        assert!(OtssParams::new(0, 0.5, 8).is_err());
        assert!(OtssParams::new(8, 0.5, 8).is_err());
        assert!(OtssParams::new(3, 0.0, 8).is_err());
        assert!(OtssParams::new(3, 1.2, 8).is_err());
        assert!(OtssParams::new(7, 1.0, 8).is_ok());
    }

    #[test]
    fn energy_conservation() {
        let n = 128;
        for &(k, alpha) in &[(1usize, 0.1), (64, 0.5), (117, 0.9332), (127, 1.0)] {
            let p = OtssParams::new(k, alpha, n).unwrap();
            let e_tot = 25.0;
            let sum = n as f64 * p.e1(n, e_tot) + (n - k) as f64 * p.e2(n, e_tot);
            assert!((sum - e_tot).abs() <= 1e-12 * e_tot);
        }
    }

    #[test]
    fn noiseless_searches_find_best_pair() {
        let gains = single_path_gains(32, 13, 4.0);
        let budget = TrainingBudget::new(10.0, 1e-30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(exhaustive_search(&gains, budget, &mut rng).unwrap().chosen, 13);
        let t = otss(&gains, budget, OtssParams::new(20, 0.7, 32).unwrap(), &mut rng).unwrap();
        assert_eq!(t.chosen, 13);
        assert_eq!(t.survivors.len(), 12);
        assert!(t.survivors.contains(&t.chosen));
        assert!((t.energy_used - 10.0).abs() < 1e-12);
    }

    #[test]
    fn empty_gains_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(exhaustive_search(&[], TrainingBudget::new(1.0, 1.0).unwrap(), &mut rng).is_err());
        let gains = single_path_gains(4, 0, 1.0);
        assert!(otss(&gains, TrainingBudget::new(1.0, 1.0).unwrap(), OtssParams { k: 4, alpha: 0.5 }, &mut rng).is_err());
    }

    #[test]
    fn otss_reduces_to_exhaustive() {
        let n = 64;
        let budget = TrainingBudget::from_db(8.0).unwrap();
        for trial in 0..200u64 {
            let gains = single_path_gains(n, (trial as usize * 7) % n, 64f64.sqrt());
            let mut a = ChaCha8Rng::seed_from_u64(trial);
            let mut b = ChaCha8Rng::seed_from_u64(trial);
            let es = exhaustive_search(&gains, budget, &mut a).unwrap();
            let ot = otss(&gains, budget, OtssParams::exhaustive(n), &mut b).unwrap();
            assert_eq!(es.chosen, ot.chosen);
            assert_eq!(es.stage1_stats, ot.stage1_stats);
        }
    }

    #[test]
    fn trace_matches_fast_path() {
        let gains = single_path_gains(16, 5, 2.0);
        let budget = TrainingBudget::from_db(3.0).unwrap();
        let p = OtssParams::new(10, 0.6, 16).unwrap();
        let mut s = Searcher::new();
        for seed in 0..50 {
            let mut a = ChaCha8Rng::seed_from_u64(seed);
            let mut b = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(s.otss(&gains, budget, p, &mut a), otss(&gains, budget, p, &mut b).unwrap().chosen);
            let mut a = ChaCha8Rng::seed_from_u64(seed);
            let mut b = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(s.exhaustive(&gains, budget, &mut a), exhaustive_search(&gains, budget, &mut b).unwrap().chosen);
        }
    }

    #[test]
    fn survivors_are_the_strongest() {
        let gains = single_path_gains(20, 3, 1.0);
        let budget = TrainingBudget::from_db(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = otss(&gains, budget, OtssParams::new(12, 0.5, 20).unwrap(), &mut rng).unwrap();
        let weakest_kept = t.survivors.iter().map(|&l| t.stage1_stats[l]).fold(f64::INFINITY, f64::min);
        let dropped = (0..20).filter(|l| !t.survivors.contains(l));
        assert!(dropped.map(|l| t.stage1_stats[l]).all(|v| v <= weakest_kept));
        assert_eq!(t.stage2_stats.len(), 8);
    }

    #[test]
    fn hierarchical_noiseless_bisection() {
        use crate::channel::{single_path_channel, SteeringConfig};
        use crate::codebook::{hierarchical_codebooks, CodebookKind};
        use std::f64::consts::PI;
        let hcb = hierarchical_codebooks(CodebookKind::Ideal, 4, 3).unwrap();
        let arr = SteeringConfig::half_wavelength(2).unwrap();
        let budget = TrainingBudget::new(14.0, 1e-30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..50 {
            let psi = 2.0 * PI * (i as f64 + 0.37) / 50.0;
            let phi = (2.0 * PI * (i as f64 * 0.61 + 0.2) / 50.0 * 7.0) % (2.0 * PI);
            let h = single_path_channel(Complex64::new(1.0, 0.0), psi, phi, arr, arr);
            let out = hierarchical_search(&h, &hcb, budget, &mut rng).unwrap();
            assert_eq!(out.tx, (psi / (2.0 * PI / 16.0)) as usize);
            assert_eq!(out.rx, (phi / (2.0 * PI / 8.0)) as usize);
            assert!((out.energy_used - 14.0).abs() < 1e-12);
            assert_eq!(out.stage_choices.len(), 4);
        }
    }

    #[test]
    fn feedback_examples() {
        let (s1, s2, es) = feedback_overhead_bits(128, 117).unwrap();
        assert_eq!(es, 7.0);
        assert_eq!((s1 + s2).ceil(), 55.0);
        assert_eq!(feedback_overhead_bits(128, 127).unwrap().1, 0.0);
        assert!((feedback_overhead_bits(4, 2).unwrap().0 - 6f64.log2()).abs() < 1e-12);
        assert!(feedback_overhead_bits(4, 0).is_err());
        assert!(feedback_overhead_bits(4, 4).is_err());
    }
}
