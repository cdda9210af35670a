use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, Scenario, SchemeSpec};
use super::rng::{trial_rng, StreamPurpose};
use crate::analysis::{optimal_asymptotic_params, optimize_bound_params};
use crate::channel::{
    los_rician_channel, nlos_channel, single_path_channel, AngleDistribution, ChannelRealization, PathComponent,
    SteeringConfig,
};
use crate::codebook::{hierarchical_codebooks, pair_gains_from_paths, CodebookKind, HierarchicalCodebooks, PairCodebook};
use crate::error::{Error, Result};
use crate::search::{
    best_pair, exhaustive_search, hierarchical_search_gains, otss, HierarchyGains, OtssParams, SearchTrace,
    Searcher, TrainingBudget,
};

/// One `(scheme, budget)` estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: Scenario,
    pub scheme: String,
    pub budget_db: f64,
    pub p_miss: f64,
    pub stderr: f64,
    pub trials: u64,
    /// Resolved OTSS parameters, when the scheme is a two-stage search.
    pub k: Option<usize>,
    pub alpha: Option<f64>,
}

/// A `(scheme, budget)` cell that could not be run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub scheme: String,
    pub budget_db: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeSample {
    pub trial: u64,
    pub scheme: String,
    /// Bits/s/Hz.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeSummary {
    pub scheme: String,
    pub mean_rate: f64,
    /// `Pr{R <= 0.5}`.
    pub outage: f64,
    pub trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub rows: Vec<ResultRow>,
    pub errors: Vec<RowError>,
    pub se_samples: Vec<SeSample>,
    pub se_summary: Vec<SeSummary>,
}

impl ResultTable {
    fn empty(config: &ExperimentConfig) -> Self {
        Self {
            metadata: Metadata {
                seed: config.seed,
                config_hash: config.hash(),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            rows: Vec::new(),
            errors: Vec::new(),
            se_samples: Vec::new(),
            se_summary: Vec::new(),
        }
    }

    pub fn row(&self, scheme: &str, budget_db: f64) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.budget_db == budget_db)
    }
}

/// Outage threshold for SE summaries, bits/s/Hz.
pub const OUTAGE_RATE: f64 = 0.5;

/// `√(p(1-p)/n)`.
pub fn standard_error(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Runs `f` on a pool capped by `BEAMALIGN_THREADS` when that is set.
pub fn with_worker_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var("BEAMALIGN_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

/// Codebooks and arrays shared by every trial of a scenario.
pub struct ScenarioContext {
    scenario: Scenario,
    seed: u64,
    tx: SteeringConfig,
    rx: SteeringConfig,
    flat: PairCodebook,
    hierarchy: Option<HierarchicalCodebooks>,
    hierarchy_error: Option<String>,
    los_k_db: f64,
    nlos_k_db: f64,
    nlos_mean: f64,
}

fn depth(l: usize) -> Option<usize> {
    (l.is_power_of_two() && l >= 2).then(|| l.trailing_zeros() as usize)
}

impl ScenarioContext {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let tx = SteeringConfig::half_wavelength(config.antennas.tx)?;
        let rx = SteeringConfig::half_wavelength(config.antennas.rx)?;
        let kind = if config.scenario.synthesized() {
            CodebookKind::Synthesized { tx_array: tx, rx_array: rx, design: config.synthesis }
        } else {
            CodebookKind::Ideal
        };
        let needs_hs = config.schemes.iter().any(|s| matches!(s, SchemeSpec::HsEqual));
        let (lt, lr) = (config.codebook.tx, config.codebook.rx);
        let (mut hierarchy, mut hierarchy_error) = (None, None);
        let flat = match (depth(lt), depth(lr)) {
            (Some(dt), Some(dr)) if dr <= dt => {
                let h = hierarchical_codebooks(kind, dt, dr)?;
                let flat = h.flat();
                if needs_hs {
                    hierarchy = Some(h);
                }
                flat
            }
            _ => {
                hierarchy_error = Some(format!(
                    "hierarchical search needs power-of-two codebooks with L_R <= L_T, got {lt}x{lr}"
                ));
                match kind {
                    CodebookKind::Ideal => PairCodebook::ideal(lt, lr)?,
                    CodebookKind::Synthesized { design, .. } => PairCodebook::synthesized(lt, lr, tx, rx, design)?,
                }
            }
        };
        Ok(Self {
            scenario: config.scenario,
            seed: config.seed,
            tx,
            rx,
            flat,
            hierarchy,
            hierarchy_error,
            los_k_db: config.channel.los_k_db,
            nlos_k_db: config.channel.nlos_k_db,
            nlos_mean: config.channel.nlos_mean_paths,
        })
    }

    pub fn flat(&self) -> &PairCodebook {
        &self.flat
    }

    /// The unit-modulus path of a single-path trial.
    fn single_path(&self, trial: u64) -> PathComponent {
        let mut rng = trial_rng(self.seed, self.scenario.id(), trial, StreamPurpose::Channel);
        let aod = AngleDistribution::UniformCircle.sample(&mut rng);
        let aoa = AngleDistribution::UniformCircle.sample(&mut rng);
        let phase = rng.random_range(0.0..2.0 * PI);
        PathComponent { gain: Complex64::from_polar(1.0, phase), aod, aoa }
    }

    /// The channel of trial `trial`; independent of schemes and budgets.
    pub fn channel(&self, trial: u64) -> Result<ChannelRealization> {
        let mut rng = trial_rng(self.seed, self.scenario.id(), trial, StreamPurpose::Channel);
        match self.scenario {
            Scenario::SinglePathIdeal => {
                let p = self.single_path(trial);
                Ok(single_path_channel(p.gain, p.aod, p.aoa, self.tx, self.rx))
            }
            Scenario::LosSynth => {
                Ok(los_rician_channel(&mut rng, self.los_k_db, AngleDistribution::UniformSine, self.tx, self.rx))
            }
            Scenario::NlosSynth => {
                nlos_channel(&mut rng, self.nlos_k_db, self.nlos_mean, AngleDistribution::UniformSine, self.tx, self.rx)
            }
        }
    }

    fn noise_rng(&self, trial: u64) -> rand_chacha::ChaCha8Rng {
        trial_rng(self.seed, self.scenario.id(), trial, StreamPurpose::Noise)
    }
}

/// A scheme resolved for one budget.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Decision {
    Es,
    Hs,
    Otss(OtssParams),
}

fn resolve(
    spec: SchemeSpec,
    ctx: &ScenarioContext,
    budget_db: f64,
    alpha_step: f64,
) -> std::result::Result<Decision, String> {
    let n = ctx.flat.len();
    let checked = |p: OtssParams| p.validate(n).map(|_| Decision::Otss(p)).map_err(|e| e.to_string());
    match spec {
        SchemeSpec::Es => Ok(Decision::Es),
        SchemeSpec::HsEqual => match &ctx.hierarchy_error {
            Some(e) => Err(e.clone()),
            None => Ok(Decision::Hs),
        },
        SchemeSpec::Otss { k, alpha } => checked(OtssParams { k, alpha }),
        SchemeSpec::OtssAsymptotic => {
            let o = optimal_asymptotic_params(n).map_err(|e| e.to_string())?;
            checked(OtssParams { k: o.k, alpha: o.alpha })
        }
        SchemeSpec::OtssBoundOpt => {
            // nominal gain product F_R·W_T = L_T·L_R with |γ̄|² = 1
            let snr = 10f64.powf(budget_db / 10.0);
            let o = optimize_bound_params(n, snr, n as f64, alpha_step).map_err(|e| e.to_string())?;
            checked(OtssParams { k: o.k, alpha: o.alpha })
        }
    }
}

/// Per-scheme, per-budget resolved decisions (`Err` cells become row errors).
type Plan = Vec<Vec<std::result::Result<Decision, String>>>;

fn build_plan(config: &ExperimentConfig, ctx: &ScenarioContext, schemes: &[SchemeSpec], budgets: &[f64]) -> Plan {
    let mut opt_cache: Vec<(u64, std::result::Result<Decision, String>)> = Vec::new();
    schemes
        .iter()
        .map(|&s| {
            budgets
                .iter()
                .map(|&b| {
                    if s == SchemeSpec::OtssBoundOpt {
                        if let Some((_, d)) = opt_cache.iter().find(|(k, _)| *k == b.to_bits()) {
                            return d.clone();
                        }
                        let d = resolve(s, ctx, b, config.bounds.alpha_step);
                        opt_cache.push((b.to_bits(), d.clone()));
                        d
                    } else {
                        resolve(s, ctx, b, config.bounds.alpha_step)
                    }
                })
                .collect()
        })
        .collect()
}

fn budget_of(db: f64) -> Result<TrainingBudget> {
    TrainingBudget::from_db(db)
}

struct TrialGains {
    flat: Vec<Complex64>,
    hierarchy: Option<HierarchyGains>,
    l_opt: usize,
}

fn trial_gains(ctx: &ScenarioContext, trial: u64, with_hierarchy: bool) -> Result<TrialGains> {
    if ctx.scenario == Scenario::SinglePathIdeal {
        // ideal beams see only the path geometry; skip building the matrix
        let paths = [ctx.single_path(trial)];
        let flat = pair_gains_from_paths(&ctx.flat.tx, &ctx.flat.rx, &paths)?;
        let hierarchy = match &ctx.hierarchy {
            Some(hcb) if with_hierarchy => Some(HierarchyGains::from_paths(hcb, &paths)?),
            _ => None,
        };
        let l_opt = best_pair(&flat);
        return Ok(TrialGains { flat, hierarchy, l_opt });
    }
    let h = ctx.channel(trial)?;
    let flat = ctx.flat.effective_gains(&h)?;
    let hierarchy = match &ctx.hierarchy {
        Some(hcb) if with_hierarchy => Some(HierarchyGains::new(hcb, &h)?),
        _ => None,
    };
    let l_opt = best_pair(&flat);
    Ok(TrialGains { flat, hierarchy, l_opt })
}

fn decide(
    d: Decision,
    g: &TrialGains,
    ctx: &ScenarioContext,
    budget: TrainingBudget,
    searcher: &mut Searcher,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> usize {
    match d {
        Decision::Es => searcher.exhaustive(&g.flat, budget, rng),
        Decision::Otss(p) => searcher.otss(&g.flat, budget, p, rng),
        Decision::Hs => match &g.hierarchy {
            Some(hg) => {
                let o = hierarchical_search_gains(hg, budget, rng);
                ctx.flat.join(o.tx, o.rx)
            }
            None => usize::MAX,
        },
    }
}

fn uses_hierarchy(plan: &Plan) -> bool {
    plan.iter().flatten().any(|d| matches!(d, Ok(Decision::Hs)))
}

/// Miss counts per `(scheme, budget)` cell, flattened scheme-major.
fn miss_counts(ctx: &ScenarioContext, plan: &Plan, budgets: &[TrainingBudget], trials: u64) -> Result<Vec<u64>> {
    let nb = budgets.len();
    let cells = plan.len() * nb;
    let with_hierarchy = uses_hierarchy(plan);
    with_worker_pool(|| {
        (0..trials)
            .into_par_iter()
            .try_fold(
                || (vec![0u64; cells], Searcher::new()),
                |(mut counts, mut searcher), t| -> Result<_> {
                    let g = trial_gains(ctx, t, with_hierarchy)?;
                    for (si, row) in plan.iter().enumerate() {
                        for (bi, d) in row.iter().enumerate() {
                            if let Ok(d) = d {
                                let mut rng = ctx.noise_rng(t);
                                if decide(*d, &g, ctx, budgets[bi], &mut searcher, &mut rng) != g.l_opt {
                                    counts[si * nb + bi] += 1;
                                }
                            }
                        }
                    }
                    Ok((counts, searcher))
                },
            )
            .map(|r| r.map(|(c, _)| c))
            .try_reduce(
                || vec![0u64; cells],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )
    })?
}

fn otss_fields(d: &Decision) -> (Option<usize>, Option<f64>) {
    match d {
        Decision::Otss(p) => (Some(p.k), Some(p.alpha)),
        _ => (None, None),
    }
}

/// Misalignment probability of every configured scheme at every budget.
pub fn run_misalignment_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    let ctx = ScenarioContext::new(config)?;
    let budgets: Vec<TrainingBudget> = config.budget_grid_db.iter().map(|&b| budget_of(b)).collect::<Result<_>>()?;
    let plan = build_plan(config, &ctx, &config.schemes, &config.budget_grid_db);
    let counts = miss_counts(&ctx, &plan, &budgets, config.trials)?;
    let mut table = ResultTable::empty(config);
    let nb = budgets.len();
    for (si, spec) in config.schemes.iter().enumerate() {
        for (bi, &db) in config.budget_grid_db.iter().enumerate() {
            match &plan[si][bi] {
                Ok(d) => {
                    let p = counts[si * nb + bi] as f64 / config.trials as f64;
                    let (k, alpha) = otss_fields(d);
                    table.rows.push(ResultRow {
                        scenario: config.scenario,
                        scheme: spec.to_string(),
                        budget_db: db,
                        p_miss: p,
                        stderr: standard_error(p, config.trials),
                        trials: config.trials,
                        k,
                        alpha,
                    });
                }
                Err(m) => table.errors.push(RowError { scheme: spec.to_string(), budget_db: db, message: m.clone() }),
            }
        }
    }
    Ok(table)
}

/// Spectral efficiency after alignment at the configured training budget.
/// A `perfect` pseudo-scheme records the best pair of the flat codebook.
pub fn run_se_experiment(config: &ExperimentConfig) -> Result<ResultTable> {
    let se = config.se_eval.ok_or_else(|| Error::Config("se_eval is required for SE runs".into()))?;
    let ctx = ScenarioContext::new(config)?;
    let budget = budget_of(se.training_budget_db)?;
    let plan = build_plan(config, &ctx, &config.schemes, &[se.training_budget_db]);
    let snr = 10f64.powf(se.pre_bf_snr_db / 10.0);
    let rate = |h: Complex64| (1.0 + snr * h.norm_sqr()).log2();
    let with_hierarchy = uses_hierarchy(&plan);

    let per_trial: Vec<Vec<f64>> = with_worker_pool(|| {
        (0..config.trials)
            .into_par_iter()
            .map_init(Searcher::new, |searcher, t| -> Result<Vec<f64>> {
                let g = trial_gains(&ctx, t, with_hierarchy)?;
                let mut rates = Vec::with_capacity(plan.len() + 1);
                for row in &plan {
                    if let Ok(d) = &row[0] {
                        let mut rng = ctx.noise_rng(t);
                        let l = decide(*d, &g, &ctx, budget, searcher, &mut rng);
                        rates.push(g.flat.get(l).map_or(f64::NAN, |&h| rate(h)));
                    }
                }
                rates.push(rate(g.flat[g.l_opt]));
                Ok(rates)
            })
            .collect::<Result<Vec<_>>>()
    })??;

    let mut table = ResultTable::empty(config);
    let mut names: Vec<String> = Vec::new();
    for (spec, row) in config.schemes.iter().zip(&plan) {
        match &row[0] {
            Ok(_) => names.push(spec.to_string()),
            Err(m) => table.errors.push(RowError {
                scheme: spec.to_string(),
                budget_db: se.training_budget_db,
                message: m.clone(),
            }),
        }
    }
    names.push("perfect".to_string());
    for (t, rates) in per_trial.iter().enumerate() {
        for (name, &r) in names.iter().zip(rates) {
            table.se_samples.push(SeSample { trial: t as u64, scheme: name.clone(), rate: r });
        }
    }
    for (i, name) in names.iter().enumerate() {
        let col = per_trial.iter().map(|r| r[i]);
        let mean = col.clone().sum::<f64>() / config.trials as f64;
        let outage = col.filter(|&r| r <= OUTAGE_RATE).count() as f64 / config.trials as f64;
        table.se_summary.push(SeSummary { scheme: name.clone(), mean_rate: mean, outage, trials: config.trials });
    }
    Ok(table)
}

/// One cell of an empirical parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: usize,
    pub alpha: f64,
    pub budget_db: f64,
    pub p_miss: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Empirical minimizer per budget (ties to smaller K, then smaller α).
    pub optima: Vec<SweepCell>,
    pub map: Vec<SweepCell>,
    /// Grid points whose parameters are invalid for the codebook.
    pub errors: Vec<RowError>,
    pub metadata: Metadata,
}

/// Misalignment probability of OTSS over a `(K, α)` grid with common random
/// numbers across grid points.
pub fn empirical_param_sweep(config: &ExperimentConfig, k_grid: &[usize], alpha_grid: &[f64]) -> Result<SweepResult> {
    if k_grid.is_empty() || alpha_grid.is_empty() {
        return Err(Error::Config("sweep grids must not be empty".into()));
    }
    let ctx = ScenarioContext::new(config)?;
    let budgets: Vec<TrainingBudget> = config.budget_grid_db.iter().map(|&b| budget_of(b)).collect::<Result<_>>()?;
    let schemes: Vec<SchemeSpec> =
        k_grid.iter().flat_map(|&k| alpha_grid.iter().map(move |&alpha| SchemeSpec::Otss { k, alpha })).collect();
    let plan = build_plan(config, &ctx, &schemes, &config.budget_grid_db);
    let counts = miss_counts(&ctx, &plan, &budgets, config.trials)?;
    let nb = budgets.len();
    let mut map = Vec::new();
    let mut errors = Vec::new();
    for (si, spec) in schemes.iter().enumerate() {
        let SchemeSpec::Otss { k, alpha } = *spec else { continue };
        for (bi, &db) in config.budget_grid_db.iter().enumerate() {
            match &plan[si][bi] {
                Ok(_) => {
                    let p = counts[si * nb + bi] as f64 / config.trials as f64;
                    map.push(SweepCell { k, alpha, budget_db: db, p_miss: p, stderr: standard_error(p, config.trials) });
                }
                Err(m) => errors.push(RowError { scheme: spec.to_string(), budget_db: db, message: m.clone() }),
            }
        }
    }
    let mut optima = Vec::new();
    for &db in &config.budget_grid_db {
        let best = map
            .iter()
            .filter(|c| c.budget_db == db)
            .min_by(|a, b| a.p_miss.total_cmp(&b.p_miss).then(a.k.cmp(&b.k)).then(a.alpha.total_cmp(&b.alpha)));
        if let Some(b) = best {
            optima.push(b.clone());
        }
    }
    Ok(SweepResult { optima, map, errors, metadata: ResultTable::empty(config).metadata })
}

/// Full trace of one ES or OTSS trial, for debugging.
pub fn trial_trace(config: &ExperimentConfig, scheme: SchemeSpec, budget_db: f64, trial: u64) -> Result<SearchTrace> {
    let ctx = ScenarioContext::new(config)?;
    let decision = resolve(scheme, &ctx, budget_db, config.bounds.alpha_step).map_err(Error::InvalidInput)?;
    let h = ctx.channel(trial)?;
    let gains = ctx.flat.effective_gains(&h)?;
    let budget = budget_of(budget_db)?;
    let mut rng = ctx.noise_rng(trial);
    match decision {
        Decision::Es => exhaustive_search(&gains, budget, &mut rng),
        Decision::Otss(p) => otss(&gains, budget, p, &mut rng),
        Decision::Hs => Err(Error::InvalidInput("traces cover ES and OTSS only".into())),
    }
}

/// SHA-256 of the channel matrix of one trial (bit-exact fingerprint).
pub fn channel_fingerprint(config: &ExperimentConfig, trial: u64) -> Result<String> {
    let ctx = ScenarioContext::new(config)?;
    let h = ctx.channel(trial)?;
    let mut hasher = Sha256::new();
    for z in h.matrix.iter() {
        hasher.update(z.re.to_le_bytes());
        hasher.update(z.im.to_le_bytes());
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
