use std::path::Path;

use anyhow::Result;
use beamalign::analysis::{
    es_decay_rate, optimal_asymptotic_params, optimize_bound_params, pmiss_upper_bound, BoundInputs,
};
use beamalign::search::feedback_overhead_bits;
use beamalign::simkit::output::{
    json_bytes, results_csv, se_samples_csv, se_summary_csv, sig6, sweep_csv, write_file,
};
use beamalign::simkit::{
    empirical_param_sweep, run_misalignment_experiment, run_se_experiment, ExperimentConfig, ResultTable, SchemeSpec,
    SeEval, SweepGrid,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{BoundsArgs, ParamsArgs, RunArgs, SweepArgs};
use crate::config::resolve;

/// How a command failed.
pub enum Failure {
    /// Bad invocation or config: exit 2.
    Usage(anyhow::Error),
    /// The experiment itself failed: exit 1.
    Experiment(anyhow::Error),
}

pub type Outcome = std::result::Result<(), Failure>;

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn run<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Experiment)
}

fn write_manifest(out: &Path, command: &str, cfg: &ExperimentConfig, outputs: &[&str]) -> Result<()> {
    let manifest = json!({
        "manifest": {
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": cfg.hash(),
            "outputs": outputs,
        },
        "config": cfg,
    });
    write_file(out, "manifest.json", &json_bytes(&manifest)?)?;
    Ok(())
}

fn csv_text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[derive(Serialize)]
struct ParamsRow {
    n: usize,
    k_star: usize,
    alpha_star: f64,
    rate_star: f64,
    rate_es: f64,
    rate_ratio: f64,
    otss_stage1_bits: f64,
    otss_stage2_bits: f64,
    otss_feedback_bits: u32,
    es_feedback_bits: u32,
}

pub fn params(args: &ParamsArgs) -> Outcome {
    let n = usage(usize::try_from(args.n).map_err(anyhow::Error::from))?;
    let o = usage(optimal_asymptotic_params(n).map_err(anyhow::Error::from))?;
    let (b1, b2, bes) = usage(feedback_overhead_bits(n, o.k).map_err(anyhow::Error::from))?;
    let row = ParamsRow {
        n,
        k_star: o.k,
        alpha_star: o.alpha,
        rate_star: o.rate,
        rate_es: es_decay_rate(n, 1.0),
        rate_ratio: o.rate / es_decay_rate(n, 1.0),
        otss_stage1_bits: b1,
        otss_stage2_bits: b2,
        otss_feedback_bits: (b1 + b2).ceil() as u32,
        es_feedback_bits: bes.ceil() as u32,
    };
    let header = "n,k_star,alpha_star,rate_star,rate_es,rate_ratio,otss_stage1_bits,otss_stage2_bits,otss_feedback_bits,es_feedback_bits";
    let line = format!(
        "{},{},{},{},{},{},{},{},{},{}",
        row.n,
        row.k_star,
        sig6(row.alpha_star),
        sig6(row.rate_star),
        sig6(row.rate_es),
        sig6(row.rate_ratio),
        sig6(row.otss_stage1_bits),
        sig6(row.otss_stage2_bits),
        row.otss_feedback_bits,
        row.es_feedback_bits
    );
    let csv = format!("{header}\n{line}\n");
    print!("{csv}");
    run((|| {
        write_file(&args.out, "params.csv", csv.as_bytes())?;
        write_file(&args.out, "params.json", &json_bytes(&row)?)?;
        let manifest = json!({
            "manifest": {"command": "params", "version": env!("CARGO_PKG_VERSION"), "n": n,
                         "outputs": ["params.csv", "params.json"]},
        });
        write_file(&args.out, "manifest.json", &json_bytes(&manifest)?)?;
        Ok(())
    })())
}

#[derive(Serialize)]
struct BoundRow {
    budget_db: f64,
    scheme: String,
    k: usize,
    alpha: f64,
    pmiss1: f64,
    pmiss2_bound: f64,
    total: f64,
    total_raw: f64,
    degenerate_stage2: bool,
}

#[derive(Serialize)]
struct BoundError {
    budget_db: f64,
    scheme: String,
    message: String,
}

pub fn bounds(args: &BoundsArgs) -> Outcome {
    let cfg = usage(resolve(&args.config, |c| {
        if args.optimize {
            c.bounds.optimize = true;
        }
    }))?;
    let n = cfg.n_pairs();
    // ideal beams with unit path gain: F_R·W_T = L_T·L_R
    let f = n as f64;
    let mut fixed: Vec<(String, Option<(usize, f64)>)> = Vec::new();
    let mut optimize = cfg.bounds.optimize;
    for s in &cfg.schemes {
        match *s {
            SchemeSpec::Otss { k, alpha } => fixed.push((s.to_string(), Some((k, alpha)))),
            SchemeSpec::OtssAsymptotic => {
                let o = optimal_asymptotic_params(n).map(|o| (o.k, o.alpha)).ok();
                fixed.push((s.to_string(), o));
            }
            SchemeSpec::OtssBoundOpt => optimize = true,
            SchemeSpec::Es | SchemeSpec::HsEqual => {}
        }
    }
    if fixed.is_empty() && !optimize {
        let o = optimal_asymptotic_params(n).map(|o| (o.k, o.alpha)).ok();
        fixed.push((SchemeSpec::OtssAsymptotic.to_string(), o));
    }
    eprintln!("bounds: N = {n}, {} budgets{}", cfg.budget_grid_db.len(), if optimize { ", optimizing (K, α)" } else { "" });

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for &db in &cfg.budget_grid_db {
        let snr = 10f64.powf(db / 10.0);
        let mut cells = fixed.clone();
        if optimize {
            let o = optimize_bound_params(n, snr, f, cfg.bounds.alpha_step);
            cells.push((SchemeSpec::OtssBoundOpt.to_string(), o.ok().map(|o| (o.k, o.alpha))));
        }
        for (scheme, params) in cells {
            let result = params
                .ok_or_else(|| beamalign::Error::InvalidInput(format!("no parameters for N = {n}")))
                .and_then(|(k, alpha)| BoundInputs::new(n, k, alpha, snr, f).and_then(|b| pmiss_upper_bound(&b)).map(|u| (k, alpha, u)));
            match result {
                Ok((k, alpha, u)) => rows.push(BoundRow {
                    budget_db: db,
                    scheme,
                    k,
                    alpha,
                    pmiss1: u.pmiss1,
                    pmiss2_bound: u.pmiss2,
                    total: u.value,
                    total_raw: u.raw,
                    degenerate_stage2: u.degenerate_stage2,
                }),
                Err(e) => errors.push(BoundError { budget_db: db, scheme, message: e.to_string() }),
            }
        }
    }

    let mut csv = String::from("budget_db,scheme,k,alpha,pmiss1,pmiss2_bound,total\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.budget_db,
            r.scheme,
            r.k,
            r.alpha,
            sig6(r.pmiss1),
            sig6(r.pmiss2_bound),
            sig6(r.total)
        ));
    }
    print!("{csv}");
    run((|| {
        write_file(&args.config.out, "bounds.csv", csv.as_bytes())?;
        let doc = json!({"config": cfg, "rows": rows, "errors": errors});
        write_file(&args.config.out, "bounds.json", &json_bytes(&doc)?)?;
        write_manifest(&args.config.out, "bounds", &cfg, &["bounds.csv", "bounds.json"])
    })())?;
    report_errors(errors.iter().map(|e| (e.scheme.as_str(), e.budget_db, e.message.as_str())), true)
}

fn report_errors<'a>(errors: impl Iterator<Item = (&'a str, f64, &'a str)>, strict: bool) -> Outcome {
    let mut any = false;
    for (scheme, db, msg) in errors {
        eprintln!("error: {scheme} at {db} dB: {msg}");
        any = true;
    }
    if any && strict {
        return Err(Failure::Experiment(anyhow::anyhow!("some rows could not be computed")));
    }
    Ok(())
}

fn add_bound_opt(c: &mut ExperimentConfig, optimize: bool) {
    if optimize {
        c.bounds.optimize = true;
        if !c.schemes.contains(&SchemeSpec::OtssBoundOpt) {
            c.schemes.push(SchemeSpec::OtssBoundOpt);
        }
    }
}

#[derive(Serialize)]
struct RunDocument<'a> {
    config: &'a ExperimentConfig,
    result: &'a ResultTable,
}

pub fn simulate(args: &RunArgs) -> Outcome {
    let cfg = usage(resolve(&args.config, |c| add_bound_opt(c, args.optimize)))?;
    eprintln!(
        "simulate: {} on {}, {} schemes x {} budgets x {} trials",
        cfg.scenario.name(),
        cfg.n_pairs(),
        cfg.schemes.len(),
        cfg.budget_grid_db.len(),
        cfg.trials
    );
    let table = run(run_misalignment_experiment(&cfg).map_err(anyhow::Error::from))?;
    let csv = run(results_csv(&table).map_err(anyhow::Error::from))?;
    print!("{}", csv_text(&csv));
    run((|| {
        write_file(&args.config.out, "results.csv", &csv)?;
        write_file(&args.config.out, "results.json", &json_bytes(&RunDocument { config: &cfg, result: &table })?)?;
        write_manifest(&args.config.out, "simulate", &cfg, &["results.csv", "results.json"])
    })())?;
    report_errors(table.errors.iter().map(|e| (e.scheme.as_str(), e.budget_db, e.message.as_str())), args.strict)
}

pub fn se(args: &RunArgs) -> Outcome {
    let cfg = usage(resolve(&args.config, |c| {
        add_bound_opt(c, args.optimize);
        c.se_eval.get_or_insert(SeEval { pre_bf_snr_db: -16.0, training_budget_db: 10.0 });
    }))?;
    let se = cfg.se_eval.expect("se_eval set during resolution");
    eprintln!(
        "se: {}, {} trials, training {} dB, pre-beamforming SNR {} dB",
        cfg.scenario.name(),
        cfg.trials,
        se.training_budget_db,
        se.pre_bf_snr_db
    );
    let table = run(run_se_experiment(&cfg).map_err(anyhow::Error::from))?;
    let summary = run(se_summary_csv(&table).map_err(anyhow::Error::from))?;
    print!("{}", csv_text(&summary));
    run((|| {
        write_file(&args.config.out, "se_samples.csv", &se_samples_csv(&table)?)?;
        write_file(&args.config.out, "se_summary.csv", &summary)?;
        write_file(&args.config.out, "se.json", &json_bytes(&RunDocument { config: &cfg, result: &table })?)?;
        write_manifest(&args.config.out, "se", &cfg, &["se_samples.csv", "se_summary.csv", "se.json"])
    })())?;
    report_errors(table.errors.iter().map(|e| (e.scheme.as_str(), e.budget_db, e.message.as_str())), args.strict)
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    let cfg = usage(resolve(&args.config, |c| {
        if args.k_grid.is_some() || args.alpha_grid.is_some() {
            let base = c.sweep.clone().unwrap_or(SweepGrid { k_grid: Vec::new(), alpha_grid: Vec::new() });
            c.sweep = Some(SweepGrid {
                k_grid: args.k_grid.clone().unwrap_or(base.k_grid),
                alpha_grid: args.alpha_grid.clone().unwrap_or(base.alpha_grid),
            });
        }
    }))?;
    let Some(grid) = cfg.sweep.clone() else {
        return Err(Failure::Usage(anyhow::anyhow!(
            "sweep needs a grid: set `sweep` in the config or pass --k-grid and --alpha-grid"
        )));
    };
    if grid.k_grid.is_empty() || grid.alpha_grid.is_empty() {
        return usage(Err(anyhow::anyhow!("sweep grids must not be empty")));
    }
    eprintln!(
        "sweep: {}, {} x {} grid x {} budgets x {} trials",
        cfg.scenario.name(),
        grid.k_grid.len(),
        grid.alpha_grid.len(),
        cfg.budget_grid_db.len(),
        cfg.trials
    );
    let result = run(empirical_param_sweep(&cfg, &grid.k_grid, &grid.alpha_grid).map_err(anyhow::Error::from))?;
    let csv = run(sweep_csv(&result).map_err(anyhow::Error::from))?;
    println!("budget_db,k,alpha,p_miss,stderr");
    for o in &result.optima {
        println!("{},{},{},{},{}", o.budget_db, o.k, o.alpha, sig6(o.p_miss), sig6(o.stderr));
    }
    run((|| {
        write_file(&args.config.out, "sweep.csv", &csv)?;
        write_file(&args.config.out, "sweep.json", &json_bytes(&json!({"config": cfg, "result": result}))?)?;
        write_manifest(&args.config.out, "sweep", &cfg, &["sweep.csv", "sweep.json"])
    })())?;
    report_errors(result.errors.iter().map(|e| (e.scheme.as_str(), e.budget_db, e.message.as_str())), args.strict)
}
