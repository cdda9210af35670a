//! Experiment configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codebook::FlatBeamDesign;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// One path with unit gain, ideal sector beams, angles on `[0, 2π)`.
    SinglePathIdeal,
    /// LOS Rician channel, least-squares synthesized beams.
    LosSynth,
    /// NLOS multipath channel, least-squares synthesized beams.
    NlosSynth,
}

impl Scenario {
    /// Stream-derivation tag.
    pub fn id(self) -> u64 {
        match self {
            Scenario::SinglePathIdeal => 1,
            Scenario::LosSynth => 2,
            Scenario::NlosSynth => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::SinglePathIdeal => "single_path_ideal",
            Scenario::LosSynth => "los_synth",
            Scenario::NlosSynth => "nlos_synth",
        }
    }

    pub fn synthesized(self) -> bool {
        !matches!(self, Scenario::SinglePathIdeal)
    }
}

/// A search scheme as written in configs: `es`, `hs_equal`,
/// `otss:<K>:<alpha>`, `otss_asymptotic` (alias `otss`) or `otss_bound_opt`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchemeSpec {
    Es,
    HsEqual,
    Otss { k: usize, alpha: f64 },
    OtssAsymptotic,
    OtssBoundOpt,
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeSpec::Es => write!(f, "es"),
            SchemeSpec::HsEqual => write!(f, "hs_equal"),
            SchemeSpec::Otss { k, alpha } => write!(f, "otss:{k}:{alpha}"),
            SchemeSpec::OtssAsymptotic => write!(f, "otss_asymptotic"),
            SchemeSpec::OtssBoundOpt => write!(f, "otss_bound_opt"),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "es" => Ok(SchemeSpec::Es),
            "hs" | "hs_equal" => Ok(SchemeSpec::HsEqual),
            "otss" | "otss_asymptotic" => Ok(SchemeSpec::OtssAsymptotic),
            "otss_bound_opt" => Ok(SchemeSpec::OtssBoundOpt),
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                if let ["otss", k, alpha] = parts.as_slice() {
                    let k = k.parse().map_err(|_| Error::Config(format!("bad K in scheme '{other}'")))?;
                    let alpha = alpha.parse().map_err(|_| Error::Config(format!("bad alpha in scheme '{other}'")))?;
                    Ok(SchemeSpec::Otss { k, alpha })
                } else {
                    Err(Error::Config(format!("unknown scheme '{other}'")))
                }
            }
        }
    }
}

impl TryFrom<String> for SchemeSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SchemeSpec> for String {
    fn from(s: SchemeSpec) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Antennas {
    pub tx: usize,
    pub rx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodebookSizes {
    pub tx: usize,
    pub rx: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub los_k_db: f64,
    pub nlos_k_db: f64,
    pub nlos_mean_paths: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self { los_k_db: 13.2, nlos_k_db: 6.0, nlos_mean_paths: 1.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeEval {
    /// `P_t·|γ̄|²/σ²` in dB.
    pub pre_bf_snr_db: f64,
    /// Training budget used for alignment, in dB.
    #[serde(default = "default_training_db")]
    pub training_budget_db: f64,
}

fn default_training_db() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub k_grid: Vec<usize>,
    pub alpha_grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundOptions {
    /// Add per-budget bound-optimized rows.
    pub optimize: bool,
    pub alpha_step: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { optimize: false, alpha_step: 0.01 }
    }
}

/// A complete, self-describing experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub schemes: Vec<SchemeSpec>,
    pub budget_grid_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub antennas: Antennas,
    pub codebook: CodebookSizes,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub synthesis: FlatBeamDesign,
    #[serde(default)]
    pub se_eval: Option<SeEval>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
    #[serde(default)]
    pub bounds: BoundOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::SinglePathIdeal,
            schemes: vec![SchemeSpec::Es, SchemeSpec::HsEqual, SchemeSpec::OtssAsymptotic],
            budget_grid_db: vec![9.0, 10.0, 11.0, 12.0, 13.0, 14.0],
            trials: 100_000,
            seed: 20_180_601,
            antennas: Antennas { tx: 64, rx: 32 },
            codebook: CodebookSizes { tx: 16, rx: 8 },
            channel: ChannelParams::default(),
            synthesis: FlatBeamDesign::default(),
            se_eval: None,
            sweep: None,
            bounds: BoundOptions::default(),
        }
    }
}

impl ExperimentConfig {
    /// Number of beam pairs `L_T·L_R`.
    pub fn n_pairs(&self) -> usize {
        self.codebook.tx * self.codebook.rx
    }

    /// Structural checks; scheme parameters are checked per result row.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.trials < 1 {
            return fail("trials must be >= 1".into());
        }
        if self.budget_grid_db.is_empty() {
            return fail("budget_grid_db must not be empty".into());
        }
        if let Some(b) = self.budget_grid_db.iter().find(|b| !b.is_finite()) {
            return fail(format!("budget {b} dB is not finite"));
        }
        if self.schemes.is_empty() {
            return fail("schemes must not be empty".into());
        }
        if self.codebook.tx < 1 || self.codebook.rx < 1 || self.n_pairs() < 2 {
            return fail("codebooks must hold at least two beam pairs".into());
        }
        if self.antennas.tx < 1 || self.antennas.rx < 1 {
            return fail("antenna counts must be positive".into());
        }
        if self.scenario.synthesized() {
            if self.antennas.tx < 2 || self.antennas.rx < 2 {
                return fail("synthesized beams need at least two antennas per side".into());
            }
            if self.synthesis.grid_size < 8 * self.antennas.tx.max(self.antennas.rx) {
                return fail("synthesis grid must hold at least 8 points per antenna".into());
            }
        }
        if !(self.channel.nlos_mean_paths > 0.0 && self.channel.nlos_mean_paths.is_finite()) {
            return fail("nlos_mean_paths must be positive".into());
        }
        if let Some(se) = &self.se_eval {
            if !se.pre_bf_snr_db.is_finite() || !se.training_budget_db.is_finite() {
                return fail("se_eval values must be finite".into());
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.k_grid.is_empty() || sw.alpha_grid.is_empty() {
                return fail("sweep grids must not be empty".into());
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).unwrap_or_default();
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parses a config document, or the `config` member of a run manifest.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        Self::from_value(value)
    }

    pub fn from_value(mut value: serde_json::Value) -> Result<Self> {
        if value.get("manifest").is_some() {
            value = value.get_mut("config").map(|v| v.take()).ok_or_else(|| Error::Config("manifest has no config".into()))?;
        }
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_round_trip() {
        for s in ["es", "hs_equal", "otss:117:0.93", "otss_asymptotic", "otss_bound_opt"] {
            let spec: SchemeSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!("otss".parse::<SchemeSpec>().unwrap(), SchemeSpec::OtssAsymptotic);
        assert!("otss:x:0.5".parse::<SchemeSpec>().is_err());
        assert!("bogus".parse::<SchemeSpec>().is_err());
    }

    #[test]
    fn json_round_trip_and_hash() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v = serde_json::to_value(ExperimentConfig::default()).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(ExperimentConfig::from_value(v).is_err());
    }

    #[test]
    fn manifest_wrapper_accepted() {
        let cfg = ExperimentConfig { trials: 17, ..Default::default() };
        let manifest = serde_json::json!({"manifest": {"command": "simulate"}, "config": cfg});
        assert_eq!(ExperimentConfig::from_value(manifest).unwrap(), cfg);
    }

    #[test]
    fn structural_validation() {
        let bad = ExperimentConfig { trials: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { budget_grid_db: vec![], ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
