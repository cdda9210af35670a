//! Beam codebooks: ideal sector beams, least-squares flat-top beams and the
//! multi-level codebooks used by hierarchical search.
//!
//! Ideal beams live on an angular range (normally `[0, 2π)`) and have a
//! constant gain `4π/(|Ω|/L)` inside their sector. Synthesized beams are
//! explicit unit-norm weight vectors designed in the ULA's sine space,
//! where `sin θ ∈ [-1, 1)` is split into `L` equal intervals; a ULA cannot
//! tell `θ` from `π - θ`, so sine space is the natural coordinate.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channel::{steering_vector, ChannelRealization, PathComponent, SteeringConfig};
use crate::error::{invalid, Error, Result};

/// Half-open angular interval `[start, end)` in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularInterval {
    pub start: f64,
    pub end: f64,
}

impl AngularInterval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && end > start && end - start <= 2.0 * PI + 1e-12) {
            return Err(invalid(format!("degenerate angular interval [{start}, {end})")));
        }
        Ok(Self { start, end })
    }

    pub fn full_circle() -> Self {
        Self { start: 0.0, end: 2.0 * PI }
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    /// Membership modulo 2π.
    pub fn contains(&self, angle: f64) -> bool {
        let shifted = self.start + (angle - self.start).rem_euclid(2.0 * PI);
        shifted >= self.start && shifted < self.end
    }

    /// Solid-angle measure used for the ideal gain: `4π` for a full circle.
    pub fn solid_angle(&self) -> f64 {
        2.0 * self.width()
    }
}

/// Half-open interval `[lo, hi)` of `sin θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SineInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= -1.0 && hi <= 1.0 && hi > lo) {
            return Err(invalid(format!("degenerate sine interval [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, sine: f64) -> bool {
        sine >= self.lo && sine < self.hi
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Gain of an ideal beam covering this interval (sine space has measure 2).
    pub fn nominal_gain(&self) -> f64 {
        2.0 / (self.hi - self.lo)
    }

    /// `L` equal intervals tiling `[-1, 1)`.
    pub fn partition(l: usize) -> Result<Vec<SineInterval>> {
        if l == 0 {
            return Err(invalid("codebook size must be at least 1"));
        }
        let w = 2.0 / l as f64;
        Ok((0..l)
            .map(|i| SineInterval { lo: -1.0 + w * i as f64, hi: if i + 1 == l { 1.0 } else { -1.0 + w * (i + 1) as f64 } })
            .collect())
    }

    /// Index of the interval of a uniform `L`-partition that holds `sine`.
    pub fn partition_index(l: usize, sine: f64) -> usize {
        let idx = ((sine + 1.0) / 2.0 * l as f64).floor();
        (idx.max(0.0) as usize).min(l - 1)
    }
}

/// Sector beam with constant in-band gain and no leakage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealBeam {
    pub interval: AngularInterval,
    pub gain: f64,
}

impl IdealBeam {
    pub fn gain_at(&self, angle: f64) -> f64 {
        if self.interval.contains(angle) {
            self.gain
        } else {
            0.0
        }
    }
}

/// Explicit unit-norm beamforming vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedBeam {
    pub weights: DVector<Complex64>,
    pub target: Option<SineInterval>,
    pub array: SteeringConfig,
}

impl SynthesizedBeam {
    /// Wraps a weight vector for a half-wavelength ULA, scaling it to unit norm.
    pub fn from_weights(weights: DVector<Complex64>, target: Option<SineInterval>) -> Result<Self> {
        let array = SteeringConfig::half_wavelength(weights.len().max(1))?;
        let norm = weights.norm();
        if weights.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(invalid("beam weights must be a nonzero finite vector"));
        }
        Ok(Self { weights: weights / Complex64::new(norm, 0.0), target, array })
    }

    /// `|v(θ)†·w|²`.
    pub fn gain_at(&self, angle: f64) -> f64 {
        steering_vector(angle, self.array).dotc(&self.weights).norm_sqr()
    }

    /// Gain as a function of `sin θ`.
    pub fn gain_at_sine(&self, sine: f64) -> f64 {
        response_at_sine(&self.weights, sine, self.array.d_over_lambda).norm_sqr()
    }
}

fn response_at_sine(w: &DVector<Complex64>, sine: f64, d_over_lambda: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -2.0 * PI * d_over_lambda * sine);
    let mut phasor = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for wm in w.iter() {
        acc += phasor * wm;
        phasor *= step;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub enum Beam {
    Ideal(IdealBeam),
    Synthesized(SynthesizedBeam),
}

impl Beam {
    pub fn is_ideal(&self) -> bool {
        matches!(self, Beam::Ideal(_))
    }
}

/// Beamforming gain toward `angle`.
pub fn beam_gain(beam: &Beam, angle: f64) -> f64 {
    match beam {
        Beam::Ideal(b) => b.gain_at(angle),
        Beam::Synthesized(b) => b.gain_at(angle),
    }
}

/// `L` equal sectors tiling `range`, each with gain `4π/(|Ω|/L)`.
pub fn ideal_codebook(l: usize, range: AngularInterval) -> Result<Vec<IdealBeam>> {
    if l == 0 {
        return Err(invalid("codebook size must be at least 1"));
    }
    let width = range.width() / l as f64;
    let gain = 4.0 * PI / (range.solid_angle() / l as f64);
    Ok((0..l)
        .map(|i| {
            let start = range.start + width * i as f64;
            let end = if i + 1 == l { range.end } else { range.start + width * (i + 1) as f64 };
            IdealBeam { interval: AngularInterval { start, end }, gain }
        })
        .collect())
}

/// Least-squares flat-top beam design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlatBeamDesign {
    /// Number of sine-space grid points in the fit.
    pub grid_size: usize,
    /// Don't-care band on each side of the passband, in units of `1/N` of
    /// sine space.
    pub transition: f64,
}

impl Default for FlatBeamDesign {
    fn default() -> Self {
        Self { grid_size: 1024, transition: 1.25 }
    }
}

/// Least-squares fit of `v(u)†w` to the ideal mask over a uniform sine grid.
///
/// The passband target is `√gain` with a linear phase centred on the array,
/// the stopband target is zero and a transition band on either side of the
/// passband is left out of the fit. The solution is scaled to unit norm.
pub fn synthesize_flat_beam(
    target: SineInterval,
    array: SteeringConfig,
    design: FlatBeamDesign,
) -> Result<SynthesizedBeam> {
    let n = array.n_antennas;
    if n < 2 {
        return Err(invalid("beam synthesis needs at least two antennas"));
    }
    if design.grid_size < 8 * n {
        return Err(invalid(format!("grid of {} points is too coarse for {n} antennas", design.grid_size)));
    }
    if !(target.hi > target.lo) {
        return Err(invalid("degenerate target interval"));
    }
    let dl = array.d_over_lambda;
    let period = 1.0 / dl;
    let guard = design.transition / n as f64;
    let amplitude = target.nominal_gain().sqrt();
    let centre = (n as f64 - 1.0) / 2.0;

    let mut rows: Vec<(f64, Complex64)> = Vec::with_capacity(design.grid_size);
    for i in 0..design.grid_size {
        let u = -1.0 + (i as f64 + 0.5) * 2.0 / design.grid_size as f64;
        if target.contains(u) {
            let phase = -2.0 * PI * dl * centre * (u - target.center());
            rows.push((u, Complex64::from_polar(amplitude, phase)));
        } else {
            let below = (target.lo - u).rem_euclid(period);
            let above = (u - target.hi).rem_euclid(period);
            if below > guard && above >= guard {
                rows.push((u, Complex64::new(0.0, 0.0)));
            }
        }
    }
    if rows.len() < n {
        return Err(invalid("too few constrained grid points for the fit"));
    }

    let a = DMatrix::from_fn(rows.len(), n, |r, m| {
        Complex64::from_polar(1.0, -2.0 * PI * dl * m as f64 * rows[r].0)
    });
    let d = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let gram = a.adjoint() * &a;
    let rhs = a.adjoint() * d;
    let w = Cholesky::new(gram)
        .ok_or_else(|| invalid("normal equations are not positive definite"))?
        .solve(&rhs);
    let mut beam = SynthesizedBeam::from_weights(w, Some(target))?;
    beam.array = array;
    Ok(beam)
}

/// `L` synthesized beams tiling sine space.
pub fn synthesized_codebook(l: usize, array: SteeringConfig, design: FlatBeamDesign) -> Result<Vec<SynthesizedBeam>> {
    SineInterval::partition(l)?
        .into_iter()
        .map(|iv| synthesize_flat_beam(iv, array, design))
        .collect()
}

/// Cartesian product of a Tx and an Rx codebook.
///
/// Pair index `l` (0-based) maps to `(l_T, l_R) = (l / L_R, l % L_R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCodebook {
    pub tx: Vec<Beam>,
    pub rx: Vec<Beam>,
}

impl PairCodebook {
    pub fn new(tx: Vec<Beam>, rx: Vec<Beam>) -> Result<Self> {
        if tx.is_empty() || rx.is_empty() {
            return Err(invalid("codebooks must be nonempty"));
        }
        Ok(Self { tx, rx })
    }

    pub fn ideal(l_tx: usize, l_rx: usize) -> Result<Self> {
        let range = AngularInterval::full_circle();
        Self::new(
            ideal_codebook(l_tx, range)?.into_iter().map(Beam::Ideal).collect(),
            ideal_codebook(l_rx, range)?.into_iter().map(Beam::Ideal).collect(),
        )
    }

    pub fn synthesized(
        l_tx: usize,
        l_rx: usize,
        tx_array: SteeringConfig,
        rx_array: SteeringConfig,
        design: FlatBeamDesign,
    ) -> Result<Self> {
        Self::new(
            synthesized_codebook(l_tx, tx_array, design)?.into_iter().map(Beam::Synthesized).collect(),
            synthesized_codebook(l_rx, rx_array, design)?.into_iter().map(Beam::Synthesized).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.tx.len() * self.rx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn split(&self, l: usize) -> (usize, usize) {
        (l / self.rx.len(), l % self.rx.len())
    }

    pub fn join(&self, l_tx: usize, l_rx: usize) -> usize {
        l_tx * self.rx.len() + l_rx
    }

    /// Effective channels of all pairs, indexed by pair index.
    pub fn effective_gains(&self, h: &ChannelRealization) -> Result<Vec<Complex64>> {
        pair_gains(&self.tx, &self.rx, h)
    }
}

/// Ideal-beam pair gains from path metadata only (no channel matrix needed).
pub fn pair_gains_from_paths(tx: &[Beam], rx: &[Beam], paths: &[PathComponent]) -> Result<Vec<Complex64>> {
    let ideal = |beams: &[Beam]| -> Result<Vec<IdealBeam>> {
        beams
            .iter()
            .map(|b| match b {
                Beam::Ideal(b) => Ok(*b),
                Beam::Synthesized(_) => Err(invalid("path-only gains need ideal beams")),
            })
            .collect()
    };
    let (tx, rx) = (ideal(tx)?, ideal(rx)?);
    let mut out = vec![Complex64::new(0.0, 0.0); tx.len() * rx.len()];
    for p in paths {
        for (t, wt) in tx.iter().enumerate() {
            let gt = wt.gain_at(p.aod);
            if gt == 0.0 {
                continue;
            }
            for (r, fr) in rx.iter().enumerate() {
                out[t * rx.len() + r] += p.gain * (gt * fr.gain_at(p.aoa)).sqrt();
            }
        }
    }
    Ok(out)
}

/// `f_r†·H·w_t` for every `(t, r)`, flattened as `t·|rx| + r`.
pub fn pair_gains(tx: &[Beam], rx: &[Beam], h: &ChannelRealization) -> Result<Vec<Complex64>> {
    let all_ideal = tx.iter().chain(rx).all(Beam::is_ideal);
    if all_ideal {
        return pair_gains_from_paths(tx, rx, &h.paths);
    }
    let mut out = Vec::with_capacity(tx.len() * rx.len());
    let mut rx_weights = Vec::with_capacity(rx.len());
    for r in rx {
        match r {
            Beam::Synthesized(b) if b.weights.len() == h.matrix.nrows() => rx_weights.push(&b.weights),
            Beam::Synthesized(b) => {
                return Err(Error::DimensionMismatch { expected: h.matrix.nrows(), actual: b.weights.len() })
            }
            Beam::Ideal(_) => return Err(invalid("cannot mix ideal and synthesized beams")),
        }
    }
    for t in tx {
        let w = match t {
            Beam::Synthesized(b) if b.weights.len() == h.matrix.ncols() => &b.weights,
            Beam::Synthesized(b) => {
                return Err(Error::DimensionMismatch { expected: h.matrix.ncols(), actual: b.weights.len() })
            }
            Beam::Ideal(_) => return Err(invalid("cannot mix ideal and synthesized beams")),
        };
        let hw = &h.matrix * w;
        for f in &rx_weights {
            out.push(f.dotc(&hw));
        }
    }
    Ok(out)
}

/// Which beam family a codebook is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CodebookKind {
    Ideal,
    Synthesized { tx_array: SteeringConfig, rx_array: SteeringConfig, design: FlatBeamDesign },
}

/// One hierarchical-search stage: the levels used and whether two children
/// are scanned on each side (otherwise that side stays on its last choice).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub tx_level: usize,
    pub rx_level: usize,
    pub scan_tx: bool,
    pub scan_rx: bool,
}

impl Stage {
    pub fn measurements(&self) -> usize {
        (if self.scan_tx { 2 } else { 1 }) * (if self.scan_rx { 2 } else { 1 })
    }
}

/// Binary multi-level codebooks; level `k` (1-based) has `2^k` beams.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalCodebooks {
    /// `tx_levels[k-1]` holds the `2^k` level-`k` beams.
    pub tx_levels: Vec<Vec<Beam>>,
    pub rx_levels: Vec<Vec<Beam>>,
    pub stages: Vec<Stage>,
}

impl HierarchicalCodebooks {
    pub fn total_measurements(&self) -> usize {
        self.stages.iter().map(Stage::measurements).sum()
    }

    /// The last-level codebooks as a flat pair codebook.
    pub fn flat(&self) -> PairCodebook {
        PairCodebook {
            tx: self.tx_levels.last().cloned().unwrap_or_default(),
            rx: self.rx_levels.last().cloned().unwrap_or_default(),
        }
    }
}

/// Builds `tx_depth`-level Tx and `rx_depth`-level Rx codebooks and the
/// stage plan: 2 Tx × 2 Rx per stage while both sides refine, then 2 Tx
/// per stage with Rx fixed. The defaults `(4, 3)` give `4+4+4+2 = 14`
/// measurements over a 16×8 final codebook.
pub fn hierarchical_codebooks(kind: CodebookKind, tx_depth: usize, rx_depth: usize) -> Result<HierarchicalCodebooks> {
    if tx_depth == 0 || rx_depth == 0 || rx_depth > tx_depth {
        return Err(invalid(format!("unsupported hierarchy depths tx={tx_depth}, rx={rx_depth}")));
    }
    let level = |k: usize, array: Option<(SteeringConfig, FlatBeamDesign)>| -> Result<Vec<Beam>> {
        let l = 1usize << k;
        match array {
            None => Ok(ideal_codebook(l, AngularInterval::full_circle())?.into_iter().map(Beam::Ideal).collect()),
            Some((a, d)) => Ok(synthesized_codebook(l, a, d)?.into_iter().map(Beam::Synthesized).collect()),
        }
    };
    let (tx_cfg, rx_cfg) = match kind {
        CodebookKind::Ideal => (None, None),
        CodebookKind::Synthesized { tx_array, rx_array, design } => (Some((tx_array, design)), Some((rx_array, design))),
    };
    let tx_levels = (1..=tx_depth).map(|k| level(k, tx_cfg)).collect::<Result<Vec<_>>>()?;
    let rx_levels = (1..=rx_depth).map(|k| level(k, rx_cfg)).collect::<Result<Vec<_>>>()?;
    let stages = (1..=tx_depth)
        .map(|k| Stage { tx_level: k, rx_level: k.min(rx_depth), scan_tx: true, scan_rx: k <= rx_depth })
        .collect();
    Ok(HierarchicalCodebooks { tx_levels, rx_levels, stages })
}

fn beam_json(index: usize, beam: &Beam) -> Value {
    match beam {
        Beam::Ideal(b) => json!({
            "index": index,
            "kind": "ideal",
            "interval": [b.interval.start, b.interval.end],
            "gain": b.gain,
        }),
        Beam::Synthesized(b) => {
            let weights: Vec<f64> = b.weights.iter().flat_map(|z| [z.re, z.im]).collect();
            json!({
                "index": index,
                "kind": "synthesized",
                "sine_interval": b.target.map(|t| [t.lo, t.hi]),
                "d_over_lambda": b.array.d_over_lambda,
                "weights": weights,
            })
        }
    }
}

/// JSON export of a codebook (weights as interleaved re/im pairs).
pub fn codebook_json(beams: &[Beam]) -> Value {
    Value::Array(beams.iter().enumerate().map(|(i, b)| beam_json(i, b)).collect())
}

/// JSON export of a pair codebook.
pub fn pair_codebook_json(cb: &PairCodebook) -> Value {
    json!({ "tx": codebook_json(&cb.tx), "rx": codebook_json(&cb.rx), "pairs": cb.len() })
}
