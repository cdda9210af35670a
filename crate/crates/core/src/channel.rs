//! Channel realizations for a ULA-to-ULA link.
//!
//! Three generators are provided: a deterministic rank-one single-path
//! channel, a LOS Rician channel (one specular path plus i.i.d. diffuse
//! scattering) and an NLOS multipath channel whose path count is
//! `max{1, Poisson(mean)}`. Random generators normalize the expected total
//! channel gain to one, so `E‖H‖²_F = N_T·N_R`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codebook::{Beam, IdealBeam};
use crate::error::{invalid, Error, Result};

/// Uniform linear array geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringConfig {
    pub n_antennas: usize,
    /// Element spacing in wavelengths.
    pub d_over_lambda: f64,
}

impl SteeringConfig {
    pub fn new(n_antennas: usize, d_over_lambda: f64) -> Result<Self> {
        if n_antennas == 0 {
            return Err(invalid("array needs at least one antenna"));
        }
        if !(d_over_lambda > 0.0 && d_over_lambda.is_finite()) {
            return Err(invalid(format!("antenna spacing must be positive, got {d_over_lambda}")));
        }
        Ok(Self { n_antennas, d_over_lambda })
    }

    /// Half-wavelength ULA.
    pub fn half_wavelength(n_antennas: usize) -> Result<Self> {
        Self::new(n_antennas, 0.5)
    }
}

/// How path angles are drawn by the random generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleDistribution {
    /// θ ~ Uniform[0, 2π).
    UniformCircle,
    /// θ = arcsin(U), U ~ Uniform[-1, 1): uniform in the ULA's sine space.
    UniformSine,
}

impl AngleDistribution {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            AngleDistribution::UniformCircle => rng.random_range(0.0..2.0 * PI),
            AngleDistribution::UniformSine => rng.random_range(-1.0f64..1.0).asin(),
        }
    }
}

/// One specular propagation path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub gain: Complex64,
    /// Angle of departure (radians).
    pub aod: f64,
    /// Angle of arrival (radians).
    pub aoa: f64,
}

/// A channel matrix together with its ground-truth path description.
///
/// `matrix` is the sum of the specular `paths` (`gain·u(aoa)·v(aod)†`) plus
/// the diffuse term, whose squared Frobenius norm is `diffuse_energy`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub matrix: DMatrix<Complex64>,
    pub paths: Vec<PathComponent>,
    pub diffuse_energy: f64,
    /// Σ|gain|² over paths plus diffuse energy per matrix entry.
    pub total_gain: f64,
    pub tx: SteeringConfig,
    pub rx: SteeringConfig,
}

impl ChannelRealization {
    fn from_parts(
        paths: Vec<PathComponent>,
        diffuse: Option<DMatrix<Complex64>>,
        tx: SteeringConfig,
        rx: SteeringConfig,
    ) -> Self {
        let mut matrix = specular_matrix(&paths, tx, rx);
        let mut diffuse_energy = 0.0;
        if let Some(d) = diffuse {
            diffuse_energy = d.iter().map(|z| z.norm_sqr()).sum();
            matrix += d;
        }
        let entries = (tx.n_antennas * rx.n_antennas) as f64;
        let total_gain =
            paths.iter().map(|p| p.gain.norm_sqr()).sum::<f64>() + diffuse_energy / entries;
        Self { matrix, paths, diffuse_energy, total_gain, tx, rx }
    }

    /// Sum over specular paths only.
    pub fn specular_matrix(&self) -> DMatrix<Complex64> {
        specular_matrix(&self.paths, self.tx, self.rx)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn specular_matrix(
    paths: &[PathComponent],
    tx: SteeringConfig,
    rx: SteeringConfig,
) -> DMatrix<Complex64> {
    let mut h = DMatrix::zeros(rx.n_antennas, tx.n_antennas);
    for p in paths {
        let u = steering_vector(p.aoa, rx);
        let v = steering_vector(p.aod, tx);
        for (j, mut col) in h.column_iter_mut().enumerate() {
            let c = p.gain * v[j].conj();
            col.iter_mut().zip(u.iter()).for_each(|(z, &ui)| *z += ui * c);
        }
    }
    h
}

/// ULA response: entry `m` is `exp(j·2π·(d/λ)·m·sin θ)`.
pub fn steering_vector(angle: f64, cfg: SteeringConfig) -> DVector<Complex64> {
    steering_vector_sine(angle.sin(), cfg)
}

/// Steering vector parameterized directly by `sin θ`.
pub fn steering_vector_sine(sine: f64, cfg: SteeringConfig) -> DVector<Complex64> {
    let phase = 2.0 * PI * cfg.d_over_lambda * sine;
    DVector::from_fn(cfg.n_antennas, |m, _| {
        if m == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, phase * m as f64)
        }
    })
}

/// Rank-one channel `gamma·u(phi)·v†(psi)`.
pub fn single_path_channel(
    gamma: Complex64,
    psi: f64,
    phi: f64,
    tx: SteeringConfig,
    rx: SteeringConfig,
) -> ChannelRealization {
    ChannelRealization::from_parts(vec![PathComponent { gain: gamma, aod: psi, aoa: phi }], None, tx, rx)
}

pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// LOS Rician channel with unit expected total gain.
///
/// The specular path carries `K/(1+K)` of the power with a uniformly random
/// phase; the diffuse part is an i.i.d. `CN(0, 1/(1+K))` matrix.
pub fn los_rician_channel<R: Rng + ?Sized>(
    rng: &mut R,
    k_factor_db: f64,
    angles: AngleDistribution,
    tx: SteeringConfig,
    rx: SteeringConfig,
) -> ChannelRealization {
    let k = db_to_linear(k_factor_db);
    let (specular, diffuse) = if k.is_infinite() { (1.0, 0.0) } else { (k / (1.0 + k), 1.0 / (1.0 + k)) };
    let aod = angles.sample(rng);
    let aoa = angles.sample(rng);
    let gain = random_phase(rng) * specular.sqrt();
    let scatter = DMatrix::from_fn(rx.n_antennas, tx.n_antennas, |_, _| complex_normal(rng, diffuse));
    ChannelRealization::from_parts(vec![PathComponent { gain, aod, aoa }], Some(scatter), tx, rx)
}

/// NLOS multipath channel.
///
/// Path count `M = max{1, ζ}` with `ζ ~ Poisson(mean_paths)`. Power fractions
/// are i.i.d. unit-mean exponentials normalized to sum to one (an
/// approximation, not a calibrated cluster power model). Each path gain is
/// Rician with the given K-factor: `√p·(√(K/(1+K))·e^{jθ} + √(1/(1+K))·g)`,
/// `g ~ CN(0,1)`. Angles are drawn independently per path.
pub fn nlos_channel<R: Rng + ?Sized>(
    rng: &mut R,
    per_path_k_db: f64,
    mean_paths: f64,
    angles: AngleDistribution,
    tx: SteeringConfig,
    rx: SteeringConfig,
) -> Result<ChannelRealization> {
    let count = nlos_path_count(rng, mean_paths)?;
    let fractions = power_fractions(rng, count);
    let k = db_to_linear(per_path_k_db);
    let (los, nlos) = if k.is_infinite() { (1.0, 0.0) } else { (k / (1.0 + k), 1.0 / (1.0 + k)) };
    let paths = fractions
        .iter()
        .map(|&p| {
            let aod = angles.sample(rng);
            let aoa = angles.sample(rng);
            let fading = random_phase(rng) * los.sqrt() + complex_normal(rng, nlos);
            PathComponent { gain: fading * p.sqrt(), aod, aoa }
        })
        .collect();
    Ok(ChannelRealization::from_parts(paths, None, tx, rx))
}

/// `max{1, ζ}`, `ζ ~ Poisson(mean)`.
pub fn nlos_path_count<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> Result<usize> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(invalid(format!("mean path count must be positive, got {mean}")));
    }
    let poisson = Poisson::new(mean).map_err(|e| invalid(e.to_string()))?;
    let zeta: f64 = poisson.sample(rng);
    Ok((zeta as usize).max(1))
}

/// Normalized i.i.d. exponential weights.
pub fn power_fractions<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..count).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Effective channel `h = f†·H·w` for a Tx/Rx beam pair.
///
/// Ideal beams have no weight vector; for them the effective channel is the
/// coherent sum `Σ_p gain_p·√(F(aoa_p)·W(aod_p))` over specular paths, which
/// reduces to `|γ|²·F_R·W_T` on the covering pair of a single-path channel.
pub fn effective_channel(h: &ChannelRealization, tx: &Beam, rx: &Beam) -> Result<Complex64> {
    match (tx, rx) {
        (Beam::Synthesized(w), Beam::Synthesized(f)) => {
            if w.weights.len() != h.matrix.ncols() {
                return Err(Error::DimensionMismatch { expected: h.matrix.ncols(), actual: w.weights.len() });
            }
            if f.weights.len() != h.matrix.nrows() {
                return Err(Error::DimensionMismatch { expected: h.matrix.nrows(), actual: f.weights.len() });
            }
            Ok(f.weights.dotc(&(&h.matrix * &w.weights)))
        }
        (Beam::Ideal(w), Beam::Ideal(f)) => Ok(ideal_effective_channel(&h.paths, w, f)),
        _ => Err(invalid("Tx and Rx beams must both be ideal or both be synthesized")),
    }
}

/// Ideal-beam effective channel from the path list alone.
pub fn ideal_effective_channel(paths: &[PathComponent], tx: &IdealBeam, rx: &IdealBeam) -> Complex64 {
    paths.iter().map(|p| p.gain * (tx.gain_at(p.aod) * rx.gain_at(p.aoa)).sqrt()).sum()
}
