//! Thermal position disorder of trapped atoms and its effect on the
//! structure factor and the router.
//!
//! Each atom is displaced from its trap centre by an independent Gaussian
//! deviate. Sample `i` draws from ChaCha stream `i` of the configured seed,
//! so results do not depend on how samples are scheduled across threads.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{structure_factor, AtomChain, StructureFactor, SystemParams};
use crate::routing::{max_photon_loss_numeric, metrics_for_structure};

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const HBAR: f64 = 1.054_571_817e-34;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
pub const RB87_MASS: f64 = 86.909_180_527 * ATOMIC_MASS_UNIT;
/// Rb D2 line, metres.
pub const RB87_WAVELENGTH: f64 = 780e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    /// Position standard deviation in units of λ.
    pub sigma: f64,
    pub samples: usize,
    pub seed: u64,
}

impl DisorderSpec {
    pub fn new(sigma: f64, samples: usize, seed: u64) -> Result<Self> {
        let spec = Self { sigma, samples, seed };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a spec from σ in metres for a transition of wavelength
    /// `wavelength` (metres).
    pub fn from_metres(sigma: f64, wavelength: f64, samples: usize, seed: u64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::invalid("wavelength", "must be positive"));
        }
        Self::new(sigma / wavelength, samples, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid("sigma", format!("{} is not a non-negative number", self.sigma)));
        }
        if self.samples == 0 {
            return Err(Error::invalid("samples", "need at least one sample"));
        }
        Ok(())
    }
}

/// Radial trap frequency `√(4U/(m w²))` of a Gaussian tweezer of depth `U`
/// (joules) and waist `w` (metres), in rad/s.
pub fn tweezer_trap_frequency(depth: f64, mass: f64, waist: f64) -> f64 {
    (4.0 * depth / (mass * waist * waist)).sqrt()
}

/// Thermal position spread of a harmonically trapped particle in metres,
/// `σ² = ħ/(2mω) · coth(ħω/(2k_B T))`.
pub fn thermal_position_sigma(mass: f64, omega: f64, temperature: f64) -> f64 {
    let zero_point = HBAR / (2.0 * mass * omega);
    if temperature <= 0.0 {
        return zero_point.sqrt();
    }
    let x = HBAR * omega / (2.0 * BOLTZMANN * temperature);
    (zero_point / x.tanh()).sqrt()
}

/// Large-N limit of the disorder-averaged `|S|/N`, `exp(−2k²σ²)` with
/// σ in units of λ.
pub fn analytic_mean_structure(sigma: f64) -> f64 {
    (-8.0 * PI * PI * sigma * sigma).exp()
}

pub fn sample_chain(chain: &AtomChain, spec: &DisorderSpec, sample_index: u64) -> AtomChain {
    if spec.sigma == 0.0 {
        return chain.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(sample_index);
    let normal = Normal::new(0.0, spec.sigma).expect("validated sigma");
    AtomChain::new(chain.positions().iter().map(|x| x + normal.sample(&mut rng)).collect())
}

/// Trap centres on the λ/2 lattice, where an ordered chain has `|S| = N`.
pub fn ordered_chain(n_atoms: usize) -> AtomChain {
    AtomChain::uniform(n_atoms, 0.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStructure {
    pub mean: f64,
    pub std_error: f64,
}

/// Pairwise summation; the result does not depend on thread scheduling.
fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        values.iter().sum()
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn mean_and_error(values: &[f64]) -> MeanStructure {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let std_error = if values.len() < 2 {
        0.0
    } else {
        let squares: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
        (pairwise_sum(&squares) / (n - 1.0) / n).sqrt()
    };
    MeanStructure { mean, std_error }
}

fn sampled_structures(n_atoms: usize, spec: &DisorderSpec) -> Vec<StructureFactor> {
    let centres = ordered_chain(n_atoms);
    (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| structure_factor(&sample_chain(&centres, spec, i)))
        .collect()
}

/// Monte Carlo mean of `|S|/N` over disordered copies of the ordered chain.
pub fn mean_structure_factor(n_atoms: usize, spec: &DisorderSpec) -> Result<MeanStructure> {
    spec.validate()?;
    if n_atoms == 0 {
        return Err(Error::EmptyChain);
    }
    let ratios: Vec<f64> = sampled_structures(n_atoms, spec)
        .iter()
        .map(|s| s.magnitude() / n_atoms as f64)
        .collect();
    Ok(mean_and_error(&ratios))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegradedRouter {
    pub mean_s_ratio: f64,
    pub std_error: f64,
    /// 𝒲 with |S| replaced by its disorder average.
    pub w_mean_structure: f64,
    /// 𝒲 averaged over the sampled chains.
    pub w_monte_carlo: f64,
    /// 𝒲 of the ordered chain.
    pub w_clean: f64,
    /// Maximum loss over |S|; disorder only moves |S| inside [0, N].
    pub n_loss: f64,
}

/// Backward output at the router point for a given |S|.
pub fn tuning_range_at(params: &SystemParams, n_atoms: usize, s_magnitude: f64) -> Result<f64> {
    let p = SystemParams {
        delta: 0.0,
        epsilon: 1.0,
        ..*params
    };
    Ok(metrics_for_structure(&p, n_atoms, StructureFactor::from_polar(s_magnitude, 0.0))?.n_out_minus)
}

pub fn degraded_tuning_range(params: &SystemParams, n_atoms: usize, spec: &DisorderSpec) -> Result<DegradedRouter> {
    spec.validate()?;
    if n_atoms == 0 {
        return Err(Error::EmptyChain);
    }
    let n = n_atoms as f64;
    let structures = sampled_structures(n_atoms, spec);
    let ratios: Vec<f64> = structures.iter().map(|s| s.magnitude() / n).collect();
    let stats = mean_and_error(&ratios);
    let per_sample = ratios
        .par_iter()
        .map(|r| tuning_range_at(params, n_atoms, r * n))
        .collect::<Result<Vec<f64>>>()?;
    let router = SystemParams { delta: 0.0, ..*params };
    Ok(DegradedRouter {
        mean_s_ratio: stats.mean,
        std_error: stats.std_error,
        w_mean_structure: tuning_range_at(params, n_atoms, stats.mean * n)?,
        w_monte_carlo: pairwise_sum(&per_sample) / per_sample.len() as f64,
        w_clean: tuning_range_at(params, n_atoms, n)?,
        n_loss: max_photon_loss_numeric(&router, n_atoms)?.n_loss,
    })
}
