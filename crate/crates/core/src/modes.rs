//! Collective modes of the single-excitation problem.
//!
//! The 2×N coupling matrix `G` between the running waves `|±⟩` and the
//! atomic excitations `|Eᵢ⟩` has Gram matrix
//!
//! ```text
//! G G† = g² [ N   S* ]
//!           [ S   N  ]
//! ```
//!
//! so its singular values are `g√(N ± |S|)` and its left singular vectors
//! are the standing waves `(S*/|S| |+⟩ ± |−⟩)/√2`. Everything here is built
//! from that 2×2 problem; no general-purpose SVD is involved.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{structure_factor, AtomChain, SystemParams};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Relative size of |S| (or N − |S|) below which the degenerate limits are
/// used.
const DEGENERACY_TOL: f64 = 1e-12;

/// Superposition `c₊ e^{ikx} + c₋ e^{−ikx}` of the two running waves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StandingWave {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
}

impl StandingWave {
    pub fn new(c_plus: Complex64, c_minus: Complex64) -> Self {
        Self { c_plus, c_minus }
    }

    pub fn field_at(&self, x: f64) -> Complex64 {
        field_at_position(self.c_plus, self.c_minus, x)
    }

    pub fn intensity_at(&self, x: f64) -> f64 {
        self.field_at(x).norm_sqr()
    }

    /// Position of the intensity minimum in `[0, 1/2)`; the pattern repeats
    /// every λ/2. `None` for a pure running wave, which has no minima.
    pub fn node_offset(&self) -> Option<f64> {
        let beat = self.c_plus * self.c_minus.conj();
        if beat.norm() == 0.0 {
            return None;
        }
        Some((PI - beat.arg()).rem_euclid(2.0 * PI) / (4.0 * PI))
    }

    pub fn max_intensity(&self) -> f64 {
        (self.c_plus.norm() + self.c_minus.norm()).powi(2)
    }

    pub fn min_intensity(&self) -> f64 {
        (self.c_plus.norm() - self.c_minus.norm()).powi(2)
    }
}

/// Field of a running-wave superposition at `x` (in λ).
pub fn field_at_position(c_plus: Complex64, c_minus: Complex64, x: f64) -> Complex64 {
    let phase = Complex64::from_polar(1.0, 2.0 * PI * x);
    c_plus * phase + c_minus * phase.conj()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeDecomposition {
    /// `|C₁⟩` over `{|+⟩, |−⟩}`.
    pub c1: [Complex64; 2],
    pub c2: [Complex64; 2],
    /// `|A₁⟩` over `{|Eᵢ⟩}`.
    pub a1: Vec<Complex64>,
    /// `|A₂⟩`; absent when `C₂` is dark (`𝒢₂ = 0`) and has no atomic partner.
    pub a2: Option<Vec<Complex64>>,
    pub g1: f64,
    pub g2: f64,
    /// Number of atomic modes orthogonal to `A₁` and `A₂`, which do not
    /// couple to the cavity.
    pub dark_space_dim: usize,
}

impl ModeDecomposition {
    pub fn c1_wave(&self) -> StandingWave {
        StandingWave::new(self.c1[0], self.c1[1])
    }

    pub fn c2_wave(&self) -> StandingWave {
        StandingWave::new(self.c2[0], self.c2[1])
    }

    /// `Σₖ 𝒢ₖ |Cₖ⟩⟨Aₖ|`, which reproduces the coupling matrix.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let n = self.a1.len();
        let mut out = DMatrix::from_element(2, n, ZERO);
        let mut add = |gain: f64, c: &[Complex64; 2], a: &[Complex64]| {
            for (row, cr) in c.iter().enumerate() {
                for (col, ac) in a.iter().enumerate() {
                    out[(row, col)] += gain * cr * ac.conj();
                }
            }
        };
        add(self.g1, &self.c1, &self.a1);
        if let Some(a2) = &self.a2 {
            add(self.g2, &self.c2, a2);
        }
        out
    }
}

/// The 2×N matrix with rows `g e^{−ikxᵢ}` and `g e^{+ikxᵢ}`.
pub fn coupling_matrix(params: &SystemParams, chain: &AtomChain) -> Result<DMatrix<Complex64>> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let phases: Vec<Complex64> = chain.travelling_phases().collect();
    Ok(DMatrix::from_fn(2, chain.len(), |row, col| {
        let p = if row == 0 { phases[col].conj() } else { phases[col] };
        params.g * p
    }))
}

pub fn decompose_modes(params: &SystemParams, chain: &AtomChain) -> Result<ModeDecomposition> {
    if chain.is_empty() {
        return Err(Error::EmptyChain);
    }
    let n = chain.len();
    let nf = n as f64;
    let s = structure_factor(chain);
    let s_abs = s.magnitude().min(nf);
    let phases: Vec<Complex64> = chain.travelling_phases().collect();
    let inv_sqrt2 = Complex64::new(1.0 / SQRT_2, 0.0);

    if s_abs <= DEGENERACY_TOL * nf {
        let norm = 1.0 / nf.sqrt();
        let g1 = params.g * nf.sqrt();
        return Ok(ModeDecomposition {
            c1: [ONE, ZERO],
            c2: [ZERO, ONE],
            a1: phases.iter().map(|p| p * norm).collect(),
            a2: Some(phases.iter().map(|p| p.conj() * norm).collect()),
            g1,
            g2: g1,
            dark_space_dim: n.saturating_sub(2),
        });
    }

    let s_conj = s.value.conj();
    let u = s_conj / s_abs;
    let weights = |sign: f64| -> Vec<Complex64> {
        phases
            .iter()
            .map(|p| p * s_conj + sign * p.conj() * s_abs)
            .collect()
    };
    let normalise = |v: Vec<Complex64>| -> Option<Vec<Complex64>> {
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (norm > DEGENERACY_TOL * s_abs * nf.sqrt()).then(|| v.into_iter().map(|z| z / norm).collect())
    };

    let dark = nf - s_abs <= DEGENERACY_TOL * nf;
    let a1 = normalise(weights(1.0)).ok_or(Error::EmptyChain)?;
    let a2 = if dark { None } else { normalise(weights(-1.0)) };
    let g2 = if dark { 0.0 } else { params.g * (nf - s_abs).sqrt() };
    let coupled = 1 + usize::from(a2.is_some());

    Ok(ModeDecomposition {
        c1: [u * inv_sqrt2, inv_sqrt2],
        c2: [u * inv_sqrt2, -inv_sqrt2],
        a1,
        a2,
        g1: params.g * (nf + s_abs).sqrt(),
        g2,
        dark_space_dim: n - coupled,
    })
}

/// Complex polariton energies, `Re` = position on the δ axis, `Im` = −width/2.
///
/// Reported in the frame of the bare cavity (`ω̃_c = −iκ/2`,
/// `ω̃_a = −Δ_ac − iγ/2`), so the real part of each eigenvalue is the drive
/// detuning δ at which that polariton is resonantly excited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolaritonSpectrum {
    /// `eigenvalues[k][0] = E_{k+1,+}`, `eigenvalues[k][1] = E_{k+1,−}`.
    pub eigenvalues: [[Complex64; 2]; 2],
    pub cavity: Complex64,
    pub atom: Complex64,
}

impl PolaritonSpectrum {
    pub fn all(&self) -> [Complex64; 4] {
        let e = self.eigenvalues;
        [e[0][0], e[0][1], e[1][0], e[1][1]]
    }

    pub fn labels() -> [&'static str; 4] {
        ["E1+", "E1-", "E2+", "E2-"]
    }

    /// Same eigenvalues measured from the drive frequency instead.
    pub fn in_drive_frame(&self, delta: f64) -> [Complex64; 4] {
        self.all().map(|e| e - delta)
    }
}

/// Bare cavity and atom energies in the cavity frame.
pub fn bare_energies(params: &SystemParams) -> (Complex64, Complex64) {
    (
        Complex64::new(0.0, -0.5 * params.kappa()),
        Complex64::new(-params.delta_ac, -0.5 * params.gamma),
    )
}

pub fn spectrum_for_couplings(params: &SystemParams, g1: f64, g2: f64) -> PolaritonSpectrum {
    let (cavity, atom) = bare_energies(params);
    let pair = |coupling: f64| {
        let root = ((atom - cavity).powi(2) + 4.0 * coupling * coupling).sqrt();
        [(atom + cavity + root) / 2.0, (atom + cavity - root) / 2.0]
    };
    PolaritonSpectrum {
        eigenvalues: [pair(g1), pair(g2)],
        cavity,
        atom,
    }
}

pub fn polariton_eigenvalues(params: &SystemParams, chain: &AtomChain) -> Result<PolaritonSpectrum> {
    let modes = decompose_modes(params, chain)?;
    Ok(spectrum_for_couplings(params, modes.g1, modes.g2))
}

/// The full (N+2)×(N+2) single-excitation matrix over `{|+⟩, |−⟩, |Eᵢ⟩}`.
pub fn single_excitation_matrix(
    params: &SystemParams,
    chain: &AtomChain,
) -> Result<DMatrix<Complex64>> {
    let g = coupling_matrix(params, chain)?;
    let n = chain.len();
    let (cavity, atom) = bare_energies(params);
    let mut h = DMatrix::from_element(n + 2, n + 2, ZERO);
    for i in 0..2 {
        h[(i, i)] = cavity;
    }
    for i in 0..n {
        h[(i + 2, i + 2)] = atom;
        for row in 0..2 {
            h[(row, i + 2)] = g[(row, i)];
            h[(i + 2, row)] = g[(row, i)].conj();
        }
    }
    Ok(h)
}

/// Shifts and widths of the two cavity-like modes far from the atomic
/// resonance, to lowest order in g²/Δ_ac.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersiveEstimates {
    pub bright_shift: f64,
    pub bright_linewidth: f64,
    pub dark_shift: f64,
    pub dark_linewidth: f64,
}

pub fn dispersive_estimates(
    params: &SystemParams,
    n_atoms: usize,
    s_magnitude: f64,
) -> Result<DispersiveEstimates> {
    if params.delta_ac == 0.0 {
        return Err(Error::invalid("delta_ac", "dispersive estimates need Δ_ac ≠ 0"));
    }
    let n = n_atoms as f64;
    if !(0.0..=n).contains(&s_magnitude) {
        return Err(Error::invalid("s_magnitude", format!("{s_magnitude} outside [0, {n}]")));
    }
    let g2 = params.g * params.g;
    let d = params.delta_ac;
    let broadening = params.gamma * g2 / (d * d + 0.25 * params.gamma * params.gamma);
    Ok(DispersiveEstimates {
        bright_shift: g2 * (n + s_magnitude) / d,
        bright_linewidth: params.kappa() + (n + s_magnitude) * broadening,
        dark_shift: g2 * (n - s_magnitude) / d,
        dark_linewidth: params.kappa() + (n - s_magnitude) * broadening,
    })
}
