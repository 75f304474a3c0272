//! Domain types shared by every solver: system parameters, the atom chain
//! and its structure factor.
//!
//! Units: every rate and detuning is measured in units of the atomic decay
//! rate γ, and positions along the cavity axis in units of the cavity
//! wavelength λ. With those units the single-pass phase of an atom at `x` is
//! `k x = 2π x` and its backscattering phase is `2 k x = 4π x`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rates and detunings of the driven ring cavity, all in units of γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    /// Atom-cavity coupling g.
    pub g: f64,
    /// Decay rate through the input mirror.
    pub kappa_in: f64,
    /// Summed decay through all other mirrors and intracavity losses.
    pub kappa_other: f64,
    /// Atomic spontaneous emission rate. The unit of every other rate, so 1
    /// unless a limit (γ → 0) is being probed.
    pub gamma: f64,
    /// Drive amplitude ε (real, nonnegative).
    pub epsilon: f64,
    /// Drive-cavity detuning δ = ω_p − ω_c.
    pub delta: f64,
    /// Cavity-atom detuning Δ_ac = ω_c − ω_a.
    pub delta_ac: f64,
}

impl Default for SystemParams {
    /// Router operating point used throughout: κ = κ_in = 0.1, g = 0.5,
    /// Δ_ac = 10, δ = 0, weak drive.
    fn default() -> Self {
        Self {
            g: 0.5,
            kappa_in: 0.1,
            kappa_other: 0.0,
            gamma: 1.0,
            epsilon: 1e-3,
            delta: 0.0,
            delta_ac: 10.0,
        }
    }
}

impl SystemParams {
    pub fn new(g: f64, kappa_in: f64, kappa_other: f64, delta_ac: f64) -> Self {
        Self {
            g,
            kappa_in,
            kappa_other,
            delta_ac,
            ..Self::default()
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_delta_ac(mut self, delta_ac: f64) -> Self {
        self.delta_ac = delta_ac;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    /// Keeps the total κ and moves the split between the input mirror and
    /// the remaining loss channels.
    pub fn with_kappa_in_ratio(mut self, ratio: f64) -> Self {
        let kappa = self.kappa();
        self.kappa_in = ratio * kappa;
        self.kappa_other = kappa - self.kappa_in;
        self
    }

    /// Chooses g so that the collective cooperativity of `n_atoms` atoms
    /// equals `nc`.
    pub fn with_collective_cooperativity(mut self, nc: f64, n_atoms: usize) -> Self {
        self.g = if n_atoms == 0 {
            0.0
        } else {
            (nc * self.kappa() * self.gamma / (4.0 * n_atoms as f64)).sqrt()
        };
        self
    }

    /// Total cavity decay rate κ = κ_in + κ_other.
    pub fn kappa(&self) -> f64 {
        self.kappa_in + self.kappa_other
    }

    /// Drive-atom detuning Δ = ω_p − ω_a = δ + Δ_ac.
    pub fn atom_detuning(&self) -> f64 {
        self.delta + self.delta_ac
    }

    /// Δ̃ = Δ + iγ/2.
    pub fn complex_atom_detuning(&self) -> Complex64 {
        Complex64::new(self.atom_detuning(), 0.5 * self.gamma)
    }

    /// δ̃ = δ + iκ/2.
    pub fn complex_cavity_detuning(&self) -> Complex64 {
        Complex64::new(self.delta, 0.5 * self.kappa())
    }

    /// Single-atom cooperativity C = 4g²/(κγ).
    pub fn cooperativity(&self) -> f64 {
        4.0 * self.g * self.g / (self.kappa() * self.gamma)
    }

    pub fn collective_cooperativity(&self, n_atoms: usize) -> f64 {
        n_atoms as f64 * self.cooperativity()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g", self.g),
            ("kappa_in", self.kappa_in),
            ("kappa_other", self.kappa_other),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
            ("delta", self.delta),
            ("delta_ac", self.delta_ac),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::invalid(name, format!("{value} is not finite")));
            }
        }
        for (name, value) in [
            ("g", self.g),
            ("kappa_in", self.kappa_in),
            ("kappa_other", self.kappa_other),
            ("gamma", self.gamma),
            ("epsilon", self.epsilon),
        ] {
            if value < 0.0 {
                return Err(Error::invalid(name, format!("{value} is negative")));
            }
        }
        if self.kappa() <= 0.0 {
            return Err(Error::invalid("kappa_in", "total cavity decay must be positive"));
        }
        Ok(())
    }
}

/// Complex structure factor S = Σ exp(2ikxᵢ) of an atom chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureFactor {
    pub value: Complex64,
}

impl StructureFactor {
    pub fn new(value: Complex64) -> Self {
        Self { value }
    }

    pub fn from_polar(magnitude: f64, phase: f64) -> Self {
        Self {
            value: Complex64::from_polar(magnitude, phase),
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.value.norm()
    }

    pub fn phase(&self) -> f64 {
        self.value.arg()
    }

    /// S/|S|, or `None` for a chain without backscattering.
    pub fn unit_phase(&self) -> Option<Complex64> {
        let m = self.magnitude();
        (m > 0.0).then(|| self.value / m)
    }
}

/// Ordered atom positions along the cavity axis, in units of λ.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AtomChain {
    positions: Vec<f64>,
}

impl AtomChain {
    pub fn new(positions: Vec<f64>) -> Self {
        Self { positions }
    }

    /// `n` atoms at `0, spacing, 2·spacing, …`.
    pub fn uniform(n: usize, spacing: f64) -> Self {
        Self::new((0..n).map(|i| i as f64 * spacing).collect())
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Single-pass phase factors e^{ikxᵢ}.
    pub fn travelling_phases(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.positions
            .iter()
            .map(|&x| Complex64::from_polar(1.0, 2.0 * PI * x))
    }
}

pub fn structure_factor(chain: &AtomChain) -> StructureFactor {
    let value = chain
        .positions()
        .iter()
        .map(|&x| Complex64::from_polar(1.0, 4.0 * PI * x))
        .sum();
    StructureFactor { value }
}

/// Builds a chain of `n_atoms` (even) atoms whose structure factor has
/// magnitude `s_target`.
///
/// Atoms come in pairs on the λ/2 lattice, `x_{2j} = j/2` and
/// `x_{2j+1} = j/2 + d`. Each pair contributes `1 + e^{4πid}`, so
/// `|S| = N cos(2πd)` and `d = arccos(s_target/N)/(2π)`. The phase of S is
/// `2πd`; use [`translate_chain`] to move it.
pub fn chain_with_structure(n_atoms: usize, s_target: f64) -> Result<AtomChain> {
    if n_atoms == 0 || n_atoms % 2 != 0 {
        return Err(Error::invalid(
            "n_atoms",
            format!("paired geometry needs a positive even atom count, got {n_atoms}"),
        ));
    }
    let n = n_atoms as f64;
    if !(0.0..=n).contains(&s_target) {
        return Err(Error::invalid(
            "s_target",
            format!("{s_target} outside [0, {n_atoms}]"),
        ));
    }
    let offset = (s_target / n).clamp(-1.0, 1.0).acos() / (2.0 * PI);
    let positions = (0..n_atoms / 2)
        .flat_map(|j| {
            let site = 0.5 * j as f64;
            [site, site + offset]
        })
        .collect();
    Ok(AtomChain::new(positions))
}

/// Paired chain with prescribed `|S|` and `arg S`.
pub fn chain_with_structure_phase(n_atoms: usize, s_target: f64, arg_s: f64) -> Result<AtomChain> {
    let chain = chain_with_structure(n_atoms, s_target)?;
    let current = structure_factor(&chain).phase();
    Ok(translate_chain(&chain, (arg_s - current) / (4.0 * PI)))
}

pub fn translate_chain(chain: &AtomChain, displacement: f64) -> AtomChain {
    AtomChain::new(chain.positions().iter().map(|x| x + displacement).collect())
}
