//! Exact steady state of the full master equation for a few atoms in a
//! truncated two-mode Fock space. Used to check the weak-drive formulas and
//! the mean-field closure.
//!
//! Basis states are ordered `|n₊, n₋, atoms⟩` with index
//! `(n₊(c+1) + n₋)·2ᴺ + bits`, where bit `j` set means atom `j` is excited.
//! Density matrices are vectorised column by column, so that
//! `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.

use std::collections::BTreeMap;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AtomChain, SystemParams};

pub const DEFAULT_CAP: usize = 64;
pub const MAX_ATOMS: usize = 3;
/// Relative change tolerated when the Fock cutoff is raised by one.
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Expectations smaller than this are compared in absolute terms. The
/// sparse solve pins ρ down to roughly 1e−15 absolute, so relative changes
/// of smaller observables are rounding noise.
const TRUNCATION_FLOOR: f64 = 1e-8;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TruncatedHilbert {
    pub n_atoms: usize,
    pub fock_cutoff: usize,
    pub cap: usize,
}

impl TruncatedHilbert {
    pub fn new(n_atoms: usize, fock_cutoff: usize) -> Result<Self> {
        Self::with_cap(n_atoms, fock_cutoff, DEFAULT_CAP)
    }

    pub fn with_cap(n_atoms: usize, fock_cutoff: usize, cap: usize) -> Result<Self> {
        if n_atoms > MAX_ATOMS {
            return Err(Error::invalid(
                "n_atoms",
                format!("the exact solver handles at most {MAX_ATOMS} atoms, got {n_atoms}"),
            ));
        }
        let h = Self {
            n_atoms,
            fock_cutoff,
            cap,
        };
        let dimension = h.dimension();
        if dimension > cap {
            return Err(Error::CapExceeded { dimension, cap });
        }
        Ok(h)
    }

    pub fn dimension(&self) -> usize {
        (self.fock_cutoff + 1).pow(2) << self.n_atoms
    }

    fn fock_levels(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn index(&self, n_plus: usize, n_minus: usize, atoms: usize) -> usize {
        ((n_plus * self.fock_levels() + n_minus) << self.n_atoms) + atoms
    }

    fn decode(&self, i: usize) -> (usize, usize, usize) {
        let atoms = i & ((1 << self.n_atoms) - 1);
        let fock = i >> self.n_atoms;
        (fock / self.fock_levels(), fock % self.fock_levels(), atoms)
    }

    fn operator<F: Fn(usize, usize, usize) -> Option<(usize, usize, usize, C)>>(&self, f: F) -> DMatrix<C> {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, d);
        for col in 0..d {
            let (p, q, a) = self.decode(col);
            if let Some((p2, q2, a2, v)) = f(p, q, a) {
                m[(self.index(p2, q2, a2), col)] += v;
            }
        }
        m
    }

    /// Annihilation operator of the forward mode.
    pub fn a_plus(&self) -> DMatrix<C> {
        self.operator(|p, q, a| (p > 0).then(|| (p - 1, q, a, c((p as f64).sqrt()))))
    }

    pub fn a_minus(&self) -> DMatrix<C> {
        self.operator(|p, q, a| (q > 0).then(|| (p, q - 1, a, c((q as f64).sqrt()))))
    }

    /// Lowering operator `|g⟩⟨e|` of atom `j`.
    pub fn sigma_minus(&self, j: usize) -> DMatrix<C> {
        assert!(j < self.n_atoms, "atom index out of range");
        let bit = 1 << j;
        self.operator(|p, q, a| (a & bit != 0).then(|| (p, q, a & !bit, c(1.0))))
    }

    pub fn sigma_z(&self, j: usize) -> DMatrix<C> {
        assert!(j < self.n_atoms, "atom index out of range");
        let bit = 1 << j;
        self.operator(|p, q, a| Some((p, q, a, c(if a & bit != 0 { 1.0 } else { -1.0 }))))
    }

    pub fn vacuum(&self) -> DMatrix<C> {
        let d = self.dimension();
        let mut rho = DMatrix::zeros(d, d);
        rho[(0, 0)] = c(1.0);
        rho
    }
}

pub fn hamiltonian(params: &SystemParams, chain: &AtomChain, h: &TruncatedHilbert) -> DMatrix<C> {
    assert_eq!(chain.len(), h.n_atoms, "chain and Hilbert space disagree on N");
    let ap = h.a_plus();
    let am = h.a_minus();
    let mut ham = (ap.adjoint() * &ap + am.adjoint() * &am) * c(-params.delta);
    for (j, phase) in chain.travelling_phases().enumerate() {
        let sm = h.sigma_minus(j);
        let sp = sm.adjoint();
        ham -= &sp * &sm * c(params.atom_detuning());
        let coupling = &sp * (&ap * (params.g * phase) + &am * (params.g * phase.conj()));
        ham += &coupling + coupling.adjoint();
    }
    ham += (&ap + ap.adjoint()) * c(params.kappa_in.sqrt() * params.epsilon);
    ham
}

/// Jump operators with their rates folded in.
pub fn jump_operators(params: &SystemParams, h: &TruncatedHilbert) -> Vec<DMatrix<C>> {
    let kappa = c(params.kappa().sqrt());
    let gamma = c(params.gamma.sqrt());
    let mut jumps = vec![h.a_plus() * kappa, h.a_minus() * kappa];
    jumps.extend((0..h.n_atoms).map(|j| h.sigma_minus(j) * gamma));
    jumps
}

/// Sparse Liouvillian acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    pub hilbert: TruncatedHilbert,
    /// `(row, col, value)`, one entry per position, sorted by column.
    pub entries: Vec<(usize, usize, C)>,
}

impl Liouvillian {
    pub fn side(&self) -> usize {
        self.hilbert.dimension().pow(2)
    }

    pub fn to_dense(&self) -> DMatrix<C> {
        let n = self.side();
        let mut m = DMatrix::zeros(n, n);
        for &(r, col, v) in &self.entries {
            m[(r, col)] += v;
        }
        m
    }

    /// `dρ/dt` for the density matrix `rho`.
    pub fn apply(&self, rho: &DMatrix<C>) -> DMatrix<C> {
        let d = self.hilbert.dimension();
        let mut out = DMatrix::zeros(d, d);
        for &(r, col, v) in &self.entries {
            out[(r % d, r / d)] += v * rho[(col % d, col / d)];
        }
        out
    }
}

struct Accumulator(BTreeMap<(usize, usize), C>);

impl Accumulator {
    /// Adds `scale · (A ⊗ B)`.
    fn kron(&mut self, a: &DMatrix<C>, b: &DMatrix<C>, scale: C) {
        let d = b.nrows();
        let nonzero = |m: &DMatrix<C>| -> Vec<(usize, usize, C)> {
            let mut v = Vec::new();
            for j in 0..m.ncols() {
                for i in 0..m.nrows() {
                    if m[(i, j)] != c(0.0) {
                        v.push((i, j, m[(i, j)]));
                    }
                }
            }
            v
        };
        let nb = nonzero(b);
        for (ai, aj, av) in nonzero(a) {
            for &(bi, bj, bv) in &nb {
                *self.0.entry((aj * d + bj, ai * d + bi)).or_insert(c(0.0)) += scale * av * bv;
            }
        }
    }
}

pub fn build_liouvillian(params: &SystemParams, chain: &AtomChain, h: &TruncatedHilbert) -> Result<Liouvillian> {
    params.validate()?;
    if chain.len() != h.n_atoms {
        return Err(Error::invalid(
            "n_atoms",
            format!("chain has {} atoms, Hilbert space {}", chain.len(), h.n_atoms),
        ));
    }
    let d = h.dimension();
    let id = DMatrix::<C>::identity(d, d);
    let ham = hamiltonian(params, chain, h);
    let i = C::i();
    let mut acc = Accumulator(BTreeMap::new());
    acc.kron(&id, &ham, -i);
    acc.kron(&ham.transpose(), &id, i);
    for l in jump_operators(params, h) {
        let ldl = l.adjoint() * &l;
        acc.kron(&l.conjugate(), &l, c(1.0));
        acc.kron(&id, &ldl, c(-0.5));
        acc.kron(&ldl.transpose(), &id, c(-0.5));
    }
    // keys are (col, row) so the map iterates column-major
    let entries = acc
        .0
        .into_iter()
        .filter(|(_, v)| *v != c(0.0))
        .map(|((col, row), v)| (row, col, v))
        .collect();
    Ok(Liouvillian { hilbert: *h, entries })
}

/// Unique steady state: one equation of `Lρ = 0` is swapped for `tr ρ = 1`.
pub fn steady_state_dm(l: &Liouvillian, params: &SystemParams) -> Result<DMatrix<C>> {
    if !(params.kappa() > 0.0) || (l.hilbert.n_atoms > 0 && !(params.gamma > 0.0)) {
        return Err(Error::DegenerateNullSpace(
            "steady state is not unique without cavity and atomic decay".into(),
        ));
    }
    let d = l.hilbert.dimension();
    let n = l.side();
    let mut triplets: Vec<Triplet<usize, usize, C>> = l
        .entries
        .iter()
        .filter(|(r, _, _)| *r != 0)
        .map(|&(r, col, v)| Triplet::new(r, col, v))
        .collect();
    triplets.extend((0..d).map(|k| Triplet::new(0, k * d + k, c(1.0))));
    let matrix = SparseColMat::<usize, C>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let lu = matrix
        .sp_lu()
        .map_err(|e| Error::DegenerateNullSpace(format!("{e:?}")))?;
    let rhs = faer::Mat::<C>::from_fn(n, 1, |r, _| if r == 0 { c(1.0) } else { c(0.0) });
    let x = lu.solve(&rhs);
    if (0..n).any(|r| !x[(r, 0)].re.is_finite() || !x[(r, 0)].im.is_finite()) {
        return Err(Error::DegenerateNullSpace("singular steady-state system".into()));
    }

    let raw = DMatrix::from_fn(d, d, |r, col| x[(col * d + r, 0)]);
    let mut rho = (&raw + raw.adjoint()) * c(0.5);
    let trace = rho.trace();
    rho /= trace;
    let min_eigen = rho
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(*v));
    if min_eigen < -1e-10 {
        return Err(Error::LinearAlgebra(format!(
            "steady state not positive semidefinite (eigenvalue {min_eigen:e})"
        )));
    }
    Ok(rho)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Expectations {
    pub a_plus: C,
    pub a_minus: C,
    pub n_plus: f64,
    pub n_minus: f64,
    pub sigma_minus: Vec<C>,
    pub sigma_z: Vec<f64>,
}

impl Expectations {
    fn values(&self) -> Vec<C> {
        let mut v = vec![self.a_plus, self.a_minus, c(self.n_plus), c(self.n_minus)];
        v.extend(&self.sigma_minus);
        v.extend(self.sigma_z.iter().map(|z| c(*z)));
        v
    }

    /// Largest relative difference over all reported observables.
    pub fn max_relative_change(&self, other: &Self) -> f64 {
        self.values()
            .iter()
            .zip(other.values())
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(TRUNCATION_FLOOR))
            .fold(0.0, f64::max)
    }
}

pub fn expectations(rho: &DMatrix<C>, h: &TruncatedHilbert) -> Expectations {
    let ev = |op: &DMatrix<C>| (rho * op).trace();
    let ap = h.a_plus();
    let am = h.a_minus();
    Expectations {
        a_plus: ev(&ap),
        a_minus: ev(&am),
        n_plus: ev(&(ap.adjoint() * &ap)).re,
        n_minus: ev(&(am.adjoint() * &am)).re,
        sigma_minus: (0..h.n_atoms).map(|j| ev(&h.sigma_minus(j))).collect(),
        sigma_z: (0..h.n_atoms).map(|j| ev(&h.sigma_z(j)).re).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub expectations: Expectations,
    pub fock_cutoff: usize,
    /// Relative change of the observables when the cutoff is raised by one.
    pub truncation_change: f64,
}

pub fn solve_at_cutoff(params: &SystemParams, chain: &AtomChain, h: &TruncatedHilbert) -> Result<Expectations> {
    let l = build_liouvillian(params, chain, h)?;
    let rho = steady_state_dm(&l, params)?;
    Ok(expectations(&rho, h))
}

/// Steady-state observables, accepted only if raising the Fock cutoff by
/// one moves each of them by less than [`TRUNCATION_TOL`].
pub fn solve_oracle(params: &SystemParams, chain: &AtomChain, fock_cutoff: usize, cap: usize) -> Result<OracleResult> {
    let h = TruncatedHilbert::with_cap(chain.len(), fock_cutoff, cap)?;
    let finer = TruncatedHilbert::with_cap(chain.len(), fock_cutoff + 1, cap)?;
    let coarse = solve_at_cutoff(params, chain, &h)?;
    let fine = solve_at_cutoff(params, chain, &finer)?;
    let change = coarse.max_relative_change(&fine);
    if !(change < TRUNCATION_TOL) {
        return Err(Error::TruncationNotConverged {
            observable: "cavity and atomic expectations".into(),
            cutoff: fock_cutoff,
            change,
        });
    }
    Ok(OracleResult {
        expectations: coarse,
        fock_cutoff,
        truncation_change: change,
    })
}

/// Raises the Fock cutoff from `start` until the truncation check passes
/// or the Hilbert space would exceed `cap`.
pub fn solve_converged(params: &SystemParams, chain: &AtomChain, start: usize, cap: usize) -> Result<OracleResult> {
    let mut cutoff = start;
    loop {
        match solve_oracle(params, chain, cutoff, cap) {
            Err(Error::TruncationNotConverged { .. })
                if TruncatedHilbert::with_cap(chain.len(), cutoff + 2, cap).is_ok() =>
            {
                cutoff += 1
            }
            other => return other,
        }
    }
}
