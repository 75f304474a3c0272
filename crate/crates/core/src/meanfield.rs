//! Nonlinear mean-field dynamics of the two cavity fields and N atoms.
//!
//! Operator products are factorised at first order,
//! `⟨σᶻᵢ a_ν⟩ → ⟨σᶻᵢ⟩⟨a_ν⟩` and `⟨σ⁺ᵢ a_ν⟩ → ⟨σ⁺ᵢ⟩⟨a_ν⟩`, which keeps the
//! state at 4 + 3N real numbers and retains saturation of the atoms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AtomChain, SystemParams};
use crate::ode::DormandPrince;

/// Slack allowed on the Bloch-sphere bounds.
pub const BLOCH_TOL: f64 = 1e-9;

const NEWTON_HANDOFF: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    pub sigma_minus: Vec<Complex64>,
    pub sigma_z: Vec<f64>,
}

impl MeanFieldState {
    /// Empty cavity, every atom in its ground state.
    pub fn vacuum(n_atoms: usize) -> Self {
        Self {
            a_plus: Complex64::new(0.0, 0.0),
            a_minus: Complex64::new(0.0, 0.0),
            sigma_minus: vec![Complex64::new(0.0, 0.0); n_atoms],
            sigma_z: vec![-1.0; n_atoms],
        }
    }

    pub fn n_atoms(&self) -> usize {
        self.sigma_z.len()
    }

    /// Layout: `[Re a₊, Im a₊, Re a₋, Im a₋, (Re σᵢ, Im σᵢ)…, σᶻᵢ…]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let n = self.n_atoms();
        let mut v = Vec::with_capacity(4 + 3 * n);
        v.extend([self.a_plus.re, self.a_plus.im, self.a_minus.re, self.a_minus.im]);
        for s in &self.sigma_minus {
            v.extend([s.re, s.im]);
        }
        v.extend_from_slice(&self.sigma_z);
        v
    }

    pub fn from_slice(v: &[f64], n_atoms: usize) -> Self {
        assert_eq!(v.len(), 4 + 3 * n_atoms, "state vector length");
        Self {
            a_plus: Complex64::new(v[0], v[1]),
            a_minus: Complex64::new(v[2], v[3]),
            sigma_minus: (0..n_atoms)
                .map(|i| Complex64::new(v[4 + 2 * i], v[5 + 2 * i]))
                .collect(),
            sigma_z: v[4 + 2 * n_atoms..].to_vec(),
        }
    }

    /// Photons plus atomic excitations, `Σ(1+σᶻ)/2 + |a₊|² + |a₋|²`.
    pub fn total_excitation(&self) -> f64 {
        let atoms: f64 = self.sigma_z.iter().map(|z| 0.5 * (1.0 + z)).sum();
        atoms + self.a_plus.norm_sqr() + self.a_minus.norm_sqr()
    }

    /// Largest violation of `|σᶻ| ≤ 1` and `|σ⁻|² ≤ (1 − σᶻ²)/4`, with the
    /// offending atom.
    pub fn bloch_excess(&self) -> Option<(usize, f64)> {
        self.sigma_z
            .iter()
            .zip(&self.sigma_minus)
            .enumerate()
            .map(|(i, (z, s))| {
                let range = z.abs() - 1.0;
                let sphere = s.norm_sqr() - 0.25 * (1.0 - z * z);
                (i, range.max(sphere))
            })
            .filter(|&(_, e)| e > BLOCH_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Per-atom couplings `g e^{+ikxᵢ}` (to `a₊`) and `g e^{−ikxᵢ}` (to `a₋`).
fn couplings(params: &SystemParams, chain: &AtomChain) -> Vec<(Complex64, Complex64)> {
    chain
        .travelling_phases()
        .map(|p| (params.g * p, params.g * p.conj()))
        .collect()
}

struct Flow {
    delta: f64,
    atom_detuning: f64,
    half_kappa: f64,
    gamma: f64,
    drive: f64,
    couplings: Vec<(Complex64, Complex64)>,
}

impl Flow {
    fn new(params: &SystemParams, chain: &AtomChain) -> Self {
        Self {
            delta: params.delta,
            atom_detuning: params.atom_detuning(),
            half_kappa: 0.5 * params.kappa(),
            gamma: params.gamma,
            drive: params.kappa_in.sqrt() * params.epsilon,
            couplings: couplings(params, chain),
        }
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.couplings.len();
        let i = Complex64::i();
        let a_plus = Complex64::new(y[0], y[1]);
        let a_minus = Complex64::new(y[2], y[3]);
        let cavity = Complex64::new(-self.half_kappa, self.delta);
        let atom = Complex64::new(-0.5 * self.gamma, self.atom_detuning);

        let mut d_plus = cavity * a_plus - i * self.drive;
        let mut d_minus = cavity * a_minus;
        for (k, &(gp, gm)) in self.couplings.iter().enumerate() {
            let sigma = Complex64::new(y[4 + 2 * k], y[5 + 2 * k]);
            let z = y[4 + 2 * n + k];
            d_plus -= i * gp.conj() * sigma;
            d_minus -= i * gm.conj() * sigma;
            let rabi = gp * a_plus + gm * a_minus;
            let d_sigma = atom * sigma + i * z * rabi;
            dy[4 + 2 * k] = d_sigma.re;
            dy[5 + 2 * k] = d_sigma.im;
            dy[4 + 2 * n + k] = -self.gamma * (1.0 + z) + 4.0 * (sigma.conj() * rabi).im;
        }
        dy[0] = d_plus.re;
        dy[1] = d_plus.im;
        dy[2] = d_minus.re;
        dy[3] = d_minus.im;
    }
}

/// Time derivative of the mean-field state.
pub fn rhs(state: &MeanFieldState, params: &SystemParams, chain: &AtomChain) -> MeanFieldState {
    assert_eq!(state.n_atoms(), chain.len(), "state and chain sizes differ");
    let y = state.to_vec();
    let mut dy = vec![0.0; y.len()];
    Flow::new(params, chain).eval(&y, &mut dy);
    MeanFieldState::from_slice(&dy, chain.len())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
}

impl Trajectory {
    pub fn last(&self) -> &MeanFieldState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

/// Integrates from `initial` to `t_end`, recording the initial state and
/// every accepted step. Fails if the Bloch-sphere bounds are left.
pub fn integrate(
    initial: &MeanFieldState,
    params: &SystemParams,
    chain: &AtomChain,
    t_end: f64,
    tolerance: f64,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::invalid("t_end", "must be positive"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::invalid("tolerance", "must be positive"));
    }
    let n = chain.len();
    let flow = Flow::new(params, chain);
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![initial.clone()],
    };
    DormandPrince::new(tolerance).integrate(
        |_, y, dy| flow.eval(y, dy),
        0.0,
        &initial.to_vec(),
        t_end,
        |t, y| {
            let state = MeanFieldState::from_slice(y, n);
            if let Some((atom, excess)) = state.bloch_excess() {
                return Err(Error::BlochViolation {
                    atom,
                    time: t,
                    excess,
                });
            }
            traj.times.push(t);
            traj.states.push(state);
            Ok(())
        },
    )?;
    Ok(traj)
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyStateOptions {
    /// Integration stops once `‖ẏ‖ < tolerance · max(ε, γ)`.
    pub tolerance: f64,
    /// Local error tolerance of the integrator.
    pub integrator_tolerance: f64,
    /// Give up (limit cycle, near-degenerate dynamics) after this time.
    pub max_time: f64,
    /// Newton iterations used to polish the converged state.
    pub newton_iterations: usize,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            integrator_tolerance: 1e-10,
            max_time: 1e5,
            newton_iterations: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyState {
    pub state: MeanFieldState,
    /// `‖ẏ‖` at the returned state.
    pub residual: f64,
    /// Integration time needed to meet the tolerance.
    pub time: f64,
}

pub fn find_steady_state(
    params: &SystemParams,
    chain: &AtomChain,
    options: &SteadyStateOptions,
) -> Result<SteadyState> {
    params.validate()?;
    if params.kappa() <= 0.0 && params.gamma <= 0.0 {
        return Err(Error::invalid("gamma", "steady state needs κ > 0 or γ > 0"));
    }
    let n = chain.len();
    let flow = Flow::new(params, chain);
    let scale = params.epsilon.max(params.gamma);
    let target = options.tolerance * scale;
    let slowest = [params.kappa(), params.gamma]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    let chunk = 10.0 / slowest;

    let mut y = MeanFieldState::vacuum(n).to_vec();
    let mut dy = vec![0.0; y.len()];
    let mut t = 0.0;
    let integrator = DormandPrince::new(options.integrator_tolerance);
    loop {
        flow.eval(&y, &mut dy);
        let residual = norm(&dy);
        if residual < target {
            break;
        }
        // Close to a fixed point the integrator's own error floor stalls the
        // residual; Newton takes over from there.
        if residual < NEWTON_HANDOFF * scale {
            let (polished, r) = newton_polish(&flow, y.clone(), options.newton_iterations);
            if r < target {
                y = polished;
                break;
            }
        }
        if t >= options.max_time {
            return Err(Error::NotConverged { time: t, residual });
        }
        let step = chunk.min(options.max_time - t);
        y = integrator.integrate(
            |_, y, dy| flow.eval(y, dy),
            t,
            &y,
            t + step,
            |time, y| match MeanFieldState::from_slice(y, n).bloch_excess() {
                Some((atom, excess)) => Err(Error::BlochViolation { atom, time, excess }),
                None => Ok(()),
            },
        )?;
        t += step;
    }

    let (y, residual) = newton_polish(&flow, y, options.newton_iterations);
    Ok(SteadyState {
        state: MeanFieldState::from_slice(&y, n),
        residual,
        time: t,
    })
}

/// Newton iterations on `ẏ = 0` with a central-difference Jacobian. The
/// flow is at most quadratic in the state, so central differences are exact
/// up to rounding.
fn newton_polish(flow: &Flow, mut y: Vec<f64>, iterations: usize) -> (Vec<f64>, f64) {
    let dim = y.len();
    let mut f = vec![0.0; dim];
    flow.eval(&y, &mut f);
    let mut residual = norm(&f);
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);

    let mut plus = vec![0.0; dim];
    let mut minus = vec![0.0; dim];
    for _ in 0..iterations {
        if residual == 0.0 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for col in 0..dim {
            let h = 1e-4 * scale.max(y[col].abs());
            let mut probe = y.clone();
            probe[col] = y[col] + h;
            flow.eval(&probe, &mut plus);
            probe[col] = y[col] - h;
            flow.eval(&probe, &mut minus);
            for row in 0..dim {
                jac[(row, col)] = (plus[row] - minus[row]) / (2.0 * h);
            }
        }
        let Some(step) = jac.lu().solve(&DVector::from_column_slice(&f)) else {
            break;
        };
        let candidate: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a - b).collect();
        let mut g = vec![0.0; dim];
        flow.eval(&candidate, &mut g);
        let next = norm(&g);
        if !(next < residual) {
            break;
        }
        y = candidate;
        f = g;
        residual = next;
    }
    (y, residual)
}
