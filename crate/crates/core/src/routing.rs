//! Input-output relations of the driven ring and the figures of merit of
//! the chain used as a tunable photon router.
//!
//! The input field enters the `+` port as `⟨a₊ⁱⁿ⟩ = −iε`. All photon numbers
//! are normalised to the input photon flux ε², and phases are measured
//! relative to the input.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{structure_factor, AtomChain, StructureFactor, SystemParams};
use crate::optimize::grid_refined_max;
use crate::weak_drive::fields_for_structure;

/// Below this fraction of ε an output amplitude has no meaningful phase.
pub const PHASE_FLOOR: f64 = 1e-14;

const LOSS_GRID: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputFields {
    pub a_out_plus: Complex64,
    pub a_out_minus: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoutingMetrics {
    pub n_out_plus: f64,
    pub n_out_minus: f64,
    pub n_out_tot: f64,
    /// `None` when the output amplitude vanishes.
    pub phi_plus: Option<f64>,
    pub phi_minus: Option<f64>,
    pub relative_phase: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouterFigures {
    pub n_loss: f64,
    pub tuning_range: f64,
    pub argmax_s_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossMaximum {
    pub n_loss: f64,
    pub argmax_s: f64,
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    let r = phi.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

pub fn output_fields(params: &SystemParams, chain: &AtomChain) -> Result<OutputFields> {
    output_fields_for_structure(params, chain.len(), structure_factor(chain))
}

pub fn output_fields_for_structure(
    params: &SystemParams,
    n_atoms: usize,
    s: StructureFactor,
) -> Result<OutputFields> {
    let f = fields_for_structure(params, n_atoms, s)?;
    let root = params.kappa_in.sqrt();
    Ok(OutputFields {
        a_out_plus: root * f.a_plus + Complex64::new(0.0, params.epsilon),
        a_out_minus: root * f.a_minus,
    })
}

pub fn routing_metrics(params: &SystemParams, chain: &AtomChain) -> Result<RoutingMetrics> {
    metrics_for_structure(params, chain.len(), structure_factor(chain))
}

pub fn metrics_for_structure(
    params: &SystemParams,
    n_atoms: usize,
    s: StructureFactor,
) -> Result<RoutingMetrics> {
    let f = fields_for_structure(params, n_atoms, s)?;
    metrics_from_intracavity(params, f.a_plus, f.a_minus)
}

/// Output metrics for arbitrary intracavity amplitudes, e.g. from the
/// mean-field or density-matrix solvers.
pub fn metrics_from_intracavity(params: &SystemParams, a_plus: Complex64, a_minus: Complex64) -> Result<RoutingMetrics> {
    if !(params.epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "routing metrics need a nonzero drive"));
    }
    let eps = params.epsilon;
    let root = params.kappa_in.sqrt();
    let out = OutputFields {
        a_out_plus: root * a_plus + Complex64::new(0.0, eps),
        a_out_minus: root * a_minus,
    };
    let n_out_plus = out.a_out_plus.norm_sqr() / (eps * eps);
    let n_out_minus = out.a_out_minus.norm_sqr() / (eps * eps);
    let phase = |a: Complex64| (a.norm() >= PHASE_FLOOR * eps).then(|| wrap_phase(a.arg() + PI / 2.0));
    let phi_plus = phase(out.a_out_plus);
    let phi_minus = phase(out.a_out_minus);
    Ok(RoutingMetrics {
        n_out_plus,
        n_out_minus,
        n_out_tot: n_out_plus + n_out_minus,
        phi_plus,
        phi_minus,
        relative_phase: phi_plus.zip(phi_minus).map(|(p, m)| wrap_phase(p - m)),
    })
}

/// Photon loss `1 − n_tot^out` for a chain of `n_atoms` atoms with real
/// structure factor `s`; the loss does not depend on arg S.
pub fn photon_loss(params: &SystemParams, n_atoms: usize, s: f64) -> Result<f64> {
    let m = metrics_for_structure(params, n_atoms, StructureFactor::from_polar(s, 0.0))?;
    Ok(1.0 - m.n_out_tot)
}

/// Maximum photon loss over `|S| ∈ [0, N]` at arbitrary `(δ, Δ)`.
pub fn max_photon_loss(params: &SystemParams, n_atoms: usize) -> Result<LossMaximum> {
    params.validate()?;
    let probe = SystemParams {
        epsilon: 1.0,
        ..*params
    };
    // surfaces degenerate denominators before the search swallows them
    photon_loss(&probe, n_atoms, 0.0)?;
    photon_loss(&probe, n_atoms, n_atoms as f64)?;
    let loss = |s: f64| photon_loss(&probe, n_atoms, s).unwrap_or(f64::NEG_INFINITY);
    let (argmax_s, n_loss) = if n_atoms == 0 {
        (0.0, loss(0.0))
    } else {
        grid_refined_max(loss, 0.0, n_atoms as f64, LOSS_GRID, 1e-13)
    };
    Ok(LossMaximum { n_loss, argmax_s })
}

/// Maximum photon loss at the router operating point δ = 0.
pub fn max_photon_loss_numeric(params: &SystemParams, n_atoms: usize) -> Result<LossMaximum> {
    if params.delta != 0.0 {
        return Err(Error::invalid("delta", "the router operates at δ = 0"));
    }
    max_photon_loss(params, n_atoms)
}

/// Boundary between the two analytic branches of the maximum loss,
/// `β = (NC+1)√((NC−2)/(3NC+2))`; only meaningful for NC > 2.
pub fn loss_branch_boundary(nc: f64) -> f64 {
    (nc + 1.0) * ((nc - 2.0) / (3.0 * nc + 2.0)).sqrt()
}

/// Closed-form maximum photon loss at δ = 0 and κ_in = κ, as a function
/// of the collective cooperativity and Δ/γ.
pub fn max_photon_loss_analytic(nc: f64, delta_over_gamma: f64) -> f64 {
    let x = nc + 1.0;
    let d2 = delta_over_gamma * delta_over_gamma;
    if nc > 2.0 && 2.0 * delta_over_gamma.abs() < loss_branch_boundary(nc) {
        interior_loss(x, d2)
    } else {
        4.0 * nc / (x * x + 4.0 * d2)
    }
}

/// Loss maximum attained in the interior `0 < |S| < N`. Written without the
/// `1/(4Δ²)` cancellation so that it stays accurate as Δ → 0.
fn interior_loss(x: f64, d2: f64) -> f64 {
    let root = ((1.0 + 4.0 * d2) * (x * x + 4.0 * d2)).sqrt();
    1.0 / x + (1.0 + x * x + 4.0 * d2) / (x * (root + x))
}

/// Limit of the maximum loss for NC → ∞.
pub fn large_nc_loss(delta_over_gamma: f64) -> f64 {
    let u = 4.0 * delta_over_gamma * delta_over_gamma;
    if u == 0.0 {
        0.5
    } else {
        ((1.0 + u).sqrt() - 1.0) / u
    }
}

/// Detuning at which the NC → ∞ loss equals `target_loss`; approximately
/// `1/(2·target_loss)` for small targets.
pub fn asymptotic_min_detuning(target_loss: f64) -> Result<f64> {
    if !(target_loss > 0.0 && target_loss < 0.5) {
        return Err(Error::invalid("target_loss", "must lie in (0, 1/2)"));
    }
    Ok((1.0 - 2.0 * target_loss).sqrt() / (2.0 * target_loss))
}

/// Tuning range `𝒲 = 4N²C²/((2NC+1)² + 4Δ²/γ²)` for κ_in = κ.
pub fn tuning_range(nc: f64, delta_over_gamma: f64) -> f64 {
    let d2 = delta_over_gamma * delta_over_gamma;
    4.0 * nc * nc / ((2.0 * nc + 1.0).powi(2) + 4.0 * d2)
}

/// Tuning range from the output fields, `n₋^out` at `|S| = N` and δ = 0.
/// Also valid for κ_in < κ.
pub fn tuning_range_numeric(params: &SystemParams, n_atoms: usize) -> Result<f64> {
    let p = SystemParams {
        delta: 0.0,
        epsilon: 1.0,
        ..*params
    };
    let m = metrics_for_structure(&p, n_atoms, StructureFactor::from_polar(n_atoms as f64, 0.0))?;
    Ok(m.n_out_minus)
}

pub fn router_figures(params: &SystemParams, n_atoms: usize) -> Result<RouterFigures> {
    let loss = max_photon_loss_numeric(params, n_atoms)?;
    Ok(RouterFigures {
        n_loss: loss.n_loss,
        tuning_range: tuning_range_numeric(params, n_atoms)?,
        argmax_s_loss: loss.argmax_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetuningWindow {
    pub nc: f64,
    pub delta_min: f64,
    pub delta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibleRegion {
    pub min_nc: f64,
    /// Admissible |Δ|/γ at the minimal NC (the window closes to a point).
    pub window_at_min: DetuningWindow,
    /// Admissible detuning windows on the log-spaced NC grid.
    pub boundary: Vec<DetuningWindow>,
}

pub const FEASIBLE_NC_RANGE: (f64, f64) = (0.1, 1e7);
const FEASIBLE_GRID: usize = 200;

/// Window of |Δ|/γ where `𝒲 ≥ target_w` and the maximum loss stays below
/// `target_loss`. Both figures decrease with |Δ|, so the window is an
/// interval bounded above by the tuning range and below by the loss.
pub fn detuning_window(nc: f64, target_w: f64, target_loss: f64) -> Option<DetuningWindow> {
    let slack = 4.0 * nc * nc / target_w - (2.0 * nc + 1.0).powi(2);
    if slack < 0.0 {
        return None;
    }
    let delta_max = 0.5 * slack.sqrt();
    if max_photon_loss_analytic(nc, delta_max) > target_loss {
        return None;
    }
    let delta_min = if max_photon_loss_analytic(nc, 0.0) <= target_loss {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0, delta_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if max_photon_loss_analytic(nc, mid) > target_loss {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        hi
    };
    Some(DetuningWindow {
        nc,
        delta_min,
        delta_max,
    })
}

/// Smallest collective cooperativity for which a detuning meets both
/// targets, together with the windows along a log NC grid.
pub fn feasible_region(target_w: f64, target_loss: f64) -> Result<FeasibleRegion> {
    if !(target_w > 0.0 && target_w < 1.0) {
        return Err(Error::invalid("target_w", "must lie in (0, 1)"));
    }
    if !(target_loss > 0.0 && target_loss < 1.0) {
        return Err(Error::invalid("target_loss", "must lie in (0, 1)"));
    }
    let (lo, hi) = FEASIBLE_NC_RANGE;
    let ratio = (hi / lo).ln() / (FEASIBLE_GRID - 1) as f64;
    let grid: Vec<f64> = (0..FEASIBLE_GRID).map(|i| lo * (ratio * i as f64).exp()).collect();
    let windows: Vec<Option<DetuningWindow>> = grid
        .par_iter()
        .map(|&nc| detuning_window(nc, target_w, target_loss))
        .collect();
    let first = windows.iter().position(Option::is_some).ok_or_else(|| {
        Error::Infeasible(format!(
            "no NC in [{lo}, {hi}] reaches W >= {target_w} with loss <= {target_loss}"
        ))
    })?;

    let (mut below, mut above) = if first == 0 { (0.0, grid[0]) } else { (grid[first - 1], grid[first]) };
    while above - below > 1e-7 * above {
        let mid = 0.5 * (below + above);
        if detuning_window(mid, target_w, target_loss).is_some() {
            above = mid;
        } else {
            below = mid;
        }
    }
    let window_at_min = detuning_window(above, target_w, target_loss).expect("bisection keeps a feasible end");
    Ok(FeasibleRegion {
        min_nc: above,
        window_at_min,
        boundary: windows.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MirrorRatioPoint {
    pub ratio: f64,
    pub tuning_range: f64,
    pub n_loss: f64,
}

/// Router figures as the input-mirror share κ_in/κ varies at fixed total κ.
pub fn mirror_ratio_scan(params: &SystemParams, n_atoms: usize, ratios: &[f64]) -> Result<Vec<MirrorRatioPoint>> {
    ratios
        .par_iter()
        .map(|&ratio| {
            if !(0.0..=1.0).contains(&ratio) {
                return Err(Error::invalid("kappa_in_ratio", format!("{ratio} outside [0, 1]")));
            }
            let p = params.with_kappa_in_ratio(ratio).with_delta(0.0);
            let fig = router_figures(&p, n_atoms)?;
            Ok(MirrorRatioPoint {
                ratio,
                tuning_range: fig.tuning_range,
                n_loss: fig.n_loss,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn router(nc: f64, n: usize, delta_ac: f64) -> SystemParams {
        SystemParams::new(0.0, 0.1, 0.0, delta_ac).with_collective_cooperativity(nc, n)
    }

    #[test]
    fn phase_wrapping() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_phase(0.25), 0.25);
    }

    #[test]
    fn empty_ring_transmits_everything() {
        let p = SystemParams::default().with_g(0.0);
        let m = routing_metrics(&p, &AtomChain::default()).unwrap();
        assert!((m.n_out_plus - 1.0).abs() < 1e-12);
        assert_eq!(m.n_out_minus, 0.0);
        assert!(m.phi_minus.is_none() && m.relative_phase.is_none());
    }

    #[test]
    fn ordered_chain_routes_backward() {
        let p = SystemParams::default();
        let m = metrics_for_structure(&p, 10, StructureFactor::from_polar(10.0, 0.0)).unwrap();
        assert!((m.n_out_minus - 40000.0 / 40801.0).abs() < 1e-12, "{}", m.n_out_minus);
        assert!((m.n_out_plus - 0.009_828_190_486).abs() < 1e-11, "{}", m.n_out_plus);
        let m = metrics_for_structure(&p, 10, StructureFactor::from_polar(0.0, 0.0)).unwrap();
        assert_eq!(m.n_out_minus, 0.0);
        assert!(m.n_out_plus > 0.95);
        assert!(m.phi_minus.is_none());
    }

    #[test]
    fn analytic_loss_reference_value() {
        assert!((loss_branch_boundary(100.0) - 57.534_844_035).abs() < 1e-8);
        let expected = 1.0 / 101.0 + (401.0f64 * 10601.0).sqrt() / (4.0 * 101.0 * 100.0) - 1.0 / 400.0;
        assert!((max_photon_loss_analytic(100.0, 10.0) - expected).abs() < 1e-14);
        assert!((expected - 0.058_435_534_076).abs() < 1e-11);
    }

    #[test]
    fn analytic_loss_small_nc_branch() {
        for d in [0.0, 0.5, 3.0] {
            assert_eq!(max_photon_loss_analytic(1.0, d), 4.0 / (4.0 + 4.0 * d * d));
        }
    }

    #[test]
    fn branches_meet_at_boundary() {
        for nc in [2.5, 10.0, 100.0, 1e4] {
            let d = 0.5 * loss_branch_boundary(nc);
            let x = nc + 1.0;
            let inner = interior_loss(x, d * d);
            let outer = 4.0 * nc / (x * x + 4.0 * d * d);
            assert!((inner - outer).abs() < 1e-9 * outer, "nc = {nc}");
        }
    }

    #[test]
    fn numeric_loss_matches_closed_form() {
        let p = router(100.0, 10, 10.0);
        let loss = max_photon_loss_numeric(&p, 10).unwrap();
        assert!((loss.n_loss - max_photon_loss_analytic(100.0, 10.0)).abs() < 1e-6 * loss.n_loss);
        assert!(loss.argmax_s > 0.0 && loss.argmax_s < 10.0);
    }

    #[test]
    fn numeric_loss_requires_router_point() {
        let p = router(10.0, 4, 3.0).with_delta(0.1);
        assert!(max_photon_loss_numeric(&p, 4).is_err());
        assert!(max_photon_loss(&p, 4).is_ok());
    }

    #[test]
    fn tuning_range_limits() {
        assert!((tuning_range(100.0, 10.0) - 40000.0 / 40801.0).abs() < 1e-15);
        assert_eq!(tuning_range(0.0, 5.0), 0.0);
        assert!(tuning_range(1e9, 10.0) > 1.0 - 1e-8);
        let p = router(100.0, 10, 10.0);
        assert!((tuning_range_numeric(&p, 10).unwrap() - tuning_range(100.0, 10.0)).abs() < 1e-12);
    }

    #[test]
    fn large_nc_limit() {
        for d in [1.0, 10.0, 50.0] {
            let far = max_photon_loss_analytic(1e12, d);
            assert!((far - large_nc_loss(d)).abs() < 1e-9);
        }
        assert!((asymptotic_min_detuning(0.01).unwrap() - 0.98f64.sqrt() / 0.02).abs() < 1e-12);
        assert!(asymptotic_min_detuning(0.6).is_err());
    }

    #[test]
    fn feasible_region_reference() {
        let r = feasible_region(0.9, 0.01).unwrap();
        assert!((r.min_nc - 278.31).abs() < 0.01, "min NC = {}", r.min_nc);
        assert!((r.window_at_min.delta_max - 91.26).abs() < 0.01);
        assert!((r.window_at_min.delta_min - r.window_at_min.delta_max).abs() < 1e-3 * r.window_at_min.delta_max);
        let relaxed = feasible_region(0.8, 0.02).unwrap();
        assert!(relaxed.min_nc < r.min_nc);
        for w in &r.boundary {
            assert!(w.nc >= r.min_nc && w.delta_min <= w.delta_max);
        }
    }

    #[test]
    fn feasible_region_errors() {
        assert!(feasible_region(1.0, 0.01).is_err());
        assert!(feasible_region(0.9, 0.0).is_err());
        // 𝒲 → 1 needs unbounded NC, loss must still stay tiny
        assert!(matches!(feasible_region(1.0 - 1e-12, 1e-9), Err(Error::Infeasible(_))));
    }

    #[test]
    fn mirror_ratio_extremes() {
        let p = router(100.0, 10, 10.0);
        let scan = mirror_ratio_scan(&p, 10, &[0.0, 0.5, 1.0]).unwrap();
        assert!(scan[0].n_loss.abs() < 1e-12);
        assert!((scan[2].tuning_range - tuning_range(100.0, 10.0)).abs() < 1e-12);
        assert!(scan[0].tuning_range < scan[1].tuning_range && scan[1].tuning_range < scan[2].tuning_range);
        assert!(mirror_ratio_scan(&p, 10, &[1.5]).is_err());
    }
}
