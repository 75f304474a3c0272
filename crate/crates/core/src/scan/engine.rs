use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::disorder::{mean_structure_factor, DisorderSpec};
use crate::error::{Error, Result};
use crate::meanfield::{find_steady_state, SteadyStateOptions};
use crate::model::{chain_with_structure_phase, structure_factor, translate_chain, AtomChain, StructureFactor, SystemParams};
use crate::modes::spectrum_for_couplings;
use crate::oracle::{solve_converged, DEFAULT_CAP};
use crate::routing::{max_photon_loss, metrics_from_intracavity, tuning_range_numeric, RoutingMetrics};
use crate::weak_drive::fields_for_structure;

use super::config::{AxisName, Engine, Hold, Quantity, ScanConfig};
use super::table::{Cell, ScanRow, ScanTable};

/// Everything needed to evaluate one grid point.
#[derive(Debug, Clone)]
struct Point {
    params: SystemParams,
    n_atoms: usize,
    structure: StructureFactor,
    chain: Option<AtomChain>,
    sigma: f64,
}

fn build_point(config: &ScanConfig, coords: &[f64]) -> Result<Point> {
    let fixed = &config.fixed;
    let mut params = fixed.params;
    let mut n_atoms = fixed.chain.n_atoms;
    let mut s_magnitude = None;
    let mut arg_s = fixed.chain.arg_s;
    let mut sigma = fixed.disorder.sigma;
    let mut nc = None;
    let mut ratio = None;
    for (axis, &v) in config.axes().iter().zip(coords) {
        match axis.name {
            AxisName::Delta => {
                params.delta = v;
                if config.hold == Hold::AtomDetuning {
                    params.delta_ac = fixed.params.delta + fixed.params.delta_ac - v;
                }
            }
            AxisName::DeltaAc => params.delta_ac = v,
            AxisName::SMagnitude => s_magnitude = Some(v),
            AxisName::Nc => nc = Some(v),
            AxisName::KappaInRatio => ratio = Some(v),
            AxisName::Sigma => sigma = v,
            AxisName::ArgS => arg_s = v,
            AxisName::NAtoms => n_atoms = v as usize,
        }
    }

    let (chain, structure) = match &fixed.chain.positions {
        Some(p) => {
            let chain = AtomChain::new(p.clone());
            n_atoms = chain.len();
            let s = structure_factor(&chain);
            (Some(chain), s)
        }
        None => {
            let s = s_magnitude.unwrap_or(fixed.chain.s_ratio * n_atoms as f64);
            if s > n_atoms as f64 {
                return Err(Error::invalid("s_magnitude", format!("{s} exceeds N = {n_atoms}")));
            }
            (None, StructureFactor::from_polar(s, arg_s))
        }
    };
    if let Some(r) = ratio {
        params = params.with_kappa_in_ratio(r);
    }
    if let Some(nc) = nc {
        params = params.with_collective_cooperativity(nc, n_atoms);
    }
    Ok(Point {
        params,
        n_atoms,
        structure,
        chain,
        sigma,
    })
}

/// A chain realising the point's structure factor, for solvers that need
/// positions.
fn realise_chain(point: &Point) -> Result<AtomChain> {
    if let Some(c) = &point.chain {
        return Ok(c.clone());
    }
    let n = point.n_atoms;
    let s = point.structure;
    if (s.magnitude() - n as f64).abs() <= 1e-12 * n as f64 {
        // λ/2 lattice works for any N
        return Ok(translate_chain(&AtomChain::uniform(n, 0.5), s.phase() / (4.0 * PI)));
    }
    chain_with_structure_phase(n, s.magnitude(), s.phase())
}

/// Cavity amplitudes and photon numbers (normalised to 4ε²/κ).
struct Cavity {
    a_plus: Complex64,
    a_minus: Complex64,
    n_plus: f64,
    n_minus: f64,
}

fn cavity_state(point: &Point, engine: Engine) -> Result<Cavity> {
    let p = &point.params;
    if !(p.epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "photon numbers need a nonzero drive"));
    }
    let scale = p.kappa() / (4.0 * p.epsilon * p.epsilon);
    let coherent = |a_plus: Complex64, a_minus: Complex64| Cavity {
        a_plus,
        a_minus,
        n_plus: scale * a_plus.norm_sqr(),
        n_minus: scale * a_minus.norm_sqr(),
    };
    match engine {
        Engine::Analytic => {
            let f = fields_for_structure(p, point.n_atoms, point.structure)?;
            Ok(coherent(f.a_plus, f.a_minus))
        }
        Engine::Meanfield => {
            let chain = realise_chain(point)?;
            let s = find_steady_state(p, &chain, &SteadyStateOptions::default())?.state;
            Ok(coherent(s.a_plus, s.a_minus))
        }
        Engine::Oracle => {
            let chain = realise_chain(point)?;
            let e = solve_converged(p, &chain, 2, DEFAULT_CAP)?.expectations;
            Ok(Cavity {
                a_plus: e.a_plus,
                a_minus: e.a_minus,
                n_plus: scale * e.n_plus,
                n_minus: scale * e.n_minus,
            })
        }
    }
}

fn evaluate(config: &ScanConfig, coords: &[f64]) -> Result<Vec<Cell>> {
    let point = build_point(config, coords)?;
    let p = &point.params;
    let needs_cavity = config.quantity.iter().any(|q| {
        !matches!(q, Quantity::Eigenvalues | Quantity::W | Quantity::NLoss | Quantity::MeanS)
    });
    let (cavity, metrics): (Option<Cavity>, Option<RoutingMetrics>) = if needs_cavity {
        let c = cavity_state(&point, config.engine)?;
        let m = metrics_from_intracavity(p, c.a_plus, c.a_minus)?;
        (Some(c), Some(m))
    } else {
        (None, None)
    };

    let mut cells = Vec::new();
    for q in &config.quantity {
        let c = cavity.as_ref();
        let m = metrics.as_ref();
        match q {
            Quantity::NPlus => cells.push(Cell::Value(c.unwrap().n_plus)),
            Quantity::NMinus => cells.push(Cell::Value(c.unwrap().n_minus)),
            Quantity::NTot => cells.push(Cell::Value(c.unwrap().n_plus + c.unwrap().n_minus)),
            Quantity::NOutPlus => cells.push(Cell::Value(m.unwrap().n_out_plus)),
            Quantity::NOutMinus => cells.push(Cell::Value(m.unwrap().n_out_minus)),
            Quantity::NOutTot => cells.push(Cell::Value(m.unwrap().n_out_tot)),
            Quantity::PhiPlus => cells.push(m.unwrap().phi_plus.into()),
            Quantity::PhiMinus => cells.push(m.unwrap().phi_minus.into()),
            Quantity::RelativePhase => cells.push(m.unwrap().relative_phase.into()),
            Quantity::Eigenvalues => {
                let n = point.n_atoms as f64;
                let s = point.structure.magnitude();
                let spectrum = spectrum_for_couplings(p, p.g * (n + s).sqrt(), p.g * (n - s).max(0.0).sqrt());
                for e in spectrum.all() {
                    cells.push(Cell::Value(e.re));
                    cells.push(Cell::Value(e.im));
                }
            }
            Quantity::W => cells.push(Cell::Value(tuning_range_numeric(p, point.n_atoms)?)),
            Quantity::NLoss => cells.push(Cell::Value(max_photon_loss(p, point.n_atoms)?.n_loss)),
            Quantity::MeanS => {
                let spec = DisorderSpec::new(point.sigma, config.fixed.disorder.samples, config.seed)?;
                let m = mean_structure_factor(point.n_atoms, &spec)?;
                cells.push(Cell::Value(m.mean));
                cells.push(Cell::Value(m.std_error));
            }
        }
    }
    Ok(cells)
}

/// Evaluates the configured observables on the full grid. Axis 1 is the
/// outer loop. Points run in parallel on the current rayon pool but rows
/// come back in grid order; a failing point yields a flagged row.
pub fn run_scan(config: &ScanConfig) -> Result<ScanTable> {
    config.validate()?;
    let axes = config.axes();
    let grids: Vec<Vec<f64>> = axes.iter().map(|a| a.values()).collect();
    let value_columns: Vec<String> = config.quantity.iter().flat_map(|q| q.columns()).collect();
    let width = value_columns.len();

    let rows = (0..config.row_count())
        .into_par_iter()
        .map(|index| {
            let mut rest = index;
            let mut coords = vec![0.0; grids.len()];
            for (k, grid) in grids.iter().enumerate().rev() {
                coords[k] = grid[rest % grid.len()];
                rest /= grid.len();
            }
            match evaluate(config, &coords) {
                Ok(values) => ScanRow {
                    axes: coords,
                    values,
                    error: None,
                },
                Err(e) => ScanRow {
                    axes: coords,
                    values: vec![Cell::Missing; width],
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    Ok(ScanTable {
        axis_columns: axes.iter().map(|a| a.name.header().to_string()).collect(),
        value_columns,
        rows,
    })
}
