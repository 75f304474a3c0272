//! Built-in scans for the standard plots. Ranges are defaults and can
//! be edited on the returned config.

use crate::model::SystemParams;

use super::config::{Axis, AxisName, ChainSpec, DisorderSettings, Fixed, Hold, Quantity, ScanConfig, Engine};

fn config(quantity: Vec<Quantity>, axis1: Axis, axis2: Option<Axis>, fixed: Fixed) -> ScanConfig {
    ScanConfig {
        quantity,
        axis1,
        axis2,
        fixed,
        engine: Engine::Analytic,
        seed: 0,
        hold: Hold::DeltaAc,
    }
}

fn ordered(n_atoms: usize, s_ratio: f64) -> ChainSpec {
    ChainSpec {
        n_atoms,
        s_ratio,
        ..ChainSpec::default()
    }
}

/// Intracavity photon number over (δ, Δ_ac) for N = 20 at a given |S|/N.
pub fn polariton_map(s_ratio: f64) -> ScanConfig {
    config(
        vec![Quantity::NTot],
        Axis::linear(AxisName::Delta, -6.0, 6.0, 601),
        Some(Axis::linear(AxisName::DeltaAc, -10.0, 10.0, 201)),
        Fixed {
            params: SystemParams::new(0.5, 0.1, 0.0, 0.0),
            chain: ordered(20, s_ratio),
            ..Fixed::default()
        },
    )
}

/// Output ports of the router against |S| at δ = 0.
pub fn router_crossover() -> ScanConfig {
    config(
        vec![Quantity::NOutPlus, Quantity::NOutMinus, Quantity::NOutTot],
        Axis::linear(AxisName::SMagnitude, 0.0, 10.0, 101),
        None,
        Fixed {
            chain: ordered(10, 1.0),
            ..Fixed::default()
        },
    )
}

/// Output phases against δ for an ordered and a structureless chain.
pub fn phase_curves(s_ratio: f64) -> ScanConfig {
    config(
        vec![Quantity::PhiPlus, Quantity::PhiMinus, Quantity::RelativePhase],
        Axis::linear(AxisName::Delta, -2.0, 2.0, 401),
        None,
        Fixed {
            chain: ordered(10, s_ratio),
            ..Fixed::default()
        },
    )
}

/// Disorder-averaged |S|/N against N for σ = 20 nm at λ = 780 nm.
pub fn disorder_curve(samples: usize, seed: u64) -> ScanConfig {
    ScanConfig {
        seed,
        ..config(
            vec![Quantity::MeanS],
            Axis::linear(AxisName::NAtoms, 2.0, 100.0, 99),
            None,
            Fixed {
                disorder: DisorderSettings {
                    samples,
                    ..DisorderSettings::default()
                },
                ..Fixed::default()
            },
        )
    }
}

/// Fine δ scan in the dispersive regime (N = 10, Δ_ac = 10) resolving the
/// bright and dark cavity resonances.
pub fn dispersive_linewidths(s_ratio: f64) -> ScanConfig {
    config(
        vec![Quantity::NTot],
        Axis::linear(AxisName::Delta, -0.5, 1.0, 3001),
        None,
        Fixed {
            chain: ordered(10, s_ratio),
            ..Fixed::default()
        },
    )
}

/// Names accepted by [`builtin`].
pub const BUILTIN: [&str; 8] = [
    "polariton-map-0",
    "polariton-map-half",
    "polariton-map-1",
    "router-crossover",
    "phase-ordered",
    "phase-structureless",
    "disorder",
    "linewidths",
];

pub fn builtin(name: &str) -> Option<ScanConfig> {
    Some(match name {
        "polariton-map-0" => polariton_map(0.0),
        "polariton-map-half" => polariton_map(0.5),
        "polariton-map-1" => polariton_map(1.0),
        "router-crossover" => router_crossover(),
        "phase-ordered" => phase_curves(1.0),
        "phase-structureless" => phase_curves(0.0),
        "disorder" => disorder_curve(1000, 0),
        "linewidths" => dispersive_linewidths(1.0),
        _ => return None,
    })
}
