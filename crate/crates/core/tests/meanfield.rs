use num_complex::Complex64;
use proptest::prelude::*;
use ringqed::meanfield::{find_steady_state, integrate, rhs, MeanFieldState, SteadyStateOptions};
use ringqed::model::{chain_with_structure, AtomChain, SystemParams};
use ringqed::weak_drive::steady_state_fields;

fn flow_after(state: &MeanFieldState, p: &SystemParams, chain: &AtomChain, t: f64) -> Vec<f64> {
    integrate(state, p, chain, t, 1e-13).unwrap().last().to_vec()
}

#[test]
fn empty_cavity_fills_exponentially() {
    let p = SystemParams::default().with_g(0.0).with_epsilon(0.05);
    let chain = AtomChain::uniform(3, 0.5);
    let traj = integrate(&MeanFieldState::vacuum(3), &p, &chain, 40.0, 1e-11).unwrap();
    let amp = Complex64::new(0.0, -2.0 * p.kappa_in.sqrt() * p.epsilon / p.kappa());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let exact = amp * (1.0 - (-p.kappa() * t / 2.0).exp());
        assert!((s.a_plus - exact).norm() < 1e-9, "t = {t}");
        assert_eq!(s.a_minus, Complex64::new(0.0, 0.0));
    }
}

#[test]
fn tighter_tolerance_converges_to_reference() {
    let p = SystemParams::default().with_epsilon(0.05).with_delta(0.3);
    let chain = chain_with_structure(4, 3.0).unwrap();
    let start = MeanFieldState::vacuum(4);
    let reference = integrate(&start, &p, &chain, 30.0, 1e-12).unwrap().last().to_vec();
    let error = |tol: f64| {
        let end = integrate(&start, &p, &chain, 30.0, tol).unwrap().last().to_vec();
        end.iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max)
    };
    let coarse = error(1e-6);
    let fine = error(5e-7);
    assert!(fine < coarse, "coarse {coarse:e}, fine {fine:e}");
    assert!(coarse < 1e-4);
}

#[test]
fn weak_drive_steady_state_matches_linear_theory() {
    let p = SystemParams::new(0.5, 0.1, 0.0, 10.0).with_epsilon(1e-3);
    let chain = chain_with_structure(10, 10.0).unwrap();
    let ss = find_steady_state(&p, &chain, &SteadyStateOptions::default()).unwrap();
    let linear = steady_state_fields(&p, &chain).unwrap();
    let rel = |a: Complex64, b: Complex64| (a - b).norm() / b.norm();
    assert!(rel(ss.state.a_plus, linear.a_plus) < 1e-3);
    assert!(rel(ss.state.a_minus, linear.a_minus) < 1e-3);
    assert!(ss.residual < 1e-9 * p.gamma);
}

#[test]
fn saturation_reduces_backscattering() {
    let chain = AtomChain::uniform(1, 0.5);
    let weak = SystemParams::new(0.5, 0.1, 0.0, 1.0).with_epsilon(1e-3);
    let opts = SteadyStateOptions::default();
    let per_drive = |eps: f64| {
        let p = weak.with_epsilon(eps);
        find_steady_state(&p, &chain, &opts).unwrap().state.a_minus.norm() / eps
    };
    let linear = steady_state_fields(&weak, &chain).unwrap().a_minus.norm() / weak.epsilon;
    let ladder: Vec<f64> = [1e-3, 0.3, 1.0, 3.0].into_iter().map(per_drive).collect();
    assert!((ladder[0] - linear).abs() < 1e-3 * linear);
    assert!(ladder.windows(2).all(|w| w[1] < w[0]), "{ladder:?}");
    assert!(ladder[3] < 0.5 * linear, "{ladder:?}");
}

fn arb_state(n: usize) -> impl Strategy<Value = MeanFieldState> {
    (
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        prop::collection::vec((0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU, 0.0..1.0f64), n),
    )
        .prop_map(move |((ar, ai, br, bi), bloch)| {
            // points inside the Bloch ball
            let sigma_minus = bloch
                .iter()
                .map(|&(theta, phi, r)| Complex64::from_polar(0.5 * r * theta.sin(), phi))
                .collect();
            let sigma_z = bloch.iter().map(|&(theta, _, r)| r * theta.cos()).collect();
            MeanFieldState {
                a_plus: Complex64::new(ar, ai),
                a_minus: Complex64::new(br, bi),
                sigma_minus,
                sigma_z,
            }
        })
}

fn arb_chain(n: usize) -> impl Strategy<Value = AtomChain> {
    prop::collection::vec(-2.0..2.0f64, n).prop_map(AtomChain::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn excitation_never_grows_without_drive(
        state in arb_state(3),
        chain in arb_chain(3),
        g in 0.0..1.0f64,
        delta in -2.0..2.0f64,
        delta_ac in -5.0..5.0f64,
    ) {
        let p = SystemParams::new(g, 0.2, 0.1, delta_ac).with_epsilon(0.0).with_delta(delta);
        let traj = integrate(&state, &p, &chain, 10.0, 1e-10).unwrap();
        let excitation: Vec<f64> = traj.states.iter().map(|s| s.total_excitation()).collect();
        for pair in excitation.windows(2) {
            prop_assert!(pair[1] <= pair[0] + 1e-8, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn trajectories_stay_on_the_bloch_ball(
        state in arb_state(2),
        chain in arb_chain(2),
        epsilon in 0.0..1.0f64,
    ) {
        let p = SystemParams::new(0.8, 0.3, 0.0, 1.0).with_epsilon(epsilon);
        let traj = integrate(&state, &p, &chain, 20.0, 1e-10).unwrap();
        prop_assert!(traj.states.iter().all(|s| s.bloch_excess().is_none()));
    }

    #[test]
    fn rhs_is_the_tangent_of_the_flow(state in arb_state(2), chain in arb_chain(2)) {
        let p = SystemParams::new(0.7, 0.2, 0.1, 2.0).with_epsilon(0.4).with_delta(-0.5);
        let y = state.to_vec();
        let f = rhs(&state, &p, &chain).to_vec();
        let quotient = |h: f64| -> Vec<f64> {
            flow_after(&state, &p, &chain, h)
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b) / h)
                .collect()
        };
        let err = |h: f64| -> f64 {
            // Richardson combination cancels the O(h) term
            let full = quotient(h);
            let half = quotient(h / 2.0);
            full.iter()
                .zip(&half)
                .zip(&f)
                .map(|((a, b), d)| (2.0 * b - a - d).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(1e-2);
        let e2 = err(5e-3);
        prop_assert!(e1 < 1e-3, "e1 = {e1:e}");
        // second order: halving h cuts the error by about four
        prop_assert!(e2 < 0.4 * e1 || e2 < 1e-9, "e1 = {e1:e}, e2 = {e2:e}");
    }
}

#[test]
fn weak_drive_response_is_linear() {
    let chain = chain_with_structure(4, 3.0).unwrap();
    let opts = SteadyStateOptions::default();
    let base = SystemParams::default().with_delta(0.2);
    let one = find_steady_state(&base.with_epsilon(5e-5), &chain, &opts).unwrap().state;
    let two = find_steady_state(&base.with_epsilon(1e-4), &chain, &opts).unwrap().state;
    for (a, b) in [(one.a_plus, two.a_plus), (one.a_minus, two.a_minus)] {
        assert!((2.0 * a - b).norm() < 1e-6 * b.norm());
    }
}

#[test]
fn steady_state_moves_with_the_chain() {
    let chain = chain_with_structure(4, 3.0).unwrap();
    let shift = 0.13;
    let moved = ringqed::model::translate_chain(&chain, shift);
    let p = SystemParams::default().with_epsilon(0.05).with_delta(0.4);
    let opts = SteadyStateOptions::default();
    let a = find_steady_state(&p, &chain, &opts).unwrap().state;
    let b = find_steady_state(&p, &moved, &opts).unwrap().state;
    assert!((a.a_plus.norm() - b.a_plus.norm()).abs() < 1e-8);
    assert!((a.a_minus.norm() - b.a_minus.norm()).abs() < 1e-8);
    for (x, y) in a.sigma_minus.iter().zip(&b.sigma_minus) {
        assert!((x.norm() - y.norm()).abs() < 1e-8);
    }
    let rotation = Complex64::from_polar(1.0, 4.0 * std::f64::consts::PI * shift);
    assert!((b.a_minus - a.a_minus * rotation).norm() < 1e-8);
}
