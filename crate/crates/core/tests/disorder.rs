use ringqed::disorder::*;
use ringqed::model::SystemParams;

fn rubidium(samples: usize, seed: u64) -> DisorderSpec {
    DisorderSpec::from_metres(20e-9, RB87_WAVELENGTH, samples, seed).unwrap()
}

#[test]
fn rubidium_chain_structure_factor() {
    let m = mean_structure_factor(100, &rubidium(10_000, 1)).unwrap();
    assert!((m.mean - 0.949).abs() < 0.005, "mean = {}", m.mean);
    let analytic = analytic_mean_structure(20.0 / 780.0);
    assert!((m.mean - analytic).abs() / analytic < 0.01);
}

#[test]
fn small_chains_approach_the_closed_form_loosely() {
    let m = mean_structure_factor(10, &rubidium(10_000, 2)).unwrap();
    let analytic = analytic_mean_structure(20.0 / 780.0);
    assert!((m.mean - analytic).abs() / analytic < 0.05, "mean = {}", m.mean);
}

#[test]
fn disorder_lowers_structure_monotonically() {
    let means: Vec<f64> = [0.0, 0.01, 0.02, 0.04, 0.08, 0.12]
        .into_iter()
        .map(|sigma| {
            let spec = DisorderSpec::new(sigma, 4000, 9).unwrap();
            mean_structure_factor(50, &spec).unwrap().mean
        })
        .collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn standard_error_shrinks_with_samples() {
    let spec = DisorderSpec::new(0.05, 5000, 11).unwrap();
    let a = mean_structure_factor(20, &spec).unwrap().std_error;
    let b = mean_structure_factor(20, &DisorderSpec { samples: 10_000, ..spec }).unwrap().std_error;
    let ratio = a / b;
    assert!((ratio / std::f64::consts::SQRT_2 - 1.0).abs() < 0.2, "ratio = {ratio}");
}

#[test]
fn sampled_positions_centre_on_traps() {
    let spec = DisorderSpec::new(0.05, 4000, 5).unwrap();
    let centres = ordered_chain(8);
    let mut sums = vec![0.0; 8];
    for i in 0..spec.samples as u64 {
        for (acc, x) in sums.iter_mut().zip(sample_chain(&centres, &spec, i).positions()) {
            *acc += x;
        }
    }
    let bound = 5.0 * spec.sigma / (spec.samples as f64).sqrt();
    for (sum, centre) in sums.iter().zip(centres.positions()) {
        assert!((sum / spec.samples as f64 - centre).abs() < bound);
    }
}

#[test]
fn monte_carlo_is_reproducible() {
    let spec = rubidium(2000, 77);
    assert_eq!(mean_structure_factor(30, &spec).unwrap(), mean_structure_factor(30, &spec).unwrap());
}

#[test]
fn disorder_shrinks_tuning_range() {
    let p = SystemParams::new(0.5, 0.1, 0.0, 10.0);
    assert!((tuning_range_at(&p, 10, 9.5).unwrap() - 0.86).abs() <= 0.01);
    let clean = degraded_tuning_range(&p, 10, &DisorderSpec::new(0.0, 1, 0).unwrap()).unwrap();
    assert!((clean.w_mean_structure - 40000.0 / 40801.0).abs() < 1e-12);
    assert_eq!(clean.w_monte_carlo, clean.w_clean);
    let d = degraded_tuning_range(&p, 10, &rubidium(4000, 3)).unwrap();
    assert!(d.w_mean_structure < d.w_clean);
    assert!(d.w_monte_carlo < d.w_clean);
    assert_eq!(d.n_loss, clean.n_loss);
}
