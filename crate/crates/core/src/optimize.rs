//! One-dimensional maximisation helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol * (1.0 + a.abs().max(b.abs())) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // the endpoints can beat the interior when the maximum sits on the edge
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Samples `points` equally spaced values on `[lo, hi]`, then refines the
/// best bracket by golden section. Guards against mild multimodality.
pub fn grid_refined_max<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    points: usize,
    tol: f64,
) -> (f64, f64) {
    assert!(points >= 3, "need at least three grid points");
    let step = (hi - lo) / (points - 1) as f64;
    let (best, _) = (0..points)
        .map(|i| (i, f(lo + step * i as f64)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let left = lo + step * best.saturating_sub(1) as f64;
    let right = lo + step * (best + 1).min(points - 1) as f64;
    golden_section_max(f, left, right, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parabola() {
        let (x, y) = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-12);
        // a flat maximum pins x only to about √ε
        assert!((x - 0.3).abs() < 1e-7);
        assert!((y - 2.0).abs() < 1e-15);
    }

    #[test]
    fn edge_maximum() {
        let (x, y) = golden_section_max(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!((x, y), (1.0, 1.0));
    }

    #[test]
    fn grid_picks_global_peak() {
        // two bumps, the narrower one on the right is higher
        let f = |x: f64| (-(x - 1.0).powi(2)).exp() + 1.5 * (-((x - 4.0) / 0.2).powi(2)).exp();
        let (x, y) = grid_refined_max(f, 0.0, 5.0, 256, 1e-12);
        assert!((x - 4.0).abs() < 1e-4, "x = {x}");
        assert!(y > 1.5);
    }
}
