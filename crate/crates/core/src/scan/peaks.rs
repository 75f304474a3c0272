use serde::Serialize;

use crate::error::{Error, Result};
use crate::modes::PolaritonSpectrum;

/// Relative prominence below which local maxima are ignored.
pub const DEFAULT_PROMINENCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Peak {
    pub center: f64,
    pub height: f64,
    pub fwhm: f64,
    /// Nearest reference resonance, if any were supplied.
    pub label: Option<String>,
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PeakReport {
    /// Sorted by center.
    pub peaks: Vec<Peak>,
    pub diagnostics: Vec<String>,
}

impl PeakReport {
    pub fn by_label(&self, label: &str) -> Option<&Peak> {
        self.peaks.iter().find(|p| p.label.as_deref() == Some(label))
    }
}

/// Reference resonances `(label, Re E)` for peak labelling.
pub fn polariton_references(spectrum: &PolaritonSpectrum) -> Vec<(String, f64)> {
    PolaritonSpectrum::labels()
        .iter()
        .zip(spectrum.all())
        .map(|(l, e)| (l.to_string(), e.re))
        .collect()
}

/// Interpolated position where `y` crosses `level` between samples `i` and `j`.
fn crossing(x: &[f64], y: &[f64], i: usize, j: usize, level: f64) -> f64 {
    x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i])
}

/// Walks from the peak at `i` in direction `step` until `y` drops below
/// `half`. Gives up on reaching the scan edge or a higher neighbour.
fn half_crossing(x: &[f64], y: &[f64], i: usize, half: f64, height: f64, step: isize) -> Option<f64> {
    let mut k = i;
    loop {
        let next = k as isize + step;
        if next < 0 || next as usize >= y.len() {
            return None;
        }
        let next = next as usize;
        if y[next] > height {
            return None;
        }
        if y[next] <= half {
            return Some(crossing(x, y, k, next, half));
        }
        k = next;
    }
}

/// Topographic prominence of the local maximum at `i`.
fn prominence(y: &[f64], i: usize) -> f64 {
    let base = |range: &mut dyn Iterator<Item = usize>| {
        let mut low = y[i];
        for k in range {
            if y[k] > y[i] {
                break;
            }
            low = low.min(y[k]);
        }
        low
    };
    let left = base(&mut (0..i).rev());
    let right = base(&mut (i + 1..y.len()));
    y[i] - left.max(right)
}

/// Finds the peaks of a sampled curve `y(x)` and measures their full width
/// at half maximum.
///
/// Local maxima whose prominence exceeds `relative_prominence` times the
/// global maximum are kept. Centre and height come from a parabola through
/// the three highest samples; the half-height crossings are interpolated
/// linearly. Peaks whose half-height level is not reached on both sides
/// are dropped with a diagnostic.
pub fn extract_peaks(x: &[f64], y: &[f64], references: &[(String, f64)], relative_prominence: f64) -> Result<PeakReport> {
    if x.len() != y.len() {
        return Err(Error::invalid("y", format!("{} samples for {} abscissae", y.len(), x.len())));
    }
    if x.len() < 3 {
        return Err(Error::invalid("x", "need at least three samples"));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("x", "abscissae must increase strictly"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("y", "samples must be finite"));
    }

    let mut report = PeakReport::default();
    let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(top > 0.0) {
        report.diagnostics.push("curve has no positive maximum".into());
        return Ok(report);
    }
    let threshold = relative_prominence * top;

    for i in 1..y.len() - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) || prominence(y, i) < threshold {
            continue;
        }
        // parabolic vertex through i-1, i, i+1
        let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
        let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
        let d01 = (y1 - y0) / (x1 - x0);
        let d12 = (y2 - y1) / (x2 - x1);
        let curvature = (d12 - d01) / (x2 - x0);
        let (center, height) = if curvature < 0.0 {
            let c = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
            let c = c.clamp(x0, x2);
            (c, y1 + d01 * (c - x1) + curvature * (c - x0) * (c - x1))
        } else {
            (x1, y1)
        };
        let half = 0.5 * height;
        let left = half_crossing(x, y, i, half, height, -1);
        let right = half_crossing(x, y, i, half, height, 1);
        let (Some(l), Some(r)) = (left, right) else {
            report
                .diagnostics
                .push(format!("peak at {center} has no half-height crossing on both sides; dropped"));
            continue;
        };
        let fwhm = r - l;
        let spacing = 0.5 * (x2 - x0);
        if fwhm < 10.0 * spacing {
            report.diagnostics.push(format!(
                "peak at {center}: only {:.1} samples per FWHM, width may be inaccurate",
                fwhm / spacing
            ));
        }
        let nearest = references
            .iter()
            .min_by(|a, b| (a.1 - center).abs().total_cmp(&(b.1 - center).abs()));
        report.peaks.push(Peak {
            center,
            height,
            fwhm,
            label: nearest.map(|r| r.0.clone()),
            reference: nearest.map(|r| r.1),
        });
    }
    if report.peaks.is_empty() {
        report.diagnostics.push("no peaks above the prominence threshold".into());
    }
    report.peaks.sort_by(|a, b| a.center.total_cmp(&b.center));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn lorentzian(x: f64, x0: f64, width: f64) -> f64 {
        let h = 0.5 * width;
        h * h / ((x - x0) * (x - x0) + h * h)
    }

    #[test]
    fn synthetic_lorentzian() {
        let x = grid(-1.0, 1.0, 401);
        let y: Vec<f64> = x.iter().map(|&v| lorentzian(v, 0.123, 0.1)).collect();
        let r = extract_peaks(&x, &y, &[], DEFAULT_PROMINENCE).unwrap();
        assert_eq!(r.peaks.len(), 1);
        let p = &r.peaks[0];
        assert!((p.fwhm - 0.1).abs() < 1e-3, "{}", p.fwhm);
        assert!((p.center - 0.123).abs() < 1e-3);
        assert!((p.height - 1.0).abs() < 1e-2);
        assert!(r.diagnostics.is_empty(), "{:?}", r.diagnostics);
    }

    #[test]
    fn two_peaks_are_sorted_and_labelled() {
        let x = grid(-2.0, 2.0, 2001);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| 0.5 * lorentzian(v, 1.0, 0.2) + lorentzian(v, -1.0, 0.1))
            .collect();
        let refs = vec![("a".to_string(), -0.98), ("b".to_string(), 1.05)];
        let r = extract_peaks(&x, &y, &refs, DEFAULT_PROMINENCE).unwrap();
        assert_eq!(r.peaks.len(), 2);
        assert!(r.peaks[0].center < r.peaks[1].center);
        assert_eq!(r.by_label("a").unwrap().label.as_deref(), Some("a"));
        assert!((r.by_label("b").unwrap().fwhm - 0.2).abs() < 2e-3);
    }

    #[test]
    fn tiny_ripples_are_ignored() {
        let x = grid(-1.0, 1.0, 1001);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| lorentzian(v, 0.0, 0.2) + 1e-5 * (60.0 * v).sin())
            .collect();
        let r = extract_peaks(&x, &y, &[], DEFAULT_PROMINENCE).unwrap();
        assert_eq!(r.peaks.len(), 1);
    }

    #[test]
    fn flat_and_truncated_curves() {
        let x = grid(0.0, 1.0, 11);
        let r = extract_peaks(&x, &[0.0; 11], &[], DEFAULT_PROMINENCE).unwrap();
        assert!(r.peaks.is_empty() && !r.diagnostics.is_empty());
        // peak cut by the scan edge on one side
        let y: Vec<f64> = x.iter().map(|&v| lorentzian(v, 0.95, 0.5)).collect();
        let r = extract_peaks(&x, &y, &[], DEFAULT_PROMINENCE).unwrap();
        assert!(r.peaks.is_empty());
        assert!(extract_peaks(&x, &y[..5], &[], DEFAULT_PROMINENCE).is_err());
    }
}
