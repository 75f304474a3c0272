//! Dormand–Prince 5(4) integrator with local error control.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (identical to the last stage row, FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; 0 means unbounded.
    pub max_step: f64,
}

impl DormandPrince {
    pub fn new(tolerance: f64) -> Self {
        Self {
            rtol: tolerance,
            atol: tolerance,
            max_step: 0.0,
        }
    }

    /// Integrates `dy/dt = f(t, y)` from `t0` to `t_end`, calling `observe`
    /// after every accepted step. Returns the state at `t_end`.
    pub fn integrate<F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: &[f64],
        t_end: f64,
        mut observe: O,
    ) -> Result<Vec<f64>>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        O: FnMut(f64, &[f64]) -> Result<()>,
    {
        let n = y0.len();
        let mut y = y0.to_vec();
        let mut t = t0;
        if t_end <= t0 {
            return Ok(y);
        }
        let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
        let mut stage = vec![0.0; n];
        let mut y_new = vec![0.0; n];

        f(t, &y, &mut k[0]);
        let mut h = self.initial_step(&y, &k[0], t_end - t0);

        while t < t_end {
            let floor = 1e-14 * t.abs().max(1.0);
            if t_end - t < floor {
                break;
            }
            let last_step = t + h >= t_end;
            if last_step {
                h = t_end - t;
            }
            if h < floor {
                return Err(Error::StepSizeUnderflow { time: t });
            }

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, a) in A[s].iter().enumerate().take(s) {
                        acc += a * k[j][i];
                    }
                    stage[i] = y[i] + h * acc;
                }
                f(t + C[s] * h, &stage, &mut k[s]);
            }
            for i in 0..n {
                let mut acc = 0.0;
                for (j, b) in B5.iter().enumerate() {
                    acc += b * k[j][i];
                }
                y_new[i] = y[i] + h * acc;
            }
            // Stage 7 was evaluated at y_new (FSAL), so the embedded error
            // uses it directly.
            let mut err = 0.0;
            for i in 0..n {
                let mut diff = 0.0;
                for j in 0..7 {
                    diff += (B5[j] - B4[j]) * k[j][i];
                }
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (h * diff / scale).powi(2);
            }
            let err = if n == 0 { 0.0 } else { (err / n as f64).sqrt() };

            if err <= 1.0 {
                t = if last_step { t_end } else { t + h };
                std::mem::swap(&mut y, &mut y_new);
                let last = k.pop().expect("seven stages");
                k.insert(0, last);
                observe(t, &y)?;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h *= factor;
            } else {
                let factor = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
                } else {
                    0.1
                };
                h *= factor;
            }
            if self.max_step > 0.0 {
                h = h.min(self.max_step);
            }
        }
        Ok(y)
    }

    fn initial_step(&self, y: &[f64], dy: &[f64], span: f64) -> f64 {
        let scale = |v: f64| self.atol + self.rtol * v.abs();
        let d0 = rms(y.iter().map(|&v| v / scale(v)));
        let d1 = rms(y.iter().zip(dy).map(|(&v, &d)| d / scale(v)));
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let mut h = h.min(span).max(1e-12 * span);
        if self.max_step > 0.0 {
            h = h.min(self.max_step);
        }
        h
    }
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = DormandPrince::new(1e-10)
            .integrate(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 3.0, |_, _| Ok(()))
            .unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let y = DormandPrince::new(1e-11)
            .integrate(
                |_, y, dy| {
                    dy[0] = y[1];
                    dy[1] = -y[0];
                },
                0.0,
                &[1.0, 0.0],
                2.0 * std::f64::consts::PI,
                |_, _| Ok(()),
            )
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn finite_time_blowup_underflows() {
        // y' = y², y(0) = 1 blows up at t = 1
        let err = DormandPrince::new(1e-8)
            .integrate(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, |_, _| Ok(()))
            .unwrap_err();
        match err {
            Error::StepSizeUnderflow { time } => assert!((time - 1.0).abs() < 1e-3, "t = {time}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn observer_sees_every_accepted_step() {
        let mut last = 0.0;
        let mut count = 0;
        DormandPrince::new(1e-8)
            .integrate(
                |_, y, dy| dy[0] = -y[0],
                0.0,
                &[1.0],
                1.0,
                |t, _| {
                    assert!(t > last);
                    last = t;
                    count += 1;
                    Ok(())
                },
            )
            .unwrap();
        assert_eq!(last, 1.0);
        assert!(count > 3);
    }
}
