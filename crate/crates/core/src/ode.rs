//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! Steps always land exactly on the caller's stop times, so a right-hand
//! side that is only piecewise smooth is never stepped across one of its
//! breakpoints as long as those breakpoints are passed as stops.

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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

/// Fifth-order weights (same as the last row of `A`).
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];

/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Counters returned after an integration run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
    /// Last proposed step, useful as a warm start for the next call.
    pub h_next: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Rk45 {
    /// Used both as absolute and relative tolerance.
    pub tol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Rk45 {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

impl Rk45 {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1` in place.
    ///
    /// `stops` must be sorted; every stop inside `(t0, t1)` is hit exactly.
    /// `on_step(t, y)` runs after each accepted step and may modify `y`
    /// (e.g. to renormalize it).
    pub fn integrate<F, P>(
        &self,
        mut f: F,
        t0: f64,
        y: &mut [f64],
        t1: f64,
        stops: &[f64],
        mut on_step: P,
    ) -> Result<Stats>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        P: FnMut(f64, &mut [f64]),
    {
        let n = y.len();
        let mut stats = Stats::default();
        if !(t1 > t0) {
            stats.h_next = self.h_init.unwrap_or(0.0);
            return Ok(stats);
        }
        let mut k = vec![vec![0.0; n]; 7];
        let mut ytmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];

        let span = t1 - t0;
        let mut h = self
            .h_init
            .filter(|h| *h > 0.0)
            .unwrap_or(span * 1e-3)
            .min(self.h_max)
            .min(span);
        let mut t = t0;
        let mut stop_idx = stops.partition_point(|&s| s <= t0);

        while t < t1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::Integration {
                    t,
                    h,
                    reason: "step budget exhausted".into(),
                });
            }
            while stop_idx < stops.len() && stops[stop_idx] <= t {
                stop_idx += 1;
            }
            let target = if stop_idx < stops.len() && stops[stop_idx] < t1 {
                stops[stop_idx]
            } else {
                t1
            };
            let mut landing = false;
            let mut step = h.min(self.h_max);
            if t + step >= target || target - (t + step) < 1e-12 * step {
                step = target - t;
                landing = true;
            }
            let h_min = 1e-14 * t.abs().max(span).max(1.0);
            if step < h_min && !landing {
                return Err(Error::Integration {
                    t,
                    h: step,
                    reason: "step size underflow".into(),
                });
            }

            f(t, y, &mut k[0]);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += step * A[s][j] * kj[i];
                    }
                    ytmp[i] = acc;
                }
                f(t + C[s] * step, &ytmp, &mut k[s]);
            }
            stats.evals += 7;

            let mut err = 0.0;
            for i in 0..n {
                let mut acc = y[i];
                let mut e = 0.0;
                for s in 0..7 {
                    acc += step * B[s] * k[s][i];
                    e += step * E[s] * k[s][i];
                }
                ynew[i] = acc;
                let scale = self.tol * (1.0 + y[i].abs().max(acc.abs()));
                err += (e / scale).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                stats.rejected += 1;
                h = step * 0.2;
                continue;
            }

            if err <= 1.0 {
                t = if landing { target } else { t + step };
                y.copy_from_slice(&ynew);
                on_step(t, y);
                stats.accepted += 1;
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // a short landing step says nothing about the natural size
                h = if landing {
                    h.max(step * factor)
                } else {
                    step * factor
                };
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        stats.h_next = h;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut y = [1.0];
        let rk = Rk45::with_tol(1e-11);
        rk.integrate(|_, y, d| d[0] = -y[0], 0.0, &mut y, 3.0, &[], |_, _| {})
            .unwrap();
        assert!((y[0] - (-3.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let mut y = [1.0, 0.0];
        let rk = Rk45::with_tol(1e-12);
        rk.integrate(
            |_, y, d| {
                d[0] = y[1];
                d[1] = -y[0];
            },
            0.0,
            &mut y,
            2.0 * std::f64::consts::PI,
            &[],
            |_, _| {},
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn stops_are_hit_exactly() {
        let mut seen = Vec::new();
        let mut y = [0.0];
        let stops = [0.25, 0.5, 0.75];
        Rk45::default()
            .integrate(
                |_, _, d| d[0] = 1.0,
                0.0,
                &mut y,
                1.0,
                &stops,
                |t, _| seen.push(t),
            )
            .unwrap();
        for s in stops {
            assert!(seen.contains(&s), "missing stop {s}");
        }
        assert_eq!(*seen.last().unwrap(), 1.0);
    }
}
