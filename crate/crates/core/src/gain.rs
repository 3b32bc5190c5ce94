//! L2 gain of `x' = -S(t) x + u` under window bounds.
//!
//! For the class `(a, b, T)` the gain satisfies
//! `T / (2 μ(a/2, b/2)) <= γ <= T / (1 - e^{-μ(a, b)})`. The lower bound is
//! attained asymptotically by a periodic input aligned with the flow of the
//! reflected optimal control for `(a/2, b/2)`, built here with windows of
//! length 1 and period 2, then rescaled to the requested `T`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::extremal2d::{build_optimal_control, mu, ExtremalParams};
use crate::ode::Rk45;
use crate::signals::{time_rescale, MatrixSignal};

/// Relative slack allowed between the simulated ratio and the bounds.
pub const REPORT_TOL: f64 = 0.02;

pub const DEFAULT_PERIODS: usize = 50;

/// Extra periods integrated after the input stops.
pub const MAX_TAIL_PERIODS: usize = 20;

const SIM_TOL: f64 = 1e-10;
const TABLE_INTERVALS: usize = 4096;

/// `T / (1 - e^{-μ})`.
pub fn gain_upper(mu: f64, t: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return domain(format!("μ must be positive, got {mu}"));
    }
    Ok(-t / (-mu).exp_m1())
}

/// `T / (2 μ_half)`.
pub fn gain_lower(mu_half: f64, t: f64) -> Result<f64> {
    if !(mu_half > 0.0) {
        return domain(format!("μ must be positive, got {mu_half}"));
    }
    Ok(t / (2.0 * mu_half))
}

/// `u(t) = v(ξ) Φ(ξ, 0) ω_*` with `ξ = t mod P` and `v(s) = μ e^{μ s}`.
#[derive(Debug, Clone)]
pub struct WorstInput {
    pub mu: f64,
    pub period: f64,
    pub omega_star: DVector<f64>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

/// Builds the worst input for a periodic control `c_star`.
pub fn worst_input(
    c_star: &MatrixSignal,
    omega_star: &DVector<f64>,
    mu: f64,
) -> Result<WorstInput> {
    let Some(period) = c_star.period() else {
        return domain("the worst input needs a periodic control");
    };
    if !(mu > 0.0) {
        return domain(format!("μ must be positive, got {mu}"));
    }
    let n = c_star.dim();
    let times: Vec<f64> = (0..=TABLE_INTERVALS)
        .map(|k| period * k as f64 / TABLE_INTERVALS as f64)
        .collect();
    let pieces = c_star.pieces(0.0, period)?;
    let Some(first) = pieces.first() else {
        return domain("control has an empty period");
    };
    let mut y: Vec<f64> = omega_star.iter().copied().collect();
    let mut values = vec![y.clone()];
    let mut slope = vec![0.0; n];
    c_star.apply_in(first, 0.0, &y, &mut slope);
    let mut slopes = vec![slope.iter().map(|v| -v).collect::<Vec<_>>()];
    let mut next = 1;
    for piece in &pieces {
        let stops: Vec<f64> = times
            .iter()
            .copied()
            .filter(|&t| t > piece.start && t < piece.end)
            .collect();
        let mut sy = vec![0.0; n];
        Rk45::with_tol(1e-12).integrate(
            |t, y, dy| {
                c_star.apply_in(piece, t, y, &mut sy);
                for i in 0..n {
                    dy[i] = -sy[i];
                }
            },
            piece.start,
            &mut y,
            piece.end,
            &stops,
            |t, y| {
                if next < times.len() && (t - times[next]).abs() <= 1e-12 * period {
                    values.push(y.to_vec());
                    // one-sided slope from the piece on the left
                    c_star.apply_in(piece, t, y, &mut slope);
                    slopes.push(slope.iter().map(|v| -v).collect());
                    next += 1;
                }
            },
        )?;
    }
    if values.len() != times.len() {
        return domain("control breakpoints do not align with the input table");
    }
    Ok(WorstInput {
        mu,
        period,
        omega_star: omega_star.clone(),
        times,
        values,
        slopes,
    })
}

impl WorstInput {
    /// `Φ(ξ, 0) ω_*` by cubic Hermite interpolation of the tabulated flow.
    pub fn flow_at(&self, xi: f64, out: &mut [f64]) {
        let h = self.period / TABLE_INTERVALS as f64;
        let k = ((xi / h).floor() as usize).min(TABLE_INTERVALS - 1);
        let s = ((xi - self.times[k]) / h).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        for (i, o) in out.iter_mut().enumerate() {
            *o = h00 * self.values[k][i]
                + h10 * h * self.slopes[k][i]
                + h01 * self.values[k + 1][i]
                + h11 * h * self.slopes[k + 1][i];
        }
    }

    pub fn v(&self, xi: f64) -> f64 {
        self.mu * (self.mu * xi).exp()
    }

    /// `V(s) = e^{μ s} - 1`, so that `V' = v`.
    pub fn big_v(&self, xi: f64) -> f64 {
        (self.mu * xi).exp_m1()
    }

    /// `ρ̂ = e^{-μ P}`.
    pub fn rho_hat(&self) -> f64 {
        (-self.mu * self.period).exp()
    }

    /// `ρ̂/(1 - ρ̂) V(P) - 1`.
    pub fn closure_residual(&self) -> f64 {
        let rho = self.rho_hat();
        rho / (1.0 - rho) * self.big_v(self.period) - 1.0
    }

    /// `z(ξ) = V(ξ) + ρ̂/(1 - ρ̂) V(P)`.
    pub fn z(&self, xi: f64) -> f64 {
        let rho = self.rho_hat();
        self.big_v(xi) + rho / (1.0 - rho) * self.big_v(self.period)
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let xi = t.rem_euclid(self.period);
        self.flow_at(xi, out);
        let v = self.v(xi);
        out.iter_mut().for_each(|x| *x *= v);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainSimulation {
    pub ratio: f64,
    pub x_l2: f64,
    pub u_l2: f64,
    pub tail_periods: usize,
}

/// `||x||_2 / ||u||_2` for `x' = -S x + u`, `x(0) = 0`, with `u` applied on
/// `[0, k P]` and a free decay tail afterwards.
pub fn simulate_gain(
    signal: &MatrixSignal,
    u: &dyn Fn(f64, &mut [f64]),
    k_periods: usize,
    record: Option<&mut Vec<(f64, f64, f64)>>,
) -> Result<GainSimulation> {
    let Some(period) = signal.period() else {
        return domain("gain simulation needs a periodic signal");
    };
    if k_periods == 0 {
        return domain("need at least one period of input");
    }
    let n = signal.dim();
    let mut y = vec![0.0; n + 2];
    let mut log = record;
    let mut h = None;
    let mut sx = vec![0.0; n];
    let mut uu = vec![0.0; n];
    let mut tail = 0;
    let total = k_periods + MAX_TAIL_PERIODS;
    for k in 0..total {
        let driven = k < k_periods;
        if !driven {
            let xn = y[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
            if xn <= 1e-12 {
                break;
            }
            tail += 1;
        }
        let t0 = period * k as f64;
        for piece in signal.pieces(t0, t0 + period)? {
            let mut rk = Rk45::with_tol(SIM_TOL);
            rk.h_init = h;
            let stats = rk.integrate(
                |t, y, dy| {
                    signal.apply_in(&piece, t, &y[..n], &mut sx);
                    if driven {
                        u(t, &mut uu);
                    } else {
                        uu.iter_mut().for_each(|v| *v = 0.0);
                    }
                    let (mut xx, mut un) = (0.0, 0.0);
                    for i in 0..n {
                        dy[i] = -sx[i] + uu[i];
                        xx += y[i] * y[i];
                        un += uu[i] * uu[i];
                    }
                    dy[n] = xx;
                    dy[n + 1] = un;
                },
                piece.start,
                &mut y,
                piece.end,
                &[],
                |t, y| {
                    if let Some(log) = log.as_deref_mut() {
                        let xn = y[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                        let mut ut = vec![0.0; n];
                        if driven {
                            u(t, &mut ut);
                        }
                        log.push((t, xn, ut.iter().map(|v| v * v).sum::<f64>().sqrt()));
                    }
                },
            )?;
            h = Some(stats.h_next);
        }
    }
    let (x_l2, u_l2) = (y[n].sqrt(), y[n + 1].sqrt());
    if !(u_l2 > 0.0) {
        return domain("input has zero L2 norm; the ratio is undefined");
    }
    Ok(GainSimulation {
        ratio: x_l2 / u_l2,
        x_l2,
        u_l2,
        tail_periods: tail,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainReport {
    pub lower: f64,
    pub upper: f64,
    /// Simulated worst-input ratio, rescaled to the window `T`.
    pub simulated: f64,
    /// Raw ratio in the period-2 normalization (tends to `1/μ_half`).
    pub simulated_normalized: f64,
    pub mu: f64,
    pub mu_half: f64,
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub t: f64,
    pub horizon_periods: usize,
    pub tol: f64,
}

impl GainReport {
    /// `lower <= simulated (1 + tol)` and `simulated <= upper (1 + tol)`.
    pub fn consistent(&self) -> bool {
        self.lower <= self.simulated * (1.0 + self.tol)
            && self.simulated <= self.upper * (1.0 + self.tol)
            && self.lower <= self.upper
    }
}

/// The reflected `(a/2, b/2)` control with windows of length 1 (period 2).
pub fn normalized_worst_control(
    a: f64,
    b: f64,
) -> Result<(MatrixSignal, DVector<f64>, f64, ExtremalParams)> {
    let half = build_optimal_control(0.5 * a, 0.5 * b)?;
    let signal = time_rescale(half.signal.as_matrix(), 2.0)?;
    Ok((signal, half.omega0, half.mu, half.params))
}

/// Bounds and worst-input simulation for the class `(a, b, T)` in the plane.
pub fn gain_estimate(a: f64, b: f64, t: f64, k_periods: usize) -> Result<GainReport> {
    if !(a > 0.0 && a < b && b.is_finite()) || !(t > 0.0) {
        return domain(format!("need 0 < a < b and T > 0, got ({a}, {b}, {t})"));
    }
    let mu_full = mu(a, b)?.mu;
    let (signal, omega_star, mu_half, _) = normalized_worst_control(a, b)?;
    let input = worst_input(&signal, &omega_star, mu_half)?;
    let sim = simulate_gain(&signal, &|t, out| input.eval(t, out), k_periods, None)?;
    Ok(GainReport {
        lower: gain_lower(mu_half, t)?,
        upper: gain_upper(mu_full, t)?,
        simulated: 0.5 * t * sim.ratio,
        simulated_normalized: sim.ratio,
        mu: mu_full,
        mu_half,
        a,
        b,
        n: 2,
        t,
        horizon_periods: k_periods,
        tol: REPORT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_arithmetic() {
        assert!((gain_upper(std::f64::consts::LN_2, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((gain_upper(50.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(gain_lower(0.5, 1.0).unwrap(), 1.0);
        assert!(gain_upper(0.0, 1.0).is_err());
        assert!(gain_lower(-1.0, 1.0).is_err());
    }

    #[test]
    fn zero_input_is_rejected() {
        let s = MatrixSignal::constant(nalgebra::DMatrix::identity(2, 2), 1.0)
            .unwrap()
            .into_periodic();
        assert!(simulate_gain(&s, &|_, u| u.fill(0.0), 3, None).is_err());
    }

    #[test]
    fn constant_system_gain() {
        // x' = -x + 1 on [0, k] then decay: ratio tends to 1 as k grows
        let s = MatrixSignal::constant(nalgebra::DMatrix::identity(1, 1), 1.0)
            .unwrap()
            .into_periodic();
        let r = simulate_gain(&s, &|_, u| u[0] = 1.0, 400, None).unwrap();
        assert!((r.ratio - 1.0).abs() < 3e-3, "{r:?}");
    }
}
