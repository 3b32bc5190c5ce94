//! Optimal rank-one control in the plane.
//!
//! With `ω = (cos(θ/2), sin(θ/2))`, `c = (cos(φ/2), sin(φ/2))` and the
//! covector `p = η ω^⊥`, extremals of the cost with window `T = a + b` obey
//!
//! ```text
//! θ' = sin(θ - φ)
//! η' = -(sin(θ - φ) + 2η cos(θ - φ)) / 2
//! φ' = 2η / (1 - α + d)
//! ```
//!
//! where `α, d` are the multipliers of the Gram constraint. The control
//! angle is a pendulum, `ν² φ'' = sin φ`, and the shape `(a, b)` fixes
//! `(φ₀, ν)` through complete elliptic integrals.

mod elliptic;
mod verify;

pub use elliptic::{elliptic_e, elliptic_k, k_minus, k_plus, k_ratio};
pub use verify::{m_matrix, verify_extremal, ExtremalReport, Residual};

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::ode::Rk45;
use crate::quad::gauss_legendre;
use crate::signals::{
    axis_hopping_control, detect_reflection, gram, reflect_extend, Interp, MatrixSignal,
    RankOneSignal, ReflectionReport, ReflectionSigns,
};

/// Intervals of the sampling grid used for the synthesized control.
pub const GRID_INTERVALS: usize = 2048;

/// Integration tolerance for the extremal system.
pub const EXTREMAL_TOL: f64 = 1e-12;

const BISECT_MAX: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremalParams {
    pub a: f64,
    pub b: f64,
    /// Window length, `a + b`.
    pub t: f64,
    pub alpha: f64,
    pub d: f64,
    pub nu: f64,
    pub phi0: f64,
    pub kappa: u32,
}

impl ExtremalParams {
    /// Full parameter solve for `0 < a < b`.
    pub fn from_ab(a: f64, b: f64) -> Result<Self> {
        let (phi0, nu) = solve_shape(a, b)?;
        let (alpha, d) = solve_multipliers(phi0, nu)?;
        Ok(Self {
            a,
            b,
            t: a + b,
            alpha,
            d,
            nu,
            phi0,
            kappa: 1,
        })
    }

    /// `1 - α + d`.
    pub fn gap(&self) -> f64 {
        1.0 - self.alpha + self.d
    }

    /// `ν` recomputed from the multipliers.
    pub fn nu_from_multipliers(&self) -> f64 {
        nu_of(self.alpha, self.d)
    }

    /// `cos φ₀` recomputed from the multipliers.
    pub fn cos_phi0_from_multipliers(&self) -> f64 {
        cos_phi0_of(self.alpha, self.d)
    }

    /// `(ν κ K₊(φ₀), ν κ K₋(φ₀))`, which should reproduce `(a, b)`.
    pub fn shape(&self) -> (f64, f64) {
        let s = self.nu * self.kappa as f64;
        (s * k_plus(self.phi0), s * k_minus(self.phi0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremal2DState {
    pub theta: f64,
    pub eta: f64,
    pub phi: f64,
}

fn nu_of(alpha: f64, d: f64) -> f64 {
    ((1.0 - alpha + d) / (2.0 * (alpha + d))).sqrt()
}

fn cos_phi0_of(alpha: f64, d: f64) -> f64 {
    -1.0 + 2.0 * d * (1.0 + d) / ((alpha + d) * (1.0 - alpha + d))
}

/// Bisection for a decreasing function `f` on `(lo, hi)`; returns `x` with `f(x) ≈ target`.
fn bisect_decreasing(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..BISECT_MAX {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(φ₀, ν)` with `a = ν K₊(φ₀)` and `b = ν K₋(φ₀)`.
pub fn solve_shape(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && b.is_finite()) {
        return domain(format!("need 0 < a < b, got ({a}, {b})"));
    }
    if a >= b {
        return domain(format!(
            "the pendulum synthesis needs a < b, got ({a}, {b}); use axis hopping for a = b"
        ));
    }
    let phi0 = bisect_decreasing(0.0, PI, a / b, k_ratio);
    let nu = b / k_minus(phi0);
    let res = (nu * k_plus(phi0) - a).abs() / a;
    if res > 1e-10 {
        return Err(Error::Residual {
            stage: "solve_shape",
            residual: res,
            tol: 1e-10,
        });
    }
    Ok((phi0, nu))
}

/// `d` from `α` along the curve fixed by `φ₀`.
fn d_of(alpha: f64, cot2: f64) -> f64 {
    let q = cot2 * alpha * (1.0 - alpha);
    2.0 * q / (1.0 + (1.0 + 4.0 * q).sqrt())
}

/// `(α, d)` matching `φ₀` and `ν`.
pub fn solve_multipliers(phi0: f64, nu: f64) -> Result<(f64, f64)> {
    if !(phi0 > 0.0 && phi0 < PI) || !(nu > 0.0 && nu.is_finite()) {
        return domain(format!("need φ₀ ∈ (0, π) and ν > 0, got ({phi0}, {nu})"));
    }
    let cot2 = (0.5 * phi0).cos().powi(2) / (0.5 * phi0).sin().powi(2);
    let alpha = bisect_decreasing(0.0, 1.0, nu, |al| nu_of(al, d_of(al, cot2)));
    let d = d_of(alpha, cot2);
    let res_nu = (nu_of(alpha, d) - nu).abs() / nu.max(1.0);
    let res_cos = (cos_phi0_of(alpha, d) - phi0.cos()).abs();
    let res = res_nu.max(res_cos);
    if res > 1e-10 {
        return Err(Error::Residual {
            stage: "solve_multipliers",
            residual: res,
            tol: 1e-10,
        });
    }
    Ok((alpha, d))
}

/// State at `t = 0`, where `η` vanishes, with `sin θ₀ < 0`.
pub fn initial_conditions(alpha: f64, d: f64) -> Result<Extremal2DState> {
    if !(alpha > 0.0 && alpha < 1.0) || !(d > 0.0) {
        return domain(format!("need α ∈ (0, 1) and d > 0, got ({alpha}, {d})"));
    }
    let clamp = |v: f64, what: &str| -> Result<f64> {
        if !(-1e-12..=1.0 + 1e-12).contains(&v) {
            Err(Error::Numerical(format!("{what} = {v} outside [0, 1]")))
        } else {
            Ok(v.clamp(0.0, 1.0))
        }
    };
    // 1 - cos θ₀ = 2 d (1-α)/(α+d) and 1 + cos φ₀ = 2 d(1+d)/((α+d)(1-α+d))
    let s_theta = clamp(d * (1.0 - alpha) / (alpha + d), "sin²(θ₀/2)")?;
    let c_phi = clamp(
        d * (1.0 + d) / ((alpha + d) * (1.0 - alpha + d)),
        "cos²(φ₀/2)",
    )?;
    Ok(Extremal2DState {
        theta: -2.0 * s_theta.sqrt().asin(),
        eta: 0.0,
        phi: 2.0 * c_phi.sqrt().acos(),
    })
}

/// Uniformly sampled solution of the extremal system on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalTrajectory {
    pub t: Vec<f64>,
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Running cost `∫ cos²((θ - φ)/2)`.
    pub cost: Vec<f64>,
}

impl ExtremalTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn omega(&self, k: usize) -> DVector<f64> {
        let h = 0.5 * self.theta[k];
        DVector::from_vec(vec![h.cos(), h.sin()])
    }

    pub fn control(&self, k: usize) -> DVector<f64> {
        let h = 0.5 * self.phi[k];
        DVector::from_vec(vec![h.cos(), h.sin()])
    }

    pub fn total_cost(&self) -> f64 {
        *self.cost.last().unwrap_or(&0.0)
    }

    /// Largest deviation of `ν² φ'² + cos φ` from `cos φ₀`.
    pub fn energy_drift(&self, p: &ExtremalParams) -> f64 {
        let e0 = p.phi0.cos();
        (0..self.len())
            .map(|k| {
                let dphi = 2.0 * self.eta[k] / p.gap();
                (p.nu * p.nu * dphi * dphi + self.phi[k].cos() - e0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,theta,eta,phi,cost`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,theta,eta,phi,cost\n");
        for k in 0..self.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.t[k], self.theta[k], self.eta[k], self.phi[k], self.cost[k]
            ));
        }
        out
    }
}

/// Right-hand side of the extremal system plus the cost accumulator.
pub fn extremal_rhs(gap: f64, y: &[f64], dy: &mut [f64]) {
    let (theta, eta, phi) = (y[0], y[1], y[2]);
    let (s, c) = (theta - phi).sin_cos();
    dy[0] = s;
    dy[1] = -0.5 * (s + 2.0 * eta * c);
    dy[2] = 2.0 * eta / gap;
    dy[3] = (0.5 * (theta - phi)).cos().powi(2);
}

/// Integrates the extremal on `[0, T]`, sampling `intervals + 1` points.
pub fn integrate_extremal(
    params: &ExtremalParams,
    tol: f64,
    intervals: usize,
) -> Result<ExtremalTrajectory> {
    let init = initial_conditions(params.alpha, params.d)?;
    let n = intervals.max(1);
    let horizon = params.t;
    let times: Vec<f64> = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
    let mut out = ExtremalTrajectory {
        t: vec![0.0],
        theta: vec![init.theta],
        eta: vec![init.eta],
        phi: vec![init.phi],
        cost: vec![0.0],
    };
    let gap = params.gap();
    let mut y = [init.theta, init.eta, init.phi, 0.0];
    let mut next = 1;
    Rk45::with_tol(tol).integrate(
        |_, y, dy| extremal_rhs(gap, y, dy),
        0.0,
        &mut y,
        horizon,
        &times[1..n],
        |t, y| {
            if next <= n && t == times[next] {
                out.t.push(t);
                out.theta.push(y[0]);
                out.eta.push(y[1]);
                out.phi.push(y[2]);
                out.cost.push(y[3]);
                next += 1;
            }
        },
    )?;
    if out.len() != n + 1 {
        return Err(Error::Numerical(format!(
            "extremal sampling recorded {} of {} grid points",
            out.len(),
            n + 1
        )));
    }
    let eta_t = out.eta[n].abs();
    let limit = 1e-7_f64.max(1e3 * tol);
    if eta_t > limit {
        return Err(Error::Residual {
            stage: "transversality",
            residual: eta_t,
            tol: limit,
        });
    }
    Ok(out)
}

/// Synthesized worst-case control for `(a, b)`.
#[derive(Debug, Clone)]
pub struct OptimalControl {
    pub params: ExtremalParams,
    pub trajectory: ExtremalTrajectory,
    /// `c` on `[0, T]`.
    pub base: RankOneSignal,
    /// `2T`-periodic reflected extension.
    pub signal: RankOneSignal,
    pub omega0: DVector<f64>,
    pub mu: f64,
    pub reflection: ReflectionSigns,
    pub seam: ReflectionReport,
    /// `||∫_0^T cc^T - diag(a, b)||_max`.
    pub gram_residual: f64,
}

/// Pendulum pipeline for `0 < a < b`.
pub fn build_optimal_control(a: f64, b: f64) -> Result<OptimalControl> {
    build_optimal_control_with(a, b, EXTREMAL_TOL, GRID_INTERVALS)
}

pub fn build_optimal_control_with(
    a: f64,
    b: f64,
    tol: f64,
    intervals: usize,
) -> Result<OptimalControl> {
    let params = ExtremalParams::from_ab(a, b)?;
    let trajectory = integrate_extremal(&params, tol, intervals)?;
    let base = RankOneSignal::from_angles(params.t, trajectory.phi.clone(), Interp::Cubic, 1.0)?;
    let g = gram(base.as_matrix(), 0.0, params.t)?;
    let target = DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]));
    let gram_residual = (g - target).amax();
    let gram_tol = 1e-6 * (a + b);
    if gram_residual > gram_tol {
        return Err(Error::Residual {
            stage: "gram",
            residual: gram_residual,
            tol: gram_tol,
        });
    }
    let last = trajectory.len() - 1;
    let omega0 = trajectory.omega(0);
    let reflection = detect_reflection(&omega0, &trajectory.omega(last), 1e-6);
    let (signal, seam) = reflect_extend(&base, &reflection.d, 1e-6)?;
    Ok(OptimalControl {
        mu: trajectory.total_cost(),
        params,
        trajectory,
        base,
        signal,
        omega0,
        reflection,
        seam,
        gram_residual,
    })
}

/// `2 ∫_0^ε̄ sin²(ε/2) / sqrt(2μ̄(cos ε - cos ε̄) - cos² ε + cos² ε̄) dε`.
pub fn cost_closed_form(alpha: f64, d: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(d > 0.0) {
        return domain(format!("need α ∈ (0, 1) and d > 0, got ({alpha}, {d})"));
    }
    let gap = 1.0 - alpha + d;
    // cos ε̄ = 1 - 2d/gap
    let eps_bar = 2.0 * (d / gap).sqrt().asin();
    if !(eps_bar > 0.0 && eps_bar < 0.5 * PI) {
        return domain(format!("ε̄ = {eps_bar} lies outside (0, π/2)"));
    }
    let base = 2.0 * alpha / gap;
    // ε = ε̄ sin ψ; cos ε - cos ε̄ = 2 sin((ε̄+ε)/2) sin(ε̄ cos²ψ / (2(1 + sin ψ)))
    let integrand = |psi: f64| {
        let (s, c) = psi.sin_cos();
        let eps = eps_bar * s;
        let g = eps_bar * c * c / (2.0 * (1.0 + s));
        let first = 2.0 * (0.5 * (eps_bar + eps)).sin() * g.sin();
        let second = base + 2.0 * (0.5 * eps).sin().powi(2);
        let ratio = c / first.sqrt();
        2.0 * (0.5 * eps).sin().powi(2) * eps_bar * ratio / second.sqrt()
    };
    Ok(gauss_legendre(0.0, 0.5 * PI, 64, integrand))
}

/// How a value of `μ` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MuSource {
    Pendulum,
    /// Cost of the axis-hopping control; an upper bound on the minimum.
    AxisHopping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuValue {
    pub mu: f64,
    pub source: MuSource,
}

/// `μ(a, b, 2)` from the pendulum pipeline, or the axis-hopping cost `a` when `a = b`.
pub fn mu(a: f64, b: f64) -> Result<MuValue> {
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return domain(format!("need 0 < a <= b, got ({a}, {b})"));
    }
    if a == b {
        return Ok(MuValue {
            mu: a,
            source: MuSource::AxisHopping,
        });
    }
    Ok(MuValue {
        mu: build_optimal_control(a, b)?.mu,
        source: MuSource::Pendulum,
    })
}

/// A minimizing (or, for `a = b`, axis-hopping) control on its own window.
#[derive(Debug, Clone)]
pub struct WindowControl {
    /// Signal on `[0, a + b]` (pendulum) or `[0, 1]` (axis hopping).
    pub signal: MatrixSignal,
    pub omega0: DVector<f64>,
    pub mu: MuValue,
}

pub fn window_control(a: f64, b: f64) -> Result<WindowControl> {
    let m = mu(a, b)?;
    match m.source {
        MuSource::AxisHopping => Ok(WindowControl {
            signal: axis_hopping_control(a, 1.0, 2)?,
            omega0: DVector::from_vec(vec![1.0, 0.0]),
            mu: m,
        }),
        MuSource::Pendulum => {
            let oc = build_optimal_control(a, b)?;
            Ok(WindowControl {
                signal: oc.base.into_matrix(),
                omega0: oc.omega0,
                mu: m,
            })
        }
    }
}
