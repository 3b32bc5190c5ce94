//! Integration of `x' = -S(t) x` in spherical form.
//!
//! Within each step the linear state is advanced from the current unit
//! direction; afterwards its norm is folded into `log r` and the direction
//! is renormalized, so radii never underflow. The cost
//! `J = ∫ ω^T S ω dt` is accumulated as a separate quadrature state.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::ode::Rk45;
use crate::signals::{MatrixSignal, Piece, SegmentData};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub omega: Vec<f64>,
    pub log_r: f64,
    /// Running value of `∫ ω^T S ω`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Samples are accepted-step endpoints; between them `ω` is interpolated
    /// linearly and renormalized.
    pub interpolation: &'static str,
    /// Number of renormalizations applied to `ω`.
    pub renormalizations: usize,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has samples")
    }

    /// Direction at time `t` (linear interpolation, renormalized).
    pub fn omega_at(&self, t: f64) -> DVector<f64> {
        let s = &self.samples;
        let i = s.partition_point(|p| p.t <= t).clamp(1, s.len().max(2) - 1);
        if s.len() == 1 {
            return DVector::from_vec(s[0].omega.clone());
        }
        let (a, b) = (&s[i - 1], &s[i]);
        let u = if b.t > a.t {
            ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let v = DVector::from_iterator(
            a.omega.len(),
            a.omega.iter().zip(&b.omega).map(|(x, y)| x + u * (y - x)),
        );
        v.normalize()
    }

    /// CSV with header `t,omega_1,...,omega_n,log_r`.
    pub fn to_csv(&self) -> String {
        let n = self.samples.first().map_or(0, |s| s.omega.len());
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",omega_{i}");
        }
        out.push_str(",log_r\n");
        for s in &self.samples {
            let _ = write!(out, "{}", s.t);
            for w in &s.omega {
                let _ = write!(out, ",{w}");
            }
            let _ = writeln!(out, ",{}", s.log_r);
        }
        out
    }
}

/// State at the end of a run, without the sample history.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowEnd {
    pub omega: DVector<f64>,
    pub log_r: f64,
    pub cost: f64,
}

fn check_unit(omega0: &DVector<f64>, dim: usize) -> Result<()> {
    if omega0.len() != dim {
        return domain(format!(
            "initial direction has length {}, expected {dim}",
            omega0.len()
        ));
    }
    if (omega0.norm() - 1.0).abs() > 1e-9 {
        return domain(format!(
            "initial direction has norm {}, expected 1",
            omega0.norm()
        ));
    }
    Ok(())
}

/// `exp(-S τ)` for the constant value of a step piece.
pub(crate) fn cell_propagator(signal: &MatrixSignal, piece: &Piece, tau: f64) -> DMatrix<f64> {
    let n = signal.dim();
    let seg = signal.segment(piece);
    let cell = piece.cell.expect("step piece");
    let mid = seg.node(cell) + 0.5 * seg.spacing();
    if let Some((c, w)) = seg.direction_at(mid) {
        let f = (-w * tau).exp_m1();
        return DMatrix::identity(n, n) + &c * c.transpose() * f;
    }
    let m = seg.matrix_at(mid);
    let eig = m.symmetric_eigen();
    let d = eig.eigenvalues.map(|l| (-l * tau).exp());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

struct Spherical<'a> {
    signal: &'a MatrixSignal,
    rk: Rk45,
    omega: Vec<f64>,
    log_r: f64,
    cost: f64,
    renorms: usize,
    h: Option<f64>,
}

impl<'a> Spherical<'a> {
    fn new(signal: &'a MatrixSignal, omega0: &DVector<f64>, tol: f64) -> Self {
        Self {
            signal,
            rk: Rk45::with_tol(tol),
            omega: omega0.iter().copied().collect(),
            log_r: 0.0,
            cost: 0.0,
            renorms: 0,
            h: None,
        }
    }

    fn run(
        &mut self,
        t0: f64,
        t1: f64,
        mut record: impl FnMut(f64, &[f64], f64, f64),
    ) -> Result<()> {
        let n = self.signal.dim();
        for piece in self.signal.pieces(t0, t1)? {
            let len = piece.end - piece.start;
            if let Some(cell) = piece.cell {
                let seg = self.signal.segment(&piece);
                let mid = seg.node(cell) + 0.5 * seg.spacing();
                match (&seg.data, seg.angle_at(mid)) {
                    (SegmentData::Angles { weight, .. }, Some(phi)) => {
                        let f = (-weight * len).exp_m1();
                        let (c0, c1) = ((0.5 * phi).cos(), (0.5 * phi).sin());
                        let cx = c0 * self.omega[0] + c1 * self.omega[1];
                        self.omega[0] += f * cx * c0;
                        self.omega[1] += f * cx * c1;
                    }
                    _ => match seg.direction_at(mid) {
                        Some((c, w)) => {
                            // exp(-w cc^T τ) x = x + (e^{-wτ} - 1)(c·x) c
                            let f = (-w * len).exp_m1();
                            let cx: f64 = c.iter().zip(&self.omega).map(|(a, b)| a * b).sum();
                            for (x, ci) in self.omega.iter_mut().zip(c.iter()) {
                                *x += f * cx * ci;
                            }
                        }
                        None => {
                            let p = cell_propagator(self.signal, &piece, len);
                            let x = &p * DVector::from_column_slice(&self.omega);
                            self.omega.copy_from_slice(x.as_slice());
                        }
                    },
                }
                let norm = self.omega.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dl = norm.ln();
                self.log_r += dl;
                self.cost -= dl;
                self.omega.iter_mut().for_each(|v| *v /= norm);
                self.renorms += 1;
                record(piece.end, &self.omega, self.log_r, self.cost);
                continue;
            }
            let signal = self.signal;
            let mut y = vec![0.0; n + 1];
            y[..n].copy_from_slice(&self.omega);
            let mut sx = vec![0.0; n];
            let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
                let x = &y[..n];
                signal.apply_in(&piece, t, x, &mut sx);
                let mut q = 0.0;
                let mut xx = 0.0;
                for i in 0..n {
                    dy[i] = -sx[i];
                    q += x[i] * sx[i];
                    xx += x[i] * x[i];
                }
                dy[n] = q / xx;
            };
            let log_r = &mut self.log_r;
            let cost = &mut self.cost;
            let renorms = &mut self.renorms;
            let mut rk = self.rk;
            rk.h_init = self.h;
            let stats = rk.integrate(rhs, piece.start, &mut y, piece.end, &[], |t, y| {
                let norm = y[..n].iter().map(|v| v * v).sum::<f64>().sqrt();
                *log_r += norm.ln();
                *cost += y[n];
                y[n] = 0.0;
                for v in &mut y[..n] {
                    *v /= norm;
                }
                *renorms += 1;
                record(t, &y[..n], *log_r, *cost);
            })?;
            self.h = Some(stats.h_next);
            self.omega.copy_from_slice(&y[..n]);
        }
        Ok(())
    }
}

/// Integrates the spherical system from `ω(t0) = omega0` to `t1`.
pub fn integrate_flow(
    signal: &MatrixSignal,
    omega0: &DVector<f64>,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<Trajectory> {
    check_unit(omega0, signal.dim())?;
    if !(t0 < t1) {
        return domain(format!("integration interval [{t0}, {t1}] is empty"));
    }
    let mut samples = vec![TrajectorySample {
        t: t0,
        omega: omega0.iter().copied().collect(),
        log_r: 0.0,
        cost: 0.0,
    }];
    let mut sph = Spherical::new(signal, omega0, tol);
    sph.run(t0, t1, |t, w, l, c| {
        samples.push(TrajectorySample {
            t,
            omega: w.to_vec(),
            log_r: l,
            cost: c,
        })
    })?;
    Ok(Trajectory {
        samples,
        interpolation: "linear-renormalized",
        renormalizations: sph.renorms,
    })
}

/// Like [`integrate_flow`] but keeps only the final state.
pub fn flow_endpoint(
    signal: &MatrixSignal,
    omega0: &DVector<f64>,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<FlowEnd> {
    check_unit(omega0, signal.dim())?;
    if !(t0 <= t1) {
        return domain(format!("integration interval [{t0}, {t1}] is reversed"));
    }
    let mut sph = Spherical::new(signal, omega0, tol);
    sph.run(t0, t1, |_, _, _, _| {})?;
    Ok(FlowEnd {
        omega: DVector::from_vec(sph.omega),
        log_r: sph.log_r,
        cost: sph.cost,
    })
}

/// `J(S, ω0) = ∫_0^T ω^T S ω dt`.
pub fn cost_j(signal: &MatrixSignal, omega0: &DVector<f64>, t: f64, tol: f64) -> Result<f64> {
    Ok(flow_endpoint(signal, omega0, 0.0, t, tol)?.cost)
}

/// `Φ_S(t1, t0)`.
pub fn fundamental_matrix(
    signal: &MatrixSignal,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<DMatrix<f64>> {
    let n = signal.dim();
    if !(t0 <= t1) {
        return domain(format!("interval [{t0}, {t1}] is reversed"));
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    let rk = Rk45::with_tol(tol);
    let mut h = None;
    for piece in signal.pieces(t0, t1)? {
        let len = piece.end - piece.start;
        if piece.cell.is_some() {
            m = cell_propagator(signal, &piece, len) * m;
            continue;
        }
        let mut y: Vec<f64> = m.iter().copied().collect();
        let mut sx = vec![0.0; n];
        let mut rk = rk;
        rk.h_init = h;
        let stats = rk.integrate(
            |t, y, dy| {
                for j in 0..n {
                    let col = &y[j * n..(j + 1) * n];
                    signal.apply_in(&piece, t, col, &mut sx);
                    for i in 0..n {
                        dy[j * n + i] = -sx[i];
                    }
                }
            },
            piece.start,
            &mut y,
            piece.end,
            &[],
            |_, _| {},
        )?;
        h = Some(stats.h_next);
        m = DMatrix::from_column_slice(n, n, &y);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayMethod {
    Monodromy,
    /// Finite-horizon surrogate: slope of `ln ||Φ(t_k, 0)||`.
    Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    pub rate: f64,
    pub horizon: f64,
    pub method: DecayMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySummary {
    pub monodromy: Option<DecayReport>,
    pub slope: DecayReport,
}

impl DecaySummary {
    /// Monodromy estimate when available, otherwise the slope estimate.
    pub fn best(&self) -> DecayReport {
        self.monodromy.unwrap_or(self.slope)
    }
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().singular_values().max()
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Exponential decay rate of the flow.
///
/// Periodic signals get the monodromy rate `-ln ρ(Φ(P,0)) / P` plus the
/// slope diagnostic over `n_periods`. Aperiodic signals need `horizon`,
/// which is split into `n_periods` chunks for the slope estimate.
pub fn decay_rate(
    signal: &MatrixSignal,
    n_periods: usize,
    horizon: Option<f64>,
    tol: f64,
) -> Result<DecaySummary> {
    if n_periods == 0 {
        return domain("need at least one period");
    }
    let (chunk, monodromy) = match signal.period() {
        Some(p) => {
            let phi = fundamental_matrix(signal, 0.0, p, tol)?;
            let rho = spectral_radius(&phi);
            if !(rho > 0.0) {
                return Err(Error::Numerical("monodromy matrix is singular".into()));
            }
            (p, Some(phi))
        }
        None => {
            let h = horizon.ok_or_else(|| {
                Error::Domain("aperiodic signal: an explicit horizon is required".into())
            })?;
            (h / n_periods as f64, None)
        }
    };
    let n = signal.dim();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut log_norm = 0.0;
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for k in 1..=n_periods {
        let step = match &monodromy {
            Some(phi) => phi.clone(),
            None => fundamental_matrix(signal, chunk * (k - 1) as f64, chunk * k as f64, tol)?,
        };
        m = step * m;
        let norm = spectral_norm(&m);
        if !(norm > 0.0) {
            return Err(Error::Numerical(
                "transition matrix collapsed to zero".into(),
            ));
        }
        log_norm += norm.ln();
        m /= norm;
        xs.push(chunk * k as f64);
        ys.push(log_norm);
    }
    let total = chunk * n_periods as f64;
    let slope_report = DecayReport {
        rate: -slope(&xs, &ys),
        horizon: total,
        method: DecayMethod::Slope,
    };
    let mono = monodromy.map(|phi| DecayReport {
        rate: -spectral_radius(&phi).ln() / chunk,
        horizon: chunk,
        method: DecayMethod::Monodromy,
    });
    Ok(DecaySummary {
        monodromy: mono,
        slope: slope_report,
    })
}
