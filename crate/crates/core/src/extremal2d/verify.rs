//! Pointwise checks of the optimality conditions along a sampled extremal.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;

use super::{extremal_rhs, ExtremalParams, ExtremalTrajectory};
use crate::signals::{detect_reflection, gram, Interp, RankOneSignal};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalReport {
    pub residuals: Vec<Residual>,
    pub mu: f64,
    pub passed: bool,
}

impl ExtremalReport {
    pub fn get(&self, name: &str) -> Option<&Residual> {
        self.residuals.iter().find(|r| r.name == name)
    }
}

fn unit(angle: f64) -> Vector2<f64> {
    let h = 0.5 * angle;
    Vector2::new(h.cos(), h.sin())
}

fn perp(v: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(-v[1], v[0])
}

/// `M = diag(α, -d) - (ω p^T + p ω^T + ω ω^T)` with `p = η ω^⊥`.
pub fn m_matrix(p: &ExtremalParams, theta: f64, eta: f64) -> Matrix2<f64> {
    let w = unit(theta);
    let cov = perp(&w) * eta;
    Matrix2::new(p.alpha, 0.0, 0.0, -p.d)
        - (w * cov.transpose() + cov * w.transpose() + w * w.transpose())
}

/// Checks, at every sample: `M ≤ 0`, `Mc = 0`, rank one, constant spectrum,
/// trace `α - d - 1`, vanishing Hamiltonian `c^T M c` and the adjoint
/// equation; at the endpoints: transversality, `ω_i(0)² = ω_i(T)²`, the seam
/// of the reflected control; over the window: the Gram integral.
pub fn verify_extremal(
    traj: &ExtremalTrajectory,
    params: &ExtremalParams,
    tol: f64,
) -> ExtremalReport {
    let n = traj.len();
    let gap = params.gap();
    let target_trace = params.alpha - params.d - 1.0;
    let (mut mc, mut nsd, mut rank, mut drift, mut trace, mut ham, mut adj) = (
        0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64,
    );
    let mut spectrum0: Option<(f64, f64)> = None;
    let mut dy = [0.0; 4];
    for k in 0..n {
        let (theta, eta, phi) = (traj.theta[k], traj.eta[k], traj.phi[k]);
        let m = m_matrix(params, theta, eta);
        let c = unit(phi);
        mc = mc.max((m * c).norm());
        let ev = m.symmetric_eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        nsd = nsd.max(hi.max(0.0));
        rank = rank.max(if lo < -tol { hi.abs() } else { f64::INFINITY });
        let (l0, h0) = *spectrum0.get_or_insert((lo, hi));
        drift = drift.max((lo - l0).abs()).max((hi - h0).abs());
        trace = trace.max((m.trace() - target_trace).abs());
        ham = ham.max((c.transpose() * m * c)[0].abs());

        extremal_rhs(gap, &[theta, eta, phi, 0.0], &mut dy);
        let (dtheta, deta) = (dy[0], dy[1]);
        let w = unit(theta);
        let wp = perp(&w);
        let cov = wp * eta;
        let s = c * c.transpose();
        let dp = wp * deta - w * (eta * 0.5 * dtheta);
        let dw = wp * (0.5 * dtheta);
        let rhs = s * cov - cov * (w.transpose() * s * w)[0] - dw;
        adj = adj.max((dp - rhs).norm());
    }

    let last = n - 1;
    let transversality = traj.eta[0].abs().max(traj.eta[last].abs());
    let w0 = traj.omega(0);
    let wt = traj.omega(last);
    let quasi = (0..2)
        .map(|i| (w0[i] * w0[i] - wt[i] * wt[i]).abs())
        .fold(0.0, f64::max);

    let signs = detect_reflection(&w0, &wt, 1e-6);
    let c0 = traj.control(0);
    let ct = traj.control(last);
    let dc0 = DVector::from_iterator(2, c0.iter().zip(&signs.d).map(|(x, s)| x * s));
    let seam = (&dc0 - &ct).norm().min((&dc0 + &ct).norm());

    let gram_res = RankOneSignal::from_angles(params.t, traj.phi.clone(), Interp::Cubic, 1.0)
        .and_then(|c| gram(c.as_matrix(), 0.0, params.t))
        .map(|g| {
            let target = DMatrix::from_diagonal(&DVector::from_vec(vec![params.a, params.b]));
            (g - target).amax() / (params.a + params.b)
        })
        .unwrap_or(f64::INFINITY);

    let residuals: Vec<Residual> = [
        ("mc", mc),
        ("negative_semidefinite", nsd),
        ("rank", rank),
        ("spectrum_drift", drift),
        ("trace", trace),
        ("hamiltonian", ham),
        ("adjoint", adj),
        ("transversality", transversality),
        ("quasi_periodicity", quasi),
        ("seam", seam),
        ("gram", gram_res),
    ]
    .into_iter()
    .map(|(name, value)| Residual {
        name,
        value,
        tol,
        passed: value <= tol,
    })
    .collect();
    let passed = residuals.iter().all(|r| r.passed);
    ExtremalReport {
        residuals,
        mu: traj.total_cost(),
        passed,
    }
}
