//! Brute-force estimate of `μ(a, b, 2)` over piecewise-constant rank-one controls.
//!
//! A control is `N` angles on equal cells of `[0, a + b]` with `||c|| = 1`.
//! Its Gram integral has trace `a + b` and eigenvalues `(T/2)(1 ± |z|)`,
//! where `z` is the mean of `e^{iφ_k}`, so the window constraint is the
//! single condition `|z| <= (b - a)/T`.

mod nelder_mead;

pub use nelder_mead::{Minimum, NelderMead};

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::flow::flow_endpoint;
use crate::signals::{Interp, RankOneSignal};

pub const DEFAULT_SEGMENTS: usize = 40;
pub const DEFAULT_SEEDS: usize = 20;
pub const DEFAULT_PENALTY: f64 = 1e4;

/// Tolerance of the flow integration used for every cost evaluation.
pub const COST_TOL: f64 = 1e-9;

/// Allowed violation of the Gram bounds for a reported control.
pub const FEASIBILITY_TOL: f64 = 1e-9;

const REJECTION_BUDGET: usize = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub mu_hat: f64,
    /// Cell angles of the winning control.
    pub angles: Vec<f64>,
    #[serde(skip)]
    pub control: RankOneSignal,
    pub omega0: Vec<f64>,
    pub constraint_residual: f64,
    pub seeds_used: usize,
    pub evaluations: usize,
}

fn mean_phase(angles: &[f64]) -> (f64, f64) {
    let n = angles.len() as f64;
    let (c, s) = angles
        .iter()
        .fold((0.0, 0.0), |(c, s), p| (c + p.cos(), s + p.sin()));
    (c / n, s / n)
}

/// Eigenvalues `(λ_min, λ_max)` of the Gram integral.
pub fn gram_eigenvalues(angles: &[f64], horizon: f64) -> (f64, f64) {
    let (c, s) = mean_phase(angles);
    let z = c.hypot(s);
    (0.5 * horizon * (1.0 - z), 0.5 * horizon * (1.0 + z))
}

fn violation(angles: &[f64], a: f64, b: f64) -> f64 {
    let (lo, hi) = gram_eigenvalues(angles, a + b);
    (a - lo).max(hi - b).max(0.0)
}

/// Exact feasibility has measure zero when `a = b`, so the test is relative.
fn feasible(angles: &[f64], a: f64, b: f64) -> bool {
    violation(angles, a, b) <= 1e-12 * (a + b)
}

/// Gauss–Newton on the cell angles until the mean phase lies in the disc of
/// radius `(b - a)/(a + b)`, which is exactly the Gram constraint.
fn project_to_feasible(angles: &[f64], a: f64, b: f64) -> Option<Vec<f64>> {
    let n = angles.len() as f64;
    let zmax = (b - a) / (a + b);
    let (c0, s0) = mean_phase(angles);
    let z0 = c0.hypot(s0);
    if z0 <= zmax {
        return Some(angles.to_vec());
    }
    let r = zmax * (1.0 - 1e-9);
    let target = (c0 / z0 * r, s0 / z0 * r);
    let mut x = angles.to_vec();
    for _ in 0..60 {
        let (c, s) = mean_phase(&x);
        let res = (c - target.0, s - target.1);
        if res.0.hypot(res.1) <= 1e-15 {
            break;
        }
        // rows of J: d(c)/dφ_j = -sin φ_j / n, d(s)/dφ_j = cos φ_j / n
        let (mut ss, mut cc, mut sc) = (0.0, 0.0, 0.0);
        for p in &x {
            let (sn, cs) = p.sin_cos();
            ss += sn * sn;
            cc += cs * cs;
            sc += sn * cs;
        }
        let (g11, g22, g12) = (ss / (n * n), cc / (n * n), -sc / (n * n));
        let det = g11 * g22 - g12 * g12;
        if !(det.abs() > 1e-300) {
            return None;
        }
        let y1 = (g22 * res.0 - g12 * res.1) / det;
        let y2 = (g11 * res.1 - g12 * res.0) / det;
        for p in x.iter_mut() {
            let (sn, cs) = p.sin_cos();
            *p -= (-sn * y1 + cs * y2) / n;
        }
    }
    feasible(&x, a, b).then_some(x)
}

fn check(a: f64, b: f64, n: usize) -> Result<()> {
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return domain(format!("need 0 < a <= b, got ({a}, {b})"));
    }
    if n == 0 {
        return domain("need at least one segment");
    }
    Ok(())
}

fn control(a: f64, b: f64, angles: Vec<f64>) -> Result<RankOneSignal> {
    RankOneSignal::from_angles(a + b, angles, Interp::Step, 1.0)
}

fn cost(a: f64, b: f64, angles: &[f64], theta0: f64) -> Result<f64> {
    let c = control(a, b, angles.to_vec())?;
    let w0 = DVector::from_vec(vec![(0.5 * theta0).cos(), (0.5 * theta0).sin()]);
    Ok(flow_endpoint(c.as_matrix(), &w0, 0.0, a + b, COST_TOL)?.cost)
}

fn draw_angles(rng: &mut ChaCha8Rng, a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    for _ in 0..REJECTION_BUDGET {
        let angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        if violation(&angles, a, b) == 0.0 {
            return Ok(angles);
        }
        // thin feasible sets (a close to b) are reached by projection
        if n > 1 && (b - a) < 1e-3 * (a + b) {
            if let Some(p) = project_to_feasible(&angles, a, b) {
                return Ok(p);
            }
        }
    }
    Err(Error::Sampling(format!(
        "no feasible control with {n} segments after {REJECTION_BUDGET} draws for (a, b) = ({a}, {b})"
    )))
}

/// Random feasible piecewise-constant control on `N` equal cells of `[0, a + b]`.
pub fn sample_admissible(a: f64, b: f64, n: usize, seed: u64) -> Result<RankOneSignal> {
    check(a, b, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    control(a, b, draw_angles(&mut rng, a, b, n)?)
}

/// Spreads the angles about their mean direction until the Gram bounds hold.
fn dilate_to_feasible(angles: &[f64], a: f64, b: f64) -> Option<Vec<f64>> {
    if feasible(angles, a, b) {
        return Some(angles.to_vec());
    }
    let (c, s) = mean_phase(angles);
    let centre = s.atan2(c);
    let offsets: Vec<f64> = angles
        .iter()
        .map(|p| {
            let d = (p - centre).rem_euclid(2.0 * PI);
            if d > PI {
                d - 2.0 * PI
            } else {
                d
            }
        })
        .collect();
    let spread = |k: f64| -> Vec<f64> { offsets.iter().map(|o| centre + k * o).collect() };
    let feasible = |k: f64| feasible(&spread(k), a, b);
    let mut hi = 1.0;
    while !feasible(hi) {
        hi *= 1.05;
        if hi > 50.0 {
            return None;
        }
    }
    let mut lo = hi / 1.05;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(spread(hi))
}

struct SeedOutcome {
    angles: Vec<f64>,
    theta0: f64,
    value: f64,
    residual: f64,
    evals: usize,
}

/// Cell counts visited before `n`: halving while the count stays even and at least 8.
fn levels(n: usize) -> Vec<usize> {
    let mut out = vec![n];
    let mut k = n;
    while k.is_multiple_of(2) && k / 2 >= 8 && out.len() < 3 {
        k /= 2;
        out.push(k);
    }
    out.reverse();
    out
}

fn run_seed(a: f64, b: f64, n: usize, penalty: f64, seed: u64) -> Result<Option<SeedOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule = levels(n);
    let mut x = draw_angles(&mut rng, a, b, schedule[0])?;
    x.push(rng.random_range(-PI..PI));
    let mut evals = 0;
    let mut step = 0.5;
    for (li, &k) in schedule.iter().enumerate() {
        if li > 0 {
            // each coarse cell splits in two; the Gram integral is unchanged
            let theta0 = x[x.len() - 1];
            let factor = k / schedule[li - 1];
            let mut fine: Vec<f64> = x[..x.len() - 1]
                .iter()
                .flat_map(|p| std::iter::repeat_n(*p, factor))
                .collect();
            fine.push(theta0);
            x = fine;
            step *= 0.5;
        }
        let objective = |x: &[f64]| -> f64 {
            let (angles, theta0) = x.split_at(k);
            let v = violation(angles, a, b);
            match cost(a, b, angles, theta0[0]) {
                Ok(j) => j + 2.0 * penalty * v * v,
                Err(_) => f64::INFINITY,
            }
        };
        let nm = NelderMead {
            ftol: 1e-10,
            xtol: 1e-10,
            max_evals: 150 * (k + 1) * (k + 1) / 4 + 4000,
            restarts: 6,
        };
        let m = nm.minimize(objective, &x, step);
        evals += m.evals;
        x = m.x;
    }
    let (angles, theta0) = x.split_at(n);
    let Some(polished) =
        dilate_to_feasible(angles, a, b).or_else(|| project_to_feasible(angles, a, b))
    else {
        return Ok(None);
    };
    let residual = violation(&polished, a, b);
    let value = cost(a, b, &polished, theta0[0])?;
    Ok(Some(SeedOutcome {
        angles: polished,
        theta0: theta0[0],
        value,
        residual,
        evals,
    }))
}

/// Multi-start Nelder–Mead over cell angles and the initial direction.
pub fn brute_force_mu2(
    a: f64,
    b: f64,
    n: usize,
    n_seeds: usize,
    penalty_weight: f64,
) -> Result<OracleResult> {
    check(a, b, n)?;
    if n < 4 {
        return domain("the oracle needs at least 4 segments");
    }
    if n_seeds == 0 {
        return domain("need at least one seed");
    }
    let seeds: Vec<u64> = (0..n_seeds as u64).collect();
    let run = |&s: &u64| run_seed(a, b, n, penalty_weight, s);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<Option<SeedOutcome>>> = seeds.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<Option<SeedOutcome>>> = seeds.iter().map(run).collect();

    let mut evaluations = 0;
    let mut best: Option<SeedOutcome> = None;
    let mut failures = Vec::new();
    for (seed, out) in seeds.iter().zip(outcomes) {
        match out {
            Ok(Some(o)) => {
                evaluations += o.evals;
                if o.residual <= FEASIBILITY_TOL && best.as_ref().is_none_or(|b| o.value < b.value)
                {
                    best = Some(o);
                }
            }
            Ok(None) => failures.push(format!("seed {seed}: polish could not restore feasibility")),
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let best = best.ok_or_else(|| {
        Error::Oracle(format!(
            "no feasible local minimum; {}",
            failures.join("; ")
        ))
    })?;
    let omega0 = vec![(0.5 * best.theta0).cos(), (0.5 * best.theta0).sin()];
    Ok(OracleResult {
        mu_hat: best.value,
        control: control(a, b, best.angles.clone())?,
        angles: best.angles,
        omega0,
        constraint_residual: best.residual,
        seeds_used: n_seeds,
        evaluations,
    })
}
