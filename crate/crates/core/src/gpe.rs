//! Generalized persistent excitation: windows `[τ_ℓ, τ_{ℓ+1}]` with
//! `a_ℓ I <= ∫ S <= b_ℓ I`.
//!
//! The class is GAS iff `Σ a_ℓ / (1 + b_ℓ²)` diverges. When it converges,
//! chaining the per-window minimizers, each rotated to start from the
//! direction reached so far, gives trajectories that freeze at a nonzero
//! norm `exp(-Σ μ_ℓ)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::extremal2d::{window_control, MuSource};
use crate::flow::flow_endpoint;
use crate::signals::{conjugate, time_rescale, MatrixSignal, Segment};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const DEFAULT_PREFIX: usize = 50;

/// Flow tolerance used when chaining and measuring windows.
pub const GPE_FLOW_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Diverges,
    Converges,
    Undetermined,
}

/// Window bounds `(a_ℓ, b_ℓ)` on `[τ_ℓ, τ_{ℓ+1}]`; `tau_seq` has one more
/// entry than `a_seq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GPESchedule {
    #[serde(alias = "a")]
    pub a_seq: Vec<f64>,
    #[serde(alias = "b")]
    pub b_seq: Vec<f64>,
    #[serde(alias = "tau")]
    pub tau_seq: Vec<f64>,
    /// Analytic verdict on the series, when the caller knows it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl GPESchedule {
    pub fn new(
        a_seq: Vec<f64>,
        b_seq: Vec<f64>,
        tau_seq: Vec<f64>,
        verdict: Option<Verdict>,
    ) -> Result<Self> {
        let s = Self {
            a_seq,
            b_seq,
            tau_seq,
            verdict,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.a_seq.len();
        if self.b_seq.len() != len || self.tau_seq.len() != len + 1 {
            return domain(format!(
                "schedule needs len(b) = len(a) = {len} and len(tau) = {}",
                len + 1
            ));
        }
        for (l, (&a, &b)) in self.a_seq.iter().zip(&self.b_seq).enumerate() {
            if !(a > 0.0 && a <= b && b.is_finite()) {
                return domain(format!("window {l}: need 0 < a <= b, got ({a}, {b})"));
            }
        }
        if !(self.tau_seq.first().is_some_and(|&t| t >= 0.0)) {
            return domain("tau must start at a nonnegative time");
        }
        if self
            .tau_seq
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return domain("tau must be strictly increasing");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.a_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_seq.is_empty()
    }

    /// Unit windows `[ℓ, ℓ + 1]`, `ℓ = 1..=len`, with `a_ℓ`, `b_ℓ` given as
    /// functions of `ℓ`.
    pub fn unit_windows(
        len: usize,
        a: impl Fn(usize) -> f64,
        b: impl Fn(usize) -> f64,
        verdict: Option<Verdict>,
    ) -> Result<Self> {
        Self::new(
            (1..=len).map(&a).collect(),
            (1..=len).map(&b).collect(),
            (1..=len + 1).map(|l| l as f64).collect(),
            verdict,
        )
    }

    /// `a_ℓ = 1/ℓ²`, `b_ℓ = 1`.
    pub fn convergent(len: usize) -> Result<Self> {
        Self::unit_windows(
            len,
            |l| 1.0 / (l * l) as f64,
            |_| 1.0,
            Some(Verdict::Converges),
        )
    }

    /// `a_ℓ = b_ℓ = 1`.
    pub fn divergent(len: usize) -> Result<Self> {
        Self::unit_windows(len, |_| 1.0, |_| 1.0, Some(Verdict::Diverges))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    /// Partial sums of `a_ℓ / (1 + b_ℓ²)`, one per window.
    pub partial_sums: Vec<f64>,
    pub verdict: Verdict,
}

/// Partial sums over the first `prefix` windows. Finite sums cannot decide
/// convergence, so the verdict is the schedule's tag or `Undetermined`.
pub fn series_criterion(schedule: &GPESchedule, prefix: usize) -> Result<SeriesReport> {
    if prefix > schedule.len() {
        return domain(format!(
            "prefix {prefix} exceeds schedule length {}",
            schedule.len()
        ));
    }
    let mut acc = 0.0;
    let partial_sums = schedule.a_seq[..prefix]
        .iter()
        .zip(&schedule.b_seq)
        .map(|(a, b)| {
            acc += a / (1.0 + b * b);
            acc
        })
        .collect();
    Ok(SeriesReport {
        partial_sums,
        verdict: schedule.verdict.unwrap_or(Verdict::Undetermined),
    })
}

#[derive(Debug, Clone)]
pub struct GpeSignal {
    pub signal: MatrixSignal,
    pub omega0: DVector<f64>,
    /// `τ_0, ..., τ_L`.
    pub taus: Vec<f64>,
    /// `μ(a_ℓ, b_ℓ)` per window.
    pub mus: Vec<f64>,
    pub sources: Vec<MuSource>,
    /// `-ln` of the contraction measured while chaining, per window.
    pub window_decay: Vec<f64>,
}

fn rotation(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn angle_of(v: &DVector<f64>) -> f64 {
    v[1].atan2(v[0])
}

/// Chains the per-window minimizers over the first `prefix` windows.
pub fn build_gpe_signal(schedule: &GPESchedule, prefix: usize) -> Result<GpeSignal> {
    schedule.validate()?;
    if prefix == 0 || prefix > schedule.len() {
        return domain(format!(
            "prefix must be in 1..={}, got {prefix}",
            schedule.len()
        ));
    }
    let idx: Vec<usize> = (0..prefix).collect();
    let synth = |&l: &usize| {
        let (a, b) = (schedule.a_seq[l], schedule.b_seq[l]);
        let len = schedule.tau_seq[l + 1] - schedule.tau_seq[l];
        window_control(a, b)
            .and_then(|w| Ok((time_rescale(&w.signal, len)?, w.omega0, w.mu)))
            .map_err(|e| Error::Window {
                index: l,
                source: Box::new(e),
            })
    };
    #[cfg(feature = "parallel")]
    let windows: Vec<_> = idx.par_iter().map(synth).collect();
    #[cfg(not(feature = "parallel"))]
    let windows: Vec<_> = idx.iter().map(synth).collect();

    let tau0 = schedule.tau_seq[0];
    let mut segments: Vec<Segment> = Vec::new();
    if tau0 > 0.0 {
        segments.extend(MatrixSignal::zero(2, tau0)?.shifted_segments(0.0));
    }
    let omega0 = DVector::from_vec(vec![1.0, 0.0]);
    let mut reached = omega0.clone();
    let (mut mus, mut sources, mut window_decay) = (vec![], vec![], vec![]);
    for (l, w) in windows.into_iter().enumerate() {
        let (signal, w0, m) = w?;
        let u = rotation(angle_of(&reached) - angle_of(&w0));
        let wrap = |e: Error| Error::Window {
            index: l,
            source: Box::new(e),
        };
        let rotated = conjugate(&signal, &u).map_err(wrap)?;
        let end = flow_endpoint(&rotated, &reached, 0.0, rotated.horizon(), GPE_FLOW_TOL)
            .map_err(wrap)?;
        reached = end.omega;
        window_decay.push(-end.log_r);
        mus.push(m.mu);
        sources.push(m.source);
        segments.extend(rotated.shifted_segments(schedule.tau_seq[l]));
    }
    let signal = MatrixSignal::new(2, segments, None)?;
    Ok(GpeSignal {
        signal,
        omega0,
        taus: schedule.tau_seq[..=prefix].to_vec(),
        mus,
        sources,
        window_decay,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormRow {
    pub index: usize,
    pub tau: f64,
    pub norm: f64,
    pub predicted_norm: f64,
    /// `Σ_{k<ℓ} μ_k`.
    pub partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub rows: Vec<NormRow>,
    /// `exp(-Σ μ_ℓ)` over the whole prefix.
    pub limit_estimate: f64,
    /// Largest `|norm / predicted - 1|`.
    pub max_rel_dev: f64,
}

impl NormReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,tau,norm,predicted_norm,partial_sum\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:e},{:e},{}",
                r.index, r.tau, r.norm, r.predicted_norm, r.partial_sum
            );
        }
        out
    }
}

/// `||Φ(τ_ℓ, 0) ω_0||` for `ℓ = 0..=L`, integrated window by window, next to
/// `exp(-Σ_{k<ℓ} μ_k)`.
pub fn asymptotic_norm(gpe: &GpeSignal) -> Result<NormReport> {
    let mut omega = gpe.omega0.clone();
    let mut log_r = 0.0;
    let mut t = 0.0;
    let first = gpe.taus[0];
    if first > 0.0 {
        let end = flow_endpoint(&gpe.signal, &omega, 0.0, first, GPE_FLOW_TOL)?;
        omega = end.omega;
        log_r += end.log_r;
        t = first;
    }
    let mut rows = vec![NormRow {
        index: 0,
        tau: t,
        norm: log_r.exp(),
        predicted_norm: 1.0,
        partial_sum: 0.0,
    }];
    let mut partial = 0.0;
    let mut max_rel_dev = (log_r.exp() - 1.0).abs();
    for (l, w) in gpe.taus.windows(2).enumerate() {
        let end = flow_endpoint(&gpe.signal, &omega, w[0], w[1], GPE_FLOW_TOL)?;
        omega = end.omega;
        log_r += end.log_r;
        partial += gpe.mus[l];
        let (norm, predicted) = (log_r.exp(), (-partial).exp());
        max_rel_dev = max_rel_dev.max((norm / predicted - 1.0).abs());
        rows.push(NormRow {
            index: l + 1,
            tau: w[1],
            norm,
            predicted_norm: predicted,
            partial_sum: partial,
        });
    }
    Ok(NormReport {
        rows,
        limit_estimate: (-partial).exp(),
        max_rel_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::verify_int;

    #[test]
    fn series_examples() {
        let s = series_criterion(&GPESchedule::divergent(10).unwrap(), 10).unwrap();
        assert_eq!(s.partial_sums[9], 5.0);
        assert_eq!(s.verdict, Verdict::Diverges);
        let s =
            GPESchedule::unit_windows(5, |l| 1.0 / l as f64, |l| (l as f64).sqrt(), None).unwrap();
        let r = series_criterion(&s, 5).unwrap();
        assert_eq!(r.verdict, Verdict::Undetermined);
        assert!(series_criterion(&s, 6).is_err());
    }

    #[test]
    fn single_window() {
        let s = GPESchedule::new(vec![1.0], vec![3.0], vec![0.0, 2.0], None).unwrap();
        let g = build_gpe_signal(&s, 1).unwrap();
        let r = asymptotic_norm(&g).unwrap();
        let want = (-crate::extremal2d::mu(1.0, 3.0).unwrap().mu).exp();
        assert!((r.rows[1].norm - want).abs() < 1e-8, "{:?}", r.rows);
        assert!(
            verify_int(&g.signal, 1.0, 3.0, 2.0, 1e-8)
                .unwrap()
                .satisfies
        );
    }

    #[test]
    fn bad_schedules() {
        assert!(GPESchedule::new(vec![2.0], vec![1.0], vec![0.0, 1.0], None).is_err());
        assert!(GPESchedule::new(vec![1.0], vec![1.0], vec![1.0, 1.0], None).is_err());
        assert!(GPESchedule::new(vec![1.0], vec![1.0], vec![0.0], None).is_err());
        assert!(
            GPESchedule::from_json(r#"{"a":[0.5],"b":[1],"tau":[1,2],"verdict":"converges"}"#)
                .is_ok()
        );
    }
}
