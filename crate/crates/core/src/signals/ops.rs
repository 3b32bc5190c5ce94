use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{Interp, MatrixSignal, Piece, RankOneSignal, Segment, SegmentData};
use crate::error::{domain, Error, Result};
use crate::quad::gl5_nodes;

/// Quadrature panels per segment (lower bound; panels also align to samples).
pub const PANELS_PER_SEGMENT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PEWindowReport {
    pub window_start: f64,
    pub gram_eigen_min: f64,
    pub gram_eigen_max: f64,
    pub satisfies: bool,
}

/// Panel boundaries covering local interval `[lo, hi]` of a smooth segment.
pub(crate) fn smooth_panels(seg: &Segment, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let m = seg.data.len();
    let cells = m.saturating_sub(1).max(1);
    let sub = PANELS_PER_SEGMENT.div_ceil(cells);
    let width = seg.duration() / (cells * sub) as f64;
    let total = cells * sub;
    let first = (((lo - seg.t0) / width).floor().max(0.0) as usize).min(total - 1);
    let mut out = Vec::new();
    let mut k = first;
    let mut a = lo;
    while a < hi && k < total {
        let edge = if k + 1 == total {
            seg.t1
        } else {
            seg.t0 + width * (k + 1) as f64
        };
        let b = edge.min(hi);
        if b > a {
            out.push((a, b));
        }
        a = b.max(a);
        k += 1;
    }
    if a < hi {
        out.push((a, hi));
    }
    out
}

/// Integrates `f(S(t))` over a piece, `f` returning a matrix contribution.
fn integrate_piece(signal: &MatrixSignal, piece: &Piece, acc: &mut DMatrix<f64>) {
    let len = piece.end - piece.start;
    if let Some(m) = signal.cell_matrix(piece) {
        *acc += m * len;
        return;
    }
    let seg = signal.segment(piece);
    let (lo, hi) = (piece.start - piece.shift, piece.end - piece.shift);
    match &seg.data {
        SegmentData::Angles { weight, .. } => {
            let (mut s, mut cs, mut sn) = (0.0, 0.0, 0.0);
            for (a, b) in smooth_panels(seg, lo, hi) {
                gl5_nodes(a, b, |t, w| {
                    let phi = seg.angle_at(t).unwrap_or(0.0);
                    s += w;
                    cs += w * phi.cos();
                    sn += w * phi.sin();
                });
            }
            let h = 0.5 * weight;
            acc[(0, 0)] += h * (s + cs);
            acc[(1, 1)] += h * (s - cs);
            acc[(0, 1)] += h * sn;
            acc[(1, 0)] += h * sn;
        }
        _ => {
            for (a, b) in smooth_panels(seg, lo, hi) {
                gl5_nodes(a, b, |t, w| {
                    *acc += seg.matrix_at(t) * w;
                });
            }
        }
    }
}

/// `∫_{t0}^{t1} S(τ) dτ`.
pub fn gram(signal: &MatrixSignal, t0: f64, t1: f64) -> Result<DMatrix<f64>> {
    if !(t0 < t1) {
        return domain(format!("gram needs t0 < t1, got [{t0}, {t1}]"));
    }
    let n = signal.dim();
    let mut acc = DMatrix::zeros(n, n);
    for piece in signal.pieces(t0, t1)? {
        integrate_piece(signal, &piece, &mut acc);
    }
    let sym = (&acc + acc.transpose()) * 0.5;
    Ok(sym)
}

fn eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let ev = m.clone().symmetric_eigenvalues();
    (ev.min(), ev.max())
}

fn window_report(
    signal: &MatrixSignal,
    start: f64,
    a: f64,
    b: f64,
    t: f64,
    tol: f64,
) -> Result<PEWindowReport> {
    let g = gram(signal, start, start + t)?;
    let (lo, hi) = eigen_range(&g);
    Ok(PEWindowReport {
        window_start: start,
        gram_eigen_min: lo,
        gram_eigen_max: hi,
        satisfies: a - tol <= lo && hi <= b + tol,
    })
}

fn check_bounds(a: f64, b: f64, t: f64) -> Result<()> {
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return domain(format!("bounds must satisfy 0 < a <= b, got ({a}, {b})"));
    }
    if !(t > 0.0) {
        return domain(format!("window length must be positive, got {t}"));
    }
    Ok(())
}

/// Checks `a I <= ∫_0^T S <= b I`.
pub fn verify_int(
    signal: &MatrixSignal,
    a: f64,
    b: f64,
    t: f64,
    tol: f64,
) -> Result<PEWindowReport> {
    check_bounds(a, b, t)?;
    window_report(signal, 0.0, a, b, t, tol)
}

/// Checks `a I <= ∫_s^{s+T} S <= b I` for every start `s`.
pub fn verify_pe(
    signal: &MatrixSignal,
    a: f64,
    b: f64,
    t: f64,
    starts: &[f64],
    tol: f64,
) -> Result<Vec<PEWindowReport>> {
    check_bounds(a, b, t)?;
    starts
        .iter()
        .map(|&s| window_report(signal, s, a, b, t, tol))
        .collect()
}

/// Converts every segment to matrix samples and applies `f` to each.
fn map_matrices(
    signal: &MatrixSignal,
    dim: usize,
    f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
) -> Result<MatrixSignal> {
    let segments = signal
        .segments()
        .iter()
        .map(|s| {
            Segment::new(
                s.t0,
                s.t1,
                s.interp,
                SegmentData::Matrices(s.matrix_samples().iter().map(&f).collect()),
            )
        })
        .collect();
    MatrixSignal::new(dim, segments, signal.period())
}

#[derive(Debug, Clone, Copy)]
pub struct NormalizeOptions {
    /// Lower PE bound used for the positivity mixing; without it a trace
    /// that vanishes on an interval is an error.
    pub a: Option<f64>,
    /// Mixing strength as a fraction of `a`.
    pub eps_rel: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            a: None,
            eps_rel: 1e-8,
        }
    }
}

/// True when some piece has identically vanishing trace.
fn has_zero_trace_interval(signal: &MatrixSignal, scale: f64) -> Result<bool> {
    let thresh = 1e-14 * scale.max(f64::MIN_POSITIVE);
    for piece in signal.pieces(0.0, signal.horizon())? {
        if let Some(m) = signal.cell_matrix(&piece) {
            if m.trace().abs() <= thresh {
                return Ok(true);
            }
            continue;
        }
        let seg = signal.segment(&piece);
        for (a, b) in smooth_panels(seg, piece.start - piece.shift, piece.end - piece.shift) {
            let mut max_tr: f64 = 0.0;
            gl5_nodes(a, b, |t, _| max_tr = max_tr.max(seg.trace_at(t).abs()));
            if max_tr <= thresh {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Reparametrizes time so that the trace becomes constant.
///
/// The result has trace `𝒯/T` everywhere, where `𝒯 = ∫_0^T Tr S`, and the
/// same Gram integral over `[0, T]`.
pub fn normalize_trace(signal: &MatrixSignal, opts: &NormalizeOptions) -> Result<MatrixSignal> {
    let horizon = signal.horizon();
    let n = signal.dim();
    let total = gram(signal, 0.0, horizon)?.trace();
    if !(total > 0.0) {
        return Err(Error::Numerical("trace integral vanishes".into()));
    }
    let mixed;
    let mut signal = signal;
    if has_zero_trace_interval(signal, total / horizon)? {
        let Some(a) = opts.a else {
            return Err(Error::Numerical(
                "trace vanishes on an interval; pass the lower bound a to enable mixing".into(),
            ));
        };
        let eps = opts.eps_rel * a;
        let scale = a / (a + eps);
        let shift = eps / horizon;
        mixed = map_matrices(signal, n, |m| (m + DMatrix::identity(n, n) * shift) * scale)?;
        signal = &mixed;
        if has_zero_trace_interval(signal, total / horizon)? {
            return Err(Error::Numerical(
                "trace vanishes on an interval after mixing".into(),
            ));
        }
    }
    let total = gram(signal, 0.0, horizon)?.trace();
    let level = total / horizon;
    // τ(t) = (T/𝒯) ∫_0^t Tr S
    let to_tau = horizon / total;

    let mut out = Vec::new();
    let mut tau = 0.0;
    for seg in signal.segments() {
        match &seg.data {
            SegmentData::Angles { angles, weight } => {
                let t1 = tau + to_tau * weight * seg.duration();
                out.push(Segment::new(
                    tau,
                    t1,
                    seg.interp,
                    SegmentData::Angles {
                        angles: angles.clone(),
                        weight: level,
                    },
                ));
                tau = t1;
            }
            SegmentData::Vectors { vectors, weight } => {
                let t1 = tau + to_tau * weight * seg.duration();
                out.push(Segment::new(
                    tau,
                    t1,
                    seg.interp,
                    SegmentData::Vectors {
                        vectors: vectors.clone(),
                        weight: level,
                    },
                ));
                tau = t1;
            }
            SegmentData::Matrices(ms) if seg.interp == Interp::Step => {
                let traces: Vec<f64> = ms.iter().map(|m| m.trace()).collect();
                let uniform = traces
                    .iter()
                    .all(|t| (t - traces[0]).abs() <= 1e-12 * traces[0].abs());
                let scaled: Vec<DMatrix<f64>> = ms
                    .iter()
                    .zip(&traces)
                    .map(|(m, tr)| m * (level / tr))
                    .collect();
                if uniform {
                    let t1 = tau + to_tau * traces[0] * seg.duration();
                    out.push(Segment::new(
                        tau,
                        t1,
                        Interp::Step,
                        SegmentData::Matrices(scaled),
                    ));
                    tau = t1;
                } else {
                    let h = seg.spacing();
                    for (m, tr) in scaled.into_iter().zip(&traces) {
                        let t1 = tau + to_tau * tr * h;
                        if t1 > tau {
                            out.push(Segment::new(
                                tau,
                                t1,
                                Interp::Step,
                                SegmentData::Matrices(vec![m]),
                            ));
                        }
                        tau = t1;
                    }
                }
            }
            SegmentData::Matrices(ms) => {
                let (seg_out, t1) = resample_cubic(seg, ms.len(), tau, to_tau, level)?;
                out.push(seg_out);
                tau = t1;
            }
        }
    }
    if let Some(last) = out.last_mut() {
        last.t1 = horizon;
    }
    MatrixSignal::new(n, out, signal.period())
}

/// Resamples a smooth matrix segment on a uniform grid in the new time.
fn resample_cubic(
    seg: &Segment,
    m: usize,
    tau0: f64,
    to_tau: f64,
    level: f64,
) -> Result<(Segment, f64)> {
    let panels = smooth_panels(seg, seg.t0, seg.t1);
    let mut cum = Vec::with_capacity(panels.len() + 1);
    cum.push(0.0);
    for &(a, b) in &panels {
        let mut s = 0.0;
        gl5_nodes(a, b, |t, w| s += w * seg.trace_at(t));
        cum.push(cum.last().unwrap() + s);
    }
    let seg_total = *cum.last().unwrap();
    let tau1 = tau0 + to_tau * seg_total;
    let inverse = |target: f64| -> f64 {
        if target <= 0.0 {
            return seg.t0;
        }
        if target >= seg_total {
            return seg.t1;
        }
        let k = cum.partition_point(|&c| c <= target).clamp(1, panels.len()) - 1;
        let (pa, pb) = panels[k];
        let need = target - cum[k];
        let (mut lo, mut hi) = (pa, pb);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let mut s = 0.0;
            gl5_nodes(pa, mid, |t, w| s += w * seg.trace_at(t));
            if s < need {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let mut samples = Vec::with_capacity(m);
    let nudge = 1e-7 * seg.spacing();
    for j in 0..m {
        let frac = if m > 1 {
            j as f64 / (m - 1) as f64
        } else {
            0.5
        };
        let t = inverse(frac * seg_total);
        let mut s = seg.matrix_at(t);
        let mut tr = s.trace();
        if !(tr > 1e-300) {
            let probe = if t + nudge <= seg.t1 {
                t + nudge
            } else {
                t - nudge
            };
            s = seg.matrix_at(probe);
            tr = s.trace();
            if !(tr > 0.0) {
                return Err(Error::Numerical(format!(
                    "trace vanishes around t = {t} and cannot be normalized"
                )));
            }
        }
        samples.push(s * (level / tr));
    }
    Ok((
        Segment::new(tau0, tau1, Interp::Cubic, SegmentData::Matrices(samples)),
        tau1,
    ))
}

/// `diag(S, (a/T) I_{m-n})`.
pub fn embed_signal(signal: &MatrixSignal, m: usize, a: f64, t: f64) -> Result<MatrixSignal> {
    let n = signal.dim();
    if m < n {
        return domain(format!("cannot embed dimension {n} into {m}"));
    }
    if m == n {
        return Ok(signal.clone());
    }
    if !(t > 0.0) || !(a >= 0.0) {
        return domain("embedding needs a >= 0 and T > 0");
    }
    let fill = a / t;
    map_matrices(signal, m, |s| {
        let mut out = DMatrix::zeros(m, m);
        out.view_mut((0, 0), (n, n)).copy_from(s);
        for i in n..m {
            out[(i, i)] = fill;
        }
        out
    })
}

/// Piecewise-constant control `(a n / T) e_j e_j^T` on `[(j-1)T/n, jT/n)`.
pub fn axis_hopping_control(a: f64, t: f64, n: usize) -> Result<MatrixSignal> {
    if !(a > 0.0) || !(t > 0.0) || n == 0 {
        return domain(format!(
            "axis hopping needs a > 0, T > 0, n >= 1 (got {a}, {t}, {n})"
        ));
    }
    let vectors = (0..n)
        .map(|j| {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            e
        })
        .collect();
    MatrixSignal::new(
        n,
        vec![Segment::new(
            0.0,
            t,
            Interp::Step,
            SegmentData::Vectors {
                vectors,
                weight: a * n as f64 / t,
            },
        )],
        None,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionSigns {
    pub d: Vec<f64>,
    /// Components too small to read a sign from; their entry defaults to +1.
    pub ambiguous: Vec<usize>,
}

/// Reads `D` from `w(T) = D w(0)`, using components above `threshold` only.
pub fn detect_reflection(w0: &DVector<f64>, wt: &DVector<f64>, threshold: f64) -> ReflectionSigns {
    let mut d = Vec::with_capacity(w0.len());
    let mut ambiguous = Vec::new();
    for i in 0..w0.len() {
        if w0[i].abs() > threshold {
            d.push(if w0[i] * wt[i] >= 0.0 { 1.0 } else { -1.0 });
        } else {
            d.push(1.0);
            ambiguous.push(i);
        }
    }
    ReflectionSigns { d, ambiguous }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionReport {
    /// `min ||D c(0) ∓ c(T)||`.
    pub seam_residual: f64,
    /// `+1` if `D c(0) = c(T)`, `-1` if `D c(0) = -c(T)`.
    pub seam_sign: f64,
}

fn reflect_angle(phi: f64, d: &[f64]) -> f64 {
    match (d[0] > 0.0, d[1] > 0.0) {
        (true, true) => phi,
        (true, false) => -phi,
        (false, true) => 2.0 * std::f64::consts::PI - phi,
        (false, false) => phi + 2.0 * std::f64::consts::PI,
    }
}

/// Extends `c` on `[0, T]` by `D c(t - T)` on `[T, 2T]`, with period `2T`.
pub fn reflect_extend(
    c: &RankOneSignal,
    d: &[f64],
    tol: f64,
) -> Result<(RankOneSignal, ReflectionReport)> {
    let n = c.dim();
    if d.len() != n || d.iter().any(|x| x.abs() != 1.0) {
        return domain("D must be a diagonal of ±1 entries matching the dimension");
    }
    let horizon = c.horizon();
    let (c0, _) = c.direction(0.0)?;
    let (ct, _) = c.direction(horizon)?;
    let dc0 = DVector::from_iterator(n, c0.iter().zip(d).map(|(x, s)| x * s));
    let plus = (&dc0 - &ct).norm();
    let minus = (&dc0 + &ct).norm();
    let report = ReflectionReport {
        seam_residual: plus.min(minus),
        seam_sign: if plus <= minus { 1.0 } else { -1.0 },
    };
    if report.seam_residual > tol {
        return Err(Error::Construction(format!(
            "seam mismatch {:e} exceeds tolerance {tol:e}",
            report.seam_residual
        )));
    }
    let base = c.as_matrix();
    let mut segments: Vec<Segment> = base.segments().to_vec();
    for s in base.shifted_segments(horizon) {
        let data = match s.data {
            SegmentData::Angles { angles, weight } => SegmentData::Angles {
                angles: angles.iter().map(|p| reflect_angle(*p, d)).collect(),
                weight,
            },
            SegmentData::Vectors { vectors, weight } => SegmentData::Vectors {
                vectors: vectors
                    .into_iter()
                    .map(|v| DVector::from_iterator(n, v.iter().zip(d).map(|(x, s)| x * s)))
                    .collect(),
                weight,
            },
            SegmentData::Matrices(_) => unreachable!("rank-one signal"),
        };
        segments.push(Segment::new(s.t0, s.t1, s.interp, data));
    }
    let sig = MatrixSignal::new(n, segments, Some(2.0 * horizon))?;
    Ok((RankOneSignal::new(sig)?, report))
}

fn pad_segment(
    seg: &Segment,
    t0: f64,
    t1: f64,
    before: usize,
    after: usize,
    factor: f64,
) -> Segment {
    let n = seg.data.dim().unwrap_or(0);
    let m = before + n + after;
    let data = match &seg.data {
        SegmentData::Angles { angles, weight } if m == 2 => SegmentData::Angles {
            angles: angles.clone(),
            weight: weight * factor,
        },
        SegmentData::Matrices(ms) => SegmentData::Matrices(
            ms.iter()
                .map(|s| {
                    let mut out = DMatrix::zeros(m, m);
                    out.view_mut((before, before), (n, n))
                        .copy_from(&(s * factor));
                    out
                })
                .collect(),
        ),
        rank_one => {
            let weight = match rank_one {
                SegmentData::Angles { weight, .. } | SegmentData::Vectors { weight, .. } => *weight,
                SegmentData::Matrices(_) => unreachable!(),
            };
            let vectors = seg
                .vector_samples()
                .unwrap_or_default()
                .into_iter()
                .map(|v| {
                    let mut out = DVector::zeros(m);
                    out.rows_mut(before, n).copy_from(&v);
                    out
                })
                .collect();
            SegmentData::Vectors {
                vectors,
                weight: weight * factor,
            }
        }
    };
    Segment::new(t0, t1, seg.interp, data)
}

/// `2 diag(S0(2t), 0)` on `[0, T/2]` followed by `2 diag(0, S1(2t - T))`.
pub fn compose_block_control(
    s0: &MatrixSignal,
    s1: Option<&MatrixSignal>,
    t: f64,
) -> Result<MatrixSignal> {
    let slack = 1e-12 * t.max(1.0);
    if (s0.horizon() - t).abs() > slack || s1.is_some_and(|s| (s.horizon() - t).abs() > slack) {
        return domain(format!("both blocks must be defined on [0, {t}]"));
    }
    let k = s0.dim();
    let r = s1.map_or(0, |s| s.dim());
    let m = k + r;
    let half = 0.5 * t;
    let mut segments: Vec<Segment> = s0
        .segments()
        .iter()
        .map(|s| pad_segment(s, 0.5 * s.t0, 0.5 * s.t1, 0, r, 2.0))
        .collect();
    match s1 {
        Some(s1) => segments.extend(
            s1.segments()
                .iter()
                .map(|s| pad_segment(s, half + 0.5 * s.t0, half + 0.5 * s.t1, k, 0, 2.0)),
        ),
        None => segments.push(Segment::new(
            half,
            t,
            Interp::Step,
            SegmentData::Matrices(vec![DMatrix::zeros(m, m)]),
        )),
    }
    if let Some(last) = segments.last_mut() {
        last.t1 = t;
    }
    MatrixSignal::new(m, segments, None)
}

/// `S̃(s) = (H/H') S(s H/H')`, mapping horizon `H` to `H'`.
pub fn time_rescale(signal: &MatrixSignal, new_horizon: f64) -> Result<MatrixSignal> {
    if !(new_horizon > 0.0) {
        return domain("new horizon must be positive");
    }
    let f = signal.horizon() / new_horizon;
    let segments = signal
        .segments()
        .iter()
        .map(|s| {
            let data = match &s.data {
                SegmentData::Angles { angles, weight } => SegmentData::Angles {
                    angles: angles.clone(),
                    weight: weight * f,
                },
                SegmentData::Vectors { vectors, weight } => SegmentData::Vectors {
                    vectors: vectors.clone(),
                    weight: weight * f,
                },
                SegmentData::Matrices(ms) => {
                    SegmentData::Matrices(ms.iter().map(|m| m * f).collect())
                }
            };
            Segment::new(s.t0 / f, s.t1 / f, s.interp, data)
        })
        .collect::<Vec<_>>();
    let mut segments = segments;
    if let Some(last) = segments.last_mut() {
        last.t1 = new_horizon;
    }
    MatrixSignal::new(signal.dim(), segments, signal.period().map(|_| new_horizon))
}

/// `U S U^T` for orthogonal `U`.
pub fn conjugate(signal: &MatrixSignal, u: &DMatrix<f64>) -> Result<MatrixSignal> {
    let n = signal.dim();
    if u.nrows() != n || u.ncols() != n {
        return domain(format!("U must be {n}x{n}"));
    }
    if (u.transpose() * u - DMatrix::identity(n, n)).amax() > 1e-10 {
        return domain("U is not orthogonal");
    }
    let planar = if n == 2 {
        let twice = u[(1, 0)].atan2(u[(0, 0)]);
        Some((u.determinant() > 0.0, twice))
    } else {
        None
    };
    let segments = signal
        .segments()
        .iter()
        .map(|s| {
            let data = match (&s.data, planar) {
                (SegmentData::Angles { angles, weight }, Some((rot, beta))) => {
                    SegmentData::Angles {
                        angles: angles
                            .iter()
                            .map(|p| if rot { p + 2.0 * beta } else { 2.0 * beta - p })
                            .collect(),
                        weight: *weight,
                    }
                }
                (SegmentData::Matrices(ms), _) => {
                    SegmentData::Matrices(ms.iter().map(|m| u * m * u.transpose()).collect())
                }
                (other, _) => SegmentData::Vectors {
                    vectors: s
                        .vector_samples()
                        .unwrap_or_default()
                        .iter()
                        .map(|v| u * v)
                        .collect(),
                    weight: match other {
                        SegmentData::Angles { weight, .. }
                        | SegmentData::Vectors { weight, .. } => *weight,
                        SegmentData::Matrices(_) => unreachable!(),
                    },
                },
            };
            Segment::new(s.t0, s.t1, s.interp, data)
        })
        .collect();
    MatrixSignal::new(n, segments, signal.period())
}
