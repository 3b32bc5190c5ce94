//! Admissible control signals `S(t)` and their constructions.
//!
//! A signal is a list of segments tiling `[0, horizon]`. Each segment holds
//! samples on a uniform grid, interpolated either by local cubics (smooth
//! segments) or held constant per grid cell (step segments). Rank-one
//! segments store the direction `c(t)` rather than the matrix `cc^T`.

mod json;
mod ops;

pub use ops::{
    axis_hopping_control, compose_block_control, conjugate, detect_reflection, embed_signal, gram,
    normalize_trace, reflect_extend, time_rescale, verify_int, verify_pe, NormalizeOptions,
    PEWindowReport, ReflectionReport, ReflectionSigns,
};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Absolute tolerance on eigenvalues when checking positive semi-definiteness.
pub const PSD_TOL: f64 = 1e-10;

/// Default number of samples per smooth segment.
pub const DEFAULT_SAMPLES: usize = 512;

/// Relative slack when matching segment boundaries.
const TILE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Interp {
    /// Local cubic (4-point Lagrange) through samples at `t0 + k (t1-t0)/(m-1)`.
    #[default]
    Cubic,
    /// Sample `k` holds on `[t0 + k h, t0 + (k+1) h)` with `h = (t1-t0)/m`.
    Step,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentData {
    /// Planar rank-one samples: `S = weight * c c^T`, `c = (cos(φ/2), sin(φ/2))`.
    Angles {
        angles: Vec<f64>,
        weight: f64,
    },
    /// Rank-one samples in `R^n`; interpolated vectors are renormalized.
    Vectors {
        vectors: Vec<DVector<f64>>,
        weight: f64,
    },
    Matrices(Vec<DMatrix<f64>>),
}

impl SegmentData {
    pub fn len(&self) -> usize {
        match self {
            SegmentData::Angles { angles, .. } => angles.len(),
            SegmentData::Vectors { vectors, .. } => vectors.len(),
            SegmentData::Matrices(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_rank_one(&self) -> bool {
        !matches!(self, SegmentData::Matrices(_))
    }

    fn dim(&self) -> Option<usize> {
        match self {
            SegmentData::Angles { .. } => Some(2),
            SegmentData::Vectors { vectors, .. } => vectors.first().map(|v| v.len()),
            SegmentData::Matrices(m) => m.first().map(|m| m.nrows()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub interp: Interp,
    pub data: SegmentData,
}

/// Stencil of at most four sample indices with their interpolation weights.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    start: usize,
    count: usize,
    weights: [f64; 4],
}

impl Segment {
    pub fn new(t0: f64, t1: f64, interp: Interp, data: SegmentData) -> Self {
        Self {
            t0,
            t1,
            interp,
            data,
        }
    }

    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Width of one step cell, or spacing of the cubic nodes.
    pub fn spacing(&self) -> f64 {
        let m = self.data.len();
        match self.interp {
            Interp::Step => self.duration() / m as f64,
            Interp::Cubic if m > 1 => self.duration() / (m - 1) as f64,
            Interp::Cubic => self.duration(),
        }
    }

    /// Time of sample `k` (cubic) or start of cell `k` (step).
    pub fn node(&self, k: usize) -> f64 {
        let m = self.data.len();
        let denom = match self.interp {
            Interp::Step => m,
            Interp::Cubic => (m - 1).max(1),
        };
        if k >= denom {
            return self.t1;
        }
        self.t0 + self.duration() * k as f64 / denom as f64
    }

    fn stencil(&self, t: f64) -> Stencil {
        let m = self.data.len();
        match self.interp {
            Interp::Step => {
                let h = self.spacing();
                let idx = ((t - self.t0) / h).floor();
                let idx = if idx.is_finite() {
                    (idx.max(0.0) as usize).min(m - 1)
                } else {
                    0
                };
                Stencil {
                    start: idx,
                    count: 1,
                    weights: [1.0, 0.0, 0.0, 0.0],
                }
            }
            Interp::Cubic => {
                if m == 1 {
                    return Stencil {
                        start: 0,
                        count: 1,
                        weights: [1.0, 0.0, 0.0, 0.0],
                    };
                }
                let u = ((t - self.t0) / self.spacing()).clamp(0.0, (m - 1) as f64);
                let count = m.min(4);
                let i = (u.floor() as usize).min(m - 2);
                let start = i.saturating_sub(1).min(m - count);
                let mut weights = [0.0; 4];
                for (a, w) in weights.iter_mut().enumerate().take(count) {
                    let xa = (start + a) as f64;
                    let mut acc = 1.0;
                    for b in 0..count {
                        if b != a {
                            let xb = (start + b) as f64;
                            acc *= (u - xb) / (xa - xb);
                        }
                    }
                    *w = acc;
                }
                Stencil {
                    start,
                    count,
                    weights,
                }
            }
        }
    }

    /// Interpolated angle of a planar rank-one segment.
    pub fn angle_at(&self, t: f64) -> Option<f64> {
        let SegmentData::Angles { angles, .. } = &self.data else {
            return None;
        };
        let st = self.stencil(t);
        Some(
            (0..st.count)
                .map(|a| st.weights[a] * angles[st.start + a])
                .sum(),
        )
    }

    /// Unit direction and weight of a rank-one segment at local time `t`.
    pub fn direction_at(&self, t: f64) -> Option<(DVector<f64>, f64)> {
        match &self.data {
            SegmentData::Angles { weight, .. } => {
                let phi = self.angle_at(t)?;
                Some((
                    DVector::from_vec(vec![(0.5 * phi).cos(), (0.5 * phi).sin()]),
                    *weight,
                ))
            }
            SegmentData::Vectors { vectors, weight } => {
                let st = self.stencil(t);
                let mut v = DVector::zeros(vectors[0].len());
                for a in 0..st.count {
                    v.axpy(st.weights[a], &vectors[st.start + a], 1.0);
                }
                let norm = v.norm();
                if norm > 0.0 {
                    v /= norm;
                }
                Some((v, *weight))
            }
            SegmentData::Matrices(_) => None,
        }
    }

    /// `S(t)` at local time `t` (clamped to the segment).
    pub fn matrix_at(&self, t: f64) -> DMatrix<f64> {
        match &self.data {
            SegmentData::Matrices(ms) => {
                let st = self.stencil(t);
                let mut out = DMatrix::zeros(ms[0].nrows(), ms[0].ncols());
                for a in 0..st.count {
                    out += &ms[st.start + a] * st.weights[a];
                }
                out
            }
            _ => {
                let (c, w) = self.direction_at(t).expect("rank-one segment");
                &c * c.transpose() * w
            }
        }
    }

    /// Writes `S(t) x` into `out`.
    pub fn apply(&self, t: f64, x: &[f64], out: &mut [f64]) {
        match &self.data {
            SegmentData::Angles { weight, .. } => {
                let phi = self.angle_at(t).unwrap_or(0.0);
                let (c0, c1) = ((0.5 * phi).cos(), (0.5 * phi).sin());
                let s = weight * (c0 * x[0] + c1 * x[1]);
                out[0] = s * c0;
                out[1] = s * c1;
            }
            SegmentData::Vectors { .. } => {
                let (c, w) = self.direction_at(t).expect("rank-one segment");
                let s = w * c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                for (o, ci) in out.iter_mut().zip(c.iter()) {
                    *o = s * ci;
                }
            }
            SegmentData::Matrices(ms) => {
                let st = self.stencil(t);
                let n = x.len();
                out.iter_mut().for_each(|o| *o = 0.0);
                for a in 0..st.count {
                    let m = &ms[st.start + a];
                    let w = st.weights[a];
                    for i in 0..n {
                        let mut acc = 0.0;
                        for (j, xj) in x.iter().enumerate() {
                            acc += m[(i, j)] * xj;
                        }
                        out[i] += w * acc;
                    }
                }
            }
        }
    }

    /// Trace of `S(t)`.
    pub fn trace_at(&self, t: f64) -> f64 {
        match &self.data {
            SegmentData::Angles { weight, .. } | SegmentData::Vectors { weight, .. } => *weight,
            SegmentData::Matrices(_) => self.matrix_at(t).trace(),
        }
    }

    /// Matrix samples at the segment's own nodes.
    pub fn matrix_samples(&self) -> Vec<DMatrix<f64>> {
        match &self.data {
            SegmentData::Matrices(ms) => ms.clone(),
            SegmentData::Angles { angles, weight } => angles
                .iter()
                .map(|phi| {
                    let c = DVector::from_vec(vec![(0.5 * phi).cos(), (0.5 * phi).sin()]);
                    &c * c.transpose() * *weight
                })
                .collect(),
            SegmentData::Vectors { vectors, weight } => vectors
                .iter()
                .map(|c| {
                    let c = c.normalize();
                    &c * c.transpose() * *weight
                })
                .collect(),
        }
    }

    /// Unit-vector samples of a rank-one segment.
    pub fn vector_samples(&self) -> Option<Vec<DVector<f64>>> {
        match &self.data {
            SegmentData::Angles { angles, .. } => Some(
                angles
                    .iter()
                    .map(|phi| DVector::from_vec(vec![(0.5 * phi).cos(), (0.5 * phi).sin()]))
                    .collect(),
            ),
            SegmentData::Vectors { vectors, .. } => {
                Some(vectors.iter().map(|v| v.normalize()).collect())
            }
            SegmentData::Matrices(_) => None,
        }
    }

    fn with_times(&self, t0: f64, t1: f64) -> Segment {
        Segment {
            t0,
            t1,
            interp: self.interp,
            data: self.data.clone(),
        }
    }
}

/// A sub-interval of the time axis on which a single segment (or a single
/// constant cell of a step segment) is in force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    /// Global time minus segment-local time (a multiple of the period).
    pub shift: f64,
    pub segment: usize,
    /// Cell index when the segment is piecewise constant.
    pub cell: Option<usize>,
}

/// A piecewise-smooth positive semi-definite symmetric matrix signal.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSignal {
    dim: usize,
    period: Option<f64>,
    segments: Vec<Segment>,
}

impl MatrixSignal {
    /// Validates tiling, dimensions, symmetry and semi-definiteness.
    pub fn new(dim: usize, segments: Vec<Segment>, period: Option<f64>) -> Result<Self> {
        if dim == 0 {
            return domain("signal dimension must be at least 1");
        }
        if segments.is_empty() {
            return domain("signal needs at least one segment");
        }
        let horizon = segments.last().map(|s| s.t1).unwrap_or(0.0);
        let slack = TILE_TOL * horizon.abs().max(1.0);
        let mut segments = segments;
        if segments[0].t0.abs() > slack {
            return domain(format!(
                "first segment starts at {} instead of 0",
                segments[0].t0
            ));
        }
        segments[0].t0 = 0.0;
        for i in 0..segments.len() {
            if i > 0 {
                let prev_end = segments[i - 1].t1;
                if (segments[i].t0 - prev_end).abs() > slack {
                    return domain(format!(
                        "segments {} and {} leave a gap or overlap ({} vs {})",
                        i - 1,
                        i,
                        prev_end,
                        segments[i].t0
                    ));
                }
                segments[i].t0 = prev_end;
            }
            let seg = &segments[i];
            if !(seg.t1 > seg.t0) {
                return domain(format!("segment {i} has non-positive duration"));
            }
            if seg.data.is_empty() {
                return domain(format!("segment {i} has no samples"));
            }
            if seg.data.dim() != Some(dim) {
                return domain(format!("segment {i} does not have dimension {dim}"));
            }
            validate_samples(i, dim, &seg.data)?;
        }
        if let Some(p) = period {
            if (p - horizon).abs() > slack {
                return domain(format!(
                    "period {p} must equal the signal horizon {horizon}"
                ));
            }
        }
        Ok(Self {
            dim,
            period: period.map(|_| horizon),
            segments,
        })
    }

    /// A single constant matrix on `[0, horizon]`.
    pub fn constant(matrix: DMatrix<f64>, horizon: f64) -> Result<Self> {
        let dim = matrix.nrows();
        Self::new(
            dim,
            vec![Segment::new(
                0.0,
                horizon,
                Interp::Step,
                SegmentData::Matrices(vec![matrix]),
            )],
            None,
        )
    }

    pub fn zero(dim: usize, horizon: f64) -> Result<Self> {
        Self::constant(DMatrix::zeros(dim, dim), horizon)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn horizon(&self) -> f64 {
        self.segments.last().map(|s| s.t1).unwrap_or(0.0)
    }

    pub fn is_rank_one(&self) -> bool {
        self.segments.iter().all(|s| s.data.is_rank_one())
    }

    /// Marks the signal as repeating its horizon.
    pub fn into_periodic(mut self) -> Self {
        self.period = Some(self.horizon());
        self
    }

    pub fn without_period(mut self) -> Self {
        self.period = None;
        self
    }

    fn check_range(&self, t0: f64, t1: f64) -> Result<()> {
        if !(t0 >= 0.0) || !(t1 >= t0) {
            return domain(format!("invalid interval [{t0}, {t1}]"));
        }
        let h = self.horizon();
        if self.period.is_none() && t1 > h + TILE_TOL * h.max(1.0) {
            return domain(format!(
                "interval [{t0}, {t1}] exceeds the horizon {h} of an aperiodic signal"
            ));
        }
        Ok(())
    }

    /// Segment index and local time for global time `t`.
    pub fn locate(&self, t: f64) -> Result<(usize, f64)> {
        self.check_range(t, t)?;
        let h = self.horizon();
        let local = match self.period {
            Some(p) if t >= p => t - (t / p).floor() * p,
            _ => t.min(h),
        };
        let idx = self
            .segments
            .partition_point(|s| s.t1 <= local)
            .min(self.segments.len() - 1);
        Ok((idx, local))
    }

    /// `S(t)`.
    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        let (i, local) = self.locate(t)?;
        Ok(self.segments[i].matrix_at(local))
    }

    /// Splits `[t0, t1]` into pieces on which one segment (or cell) is active.
    pub fn pieces(&self, t0: f64, t1: f64) -> Result<Vec<Piece>> {
        self.check_range(t0, t1)?;
        let mut out = Vec::new();
        if t1 <= t0 {
            return Ok(out);
        }
        let h = self.horizon();
        let (first, last) = match self.period {
            Some(p) => ((t0 / p).floor() as i64, (t1 / p).ceil() as i64),
            None => (0, 1),
        };
        for k in first..last.max(first + 1) {
            let shift = k as f64 * self.period.unwrap_or(h);
            for (si, seg) in self.segments.iter().enumerate() {
                let (ga, gb) = (seg.t0 + shift, seg.t1 + shift);
                let (a, b) = (ga.max(t0), gb.min(t1));
                if b - a <= 0.0 {
                    continue;
                }
                match seg.interp {
                    Interp::Cubic => out.push(Piece {
                        start: a,
                        end: b,
                        shift,
                        segment: si,
                        cell: None,
                    }),
                    Interp::Step => {
                        let m = seg.data.len();
                        for c in 0..m {
                            let ca = (seg.node(c) + shift).max(a);
                            let cb = (seg.node(c + 1) + shift).min(b);
                            if cb - ca > 0.0 {
                                out.push(Piece {
                                    start: ca,
                                    end: cb,
                                    shift,
                                    segment: si,
                                    cell: Some(c),
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn segment(&self, piece: &Piece) -> &Segment {
        &self.segments[piece.segment]
    }

    /// Constant value of a step piece.
    pub fn cell_matrix(&self, piece: &Piece) -> Option<DMatrix<f64>> {
        let cell = piece.cell?;
        let seg = &self.segments[piece.segment];
        Some(seg.matrix_at(seg.node(cell) + 0.5 * seg.spacing()))
    }

    /// Writes `S(t) x` for `t` inside `piece`.
    pub fn apply_in(&self, piece: &Piece, t: f64, x: &[f64], out: &mut [f64]) {
        let seg = &self.segments[piece.segment];
        let local = (t - piece.shift).clamp(piece.start - piece.shift, piece.end - piece.shift);
        match piece.cell {
            Some(c) => {
                let mid = seg.node(c) + 0.5 * seg.spacing();
                seg.apply(mid, x, out)
            }
            None => seg.apply(local, x, out),
        }
    }

    /// `S(t)` for `t` inside `piece`.
    pub fn matrix_in(&self, piece: &Piece, t: f64) -> DMatrix<f64> {
        match self.cell_matrix(piece) {
            Some(m) => m,
            None => {
                let seg = &self.segments[piece.segment];
                let local =
                    (t - piece.shift).clamp(piece.start - piece.shift, piece.end - piece.shift);
                seg.matrix_at(local)
            }
        }
    }

    /// Times at which the signal may be discontinuous inside `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = self
            .pieces(t0, t1)?
            .iter()
            .map(|p| p.end)
            .filter(|&e| e < t1)
            .collect();
        out.dedup();
        Ok(out)
    }

    /// Shifts every segment by `offset` and relabels the horizon.
    pub(crate) fn shifted_segments(&self, offset: f64) -> Vec<Segment> {
        self.segments
            .iter()
            .map(|s| s.with_times(s.t0 + offset, s.t1 + offset))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        json::from_json(text)
    }
}

fn validate_samples(index: usize, dim: usize, data: &SegmentData) -> Result<()> {
    match data {
        SegmentData::Angles { angles, weight } => {
            if !(*weight >= 0.0) || angles.iter().any(|a| !a.is_finite()) {
                return domain(format!("segment {index}: invalid angles or weight"));
            }
        }
        SegmentData::Vectors { vectors, weight } => {
            if !(*weight >= 0.0) {
                return domain(format!("segment {index}: negative weight"));
            }
            for v in vectors {
                if v.len() != dim || !(v.norm() > 0.0) {
                    return domain(format!("segment {index}: zero or mis-sized direction"));
                }
            }
        }
        SegmentData::Matrices(ms) => {
            for m in ms {
                if m.nrows() != dim || m.ncols() != dim {
                    return domain(format!("segment {index}: matrix is not {dim}x{dim}"));
                }
                let scale = m.amax().max(1.0);
                if (m - m.transpose()).amax() > 1e-12 * scale {
                    return domain(format!("segment {index}: sample is not symmetric"));
                }
                let min_eig = m.clone().symmetric_eigenvalues().min();
                if min_eig < -PSD_TOL {
                    return domain(format!(
                        "segment {index}: sample is not positive semi-definite (λ_min = {min_eig:e})"
                    ));
                }
            }
        }
    }
    Ok(())
}

/// A signal of the form `S = w(t) c(t) c(t)^T` with unit `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneSignal {
    inner: MatrixSignal,
}

impl RankOneSignal {
    pub fn new(inner: MatrixSignal) -> Result<Self> {
        if !inner.is_rank_one() {
            return Err(Error::Domain("signal has full-matrix segments".into()));
        }
        Ok(Self { inner })
    }

    /// Planar signal from angle samples on `[0, horizon]`.
    pub fn from_angles(
        horizon: f64,
        angles: Vec<f64>,
        interp: Interp,
        weight: f64,
    ) -> Result<Self> {
        let seg = Segment::new(0.0, horizon, interp, SegmentData::Angles { angles, weight });
        Self::new(MatrixSignal::new(2, vec![seg], None)?)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    pub fn period(&self) -> Option<f64> {
        self.inner.period()
    }

    /// Unit direction `c(t)` and weight `w(t)`.
    pub fn direction(&self, t: f64) -> Result<(DVector<f64>, f64)> {
        let (i, local) = self.inner.locate(t)?;
        Ok(self.inner.segments[i]
            .direction_at(local)
            .expect("rank-one segment"))
    }

    pub fn as_matrix(&self) -> &MatrixSignal {
        &self.inner
    }

    pub fn into_matrix(self) -> MatrixSignal {
        self.inner
    }

    pub fn into_periodic(self) -> Self {
        Self {
            inner: self.inner.into_periodic(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        self.inner.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(MatrixSignal::from_json(text)?)
    }
}

impl From<RankOneSignal> for MatrixSignal {
    fn from(s: RankOneSignal) -> Self {
        s.inner
    }
}

impl AsRef<MatrixSignal> for RankOneSignal {
    fn as_ref(&self) -> &MatrixSignal {
        &self.inner
    }
}

impl AsRef<MatrixSignal> for MatrixSignal {
    fn as_ref(&self) -> &MatrixSignal {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ramp() -> MatrixSignal {
        // diag(2t, 0) on [0,1], sampled exactly (linear data is reproduced by the cubic)
        let ms = (0..=8)
            .map(|k| DMatrix::from_diagonal(&DVector::from_vec(vec![2.0 * k as f64 / 8.0, 0.0])))
            .collect();
        MatrixSignal::new(
            2,
            vec![Segment::new(
                0.0,
                1.0,
                Interp::Cubic,
                SegmentData::Matrices(ms),
            )],
            None,
        )
        .unwrap()
    }

    #[test]
    fn cubic_reproduces_polynomials() {
        let angles: Vec<f64> = (0..20).map(|k| (k as f64 / 19.0).powi(3)).collect();
        let seg = Segment::new(
            0.0,
            1.0,
            Interp::Cubic,
            SegmentData::Angles {
                angles,
                weight: 1.0,
            },
        );
        for t in [0.0, 0.013, 0.5, 0.77, 0.999, 1.0] {
            assert!((seg.angle_at(t).unwrap() - t.powi(3)).abs() < 1e-13);
        }
    }

    #[test]
    fn step_cells() {
        let seg = Segment::new(
            0.0,
            2.0,
            Interp::Step,
            SegmentData::Angles {
                angles: vec![0.0, PI],
                weight: 1.0,
            },
        );
        assert_eq!(seg.angle_at(0.99), Some(0.0));
        assert_eq!(seg.angle_at(1.0), Some(PI));
        assert_eq!(seg.angle_at(2.0), Some(PI));
    }

    #[test]
    fn rejects_gaps_and_non_psd() {
        let a = Segment::new(
            0.0,
            1.0,
            Interp::Step,
            SegmentData::Matrices(vec![DMatrix::identity(2, 2)]),
        );
        let b = Segment::new(
            1.5,
            2.0,
            Interp::Step,
            SegmentData::Matrices(vec![DMatrix::identity(2, 2)]),
        );
        assert!(MatrixSignal::new(2, vec![a.clone(), b], None).is_err());
        let neg = Segment::new(
            0.0,
            1.0,
            Interp::Step,
            SegmentData::Matrices(vec![-DMatrix::identity(2, 2)]),
        );
        assert!(MatrixSignal::new(2, vec![neg], None).is_err());
        let late = Segment::new(
            0.5,
            1.0,
            Interp::Step,
            SegmentData::Matrices(vec![DMatrix::identity(2, 2)]),
        );
        assert!(MatrixSignal::new(2, vec![late], None).is_err());
        assert!(MatrixSignal::new(2, vec![a], Some(3.0)).is_err());
    }

    #[test]
    fn eval_outside_horizon_is_domain_error() {
        let s = ramp();
        assert!(matches!(s.eval(1.5), Err(Error::Domain(_))));
        let p = s.into_periodic();
        let m = p.eval(1.25).unwrap();
        assert!((m[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pieces_unroll_periods_and_cells() {
        let seg = Segment::new(
            0.0,
            1.0,
            Interp::Step,
            SegmentData::Angles {
                angles: vec![0.0, 1.0, 2.0, 3.0],
                weight: 1.0,
            },
        );
        let s = MatrixSignal::new(2, vec![seg], Some(1.0)).unwrap();
        let p = s.pieces(0.1, 2.6).unwrap();
        assert_eq!(p.first().unwrap().start, 0.1);
        assert_eq!(p.last().unwrap().end, 2.6);
        assert_eq!(p.len(), 11);
        for w in p.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn unit_directions() {
        let s = RankOneSignal::from_angles(
            3.0,
            (0..50).map(|k| (k as f64 * 0.37).sin() * 4.0).collect(),
            Interp::Cubic,
            2.0,
        )
        .unwrap();
        for k in 0..100 {
            let (c, w) = s.direction(3.0 * k as f64 / 99.0).unwrap();
            assert!((c.norm() - 1.0).abs() < 1e-12);
            assert_eq!(w, 2.0);
        }
    }
}
