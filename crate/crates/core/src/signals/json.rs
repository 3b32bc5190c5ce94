//! JSON form of a signal.
//!
//! ```json
//! {"dim": 2, "period": 2.0,
//!  "segments": [{"t0": 0.0, "t1": 1.0, "kind": "angles", "interp": "cubic",
//!                "weight": 4.0, "data": [0.1, 0.2, 0.3]}]}
//! ```
//!
//! `kind` is `angles` (planar rank-one), `vectors` (rank-one, one row per
//! sample) or `matrices` (row-major `dim x dim` per sample). `interp`
//! defaults to `cubic` and `weight` to 1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Interp, MatrixSignal, Segment, SegmentData};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct SignalDoc {
    dim: usize,
    #[serde(default)]
    period: Option<f64>,
    segments: Vec<SegmentDoc>,
}

#[derive(Serialize, Deserialize)]
struct SegmentDoc {
    t0: f64,
    t1: f64,
    #[serde(flatten)]
    payload: Payload,
    #[serde(default)]
    interp: Interp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
enum Payload {
    Angles(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
    Matrices(Vec<Vec<Vec<f64>>>),
}

pub(super) fn to_json(signal: &MatrixSignal) -> Result<String> {
    let segments = signal
        .segments()
        .iter()
        .map(|s| {
            let (payload, weight) = match &s.data {
                SegmentData::Angles { angles, weight } => {
                    (Payload::Angles(angles.clone()), Some(*weight))
                }
                SegmentData::Vectors { vectors, weight } => (
                    Payload::Vectors(
                        vectors
                            .iter()
                            .map(|v| v.iter().copied().collect())
                            .collect(),
                    ),
                    Some(*weight),
                ),
                SegmentData::Matrices(ms) => (
                    Payload::Matrices(
                        ms.iter()
                            .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
                            .collect(),
                    ),
                    None,
                ),
            };
            SegmentDoc {
                t0: s.t0,
                t1: s.t1,
                payload,
                interp: s.interp,
                weight,
            }
        })
        .collect();
    let doc = SignalDoc {
        dim: signal.dim(),
        period: signal.period(),
        segments,
    };
    Ok(serde_json::to_string(&doc)?)
}

pub(super) fn from_json(text: &str) -> Result<MatrixSignal> {
    let doc: SignalDoc = serde_json::from_str(text)?;
    let dim = doc.dim;
    let mut segments = Vec::with_capacity(doc.segments.len());
    for (i, s) in doc.segments.into_iter().enumerate() {
        let weight = s.weight.unwrap_or(1.0);
        let data = match s.payload {
            Payload::Angles(angles) => SegmentData::Angles { angles, weight },
            Payload::Vectors(rows) => SegmentData::Vectors {
                vectors: rows.into_iter().map(DVector::from_vec).collect(),
                weight,
            },
            Payload::Matrices(ms) => {
                let mut out = Vec::with_capacity(ms.len());
                for rows in ms {
                    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                        return Err(Error::Domain(format!(
                            "segment {i}: matrix sample is not {dim}x{dim}"
                        )));
                    }
                    let m = DMatrix::from_fn(dim, dim, |r, c| rows[r][c] * weight);
                    out.push(m);
                }
                SegmentData::Matrices(out)
            }
        };
        segments.push(Segment::new(s.t0, s.t1, s.interp, data));
    }
    MatrixSignal::new(dim, segments, doc.period)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let a = Segment::new(
            0.0,
            0.7,
            Interp::Cubic,
            SegmentData::Angles {
                angles: vec![0.1, 1.0 / 3.0, std::f64::consts::PI],
                weight: 4.25,
            },
        );
        let b = Segment::new(
            0.7,
            1.3,
            Interp::Step,
            SegmentData::Matrices(vec![DMatrix::from_row_slice(
                2,
                2,
                &[2.0, 0.1, 0.1, 1.0 / 7.0],
            )]),
        );
        let s = MatrixSignal::new(2, vec![a, b], Some(1.3)).unwrap();
        let back = MatrixSignal::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn defaults_and_errors() {
        let s = MatrixSignal::from_json(
            r#"{"dim":2,"segments":[{"t0":0,"t1":1,"kind":"angles","data":[0.0,0.5]}]}"#,
        )
        .unwrap();
        assert_eq!(s.segments()[0].interp, Interp::Cubic);
        assert!(s.period().is_none());
        assert!(MatrixSignal::from_json(
            r#"{"dim":2,"segments":[{"t0":0,"t1":1,"kind":"spline","data":[]}]}"#
        )
        .is_err());
        assert!(MatrixSignal::from_json(
            r#"{"dim":2,"segments":[{"t0":0,"t1":1,"kind":"matrices","data":[[[1,0,0],[0,1,0]]]}]}"#
        )
        .is_err());
    }
}
