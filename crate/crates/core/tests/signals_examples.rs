use degenflow::extremal2d::build_optimal_control;
use degenflow::flow::cost_j;
use degenflow::signals::{
    axis_hopping_control, compose_block_control, embed_signal, gram, normalize_trace,
    reflect_extend, verify_int, verify_pe, Interp, MatrixSignal, NormalizeOptions, RankOneSignal,
    Segment, SegmentData,
};
use nalgebra::{DMatrix, DVector};

fn close(m: &DMatrix<f64>, want: &DMatrix<f64>, tol: f64) {
    assert!((m - want).amax() <= tol, "got {m}, want {want}");
}

fn e1_signal(horizon: f64) -> MatrixSignal {
    RankOneSignal::from_angles(horizon, vec![0.0, 0.0], Interp::Step, 1.0)
        .unwrap()
        .into_matrix()
}

#[test]
fn gram_of_simple_signals() {
    let axis = axis_hopping_control(1.0, 1.0, 2).unwrap();
    close(
        &gram(&axis, 0.0, 1.0).unwrap(),
        &DMatrix::identity(2, 2),
        1e-14,
    );
    let zero = MatrixSignal::zero(2, 1.0).unwrap();
    close(&gram(&zero, 0.0, 1.0).unwrap(), &DMatrix::zeros(2, 2), 0.0);
    let want = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]));
    close(&gram(&e1_signal(2.0), 0.0, 2.0).unwrap(), &want, 1e-12);
}

#[test]
fn window_checks() {
    let axis = axis_hopping_control(1.0, 1.0, 2).unwrap();
    let r = verify_int(&axis, 1.0, 2.0, 1.0, 1e-12).unwrap();
    assert!(r.satisfies);
    assert!((r.gram_eigen_min - 1.0).abs() < 1e-14 && (r.gram_eigen_max - 1.0).abs() < 1e-14);

    let r = verify_int(&e1_signal(1.0), 1.0, 2.0, 1.0, 1e-12).unwrap();
    assert!(!r.satisfies);
    assert!(r.gram_eigen_min.abs() < 1e-14);

    let oc = build_optimal_control(1.0, 3.0).unwrap();
    let r = verify_int(oc.base.as_matrix(), 1.0, 3.0, 4.0, 1e-8).unwrap();
    assert!(r.satisfies);
    assert!((r.gram_eigen_min - 1.0).abs() < 1e-8 && (r.gram_eigen_max - 3.0).abs() < 1e-8);
}

#[test]
fn pe_checks() {
    let oc = build_optimal_control(1.0, 3.0).unwrap();
    let t = 4.0;
    let reps = verify_pe(
        oc.signal.as_matrix(),
        2.0,
        6.0,
        2.0 * t,
        &[0.0, t / 2.0, t],
        1e-8,
    )
    .unwrap();
    assert!(reps.iter().all(|r| r.satisfies), "{reps:?}");

    let c = MatrixSignal::constant(DMatrix::identity(2, 2) * 0.5, 2.0)
        .unwrap()
        .into_periodic();
    let reps = verify_pe(&c, 1.0, 1.0, 2.0, &[0.0, 0.3, 1.7], 1e-12).unwrap();
    assert!(reps.iter().all(|r| r.satisfies));

    let zero = MatrixSignal::zero(2, 2.0).unwrap();
    assert!(!verify_pe(&zero, 1.0, 1.0, 1.0, &[0.0], 1e-12).unwrap()[0].satisfies);
}

#[test]
fn normalize_examples() {
    let axis = axis_hopping_control(1.0, 1.0, 2).unwrap();
    let n = normalize_trace(&axis, &NormalizeOptions::default()).unwrap();
    for t in [0.1, 0.4, 0.6, 0.95] {
        close(&n.eval(t).unwrap(), &axis.eval(t).unwrap(), 1e-10);
    }

    let c =
        MatrixSignal::constant(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]), 1.0).unwrap();
    let n = normalize_trace(&c, &NormalizeOptions::default()).unwrap();
    for t in [0.0, 0.5, 1.0] {
        close(&n.eval(t).unwrap(), &c.eval(t).unwrap(), 1e-10);
    }

    // diag(2t, 0) on [0, 1]: τ(t) = t², trace becomes 1
    let samples = (0..=8)
        .map(|k| DMatrix::from_diagonal(&DVector::from_vec(vec![2.0 * k as f64 / 8.0, 0.0])))
        .collect();
    let s = MatrixSignal::new(
        2,
        vec![Segment::new(
            0.0,
            1.0,
            Interp::Cubic,
            SegmentData::Matrices(samples),
        )],
        None,
    )
    .unwrap();
    let n = normalize_trace(
        &s,
        &NormalizeOptions {
            a: Some(0.5),
            eps_rel: 1e-8,
        },
    )
    .unwrap();
    for t in [0.05, 0.3, 0.77] {
        assert!((n.eval(t).unwrap().trace() - 1.0).abs() < 1e-6);
    }
    let want = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
    close(&gram(&n, 0.0, 1.0).unwrap(), &want, 1e-6);
}

#[test]
fn embedding_examples() {
    let oc = build_optimal_control(1.0, 3.0).unwrap();
    let s = oc.base.as_matrix();
    assert_eq!(&embed_signal(s, 2, 1.0, 4.0).unwrap(), s);

    let s3 = embed_signal(s, 3, 1.0, 4.0).unwrap();
    let w3 = DVector::from_vec(vec![oc.omega0[0], oc.omega0[1], 0.0]);
    let j2 = cost_j(s, &oc.omega0, 4.0, 1e-11).unwrap();
    let j3 = cost_j(&s3, &w3, 4.0, 1e-11).unwrap();
    assert!((j2 - j3).abs() < 1e-9, "{j2} {j3}");

    let s4 = embed_signal(s, 4, 1.0, 4.0).unwrap();
    assert!(verify_int(&s4, 1.0, 3.0, 4.0, 1e-8).unwrap().satisfies);
}

#[test]
fn axis_hopping_examples() {
    let s = axis_hopping_control(0.5, 2.0, 3).unwrap();
    close(
        &gram(&s, 0.0, 2.0).unwrap(),
        &(DMatrix::identity(3, 3) * 0.5),
        1e-14,
    );
    let w = DVector::from_vec(vec![1.0, 0.0]);
    let j = cost_j(&axis_hopping_control(1.0, 1.0, 2).unwrap(), &w, 1.0, 1e-12).unwrap();
    assert!((j - 1.0).abs() < 1e-10);
}

#[test]
fn reflection_examples() {
    let c = RankOneSignal::from_angles(1.0, vec![0.7, 0.7, 0.7], Interp::Cubic, 2.0).unwrap();
    let (p, rep) = reflect_extend(&c, &[1.0, 1.0], 1e-10).unwrap();
    assert_eq!(p.period(), Some(2.0));
    assert!(rep.seam_residual < 1e-14);
    let m0 = p.as_matrix().eval(0.2).unwrap();
    for t in [0.9, 1.1, 1.9, 3.3] {
        close(&p.as_matrix().eval(t).unwrap(), &m0, 1e-14);
    }

    let oc = build_optimal_control(1.0, 3.0).unwrap();
    assert!(oc.seam.seam_residual <= 1e-6, "{:?}", oc.seam);
    // continuity of S across the seam and the period boundary
    let s = oc.signal.as_matrix();
    for t in [4.0, 8.0] {
        let jump = (s.eval(t - 1e-9).unwrap() - s.eval(t + 1e-9).unwrap()).amax();
        assert!(jump < 1e-6, "jump {jump} at {t}");
    }
}

#[test]
fn block_composition() {
    let t = 1.0;
    let s0 = axis_hopping_control(1.0, t, 2).unwrap();
    let s1 = axis_hopping_control(1.0, t, 2).unwrap();
    let c = compose_block_control(&s0, Some(&s1), t).unwrap();
    assert_eq!(c.dim(), 4);
    close(&gram(&c, 0.0, t).unwrap(), &DMatrix::identity(4, 4), 1e-12);

    let oc = build_optimal_control(1.0, 3.0).unwrap();
    let base = oc.base.as_matrix();
    let h = base.horizon();
    let c = compose_block_control(base, None, h).unwrap();
    // first half is the doubled, time-compressed S0; second half vanishes
    close(
        &c.eval(0.3 * h).unwrap().view((0, 0), (2, 2)).into_owned(),
        &(base.eval(0.6 * h).unwrap() * 2.0),
        1e-12,
    );
    close(
        &c.eval(0.7 * h).unwrap(),
        &DMatrix::zeros(3, 3).resize(c.dim(), c.dim(), 0.0),
        1e-14,
    );
    let mut w = DVector::zeros(c.dim());
    w[0] = oc.omega0[0];
    w[1] = oc.omega0[1];
    let j = cost_j(&c, &w, h, 1e-11).unwrap();
    assert!((j - oc.mu).abs() < 1e-8, "{j} vs {}", oc.mu);
}

#[test]
fn json_round_trip_of_optimal_control() {
    let oc = build_optimal_control(1.0, 5.0).unwrap();
    let text = oc.signal.to_json().unwrap();
    let back = RankOneSignal::from_json(&text).unwrap();
    assert_eq!(back, oc.signal);
}
