use degenflow::extremal2d::{elliptic_e, elliptic_k, k_ratio, mu};
use degenflow::flow::{cost_j, integrate_flow};
use degenflow::gpe::{asymptotic_norm, build_gpe_signal, GPESchedule};
use degenflow::oracle::sample_admissible;
use degenflow::signals::{
    gram, time_rescale, Interp, MatrixSignal, RankOneSignal, Segment, SegmentData,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn angle_signal(angles: Vec<f64>, weight: f64, step: bool) -> MatrixSignal {
    let interp = if step { Interp::Step } else { Interp::Cubic };
    RankOneSignal::from_angles(1.0, angles, interp, weight)
        .unwrap()
        .into_matrix()
}

fn psd_segment(entries: Vec<(f64, f64, f64)>) -> MatrixSignal {
    let ms = entries
        .into_iter()
        .map(|(p, q, r)| {
            let l = DMatrix::from_row_slice(2, 2, &[p, 0.0, q, r]);
            &l * l.transpose()
        })
        .collect();
    let seg = Segment::new(0.0, 2.0, Interp::Step, SegmentData::Matrices(ms));
    MatrixSignal::new(2, vec![seg], None).unwrap()
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gram_is_symmetric_psd(
        angles in prop::collection::vec(-4.0f64..4.0, 4..12),
        weight in 0.1f64..3.0,
        step in any::<bool>(),
        t0 in 0.0f64..0.5,
        len in 0.05f64..0.5,
    ) {
        let s = angle_signal(angles, weight, step);
        let g = gram(&s, t0, t0 + len).unwrap();
        prop_assert!((&g - g.transpose()).amax() < 1e-12);
        prop_assert!(min_eig(&g) >= -1e-12);
    }

    #[test]
    fn step_matrix_gram_is_psd(entries in prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0), 1..6)) {
        let s = psd_segment(entries);
        let g = gram(&s, 0.0, 2.0).unwrap();
        prop_assert!(min_eig(&g) >= -1e-12 * (1.0 + g.amax()));
    }

    #[test]
    fn json_round_trip(angles in prop::collection::vec(-10.0f64..10.0, 4..10), weight in 0.01f64..5.0, step in any::<bool>()) {
        let s = angle_signal(angles, weight, step);
        let back = MatrixSignal::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn rescale_preserves_normalized_gram(
        angles in prop::collection::vec(-4.0f64..4.0, 4..10),
        h in 0.1f64..10.0,
    ) {
        let s = angle_signal(angles, 1.0, false);
        let r = time_rescale(&s, h).unwrap();
        prop_assert!((r.horizon() - h).abs() < 1e-12 * h);
        let g0 = gram(&s, 0.0, 1.0).unwrap();
        let g1 = gram(&r, 0.0, h).unwrap();
        prop_assert!((g0 - g1).amax() < 1e-10);
    }

    #[test]
    fn flow_norm_never_grows(
        angles in prop::collection::vec(-4.0f64..4.0, 4..10),
        weight in 0.1f64..5.0,
        th in 0.0f64..std::f64::consts::PI,
    ) {
        let s = angle_signal(angles, weight, false);
        let w0 = DVector::from_vec(vec![th.cos(), th.sin()]);
        let tr = integrate_flow(&s, &w0, 0.0, 1.0, 1e-10).unwrap();
        for p in tr.samples.windows(2) {
            prop_assert!(p[1].log_r <= p[0].log_r + 1e-12);
        }
        for p in &tr.samples {
            let n: f64 = p.omega.iter().map(|x| x * x).sum();
            prop_assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn admissible_cost_bounded_by_mu(seed in 0u64..10_000, th in 0.0f64..std::f64::consts::PI) {
        let m = mu(1.0, 3.0).unwrap().mu;
        let c = sample_admissible(1.0, 3.0, 8, seed).unwrap();
        let w = DVector::from_vec(vec![th.cos(), th.sin()]);
        let j = cost_j(c.as_matrix(), &w, 4.0, 1e-9).unwrap();
        prop_assert!(j >= m - 1e-8, "{} < {}", j, m);
    }

    #[test]
    fn mu_never_exceeds_a(a in 0.05f64..5.0, gap in 0.01f64..50.0) {
        let b = a + gap;
        let m = mu(a, b).unwrap().mu;
        prop_assert!(m > 0.0 && m <= a, "mu({}, {}) = {}", a, b, m);
    }

    #[test]
    fn mu_decreases_in_b(a in 0.1f64..2.0, b in 0.2f64..20.0, d in 0.1f64..10.0) {
        prop_assume!(b > a * 1.01);
        prop_assert!(mu(a, b + d).unwrap().mu < mu(a, b).unwrap().mu);
    }

    #[test]
    fn elliptic_monotone(k1 in 0.0f64..0.999, k2 in 0.0f64..0.999) {
        prop_assume!((k1 - k2).abs() > 1e-6);
        let (lo, hi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
        prop_assert!(elliptic_k(lo).unwrap() < elliptic_k(hi).unwrap());
        prop_assert!(elliptic_e(lo).unwrap() > elliptic_e(hi).unwrap());
    }

    #[test]
    fn k_ratio_decreasing(p in 0.05f64..3.0, dp in 0.001f64..0.1) {
        prop_assume!(p + dp < std::f64::consts::PI);
        prop_assert!(k_ratio(p + dp) < k_ratio(p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gpe_norms_monotone(len in 2usize..8, scale in 0.2f64..2.0) {
        let sched = GPESchedule::unit_windows(len, |l| scale / l as f64, |l| 1.0 + l as f64, None).unwrap();
        let g = build_gpe_signal(&sched, len).unwrap();
        let r = asymptotic_norm(&g).unwrap();
        for w in r.rows.windows(2) {
            prop_assert!(w[1].norm <= w[0].norm * (1.0 + 1e-12));
        }
        prop_assert!(r.max_rel_dev < 1e-6);
    }
}
