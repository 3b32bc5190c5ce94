use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use degenflow::extremal2d::{
    build_optimal_control, cost_closed_form, elliptic_e, elliptic_k, extremal_rhs,
    initial_conditions, integrate_extremal, k_minus, k_plus, k_ratio, m_matrix, mu,
    solve_multipliers, solve_shape, verify_extremal, ExtremalParams, GRID_INTERVALS,
};
use degenflow::flow::cost_j;
use degenflow::signals::{verify_int, verify_pe};
use nalgebra::Vector2;

/// Trapezoid rule on the half period; spectrally accurate for these
/// smooth periodic integrands.
fn quad_ke(k: f64) -> (f64, f64) {
    let n = 4000;
    let h = FRAC_PI_2 / n as f64;
    let (mut kk, mut ee) = (0.0, 0.0);
    for i in 0..=n {
        let s = (i as f64 * h).sin();
        let r = 1.0 - k * k * s * s;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        kk += w / r.sqrt();
        ee += w * r.sqrt();
    }
    (kk * h, ee * h)
}

#[test]
fn elliptic_boundary_values() {
    assert!((elliptic_k(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
    assert!((elliptic_e(0.0).unwrap() - FRAC_PI_2).abs() < 1e-15);
    assert_eq!(elliptic_e(1.0).unwrap(), 1.0);
    assert!(elliptic_k(1.0).is_err());
    let (k, e) = quad_ke(0.5);
    assert!((elliptic_k(0.5).unwrap() - k).abs() < 1e-12);
    assert!((elliptic_e(0.5).unwrap() - e).abs() < 1e-12);
}

#[test]
fn k_plus_minus_limits_and_ratio() {
    let phi = PI - 1e-9;
    assert!(k_plus(phi) < 1e-8);
    assert!((k_minus(phi) - SQRT_2 * PI).abs() < 1e-8);
    let grid: Vec<f64> = (1..=100).map(|i| PI * i as f64 / 101.0).collect();
    for w in grid.windows(2) {
        assert!(k_ratio(w[1]) < k_ratio(w[0]));
    }
    let (k, e) = quad_ke(SQRT_2 / 2.0);
    assert!((k_ratio(FRAC_PI_2) - (k - e) / e).abs() < 1e-12);
}

#[test]
fn shape_solutions() {
    let (phi0, nu) = solve_shape(1.0, 5.0).unwrap();
    assert!((nu * k_plus(phi0) - 1.0).abs() < 1e-10);
    assert!((nu * k_minus(phi0) - 5.0).abs() < 1e-10);
    let (p3, _) = solve_shape(1.0, 3.0).unwrap();
    let (p10, _) = solve_shape(1.0, 10.0).unwrap();
    assert!(p3 < p10);
    let (p_small, _) = solve_shape(1.0, 1e6).unwrap();
    assert!(PI - p_small < 1e-2, "{p_small}");
}

#[test]
fn multiplier_solutions() {
    let (phi0, nu) = solve_shape(1.0, 5.0).unwrap();
    let (alpha, d) = solve_multipliers(phi0, nu).unwrap();
    assert!(alpha > 0.0 && alpha < 1.0 && d > 0.0 && d < 1.0);
    let p = ExtremalParams::from_ab(1.0, 5.0).unwrap();
    assert!((p.cos_phi0_from_multipliers() - phi0.cos()).abs() < 1e-10);

    let b = 100.0;
    let p = ExtremalParams::from_ab(1.0, b).unwrap();
    let km = k_minus(p.phi0);
    let alpha_asym = km * km * (0.5 * p.phi0).sin().powi(2) / (2.0 * b * b);
    let d_asym = km * km * (0.5 * p.phi0).cos().powi(2) / (2.0 * b * b);
    assert!(
        (p.alpha / alpha_asym - 1.0).abs() < 0.05,
        "{} {alpha_asym}",
        p.alpha
    );
    assert!((p.d / d_asym - 1.0).abs() < 0.05, "{} {d_asym}", p.d);
}

#[test]
fn initial_state() {
    let p = ExtremalParams::from_ab(1.0, 3.0).unwrap();
    let s = initial_conditions(p.alpha, p.d).unwrap();
    assert!((s.theta + 0.834269704815324).abs() < 1e-10);
    assert!((s.phi - 1.642838978896178).abs() < 1e-10);
    let m = m_matrix(&p, s.theta, s.eta);
    let c = Vector2::new((0.5 * s.phi).cos(), (0.5 * s.phi).sin());
    assert!((m * c).norm() < 1e-10);

    let near_one = initial_conditions(1.0 - 1e-10, 0.3).unwrap();
    assert!(1.0 - near_one.theta.cos() < 1e-9);
}

#[test]
fn extremal_trajectory_structure() {
    let p = ExtremalParams::from_ab(1.0, 3.0).unwrap();
    let tr = integrate_extremal(&p, 1e-12, 4 * GRID_INTERVALS).unwrap();
    let n = tr.len();
    assert!(tr.eta[0].abs() < 1e-12 && tr.eta[n - 1].abs() < 1e-8);
    let interior = &tr.eta[n / 20..n - n / 20];
    let sign = interior[0].signum();
    assert!(interior
        .iter()
        .all(|e| e.signum() == sign && e.abs() > 1e-6));

    let gap = p.gap();
    let mubar = 1.0 / gap;
    let eps = |k: usize| tr.theta[k] - tr.phi[k] - PI;
    let eps0 = eps(0);
    let mut dy = [0.0; 4];
    let mut worst: f64 = 0.0;
    let mut eps_min = f64::INFINITY;
    for k in 0..n {
        extremal_rhs(gap, &[tr.theta[k], tr.eta[k], tr.phi[k], 0.0], &mut dy);
        let de = dy[0] - dy[2];
        let e = eps(k);
        let fi = de * de - 2.0 * mubar * (e.cos() - eps0.cos()) - e.sin().powi(2);
        worst = worst.max(fi.abs());
        // ε is only defined modulo 2π
        let wrapped = (e + PI).rem_euclid(2.0 * PI) - PI;
        eps_min = eps_min.min(wrapped);
    }
    assert!(worst < 1e-9, "first integral drift {worst}");
    let eps_bar = (1.0 - 2.0 * p.d / gap).acos();
    assert!((eps_min + eps_bar).abs() < 1e-6, "{eps_min} vs -{eps_bar}");
}

#[test]
fn optimal_control_windows_and_periodicity() {
    for (a, b) in [(1.0, 3.0), (1.0, 5.0), (0.5, 4.0)] {
        let oc = build_optimal_control(a, b).unwrap();
        let t = a + b;
        assert!(
            verify_int(oc.base.as_matrix(), a, b, t, 1e-8 * t)
                .unwrap()
                .satisfies
        );
        let starts: Vec<f64> = (0..8).map(|k| 2.0 * t * k as f64 / 8.0).collect();
        let pe = verify_pe(
            oc.signal.as_matrix(),
            2.0 * a,
            2.0 * b,
            2.0 * t,
            &starts,
            1e-8 * t,
        )
        .unwrap();
        assert!(pe.iter().all(|w| w.satisfies), "({a}, {b}): {pe:?}");
        let w0 = oc.trajectory.omega(0);
        let wt = oc.trajectory.omega(oc.trajectory.len() - 1);
        for i in 0..2 {
            assert!((w0[i] * w0[i] - wt[i] * wt[i]).abs() < 1e-8);
        }
        assert!(oc.mu <= a);
    }
}

#[test]
fn cost_three_ways() {
    for (a, b) in [(1.0, 3.0), (1.0, 5.0), (1.0, 10.0)] {
        let oc = build_optimal_control(a, b).unwrap();
        let closed = cost_closed_form(oc.params.alpha, oc.params.d).unwrap();
        let flow = cost_j(oc.base.as_matrix(), &oc.omega0, oc.params.t, 1e-11).unwrap();
        let quad = oc.trajectory.total_cost();
        assert!((closed / flow - 1.0).abs() < 1e-6, "{closed} {flow}");
        assert!((quad / closed - 1.0).abs() < 1e-6, "{quad} {closed}");
    }
}

#[test]
fn cost_scales_like_a_over_b_squared() {
    let ratios: Vec<f64> = [10.0, 20.0, 50.0, 100.0]
        .iter()
        .map(|&b| mu(1.0, b).unwrap().mu * b * b)
        .collect();
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!(lo >= 0.05 && hi <= 20.0 && hi / lo < 3.0, "{ratios:?}");
}

#[test]
fn certificate_and_negative_control() {
    let oc = build_optimal_control(1.0, 3.0).unwrap();
    let rep = verify_extremal(&oc.trajectory, &oc.params, 1e-6);
    assert!(rep.passed, "{rep:?}");
    assert!(rep.get("rank").unwrap().passed);

    let mut bent = oc.params;
    bent.alpha *= 1.01;
    let rep = verify_extremal(&oc.trajectory, &bent, 1e-6);
    assert!(!rep.get("mc").unwrap().passed);
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(ExtremalParams::from_ab(1.0, 1.0).is_err());
    assert!(ExtremalParams::from_ab(2.0, 1.0).is_err());
    assert!(mu(0.0, 1.0).is_err());
    assert!(cost_closed_form(1.5, 0.1).is_err());
    assert!(solve_multipliers(PI, 1.0).is_err());
}
