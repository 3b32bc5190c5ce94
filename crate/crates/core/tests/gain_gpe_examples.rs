use std::f64::consts::{LN_2, PI};

use degenflow::extremal2d::mu;
use degenflow::gain::{
    gain_estimate, gain_lower, gain_upper, normalized_worst_control, simulate_gain, worst_input,
};
use degenflow::gpe::{asymptotic_norm, build_gpe_signal, series_criterion, GPESchedule, Verdict};
use degenflow::signals::verify_pe;
use degenflow::Error;

#[test]
fn upper_bound_arithmetic() {
    assert!((gain_upper(LN_2, 1.0).unwrap() - 2.0).abs() < 1e-15);
    assert!((gain_upper(60.0, 1.5).unwrap() - 1.5).abs() < 1e-15);
    let m = mu(1.0, 3.0).unwrap().mu;
    assert!((gain_upper(m, 1.0).unwrap() - 2.614777969313).abs() < 1e-10);
    assert_eq!(gain_lower(0.5, 1.0).unwrap(), 1.0);
    assert!(matches!(gain_lower(0.0, 1.0), Err(Error::Domain(_))));
}

#[test]
fn bounds_order_and_growth() {
    let mut scaled = Vec::new();
    for (a, b) in [(1.0, 3.0), (1.0, 10.0), (0.5, 4.0), (1.0, 30.0)] {
        let m = mu(a, b).unwrap().mu;
        let half = mu(0.5 * a, 0.5 * b).unwrap().mu;
        let (lo, hi) = (gain_lower(half, 1.0).unwrap(), gain_upper(m, 1.0).unwrap());
        assert!(lo <= hi, "({a}, {b}): {lo} > {hi}");
        scaled.push(lo * a / (1.0 + b * b));
    }
    let (min, max) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(min > 0.02 && max / min < 5.0, "{scaled:?}");
    let l3 = gain_lower(mu(0.5, 1.5).unwrap().mu, 1.0).unwrap();
    let l10 = gain_lower(mu(0.5, 5.0).unwrap().mu, 1.0).unwrap();
    assert!(l10 > l3);
}

#[test]
fn worst_input_identities() {
    let (signal, w, m, _) = normalized_worst_control(1.0, 3.0).unwrap();
    let wi = worst_input(&signal, &w, m).unwrap();
    assert!(wi.closure_residual().abs() <= 1e-12);
    for k in 0..=20 {
        let t = 2.0 * k as f64 / 20.0;
        assert!((wi.z(t) - wi.v(t) / m).abs() <= 1e-10 * wi.v(t) / m);
    }
    let (mut u0, mut u1) = ([0.0; 2], [0.0; 2]);
    for t in [0.13, 0.77, 1.5, 1.99] {
        wi.eval(t, &mut u0);
        wi.eval(t + 2.0, &mut u1);
        assert!((u0[0] - u1[0]).abs() < 1e-12 && (u0[1] - u1[1]).abs() < 1e-12);
    }
}

#[test]
fn simulated_ratio_approaches_inverse_mu() {
    let (signal, w, m, _) = normalized_worst_control(1.0, 3.0).unwrap();
    let wi = worst_input(&signal, &w, m).unwrap();
    let r = simulate_gain(&signal, &|t, u| wi.eval(t, u), 50, None).unwrap();
    assert!(
        (r.ratio * m - 1.0).abs() < 0.02,
        "{} vs {}",
        r.ratio,
        1.0 / m
    );
    assert!(simulate_gain(&signal, &|_, u| u.fill(0.0), 5, None).is_err());
}

#[test]
fn smooth_inputs_stay_below_upper_bound() {
    let (signal, _, _, _) = normalized_worst_control(1.0, 3.0).unwrap();
    // the period-2 control lies in the class (a, b, T = 2)
    let upper = gain_upper(mu(1.0, 3.0).unwrap().mu, 2.0).unwrap();
    for (f1, f2, ph) in [(0.3, 1.1, 0.2), (2.0, 0.5, 1.3), (0.05, 0.07, 2.0)] {
        let u = move |t: f64, out: &mut [f64]| {
            out[0] = (f1 * t + ph).sin();
            out[1] = (f2 * t).cos();
        };
        let r = simulate_gain(&signal, &u, 20, None).unwrap();
        assert!(r.ratio <= upper * 1.02, "{} > {upper}", r.ratio);
    }
}

#[test]
fn gain_report_sandwich_and_homogeneity() {
    let r1 = gain_estimate(1.0, 3.0, 1.0, 50).unwrap();
    assert!(r1.consistent(), "{r1:?}");
    assert!(r1.lower <= r1.simulated * (1.0 + r1.tol) && r1.simulated <= r1.upper);
    let r2 = gain_estimate(1.0, 3.0, 2.0, 10).unwrap();
    assert_eq!(r2.lower, 2.0 * r1.lower);
    assert_eq!(r2.upper, 2.0 * r1.upper);
}

#[test]
fn series_partial_sums() {
    let conv = GPESchedule::convergent(400).unwrap();
    let s = series_criterion(&conv, 400).unwrap();
    assert_eq!(s.verdict, Verdict::Converges);
    assert!((PI * PI / 12.0 - s.partial_sums[399]).abs() < 1.0 / 400.0);

    let div = series_criterion(&GPESchedule::divergent(50).unwrap(), 50).unwrap();
    assert_eq!(div.partial_sums[49], 25.0);
    assert_eq!(div.verdict, Verdict::Diverges);

    let mixed = GPESchedule::unit_windows(
        30,
        |l| 1.0 / l as f64,
        |l| (l as f64).sqrt(),
        Some(Verdict::Converges),
    )
    .unwrap();
    let s = series_criterion(&mixed, 30).unwrap();
    let mut prev = 0.0;
    for (i, p) in s.partial_sums.iter().enumerate() {
        let l = (i + 1) as f64;
        assert!((p - prev - 1.0 / (l * (1.0 + l))).abs() < 1e-15);
        prev = *p;
    }
}

#[test]
fn chained_windows_contract_by_mu() {
    let sched = GPESchedule::new(
        vec![0.3, 0.5, 0.2, 1.0],
        vec![1.0, 2.0, 0.2, 4.0],
        vec![0.5, 1.5, 3.5, 4.0, 6.0],
        None,
    )
    .unwrap();
    let g = build_gpe_signal(&sched, 4).unwrap();
    let r = asymptotic_norm(&g).unwrap();
    let total: f64 = g.mus.iter().sum();
    let last = r.rows.last().unwrap();
    assert!((-last.norm.ln() - total).abs() < 1e-6 * 4.0);
    for l in 0..4 {
        assert!((g.window_decay[l] - g.mus[l]).abs() < 1e-6);
        let len = sched.tau_seq[l + 1] - sched.tau_seq[l];
        let w = verify_pe(
            &g.signal,
            sched.a_seq[l],
            sched.b_seq[l],
            len,
            &[sched.tau_seq[l]],
            1e-8,
        )
        .unwrap();
        assert!(w[0].satisfies, "window {l}: {w:?}");
    }
    // nothing acts before τ_0
    assert_eq!(r.rows[0].norm, 1.0);
}

#[test]
fn convergent_schedule_freezes() {
    let sched = GPESchedule::convergent(50).unwrap();
    let g = build_gpe_signal(&sched, 50).unwrap();
    let r = asymptotic_norm(&g).unwrap();
    assert!(r.max_rel_dev < 1e-6);
    assert!(r.limit_estimate > 0.0);
    let norms: Vec<f64> = r.rows.iter().map(|row| row.norm).collect();
    assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    let sum_a: f64 = sched.a_seq.iter().sum();
    assert!(norms[50] >= (-sum_a).exp());
    assert!(norms[50] / norms[25] > 0.98);
}

#[test]
fn divergent_schedule_decays_geometrically() {
    let g = build_gpe_signal(&GPESchedule::divergent(50).unwrap(), 50).unwrap();
    let r = asymptotic_norm(&g).unwrap();
    for w in r.rows.windows(2) {
        assert!((w[1].norm / w[0].norm - (-1.0f64).exp()).abs() < 1e-9);
    }
    assert!(r.rows[50].norm < (-10.0f64).exp());
}

#[test]
fn single_window_prefix() {
    let g = build_gpe_signal(&GPESchedule::convergent(10).unwrap(), 1).unwrap();
    let r = asymptotic_norm(&g).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!((r.rows[1].norm - (-g.mus[0]).exp()).abs() < 1e-9);
    assert!(build_gpe_signal(&GPESchedule::convergent(10).unwrap(), 11).is_err());
}
