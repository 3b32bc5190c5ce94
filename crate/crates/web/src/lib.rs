//! Browser bindings. Every export returns a JSON string for `www/main.js`.

use degenflow::extremal2d::{build_optimal_control, mu, verify_extremal, EXTREMAL_TOL};
use degenflow::gpe::{asymptotic_norm, build_gpe_signal, series_criterion, GPESchedule};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Points sent to the page per curve.
const PLOT_POINTS: usize = 400;

fn to_js(r: degenflow::Result<String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Extremal state, control direction and running cost over one window.
pub fn extremal_curve_json(a: f64, b: f64) -> degenflow::Result<String> {
    let oc = build_optimal_control(a, b)?;
    let traj = &oc.trajectory;
    let report = verify_extremal(traj, &oc.params, 1e-6);
    let stride = (traj.len() / PLOT_POINTS).max(1);
    let idx: Vec<usize> = (0..traj.len()).step_by(stride).collect();
    let pick = |v: &[f64]| idx.iter().map(|&k| v[k]).collect::<Vec<_>>();
    let omega: Vec<[f64; 2]> = idx
        .iter()
        .map(|&k| {
            let w = traj.omega(k);
            [w[0], w[1]]
        })
        .collect();
    let control: Vec<[f64; 2]> = idx
        .iter()
        .map(|&k| {
            let c = traj.control(k);
            [c[0], c[1]]
        })
        .collect();
    let doc = json!({
        "a": a,
        "b": b,
        "window": oc.params.t,
        "mu": oc.mu,
        "certified": report.passed,
        "worst_residual": report.residuals.iter().map(|r| r.value).fold(0.0, f64::max),
        "t": pick(&traj.t),
        "eta": pick(&traj.eta),
        "cost": pick(&traj.cost),
        "omega": omega,
        "control": control,
    });
    Ok(doc.to_string())
}

/// `μ(a, b)` and `μ b² / a` on a log grid of `b` in `[b_min, b_max]`.
pub fn mu_scaling_json(a: f64, b_min: f64, b_max: f64, count: usize) -> degenflow::Result<String> {
    if !(b_min > a && b_max > b_min) || count < 2 {
        return Err(degenflow::Error::Domain(
            "need a < b_min < b_max and at least two points".into(),
        ));
    }
    let mut rows = Vec::with_capacity(count);
    for k in 0..count {
        let b = b_min * (b_max / b_min).powf(k as f64 / (count - 1) as f64);
        let m = mu(a, b)?.mu;
        rows.push(json!({"b": b, "mu": m, "scaled": m * b * b / a}));
    }
    Ok(json!({"a": a, "rows": rows}).to_string())
}

/// Norm history of the chained GPE signal for a built-in schedule.
pub fn gpe_run_json(convergent: bool, prefix: usize) -> degenflow::Result<String> {
    let schedule = if convergent {
        GPESchedule::convergent(prefix)?
    } else {
        GPESchedule::divergent(prefix)?
    };
    let series = series_criterion(&schedule, prefix)?;
    let g = build_gpe_signal(&schedule, prefix)?;
    let norms = asymptotic_norm(&g)?;
    Ok(json!({
        "verdict": series.verdict,
        "series": series.partial_sums,
        "rows": norms.rows,
        "limit_estimate": norms.limit_estimate,
        "max_rel_dev": norms.max_rel_dev,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn extremal_curve(a: f64, b: f64) -> Result<String, JsValue> {
    to_js(extremal_curve_json(a, b))
}

#[wasm_bindgen]
pub fn mu_scaling(a: f64, b_min: f64, b_max: f64, count: usize) -> Result<String, JsValue> {
    to_js(mu_scaling_json(a, b_min, b_max, count))
}

#[wasm_bindgen]
pub fn gpe_run(convergent: bool, prefix: usize) -> Result<String, JsValue> {
    to_js(gpe_run_json(convergent, prefix))
}

/// Tolerance the extremal solver targets, shown on the page.
#[wasm_bindgen]
pub fn solver_tolerance() -> f64 {
    EXTREMAL_TOL
}
