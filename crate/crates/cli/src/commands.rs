use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use degenflow::extremal2d::{
    build_optimal_control, cost_closed_form, mu, verify_extremal, MuSource,
};
use degenflow::flow::{decay_rate, DEFAULT_TOL};
use degenflow::gain::{gain_estimate, REPORT_TOL};
use degenflow::gpe::{asymptotic_norm, build_gpe_signal, series_criterion, GPESchedule};
use degenflow::oracle::{brute_force_mu2, DEFAULT_PENALTY};
use degenflow::signals::{axis_hopping_control, time_rescale, verify_int, verify_pe, MatrixSignal};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::output::Outcome;
use crate::{CliError, Command, Config, Preset};

/// Starts checked by `verify` across one period or the free horizon.
const VERIFY_STARTS: usize = 64;

/// GPE agreement between measured and predicted norms.
const GPE_REL_TOL: f64 = 1e-2;

/// Oracle acceptance band around the extremal value.
const ORACLE_BELOW: f64 = 1e-3;
const ORACLE_ABOVE: f64 = 1.05;

pub fn run(command: Command, config: &Config) -> Result<Outcome, CliError> {
    if config.n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }
    if config.t.is_nan() || config.t <= 0.0 {
        return Err(CliError::Usage(format!(
            "T must be positive, got {}",
            config.t
        )));
    }
    match command {
        Command::Mu => cmd_mu(config),
        Command::Extremal => cmd_extremal(config),
        Command::Oracle => cmd_oracle(config),
        Command::Decay => cmd_decay(config),
        Command::Gain => cmd_gain(config),
        Command::Gpe => cmd_gpe(config),
        Command::Verify => cmd_verify(config),
    }
}

fn bounds(config: &Config) -> Result<(f64, f64), CliError> {
    let (Some(a), Some(b)) = (config.a, config.b) else {
        return Err(CliError::Usage("--a and --b are required".into()));
    };
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return Err(CliError::Usage(format!("need 0 < a <= b, got a={a} b={b}")));
    }
    Ok((a, b))
}

fn planar(config: &Config) -> Result<(), CliError> {
    if config.n != 2 {
        return Err(CliError::Usage(format!(
            "controls are only synthesized for n = 2, got n = {}",
            config.n
        )));
    }
    Ok(())
}

fn strict(a: f64, b: f64) -> Result<(), CliError> {
    if a >= b {
        return Err(CliError::Usage(format!(
            "this subcommand needs a < b, got a = b = {a}"
        )));
    }
    Ok(())
}

fn object(v: impl Serialize) -> Result<Map<String, Value>, CliError> {
    match serde_json::to_value(v)? {
        Value::Object(m) => Ok(m),
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            Ok(m)
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_signal(path: &Path) -> Result<MatrixSignal, CliError> {
    Ok(MatrixSignal::from_json(&read(path)?)?)
}

fn cmd_mu(config: &Config) -> Result<Outcome, CliError> {
    let (a, b) = bounds(config)?;
    planar(config)?;
    let m = mu(a, b)?;
    let passed = m.mu <= a + 1e-6;
    let result = object(json!({
        "mu": m.mu,
        "source": m.source,
        "ratio": m.mu * (1.0 + b * b) / a,
        "upper_bound_a": a,
        "decay_rate": m.mu / config.t,
    }))?;
    Ok(Outcome {
        result,
        table: None,
        passed,
    })
}

fn cmd_extremal(config: &Config) -> Result<Outcome, CliError> {
    let (a, b) = bounds(config)?;
    planar(config)?;
    strict(a, b)?;
    let oc = build_optimal_control(a, b)?;
    let report = verify_extremal(&oc.trajectory, &oc.params, config.tol);
    let closed = cost_closed_form(oc.params.alpha, oc.params.d)?;
    let result = object(json!({
        "mu": oc.mu,
        "mu_closed_form": closed,
        "params": oc.params,
        "omega0": oc.omega0.as_slice(),
        "seam_residual": oc.seam.seam_residual,
        "gram_residual": oc.gram_residual,
        "energy_drift": oc.trajectory.energy_drift(&oc.params),
        "samples": oc.trajectory.len(),
        "residuals": report.residuals,
    }))?;
    Ok(Outcome {
        result,
        table: Some(oc.trajectory.to_csv()),
        passed: report.passed,
    })
}

fn cmd_oracle(config: &Config) -> Result<Outcome, CliError> {
    let (a, b) = bounds(config)?;
    planar(config)?;
    let r = brute_force_mu2(a, b, config.segments, config.seeds, DEFAULT_PENALTY)?;
    let reference = mu(a, b)?;
    // axis hopping only bounds μ from above, so only that side is checked
    let lower_ok =
        reference.source == MuSource::AxisHopping || r.mu_hat >= reference.mu - ORACLE_BELOW;
    let upper_ok = r.mu_hat <= ORACLE_ABOVE * reference.mu;
    let mut result = object(&r)?;
    result.insert("mu_extremal".into(), json!(reference.mu));
    result.insert("extremal_source".into(), json!(reference.source));
    result.insert("relative_gap".into(), json!(r.mu_hat / reference.mu - 1.0));
    let mut table = String::from("k,t0,t1,angle\n");
    let h = (a + b) / r.angles.len() as f64;
    for (k, p) in r.angles.iter().enumerate() {
        let _ = writeln!(table, "{k},{},{},{p}", h * k as f64, h * (k + 1) as f64);
    }
    Ok(Outcome {
        result,
        table: Some(table),
        passed: lower_ok && upper_ok,
    })
}

/// The reflected optimal control with window `T` (period `2T`).
fn synthesized(a: f64, b: f64, t: f64) -> Result<(MatrixSignal, f64), CliError> {
    let m = mu(a, b)?;
    let signal = match m.source {
        MuSource::Pendulum => {
            let oc = build_optimal_control(a, b)?;
            time_rescale(oc.signal.as_matrix(), 2.0 * t)?
        }
        MuSource::AxisHopping => axis_hopping_control(a, t, 2)?.into_periodic(),
    };
    Ok((signal, m.mu))
}

fn cmd_decay(config: &Config) -> Result<Outcome, CliError> {
    let (signal, expected) = match &config.signal {
        Some(path) => (load_signal(path)?, None),
        None => {
            let (a, b) = bounds(config)?;
            planar(config)?;
            let (s, m) = synthesized(a, b, config.t)?;
            (s, Some(m / config.t))
        }
    };
    let horizon = signal.period().is_none().then(|| signal.horizon());
    let summary = decay_rate(&signal, config.periods.max(1), horizon, DEFAULT_TOL)?;
    let best = summary.best();
    let passed = best.rate.is_finite()
        && expected.is_none_or(|e| (best.rate - e).abs() <= config.tol * e.abs());
    let mut result = object(&summary)?;
    result.insert("rate".into(), json!(best.rate));
    result.insert("expected_rate".into(), json!(expected));
    Ok(Outcome {
        result,
        table: None,
        passed,
    })
}

fn cmd_gain(config: &Config) -> Result<Outcome, CliError> {
    let (a, b) = bounds(config)?;
    planar(config)?;
    strict(a, b)?;
    let r = gain_estimate(a, b, config.t, config.periods.max(1))?;
    let asymptote_gap = (r.simulated_normalized * r.mu_half - 1.0).abs();
    let mut result = object(r)?;
    result.insert("asymptote_gap".into(), json!(asymptote_gap));
    Ok(Outcome {
        result,
        table: None,
        passed: r.consistent() && asymptote_gap <= REPORT_TOL,
    })
}

fn cmd_gpe(config: &Config) -> Result<Outcome, CliError> {
    let (schedule, prefix) = match &config.schedule {
        Some(path) => {
            let s = GPESchedule::from_json(&read(path)?)?;
            let p = config.prefix.min(s.len());
            (s, p)
        }
        None => {
            let s = match config.preset {
                Preset::Convergent => GPESchedule::convergent(config.prefix)?,
                Preset::Divergent => GPESchedule::divergent(config.prefix)?,
            };
            (s, config.prefix)
        }
    };
    let series = series_criterion(&schedule, prefix)?;
    let g = build_gpe_signal(&schedule, prefix)?;
    let norms = asymptotic_norm(&g)?;
    let window_dev = g
        .window_decay
        .iter()
        .zip(&g.mus)
        .map(|(w, m)| (w - m).abs())
        .fold(0.0, f64::max);
    let final_norm = norms.rows.last().map_or(1.0, |r| r.norm);
    let result = object(json!({
        "prefix": prefix,
        "verdict": series.verdict,
        "series_partial_sums": series.partial_sums,
        "mus": g.mus,
        "final_norm": final_norm,
        "limit_estimate": norms.limit_estimate,
        "max_rel_dev": norms.max_rel_dev,
        "max_window_dev": window_dev,
        "rows": norms.rows,
    }))?;
    Ok(Outcome {
        result,
        table: Some(norms.to_csv()),
        passed: norms.max_rel_dev <= GPE_REL_TOL && window_dev <= config.tol,
    })
}

fn cmd_verify(config: &Config) -> Result<Outcome, CliError> {
    let (a, b) = bounds(config)?;
    let Some(path) = &config.signal else {
        // no signal: certify the synthesized extremal instead
        return cmd_extremal(config);
    };
    let signal = load_signal(path)?;
    let t = config.t;
    let span = match signal.period() {
        Some(p) => p,
        None => signal.horizon() - t,
    };
    if span < 0.0 {
        return Err(CliError::Usage(format!(
            "signal horizon {} is shorter than T = {t}",
            signal.horizon()
        )));
    }
    let starts: Vec<f64> = if span > 0.0 {
        (0..VERIFY_STARTS)
            .map(|k| span * k as f64 / VERIFY_STARTS as f64)
            .collect()
    } else {
        vec![0.0]
    };
    let int = verify_int(&signal, a, b, t, config.tol)?;
    let pe = verify_pe(&signal, a, b, t, &starts, config.tol)?;
    let passed = int.satisfies && pe.iter().all(|w| w.satisfies);
    let mut table = String::from("start,gram_eigen_min,gram_eigen_max,satisfies\n");
    for w in &pe {
        let _ = writeln!(
            table,
            "{},{},{},{}",
            w.window_start, w.gram_eigen_min, w.gram_eigen_max, w.satisfies
        );
    }
    let worst_min = pe
        .iter()
        .map(|w| w.gram_eigen_min)
        .fold(f64::INFINITY, f64::min);
    let worst_max = pe.iter().map(|w| w.gram_eigen_max).fold(0.0, f64::max);
    let result = object(json!({
        "dim": signal.dim(),
        "rank_one": signal.is_rank_one(),
        "integral": int,
        "windows_checked": pe.len(),
        "worst_eigen_min": worst_min,
        "worst_eigen_max": worst_max,
    }))?;
    Ok(Outcome {
        result,
        table: Some(table),
        passed,
    })
}
