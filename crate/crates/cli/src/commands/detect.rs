use chrono::{DateTime, SecondsFormat};
use serde_json::{json, Value};
use websift::events::{assemble_update_tensor, extract_events, Thresholds, TimeWindow};
use websift::io::{parse_edge_list, parse_id_list, parse_update_log, parse_vp_homes, write_tensor};
use websift::locate::{rank_candidate_causes, AsGraph};
use websift::tensor::{cp_als_traced, CpOptions};

use super::{num, path_value, Outcome};
use crate::config::{check_range, ConfigFile, Resolver};
use crate::error::{read_input, write_output, CliError, EXIT_NUMERICAL};
use crate::report::Report;
use crate::DetectArgs;

pub fn run(args: &DetectArgs, file: &ConfigFile) -> Result<Outcome, CliError> {
    let mut cfg = Resolver::new(file);
    let seed: u64 = cfg.require("seed", args.seed)?;
    let dt = cfg.get("dt", args.dt, 30.0)?;
    let bins = cfg.get("bins", args.bins, 2880usize)?;
    let rank: usize = cfg.require("rank", args.rank)?;
    let components = cfg.get("components", args.components, 1usize)?;
    let theta_as = cfg.get("theta_as", args.theta_as, 0.5)?;
    let theta_time = cfg.get("theta_time", args.theta_time, 0.5)?;
    let theta_vp = cfg.get("theta_vp", args.theta_vp, 0.5)?;
    let max_sweeps = cfg.get("max_sweeps", args.max_sweeps, 200usize)?;
    let tol = cfg.get("tol", args.tol, 1e-6)?;
    let start_flag = cfg.optional("start", args.start)?;

    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CliError::usage(format!("`dt` = {dt} must be positive")));
    }
    if bins == 0 {
        return Err(CliError::usage("`bins` must be at least 1"));
    }
    if rank == 0 {
        return Err(CliError::usage("`rank` must be at least 1"));
    }
    if components == 0 || components > rank {
        return Err(CliError::usage(format!(
            "`components` = {components} must lie in 1..={rank}"
        )));
    }
    check_range("theta_as", theta_as, 0.0, 1.0, false)?;
    check_range("theta_time", theta_time, 0.0, 1.0, false)?;
    check_range("theta_vp", theta_vp, 0.0, 1.0, false)?;
    if max_sweeps == 0 {
        return Err(CliError::usage("`max_sweeps` must be at least 1"));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::usage(format!("`tol` = {tol} must be positive")));
    }
    if let Some(s) = start_flag {
        if !s.is_finite() {
            return Err(CliError::usage("`start` must be finite"));
        }
    }

    let updates_name = args.updates.display().to_string();
    let records = parse_update_log(&updates_name, &read_input(&args.updates)?)?;
    if records.is_empty() {
        return Err(CliError::data(format!(
            "{updates_name}: update log is empty"
        )));
    }
    let graph_name = args.graph.display().to_string();
    let graph = AsGraph::from_edges(parse_edge_list(&graph_name, &read_input(&args.graph)?)?);
    let vp_home = parse_vp_homes(
        &args.vp_home.display().to_string(),
        &read_input(&args.vp_home)?,
    )?;
    let vp_filter = match &args.vp_filter {
        Some(p) => Some(parse_id_list(&p.display().to_string(), &read_input(p)?)?),
        None => None,
    };

    let start = start_flag.unwrap_or_else(|| {
        let earliest = records
            .iter()
            .map(|r| r.timestamp)
            .fold(f64::INFINITY, f64::min);
        (earliest / dt).floor() * dt
    });
    cfg.echo_value("start", num(start));
    let window = TimeWindow::new(start, dt, bins)?;
    let (tensor, maps) = assemble_update_tensor(&records, window, vp_filter.as_ref())
        .map_err(|e| CliError::from_core(&updates_name, e))?;
    if let Some(p) = &args.tensor_out {
        write_output(p, &write_tensor(&tensor))?;
    }

    let opts = CpOptions {
        max_sweeps,
        tol,
        seed,
    };
    let (model, trace) = cp_als_traced(&tensor, rank, &opts)?;
    let thresholds = Thresholds {
        as_frac: theta_as,
        time_frac: theta_time,
        vp_frac: theta_vp,
    };
    let events = extract_events(&model, &maps, components, &thresholds)?;

    let mut ranked_events = Vec::with_capacity(events.len());
    for event in &events {
        let causes = rank_candidate_causes(&graph, event, &vp_home)
            .map_err(|e| CliError::from_core(&graph_name, e))?;
        ranked_events.push((event, causes));
    }

    cfg.echo_value("updates", path_value(&args.updates));
    cfg.echo_value("graph", path_value(&args.graph));
    cfg.echo_value("vp_home", path_value(&args.vp_home));
    if let Some(p) = &args.vp_filter {
        cfg.echo_value("vp_filter", path_value(p));
    }
    let mut report = Report::new("detect", cfg.echo);
    let (m, t, o) = tensor.shape();
    let final_err = trace.relative_sq_errors.last().copied().unwrap_or(f64::NAN);
    report.push(
        "decomposition",
        json!({
            "shape": [m, t, o],
            "nonzeros": tensor.nnz(),
            "retained_updates": num(tensor.sum()),
            "sweeps": trace.sweeps,
            "converged": trace.converged,
            "relative_error": num(final_err.sqrt()),
            "weights": model.weights.iter().map(|&w| num(w)).collect::<Vec<_>>(),
        }),
    );
    for (n, (event, causes)) in ranked_events.iter().enumerate() {
        let ranges: Vec<Value> = contiguous_runs(&event.time_bins)
            .into_iter()
            .map(|(first, last)| {
                let (lo, _) = maps.window.bin_bounds(first);
                let (_, hi) = maps.window.bin_bounds(last);
                json!({
                    "first_bin": first,
                    "last_bin": last,
                    "start_epoch": num(lo),
                    "end_epoch": num(hi),
                    "start_utc": iso8601(lo),
                    "end_utc": iso8601(hi),
                })
            })
            .collect();
        let candidates: Vec<Value> = causes
            .iter()
            .map(|(asn, score)| json!({"as": asn, "score": num(*score)}))
            .collect();
        report.push(
            "event",
            json!({
                "rank": n + 1,
                "component": event.component_index,
                "weight": num(event.weight),
                "as_set": event.as_set,
                "time_bins": event.time_bins,
                "time_ranges": ranges,
                "vp_set": event.vp_set,
                "candidates": candidates,
            }),
        );
    }

    let failure = (!trace.converged).then(|| CliError {
        code: EXIT_NUMERICAL,
        message: format!(
            "ALS did not converge within {max_sweeps} sweeps (tol {tol}); report written with converged = false"
        ),
    });
    Ok(Outcome { report, failure })
}

/// Sorted bins grouped into inclusive `(first, last)` runs.
fn contiguous_runs(bins: &[usize]) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &b in bins {
        match runs.last_mut() {
            Some((_, last)) if *last + 1 == b => *last = b,
            _ => runs.push((b, b)),
        }
    }
    runs
}

fn iso8601(epoch_seconds: f64) -> Value {
    let micros = (epoch_seconds * 1e6).round();
    if !micros.is_finite() || micros.abs() >= i64::MAX as f64 {
        return Value::Null;
    }
    DateTime::from_timestamp_micros(micros as i64).map_or(Value::Null, |t| {
        Value::from(t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
    })
}
