//! Subcommand implementations. Each writes its outputs under the run
//! directory and returns the text to print on standard output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qfluid_core::certify::{
    certify_run, inviscid_sweep, Certificate, ManufacturedReference, SweepReport,
};
use qfluid_core::functionals::{EntropyReport, ErrorMode};
use qfluid_core::oracle::run_sl_recorded;
use qfluid_core::solver::{report_for, run as run_solver, ReferenceSource, SystemState, Trajectory};
use qfluid_core::spectral::TorusGrid;
use qfluid_core::state::{augment, deaugment, inverse_madelung, madelung, FluidState, Params, WaveFunction};
use qfluid_core::Error;
use serde_json::json;

use crate::config::{InitialData, Loaded, Mode};
use crate::snapshot::{self, Loaded as Snapshot};
use crate::CliError;

/// Which subcommand is asking, so the mode in the config can be checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Run,
    Certify,
    Sweep,
    OracleCompare,
}

impl Action {
    fn name(self) -> &'static str {
        match self {
            Action::Run => "run",
            Action::Certify => "certify",
            Action::Sweep => "sweep",
            Action::OracleCompare => "oracle-compare",
        }
    }

    fn accepts(self, mode: Mode) -> bool {
        match self {
            Action::Run => matches!(mode, Mode::RegNslk | Mode::AugNslk | Mode::Elk | Mode::Sl),
            Action::Certify => mode == Mode::Certify,
            Action::Sweep => mode == Mode::Sweep,
            Action::OracleCompare => mode == Mode::OracleCompare,
        }
    }
}

/// Runs `action` on a loaded configuration.
pub fn execute(action: Action, loaded: &Loaded) -> Result<String, CliError> {
    let mode = loaded.config.mode;
    if !action.accepts(mode) {
        return Err(CliError::Config(format!("subcommand {} does not run mode {}", action.name(), mode.name())));
    }
    let out = loaded.output_dir()?;
    fs::create_dir_all(&out)?;
    let result = match action {
        Action::Run if mode == Mode::Sl => run_wave(loaded, &out),
        Action::Run => run_fluid(loaded, &out),
        Action::Certify => certify(loaded, &out),
        Action::Sweep => sweep(loaded, &out),
        Action::OracleCompare => oracle_compare(loaded, &out),
    };
    let (status, reason) = match &result {
        Ok(_) => ("ok", "completed".to_string()),
        Err(e) => (e.status(), e.to_string()),
    };
    let doc = json!({
        "subcommand": action.name(),
        "config": loaded.raw,
        "params": effective_params(loaded),
        "status": status,
        "reason": reason,
    });
    fs::write(out.join("run.json"), serde_json::to_string_pretty(&doc)?)?;
    result
}

fn effective_params(loaded: &Loaded) -> Params {
    let mut p = loaded.config.params.clone();
    p.density_floor = loaded.config.solver.density_floor;
    p
}

fn check_grid(found: &TorusGrid, want: &TorusGrid, path: &Path) -> Result<(), CliError> {
    if found != want {
        return Err(CliError::Config(format!(
            "{} holds a {}D n={} grid, config asks for {}D n={}",
            path.display(),
            found.dim(),
            found.n(),
            want.dim(),
            want.n()
        )));
    }
    Ok(())
}

fn load_snapshot(loaded: &Loaded, path: &Path, grid: &TorusGrid) -> Result<Snapshot, CliError> {
    let path = loaded.resolve(path);
    let snap = snapshot::read_snapshot(&path)?;
    let found = match &snap {
        Snapshot::Fluid(s) => s.grid(),
        Snapshot::Augmented(a) => a.grid(),
        Snapshot::Wave(w) => w.grid(),
    };
    check_grid(found, grid, &path)?;
    Ok(snap)
}

pub fn initial_fluid(loaded: &Loaded) -> Result<FluidState, CliError> {
    let cfg = &loaded.config;
    let grid = cfg.grid()?;
    let params = effective_params(loaded);
    Ok(match &cfg.initial_data {
        InitialData::Recipe(r) => r.build(&grid, cfg.seed)?,
        InitialData::Snapshot(s) => match load_snapshot(loaded, &s.snapshot, &grid)? {
            Snapshot::Fluid(f) => f,
            Snapshot::Augmented(a) => deaugment(&a, &params)?,
            Snapshot::Wave(w) => madelung(&w, &params)?,
        },
    })
}

pub fn initial_wave(loaded: &Loaded) -> Result<WaveFunction, CliError> {
    let cfg = &loaded.config;
    if let InitialData::Snapshot(s) = &cfg.initial_data {
        if let Snapshot::Wave(w) = load_snapshot(loaded, &s.snapshot, &cfg.grid()?)? {
            return Ok(w);
        }
    }
    Ok(inverse_madelung(&initial_fluid(loaded)?, &effective_params(loaded))?)
}

fn format_value(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:e}"))
}

pub fn write_reports(path: &Path, reports: &[EntropyReport]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(EntropyReport::CSV_HEADER)?;
    for r in reports {
        w.write_record(r.columns().map(format_value))?;
    }
    w.flush()?;
    Ok(())
}

fn snapshot_path(out: &Path, index: usize) -> PathBuf {
    out.join("snapshots").join(format!("t_{index:06}.qfld"))
}

fn write_trajectory(out: &Path, traj: &Trajectory, params: &Params) -> Result<(), CliError> {
    write_reports(&out.join("reports.csv"), &traj.reports)?;
    fs::create_dir_all(out.join("snapshots"))?;
    for (index, state) in &traj.snapshots {
        snapshot::write_state(&snapshot_path(out, *index), state, params)?;
    }
    Ok(())
}

fn error_mode(params: &Params) -> ErrorMode {
    if params.nu == 0.0 {
        ErrorMode::Elk
    } else {
        ErrorMode::NslkNu
    }
}

fn run_fluid(loaded: &Loaded, out: &Path) -> Result<String, CliError> {
    let cfg = &loaded.config;
    let params = effective_params(loaded);
    let fluid = initial_fluid(loaded)?;
    let mut source = match &cfg.reference {
        Some(spec) => Some(ManufacturedReference::new(
            spec.clone(),
            fluid.rho.clone(),
            &params,
            cfg.solver.dt,
            error_mode(&params),
        )?),
        None => None,
    };
    let initial = if cfg.mode.augmented() {
        SystemState::Aug(augment(&fluid, &params)?)
    } else {
        SystemState::Reg(fluid)
    };
    let traj = run_solver(initial, &params, &cfg.solver, source.as_mut().map(|s| s as &mut dyn ReferenceSource))?;
    write_trajectory(out, &traj, &params)?;
    if let Some(e) = traj.failure {
        return Err(e.into());
    }
    let last = traj.reports.last().expect("final report");
    Ok(format!(
        "{} run finished at t = {} after {} steps, mass {:e}",
        cfg.mode.name(),
        last.time,
        traj.steps_taken,
        last.mass
    ))
}

fn run_wave(loaded: &Loaded, out: &Path) -> Result<String, CliError> {
    let cfg = &loaded.config;
    let params = effective_params(loaded);
    let psi = initial_wave(loaded)?;
    let traj = run_sl_recorded(&psi, &params, cfg.solver.dt, cfg.solver.t_end, Some(cfg.solver.report_every))?;
    let mut reports = Vec::new();
    let mut failure = traj.failure.clone();
    for (_, wave) in &traj.snapshots {
        match madelung(wave, &params).and_then(|s| report_for(&SystemState::Reg(s), &params)) {
            Ok(r) => reports.push(r),
            Err(e) => {
                failure.get_or_insert(e);
                break;
            }
        }
    }
    write_reports(&out.join("reports.csv"), &reports)?;
    fs::create_dir_all(out.join("snapshots"))?;
    let last_index = traj.snapshots.last().map_or(0, |s| s.0);
    for (index, wave) in &traj.snapshots {
        let keep = *index == 0 || *index == last_index || cfg.solver.snapshot_every.is_some_and(|k| index % k == 0);
        if keep {
            snapshot::write_wave(&snapshot_path(out, *index), wave, &params)?;
        }
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    let w = traj.final_wave();
    Ok(format!("sl run finished at t = {} after {last_index} steps, mass {:e}", w.time, w.mass()))
}

fn certify(loaded: &Loaded, out: &Path) -> Result<String, CliError> {
    let cfg = &loaded.config;
    let params = effective_params(loaded);
    let fluid = initial_fluid(loaded)?;
    let spec = cfg.reference.as_ref().expect("validated");
    let (traj, cert) = certify_run(&fluid, &params, &cfg.solver, spec)?;
    write_trajectory(out, &traj, &params)?;
    fs::write(out.join("certificate.json"), serde_json::to_string_pretty(&cert)?)?;
    if let Some(e) = traj.failure {
        return Err(e.into());
    }
    Ok(certificate_line(&cert))
}

fn certificate_line(cert: &Certificate) -> String {
    format!(
        "certificate {}: margin {:e}, C_used {:e}, tol {:e}",
        if cert.verdict { "pass" } else { "fail" },
        cert.margin,
        cert.c_used,
        cert.tol_cert
    )
}

fn write_sweep(path: &Path, report: &SweepReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["nu", "relE_ref", "relE_oracle", "verdict"])?;
    for e in &report.entries {
        let verdict = match (e.verdict, &e.error) {
            (_, Some(_)) => "error",
            (Some(true), _) => "pass",
            (Some(false), _) => "fail",
            (None, _) => "",
        };
        w.write_record([
            format!("{:e}", e.nu),
            format_value(e.rel_entropy_ref),
            format_value(e.rel_entropy_oracle),
            verdict.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn sweep(loaded: &Loaded, out: &Path) -> Result<String, CliError> {
    let cfg = &loaded.config;
    let fluid = initial_fluid(loaded)?;
    let spec = cfg.reference.as_ref().expect("validated");
    let nu_list = cfg.nu_list.as_deref().expect("validated");
    let report = inviscid_sweep(&fluid, &cfg.params, nu_list, &cfg.solver, spec)?;
    write_sweep(&out.join("sweep.csv"), &report)?;
    fs::write(out.join("sweep.json"), serde_json::to_string_pretty(&report)?)?;
    let mut text = String::new();
    for e in &report.entries {
        let _ = writeln!(
            text,
            "nu {:e}: relE_ref {}, relE_oracle {}, verdict {}",
            e.nu,
            format_value(e.rel_entropy_ref),
            format_value(e.rel_entropy_oracle),
            e.verdict.map_or("n/a", |v| if v { "pass" } else { "fail" })
        );
    }
    if let Some(order) = report.order_oracle {
        let _ = writeln!(text, "fitted order against the oracle: {order:.3}");
    }
    let failed: Vec<String> =
        report.entries.iter().filter_map(|e| e.error.as_ref().map(|m| format!("nu {:e}: {m}", e.nu))).collect();
    if !failed.is_empty() {
        print!("{text}");
        return Err(Error::Degenerate(format!("sweep entries failed: {}", failed.join("; "))).into());
    }
    Ok(text.trim_end().to_string())
}

fn oracle_compare(loaded: &Loaded, out: &Path) -> Result<String, CliError> {
    let cfg = &loaded.config;
    let params = effective_params(loaded);
    let fluid = initial_fluid(loaded)?;
    let psi = inverse_madelung(&fluid, &params)?;
    let traj = run_solver(SystemState::Aug(augment(&fluid, &params)?), &params, &cfg.solver, None)?;
    write_trajectory(out, &traj, &params)?;
    if let Some(e) = traj.failure {
        return Err(e.into());
    }
    let waves = run_sl_recorded(&psi, &params, cfg.solver.dt, cfg.solver.t_end, None)?;
    let wave = waves.final_wave();
    snapshot::write_wave(&out.join("snapshots").join("sl_final.qfld"), wave, &params)?;
    if let Some(e) = waves.failure {
        return Err(e.into());
    }
    let rho_fluid = traj.final_state().fluid(&params)?.rho;
    let rho_wave = wave.density();
    let grid = rho_wave.grid();
    let l1: f64 = rho_fluid.values().iter().zip(rho_wave.values()).map(|(a, b)| (a - b).abs()).sum::<f64>()
        * grid.cell_volume();
    let summary = json!({
        "t_end": cfg.solver.t_end,
        "l1_density": l1,
        "max_density_difference": rho_fluid.max_diff(&rho_wave),
        "mass_fluid": traj.final_state().mass(),
        "mass_wave": wave.mass(),
    });
    fs::write(out.join("oracle.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(format!("L1 density discrepancy at t = {}: {l1:e}", cfg.solver.t_end))
}

/// Summarizes a run directory and writes `plotdata_<name>.csv` per column.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let path = dir.join("reports.csv");
    if !path.is_file() {
        return Err(CliError::MissingData(format!("{} not found", path.display())));
    }
    let mut reader = csv::Reader::from_path(&path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("time") {
        return Err(CliError::MissingData(format!("{} has no time column", path.display())));
    }
    let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); header.len()];
    for record in reader.records() {
        let record = record?;
        let parse = |s: &str| -> Result<Option<f64>, CliError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| CliError::MissingData(format!("bad number {s:?} in {}", path.display())))
            }
        };
        let Some(t) = parse(record.get(0).unwrap_or(""))? else {
            return Err(CliError::MissingData(format!("row without time in {}", path.display())));
        };
        for (k, field) in record.iter().enumerate().skip(1) {
            if let Some(v) = parse(field)? {
                series[k].push((t, v));
            }
        }
    }
    if series.iter().all(Vec::is_empty) {
        return Err(CliError::MissingData(format!("{} has no rows", path.display())));
    }
    let mut text = String::new();
    let _ = writeln!(text, "{:<12} {:>14} {:>14} {:>14}", "column", "min", "max", "final");
    for (name, points) in header.iter().zip(&series).skip(1) {
        if points.is_empty() {
            continue;
        }
        let min = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let max = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let last = points.last().expect("nonempty").1;
        let _ = writeln!(text, "{name:<12} {min:>14.6e} {max:>14.6e} {last:>14.6e}");
        let mut w = csv::Writer::from_path(dir.join(format!("plotdata_{name}.csv")))?;
        w.write_record(["time", "value"])?;
        for (t, v) in points {
            w.write_record([format!("{t:e}"), format!("{v:e}")])?;
        }
        w.flush()?;
    }
    let cert_path = dir.join("certificate.json");
    if cert_path.is_file() {
        let cert: Certificate = serde_json::from_str(&fs::read_to_string(&cert_path)?)?;
        let _ = writeln!(text, "{}", certificate_line(&cert));
    }
    let run_path = dir.join("run.json");
    if run_path.is_file() {
        let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&run_path)?)?;
        if let Some(status) = doc.get("status").and_then(|s| s.as_str()) {
            let _ = writeln!(text, "status: {status}");
        }
    }
    Ok(text.trim_end().to_string())
}
