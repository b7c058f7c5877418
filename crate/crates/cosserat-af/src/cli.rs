//! Command-line front end: subcommand dispatch, run orchestration, file
//! emission, and exit-code discipline.
//!
//! Exit codes: 0 when the run and every enabled check succeed, 2 for
//! configuration problems (unreadable or invalid config, inadmissible
//! data, impossible scenario), 3 when the nonlinear iteration stalls (the
//! partial trace is still written), 4 when the run finishes but an
//! enabled verification fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, LoadedConfig, ScenarioConfig};
use crate::diagnostics::{
    build_test_functions, coercivity_probe, energy_inequality_history, field_report,
    max_violation, point_energy_inequality_history, point_report, point_test_pairs,
    EnergyReport,
};
use crate::evolution::{
    run_field_with, run_point, trajectory_distance, FieldDrive, FieldRun, PointRun, PointSweep,
};
use crate::material::ModelError;
use crate::trace::{
    field_run_monitors, field_snapshot, field_trace_csv, point_run_monitors, point_trace_csv,
    report_passed, sweep_summary_csv, verification_report, CheckLine,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

/// Relative tolerance of the energy-inequality gate: violations are
/// measured against the largest energy seen along the run.
pub const ENERGY_VIOLATION_REL_TOL: f64 = 1e-6;
/// Slack on the backstress saturation gate `|b| d/c <= 1`.
pub const SATURATION_SLACK: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "cosserat-af",
    version,
    about = "Cyclic plasticity with nonlinear kinematic hardening and micropolar coupling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one material point and write its trajectory trace
    MaterialPoint(RunArgs),
    /// Solve the boundary-driven cube; write the trace and snapshots
    Solve(RunArgs),
    /// Rerun the point scenario over the sweep's relaxation coefficients
    SweepNu(RunArgs),
    /// Run the scenario and report every enabled verification
    VerifyEnergy(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// scenario file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// output directory (default: the config's output.dir, else the
    /// working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// replaces the probe seed of the config
    #[arg(long)]
    seed: Option<u64>,
}

/// Parses the arguments, runs the requested subcommand, and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return code;
        }
    };
    let (args, action): (&RunArgs, fn(&ScenarioConfig, &Path) -> i32) = match &cli.command {
        Command::MaterialPoint(a) => (a, material_point),
        Command::Solve(a) => (a, solve),
        Command::SweepNu(a) => (a, sweep_nu),
        Command::VerifyEnergy(a) => (a, verify_energy),
    };

    let LoadedConfig {
        mut config,
        warnings,
    } = match parse_config(&args.config) {
        Ok(loaded) => loaded,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if let Some(seed) = args.seed {
        config.verify.seed = seed;
    }

    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory {}: {e}", out_dir.display());
        return EXIT_CONFIG;
    }

    action(&config, &out_dir)
}

fn exit_code_for(e: &ModelError) -> i32 {
    match e {
        ModelError::InvalidParams(_)
        | ModelError::InadmissibleState(_)
        | ModelError::InadmissibleScenario(_) => EXIT_CONFIG,
        _ => EXIT_NONCONVERGENCE,
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), i32> {
    if let Err(e) = std::fs::write(path, content) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return Err(EXIT_CONFIG);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn print_checks(checks: &[CheckLine]) {
    for c in checks {
        let mut line = format!("check {} {}", c.name, if c.passed { "pass" } else { "FAIL" });
        for (k, v) in &c.details {
            line.push(' ');
            line.push_str(k);
            line.push(' ');
            line.push_str(v);
        }
        println!("{line}");
    }
}

fn checks_exit(checks: &[CheckLine]) -> i32 {
    print_checks(checks);
    if report_passed(checks) {
        EXIT_OK
    } else {
        EXIT_VERIFICATION
    }
}

fn structural_checks(config: &ScenarioConfig, max_trace: f64, max_saturation: f64) -> Vec<CheckLine> {
    let mut checks = Vec::new();
    if config.verify.trace_conservation {
        checks.push(
            CheckLine::new("trace_conservation", max_trace == 0.0).value("max_abs_trace", max_trace),
        );
    }
    if config.verify.backstress_bound {
        if config.material.d > 0.0 {
            checks.push(
                CheckLine::new("backstress_bound", max_saturation <= 1.0 + SATURATION_SLACK)
                    .value("max_saturation", max_saturation),
            );
        } else {
            checks.push(
                CheckLine::new("backstress_bound", true)
                    .detail("skipped", "d = 0 leaves the bound vacuous".into()),
            );
        }
    }
    checks
}

fn run_point_scenario(config: &ScenarioConfig) -> Result<PointRun, i32> {
    let drive = config.loading.point_drive().map_err(|e| {
        eprintln!("error: loading: {e}");
        EXIT_CONFIG
    })?;
    Ok(run_point(
        &config.material,
        &drive,
        config.initial.state(),
        config.run.t_end,
        config.run.dt,
    ))
}

fn material_point(config: &ScenarioConfig, out_dir: &Path) -> i32 {
    let run = match run_point_scenario(config) {
        Ok(run) => run,
        Err(code) => return code,
    };
    let csv = point_trace_csv(config, &run);
    if let Err(code) = write_file(&out_dir.join("point-trace.csv"), &csv) {
        return code;
    }
    if let Some(e) = &run.failure {
        eprintln!("error: {e}");
        return exit_code_for(e);
    }
    let monitors = point_run_monitors(&config.material, &run);
    checks_exit(&structural_checks(
        config,
        monitors.max_trace,
        monitors.max_saturation,
    ))
}

struct FieldOutcome {
    sys: crate::fem::CoupledSystem,
    run: FieldRun,
    program: crate::config::FieldProgram,
}

fn run_field_scenario(config: &ScenarioConfig, out_dir: &Path) -> Result<FieldOutcome, i32> {
    let sys = config.build_system().map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })?;
    let program = config.field_program().map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })?;
    let g_u = |x, t| program.displacement(x, t);
    let g_a = |x, t| program.microrotation(x, t);
    let drive = FieldDrive {
        g_u: &g_u,
        g_a: &g_a,
        body: None,
        couple: None,
        traction: None,
    };
    let states = vec![config.initial.state(); sys.n_qps()];
    let run = run_field_with(
        &sys,
        &drive,
        states,
        config.run.t_end,
        config.run.dt,
        config.initial.policy,
        &config.run.stagger(),
    )
    .map_err(|e| {
        eprintln!("error: {e}");
        exit_code_for(&e)
    })?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let csv = field_trace_csv(&sys, config, &run);
    write_file(&out_dir.join("field-trace.csv"), &csv)?;
    let stride = config.output.snapshot_stride;
    let last = run.steps.len() - 1;
    for (i, step) in run.steps.iter().enumerate() {
        if i == last || (stride > 0 && i % stride == 0) {
            let name = format!("snapshot-{i:06}.txt");
            write_file(&out_dir.join(name), &field_snapshot(&sys, config, step))?;
        }
    }
    Ok(FieldOutcome { sys, run, program })
}

fn field_checks(config: &ScenarioConfig, outcome: &FieldOutcome) -> (Vec<CheckLine>, EnergyReport) {
    let FieldOutcome { sys, run, program } = outcome;
    let mut report = field_report(sys, run);
    let monitors = field_run_monitors(&config.material, run);
    let mut checks = structural_checks(config, monitors.max_trace, monitors.max_saturation);
    if config.verify.energy_inequality {
        let g_u = |x, t| program.displacement(x, t);
        let g_a = |x, t| program.microrotation(x, t);
        let drive = FieldDrive {
            g_u: &g_u,
            g_a: &g_a,
            body: None,
            couple: None,
            traction: None,
        };
        match build_test_functions(sys, &drive) {
            Ok(pairs) => {
                let mut worst: f64 = 0.0;
                for pair in &pairs {
                    let name = format!("energy_inequality[{}]", pair.label);
                    match energy_inequality_history(sys, run, &drive, pair) {
                        Ok(history) => {
                            let scale = history
                                .iter()
                                .map(|s| s.energy.abs().max(s.bound.abs()))
                                .fold(1e-12, f64::max);
                            let violation = max_violation(&history);
                            worst = worst.max(violation);
                            checks.push(
                                CheckLine::new(&name, violation <= ENERGY_VIOLATION_REL_TOL * scale)
                                    .value("violation", violation)
                                    .value("scale", scale),
                            );
                        }
                        Err(e) => {
                            checks.push(CheckLine::new(&name, false).detail("error", e.to_string()))
                        }
                    }
                }
                report.energy_inequality_residual = Some(worst);
            }
            Err(e) => checks
                .push(CheckLine::new("energy_inequality", false).detail("error", e.to_string())),
        }
    }
    if config.verify.coercivity {
        let probe = coercivity_probe(sys, config.verify.coercivity_samples, config.verify.seed);
        report.coercivity_ratio = Some(probe.min_ratio);
        checks.push(
            CheckLine::new("coercivity", probe.min_ratio > 0.0)
                .value("min_ratio", probe.min_ratio)
                .detail("samples", probe.samples.to_string()),
        );
    }
    (checks, report)
}

fn solve(config: &ScenarioConfig, out_dir: &Path) -> i32 {
    let outcome = match run_field_scenario(config, out_dir) {
        Ok(o) => o,
        Err(code) => return code,
    };
    if let Some(e) = &outcome.run.failure {
        eprintln!("error: {e}");
        return exit_code_for(e);
    }
    let (checks, _) = field_checks(config, &outcome);
    checks_exit(&checks)
}

fn sweep_nu(config: &ScenarioConfig, out_dir: &Path) -> i32 {
    let Some(sweep_cfg) = &config.sweep else {
        eprintln!("error: sweep-nu needs a sweep section listing the relaxation coefficients");
        return EXIT_CONFIG;
    };
    let mut sweep = PointSweep {
        nus: sweep_cfg.nus.clone(),
        runs: Vec::with_capacity(sweep_cfg.nus.len()),
        consecutive_diffs: Vec::new(),
    };
    for &nu in &sweep_cfg.nus {
        let mut cfg_nu = config.clone();
        cfg_nu.material.nu = nu;
        let run = match run_point_scenario(&cfg_nu) {
            Ok(run) => run,
            Err(code) => return code,
        };
        let csv = point_trace_csv(&cfg_nu, &run);
        let name = format!("point-trace-nu-{nu:e}.csv");
        if let Err(code) = write_file(&out_dir.join(name), &csv) {
            return code;
        }
        if let Some(e) = &run.failure {
            eprintln!("error: at nu = {nu:e}: {e}");
            return exit_code_for(e);
        }
        sweep.runs.push(run);
    }
    for i in 1..sweep.runs.len() {
        sweep
            .consecutive_diffs
            .push(trajectory_distance(&sweep.runs[i - 1], &sweep.runs[i]));
    }
    let summary = sweep_summary_csv(config, &sweep);
    if let Err(code) = write_file(&out_dir.join("sweep-summary.csv"), &summary) {
        return code;
    }

    let mut max_trace: f64 = 0.0;
    let mut max_saturation: f64 = 0.0;
    let mut overstress = Vec::new();
    for (i, run) in sweep.runs.iter().enumerate() {
        let mut p = config.material;
        p.nu = sweep.nus[i];
        let m = point_run_monitors(&p, run);
        max_trace = max_trace.max(m.max_trace);
        max_saturation = max_saturation.max(m.max_saturation);
        overstress.push(crate::diagnostics::point_overstress_l2(&p, run));
    }
    let mut checks = structural_checks(config, max_trace, max_saturation);
    let decreasing = overstress
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] <= 1e-14 && w[1] <= 1e-14));
    let mut line = CheckLine::new("overstress_decreases", decreasing);
    for (nu, l2) in sweep.nus.iter().zip(&overstress) {
        line = line.detail(&format!("l2[{nu:e}]"), format!("{l2:.17e}"));
    }
    checks.push(line);
    checks_exit(&checks)
}

fn verify_energy(config: &ScenarioConfig, out_dir: &Path) -> i32 {
    let (checks, report) = if config.mesh.is_some() {
        let outcome = match run_field_scenario(config, out_dir) {
            Ok(o) => o,
            Err(code) => return code,
        };
        if let Some(e) = &outcome.run.failure {
            eprintln!("error: {e}");
            return exit_code_for(e);
        }
        field_checks(config, &outcome)
    } else {
        let run = match run_point_scenario(config) {
            Ok(run) => run,
            Err(code) => return code,
        };
        if let Some(e) = &run.failure {
            eprintln!("error: {e}");
            return exit_code_for(e);
        }
        point_checks(config, &run)
    };
    let report_text = verification_report(config, Some(&report), &checks);
    if let Err(code) = write_file(&out_dir.join("verification.txt"), &report_text) {
        return code;
    }
    checks_exit(&checks)
}

fn point_checks(config: &ScenarioConfig, run: &PointRun) -> (Vec<CheckLine>, EnergyReport) {
    let p = &config.material;
    let mut report = point_report(p, run);
    let monitors = point_run_monitors(p, run);
    let mut checks = structural_checks(config, monitors.max_trace, monitors.max_saturation);
    if config.verify.energy_inequality {
        let mut worst: f64 = 0.0;
        for pair in &point_test_pairs(p, run) {
            let name = format!("energy_inequality[{}]", pair.label);
            match point_energy_inequality_history(p, run, pair) {
                Ok(history) => {
                    let scale = history
                        .iter()
                        .map(|s| s.energy.abs().max(s.bound.abs()))
                        .fold(1e-12, f64::max);
                    let violation = max_violation(&history);
                    worst = worst.max(violation);
                    checks.push(
                        CheckLine::new(&name, violation <= ENERGY_VIOLATION_REL_TOL * scale)
                            .value("violation", violation)
                            .value("scale", scale),
                    );
                }
                Err(e) => {
                    checks.push(CheckLine::new(&name, false).detail("error", e.to_string()))
                }
            }
        }
        report.energy_inequality_residual = Some(worst);
    }
    (checks, report)
}
