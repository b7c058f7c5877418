//! Deterministic text output: trace CSVs, field snapshots, sweep
//! summaries, and verification reports.
//!
//! Every emitted file starts with a versioned schema line followed by the
//! resolved configuration as commented TOML, so a result file alone
//! reproduces its run. Floats print with 17 significant digits, enough to
//! round-trip f64 exactly; identical runs produce byte-identical files.

use std::fmt::Write as _;

use crate::config::ScenarioConfig;
use crate::diagnostics::{
    field_overstress, field_rate_accumulators, point_overstress, point_rate_accumulators,
    stress_backstress_distance, EnergyBreakdown,
};
use crate::diagnostics::{field_energy, point_energy};
use crate::evolution::{FieldRun, FieldStep, PointRun, PointSweep};
use crate::fem::{CoupledSystem, QP_PER_ELEM};
use crate::material::MaterialParams;
use crate::mesh::DOFS_PER_NODE;
use crate::tensor::{DevSym3, Sym3};

pub const POINT_TRACE_SCHEMA: &str = "# cosserat-af trace v1 point";
pub const FIELD_TRACE_SCHEMA: &str = "# cosserat-af trace v1 field";
pub const SNAPSHOT_SCHEMA: &str = "# cosserat-af snapshot v1";
pub const SWEEP_SCHEMA: &str = "# cosserat-af sweep v1";
pub const REPORT_SCHEMA: &str = "# cosserat-af verification v1";

fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

fn push_config_echo(out: &mut String, config: &ScenarioConfig) {
    out.push_str("# config:\n");
    for line in config.resolved_toml().lines() {
        out.push_str("#   ");
        out.push_str(line);
        out.push('\n');
    }
}

fn push_sym_components(fields: &mut Vec<String>, s: &Sym3) {
    let m = s.to_mat3();
    for (i, j) in [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)] {
        fields.push(fmt(m[i][j]));
    }
}

fn sym_header(prefix: &str) -> String {
    ["xx", "yy", "zz", "xy", "xz", "yz"]
        .map(|c| format!("{prefix}_{c}"))
        .join(",")
}

fn saturation(p: &MaterialParams, b: &DevSym3) -> f64 {
    b.norm() * p.d / p.c
}

/// Trace of a material-point run: one row per recorded time level with the
/// full strain, internal variables, stress, and the scalar monitors.
pub fn point_trace_csv(config: &ScenarioConfig, run: &PointRun) -> String {
    let p = &config.material;
    let mut out = String::new();
    out.push_str(POINT_TRACE_SCHEMA);
    out.push('\n');
    push_config_echo(&mut out, config);
    let _ = writeln!(
        out,
        "time,{},{},{},{},energy_elastic,energy_backstress,energy_total,overstress,yield_gap,backstress_saturation,trace_eps_p,trace_b,substeps,iterations",
        sym_header("eps"),
        sym_header("eps_p"),
        sym_header("b"),
        sym_header("te"),
    );
    for i in 0..run.times.len() {
        let eps = &run.strains[i];
        let state = &run.states[i];
        let te = p.elastic_stress_of(eps, &state.eps_p);
        let energy = point_energy(p, eps, state);
        let mut fields = vec![fmt(run.times[i])];
        push_sym_components(&mut fields, eps);
        push_sym_components(&mut fields, &state.eps_p.to_sym3());
        push_sym_components(&mut fields, &state.b.to_sym3());
        push_sym_components(&mut fields, &te);
        fields.push(fmt(energy.elastic));
        fields.push(fmt(energy.backstress));
        fields.push(fmt(energy.total()));
        fields.push(fmt(point_overstress(p, eps, state)));
        fields.push(fmt(p.yield_gap(&te.dev(), &state.b)));
        fields.push(fmt(saturation(p, &state.b)));
        fields.push(fmt(state.eps_p.to_sym3().tr()));
        fields.push(fmt(state.b.to_sym3().tr()));
        let stats = if i == 0 { Default::default() } else { run.stats[i - 1] };
        fields.push(stats.substeps.to_string());
        fields.push(stats.iterations.to_string());
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    if let Some(e) = &run.failure {
        let _ = writeln!(out, "# aborted: {e}");
    }
    out
}

struct FieldMonitors {
    energy: EnergyBreakdown,
    overstress: f64,
    yield_gap_max: f64,
    saturation_max: f64,
    trace_eps_p_max: f64,
    trace_b_max: f64,
}

fn field_monitors(sys: &CoupledSystem, step: &FieldStep) -> FieldMonitors {
    let p = &sys.params;
    let mut m = FieldMonitors {
        energy: field_energy(sys, &step.dofs, &step.states),
        overstress: field_overstress(sys, &step.dofs, &step.states),
        yield_gap_max: f64::NEG_INFINITY,
        saturation_max: 0.0,
        trace_eps_p_max: 0.0,
        trace_b_max: 0.0,
    };
    sys.for_each_qp(&step.dofs, |el, q, _, kin| {
        let state = &step.states[QP_PER_ELEM * el + q];
        let te = sys.elastic_stress(kin, state);
        m.yield_gap_max = m.yield_gap_max.max(p.yield_gap(&te.dev(), &state.b));
        m.saturation_max = m.saturation_max.max(saturation(p, &state.b));
        m.trace_eps_p_max = m.trace_eps_p_max.max(state.eps_p.to_sym3().tr().abs());
        m.trace_b_max = m.trace_b_max.max(state.b.to_sym3().tr().abs());
    });
    m
}

/// Trace of a field run: one row of integrated monitors per time level.
pub fn field_trace_csv(sys: &CoupledSystem, config: &ScenarioConfig, run: &FieldRun) -> String {
    let mut out = String::new();
    out.push_str(FIELD_TRACE_SCHEMA);
    out.push('\n');
    push_config_echo(&mut out, config);
    for w in &run.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    out.push_str(
        "time,energy_elastic,energy_couple,energy_curvature,energy_backstress,energy_total,overstress,yield_gap_max,backstress_saturation_max,trace_eps_p_max,trace_b_max,staggered_iters,stress_change\n",
    );
    for step in &run.steps {
        let m = field_monitors(sys, step);
        let fields = [
            fmt(step.time),
            fmt(m.energy.elastic),
            fmt(m.energy.couple_stress),
            fmt(m.energy.curvature),
            fmt(m.energy.backstress),
            fmt(m.energy.total()),
            fmt(m.overstress),
            fmt(m.yield_gap_max),
            fmt(m.saturation_max),
            fmt(m.trace_eps_p_max),
            fmt(m.trace_b_max),
            step.staggered_iters.to_string(),
            fmt(step.stress_change),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    if let Some(e) = &run.failure {
        let _ = writeln!(out, "# aborted: {e}");
    }
    out
}

/// Full field state at one time level: node table with the solved
/// displacement and microrotation, element connectivity, and the
/// per-quadrature-point internal variables and stress.
pub fn field_snapshot(sys: &CoupledSystem, config: &ScenarioConfig, step: &FieldStep) -> String {
    let mesh = &sys.mesh;
    let mut out = String::new();
    out.push_str(SNAPSHOT_SCHEMA);
    out.push('\n');
    let _ = writeln!(out, "# time {}", fmt(step.time));
    push_config_echo(&mut out, config);

    out.push_str("[nodes]\n");
    out.push_str("# id x y z u_x u_y u_z a_x a_y a_z\n");
    for n in 0..mesh.n_nodes() {
        let x = mesh.node_coords(n);
        let mut fields = vec![n.to_string()];
        fields.extend(x.iter().map(|&v| fmt(v)));
        for c in 0..DOFS_PER_NODE {
            fields.push(fmt(step.dofs[DOFS_PER_NODE * n + c]));
        }
        out.push_str(&fields.join(" "));
        out.push('\n');
    }

    out.push_str("[elements]\n");
    out.push_str("# id n0 n1 n2 n3 n4 n5 n6 n7\n");
    for e in 0..mesh.n_elems() {
        let mut fields = vec![e.to_string()];
        fields.extend(mesh.elem_nodes(e).iter().map(|n| n.to_string()));
        out.push_str(&fields.join(" "));
        out.push('\n');
    }

    out.push_str("[qp_states]\n");
    out.push_str("# elem qp x y z eps_p_xx eps_p_yy eps_p_xy eps_p_xz eps_p_yz b_xx b_yy b_xy b_xz b_yz te_xx te_yy te_zz te_xy te_xz te_yz yield_gap\n");
    sys.for_each_qp(&step.dofs, |el, q, x, kin| {
        let state = &step.states[QP_PER_ELEM * el + q];
        let te = sys.elastic_stress(kin, state);
        let tem = te.to_mat3();
        let mut fields = vec![el.to_string(), q.to_string()];
        fields.extend(x.iter().map(|&v| fmt(v)));
        for s in [&state.eps_p, &state.b] {
            for v in [s.xx, s.yy, s.xy, s.xz, s.yz] {
                fields.push(fmt(v));
            }
        }
        for (i, j) in [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)] {
            fields.push(fmt(tem[i][j]));
        }
        fields.push(fmt(sys.params.yield_gap(&te.dev(), &state.b)));
        out.push_str(&fields.join(" "));
        out.push('\n');
    });
    out
}

/// Summary of a viscosity sweep: one row per relaxation coefficient with
/// the time-L2 overstress norm, the three rate accumulators, and the
/// trajectory distance to the previous coefficient. Ratio and distance
/// fields are empty on the first row.
pub fn sweep_summary_csv(config: &ScenarioConfig, sweep: &PointSweep) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_SCHEMA);
    out.push('\n');
    push_config_echo(&mut out, config);
    out.push_str(
        "nu,overstress_l2,overstress_ratio,rate_stress,rate_mismatch,rate_curvature,diff_te_b_from_previous\n",
    );
    let mut prev_l2 = None;
    for (i, run) in sweep.runs.iter().enumerate() {
        let mut p = config.material;
        p.nu = sweep.nus[i];
        let l2 = crate::diagnostics::point_overstress_l2(&p, run);
        let rates = point_rate_accumulators(&p, run);
        let ratio = prev_l2
            .map(|prev: f64| if prev > 0.0 { fmt(l2 / prev) } else { String::new() })
            .unwrap_or_default();
        let diff = if i == 0 {
            String::new()
        } else {
            fmt(stress_backstress_distance(&p, &sweep.runs[i - 1], run))
        };
        let fields = [
            fmt(sweep.nus[i]),
            fmt(l2),
            ratio,
            fmt(rates[0]),
            fmt(rates[1]),
            fmt(rates[2]),
            diff,
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
        prev_l2 = Some(l2);
    }
    out
}

/// One named pass/fail line of a verification report.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    /// key-value details, already formatted
    pub details: Vec<(String, String)>,
}

impl CheckLine {
    pub fn new(name: &str, passed: bool) -> Self {
        CheckLine {
            name: name.into(),
            passed,
            details: Vec::new(),
        }
    }

    pub fn detail(mut self, key: &str, value: String) -> Self {
        self.details.push((key.into(), value));
        self
    }

    pub fn value(self, key: &str, v: f64) -> Self {
        self.detail(key, fmt(v))
    }
}

/// Renders the verification report; the final line is `overall pass` only
/// when every check passed.
pub fn verification_report(
    config: &ScenarioConfig,
    energies: Option<&crate::diagnostics::EnergyReport>,
    checks: &[CheckLine],
) -> String {
    let mut out = String::new();
    out.push_str(REPORT_SCHEMA);
    out.push('\n');
    push_config_echo(&mut out, config);
    if let Some(e) = energies {
        out.push_str("[energies]\n");
        for (key, v) in [
            ("total", e.total_energy),
            ("elastic", e.elastic),
            ("couple_stress", e.couple_stress),
            ("curvature", e.curvature),
            ("backstress", e.backstress),
            ("overstress_l2", e.overstress_l2),
            ("rate_stress", e.rate_norms[0]),
            ("rate_mismatch", e.rate_norms[1]),
            ("rate_curvature", e.rate_norms[2]),
        ] {
            let _ = writeln!(out, "{key} {}", fmt(v));
        }
        if let Some(r) = e.coercivity_ratio {
            let _ = writeln!(out, "coercivity_min_ratio {}", fmt(r));
        }
        if let Some(r) = e.energy_inequality_residual {
            let _ = writeln!(out, "inequality_violation_max {}", fmt(r));
        }
    }
    out.push_str("[checks]\n");
    let mut all = true;
    for c in checks {
        all &= c.passed;
        let mut line = format!("{} {}", c.name, if c.passed { "pass" } else { "FAIL" });
        for (k, v) in &c.details {
            let _ = write!(line, " {k} {v}");
        }
        out.push_str(&line);
        out.push('\n');
    }
    let _ = writeln!(out, "overall {}", if all { "pass" } else { "FAIL" });
    out
}

pub fn report_passed(checks: &[CheckLine]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Convenience accessors used by several report builders.
pub struct RunMonitors {
    pub max_saturation: f64,
    pub max_trace: f64,
}

pub fn point_run_monitors(p: &MaterialParams, run: &PointRun) -> RunMonitors {
    let mut m = RunMonitors {
        max_saturation: 0.0,
        max_trace: 0.0,
    };
    for state in &run.states {
        m.max_saturation = m.max_saturation.max(saturation(p, &state.b));
        m.max_trace = m
            .max_trace
            .max(state.eps_p.to_sym3().tr().abs())
            .max(state.b.to_sym3().tr().abs());
    }
    m
}

pub fn field_run_monitors(p: &MaterialParams, run: &FieldRun) -> RunMonitors {
    let mut m = RunMonitors {
        max_saturation: 0.0,
        max_trace: 0.0,
    };
    for step in &run.steps {
        for state in &step.states {
            m.max_saturation = m.max_saturation.max(saturation(p, &state.b));
            m.max_trace = m
                .max_trace
                .max(state.eps_p.to_sym3().tr().abs())
                .max(state.b.to_sym3().tr().abs());
        }
    }
    m
}

/// The three rate accumulators of a field run, through the same entry
/// point the report builders use for point runs.
pub fn field_rates(sys: &CoupledSystem, run: &FieldRun) -> [f64; 3] {
    field_rate_accumulators(sys, run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::PointState;
    use crate::config::{parse_config_str, UNIAXIAL_CYCLIC_TOML};
    use crate::evolution::{run_point, sweep_point, PointDrive, Waveform};
    use crate::evolution::{run_field, AdmissibilityPolicy, FieldDrive};

    fn point_setup() -> (ScenarioConfig, PointRun) {
        let mut config = parse_config_str(UNIAXIAL_CYCLIC_TOML).unwrap().config;
        config.run.t_end = 2.0;
        config.run.dt = 0.1;
        let drive = config.loading.point_drive().unwrap();
        let run = run_point(
            &config.material,
            &drive,
            PointState::default(),
            config.run.t_end,
            config.run.dt,
        );
        (config, run)
    }

    #[test]
    fn point_trace_is_versioned_echoed_and_deterministic() {
        let (config, run) = point_setup();
        let csv = point_trace_csv(&config, &run);
        let again = point_trace_csv(&config, &run);
        assert_eq!(csv, again);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), POINT_TRACE_SCHEMA);
        assert!(csv.contains("# config:"));
        assert!(csv.contains("#   [material]"));
        let header = csv
            .lines()
            .find(|l| l.starts_with("time,"))
            .expect("column header");
        let n_cols = header.split(',').count();
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), run.times.len());
        for row in rows {
            assert_eq!(row.split(',').count(), n_cols, "{row}");
        }
    }

    #[test]
    fn floats_round_trip_through_the_trace_format() {
        let v = 0.1 + 0.2;
        let printed = fmt(v);
        assert_eq!(printed.parse::<f64>().unwrap(), v);
        assert_eq!(fmt(1.0), "1.00000000000000000e0");
    }

    #[test]
    fn aborted_point_run_flushes_the_prefix() {
        let mut config = parse_config_str(UNIAXIAL_CYCLIC_TOML).unwrap().config;
        // a giant step over many yield strains stalls the local iteration
        config.run.t_end = 4000.0;
        config.run.dt = 2000.0;
        config.loading.amplitude = 4000.0;
        let drive = config.loading.point_drive().unwrap();
        let run = run_point(
            &config.material,
            &drive,
            PointState::default(),
            config.run.t_end,
            config.run.dt,
        );
        let csv = point_trace_csv(&config, &run);
        if run.failure.is_some() {
            assert!(csv.contains("# aborted:"), "{csv}");
        }
        // the initial state row is always present
        assert!(csv.lines().filter(|l| !l.starts_with('#')).count() >= 2);
    }

    #[test]
    fn sweep_summary_lists_every_nu_with_ratios() {
        let config = parse_config_str(UNIAXIAL_CYCLIC_TOML).unwrap().config;
        let drive = PointDrive {
            direction: config.loading.point_drive().unwrap().direction,
            amplitude: 1.5,
            waveform: Waveform::Triangle { period: 2.0 },
        };
        let sweep =
            sweep_point(&config.material, &drive, PointState::default(), 2.0, 1e-2, 3).unwrap();
        let csv = sweep_summary_csv(&config, &sweep);
        assert_eq!(csv.lines().next().unwrap(), SWEEP_SCHEMA);
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 3);
        let first: Vec<&str> = rows[0].split(',').collect();
        assert_eq!(first[2], "", "first row has no ratio");
        assert_eq!(first[6], "", "first row has no previous run to diff");
        let ratio: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
        assert!(ratio > 0.0 && ratio < 1.0, "overstress drops with nu: {ratio}");
    }

    fn field_setup() -> (ScenarioConfig, CoupledSystem) {
        let mut config = parse_config_str(UNIAXIAL_CYCLIC_TOML).unwrap().config;
        config.mesh = Some(crate::config::MeshSection {
            divisions: [2, 2, 2],
            extents: [1.0, 1.0, 1.0],
            dirichlet_faces: crate::mesh::FACES.to_vec(),
        });
        config.run.t_end = 0.4;
        config.run.dt = 0.2;
        config.loading.amplitude = 0.3;
        let sys = config.build_system().unwrap();
        (config, sys)
    }

    #[test]
    fn field_trace_and_snapshot_cover_the_mesh() {
        let (config, sys) = field_setup();
        let program = config.field_program().unwrap();
        let g_u = |x, t| program.displacement(x, t);
        let g_a = |x, t| program.microrotation(x, t);
        let drive = FieldDrive {
            g_u: &g_u,
            g_a: &g_a,
            body: None,
            couple: None,
            traction: None,
        };
        let states = vec![PointState::default(); sys.n_qps()];
        let run = run_field(
            &sys,
            &drive,
            states,
            config.run.t_end,
            config.run.dt,
            AdmissibilityPolicy::Fail,
        )
        .unwrap();
        assert!(run.failure.is_none());

        let csv = field_trace_csv(&sys, &config, &run);
        assert_eq!(csv.lines().next().unwrap(), FIELD_TRACE_SCHEMA);
        let rows = csv.lines().filter(|l| !l.starts_with('#')).skip(1).count();
        assert_eq!(rows, run.steps.len());

        let snap = field_snapshot(&sys, &config, run.steps.last().unwrap());
        assert_eq!(snap.lines().next().unwrap(), SNAPSHOT_SCHEMA);
        let mesh = &sys.mesh;
        let section_rows = |name: &str| {
            snap.split(&format!("[{name}]\n"))
                .nth(1)
                .unwrap()
                .lines()
                .take_while(|l| !l.starts_with('['))
                .filter(|l| !l.starts_with('#'))
                .count()
        };
        assert_eq!(section_rows("nodes"), mesh.n_nodes());
        assert_eq!(section_rows("elements"), mesh.n_elems());
        assert_eq!(section_rows("qp_states"), sys.n_qps());
        assert_eq!(field_snapshot(&sys, &config, run.steps.last().unwrap()), snap);
    }

    #[test]
    fn verification_report_aggregates_check_outcomes() {
        let config = parse_config_str(UNIAXIAL_CYCLIC_TOML).unwrap().config;
        let good = vec![
            CheckLine::new("trace_conservation", true).value("max", 0.0),
            CheckLine::new("backstress_bound", true).value("max_saturation", 0.7),
        ];
        let report = verification_report(&config, None, &good);
        assert_eq!(report.lines().next().unwrap(), REPORT_SCHEMA);
        assert!(report.ends_with("overall pass\n"), "{report}");
        assert!(report_passed(&good));

        let mixed = vec![
            CheckLine::new("trace_conservation", true),
            CheckLine::new("energy_inequality", false).value("violation", 1e-3),
        ];
        let report = verification_report(&config, None, &mixed);
        assert!(report.contains("energy_inequality FAIL"));
        assert!(report.ends_with("overall FAIL\n"));
        assert!(!report_passed(&mixed));
    }

    #[test]
    fn uniform_field_monitors_match_the_point_monitors() {
        let (config, sys) = field_setup();
        let program = config.field_program().unwrap();
        let g_u = |x, t| program.displacement(x, t);
        let g_a = |x, t| program.microrotation(x, t);
        let drive = FieldDrive {
            g_u: &g_u,
            g_a: &g_a,
            body: None,
            couple: None,
            traction: None,
        };
        let states = vec![PointState::default(); sys.n_qps()];
        let run = run_field(
            &sys,
            &drive,
            states,
            config.run.t_end,
            config.run.dt,
            AdmissibilityPolicy::Fail,
        )
        .unwrap();
        let last = run.steps.last().unwrap();
        let m = field_monitors(&sys, last);
        // the affine program makes every quadrature point see one strain
        let drive0 = crate::evolution::PointDrive {
            direction: config.loading.strain_direction().unwrap(),
            amplitude: config.loading.amplitude,
            waveform: config.loading.waveform,
        };
        let eps = drive0.strain_at(last.time);
        let state = &last.states[0];
        let te = config.material.elastic_stress_of(&eps, &state.eps_p);
        let gap = config.material.yield_gap(&te.dev(), &state.b);
        assert!((m.yield_gap_max - gap).abs() <= 1e-9 * gap.abs().max(1.0));
        let density = point_energy(&config.material, &eps, state).total();
        assert!((m.energy.total() - density).abs() <= 1e-9 * density.max(1e-30));
    }
}
