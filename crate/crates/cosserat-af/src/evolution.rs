//! Time integration drivers: single-point trajectories, staggered field
//! stepping, and viscosity sweeps.
//!
//! The field driver alternates between the linear coupled solve (plastic
//! strain frozen) and the pointwise flow update (strain frozen) until the
//! elastic stress field stops changing. Each staggered pass restarts the
//! flow update from the state at the previous time level, so the converged
//! step is a genuine backward Euler step of the coupled system. If the
//! stress change between passes fails to shrink monotonically, the step is
//! bisected in time and retried.

use crate::fem::{CoupledSystem, Loads, SolveReport, QP_PER_ELEM};
use crate::material::{
    step_point, FlowResult, MaterialParams, ModelError, PointState, StepStats,
};
use crate::mesh::Face;
use crate::tensor::{DevSym3, Sym3, Vec3};

/// Scalar loading program, mapping time to a factor in `[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    /// Periodic triangle: 0 at t = 0, +1 at a quarter period, -1 at three
    /// quarters.
    Triangle { period: f64 },
    /// Linear rise from 0 to 1 over `duration`, constant afterwards.
    Ramp { duration: f64 },
    /// Constant factor 1.
    Constant,
}

impl Waveform {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Waveform::Triangle { period } => {
                let phase = (t / period).rem_euclid(1.0);
                if phase < 0.25 {
                    4.0 * phase
                } else if phase < 0.75 {
                    2.0 - 4.0 * phase
                } else {
                    4.0 * phase - 4.0
                }
            }
            Waveform::Ramp { duration } => (t / duration).min(1.0),
            Waveform::Constant => 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            Waveform::Triangle { period } => period > 0.0,
            Waveform::Ramp { duration } => duration > 0.0,
            Waveform::Constant => true,
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidParams(
                "waveform time scale must be positive".into(),
            ))
        }
    }
}

/// Prescribed strain path for a single material point.
#[derive(Clone, Copy, Debug)]
pub struct PointDrive {
    pub direction: DevSym3,
    pub amplitude: f64,
    pub waveform: Waveform,
}

impl PointDrive {
    pub fn strain_at(&self, t: f64) -> Sym3 {
        (self.amplitude * self.waveform.value(t) * self.direction).to_sym3()
    }
}

/// Recorded single-point trajectory. Index 0 is the initial state; entry
/// `i > 0` describes the step ending at `times[i]`.
pub struct PointRun {
    pub times: Vec<f64>,
    pub strains: Vec<Sym3>,
    pub states: Vec<PointState>,
    pub flows: Vec<FlowResult>,
    pub stats: Vec<StepStats>,
    /// set when integration stopped early; the recorded prefix is valid
    pub failure: Option<ModelError>,
}

impl PointRun {
    pub fn n_steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }
}

/// Integrates a single material point along a prescribed strain path with a
/// fixed step. On a flow failure the trajectory computed so far is kept and
/// the error recorded.
pub fn run_point(
    p: &MaterialParams,
    drive: &PointDrive,
    initial: PointState,
    t_end: f64,
    dt: f64,
) -> PointRun {
    let n_steps = (t_end / dt).round() as usize;
    let mut run = PointRun {
        times: Vec::with_capacity(n_steps + 1),
        strains: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        flows: Vec::with_capacity(n_steps + 1),
        stats: Vec::with_capacity(n_steps + 1),
        failure: None,
    };
    let mut state = initial;
    let mut eps = drive.strain_at(0.0);
    run.times.push(0.0);
    run.strains.push(eps);
    run.states.push(state);
    run.flows.push(FlowResult::default());
    run.stats.push(StepStats::default());
    for i in 1..=n_steps {
        let t = i as f64 * dt;
        let eps_next = drive.strain_at(t);
        match step_point(p, &mut state, &eps, &eps_next, dt) {
            Ok((stats, flow)) => {
                eps = eps_next;
                run.times.push(t);
                run.strains.push(eps);
                run.states.push(state);
                run.flows.push(flow);
                run.stats.push(stats);
            }
            Err(e) => {
                run.failure = Some(e);
                break;
            }
        }
    }
    run
}

/// Time-dependent boundary data and loads for a field run.
pub struct FieldDrive<'a> {
    pub g_u: &'a dyn Fn(Vec3, f64) -> Vec3,
    pub g_a: &'a dyn Fn(Vec3, f64) -> Vec3,
    pub body: Option<&'a dyn Fn(Vec3, f64) -> Vec3>,
    pub couple: Option<&'a dyn Fn(Vec3, f64) -> Vec3>,
    pub traction: Option<&'a dyn Fn(Vec3, Face, f64) -> Vec3>,
}

impl<'a> FieldDrive<'a> {
    fn solve_at(
        &self,
        sys: &CoupledSystem,
        states: &[PointState],
        t: f64,
    ) -> Result<(Vec<f64>, SolveReport), ModelError> {
        let prescribed = sys.prescribed_values(|x| (self.g_u)(x, t), |x| (self.g_a)(x, t));
        let body = self.body.map(|f| move |x: Vec3| f(x, t));
        let couple = self.couple.map(|f| move |x: Vec3| f(x, t));
        let traction = self.traction.map(|f| move |x: Vec3, face: Face| f(x, face, t));
        let loads = Loads {
            body: body.as_ref().map(|f| f as &dyn Fn(Vec3) -> Vec3),
            couple: couple.as_ref().map(|f| f as &dyn Fn(Vec3) -> Vec3),
            traction: traction
                .as_ref()
                .map(|f| f as &dyn Fn(Vec3, Face) -> Vec3),
        };
        sys.solve(states, &prescribed, &loads)
    }
}

/// What to do when the initial state is plastically inadmissible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissibilityPolicy {
    Warn,
    Fail,
}

/// Solves the elastic problem at t = 0 for the given internal state and
/// checks that no quadrature point starts beyond the yield surface.
/// Violations are returned as warnings or as an error per the policy.
pub fn solve_initial(
    sys: &CoupledSystem,
    states: &[PointState],
    drive: &FieldDrive,
    policy: AdmissibilityPolicy,
) -> Result<(Vec<f64>, Vec<String>), ModelError> {
    let (dofs, _) = drive.solve_at(sys, states, 0.0)?;
    let mut warnings = Vec::new();
    for e in 0..sys.mesh.n_elems() {
        for q in 0..QP_PER_ELEM {
            let idx = QP_PER_ELEM * e + q;
            let kin = sys.kinematics(&dofs, e, q);
            if let Err(err) = states[idx].check_admissible(&sys.params, &kin.eps) {
                let msg = format!("element {e} quadrature point {q}: {err}");
                match policy {
                    AdmissibilityPolicy::Warn => warnings.push(msg),
                    AdmissibilityPolicy::Fail => {
                        return Err(ModelError::InadmissibleState(msg))
                    }
                }
            }
        }
    }
    Ok((dofs, warnings))
}

/// One recorded time level of a field run.
pub struct FieldStep {
    pub time: f64,
    pub dofs: Vec<f64>,
    pub states: Vec<PointState>,
    pub staggered_iters: usize,
    /// largest relative stress change in the final staggered pass
    pub stress_change: f64,
    /// accumulated flow data of the pass that produced `states`
    pub flows: Vec<FlowResult>,
}

pub struct FieldRun {
    pub steps: Vec<FieldStep>,
    pub warnings: Vec<String>,
    /// set when stepping stopped early; the recorded prefix is valid
    pub failure: Option<ModelError>,
}

const STAGGER_REL_TOL: f64 = 1e-8;
const STAGGER_MAX_ITERS: usize = 50;
const STAGGER_MAX_BISECTIONS: usize = 12;

/// Convergence controls of the staggered solve-then-flow iteration.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaggerSettings {
    /// relative quadrature-point stress change accepted as converged
    pub rel_tol: f64,
    pub max_iters: usize,
}

impl Default for StaggerSettings {
    fn default() -> Self {
        StaggerSettings {
            rel_tol: STAGGER_REL_TOL,
            max_iters: STAGGER_MAX_ITERS,
        }
    }
}

impl StaggerSettings {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(ModelError::InvalidParams(format!(
                "staggered tolerance must be positive and finite, got {}",
                self.rel_tol
            )));
        }
        if self.max_iters == 0 {
            return Err(ModelError::InvalidParams(
                "staggered iteration limit must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

struct StaggeredOutcome {
    dofs: Vec<f64>,
    states: Vec<PointState>,
    flows: Vec<FlowResult>,
    iters: usize,
    stress_change: f64,
}

fn stress_field(
    sys: &CoupledSystem,
    dofs: &[f64],
    states: &[PointState],
) -> Vec<Sym3> {
    let mut out = Vec::with_capacity(sys.n_qps());
    for e in 0..sys.mesh.n_elems() {
        for q in 0..QP_PER_ELEM {
            let kin = sys.kinematics(dofs, e, q);
            out.push(sys.elastic_stress(&kin, &states[QP_PER_ELEM * e + q]));
        }
    }
    out
}

fn qp_strains(sys: &CoupledSystem, dofs: &[f64]) -> Vec<Sym3> {
    let mut out = Vec::with_capacity(sys.n_qps());
    for e in 0..sys.mesh.n_elems() {
        for q in 0..QP_PER_ELEM {
            out.push(sys.kinematics(dofs, e, q).eps);
        }
    }
    out
}

/// Advances the coupled system from `(dofs0, states0)` at `t0` to `t1`,
/// bisecting in time when the staggered iteration stalls.
fn staggered_advance(
    sys: &CoupledSystem,
    drive: &FieldDrive,
    settings: &StaggerSettings,
    dofs0: &[f64],
    states0: &[PointState],
    t0: f64,
    t1: f64,
    depth: usize,
) -> Result<StaggeredOutcome, ModelError> {
    match staggered_step(sys, drive, settings, dofs0, states0, t0, t1) {
        Ok(out) => Ok(out),
        Err(ModelError::StaggeredNonConvergence { .. }) if depth < STAGGER_MAX_BISECTIONS => {
            let mid = 0.5 * (t0 + t1);
            let first =
                staggered_advance(sys, drive, settings, dofs0, states0, t0, mid, depth + 1)?;
            let mut second = staggered_advance(
                sys,
                drive,
                settings,
                &first.dofs,
                &first.states,
                mid,
                t1,
                depth + 1,
            )?;
            // flows of the second half land at t1; iteration counts add up
            second.iters += first.iters;
            Ok(second)
        }
        Err(e) => Err(e),
    }
}

fn staggered_step(
    sys: &CoupledSystem,
    drive: &FieldDrive,
    settings: &StaggerSettings,
    dofs0: &[f64],
    states0: &[PointState],
    t0: f64,
    t1: f64,
) -> Result<StaggeredOutcome, ModelError> {
    let dt = t1 - t0;
    let eps0 = qp_strains(sys, dofs0);
    let mut states_iter = states0.to_vec();
    let mut stress_prev = stress_field(sys, dofs0, states0);
    let mut prev_change = f64::INFINITY;
    let mut flows = vec![FlowResult::default(); sys.n_qps()];
    for it in 1..=settings.max_iters {
        let (dofs1, _) = drive.solve_at(sys, &states_iter, t1)?;
        let eps1 = qp_strains(sys, &dofs1);
        let mut new_states = states0.to_vec();
        for idx in 0..sys.n_qps() {
            let (_, flow) = step_point(
                &sys.params,
                &mut new_states[idx],
                &eps0[idx],
                &eps1[idx],
                dt,
            )?;
            flows[idx] = flow;
        }
        let stress_new = stress_field(sys, &dofs1, &new_states);
        let mut change: f64 = 0.0;
        let mut scale: f64 = sys.params.sigma_y;
        for (sn, sp) in stress_new.iter().zip(stress_prev.iter()) {
            change = change.max((*sn - *sp).norm());
            scale = scale.max(sn.norm());
        }
        let rel = change / scale;
        if rel <= settings.rel_tol {
            // align the linear solve with the converged internal state
            let (dofs_final, _) = drive.solve_at(sys, &new_states, t1)?;
            return Ok(StaggeredOutcome {
                dofs: dofs_final,
                states: new_states,
                flows,
                iters: it,
                stress_change: rel,
            });
        }
        if it > 1 && rel >= prev_change {
            return Err(ModelError::StaggeredNonConvergence {
                iters: it as u32,
                change: rel,
            });
        }
        prev_change = rel;
        states_iter = new_states;
        stress_prev = stress_new;
    }
    Err(ModelError::StaggeredNonConvergence {
        iters: settings.max_iters as u32,
        change: prev_change,
    })
}

/// Runs the coupled field problem from t = 0 to `t_end` with fixed output
/// steps, recording every time level.
pub fn run_field(
    sys: &CoupledSystem,
    drive: &FieldDrive,
    initial_states: Vec<PointState>,
    t_end: f64,
    dt: f64,
    policy: AdmissibilityPolicy,
) -> Result<FieldRun, ModelError> {
    run_field_with(
        sys,
        drive,
        initial_states,
        t_end,
        dt,
        policy,
        &StaggerSettings::default(),
    )
}

/// [`run_field`] with explicit staggered-iteration controls.
pub fn run_field_with(
    sys: &CoupledSystem,
    drive: &FieldDrive,
    initial_states: Vec<PointState>,
    t_end: f64,
    dt: f64,
    policy: AdmissibilityPolicy,
    settings: &StaggerSettings,
) -> Result<FieldRun, ModelError> {
    settings.validate()?;
    assert_eq!(initial_states.len(), sys.n_qps());
    let (dofs0, warnings) = solve_initial(sys, &initial_states, drive, policy)?;
    let n_steps = (t_end / dt).round().max(1.0) as usize;
    let mut run = FieldRun {
        steps: Vec::with_capacity(n_steps + 1),
        warnings,
        failure: None,
    };
    run.steps.push(FieldStep {
        time: 0.0,
        dofs: dofs0,
        states: initial_states,
        staggered_iters: 0,
        stress_change: 0.0,
        flows: vec![FlowResult::default(); sys.n_qps()],
    });
    for i in 1..=n_steps {
        let t1 = i as f64 * dt;
        let prev = run.steps.last().expect("at least the initial step");
        let out = match staggered_advance(
            sys,
            drive,
            settings,
            &prev.dofs,
            &prev.states,
            prev.time,
            t1,
            0,
        ) {
            Ok(out) => out,
            Err(e @ ModelError::StaggeredNonConvergence { .. }) => {
                // the recorded prefix stays usable for partial output
                run.failure = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        run.steps.push(FieldStep {
            time: t1,
            dofs: out.dofs,
            states: out.states,
            staggered_iters: out.iters,
            stress_change: out.stress_change,
            flows: out.flows,
        });
    }
    Ok(run)
}

/// Result of rerunning one scenario while halving the viscosity.
pub struct PointSweep {
    pub nus: Vec<f64>,
    pub runs: Vec<PointRun>,
    /// time-L2 distance between consecutive runs' internal variables
    pub consecutive_diffs: Vec<f64>,
}

/// Time-L2 distance between the internal-variable trajectories of two runs
/// on the same time grid.
pub fn trajectory_distance(a: &PointRun, b: &PointRun) -> f64 {
    assert_eq!(a.times.len(), b.times.len());
    let mut acc = 0.0;
    for i in 1..a.times.len() {
        let dt = a.times[i] - a.times[i - 1];
        let de = a.states[i].eps_p - b.states[i].eps_p;
        let db = a.states[i].b - b.states[i].b;
        acc += dt * (de.norm2() + db.norm2());
    }
    acc.sqrt()
}

/// Runs the same strain path at a sequence of halved viscosities and
/// records how fast the trajectories approach each other.
pub fn sweep_point(
    base: &MaterialParams,
    drive: &PointDrive,
    initial: PointState,
    t_end: f64,
    dt: f64,
    n_levels: usize,
) -> Result<PointSweep, ModelError> {
    assert!(n_levels >= 2);
    let mut sweep = PointSweep {
        nus: Vec::with_capacity(n_levels),
        runs: Vec::with_capacity(n_levels),
        consecutive_diffs: Vec::with_capacity(n_levels - 1),
    };
    for level in 0..n_levels {
        let mut p = *base;
        p.nu = base.nu / (1 << level) as f64;
        p.validate()?;
        let run = run_point(&p, drive, initial, t_end, dt);
        if let Some(e) = run.failure {
            return Err(e);
        }
        sweep.nus.push(p.nu);
        sweep.runs.push(run);
    }
    for i in 1..n_levels {
        sweep
            .consecutive_diffs
            .push(trajectory_distance(&sweep.runs[i - 1], &sweep.runs[i]));
    }
    Ok(sweep)
}
