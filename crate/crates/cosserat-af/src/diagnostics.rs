//! Energy accounting, admissible test stresses, and structural probes.
//!
//! The stored energy of a state is
//!
//! ```text
//! E = 1/2 int C^-1 T_E : T_E  +  2 mu_c int |axl skew grad u - a|^2
//!   + 2 l_c int |grad a|^2    +  1/(2c) int |b|^2 dx,
//! ```
//!
//! and its growth along a trajectory is bounded by six work terms formed
//! against any test pair `(T_hat, b_hat)` whose deviator and backstress
//! satisfy `|dev T_hat - b_hat| + d/(2c) |b_hat|^2 <= sigma_y` pointwise:
//! external work, the divergence pairing of the test stress with the
//! velocity, boundary work of the constraint stress, the compliance pairing
//! of the stress rate, the backstress pairing, and the couple boundary
//! work. [`energy_inequality_history`] evaluates both sides on a recorded
//! run; a positive violation flags an accounting or discretization error,
//! since plastic steps only add slack.
//!
//! [`coercivity_probe`] estimates the smallest ratio between the stored
//! energy and the squared field norms over random admissible states, the
//! quantity that degenerates when the rotational coupling and curvature
//! moduli vanish together.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::evolution::{FieldDrive, FieldRun, PointRun};
use crate::fem::{CoupledSystem, QP_PER_ELEM};
use crate::material::{MaterialParams, ModelError, PointState};
use crate::mesh::DOFS_PER_NODE;
use crate::tensor::{DevSym3, Mat3, Sym3, Vec3};

/// Stored-energy components of one state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub elastic: f64,
    pub couple_stress: f64,
    pub curvature: f64,
    pub backstress: f64,
}

impl EnergyBreakdown {
    pub fn total(&self) -> f64 {
        self.elastic + self.couple_stress + self.curvature + self.backstress
    }
}

fn elastic_density(p: &MaterialParams, te: &Sym3) -> f64 {
    0.5 * p.elastic().compliance(te).inner(te)
}

/// Energy density of a single material point under the given strain.
pub fn point_energy(p: &MaterialParams, eps: &Sym3, state: &PointState) -> EnergyBreakdown {
    let te = p.elastic_stress_of(eps, &state.eps_p);
    EnergyBreakdown {
        elastic: elastic_density(p, &te),
        couple_stress: 0.0,
        curvature: 0.0,
        backstress: state.b.norm2() / (2.0 * p.c),
    }
}

/// Stored energy of a field state, integrated by element quadrature.
pub fn field_energy(
    sys: &CoupledSystem,
    dofs: &[f64],
    states: &[PointState],
) -> EnergyBreakdown {
    let p = &sys.params;
    let w = sys.quad_weight();
    let mut e = EnergyBreakdown::default();
    sys.for_each_qp(dofs, |el, q, _, kin| {
        let state = &states[QP_PER_ELEM * el + q];
        let te = sys.elastic_stress(kin, state);
        e.elastic += w * elastic_density(p, &te);
        let m = kin.mismatch();
        e.couple_stress += w * 2.0 * p.mu_c * (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]);
        let mut g2 = 0.0;
        for row in &kin.grad_a {
            for v in row {
                g2 += v * v;
            }
        }
        e.curvature += w * 2.0 * p.l_c * g2;
        e.backstress += w * state.b.norm2() / (2.0 * p.c);
    });
    e
}

/// Viscous overstress functional `int 1/(2 nu) {gap}_+^2 dx` of one state.
pub fn point_overstress(p: &MaterialParams, eps: &Sym3, state: &PointState) -> f64 {
    let dev = p.dev_elastic_stress_of(eps, &state.eps_p);
    let gap = p.yield_gap(&dev, &state.b).max(0.0);
    gap * gap / (2.0 * p.nu)
}

pub fn field_overstress(sys: &CoupledSystem, dofs: &[f64], states: &[PointState]) -> f64 {
    let w = sys.quad_weight();
    let mut acc = 0.0;
    sys.for_each_qp(dofs, |el, q, _, kin| {
        acc += w * point_overstress(&sys.params, &kin.eps, &states[QP_PER_ELEM * el + q]);
    });
    acc
}

/// Time-L2 norm of the overstress functional along a point trajectory,
/// by trapezoid over the recorded steps.
pub fn point_overstress_l2(p: &MaterialParams, run: &PointRun) -> f64 {
    let mut acc = 0.0;
    let mut prev = point_overstress(p, &run.strains[0], &run.states[0]);
    for i in 1..run.times.len() {
        let cur = point_overstress(p, &run.strains[i], &run.states[i]);
        acc += (run.times[i] - run.times[i - 1]) * 0.5 * (prev + cur);
        prev = cur;
    }
    acc.sqrt()
}

/// The three dissipation-rate accumulators bounded uniformly in the
/// relaxation parameter: the compliance norm of the stress rate, the
/// rotation-mismatch rate, and the curvature rate. For a single point the
/// latter two vanish identically.
pub fn point_rate_accumulators(p: &MaterialParams, run: &PointRun) -> [f64; 3] {
    let compliance = p.elastic();
    let mut a1 = 0.0;
    for i in 1..run.times.len() {
        let dt = run.times[i] - run.times[i - 1];
        let te0 = p.elastic_stress_of(&run.strains[i - 1], &run.states[i - 1].eps_p);
        let te1 = p.elastic_stress_of(&run.strains[i], &run.states[i].eps_p);
        let dte = te1 - te0;
        a1 += compliance.compliance(&dte).inner(&dte) / dt;
    }
    [a1, 0.0, 0.0]
}

pub fn field_rate_accumulators(sys: &CoupledSystem, run: &FieldRun) -> [f64; 3] {
    let p = &sys.params;
    let compliance = p.elastic();
    let w = sys.quad_weight();
    let fields: Vec<SnapshotFields> = run
        .steps
        .iter()
        .map(|s| SnapshotFields::compute(sys, &s.dofs, &s.states))
        .collect();
    let mut acc = [0.0; 3];
    for i in 1..fields.len() {
        let dt = run.steps[i].time - run.steps[i - 1].time;
        let (fa, fb) = (&fields[i - 1], &fields[i]);
        for q in 0..sys.n_qps() {
            let dte = fb.te[q] - fa.te[q];
            acc[0] += w * compliance.compliance(&dte).inner(&dte) / dt;
            let mut dm2 = 0.0;
            let mut dg2 = 0.0;
            for c in 0..3 {
                let dm = fb.mismatch[q][c] - fa.mismatch[q][c];
                dm2 += dm * dm;
                for r in 0..3 {
                    let dg = fb.grad_a[q][c][r] - fa.grad_a[q][c][r];
                    dg2 += dg * dg;
                }
            }
            acc[1] += w * 4.0 * p.mu_c * dm2 / dt;
            acc[2] += w * 4.0 * p.l_c * dg2 / dt;
        }
    }
    acc
}

/// Summary of a run's energetics.
#[derive(Clone, Copy, Debug)]
pub struct EnergyReport {
    pub total_energy: f64,
    pub elastic: f64,
    pub couple_stress: f64,
    pub curvature: f64,
    pub backstress: f64,
    pub overstress_l2: f64,
    pub rate_norms: [f64; 3],
    pub coercivity_ratio: Option<f64>,
    pub energy_inequality_residual: Option<f64>,
}

impl EnergyReport {
    fn from_breakdown(e: EnergyBreakdown, overstress_l2: f64, rate_norms: [f64; 3]) -> Self {
        EnergyReport {
            total_energy: e.total(),
            elastic: e.elastic,
            couple_stress: e.couple_stress,
            curvature: e.curvature,
            backstress: e.backstress,
            overstress_l2,
            rate_norms,
            coercivity_ratio: None,
            energy_inequality_residual: None,
        }
    }
}

/// Final-state energetics of a point trajectory.
pub fn point_report(p: &MaterialParams, run: &PointRun) -> EnergyReport {
    let last = run.times.len() - 1;
    let e = point_energy(p, &run.strains[last], &run.states[last]);
    EnergyReport::from_breakdown(
        e,
        point_overstress_l2(p, run),
        point_rate_accumulators(p, run),
    )
}

/// Final-state energetics of a field run.
pub fn field_report(sys: &CoupledSystem, run: &FieldRun) -> EnergyReport {
    let last = run.steps.last().expect("non-empty run");
    let e = field_energy(sys, &last.dofs, &last.states);
    let mut acc = 0.0;
    let mut prev = field_overstress(sys, &run.steps[0].dofs, &run.steps[0].states);
    for i in 1..run.steps.len() {
        let cur = field_overstress(sys, &run.steps[i].dofs, &run.steps[i].states);
        acc += (run.steps[i].time - run.steps[i - 1].time) * 0.5 * (prev + cur);
        prev = cur;
    }
    EnergyReport::from_breakdown(e, acc.sqrt(), field_rate_accumulators(sys, run))
}

/// Per-quadrature-point fields of one recorded time level.
struct SnapshotFields {
    u: Vec<Vec3>,
    a: Vec<Vec3>,
    eps: Vec<Sym3>,
    mismatch: Vec<Vec3>,
    grad_a: Vec<Mat3>,
    te: Vec<Sym3>,
    total: Vec<Mat3>,
    b: Vec<DevSym3>,
}

impl SnapshotFields {
    fn compute(sys: &CoupledSystem, dofs: &[f64], states: &[PointState]) -> Self {
        let n = sys.n_qps();
        let mut f = SnapshotFields {
            u: Vec::with_capacity(n),
            a: Vec::with_capacity(n),
            eps: Vec::with_capacity(n),
            mismatch: Vec::with_capacity(n),
            grad_a: Vec::with_capacity(n),
            te: Vec::with_capacity(n),
            total: Vec::with_capacity(n),
            b: Vec::with_capacity(n),
        };
        sys.for_each_qp(dofs, |el, q, _, kin| {
            let state = &states[QP_PER_ELEM * el + q];
            f.u.push(kin.u);
            f.a.push(kin.a);
            f.eps.push(kin.eps);
            f.mismatch.push(kin.mismatch());
            f.grad_a.push(kin.grad_a);
            f.te.push(sys.elastic_stress(kin, state));
            f.total.push(sys.total_stress(kin, state));
            f.b.push(state.b);
        });
        f
    }
}

/// A spatially varying admissible test stress and backstress, sampled at
/// quadrature points.
pub struct TestPair {
    pub label: String,
    pub te: Vec<Sym3>,
    pub b_hat: Vec<DevSym3>,
}

/// Smallest slack `sigma_y - |dev T_hat - b_hat| - d/(2c) |b_hat|^2` over
/// the quadrature points; nonnegative means the pair is admissible.
pub fn pair_membership_margin(p: &MaterialParams, pair: &TestPair) -> f64 {
    let mut margin = f64::INFINITY;
    for (te, bh) in pair.te.iter().zip(pair.b_hat.iter()) {
        let slack =
            p.sigma_y - (te.dev() - *bh).norm() - p.d / (2.0 * p.c) * bh.norm2();
        margin = margin.min(slack);
    }
    margin
}

/// Builds the admissible test pairs for a scenario: the zero pair, and the
/// scaled stress of the plasticity-free solve at t = 0 when every boundary
/// face is displacement-controlled. Scenarios with prescribed tractions
/// admit no test stress whose normal trace matches them exactly, so they
/// are rejected.
pub fn build_test_functions(
    sys: &CoupledSystem,
    drive: &FieldDrive,
) -> Result<Vec<TestPair>, ModelError> {
    if drive.traction.is_some() {
        return Err(ModelError::InadmissibleScenario(
            "prescribed tractions cannot be matched by an admissible test stress".into(),
        ));
    }
    let n = sys.n_qps();
    let mut pairs = vec![TestPair {
        label: "zero".into(),
        te: vec![Sym3::ZERO; n],
        b_hat: vec![DevSym3::ZERO; n],
    }];
    if sys.boundary.neumann_faces().is_empty() {
        let states = vec![PointState::default(); n];
        let (dofs, _) = solve_elastic_at(sys, drive, &states, 0.0)?;
        let mut te = Vec::with_capacity(n);
        let mut max_dev: f64 = 0.0;
        sys.for_each_qp(&dofs, |el, q, _, kin| {
            let s = sys.elastic_stress(kin, &states[QP_PER_ELEM * el + q]);
            max_dev = max_dev.max(s.dev().norm());
            te.push(s);
        });
        let theta = (sys.params.sigma_y / (max_dev + 1e-12)).min(1.0);
        for s in &mut te {
            *s = theta * *s;
        }
        pairs.push(TestPair {
            label: "scaled-elastic".into(),
            te,
            b_hat: vec![DevSym3::ZERO; n],
        });
    }
    for pair in &pairs {
        let margin = pair_membership_margin(&sys.params, pair);
        if margin < -1e-12 * sys.params.sigma_y {
            return Err(ModelError::InadmissibleScenario(format!(
                "constructed pair '{}' misses the constraint set by {margin:.3e}",
                pair.label
            )));
        }
    }
    Ok(pairs)
}

fn solve_elastic_at(
    sys: &CoupledSystem,
    drive: &FieldDrive,
    states: &[PointState],
    t: f64,
) -> Result<(Vec<f64>, crate::fem::SolveReport), ModelError> {
    let prescribed = sys.prescribed_values(|x| (drive.g_u)(x, t), |x| (drive.g_a)(x, t));
    let body = drive.body.map(|f| move |x: Vec3| f(x, t));
    let couple = drive.couple.map(|f| move |x: Vec3| f(x, t));
    let loads = crate::fem::Loads {
        body: body.as_ref().map(|f| f as &dyn Fn(Vec3) -> Vec3),
        couple: couple.as_ref().map(|f| f as &dyn Fn(Vec3) -> Vec3),
        traction: None,
    };
    sys.solve(states, &prescribed, &loads)
}

/// One time level of the work accounting.
#[derive(Clone, Copy, Debug)]
pub struct InequalitySnapshot {
    pub time: f64,
    /// stored energy at this time
    pub energy: f64,
    /// initial energy plus accumulated work terms
    pub bound: f64,
    /// accumulated terms of the bound: external load work, the strain
    /// pairing against the test stress, work done through the constrained
    /// degrees of freedom, the compliance pairing, and the backstress
    /// pairing
    pub work: [f64; 5],
    /// positive part of `energy - bound`
    pub violation: f64,
}

/// Evaluates the energy inequality along a recorded field run for one test
/// pair. Rates are backward differences between recorded levels and time
/// integrals are trapezoids, which reproduces elastic segments exactly;
/// plastic segments only add slack, so `violation` should vanish to
/// rounding for a correct discretization.
pub fn energy_inequality_history(
    sys: &CoupledSystem,
    run: &FieldRun,
    drive: &FieldDrive,
    pair: &TestPair,
) -> Result<Vec<InequalitySnapshot>, ModelError> {
    if run.steps.len() < 2 {
        return Err(ModelError::MissingRates);
    }
    let p = &sys.params;
    let compliance = p.elastic();
    let w = sys.quad_weight();
    let fields: Vec<SnapshotFields> = run
        .steps
        .iter()
        .map(|s| SnapshotFields::compute(sys, &s.dofs, &s.states))
        .collect();

    let e0 = field_energy(sys, &run.steps[0].dofs, &run.steps[0].states).total();
    let mut work = [0.0f64; 5];
    let mut out = Vec::with_capacity(run.steps.len());
    out.push(InequalitySnapshot {
        time: run.steps[0].time,
        energy: e0,
        bound: e0,
        work,
        violation: 0.0,
    });

    for j in 1..run.steps.len() {
        let (t0, t1) = (run.steps[j - 1].time, run.steps[j].time);
        let (fa, fb) = (&fields[j - 1], &fields[j]);

        // volume pairings against the full motion
        let mut w1 = 0.0;
        let mut w2 = 0.0;
        let mut w4 = 0.0;
        let mut w5 = 0.0;
        let mut qp = 0;
        for el in 0..sys.mesh.n_elems() {
            for q in 0..QP_PER_ELEM {
                let x = sys.qp_position(el, q);
                if let Some(body) = drive.body {
                    let f0 = body(x, t0);
                    let f1 = body(x, t1);
                    for c in 0..3 {
                        w1 += w * (fb.u[qp][c] - fa.u[qp][c]) * 0.5 * (f0[c] + f1[c]);
                    }
                }
                if let Some(couple) = drive.couple {
                    let m0 = couple(x, t0);
                    let m1 = couple(x, t1);
                    for c in 0..3 {
                        w1 += w * 4.0 * (fb.a[qp][c] - fa.a[qp][c]) * 0.5 * (m0[c] + m1[c]);
                    }
                }
                let deps = fb.eps[qp] - fa.eps[qp];
                w2 -= w * deps.inner(&pair.te[qp]);
                let dte = fb.te[qp] - fa.te[qp];
                w4 += w * compliance.compliance(&dte).inner(&pair.te[qp]);
                w5 += w * (fb.b[qp] - fa.b[qp]).inner(&pair.b_hat[qp]) / p.c;
                qp += 1;
            }
        }

        // work done through the constrained degrees of freedom: the data
        // increment, lifted into the mesh space with zeros on the free
        // dofs, is paired with the slab-average internal forces, minus
        // the share of the external loads carried by the same nodes. The
        // pairing reproduces the discrete reaction forces, so elastic
        // segments close the energy identity to rounding on any mesh.
        let lift: Vec<f64> = (0..sys.mesh.n_dofs())
            .map(|i| {
                if sys.is_constrained(i) {
                    run.steps[j].dofs[i] - run.steps[j - 1].dofs[i]
                } else {
                    0.0
                }
            })
            .collect();
        let mut w3 = 0.0;
        sys.for_each_qp(&lift, |el, q, x, kin| {
            let i = QP_PER_ELEM * el + q;
            let te_bar = 0.5 * (fa.te[i] + fb.te[i]);
            w3 += w * te_bar.inner(&kin.eps);
            let mm_lift = kin.mismatch();
            for c in 0..3 {
                let mm_bar = 0.5 * (fa.mismatch[i][c] + fb.mismatch[i][c]);
                w3 += w * 4.0 * p.mu_c * mm_bar * mm_lift[c];
                for r in 0..3 {
                    let ga_bar = 0.5 * (fa.grad_a[i][c][r] + fb.grad_a[i][c][r]);
                    w3 += w * 4.0 * p.l_c * ga_bar * kin.grad_a[c][r];
                }
            }
            if let Some(body) = drive.body {
                let f0 = body(x, t0);
                let f1 = body(x, t1);
                for c in 0..3 {
                    w3 -= w * kin.u[c] * 0.5 * (f0[c] + f1[c]);
                }
            }
            if let Some(couple) = drive.couple {
                let m0 = couple(x, t0);
                let m1 = couple(x, t1);
                for c in 0..3 {
                    w3 -= w * 4.0 * kin.a[c] * 0.5 * (m0[c] + m1[c]);
                }
            }
        });

        work[0] += w1;
        work[1] += w2;
        work[2] += w3;
        work[3] += w4;
        work[4] += w5;

        let energy = field_energy(sys, &run.steps[j].dofs, &run.steps[j].states).total();
        let bound = e0 + work.iter().sum::<f64>();
        out.push(InequalitySnapshot {
            time: t1,
            energy,
            bound,
            work,
            violation: (energy - bound).max(0.0),
        });
    }
    Ok(out)
}

/// Largest violation across the history, for a scalar verdict.
pub fn max_violation(history: &[InequalitySnapshot]) -> f64 {
    history.iter().map(|s| s.violation).fold(0.0, f64::max)
}

/// A spatially constant admissible test pair for a driven material point.
#[derive(Clone, Copy, Debug)]
pub struct PointTestPair {
    pub label: &'static str,
    pub te: Sym3,
    pub b_hat: DevSym3,
}

/// The test pairs of a point trajectory: the zero pair, and the initial
/// stress scaled into the constraint set when it is nonzero.
pub fn point_test_pairs(p: &MaterialParams, run: &PointRun) -> Vec<PointTestPair> {
    let mut pairs = vec![PointTestPair {
        label: "zero",
        te: Sym3::ZERO,
        b_hat: DevSym3::ZERO,
    }];
    let te0 = p.elastic_stress_of(&run.strains[0], &run.states[0].eps_p);
    let dev = te0.dev().norm();
    if dev > 0.0 {
        let theta = (p.sigma_y / (dev + 1e-12)).min(1.0);
        pairs.push(PointTestPair {
            label: "scaled-initial",
            te: theta * te0,
            b_hat: DevSym3::ZERO,
        });
    }
    pairs
}

/// The energy inequality of a driven material point: the strain path does
/// external work directly, so the bound collects the stress work, the
/// compliance and backstress pairings with the test pair, and the pairing
/// of the strain rate against the test stress. Elastic segments close the
/// identity exactly; plastic flow only adds slack.
pub fn point_energy_inequality_history(
    p: &MaterialParams,
    run: &PointRun,
    pair: &PointTestPair,
) -> Result<Vec<InequalitySnapshot>, ModelError> {
    if run.times.len() < 2 {
        return Err(ModelError::MissingRates);
    }
    let compliance = p.elastic();
    let e0 = point_energy(p, &run.strains[0], &run.states[0]).total();
    let mut work = [0.0f64; 5];
    let mut out = Vec::with_capacity(run.times.len());
    out.push(InequalitySnapshot {
        time: run.times[0],
        energy: e0,
        bound: e0,
        work,
        violation: 0.0,
    });
    for j in 1..run.times.len() {
        let deps = run.strains[j] - run.strains[j - 1];
        let te_a = p.elastic_stress_of(&run.strains[j - 1], &run.states[j - 1].eps_p);
        let te_b = p.elastic_stress_of(&run.strains[j], &run.states[j].eps_p);
        let te_avg = 0.5 * (te_a + te_b);
        let dte = te_b - te_a;
        let db = run.states[j].b - run.states[j - 1].b;
        work[0] += deps.inner(&te_avg);
        work[1] -= deps.inner(&pair.te);
        work[3] += compliance.compliance(&dte).inner(&pair.te);
        work[4] += db.inner(&pair.b_hat) / p.c;
        let energy = point_energy(p, &run.strains[j], &run.states[j]).total();
        let bound = e0 + work.iter().sum::<f64>();
        out.push(InequalitySnapshot {
            time: run.times[j],
            energy,
            bound,
            work,
            violation: (energy - bound).max(0.0),
        });
    }
    Ok(out)
}

/// Result of the random coercivity probe.
#[derive(Clone, Copy, Debug)]
pub struct CoercivityReport {
    pub min_ratio: f64,
    pub samples: usize,
}

fn field_norms(sys: &CoupledSystem, dofs: &[f64], states: &[PointState]) -> f64 {
    let w = sys.quad_weight();
    let mut acc = 0.0;
    sys.for_each_qp(dofs, |el, q, _, kin| {
        let mut u2 = 0.0;
        let mut a2 = 0.0;
        for c in 0..3 {
            u2 += kin.u[c] * kin.u[c];
            a2 += kin.a[c] * kin.a[c];
        }
        // |grad u|^2 splits into symmetric and skew Frobenius parts
        let mut skew2 = 0.0;
        for c in 0..3 {
            skew2 += kin.axl_skew_u[c] * kin.axl_skew_u[c];
        }
        let gu2 = kin.eps.norm2() + 2.0 * skew2;
        let mut ga2 = 0.0;
        for row in &kin.grad_a {
            for v in row {
                ga2 += v * v;
            }
        }
        let b2 = states[QP_PER_ELEM * el + q].b.norm2();
        acc += w * (u2 + gu2 + 2.0 * (a2 + ga2) + b2);
    });
    acc
}

fn random_dofs(sys: &CoupledSystem, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut dofs = vec![0.0; sys.mesh.n_dofs()];
    for (dof, v) in dofs.iter_mut().enumerate() {
        if !sys.is_constrained(dof) {
            *v = rng.sample(StandardNormal);
        }
    }
    dofs
}

fn random_backstress(sys: &CoupledSystem, rng: &mut ChaCha8Rng) -> Vec<PointState> {
    (0..sys.n_qps())
        .map(|_| {
            let g = |rng: &mut ChaCha8Rng| -> f64 {
                let v: f64 = rng.sample(StandardNormal);
                0.5 * v
            };
            PointState {
                eps_p: DevSym3::ZERO,
                b: DevSym3::new(g(rng), g(rng), g(rng), g(rng), g(rng)),
            }
        })
        .collect()
}

/// Samples random admissible fields (zero on the constrained boundary) and
/// returns the smallest energy-to-norm ratio observed.
pub fn coercivity_probe(sys: &CoupledSystem, samples: usize, seed: u64) -> CoercivityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..samples {
        let dofs = random_dofs(sys, &mut rng);
        let states = random_backstress(sys, &mut rng);
        let e = field_energy(sys, &dofs, &states).total();
        let n = field_norms(sys, &dofs, &states);
        if n > 0.0 {
            min_ratio = min_ratio.min(e / n);
        }
    }
    CoercivityReport { min_ratio, samples }
}

/// Ratio of a pure microrotation mode: zero displacement and backstress,
/// random axial field. Its energy carries only the coupling and curvature
/// moduli, so it collapses when both are scaled down together.
pub fn rotation_mode_ratio(sys: &CoupledSystem, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dofs = random_dofs(sys, &mut rng);
    for node in 0..sys.mesh.n_nodes() {
        for c in 0..3 {
            dofs[DOFS_PER_NODE * node + c] = 0.0;
        }
    }
    let states = vec![PointState::default(); sys.n_qps()];
    let e = field_energy(sys, &dofs, &states).total();
    e / field_norms(sys, &dofs, &states)
}

/// Ratio of a displacement mode whose deviatoric strain is cancelled by the
/// plastic strain at every quadrature point, leaving only volumetric and
/// rotational energy. Trilinear elements cannot make the divergence vanish
/// along with the boundary conditions, so this mode has a resolution floor
/// rather than a true collapse.
pub fn displacement_mode_ratio(sys: &CoupledSystem, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dofs = random_dofs(sys, &mut rng);
    for node in 0..sys.mesh.n_nodes() {
        for c in 3..6 {
            dofs[DOFS_PER_NODE * node + c] = 0.0;
        }
    }
    let mut states = vec![PointState::default(); sys.n_qps()];
    sys.for_each_qp(&dofs, |el, q, _, kin| {
        states[QP_PER_ELEM * el + q].eps_p = kin.eps.dev();
    });
    let e = field_energy(sys, &dofs, &states).total();
    e / field_norms(sys, &dofs, &states)
}

/// Time-L2 distance between the stress and backstress trajectories of two
/// point runs on the same time grid and strain path.
pub fn stress_backstress_distance(p: &MaterialParams, a: &PointRun, b: &PointRun) -> f64 {
    assert_eq!(a.times.len(), b.times.len());
    let mut acc = 0.0;
    for i in 1..a.times.len() {
        let dt = a.times[i] - a.times[i - 1];
        let ta = p.elastic_stress_of(&a.strains[i], &a.states[i].eps_p);
        let tb = p.elastic_stress_of(&b.strains[i], &b.states[i].eps_p);
        let db = a.states[i].b - b.states[i].b;
        acc += dt * ((ta - tb).norm2() + db.norm2());
    }
    acc.sqrt()
}

/// Net stress work `closed-loop integral of T_E : d eps` per completed
/// loading cycle, by trapezoid; elastic cycles give zero, plastic cycles
/// the dissipated work.
pub fn cycle_work_areas(p: &MaterialParams, run: &PointRun, period: f64) -> Vec<f64> {
    let t_end = *run.times.last().expect("non-empty run");
    let n_cycles = (t_end / period + 1e-9).floor() as usize;
    let mut areas = vec![0.0; n_cycles];
    for i in 1..run.times.len() {
        let mid = 0.5 * (run.times[i] + run.times[i - 1]);
        let cycle = (mid / period).floor() as usize;
        if cycle >= n_cycles {
            break;
        }
        let te0 = p.elastic_stress_of(&run.strains[i - 1], &run.states[i - 1].eps_p);
        let te1 = p.elastic_stress_of(&run.strains[i], &run.states[i].eps_p);
        let deps = run.strains[i] - run.strains[i - 1];
        areas[cycle] += 0.5 * (te0 + te1).inner(&deps);
    }
    areas
}
