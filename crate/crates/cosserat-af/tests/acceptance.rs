//! Acceptance gate for the coupled model: ten numbered criteria, each a
//! separate test that prints one `criterion NN ...: PASS` line with its
//! measured quantities (visible with `--nocapture`) and fails loudly with
//! the same numbers otherwise. Tolerances are pinned next to each check.

use std::sync::OnceLock;
use std::time::Instant;

use cosserat_af::diagnostics::{
    build_test_functions, coercivity_probe, energy_inequality_history, point_overstress_l2,
    point_rate_accumulators, rotation_mode_ratio,
};
use cosserat_af::evolution::{
    run_field, AdmissibilityPolicy, FieldDrive, PointDrive, PointRun, Waveform,
};
use cosserat_af::fem::{BoundarySpec, CoupledSystem};
use cosserat_af::material::{flow_map_pairing, MaterialParams, PointState};
use cosserat_af::mesh::GridMesh;
use cosserat_af::mms;
use cosserat_af::tensor::{DevSym3, Sym3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn base_params(nu: f64) -> MaterialParams {
    MaterialParams {
        mu: 1.0,
        lambda: 1.0,
        mu_c: 0.5,
        l_c: 0.4,
        c: 1.0,
        d: 1.0,
        sigma_y: 1.0,
        nu,
        k: None,
    }
}

/// Unit deviatoric direction with a single shear component.
fn shear_direction() -> DevSym3 {
    DevSym3::new(0.0, 0.0, 1.0 / 2.0f64.sqrt(), 0.0, 0.0)
}

fn cyclic_shear(amplitude: f64, period: f64) -> PointDrive {
    PointDrive {
        direction: shear_direction(),
        amplitude,
        waveform: Waveform::Triangle { period },
    }
}

fn run_shear(p: &MaterialParams, amplitude: f64, period: f64, t_end: f64, dt: f64) -> PointRun {
    let run = cosserat_af::evolution::run_point(
        p,
        &cyclic_shear(amplitude, period),
        PointState::default(),
        t_end,
        dt,
    );
    assert!(run.failure.is_none(), "integration failed: {:?}", run.failure);
    run
}

const SWEEP_NUS: [f64; 4] = [1e-1, 5e-2, 2.5e-2, 1.25e-2];

/// Shared relaxation sweep: two triangle cycles of amplitude 1.5 shear,
/// period 8, dt 1e-3, at each level of `SWEEP_NUS`.
fn sweep() -> &'static [(f64, PointRun)] {
    static SWEEP: OnceLock<Vec<(f64, PointRun)>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        SWEEP_NUS
            .iter()
            .map(|&nu| (nu, run_shear(&base_params(nu), 1.5, 8.0, 16.0, 1e-3)))
            .collect()
    })
}

#[test]
fn criterion_01_the_backstress_stays_inside_its_ball_in_bounded_time() {
    let p = base_params(1e-2);
    let clock = Instant::now();
    let run = run_shear(&p, 4.0, 4.0, 40.0, 1e-3);
    let elapsed = clock.elapsed().as_secs_f64();
    let radius = p.backstress_radius();
    let max_b = run.states.iter().map(|s| s.b.norm()).fold(0.0, f64::max);

    let bound_ok = max_b <= radius * (1.0 + 1e-9);
    let sharp = max_b >= 0.99 * radius;
    let fast = elapsed < 1.0;
    assert!(
        bound_ok && sharp && fast,
        "max |b| = {max_b:.12} (radius {radius}), elapsed {elapsed:.3}s"
    );
    println!(
        "criterion 01 backstress bound: PASS max|b| {max_b:.12} of radius {radius}, \
         ten cycles in {elapsed:.3}s"
    );
}

#[test]
fn criterion_02_plastic_strain_and_backstress_are_exactly_traceless() {
    let run = run_shear(&base_params(1e-2), 1.5, 4.0, 4.0, 1e-3);
    let plastic = run.states.iter().map(|s| s.eps_p.norm()).fold(0.0, f64::max);
    assert!(plastic > 0.1, "the run must actually flow, got max |eps_p| = {plastic}");
    for s in &run.states {
        assert_eq!(s.eps_p.to_sym3().tr(), 0.0);
        assert_eq!(s.b.to_sym3().tr(), 0.0);
    }
    println!(
        "criterion 02 trace conservation: PASS every recorded trace identically 0.0 \
         with max |eps_p| {plastic:.6}"
    );
}

#[test]
fn criterion_03_the_slow_limit_reproduces_linear_kinematic_hardening() {
    let mut p = base_params(1e-4);
    p.d = 0.0;
    let gamma = 2.0;
    let duration = 200.0;
    let drive = PointDrive {
        direction: shear_direction(),
        amplitude: gamma,
        waveform: Waveform::Ramp { duration },
    };
    let run = cosserat_af::evolution::run_point(&p, &drive, PointState::default(), duration, 1e-4);
    assert!(run.failure.is_none());

    let last = run.times.len() - 1;
    let stress = p
        .dev_elastic_stress_of(&run.strains[last], &run.states[last].eps_p)
        .norm();
    let two_mu = 2.0 * p.mu;
    let gamma_y = p.sigma_y / two_mu;
    let closed_form = p.sigma_y + two_mu * p.c * (gamma - gamma_y) / (two_mu + p.c);
    let rel_err = (stress - closed_form).abs() / closed_form;
    assert!(
        rel_err <= 1e-6,
        "stress {stress:.9} vs closed form {closed_form:.9}, rel err {rel_err:.3e}"
    );
    println!(
        "criterion 03 linear-hardening limit: PASS stress {stress:.9} vs {closed_form:.9}, \
         rel err {rel_err:.3e} <= 1e-6"
    );
}

#[test]
fn criterion_04_the_overstress_norm_shrinks_like_sqrt_nu() {
    let runs = sweep();
    let j: Vec<f64> = runs
        .iter()
        .map(|(nu, run)| point_overstress_l2(&base_params(*nu), run))
        .collect();
    let ratios: Vec<f64> = j.windows(2).map(|w| w[1] / w[0]).collect();
    for (i, r) in ratios.iter().enumerate() {
        assert!(
            (0.60..=0.85).contains(r),
            "halving nu from {} scaled the overstress norm by {r:.4}, outside [0.60, 0.85]",
            SWEEP_NUS[i]
        );
    }
    println!(
        "criterion 04 overstress scaling: PASS halving ratios {:?} all in [0.60, 0.85]",
        ratios.iter().map(|r| (r * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_05_the_rate_accumulators_are_uniform_in_nu() {
    let runs = sweep();
    let acc: Vec<[f64; 3]> = runs
        .iter()
        .map(|(nu, run)| point_rate_accumulators(&base_params(*nu), run))
        .collect();
    let mut spreads = [0.0f64; 3];
    for k in 0..3 {
        let lo = acc.iter().map(|a| a[k]).fold(f64::INFINITY, f64::min);
        let hi = acc.iter().map(|a| a[k]).fold(0.0, f64::max);
        if hi == 0.0 {
            assert!(lo == 0.0, "accumulator {k} mixes zero and nonzero values");
            continue;
        }
        spreads[k] = hi / lo - 1.0;
        assert!(
            spreads[k] < 0.10,
            "accumulator {k} spreads {lo:.6} ..= {hi:.6} across the sweep, over 10%"
        );
    }
    println!(
        "criterion 05 uniform rate bounds: PASS accumulator spreads {:?} all under 10%",
        spreads.map(|s| (s * 1e4).round() / 1e4)
    );
}

#[test]
fn criterion_06_an_elastic_preload_closes_the_work_identity() {
    let sys = CoupledSystem::new(
        GridMesh::unit_cube(1),
        base_params(1e-2),
        BoundarySpec::all_dirichlet(),
    )
    .unwrap();
    // 80% of the yield stress at full load keeps every point elastic
    let strain = (0.4 * shear_direction()).to_sym3().to_mat3();
    let g_u = move |x: Vec3, t: f64| {
        let mut u = [0.0; 3];
        for i in 0..3 {
            u[i] = t * (strain[i][0] * x[0] + strain[i][1] * x[1] + strain[i][2] * x[2]);
        }
        u
    };
    let g_a = |_: Vec3, _: f64| [0.0; 3];
    let drive = FieldDrive {
        g_u: &g_u,
        g_a: &g_a,
        body: None,
        couple: None,
        traction: None,
    };
    let states = vec![PointState::default(); sys.n_qps()];
    let run = run_field(&sys, &drive, states, 1.0, 0.2, AdmissibilityPolicy::Fail).unwrap();
    assert!(run.failure.is_none());
    assert!(run
        .steps
        .iter()
        .all(|s| s.states.iter().all(|st| st.eps_p.norm() == 0.0)));

    let pairs = build_test_functions(&sys, &drive).unwrap();
    let scale = {
        let last = run.steps.last().unwrap();
        cosserat_af::diagnostics::field_energy(&sys, &last.dofs, &last.states)
            .total()
            .max(1e-12)
    };
    let mut worst: f64 = 0.0;
    for pair in &pairs {
        let history = energy_inequality_history(&sys, &run, &drive, pair).unwrap();
        for snap in &history {
            worst = worst.max((snap.energy - snap.bound).abs());
        }
    }
    assert!(
        worst <= 1e-6 * scale,
        "work identity residual {worst:.3e} vs scale {scale:.3e}"
    );
    println!(
        "criterion 06 elastic work identity: PASS residual {worst:.3e} <= 1e-6 * {scale:.3e} \
         over {} test pairs",
        pairs.len()
    );
}

#[test]
fn criterion_07_the_stored_energy_is_coercive_until_the_coupling_degenerates() {
    let mesh = || GridMesh::unit_cube(8);
    let sys = CoupledSystem::new(mesh(), base_params(1e-2), BoundarySpec::all_dirichlet()).unwrap();
    let probe_a = coercivity_probe(&sys, 32, 7);
    let probe_b = coercivity_probe(&sys, 32, 1337);
    assert!(probe_a.min_ratio > 0.0 && probe_b.min_ratio > 0.0);
    let drift = (probe_a.min_ratio - probe_b.min_ratio).abs() / probe_a.min_ratio.max(probe_b.min_ratio);
    assert!(
        drift <= 0.20,
        "seeded probes disagree: {} vs {}",
        probe_a.min_ratio,
        probe_b.min_ratio
    );

    let mut weak = base_params(1e-2);
    weak.mu_c *= 1e-6;
    weak.l_c *= 1e-6;
    let weak_sys = CoupledSystem::new(mesh(), weak, BoundarySpec::all_dirichlet()).unwrap();
    let weak_ratio = rotation_mode_ratio(&weak_sys, 7);
    assert!(
        weak_ratio < 1e-4 * probe_a.min_ratio,
        "pure-rotation ratio {weak_ratio:.3e} fails to collapse below 1e-4 x {:.3e}",
        probe_a.min_ratio
    );
    println!(
        "criterion 07 coercivity: PASS min ratio {:.4} (seeds differ {:.1}%), degenerate \
         coupling collapses the rotation mode to {:.3e}",
        probe_a.min_ratio,
        drift * 100.0,
        weak_ratio
    );
}

#[test]
fn criterion_08_manufactured_solutions_converge_at_second_order() {
    let (eu4, ea4) = mms::solve_errors(4).unwrap();
    let (eu8, ea8) = mms::solve_errors(8).unwrap();
    let (eu16, ea16) = mms::solve_errors(16).unwrap();
    let factors = [eu4 / eu8, eu8 / eu16, ea4 / ea8, ea8 / ea16];
    for f in factors {
        assert!(
            (3.4..=4.6).contains(&f),
            "refinement factors {factors:?} leave the second-order window [3.4, 4.6]"
        );
    }
    println!(
        "criterion 08 manufactured convergence: PASS error drops {:?} per refinement, \
         all in [3.4, 4.6]",
        factors.map(|f| (f * 1e3).round() / 1e3)
    );
}

#[test]
fn criterion_09_the_flow_map_satisfies_the_perturbation_inequality() {
    let configs = [
        (1.0, 1.0, 1e-2),
        (0.5, 2.0, 1e-3),
        (2.0, 0.25, 5e-2),
        (1.5, 0.0, 1e-1),
    ];
    let scales = [0.5, 1.5, 4.0];
    let per_combination = 10_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE5);
    let mut pairs = 0usize;
    let mut worst_margin = f64::INFINITY;
    for (c, d, nu) in configs {
        let mut p = base_params(nu);
        p.c = c;
        p.d = d;
        for scale in scales {
            for _ in 0..per_combination {
                let mut draw = |n: usize| -> Vec<f64> {
                    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
                };
                let s = draw(6);
                let t1 = Sym3::new(s[0], s[1], s[2], s[3], s[4], s[5]);
                let s = draw(5);
                let b1 = DevSym3::new(s[0], s[1], s[2], s[3], s[4]);
                let s = draw(6);
                let t2 = Sym3::new(s[0], s[1], s[2], s[3], s[4], s[5]);
                let s = draw(5);
                let b2 = DevSym3::new(s[0], s[1], s[2], s[3], s[4]);
                let (lhs, bound) = flow_map_pairing(&p, &t1, &b1, &t2, &b2);
                assert!(
                    lhs >= bound * (1.0 + 1e-10),
                    "pairing {lhs:.6e} dips under its bound {bound:.6e} \
                     at c={c}, d={d}, nu={nu}, scale={scale}"
                );
                worst_margin = worst_margin.min(lhs - bound);
                pairs += 1;
            }
        }
    }
    assert!(pairs >= 100_000);
    println!(
        "criterion 09 flow-map perturbation inequality: PASS {pairs} sampled pairs, \
         smallest margin above the bound {worst_margin:.3e}"
    );
}

#[test]
fn criterion_10_the_peak_overstress_follows_a_sqrt_nu_envelope() {
    let runs = sweep();
    let peaks: Vec<f64> = runs
        .iter()
        .map(|(_, run)| run.flows.iter().map(|f| f.overstress).fold(0.0, f64::max))
        .collect();
    let envelope = runs[..runs.len() - 1]
        .iter()
        .zip(&peaks)
        .map(|((nu, _), peak)| peak / nu.sqrt())
        .fold(0.0, f64::max);
    let (nu_min, _) = runs[runs.len() - 1];
    let finest = peaks[peaks.len() - 1];
    assert!(finest > 0.0, "the finest run never left the yield surface");
    assert!(
        finest <= 3.0 * envelope * nu_min.sqrt(),
        "peak overstress {finest:.6} at nu = {nu_min} escapes 3 x {envelope:.6} x sqrt(nu)"
    );
    println!(
        "criterion 10 overstress envelope: PASS peak {finest:.6} at nu = {nu_min} within \
         3 x {envelope:.6} x sqrt(nu) = {:.6}",
        3.0 * envelope * nu_min.sqrt()
    );
}
