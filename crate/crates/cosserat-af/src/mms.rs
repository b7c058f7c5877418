//! Manufactured smooth solution for convergence checks of the coupled
//! solver.
//!
//! The fields `u = S(x) U` and `a = S(x) V` with `S = sin(pi x) sin(pi y)
//! sin(pi z)` vanish on the boundary of the unit cube, so the Dirichlet data
//! is zero while the interior is fully three dimensional. Substituting them
//! into the balance equations gives closed-form body force, couple source,
//! and traction; solving with those loads must reproduce the fields at
//! second order in the mesh spacing.

use std::f64::consts::PI;

use crate::fem::{BoundarySpec, CoupledSystem, Loads};
use crate::material::{MaterialParams, ModelError, PointState};
use crate::mesh::{Face, GridMesh};
use crate::tensor::{mat3_vec, Mat3, Vec3};

const U_AMP: Vec3 = [0.3, -0.2, 0.25];
const V_AMP: Vec3 = [0.2, 0.15, -0.1];

/// Material parameters the manufactured loads are derived for.
pub fn reference_params() -> MaterialParams {
    MaterialParams {
        mu: 1.0,
        lambda: 1.0,
        mu_c: 0.5,
        l_c: 0.4,
        c: 1.0,
        d: 1.0,
        sigma_y: 1.0,
        nu: 1e-2,
        k: None,
    }
}

/// Displacement Dirichlet faces; the remaining face carries the manufactured
/// traction.
pub fn boundary() -> BoundarySpec {
    BoundarySpec {
        dirichlet_u: vec![Face::XMin, Face::YMin, Face::YMax, Face::ZMin, Face::ZMax],
    }
}

fn s(x: Vec3) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin() * (PI * x[2]).sin()
}

fn grad_s(x: Vec3) -> Vec3 {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let (sz, cz) = (PI * x[2]).sin_cos();
    [PI * cx * sy * sz, PI * sx * cy * sz, PI * sx * sy * cz]
}

fn hess_s(x: Vec3) -> Mat3 {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (PI * x[1]).sin_cos();
    let (sz, cz) = (PI * x[2]).sin_cos();
    let p2 = PI * PI;
    let sv = sx * sy * sz;
    [
        [-p2 * sv, p2 * cx * cy * sz, p2 * cx * sy * cz],
        [p2 * cx * cy * sz, -p2 * sv, p2 * sx * cy * cz],
        [p2 * cx * sy * cz, p2 * sx * cy * cz, -p2 * sv],
    ]
}

pub fn u_exact(x: Vec3) -> Vec3 {
    let sv = s(x);
    [sv * U_AMP[0], sv * U_AMP[1], sv * U_AMP[2]]
}

pub fn a_exact(x: Vec3) -> Vec3 {
    let sv = s(x);
    [sv * V_AMP[0], sv * V_AMP[1], sv * V_AMP[2]]
}

/// Axial vector of the skew part of `grad u`, reading the upper triangle.
fn p_exact(x: Vec3) -> Vec3 {
    let g = grad_s(x);
    [
        0.5 * (U_AMP[0] * g[1] - U_AMP[1] * g[0]),
        0.5 * (U_AMP[0] * g[2] - U_AMP[2] * g[0]),
        0.5 * (U_AMP[1] * g[2] - U_AMP[2] * g[1]),
    ]
}

/// Total stress of the manufactured fields as a full matrix.
pub fn stress_exact(p: &MaterialParams, x: Vec3) -> Mat3 {
    let g = grad_s(x);
    let sv = s(x);
    // grad u = U outer grad S
    let mut t = [[0.0; 3]; 3];
    let tr: f64 = U_AMP[0] * g[0] + U_AMP[1] * g[1] + U_AMP[2] * g[2];
    for i in 0..3 {
        for j in 0..3 {
            let eps = 0.5 * (U_AMP[i] * g[j] + U_AMP[j] * g[i]);
            t[i][j] = 2.0 * p.mu * eps;
        }
        t[i][i] += p.lambda * tr;
    }
    let w = p_exact(x);
    let ax = [
        2.0 * p.mu_c * (w[0] - sv * V_AMP[0]),
        2.0 * p.mu_c * (w[1] - sv * V_AMP[1]),
        2.0 * p.mu_c * (w[2] - sv * V_AMP[2]),
    ];
    t[0][1] += ax[0];
    t[1][0] -= ax[0];
    t[0][2] += ax[1];
    t[2][0] -= ax[1];
    t[1][2] += ax[2];
    t[2][1] -= ax[2];
    t
}

/// Body force balancing the manufactured stress, `f = -div T`.
pub fn body_force(p: &MaterialParams, x: Vec3) -> Vec3 {
    let g = grad_s(x);
    let h = hess_s(x);
    let lap = h[0][0] + h[1][1] + h[2][2];
    let hu = mat3_vec(&h, U_AMP);
    // div of the skew contribution 2 mu_c (skew grad u - A): the axial
    // vector is w = p - S V with p from the first derivatives of S, so its
    // gradient needs the second derivatives
    let dw = |r: usize, c: usize| -> f64 {
        // d/dx_c of w_r
        let dp = match r {
            0 => 0.5 * (U_AMP[0] * h[1][c] - U_AMP[1] * h[0][c]),
            1 => 0.5 * (U_AMP[0] * h[2][c] - U_AMP[2] * h[0][c]),
            _ => 0.5 * (U_AMP[1] * h[2][c] - U_AMP[2] * h[1][c]),
        };
        dp - V_AMP[r] * g[c]
    };
    let div_skew = [
        2.0 * p.mu_c * (dw(0, 1) + dw(1, 2)),
        2.0 * p.mu_c * (-dw(0, 0) + dw(2, 2)),
        2.0 * p.mu_c * (-dw(1, 0) - dw(2, 1)),
    ];
    let mut f = [0.0; 3];
    for i in 0..3 {
        let div_sym = p.mu * (lap * U_AMP[i] + hu[i]) + p.lambda * hu[i];
        f[i] = -(div_sym + div_skew[i]);
    }
    f
}

/// Couple source balancing the microrotation equation, stated against the
/// strong form `-l_c lap a - mu_c (axl skew grad u - a) = m`.
pub fn couple_source(p: &MaterialParams, x: Vec3) -> Vec3 {
    let sv = s(x);
    let w = p_exact(x);
    let mut m = [0.0; 3];
    for i in 0..3 {
        m[i] = 3.0 * PI * PI * p.l_c * sv * V_AMP[i] - p.mu_c * (w[i] - sv * V_AMP[i]);
    }
    m
}

/// Traction of the manufactured stress on a face of the unit cube.
pub fn traction(p: &MaterialParams, x: Vec3, face: Face) -> Vec3 {
    let t = stress_exact(p, x);
    let n = face.normal();
    mat3_vec(&t, n)
}

/// L2 errors of the discrete solution against the manufactured fields on an
/// `n^3` unit-cube grid.
pub fn solve_errors(n: usize) -> Result<(f64, f64), ModelError> {
    let p = reference_params();
    let sys = CoupledSystem::new(GridMesh::unit_cube(n), p, boundary())?;
    let states = vec![PointState::default(); sys.n_qps()];
    let prescribed = vec![0.0; sys.mesh.n_dofs()];
    let body = |x: Vec3| body_force(&p, x);
    let couple = |x: Vec3| couple_source(&p, x);
    let trac = |x: Vec3, face: Face| traction(&p, x, face);
    let loads = Loads {
        body: Some(&body),
        couple: Some(&couple),
        traction: Some(&trac),
    };
    let (dofs, _) = sys.solve(&states, &prescribed, &loads)?;
    let w = sys.quad_weight();
    let mut err_u = 0.0;
    let mut err_a = 0.0;
    sys.for_each_qp(&dofs, |_, _, x, kin| {
        let ue = u_exact(x);
        let ae = a_exact(x);
        for c in 0..3 {
            err_u += w * (kin.u[c] - ue[c]).powi(2);
            err_a += w * (kin.a[c] - ae[c]).powi(2);
        }
    });
    Ok((err_u.sqrt(), err_a.sqrt()))
}
