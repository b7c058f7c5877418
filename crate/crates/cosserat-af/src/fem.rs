//! Coupled linear solver for the displacement and microrotation fields on a
//! structured hexahedral grid.
//!
//! Both fields use trilinear elements with 2x2x2 Gauss quadrature; internal
//! variables live at the quadrature points. With the microrotation reduced to
//! its axial vector `a`, the assembled bilinear form is the second variation
//! of the stored energy,
//!
//! ```text
//! B((u,a),(v,w)) = int 2 mu eps(u):eps(v) + lambda div(u) div(v)
//!                + 4 mu_c (axl skew grad u - a) . (axl skew grad v - w)
//!                + 4 l_c grad a : grad w dx,
//! ```
//!
//! where the factors 4 absorb the identity `|A|^2 = 2 |axl A|^2` relating
//! tensor and axial-vector norms. The stationarity condition in `w` is
//! twice the weak microrotation balance
//! `2 l_c int grad a : grad w + 2 mu_c int (a - axl skew grad u) . w = 0`,
//! so a zero residual of the assembled system is equivalent to the strong
//! equations; a couple source density stated against the strong form enters
//! the load vector with the same factor 4.
//!
//! The displacement carries Dirichlet data on the tagged faces and traction
//! data on the rest; the axial vector carries Dirichlet data on the whole
//! boundary. Constrained degrees of freedom are eliminated, the reduced
//! matrix is factored once per system, and every solve reuses the factor.

use faer::prelude::Solve;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::material::{MaterialParams, ModelError, PointState};
use crate::mesh::{Face, GridMesh, DOFS_PER_NODE, FACES};
use crate::tensor::{axial_of_skew_part, axl_inv, sym_part, Mat3, Skew3, Sym3, Vec3};

pub const QP_PER_ELEM: usize = 8;
const ELEM_DOFS: usize = 8 * DOFS_PER_NODE;
const GAUSS: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Shape values and physical gradients at the 8 Gauss points, shared by all
/// elements of the uniform grid.
struct ElementTables {
    /// value[qp][local node]
    n: [[f64; 8]; 8],
    /// gradient[qp][local node][direction]
    g: [[[f64; 3]; 8]; 8],
    /// physical offset of each quadrature point from the element min corner
    qp_offset: [[f64; 3]; 8],
    /// quadrature weight times Jacobian determinant, per quadrature point
    wdet: f64,
}

fn element_tables(mesh: &GridMesh) -> ElementTables {
    let h = mesh.spacing();
    let mut t = ElementTables {
        n: [[0.0; 8]; 8],
        g: [[[0.0; 3]; 8]; 8],
        qp_offset: [[0.0; 3]; 8],
        wdet: h[0] * h[1] * h[2] / 8.0,
    };
    for qz in 0..2 {
        for qy in 0..2 {
            for qx in 0..2 {
                let q = (qz * 2 + qy) * 2 + qx;
                let xi = [
                    if qx == 0 { -GAUSS } else { GAUSS },
                    if qy == 0 { -GAUSS } else { GAUSS },
                    if qz == 0 { -GAUSS } else { GAUSS },
                ];
                for c in 0..3 {
                    t.qp_offset[q][c] = 0.5 * (xi[c] + 1.0) * h[c];
                }
                for lk in 0..2 {
                    for lj in 0..2 {
                        for li in 0..2 {
                            let l = (lk * 2 + lj) * 2 + li;
                            let sg = [
                                if li == 0 { -1.0 } else { 1.0 },
                                if lj == 0 { -1.0 } else { 1.0 },
                                if lk == 0 { -1.0 } else { 1.0 },
                            ];
                            let f = [
                                0.5 * (1.0 + xi[0] * sg[0]),
                                0.5 * (1.0 + xi[1] * sg[1]),
                                0.5 * (1.0 + xi[2] * sg[2]),
                            ];
                            t.n[q][l] = f[0] * f[1] * f[2];
                            for c in 0..3 {
                                let mut d = 0.5 * sg[c] * 2.0 / h[c];
                                for c2 in 0..3 {
                                    if c2 != c {
                                        d *= f[c2];
                                    }
                                }
                                t.g[q][l][c] = d;
                            }
                        }
                    }
                }
            }
        }
    }
    t
}

/// 2x2 quadrature table for one box face: bilinear values per face corner
/// (in the order of [`Face::local_nodes`]) and the physical offset of each
/// face quadrature point from the element min corner.
fn face_qp_table(mesh: &GridMesh, face: Face) -> ([[f64; 4]; 4], [[f64; 3]; 4]) {
    let h = mesh.spacing();
    let (normal_axis, fast_axis, slow_axis) = match face {
        Face::XMin | Face::XMax => (0, 1, 2),
        Face::YMin | Face::YMax => (1, 0, 2),
        Face::ZMin | Face::ZMax => (2, 0, 1),
    };
    let normal_coord = match face {
        Face::XMax | Face::YMax | Face::ZMax => h[normal_axis],
        _ => 0.0,
    };
    let mut values = [[0.0; 4]; 4];
    let mut offsets = [[0.0; 3]; 4];
    for q2 in 0..2 {
        for q1 in 0..2 {
            let q = q2 * 2 + q1;
            let xi = [
                if q1 == 0 { -GAUSS } else { GAUSS },
                if q2 == 0 { -GAUSS } else { GAUSS },
            ];
            offsets[q][normal_axis] = normal_coord;
            offsets[q][fast_axis] = 0.5 * (xi[0] + 1.0) * h[fast_axis];
            offsets[q][slow_axis] = 0.5 * (xi[1] + 1.0) * h[slow_axis];
            for c2 in 0..2 {
                for c1 in 0..2 {
                    let fl = c2 * 2 + c1;
                    let s1 = if c1 == 0 { -1.0 } else { 1.0 };
                    let s2 = if c2 == 0 { -1.0 } else { 1.0 };
                    values[q][fl] = 0.25 * (1.0 + xi[0] * s1) * (1.0 + xi[1] * s2);
                }
            }
        }
    }
    (values, offsets)
}

/// Which box faces carry prescribed displacement; the remaining faces carry
/// prescribed traction. The axial vector is prescribed on the whole boundary.
#[derive(Clone, Debug)]
pub struct BoundarySpec {
    pub dirichlet_u: Vec<Face>,
}

impl BoundarySpec {
    pub fn all_dirichlet() -> Self {
        BoundarySpec { dirichlet_u: FACES.to_vec() }
    }

    pub fn neumann_faces(&self) -> Vec<Face> {
        FACES
            .iter()
            .copied()
            .filter(|f| !self.dirichlet_u.contains(f))
            .collect()
    }
}

/// Volume and surface loads for one solve, all evaluated at a fixed time.
/// The couple source is stated against the strong microrotation balance.
#[derive(Default)]
pub struct Loads<'a> {
    pub body: Option<&'a dyn Fn(Vec3) -> Vec3>,
    pub couple: Option<&'a dyn Fn(Vec3) -> Vec3>,
    pub traction: Option<&'a dyn Fn(Vec3, Face) -> Vec3>,
}

/// Kinematic quantities of the coupled fields at one quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct QpKinematics {
    pub u: Vec3,
    pub eps: Sym3,
    /// axial vector of the skew part of the displacement gradient
    pub axl_skew_u: Vec3,
    pub a: Vec3,
    /// grad_a[component][direction]
    pub grad_a: Mat3,
}

impl QpKinematics {
    /// Rotation mismatch `axl(skew grad u) - a`.
    pub fn mismatch(&self) -> Vec3 {
        [
            self.axl_skew_u[0] - self.a[0],
            self.axl_skew_u[1] - self.a[1],
            self.axl_skew_u[2] - self.a[2],
        ]
    }
}

/// Report of one linear solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveReport {
    /// relative residual of the reduced linear system
    pub residual_rel: f64,
}

/// Assembled coupled system with its factored reduced matrix.
pub struct CoupledSystem {
    pub mesh: GridMesh,
    pub params: MaterialParams,
    pub boundary: BoundarySpec,
    tables: ElementTables,
    elem_matrix: Vec<f64>,
    constrained: Vec<bool>,
    free_of_dof: Vec<usize>,
    n_free: usize,
    k_ff: Option<SparseColMat<usize, f64>>,
    k_fc: Option<SparseColMat<usize, f64>>,
    llt: Option<Llt<usize, f64>>,
}

impl CoupledSystem {
    pub fn new(
        mesh: GridMesh,
        params: MaterialParams,
        boundary: BoundarySpec,
    ) -> Result<Self, ModelError> {
        params.validate()?;
        if boundary.dirichlet_u.is_empty() {
            return Err(ModelError::SolveFailure(
                "at least one face must prescribe displacement".into(),
            ));
        }
        if !(params.l_c > 0.0) {
            return Err(ModelError::InvalidParams(
                "field solves need a positive internal length coefficient".into(),
            ));
        }
        let tables = element_tables(&mesh);
        let elem_matrix = element_matrix(&params, &tables);
        let n_dofs = mesh.n_dofs();
        let mut constrained = vec![false; n_dofs];
        for node in 0..mesh.n_nodes() {
            let on_boundary = mesh.node_on_boundary(node);
            if on_boundary {
                for c in 3..6 {
                    constrained[DOFS_PER_NODE * node + c] = true;
                }
            }
            if boundary
                .dirichlet_u
                .iter()
                .any(|&f| mesh.node_on_face(node, f))
            {
                for c in 0..3 {
                    constrained[DOFS_PER_NODE * node + c] = true;
                }
            }
        }
        let mut free_of_dof = vec![usize::MAX; n_dofs];
        let mut n_free = 0;
        for dof in 0..n_dofs {
            if !constrained[dof] {
                free_of_dof[dof] = n_free;
                n_free += 1;
            }
        }

        let mut sys = CoupledSystem {
            mesh,
            params,
            boundary,
            tables,
            elem_matrix,
            constrained,
            free_of_dof,
            n_free,
            k_ff: None,
            k_fc: None,
            llt: None,
        };
        if n_free > 0 {
            sys.assemble_and_factor()?;
        }
        Ok(sys)
    }

    fn assemble_and_factor(&mut self) -> Result<(), ModelError> {
        let n_dofs = self.mesh.n_dofs();
        let mut trip_ff: Vec<Triplet<usize, usize, f64>> = Vec::new();
        let mut trip_fc: Vec<Triplet<usize, usize, f64>> = Vec::new();
        for e in 0..self.mesh.n_elems() {
            let nodes = self.mesh.elem_nodes(e);
            let mut gdofs = [0usize; ELEM_DOFS];
            for l in 0..8 {
                for c in 0..DOFS_PER_NODE {
                    gdofs[DOFS_PER_NODE * l + c] = DOFS_PER_NODE * nodes[l] + c;
                }
            }
            for (r, &gr) in gdofs.iter().enumerate() {
                if self.constrained[gr] {
                    continue;
                }
                let fr = self.free_of_dof[gr];
                for (s, &gc) in gdofs.iter().enumerate() {
                    let v = self.elem_matrix[ELEM_DOFS * r + s];
                    if v == 0.0 {
                        continue;
                    }
                    if self.constrained[gc] {
                        trip_fc.push(Triplet::new(fr, gc, v));
                    } else {
                        trip_ff.push(Triplet::new(fr, self.free_of_dof[gc], v));
                    }
                }
            }
        }
        let k_ff = SparseColMat::try_new_from_triplets(self.n_free, self.n_free, &trip_ff)
            .map_err(|e| ModelError::SolveFailure(format!("assembly failed: {e:?}")))?;
        let k_fc = SparseColMat::try_new_from_triplets(self.n_free, n_dofs, &trip_fc)
            .map_err(|e| ModelError::SolveFailure(format!("assembly failed: {e:?}")))?;
        let llt = k_ff
            .sp_cholesky(Side::Lower)
            .map_err(|e| ModelError::SolveFailure(format!("factorization failed: {e:?}")))?;
        self.k_ff = Some(k_ff);
        self.k_fc = Some(k_fc);
        self.llt = Some(llt);
        Ok(())
    }

    pub fn n_free_dofs(&self) -> usize {
        self.n_free
    }

    pub fn n_qps(&self) -> usize {
        self.mesh.n_elems() * QP_PER_ELEM
    }

    pub fn quad_weight(&self) -> f64 {
        self.tables.wdet
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn elem_min_corner(&self, e: usize) -> Vec3 {
        let [ex, ey, ez] = self.mesh.elem_grid_coords(e);
        let [hx, hy, hz] = self.mesh.spacing();
        [ex as f64 * hx, ey as f64 * hy, ez as f64 * hz]
    }

    pub fn qp_position(&self, e: usize, q: usize) -> Vec3 {
        let c = self.elem_min_corner(e);
        let o = self.tables.qp_offset[q];
        [c[0] + o[0], c[1] + o[1], c[2] + o[2]]
    }

    /// Fills a full-length dof vector with boundary values from the two
    /// closures; free entries are zero.
    pub fn prescribed_values(
        &self,
        g_u: impl Fn(Vec3) -> Vec3,
        g_a: impl Fn(Vec3) -> Vec3,
    ) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.n_dofs()];
        for node in 0..self.mesh.n_nodes() {
            let x = self.mesh.node_coords(node);
            let base = DOFS_PER_NODE * node;
            if self.constrained[base] {
                let v = g_u(x);
                out[base..base + 3].copy_from_slice(&v);
            }
            if self.constrained[base + 3] {
                let v = g_a(x);
                out[base + 3..base + 6].copy_from_slice(&v);
            }
        }
        out
    }

    /// Solves the coupled system for given plastic strains, boundary values,
    /// and loads. Returns the full dof vector (prescribed entries copied
    /// through) and the solve report.
    pub fn solve(
        &self,
        states: &[PointState],
        prescribed: &[f64],
        loads: &Loads,
    ) -> Result<(Vec<f64>, SolveReport), ModelError> {
        assert_eq!(states.len(), self.n_qps());
        assert_eq!(prescribed.len(), self.mesh.n_dofs());
        let mut dofs = prescribed.to_vec();
        for dof in 0..dofs.len() {
            if !self.constrained[dof] {
                dofs[dof] = 0.0;
            }
        }
        if self.n_free == 0 {
            return Ok((dofs, SolveReport { residual_rel: 0.0 }));
        }
        let rhs_full = self.assemble_rhs(states, loads);
        let k_fc = self.k_fc.as_ref().expect("assembled");
        let k_ff = self.k_ff.as_ref().expect("assembled");
        let llt = self.llt.as_ref().expect("factored");

        let xc = Mat::from_fn(dofs.len(), 1, |i, _| dofs[i]);
        let coupling = k_fc * &xc;
        let mut b_red = Mat::<f64>::zeros(self.n_free, 1);
        for dof in 0..dofs.len() {
            let fr = self.free_of_dof[dof];
            if fr != usize::MAX {
                b_red[(fr, 0)] = rhs_full[dof] - coupling[(fr, 0)];
            }
        }
        let x = llt.solve(&b_red);
        let check = k_ff * &x;
        let mut rnorm2 = 0.0;
        let mut bnorm2 = 0.0;
        for i in 0..self.n_free {
            let r = check[(i, 0)] - b_red[(i, 0)];
            rnorm2 += r * r;
            bnorm2 += b_red[(i, 0)] * b_red[(i, 0)];
        }
        let residual_rel = if bnorm2 > 0.0 {
            (rnorm2 / bnorm2).sqrt()
        } else {
            rnorm2.sqrt()
        };
        if !(residual_rel <= 1e-9) {
            return Err(ModelError::SolveFailure(format!(
                "linear solve residual {residual_rel:.3e} exceeds tolerance"
            )));
        }
        for dof in 0..dofs.len() {
            let fr = self.free_of_dof[dof];
            if fr != usize::MAX {
                dofs[dof] = x[(fr, 0)];
            }
        }
        Ok((dofs, SolveReport { residual_rel }))
    }

    fn assemble_rhs(&self, states: &[PointState], loads: &Loads) -> Vec<f64> {
        let mut rhs = vec![0.0; self.mesh.n_dofs()];
        let t = &self.tables;
        let two_mu = 2.0 * self.params.mu;
        for e in 0..self.mesh.n_elems() {
            let nodes = self.mesh.elem_nodes(e);
            let corner = self.elem_min_corner(e);
            for q in 0..QP_PER_ELEM {
                let x = [
                    corner[0] + t.qp_offset[q][0],
                    corner[1] + t.qp_offset[q][1],
                    corner[2] + t.qp_offset[q][2],
                ];
                let eps_p = states[QP_PER_ELEM * e + q].eps_p.to_sym3();
                let f = loads.body.map(|f| f(x));
                let m = loads.couple.map(|m| m(x));
                for l in 0..8 {
                    let base = DOFS_PER_NODE * nodes[l];
                    let gl = t.g[q][l];
                    // eigenstrain load 2 mu eps_p : eps(v)
                    let ep_g = [
                        eps_p.xx * gl[0] + eps_p.xy * gl[1] + eps_p.xz * gl[2],
                        eps_p.xy * gl[0] + eps_p.yy * gl[1] + eps_p.yz * gl[2],
                        eps_p.xz * gl[0] + eps_p.yz * gl[1] + eps_p.zz * gl[2],
                    ];
                    for i in 0..3 {
                        rhs[base + i] += t.wdet * two_mu * ep_g[i];
                    }
                    if let Some(fv) = f {
                        for i in 0..3 {
                            rhs[base + i] += t.wdet * t.n[q][l] * fv[i];
                        }
                    }
                    if let Some(mv) = m {
                        for i in 0..3 {
                            rhs[base + 3 + i] += 4.0 * t.wdet * t.n[q][l] * mv[i];
                        }
                    }
                }
            }
        }
        if let Some(traction) = loads.traction {
            for face in self.boundary.neumann_faces() {
                let (values, offsets) = face_qp_table(&self.mesh, face);
                let locs = face.local_nodes();
                let w = self.mesh.face_area(face) / 4.0;
                for e in self.mesh.elems_on_face(face) {
                    let nodes = self.mesh.elem_nodes(e);
                    let corner = self.elem_min_corner(e);
                    for q in 0..4 {
                        let x = [
                            corner[0] + offsets[q][0],
                            corner[1] + offsets[q][1],
                            corner[2] + offsets[q][2],
                        ];
                        let tv = traction(x, face);
                        for fl in 0..4 {
                            let base = DOFS_PER_NODE * nodes[locs[fl]];
                            for i in 0..3 {
                                rhs[base + i] += w * values[q][fl] * tv[i];
                            }
                        }
                    }
                }
            }
        }
        rhs
    }

    /// Evaluates strains, rotation quantities, and gradients at one
    /// quadrature point of one element.
    pub fn kinematics(&self, dofs: &[f64], e: usize, q: usize) -> QpKinematics {
        let t = &self.tables;
        let nodes = self.mesh.elem_nodes(e);
        let mut u = [0.0; 3];
        let mut grad_u = [[0.0; 3]; 3];
        let mut a = [0.0; 3];
        let mut grad_a = [[0.0; 3]; 3];
        for l in 0..8 {
            let base = DOFS_PER_NODE * nodes[l];
            let gl = t.g[q][l];
            let nl = t.n[q][l];
            for i in 0..3 {
                let ui = dofs[base + i];
                let ai = dofs[base + 3 + i];
                u[i] += nl * ui;
                a[i] += nl * ai;
                for c in 0..3 {
                    grad_u[i][c] += ui * gl[c];
                    grad_a[i][c] += ai * gl[c];
                }
            }
        }
        QpKinematics {
            u,
            eps: sym_part(&grad_u),
            axl_skew_u: axial_of_skew_part(&grad_u),
            a,
            grad_a,
        }
    }

    /// Visits every quadrature point with its position, weight, and
    /// kinematics.
    pub fn for_each_qp(&self, dofs: &[f64], mut visit: impl FnMut(usize, usize, Vec3, &QpKinematics)) {
        for e in 0..self.mesh.n_elems() {
            for q in 0..QP_PER_ELEM {
                let kin = self.kinematics(dofs, e, q);
                visit(e, q, self.qp_position(e, q), &kin);
            }
        }
    }

    /// Visits the 2x2 quadrature points of every boundary element face on
    /// one box face with the owning element, position, and surface weight.
    pub fn for_each_face_qp(&self, face: Face, mut visit: impl FnMut(usize, Vec3, f64)) {
        let (_, offsets) = face_qp_table(&self.mesh, face);
        let w = self.mesh.face_area(face) / 4.0;
        for e in self.mesh.elems_on_face(face) {
            let corner = self.elem_min_corner(e);
            for o in &offsets {
                visit(e, [corner[0] + o[0], corner[1] + o[1], corner[2] + o[2]], w);
            }
        }
    }

    /// Elastic stress `2 mu (eps - eps_p) + lambda tr(eps) I` at a
    /// quadrature point.
    pub fn elastic_stress(&self, kin: &QpKinematics, state: &PointState) -> Sym3 {
        self.params.elastic_stress_of(&kin.eps, &state.eps_p)
    }

    /// Skew part of the total stress, `2 mu_c (skew grad u - A)`.
    pub fn couple_stress(&self, kin: &QpKinematics) -> Skew3 {
        let m = kin.mismatch();
        axl_inv([
            2.0 * self.params.mu_c * m[0],
            2.0 * self.params.mu_c * m[1],
            2.0 * self.params.mu_c * m[2],
        ])
    }

    /// Total stress as a full 3x3 matrix.
    pub fn total_stress(&self, kin: &QpKinematics, state: &PointState) -> Mat3 {
        let te = self.elastic_stress(kin, state).to_mat3();
        let tc = self.couple_stress(kin).to_mat3();
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = te[i][j] + tc[i][j];
            }
        }
        out
    }

    /// Assembles the unreduced symmetric stiffness over all dofs; intended
    /// for small meshes in verification code.
    pub fn full_matrix(&self) -> SparseColMat<usize, f64> {
        let n = self.mesh.n_dofs();
        let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::new();
        for e in 0..self.mesh.n_elems() {
            let nodes = self.mesh.elem_nodes(e);
            for r in 0..ELEM_DOFS {
                let gr = DOFS_PER_NODE * nodes[r / DOFS_PER_NODE] + r % DOFS_PER_NODE;
                for s in 0..ELEM_DOFS {
                    let v = self.elem_matrix[ELEM_DOFS * r + s];
                    if v != 0.0 {
                        let gc = DOFS_PER_NODE * nodes[s / DOFS_PER_NODE] + s % DOFS_PER_NODE;
                        trips.push(Triplet::new(gr, gc, v));
                    }
                }
            }
        }
        SparseColMat::try_new_from_triplets(n, n, &trips).expect("well-formed triplets")
    }
}

/// Dense 48x48 element stiffness of the coupled form, row-major, dof order
/// node-major with displacement components before axial components.
fn element_matrix(params: &MaterialParams, t: &ElementTables) -> Vec<f64> {
    let mut k = vec![0.0; ELEM_DOFS * ELEM_DOFS];
    let (mu, lambda, mu_c, l_c) = (params.mu, params.lambda, params.mu_c, params.l_c);
    for q in 0..QP_PER_ELEM {
        // axial vector of skew(e_i outer g_l) per local node and component
        let mut p = [[[0.0; 3]; 3]; 8];
        for l in 0..8 {
            for i in 0..3 {
                let mut m = [[0.0; 3]; 3];
                m[i] = t.g[q][l];
                p[l][i] = axial_of_skew_part(&m);
            }
        }
        for l in 0..8 {
            let gl = t.g[q][l];
            let nl = t.n[q][l];
            for m in 0..8 {
                let gm = t.g[q][m];
                let nm = t.n[q][m];
                let dot = gl[0] * gm[0] + gl[1] * gm[1] + gl[2] * gm[2];
                for i in 0..3 {
                    for j in 0..3 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        let mut uu = mu * (delta * dot + gm[i] * gl[j]) + lambda * gl[i] * gm[j];
                        let pp = p[l][i][0] * p[m][j][0]
                            + p[l][i][1] * p[m][j][1]
                            + p[l][i][2] * p[m][j][2];
                        uu += 4.0 * mu_c * pp;
                        add(&mut k, 6 * l + i, 6 * m + j, t.wdet * uu);

                        let ua = -4.0 * mu_c * nm * p[l][i][j];
                        add(&mut k, 6 * l + i, 6 * m + 3 + j, t.wdet * ua);
                        let au = -4.0 * mu_c * nl * p[m][j][i];
                        add(&mut k, 6 * l + 3 + i, 6 * m + j, t.wdet * au);

                        let aa = 4.0 * mu_c * nl * nm * delta + 4.0 * l_c * delta * dot;
                        add(&mut k, 6 * l + 3 + i, 6 * m + 3 + j, t.wdet * aa);
                    }
                }
            }
        }
    }
    k
}

fn add(k: &mut [f64], r: usize, c: usize, v: f64) {
    k[ELEM_DOFS * r + c] += v;
}
