//! Small fixed-size tensor types for 3D continuum mechanics.
//!
//! Symmetric tensors store 6 components, deviatoric symmetric tensors store 5
//! (the zz entry is reconstructed as -(xx+yy), so reconstructed traces vanish
//! exactly in floating point). Skew tensors are stored through their axial
//! vector, read off the upper triangle:
//!
//! ```text
//!            [  0    a1   a2 ]
//! axl_inv(a)=[ -a1   0    a3 ],    axl(axl_inv(a)) = a,
//!            [ -a2  -a3   0  ]
//! ```
//!
//! which gives `||A||^2 = 2 |axl(A)|^2` for the Frobenius norm.

use std::ops::{Add, Mul, Neg, Sub};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub fn vec3_dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn vec3_norm(a: Vec3) -> f64 {
    vec3_dot(a, a).sqrt()
}

pub fn vec3_add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn vec3_sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn vec3_scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

pub fn mat3_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn mat3_frob2(m: &Mat3) -> f64 {
    let mut s = 0.0;
    for row in m {
        for &v in row {
            s += v * v;
        }
    }
    s
}

/// Symmetric 3x3 tensor, 6 stored components.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Sym3 {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl Sym3 {
    pub const ZERO: Sym3 = Sym3 { xx: 0.0, yy: 0.0, zz: 0.0, xy: 0.0, xz: 0.0, yz: 0.0 };

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, xz: f64, yz: f64) -> Self {
        Sym3 { xx, yy, zz, xy, xz, yz }
    }

    pub fn identity() -> Self {
        Sym3::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
    }

    pub fn tr(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Deviatoric projection: subtracts tr/3 from the diagonal. The result is
    /// stored in the trace-free 5-component representation.
    pub fn dev(&self) -> DevSym3 {
        let m = self.tr() / 3.0;
        DevSym3 {
            xx: self.xx - m,
            yy: self.yy - m,
            xy: self.xy,
            xz: self.xz,
            yz: self.yz,
        }
    }

    /// Frobenius inner product; off-diagonal entries count twice.
    pub fn inner(&self, o: &Sym3) -> f64 {
        self.xx * o.xx
            + self.yy * o.yy
            + self.zz * o.zz
            + 2.0 * (self.xy * o.xy + self.xz * o.xz + self.yz * o.yz)
    }

    pub fn norm2(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn to_mat3(&self) -> Mat3 {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }
}

impl Add for Sym3 {
    type Output = Sym3;
    fn add(self, o: Sym3) -> Sym3 {
        Sym3::new(
            self.xx + o.xx,
            self.yy + o.yy,
            self.zz + o.zz,
            self.xy + o.xy,
            self.xz + o.xz,
            self.yz + o.yz,
        )
    }
}

impl Sub for Sym3 {
    type Output = Sym3;
    fn sub(self, o: Sym3) -> Sym3 {
        Sym3::new(
            self.xx - o.xx,
            self.yy - o.yy,
            self.zz - o.zz,
            self.xy - o.xy,
            self.xz - o.xz,
            self.yz - o.yz,
        )
    }
}

impl Mul<Sym3> for f64 {
    type Output = Sym3;
    fn mul(self, t: Sym3) -> Sym3 {
        Sym3::new(
            self * t.xx,
            self * t.yy,
            self * t.zz,
            self * t.xy,
            self * t.xz,
            self * t.yz,
        )
    }
}

/// Deviatoric symmetric 3x3 tensor. Only 5 independent components are stored;
/// `zz()` is reconstructed as -(xx+yy), so the trace of the reconstructed
/// matrix is exactly zero.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct DevSym3 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl DevSym3 {
    pub const ZERO: DevSym3 = DevSym3 { xx: 0.0, yy: 0.0, xy: 0.0, xz: 0.0, yz: 0.0 };

    pub fn new(xx: f64, yy: f64, xy: f64, xz: f64, yz: f64) -> Self {
        DevSym3 { xx, yy, xy, xz, yz }
    }

    pub fn zz(&self) -> f64 {
        -(self.xx + self.yy)
    }

    pub fn to_sym3(&self) -> Sym3 {
        Sym3::new(self.xx, self.yy, self.zz(), self.xy, self.xz, self.yz)
    }

    pub fn inner(&self, o: &DevSym3) -> f64 {
        self.xx * o.xx
            + self.yy * o.yy
            + self.zz() * o.zz()
            + 2.0 * (self.xy * o.xy + self.xz * o.xz + self.yz * o.yz)
    }

    /// Inner product with a full symmetric tensor. Equals the inner product
    /// with its deviatoric part since the spherical part is orthogonal.
    pub fn inner_sym(&self, o: &Sym3) -> f64 {
        self.xx * o.xx
            + self.yy * o.yy
            + self.zz() * o.zz
            + 2.0 * (self.xy * o.xy + self.xz * o.xz + self.yz * o.yz)
    }

    pub fn norm2(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }
}

impl Add for DevSym3 {
    type Output = DevSym3;
    fn add(self, o: DevSym3) -> DevSym3 {
        DevSym3::new(
            self.xx + o.xx,
            self.yy + o.yy,
            self.xy + o.xy,
            self.xz + o.xz,
            self.yz + o.yz,
        )
    }
}

impl Sub for DevSym3 {
    type Output = DevSym3;
    fn sub(self, o: DevSym3) -> DevSym3 {
        DevSym3::new(
            self.xx - o.xx,
            self.yy - o.yy,
            self.xy - o.xy,
            self.xz - o.xz,
            self.yz - o.yz,
        )
    }
}

impl Mul<DevSym3> for f64 {
    type Output = DevSym3;
    fn mul(self, t: DevSym3) -> DevSym3 {
        DevSym3::new(self * t.xx, self * t.yy, self * t.xy, self * t.xz, self * t.yz)
    }
}

impl Neg for DevSym3 {
    type Output = DevSym3;
    fn neg(self) -> DevSym3 {
        -1.0 * self
    }
}

/// Skew-symmetric 3x3 tensor stored through its axial vector, the upper
/// triangle read row by row.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Skew3 {
    ax: Vec3,
}

impl Skew3 {
    pub const ZERO: Skew3 = Skew3 { ax: [0.0; 3] };

    pub fn from_axial(a: Vec3) -> Self {
        Skew3 { ax: a }
    }

    /// The axial vector `(A01, A02, A12)`.
    pub fn axl(&self) -> Vec3 {
        self.ax
    }

    pub fn to_mat3(&self) -> Mat3 {
        let [a1, a2, a3] = self.ax;
        [[0.0, a1, a2], [-a1, 0.0, a3], [-a2, -a3, 0.0]]
    }

    /// Frobenius norm, equal to sqrt(2) |axl|.
    pub fn norm(&self) -> f64 {
        (2.0 * vec3_dot(self.ax, self.ax)).sqrt()
    }

    pub fn norm2(&self) -> f64 {
        2.0 * vec3_dot(self.ax, self.ax)
    }
}

impl Sub for Skew3 {
    type Output = Skew3;
    fn sub(self, o: Skew3) -> Skew3 {
        Skew3 { ax: vec3_sub(self.ax, o.ax) }
    }
}

/// Inverse of `Skew3::axl`.
pub fn axl_inv(a: Vec3) -> Skew3 {
    Skew3::from_axial(a)
}

/// Splits a general matrix into symmetric and skew parts, M = S + W.
pub fn decompose(m: &Mat3) -> (Sym3, Skew3) {
    let s = Sym3::new(
        m[0][0],
        m[1][1],
        m[2][2],
        0.5 * (m[0][1] + m[1][0]),
        0.5 * (m[0][2] + m[2][0]),
        0.5 * (m[1][2] + m[2][1]),
    );
    let w = Skew3::from_axial([
        0.5 * (m[0][1] - m[1][0]),
        0.5 * (m[0][2] - m[2][0]),
        0.5 * (m[1][2] - m[2][1]),
    ]);
    (s, w)
}

/// Symmetric part of a matrix.
pub fn sym_part(m: &Mat3) -> Sym3 {
    decompose(m).0
}

/// Axial vector of the skew part of a matrix, `axl(skew(M))`.
pub fn axial_of_skew_part(m: &Mat3) -> Vec3 {
    [
        0.5 * (m[0][1] - m[1][0]),
        0.5 * (m[0][2] - m[2][0]),
        0.5 * (m[1][2] - m[2][1]),
    ]
}

/// Isotropic elasticity with Lame constants, T = 2 mu e + lambda tr(e) I.
#[derive(Clone, Copy, Debug)]
pub struct ElasticModuli {
    pub mu: f64,
    pub lambda: f64,
}

impl ElasticModuli {
    /// Requires mu > 0 and bulk modulus 3 lambda + 2 mu > 0 so the tensor is
    /// invertible and positive definite.
    pub fn new(mu: f64, lambda: f64) -> Result<Self, String> {
        if !(mu > 0.0) {
            return Err(format!("shear modulus must be positive, got {mu}"));
        }
        if !(3.0 * lambda + 2.0 * mu > 0.0) {
            return Err(format!(
                "3 lambda + 2 mu must be positive, got {}",
                3.0 * lambda + 2.0 * mu
            ));
        }
        Ok(ElasticModuli { mu, lambda })
    }

    /// Applies the elasticity tensor to a strain.
    pub fn elastic_stress(&self, e: &Sym3) -> Sym3 {
        let t = self.lambda * e.tr();
        Sym3::new(
            2.0 * self.mu * e.xx + t,
            2.0 * self.mu * e.yy + t,
            2.0 * self.mu * e.zz + t,
            2.0 * self.mu * e.xy,
            2.0 * self.mu * e.xz,
            2.0 * self.mu * e.yz,
        )
    }

    /// Applies the inverse elasticity tensor,
    /// `C^{-1} T = (1/2mu) (T - lambda/(3 lambda + 2 mu) tr(T) I)`.
    pub fn compliance(&self, t: &Sym3) -> Sym3 {
        let f = self.lambda / (3.0 * self.lambda + 2.0 * self.mu) * t.tr();
        let s = 0.5 / self.mu;
        Sym3::new(
            s * (t.xx - f),
            s * (t.yy - f),
            s * (t.zz - f),
            s * t.xy,
            s * t.xz,
            s * t.yz,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn reconstructed_trace_is_exactly_zero() {
        let d = DevSym3::new(0.1 + 0.2, -0.3, 0.7, 1e-17, -5.0);
        let s = d.to_sym3();
        assert_eq!(s.tr(), 0.0);
    }

    #[test]
    fn dev_removes_trace_and_keeps_deviator() {
        let s = Sym3::new(3.0, -1.0, 1.0, 0.5, -0.25, 2.0);
        let d = s.dev();
        assert_eq!(d.to_sym3().tr(), 0.0);
        approx(d.xx, 2.0, 1e-15);
        approx(d.yy, -2.0, 1e-15);
        approx(d.zz(), 0.0, 1e-15);
        approx(d.xy, 0.5, 0.0);
    }

    #[test]
    fn decompose_reconstructs() {
        let m: Mat3 = [[1.0, 2.0, 3.0], [-0.5, 0.25, 4.0], [7.0, -2.0, 0.125]];
        let (s, w) = decompose(&m);
        let sm = s.to_mat3();
        let wm = w.to_mat3();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                err = err.max((m[i][j] - sm[i][j] - wm[i][j]).abs());
                scale = scale.max(m[i][j].abs());
            }
        }
        assert!(err <= 1e-15 * scale, "reconstruction error {err}");
        // orthogonality of the split
        let mut ip = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                ip += sm[i][j] * wm[i][j];
            }
        }
        approx(ip, 0.0, 1e-14 * scale * scale);
    }

    #[test]
    fn skew_norm_doubles_axial_norm() {
        let w = Skew3::from_axial([0.3, -1.2, 0.7]);
        let frob2 = mat3_frob2(&w.to_mat3());
        approx(w.norm2(), frob2, 1e-15 * frob2);
        approx(w.norm2(), 2.0 * vec3_dot(w.axl(), w.axl()), 0.0);
    }

    #[test]
    fn axl_reads_upper_triangle() {
        let m: Mat3 = [[0.0, 1.0, 2.0], [-1.0, 0.0, 3.0], [-2.0, -3.0, 0.0]];
        let (s, w) = decompose(&m);
        assert_eq!(w.axl(), [1.0, 2.0, 3.0]);
        assert_eq!(s, Sym3::ZERO);
        assert_eq!(w.to_mat3(), m);
    }

    #[test]
    fn axl_round_trip() {
        let a = [1.5, -0.25, 3.0];
        assert_eq!(axl_inv(a).axl(), a);
        let (_, w) = decompose(&axl_inv(a).to_mat3());
        assert_eq!(w.axl(), a);
    }

    #[test]
    fn compliance_matches_hand_computed_example() {
        // mu = 2, lambda = 3: C^{-1} T = (1/4)(T - (3/13) tr T I)
        let m = ElasticModuli::new(2.0, 3.0).unwrap();
        let t = Sym3::new(3.0, 1.0, -1.0, 0.5, 0.0, -2.0);
        let c = m.compliance(&t);
        let f = 3.0 / 13.0 * 3.0;
        approx(c.xx, 0.25 * (3.0 - f), 1e-15);
        approx(c.yy, 0.25 * (1.0 - f), 1e-15);
        approx(c.zz, 0.25 * (-1.0 - f), 1e-15);
        approx(c.xy, 0.125, 1e-16);
        approx(c.yz, -0.5, 1e-16);
    }

    #[test]
    fn unit_strain_stress_round_trip() {
        // mu = lambda = 1: C(I) = 2 I + 3 I = 5 I, and back
        let m = ElasticModuli::new(1.0, 1.0).unwrap();
        let t = m.elastic_stress(&Sym3::identity());
        assert_eq!(t, 5.0 * Sym3::identity());
        let e = m.compliance(&t);
        let diff = e - Sym3::identity();
        assert!(diff.norm() <= 1e-15);
    }

    #[test]
    fn compliance_inverts_elastic_stress() {
        let m = ElasticModuli::new(0.7, 2.5).unwrap();
        let e = Sym3::new(0.1, -0.4, 0.25, 0.05, -0.3, 0.2);
        let back = m.compliance(&m.elastic_stress(&e));
        let diff = back - e;
        assert!(diff.norm() <= 1e-12 * e.norm());
    }

    #[test]
    fn elastic_stress_of_deviator_is_deviatoric_times_2mu() {
        let m = ElasticModuli::new(1.3, 0.9).unwrap();
        let d = DevSym3::new(1.0, -0.5, 0.25, 0.0, 2.0);
        let t = m.elastic_stress(&d.to_sym3());
        approx(t.tr(), 0.0, 1e-14);
        let diff = t - 2.0 * m.mu * d.to_sym3();
        assert!(diff.norm() <= 1e-14);
    }
}
