//! Structured hexahedral grid over an axis-aligned box.
//!
//! Nodes are numbered x-fastest, `id = (k (ny+1) + j)(nx+1) + i`, and each
//! node carries 6 degrees of freedom, interleaved as the displacement vector
//! followed by the microrotation axial vector. Element local nodes follow
//! the same x-fastest order over the 2x2x2 corner stencil.

use crate::material::ModelError;
use crate::tensor::Vec3;

pub const DOFS_PER_NODE: usize = 6;

/// The six faces of the box, used to tag boundary conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

pub const FACES: [Face; 6] = [Face::XMin, Face::XMax, Face::YMin, Face::YMax, Face::ZMin, Face::ZMax];

impl Face {
    pub fn normal(self) -> Vec3 {
        match self {
            Face::XMin => [-1.0, 0.0, 0.0],
            Face::XMax => [1.0, 0.0, 0.0],
            Face::YMin => [0.0, -1.0, 0.0],
            Face::YMax => [0.0, 1.0, 0.0],
            Face::ZMin => [0.0, 0.0, -1.0],
            Face::ZMax => [0.0, 0.0, 1.0],
        }
    }

    /// Local corner indices of this face in an element, x-fastest order.
    pub fn local_nodes(self) -> [usize; 4] {
        match self {
            Face::XMin => [0, 2, 4, 6],
            Face::XMax => [1, 3, 5, 7],
            Face::YMin => [0, 1, 4, 5],
            Face::YMax => [2, 3, 6, 7],
            Face::ZMin => [0, 1, 2, 3],
            Face::ZMax => [4, 5, 6, 7],
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridMesh {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
}

impl GridMesh {
    pub fn new(divisions: [usize; 3], extents: [f64; 3]) -> Result<Self, ModelError> {
        let [nx, ny, nz] = divisions;
        let [lx, ly, lz] = extents;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(ModelError::InvalidParams(
                "mesh needs at least one element per direction".into(),
            ));
        }
        if !(lx > 0.0 && ly > 0.0 && lz > 0.0) {
            return Err(ModelError::InvalidParams(
                "mesh extents must be positive".into(),
            ));
        }
        Ok(GridMesh { nx, ny, nz, lx, ly, lz })
    }

    pub fn unit_cube(n: usize) -> Self {
        GridMesh::new([n, n, n], [1.0, 1.0, 1.0]).expect("positive divisions")
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1) * (self.nz + 1)
    }

    pub fn n_elems(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn n_dofs(&self) -> usize {
        DOFS_PER_NODE * self.n_nodes()
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.lx / self.nx as f64,
            self.ly / self.ny as f64,
            self.lz / self.nz as f64,
        ]
    }

    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.lz
    }

    pub fn node_id(&self, i: usize, j: usize, k: usize) -> usize {
        (k * (self.ny + 1) + j) * (self.nx + 1) + i
    }

    pub fn node_grid_coords(&self, node: usize) -> [usize; 3] {
        let i = node % (self.nx + 1);
        let j = (node / (self.nx + 1)) % (self.ny + 1);
        let k = node / ((self.nx + 1) * (self.ny + 1));
        [i, j, k]
    }

    pub fn node_coords(&self, node: usize) -> Vec3 {
        let [i, j, k] = self.node_grid_coords(node);
        let [hx, hy, hz] = self.spacing();
        [i as f64 * hx, j as f64 * hy, k as f64 * hz]
    }

    pub fn elem_id(&self, ex: usize, ey: usize, ez: usize) -> usize {
        (ez * self.ny + ey) * self.nx + ex
    }

    pub fn elem_grid_coords(&self, e: usize) -> [usize; 3] {
        let ex = e % self.nx;
        let ey = (e / self.nx) % self.ny;
        let ez = e / (self.nx * self.ny);
        [ex, ey, ez]
    }

    /// Global node ids of an element's 8 corners, x-fastest local order.
    pub fn elem_nodes(&self, e: usize) -> [usize; 8] {
        let [ex, ey, ez] = self.elem_grid_coords(e);
        let mut out = [0usize; 8];
        let mut l = 0;
        for ck in 0..2 {
            for cj in 0..2 {
                for ci in 0..2 {
                    out[l] = self.node_id(ex + ci, ey + cj, ez + ck);
                    l += 1;
                }
            }
        }
        out
    }

    pub fn node_on_face(&self, node: usize, face: Face) -> bool {
        let [i, j, k] = self.node_grid_coords(node);
        match face {
            Face::XMin => i == 0,
            Face::XMax => i == self.nx,
            Face::YMin => j == 0,
            Face::YMax => j == self.ny,
            Face::ZMin => k == 0,
            Face::ZMax => k == self.nz,
        }
    }

    pub fn node_on_boundary(&self, node: usize) -> bool {
        FACES.iter().any(|&f| self.node_on_face(node, f))
    }

    /// Elements owning a boundary face on the given box face.
    pub fn elems_on_face(&self, face: Face) -> Vec<usize> {
        let mut out = Vec::new();
        let (xr, yr, zr) = match face {
            Face::XMin => (0..1, 0..self.ny, 0..self.nz),
            Face::XMax => (self.nx - 1..self.nx, 0..self.ny, 0..self.nz),
            Face::YMin => (0..self.nx, 0..1, 0..self.nz),
            Face::YMax => (0..self.nx, self.ny - 1..self.ny, 0..self.nz),
            Face::ZMin => (0..self.nx, 0..self.ny, 0..1),
            Face::ZMax => (0..self.nx, 0..self.ny, self.nz - 1..self.nz),
        };
        for ez in zr {
            for ey in yr.clone() {
                for ex in xr.clone() {
                    out.push(self.elem_id(ex, ey, ez));
                }
            }
        }
        out
    }

    /// Area of one element face lying on the given box face.
    pub fn face_area(&self, face: Face) -> f64 {
        let [hx, hy, hz] = self.spacing();
        match face {
            Face::XMin | Face::XMax => hy * hz,
            Face::YMin | Face::YMax => hx * hz,
            Face::ZMin | Face::ZMax => hx * hy,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_numbering() {
        let m = GridMesh::unit_cube(2);
        assert_eq!(m.n_nodes(), 27);
        assert_eq!(m.n_elems(), 8);
        assert_eq!(m.n_dofs(), 162);
        assert_eq!(m.node_id(2, 2, 2), 26);
        assert_eq!(m.node_grid_coords(26), [2, 2, 2]);
        for n in 0..m.n_nodes() {
            let [i, j, k] = m.node_grid_coords(n);
            assert_eq!(m.node_id(i, j, k), n);
        }
    }

    #[test]
    fn element_corners_are_adjacent_nodes() {
        let m = GridMesh::new([2, 3, 4], [2.0, 3.0, 4.0]).unwrap();
        let e = m.elem_id(1, 2, 3);
        let nodes = m.elem_nodes(e);
        let base = m.node_coords(nodes[0]);
        let [hx, hy, hz] = m.spacing();
        let offsets = [
            [0.0, 0.0, 0.0],
            [hx, 0.0, 0.0],
            [0.0, hy, 0.0],
            [hx, hy, 0.0],
            [0.0, 0.0, hz],
            [hx, 0.0, hz],
            [0.0, hy, hz],
            [hx, hy, hz],
        ];
        for (l, &node) in nodes.iter().enumerate() {
            let x = m.node_coords(node);
            for c in 0..3 {
                assert!((x[c] - base[c] - offsets[l][c]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn boundary_classification() {
        let m = GridMesh::unit_cube(3);
        let interior = m.node_id(1, 1, 1);
        assert!(!m.node_on_boundary(interior));
        let corner = m.node_id(0, 0, 3);
        assert!(m.node_on_boundary(corner));
        assert!(m.node_on_face(corner, Face::XMin));
        assert!(m.node_on_face(corner, Face::ZMax));
        assert!(!m.node_on_face(corner, Face::XMax));
        let boundary_count = (0..m.n_nodes()).filter(|&n| m.node_on_boundary(n)).count();
        assert_eq!(boundary_count, 4 * 4 * 4 - 2 * 2 * 2);
    }

    #[test]
    fn face_elements_and_local_nodes_agree() {
        let m = GridMesh::unit_cube(3);
        for &face in &FACES {
            let elems = m.elems_on_face(face);
            assert_eq!(elems.len(), 9);
            for e in elems {
                let nodes = m.elem_nodes(e);
                for l in face.local_nodes() {
                    assert!(m.node_on_face(nodes[l], face));
                }
            }
        }
    }

    #[test]
    fn one_element_mesh_is_all_boundary() {
        let m = GridMesh::unit_cube(1);
        assert_eq!(m.n_nodes(), 8);
        assert!((0..8).all(|n| m.node_on_boundary(n)));
        assert_eq!(m.spacing(), [1.0, 1.0, 1.0]);
        assert_eq!(m.volume(), 1.0);
    }

    #[test]
    fn degenerate_meshes_are_rejected() {
        assert!(GridMesh::new([0, 1, 1], [1.0, 1.0, 1.0]).is_err());
        assert!(GridMesh::new([1, 1, 1], [1.0, 0.0, 1.0]).is_err());
    }
}
