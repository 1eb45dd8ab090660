//! Ready-made meshes.

use super::{GeometryError, TetMesh, Vec3};

impl TetMesh {
    /// The corner tetrahedron with vertices at the origin and the unit axes.
    pub fn unit_tet() -> TetMesh {
        TetMesh::build(vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()], vec![[0, 1, 2, 3]])
            .expect("unit tet is valid")
    }

    /// Axis-aligned cube split into 24 tetrahedra: every face is fanned into
    /// four triangles around its centre and each triangle is joined to the
    /// cube centre.
    pub fn cube(center: Vec3, half: f64) -> Result<TetMesh, GeometryError> {
        let mut vertices = Vec::with_capacity(15);
        for i in 0..8 {
            let s = |b: usize| if i >> b & 1 == 1 { half } else { -half };
            vertices.push(center + Vec3::new(s(0), s(1), s(2)));
        }
        let corner = |x: usize, y: usize, z: usize| x | y << 1 | z << 2;
        let mut tets = Vec::with_capacity(24);
        let middle = 14;
        for axis in 0..3 {
            for side in 0..2 {
                let mut offset = Vec3::zeros();
                offset[axis] = if side == 1 { half } else { -half };
                let fc = vertices.len();
                vertices.push(center + offset);
                let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                let at = |a: usize, b: usize| {
                    let mut c = [0usize; 3];
                    c[axis] = side;
                    c[u] = a;
                    c[v] = b;
                    corner(c[0], c[1], c[2])
                };
                let ring = [at(0, 0), at(1, 0), at(1, 1), at(0, 1)];
                for k in 0..4 {
                    tets.push([middle, fc, ring[k], ring[(k + 1) % 4]]);
                }
            }
        }
        vertices.push(center);
        TetMesh::build(vertices, tets)
    }

    /// Box `[min, max]` cut into `dims` cells, each split into six
    /// tetrahedra along its main diagonal. Neighbouring cells share faces.
    pub fn grid(dims: [usize; 3], min: Vec3, max: Vec3) -> Result<TetMesh, GeometryError> {
        if dims.contains(&0) {
            return Err(GeometryError::Empty);
        }
        let [nx, ny, nz] = dims;
        let index = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    let f = Vec3::new(i as f64 / nx as f64, j as f64 / ny as f64, k as f64 / nz as f64);
                    vertices.push(min + (max - min).component_mul(&f));
                }
            }
        }
        const ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut tets = Vec::with_capacity(6 * nx * ny * nz);
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    for order in ORDERS {
                        let mut c = [i, j, k];
                        let mut tet = [index(c[0], c[1], c[2]); 4];
                        for (n, axis) in order.into_iter().enumerate() {
                            c[axis] += 1;
                            tet[n + 1] = index(c[0], c[1], c[2]);
                        }
                        tets.push(tet);
                    }
                }
            }
        }
        TetMesh::build(vertices, tets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_volume_and_boundary() {
        let m = TetMesh::cube(Vec3::new(1.0, 0.0, -2.0), 1.0).unwrap();
        assert_eq!(m.num_tets(), 24);
        let vol: f64 = (0..24).map(|t| m.volume(t)).sum();
        assert!((vol - 8.0).abs() < 1e-12);
        assert_eq!(m.num_boundary_faces(), 24);
        assert!(!m.has_overlaps());
        assert!(m.locate_point(&Vec3::new(1.3, -0.2, -2.9)).is_some());
    }

    #[test]
    fn grid_tiles_its_box() {
        let m = TetMesh::grid([2, 3, 1], Vec3::zeros(), Vec3::new(2.0, 3.0, 0.5)).unwrap();
        assert_eq!(m.num_tets(), 36);
        let vol: f64 = (0..m.num_tets()).map(|t| m.volume(t)).sum();
        assert!((vol - 3.0).abs() < 1e-12);
        assert_eq!(m.num_boundary_faces(), 2 * (2 * 6 + 2 * 2 + 2 * 3));
        assert!(!m.has_overlaps());
        assert!(TetMesh::grid([0, 1, 1], Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)).is_err());
    }
}
