use std::collections::HashMap;

use nalgebra::Matrix3;

use super::grid::{Aabb, UniformGrid};
use super::overlap::tets_overlap;
use super::{Bary4, GeometryError, Vec3};

/// Relative tolerance, in units of the bounding-box diagonal cubed, below
/// which a tetrahedron counts as degenerate.
pub const DEGENERATE_VOLUME_TOL: f64 = 1e-12;

/// Local face `i` is opposite local vertex `i`; the vertex order makes the
/// face normal point outward for a positively oriented tetrahedron.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

/// Triangular face with up to two owning tetrahedra.
#[derive(Debug, Clone)]
pub struct Face {
    /// Vertex indices, wound outward for `owners[0]`.
    pub verts: [usize; 3],
    /// Owning tetrahedra; `owners[1]` is `None` on the boundary.
    pub owners: [Option<usize>; 2],
    /// Local face index within each owner.
    pub local: [u8; 2],
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.owners[1].is_none()
    }
}

/// Affine frame mapping a world point to the last three barycentric weights.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TetFrame {
    pub origin: Vec3,
    pub inv: Matrix3<f64>,
}

impl TetFrame {
    pub fn bary(&self, p: &Vec3) -> Bary4 {
        let l = self.inv * (p - self.origin);
        Bary4([1.0 - l.x - l.y - l.z, l.x, l.y, l.z])
    }

    /// Barycentric derivative along a direction.
    pub fn bary_rate(&self, d: &Vec3) -> [f64; 4] {
        let l = self.inv * d;
        [-l.x - l.y - l.z, l.x, l.y, l.z]
    }
}

/// Tetrahedral proxy mesh.
///
/// Immutable once built; deformation produces a new mesh with the same
/// connectivity (see [`TetMesh::with_vertices`]).
#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    faces: Vec<Face>,
    tet_faces: Vec<[usize; 4]>,
    pub(crate) frames: Vec<TetFrame>,
    pub(crate) tet_boxes: Vec<Aabb>,
    overlapping: Vec<bool>,
    bounds: Aabb,
    pub(crate) face_grid: UniformGrid,
    pub(crate) tet_grid: UniformGrid,
}

impl PartialEq for TetMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices() == other.vertices() && self.tets() == other.tets()
    }
}

fn signed_volume(v: &[Vec3], t: &[usize; 4]) -> f64 {
    let a = v[t[1]] - v[t[0]];
    let b = v[t[2]] - v[t[0]];
    let c = v[t[3]] - v[t[0]];
    a.dot(&b.cross(&c)) / 6.0
}

impl TetMesh {
    /// Builds a mesh, flipping negatively wound tetrahedra to positive
    /// volume and computing face adjacency. Overlapping tetrahedra are
    /// allowed and flagged.
    pub fn build(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>) -> Result<Self, GeometryError> {
        check_input(&vertices, &tets)?;
        let bounds = Aabb::from_points(&vertices);
        let scale = bounds.diagonal();
        let tol = DEGENERATE_VOLUME_TOL * scale.powi(3);
        for (i, t) in tets.iter_mut().enumerate() {
            let vol = signed_volume(&vertices, t);
            if vol.abs() <= tol || !vol.is_finite() {
                return Err(GeometryError::Degenerate { tet: i, volume: vol });
            }
            if vol < 0.0 {
                t.swap(2, 3);
            }
        }
        Self::assemble(vertices, tets, bounds)
    }

    /// Same connectivity, new vertex positions. Windings are kept as stored,
    /// so barycentric coordinates keep their meaning; inverted or collapsed
    /// tetrahedra are rejected.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self, GeometryError> {
        if vertices.len() != self.vertices.len() {
            return Err(GeometryError::VertexCountMismatch {
                expected: self.vertices.len(),
                got: vertices.len(),
            });
        }
        if vertices.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
            return Err(GeometryError::NonFinite);
        }
        let bounds = Aabb::from_points(&vertices);
        let tol = DEGENERATE_VOLUME_TOL * bounds.diagonal().powi(3);
        let mut inverted = Vec::new();
        for (i, t) in self.tets.iter().enumerate() {
            let vol = signed_volume(&vertices, t);
            if vol <= tol {
                inverted.push(i);
            } else if vol <= 1e3 * tol {
                log::warn!("tet {i} is nearly degenerate after deformation (volume {vol:e})");
            }
        }
        if !inverted.is_empty() {
            return Err(GeometryError::Inverted { tets: inverted });
        }
        Self::assemble(vertices, self.tets.clone(), bounds)
    }

    fn assemble(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>, bounds: Aabb) -> Result<Self, GeometryError> {
        let mut frames = Vec::with_capacity(tets.len());
        for (i, t) in tets.iter().enumerate() {
            let o = vertices[t[0]];
            let m = Matrix3::from_columns(&[vertices[t[1]] - o, vertices[t[2]] - o, vertices[t[3]] - o]);
            let inv = m.try_inverse().ok_or(GeometryError::Degenerate {
                tet: i,
                volume: signed_volume(&vertices, t),
            })?;
            frames.push(TetFrame { origin: o, inv });
        }

        let (faces, tet_faces) = build_faces(&tets)?;

        let pad = 1e-9 * bounds.diagonal().max(1e-300);
        let padded = |mut b: Aabb| {
            b.min.add_scalar_mut(-pad);
            b.max.add_scalar_mut(pad);
            b
        };
        let tet_boxes: Vec<Aabb> = tets
            .iter()
            .map(|t| padded(Aabb::from_points(t.iter().map(|&i| &vertices[i]))))
            .collect();
        let face_boxes: Vec<Aabb> = faces
            .iter()
            .map(|f| padded(Aabb::from_points(f.verts.iter().map(|&i| &vertices[i]))))
            .collect();
        let grid_bounds = padded(bounds);
        let res = ((tets.len() as f64).cbrt() * 1.5).ceil() as usize;
        let face_grid = UniformGrid::build(grid_bounds, &face_boxes, res);
        let tet_grid = UniformGrid::build(grid_bounds, &tet_boxes, res);

        let mut mesh = TetMesh {
            vertices,
            tets,
            faces,
            tet_faces,
            frames,
            tet_boxes,
            overlapping: Vec::new(),
            bounds,
            face_grid,
            tet_grid,
        };
        mesh.overlapping = mesh.detect_overlaps();
        Ok(mesh)
    }

    fn detect_overlaps(&self) -> Vec<bool> {
        let mut flags = vec![false; self.tets.len()];
        let tol = 1e-9 * self.bounds.diagonal();
        let ncell = self.tet_grid.dims.iter().product::<usize>();
        let mut checked = std::collections::HashSet::new();
        for c in 0..ncell {
            let items = self.tet_grid.items(c);
            for (k, &a) in items.iter().enumerate() {
                for &b in &items[k + 1..] {
                    let (a, b) = (a.min(b) as usize, a.max(b) as usize);
                    if !self.tet_boxes[a].overlaps(&self.tet_boxes[b]) || !checked.insert((a, b)) {
                        continue;
                    }
                    if tets_overlap(&self.tet_vertices(a), &self.tet_vertices(b), tol) {
                        flags[a] = true;
                        flags[b] = true;
                    }
                }
            }
        }
        flags
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }

    /// Face ids of a tetrahedron, indexed by local face (opposite vertex).
    pub fn tet_faces(&self, tet: usize) -> [usize; 4] {
        self.tet_faces[tet]
    }

    /// Neighbour across local face `local` of `tet`, if any.
    pub fn neighbor(&self, tet: usize, local: usize) -> Option<usize> {
        let f = &self.faces[self.tet_faces[tet][local]];
        f.owners.into_iter().flatten().find(|&o| o != tet)
    }

    pub fn tet_vertices(&self, tet: usize) -> [Vec3; 4] {
        let t = &self.tets[tet];
        [
            self.vertices[t[0]],
            self.vertices[t[1]],
            self.vertices[t[2]],
            self.vertices[t[3]],
        ]
    }

    pub fn volume(&self, tet: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[tet])
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn is_overlapping(&self, tet: usize) -> bool {
        self.overlapping[tet]
    }

    pub fn has_overlaps(&self) -> bool {
        self.overlapping.iter().any(|&f| f)
    }

    /// Barycentric coordinates of `p` in `tet`. Weights are negative when
    /// `p` lies outside.
    pub fn barycentric_of_point(&self, tet: usize, p: &Vec3) -> Result<Bary4, GeometryError> {
        let frame = self.frames.get(tet).ok_or(GeometryError::TetOutOfRange { tet })?;
        Ok(frame.bary(p))
    }

    /// `p = sum_i lambda_i v_i`.
    pub fn point_from_barycentric(&self, tet: usize, bary: &Bary4) -> Result<Vec3, GeometryError> {
        let t = self.tets.get(tet).ok_or(GeometryError::TetOutOfRange { tet })?;
        Ok(t.iter()
            .zip(bary.0.iter())
            .fold(Vec3::zeros(), |acc, (&i, &l)| acc + self.vertices[i] * l))
    }
}

fn check_input(vertices: &[Vec3], tets: &[[usize; 4]]) -> Result<(), GeometryError> {
    if tets.is_empty() {
        return Err(GeometryError::Empty);
    }
    if vertices.iter().any(|v| !v.iter().all(|x| x.is_finite())) {
        return Err(GeometryError::NonFinite);
    }
    for (i, t) in tets.iter().enumerate() {
        for &v in t {
            if v >= vertices.len() {
                return Err(GeometryError::IndexOutOfRange {
                    tet: i,
                    index: v,
                    num_vertices: vertices.len(),
                });
            }
        }
    }
    Ok(())
}

type FaceTables = (Vec<Face>, Vec<[usize; 4]>);

fn build_faces(tets: &[[usize; 4]]) -> Result<FaceTables, GeometryError> {
    let mut lookup: HashMap<[usize; 3], usize> = HashMap::with_capacity(tets.len() * 2);
    let mut faces: Vec<Face> = Vec::new();
    let mut tet_faces = vec![[0usize; 4]; tets.len()];
    for (ti, t) in tets.iter().enumerate() {
        for (lf, lv) in LOCAL_FACES.iter().enumerate() {
            let verts = [t[lv[0]], t[lv[1]], t[lv[2]]];
            let mut key = verts;
            key.sort_unstable();
            let id = match lookup.get(&key) {
                Some(&id) => {
                    let face = &mut faces[id];
                    if face.owners[1].is_some() {
                        return Err(GeometryError::NonManifoldFace { verts: key });
                    }
                    face.owners[1] = Some(ti);
                    face.local[1] = lf as u8;
                    id
                }
                None => {
                    faces.push(Face {
                        verts,
                        owners: [Some(ti), None],
                        local: [lf as u8, u8::MAX],
                    });
                    lookup.insert(key, faces.len() - 1);
                    faces.len() - 1
                }
            };
            tet_faces[ti][lf] = id;
        }
    }
    Ok((faces, tet_faces))
}
