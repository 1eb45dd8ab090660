//! Point location by winding order.
//!
//! A ray is cast from the query point along +x; the first face it hits
//! decides the answer. The point lies inside the owner for which the face's
//! outward normal points away from it, or outside the mesh if that side is
//! the boundary. Ambiguous hits (edges, coplanar faces, points on a face)
//! and shared-face ties fall back to a scan of the candidate tetrahedra.

use super::{Bary4, TetMesh, Vec3};

/// Containment slack on barycentric weights.
pub const INSIDE_TOL: f64 = 1e-12;
/// Points closer than this (in barycentric units) to a face take the
/// lowest-index tie-break path.
const BOUNDARY_TOL: f64 = 1e-10;
/// Hits closer than this to a triangle edge are treated as ambiguous.
const EDGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Verdict {
    Inside(usize),
    Outside,
    Ambiguous,
}

struct Hit {
    t: f64,
    verdict: Verdict,
    near_edge: bool,
}

impl TetMesh {
    /// Barycentric weights of `p` in `tet` when `p` lies inside (within
    /// [`INSIDE_TOL`]).
    pub fn contains(&self, tet: usize, p: &Vec3) -> Option<Bary4> {
        let b = self.frames[tet].bary(p);
        (b.min() >= -INSIDE_TOL).then_some(b)
    }

    /// Containing tetrahedron and barycentric weights, or `None` outside the
    /// mesh. Points shared by several tetrahedra resolve to the lowest index.
    pub fn locate_point(&self, p: &Vec3) -> Option<(usize, Bary4)> {
        let pad = 1e-9 * self.bounds().diagonal();
        if !self.bounds().contains(p, pad) {
            return None;
        }
        let mut best = match self.winding_query(p) {
            Verdict::Inside(t) => match self.contains(t, p) {
                Some(b) if b.min() > BOUNDARY_TOL => Some((t, b)),
                _ => return self.locate_scan(p),
            },
            Verdict::Outside => None,
            Verdict::Ambiguous => return self.locate_scan(p),
        };
        if self.has_overlaps() {
            let cell = self.tet_grid.linear(self.tet_grid.cell_of(p));
            for &t in self.tet_grid.items(cell) {
                let t = t as usize;
                if !self.is_overlapping(t) || best.is_some_and(|(b, _)| b <= t) {
                    continue;
                }
                if let Some(b) = self.contains(t, p) {
                    best = Some((t, b));
                }
            }
        }
        best
    }

    /// Lowest-index tetrahedron containing `p` among the grid candidates.
    pub(crate) fn locate_scan(&self, p: &Vec3) -> Option<(usize, Bary4)> {
        let cell = self.tet_grid.linear(self.tet_grid.cell_of(p));
        let mut best: Option<(usize, Bary4)> = None;
        for &t in self.tet_grid.items(cell) {
            let t = t as usize;
            if best.is_some_and(|(b, _)| b <= t) {
                continue;
            }
            if let Some(b) = self.contains(t, p) {
                best = Some((t, b));
            }
        }
        best
    }

    fn winding_query(&self, p: &Vec3) -> Verdict {
        let grid = &self.face_grid;
        let [cx, cy, cz] = grid.cell_of(p);
        let mut hits: Vec<Hit> = Vec::new();
        let mut best_t = f64::INFINITY;
        for ix in cx..grid.dims[0] {
            for &f in grid.items(grid.linear([ix, cy, cz])) {
                if let Some(hit) = self.face_hit(f as usize, p) {
                    best_t = best_t.min(hit.t);
                    hits.push(hit);
                }
            }
            if p.x + best_t <= grid.cell_max_x(ix) {
                break;
            }
        }
        if hits.is_empty() {
            return Verdict::Outside;
        }
        let tol = 1e-12 * self.bounds().diagonal();
        let mut verdict = None;
        for h in hits.iter().filter(|h| h.t <= best_t + tol) {
            if h.near_edge || h.verdict == Verdict::Ambiguous {
                return Verdict::Ambiguous;
            }
            match verdict {
                None => verdict = Some(h.verdict),
                Some(v) if v != h.verdict => return Verdict::Ambiguous,
                _ => {}
            }
        }
        verdict.unwrap_or(Verdict::Ambiguous)
    }

    /// Intersection of the +x ray from `p` with face `f`.
    fn face_hit(&self, f: usize, p: &Vec3) -> Option<Hit> {
        let face = &self.faces()[f];
        let v = self.vertices();
        let (a, b, c) = (v[face.verts[0]], v[face.verts[1]], v[face.verts[2]]);
        let e1 = b - a;
        let e2 = c - a;
        // Moller-Trumbore with direction +x.
        let pvec = Vec3::new(0.0, -e2.z, e2.y);
        let det = e1.dot(&pvec);
        if det.abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / det;
        let s = p - a;
        let u = s.dot(&pvec) * inv;
        if !(-EDGE_TOL..=1.0 + EDGE_TOL).contains(&u) {
            return None;
        }
        let q = s.cross(&e1);
        let w = q.x * inv;
        if w < -EDGE_TOL || u + w > 1.0 + EDGE_TOL {
            return None;
        }
        let t = e2.dot(&q) * inv;
        let scale = self.bounds().diagonal();
        if t < -1e-12 * scale {
            return None;
        }
        let near_edge = u < EDGE_TOL || w < EDGE_TOL || u + w > 1.0 - EDGE_TOL;
        let n = e1.cross(&e2);
        let side = s.dot(&n);
        let verdict = if side.abs() <= 1e-14 * n.norm() * scale || t <= 1e-12 * scale {
            Verdict::Ambiguous
        } else if side < 0.0 {
            Verdict::Inside(face.owners[0].expect("face has an owner"))
        } else {
            match face.owners[1] {
                Some(o) => Verdict::Inside(o),
                None => Verdict::Outside,
            }
        };
        Some(Hit { t, verdict, near_edge })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tet() -> TetMesh {
        TetMesh::build(vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()], vec![[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn far_point_is_outside() {
        assert!(unit_tet().locate_point(&Vec3::repeat(10.0)).is_none());
        assert!(unit_tet().locate_point(&Vec3::new(0.6, 0.6, 0.6)).is_none());
    }

    #[test]
    fn interior_point() {
        let (t, b) = unit_tet().locate_point(&Vec3::repeat(0.1)).unwrap();
        assert_eq!(t, 0);
        let want = [0.7, 0.1, 0.1, 0.1];
        for k in 0..4 {
            assert!((b[k] - want[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn shared_face_resolves_to_lowest_index() {
        let m = TetMesh::build(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z(), Vec3::repeat(1.0)],
            vec![[1, 2, 3, 4], [0, 1, 2, 3]],
        )
        .unwrap();
        // On the shared face x + y + z = 1.
        let p = Vec3::new(0.2, 0.3, 0.5);
        assert_eq!(m.locate_point(&p).unwrap().0, 0);
        assert_eq!(m.locate_point(&Vec3::repeat(0.1)).unwrap().0, 1);
        assert_eq!(m.locate_point(&Vec3::repeat(0.5)).unwrap().0, 0);
    }

    #[test]
    fn overlap_returns_lowest_index() {
        let mut v = vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()];
        v.extend(v.clone().iter().map(|p| p + Vec3::repeat(0.1)));
        let m = TetMesh::build(v, vec![[4, 5, 6, 7], [0, 1, 2, 3]]).unwrap();
        assert_eq!(m.locate_point(&Vec3::repeat(0.2)).unwrap().0, 0);
        assert_eq!(m.locate_point(&Vec3::new(0.05, 0.05, 0.05)).unwrap().0, 1);
    }
}
