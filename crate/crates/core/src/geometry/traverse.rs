use super::{Bary4, Ray, TetMesh, TetSegment};

/// Crossings shorter than this (world units) are dropped.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

impl TetMesh {
    /// All tetrahedron crossings of `ray` within `[t_min, t_max]`, sorted by
    /// entry parameter (ties by tetrahedron index).
    ///
    /// Face-adjacent tetrahedra chain exit to entry, gaps between separated
    /// tetrahedra are skipped, and overlapping tetrahedra each contribute
    /// their own segment over the shared span.
    pub fn intersect_ray(&self, ray: &Ray, t_min: f64, t_max: f64) -> Vec<TetSegment> {
        let mut candidates: Vec<u32> = Vec::new();
        self.tet_grid.walk_ray(&ray.origin, &ray.dir, t_min, t_max, |cell| {
            candidates.extend_from_slice(self.tet_grid.items(cell));
            true
        });
        candidates.sort_unstable();
        candidates.dedup();

        let mut segments: Vec<TetSegment> = candidates
            .into_iter()
            .filter_map(|t| self.clip_ray(t as usize, ray, t_min, t_max))
            .collect();
        segments.sort_by(|a, b| a.t_in.total_cmp(&b.t_in).then(a.tet.cmp(&b.tet)));
        segments
    }

    /// Crossing of `ray` with a single tetrahedron. Barycentric weights are
    /// linear in the ray parameter, so each face `lambda_i = 0` gives one
    /// bound on `t`.
    pub fn clip_ray(&self, tet: usize, ray: &Ray, t_min: f64, t_max: f64) -> Option<TetSegment> {
        let frame = &self.frames[tet];
        let a = frame.bary(&ray.origin);
        let b = frame.bary_rate(&ray.dir);
        let mut lo = t_min;
        let mut hi = t_max;
        let mut enter = None;
        let mut exit = None;
        for i in 0..4 {
            if b[i] > 0.0 {
                let t = -a[i] / b[i];
                if t > lo {
                    lo = t;
                    enter = Some(i);
                }
            } else if b[i] < 0.0 {
                let t = -a[i] / b[i];
                if t < hi {
                    hi = t;
                    exit = Some(i);
                }
            } else if a[i] < 0.0 {
                return None;
            }
        }
        if !(hi - lo >= MIN_SEGMENT_LENGTH) || !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        let at = |t: f64, face: Option<usize>| {
            let mut l = [0.0; 4];
            for i in 0..4 {
                l[i] = a[i] + b[i] * t;
            }
            if let Some(f) = face {
                l[f] = 0.0;
            }
            Bary4(l).clean()
        };
        Some(TetSegment {
            tet,
            t_in: lo,
            t_out: hi,
            bary_in: at(lo, enter),
            bary_out: at(hi, exit),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn unit_tet() -> TetMesh {
        TetMesh::build(vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()], vec![[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn axis_ray_through_unit_tet() {
        let m = unit_tet();
        let ray = Ray::new(Vec3::new(-1.0, 0.1, 0.1), Vec3::x()).unwrap();
        let segs = m.intersect_ray(&ray, 0.0, f64::INFINITY);
        assert_eq!(segs.len(), 1);
        let s = &segs[0];
        assert!((s.t_in - 1.0).abs() < 1e-12);
        assert!((s.t_out - 1.8).abs() < 1e-12);
        let (bi, bo) = ([0.8, 0.0, 0.1, 0.1], [0.0, 0.8, 0.1, 0.1]);
        for k in 0..4 {
            assert!((s.bary_in[k] - bi[k]).abs() < 1e-12);
            assert!((s.bary_out[k] - bo[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn miss_is_empty() {
        let m = unit_tet();
        let ray = Ray::new(Vec3::new(-1.0, 2.0, 0.1), Vec3::x()).unwrap();
        assert!(m.intersect_ray(&ray, 0.0, f64::INFINITY).is_empty());
        let ray = Ray::new(Vec3::new(-1.0, 0.1, 0.1), -Vec3::x()).unwrap();
        assert!(m.intersect_ray(&ray, 0.0, f64::INFINITY).is_empty());
    }

    #[test]
    fn adjacent_tets_chain_exit_to_entry() {
        let m = TetMesh::build(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z(), Vec3::repeat(1.0)],
            vec![[0, 1, 2, 3], [1, 2, 3, 4]],
        )
        .unwrap();
        let ray = Ray::new(Vec3::new(-1.0, 0.2, 0.3), Vec3::x()).unwrap();
        let segs = m.intersect_ray(&ray, 0.0, f64::INFINITY);
        assert_eq!(segs.len(), 2);
        assert!((segs[0].t_out - segs[1].t_in).abs() < 1e-12);
    }

    #[test]
    fn ray_starting_inside() {
        let m = unit_tet();
        let ray = Ray::new(Vec3::repeat(0.1), Vec3::x()).unwrap();
        let segs = m.intersect_ray(&ray, 0.0, f64::INFINITY);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].t_in, 0.0);
        assert!((segs[0].bary_in[1] - 0.1).abs() < 1e-12);
    }
}
