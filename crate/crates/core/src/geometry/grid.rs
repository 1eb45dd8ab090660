use super::Vec3;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in pts {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] - tol && p[k] <= self.max[k] + tol)
    }

    pub fn overlaps(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] && other.min[k] <= self.max[k])
    }

    /// Parametric interval where `origin + t * dir` lies inside the box.
    pub fn clip_ray(&self, origin: &Vec3, dir: &Vec3, t0: f64, t1: f64) -> Option<(f64, f64)> {
        let mut lo = t0;
        let mut hi = t1;
        for k in 0..3 {
            if dir[k].abs() < 1e-300 {
                if origin[k] < self.min[k] || origin[k] > self.max[k] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[k];
            let mut a = (self.min[k] - origin[k]) * inv;
            let mut b = (self.max[k] - origin[k]) * inv;
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            lo = lo.max(a);
            hi = hi.min(b);
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }
}

/// Uniform grid over a bounding box with per-cell item lists stored
/// contiguously (offsets + items).
#[derive(Debug, Clone)]
pub struct UniformGrid {
    pub bounds: Aabb,
    pub dims: [usize; 3],
    cell_size: Vec3,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl UniformGrid {
    /// Builds the grid from item bounding boxes. `target` is the desired
    /// number of cells along each axis.
    pub fn build(bounds: Aabb, boxes: &[Aabb], target: usize) -> Self {
        let n = target.clamp(1, 64);
        let dims = [n, n, n];
        let extent = bounds.max - bounds.min;
        let cell_size = Vec3::new(
            (extent.x / n as f64).max(1e-300),
            (extent.y / n as f64).max(1e-300),
            (extent.z / n as f64).max(1e-300),
        );
        let mut grid = UniformGrid {
            bounds,
            dims,
            cell_size,
            offsets: Vec::new(),
            items: Vec::new(),
        };
        let ncell = n * n * n;
        let mut counts = vec![0u32; ncell + 1];
        for b in boxes {
            grid.for_each_cell_in(b, |c| counts[c] += 1);
        }
        let mut offsets = vec![0u32; ncell + 1];
        for c in 0..ncell {
            offsets[c + 1] = offsets[c] + counts[c];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0u32; offsets[ncell] as usize];
        for (i, b) in boxes.iter().enumerate() {
            grid.for_each_cell_in(b, |c| {
                items[fill[c] as usize] = i as u32;
                fill[c] += 1;
            });
        }
        grid.offsets = offsets;
        grid.items = items;
        grid
    }

    fn axis_cell(&self, k: usize, x: f64) -> usize {
        let f = ((x - self.bounds.min[k]) / self.cell_size[k]).floor();
        if f <= 0.0 {
            0
        } else {
            (f as usize).min(self.dims[k] - 1)
        }
    }

    pub fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        [
            self.axis_cell(0, p.x),
            self.axis_cell(1, p.y),
            self.axis_cell(2, p.z),
        ]
    }

    pub fn linear(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    fn for_each_cell_in(&self, b: &Aabb, mut f: impl FnMut(usize)) {
        let lo = self.cell_of(&b.min);
        let hi = self.cell_of(&b.max);
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    f(self.linear([x, y, z]));
                }
            }
        }
    }

    pub fn items(&self, cell: usize) -> &[u32] {
        &self.items[self.offsets[cell] as usize..self.offsets[cell + 1] as usize]
    }

    /// Upper x coordinate of cell column `ix`.
    pub fn cell_max_x(&self, ix: usize) -> f64 {
        self.bounds.min.x + (ix + 1) as f64 * self.cell_size.x
    }

    /// Visits the cells pierced by the ray segment `[t0, t1]` in order
    /// (3D DDA). The callback returns `false` to stop early.
    pub fn walk_ray(&self, origin: &Vec3, dir: &Vec3, t0: f64, t1: f64, mut f: impl FnMut(usize) -> bool) {
        let Some((lo, hi)) = self.bounds.clip_ray(origin, dir, t0, t1) else {
            return;
        };
        let start = origin + dir * lo;
        let mut cell = self.cell_of(&start);
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for k in 0..3 {
            if dir[k] > 0.0 {
                step[k] = 1;
                let edge = self.bounds.min[k] + (cell[k] + 1) as f64 * self.cell_size[k];
                t_max[k] = lo + (edge - start[k]) / dir[k];
                t_delta[k] = self.cell_size[k] / dir[k];
            } else if dir[k] < 0.0 {
                step[k] = -1;
                let edge = self.bounds.min[k] + cell[k] as f64 * self.cell_size[k];
                t_max[k] = lo + (edge - start[k]) / dir[k];
                t_delta[k] = -self.cell_size[k] / dir[k];
            }
        }
        loop {
            if !f(self.linear(cell)) {
                return;
            }
            let k = if t_max[0] < t_max[1] {
                if t_max[0] < t_max[2] {
                    0
                } else {
                    2
                }
            } else if t_max[1] < t_max[2] {
                1
            } else {
                2
            };
            if t_max[k] > hi {
                return;
            }
            let next = cell[k] as i64 + step[k];
            if next < 0 || next >= self.dims[k] as i64 {
                return;
            }
            cell[k] = next as usize;
            t_max[k] += t_delta[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> Aabb {
        Aabb {
            min: Vec3::zeros(),
            max: Vec3::repeat(1.0),
        }
    }

    #[test]
    fn clip_ray_through_box() {
        let b = unit_box();
        let (lo, hi) = b
            .clip_ray(&Vec3::new(-1.0, 0.5, 0.5), &Vec3::x(), 0.0, f64::INFINITY)
            .unwrap();
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
        assert!(b
            .clip_ray(&Vec3::new(-1.0, 2.0, 0.5), &Vec3::x(), 0.0, f64::INFINITY)
            .is_none());
    }

    #[test]
    fn every_box_is_listed_in_its_cells() {
        let boxes = vec![
            Aabb { min: Vec3::repeat(0.1), max: Vec3::repeat(0.2) },
            Aabb { min: Vec3::repeat(0.0), max: Vec3::repeat(1.0) },
        ];
        let g = UniformGrid::build(unit_box(), &boxes, 4);
        let c = g.linear(g.cell_of(&Vec3::repeat(0.15)));
        assert_eq!(g.items(c), &[0, 1]);
        let c = g.linear(g.cell_of(&Vec3::repeat(0.9)));
        assert_eq!(g.items(c), &[1]);
    }

    #[test]
    fn dda_visits_diagonal_cells() {
        let g = UniformGrid::build(unit_box(), &[], 4);
        let mut seen = Vec::new();
        let d = Vec3::new(1.0, 1.0, 1.0).normalize();
        g.walk_ray(&Vec3::repeat(-0.5), &d, 0.0, f64::INFINITY, |c| {
            seen.push(c);
            true
        });
        assert_eq!(seen.first(), Some(&g.linear([0, 0, 0])));
        assert_eq!(seen.last(), Some(&g.linear([3, 3, 3])));
        assert!(seen.contains(&g.linear([2, 2, 2])));
    }
}
