use std::ops::Index;

/// Four barycentric weights of a point with respect to a tetrahedron.
///
/// Values produced by the sampler and traversal are convex (non-negative,
/// summing to one). [`Bary4::raw`] allows arbitrary weights, which is what a
/// point outside the tetrahedron yields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bary4(pub [f64; 4]);

impl Bary4 {
    pub const CENTROID: Bary4 = Bary4([0.25; 4]);

    pub fn raw(lambda: [f64; 4]) -> Self {
        Bary4(lambda)
    }

    /// Unit weight on vertex `i`.
    pub fn vertex(i: usize) -> Self {
        let mut l = [0.0; 4];
        l[i] = 1.0;
        Bary4(l)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Convex within `tol`: every weight is at least `-tol` and the sum is
    /// within `tol` of one.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.min() >= -tol && (self.sum() - 1.0).abs() <= tol
    }

    /// Forward interpolation `(1 - alpha) * self + alpha * other`.
    pub fn lerp(&self, other: &Bary4, alpha: f64) -> Bary4 {
        let a = &self.0;
        let b = &other.0;
        let s = 1.0 - alpha;
        Bary4([
            s * a[0] + alpha * b[0],
            s * a[1] + alpha * b[1],
            s * a[2] + alpha * b[2],
            s * a[3] + alpha * b[3],
        ])
    }

    pub fn l1_distance(&self, other: &Bary4) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Clamp small negative weights to zero and renormalise.
    pub(crate) fn clean(mut self) -> Bary4 {
        for v in &mut self.0 {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let s = self.sum();
        if s > 0.0 {
            for v in &mut self.0 {
                *v /= s;
            }
        }
        self
    }
}

impl Index<usize> for Bary4 {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
