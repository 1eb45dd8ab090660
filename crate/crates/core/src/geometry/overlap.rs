use super::mesh::LOCAL_FACES;
use super::Vec3;

const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

fn project(verts: &[Vec3; 4], axis: &Vec3) -> (f64, f64) {
    verts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        let d = v.dot(axis);
        (lo.min(d), hi.max(d))
    })
}

fn separated_along(a: &[Vec3; 4], b: &[Vec3; 4], axis: &Vec3, tol: f64) -> bool {
    let n = axis.norm();
    if n < 1e-14 {
        return false;
    }
    let (alo, ahi) = project(a, axis);
    let (blo, bhi) = project(b, axis);
    ahi <= blo + tol * n || bhi <= alo + tol * n
}

/// Separating-axis test for two tetrahedra. Tetrahedra that merely touch
/// (shared face, edge or vertex, or any contact within `tol`) do not count
/// as overlapping.
pub fn tets_overlap(a: &[Vec3; 4], b: &[Vec3; 4], tol: f64) -> bool {
    for t in [a, b] {
        for f in LOCAL_FACES {
            let n = (t[f[1]] - t[f[0]]).cross(&(t[f[2]] - t[f[0]]));
            if separated_along(a, b, &n, tol) {
                return false;
            }
        }
    }
    for (i, j) in EDGES {
        let ea = a[j] - a[i];
        for (k, l) in EDGES {
            let eb = b[l] - b[k];
            if separated_along(a, b, &ea.cross(&eb), tol) {
                return false;
            }
        }
    }
    true
}
