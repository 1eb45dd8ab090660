use rand::Rng;

use super::layout::PRIMES;
use super::HashLayout;
use crate::geometry::Bary4;

/// Half-width of the uniform initialisation range.
pub const INIT_RANGE: f64 = 1e-4;

/// Trainable corner features for every tetrahedron, `features` values per
/// slot, slots laid out as described by a [`HashLayout`].
///
/// Gradient accumulators are plain vectors of the same length (see
/// [`FeatureTable::zeros_like`]) so that each worker can own one.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub values: Vec<f64>,
    pub features: usize,
}

/// Concatenated per-level position features.
#[derive(Debug, Clone, PartialEq)]
pub struct PosFeature(pub Vec<f64>);

impl FeatureTable {
    pub fn zeros(layout: &HashLayout) -> Self {
        FeatureTable {
            values: vec![0.0; layout.total_slots() * layout.features],
            features: layout.features,
        }
    }

    /// Every slot holds `value`.
    pub fn constant(layout: &HashLayout, value: &[f64]) -> Self {
        assert_eq!(value.len(), layout.features);
        let mut t = Self::zeros(layout);
        for chunk in t.values.chunks_exact_mut(layout.features) {
            chunk.copy_from_slice(value);
        }
        t
    }

    /// Uniform values in `[-1e-4, 1e-4]`.
    pub fn random(layout: &HashLayout, rng: &mut impl Rng) -> Self {
        let mut t = Self::zeros(layout);
        for v in &mut t.values {
            *v = rng.gen_range(-INIT_RANGE..=INIT_RANGE);
        }
        t
    }

    pub fn zeros_like(&self) -> Vec<f64> {
        vec![0.0; self.values.len()]
    }

    pub fn slot(&self, slot: usize) -> &[f64] {
        &self.values[slot * self.features..(slot + 1) * self.features]
    }

    pub fn slot_mut(&mut self, slot: usize) -> &mut [f64] {
        &mut self.values[slot * self.features..(slot + 1) * self.features]
    }

    /// Values owned by one tetrahedron.
    pub fn tet_range(&self, layout: &HashLayout, tet: usize) -> std::ops::Range<usize> {
        let n = layout.slots_per_tet() * self.features;
        tet * n..(tet + 1) * n
    }
}

/// Grid cell and fractional offsets of `bary` at resolution `res`.
#[inline]
fn cell(res: u32, bary: &Bary4) -> ([u32; 4], [f64; 4]) {
    let r = res as f64;
    let mut base = [0u32; 4];
    let mut frac = [0.0; 4];
    for i in 0..4 {
        let u = bary.0[i].clamp(0.0, 1.0) * r;
        let c = (u.floor() as u32).min(res - 1);
        base[i] = c;
        frac[i] = u - c as f64;
    }
    (base, frac)
}

/// Visits the 16 corners of the voxel holding `bary` at `level`, passing the
/// slot and the interpolation weight. Zero-weight corners are skipped.
#[inline]
fn for_corners(layout: &HashLayout, tet: usize, level: usize, bary: &Bary4, mut f: impl FnMut(usize, f64)) {
    let res = layout.resolutions[level];
    let (base, frac) = cell(res, bary);
    let start = tet * layout.slots_per_tet() + level * layout.slots_per_level();
    let n = layout.slots_per_level() as u64;
    let dense = layout.is_dense(level);
    let side = res as u64 + 1;
    let mut key = [[0u64; 2]; 4];
    let mut weight = [[0.0; 2]; 4];
    let mut stride = 1u64;
    for i in 0..4 {
        for b in 0..2 {
            let c = (base[i] + b as u32) as u64;
            key[i][b] = if dense { c * stride } else { c.wrapping_mul(PRIMES[i]) };
        }
        stride *= side;
        weight[i] = [1.0 - frac[i], frac[i]];
    }
    for corner in 0..16usize {
        let bit = |i: usize| corner >> i & 1;
        let w = weight[0][bit(0)] * weight[1][bit(1)] * weight[2][bit(2)] * weight[3][bit(3)];
        if w == 0.0 {
            continue;
        }
        let local = if dense {
            key[0][bit(0)] + key[1][bit(1)] + key[2][bit(2)] + key[3][bit(3)]
        } else {
            (key[0][bit(0)] ^ key[1][bit(1)] ^ key[2][bit(2)] ^ key[3][bit(3)]) % n
        };
        f(start + local as usize, w);
    }
}

/// Quadrilinear lookup at every level, written to `out` (`levels * features`).
pub fn encode_position_into(layout: &HashLayout, table: &FeatureTable, tet: usize, bary: &Bary4, out: &mut [f64]) {
    let nf = layout.features;
    out[..layout.output_dim()].fill(0.0);
    for level in 0..layout.levels {
        let dst = &mut out[level * nf..(level + 1) * nf];
        for_corners(layout, tet, level, bary, |slot, w| {
            let src = &table.values[slot * nf..(slot + 1) * nf];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        });
    }
}

pub fn encode_position(layout: &HashLayout, table: &FeatureTable, tet: usize, bary: &Bary4) -> PosFeature {
    let mut out = vec![0.0; layout.output_dim()];
    encode_position_into(layout, table, tet, bary, &mut out);
    PosFeature(out)
}

/// Scatters `upstream` (one value per output feature) to the corner slots
/// of `grad` with the forward interpolation weights.
pub fn encode_position_backward(layout: &HashLayout, tet: usize, bary: &Bary4, upstream: &[f64], grad: &mut [f64]) {
    let nf = layout.features;
    for level in 0..layout.levels {
        let up = &upstream[level * nf..(level + 1) * nf];
        if up.iter().all(|&g| g == 0.0) {
            continue;
        }
        for_corners(layout, tet, level, bary, |slot, w| {
            for (g, u) in grad[slot * nf..(slot + 1) * nf].iter_mut().zip(up) {
                *g += w * u;
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layout() -> HashLayout {
        HashLayout::new(3, 12, 4, 2).unwrap()
    }

    fn random_bary(rng: &mut ChaCha8Rng) -> Bary4 {
        let mut u: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
        u.sort_by(f64::total_cmp);
        Bary4([u[0], u[1] - u[0], u[2] - u[1], 1.0 - u[2]])
    }

    /// Independent lookup: enumerate corners as 4 nested binary choices.
    fn oracle(layout: &HashLayout, table: &FeatureTable, tet: usize, bary: &Bary4) -> Vec<f64> {
        let mut out = Vec::new();
        for level in 0..layout.levels {
            let res = layout.resolutions[level];
            let pos: Vec<f64> = (0..4).map(|i| bary[i] * res as f64).collect();
            let lo: Vec<u32> = pos.iter().map(|&p| (p.floor() as u32).min(res - 1)).collect();
            let mut acc = vec![0.0; layout.features];
            for a in 0..2u32 {
                for b in 0..2u32 {
                    for c in 0..2u32 {
                        for d in 0..2u32 {
                            let bits = [a, b, c, d];
                            let mut w = 1.0;
                            let mut corner = [0u32; 4];
                            for i in 0..4 {
                                let t = pos[i] - lo[i] as f64;
                                w *= if bits[i] == 1 { t } else { 1.0 - t };
                                corner[i] = lo[i] + bits[i];
                            }
                            let s = layout.slot(tet, level, corner);
                            for f in 0..layout.features {
                                acc[f] += w * table.values[s * layout.features + f];
                            }
                        }
                    }
                }
            }
            out.extend(acc);
        }
        out
    }

    #[test]
    fn constant_table_reproduces_constant() {
        let l = layout();
        let t = FeatureTable::constant(&l, &[0.3, -1.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let f = encode_position(&l, &t, 1, &random_bary(&mut rng));
            for level in 0..l.levels {
                assert!((f.0[2 * level] - 0.3).abs() < 1e-12);
                assert!((f.0[2 * level + 1] + 1.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_node_reads_single_corner() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = FeatureTable::random(&l, &mut rng);
        let f = encode_position(&l, &t, 2, &Bary4::vertex(0));
        for level in 0..l.levels {
            let res = l.resolutions[level];
            let s = l.slot(2, level, [res, 0, 0, 0]);
            assert_eq!(&f.0[2 * level..2 * level + 2], t.slot(s));
        }
    }

    #[test]
    fn matches_oracle() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = FeatureTable::random(&l, &mut rng);
        for _ in 0..200 {
            let tet = rng.gen_range(0..3);
            let b = random_bary(&mut rng);
            let got = encode_position(&l, &t, tet, &b).0;
            let want = oracle(&l, &t, tet, &b);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_leaves_grad_untouched() {
        let l = layout();
        let t = FeatureTable::zeros(&l);
        let mut g = t.zeros_like();
        encode_position_backward(&l, 0, &Bary4::CENTROID, &vec![0.0; l.output_dim()], &mut g);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grid_node_gradient_hits_one_corner_per_level() {
        let l = layout();
        let t = FeatureTable::zeros(&l);
        let mut g = t.zeros_like();
        let up: Vec<f64> = (0..l.output_dim()).map(|i| 1.0 + i as f64).collect();
        encode_position_backward(&l, 1, &Bary4::vertex(3), &up, &mut g);
        let touched = g.iter().filter(|&&v| v != 0.0).count();
        assert_eq!(touched, l.levels * l.features);
        for level in 0..l.levels {
            let s = l.slot(1, level, [0, 0, 0, l.resolutions[level]]);
            assert_eq!(g[2 * s], up[2 * level]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut t = FeatureTable::random(&l, &mut rng);
        for _ in 0..100 {
            let tet = rng.gen_range(0..3);
            let b = random_bary(&mut rng);
            let up: Vec<f64> = (0..l.output_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut g = t.zeros_like();
            encode_position_backward(&l, tet, &b, &up, &mut g);
            let loss = |t: &FeatureTable| -> f64 {
                encode_position(&l, t, tet, &b).0.iter().zip(&up).map(|(f, u)| f * u).sum()
            };
            let idx = t.tet_range(&l, tet).start + rng.gen_range(0..l.slots_per_tet() * 2);
            let (h, orig) = (1e-4, t.values[idx]);
            t.values[idx] = orig + h;
            let lp = loss(&t);
            t.values[idx] = orig - h;
            let lm = loss(&t);
            t.values[idx] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let scale = fd.abs().max(g[idx].abs());
            if scale > 1e-12 {
                assert!((fd - g[idx]).abs() / scale < 1e-6, "{fd} vs {}", g[idx]);
            } else {
                assert!(g[idx].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn continuous_across_voxel_faces() {
        let l = layout();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = FeatureTable::random(&l, &mut rng);
        // lambda_0 crosses 1/res at the finest level.
        let res = *l.resolutions.last().unwrap() as f64;
        let x = 1.0 / res;
        let eps = 1e-8;
        let a = Bary4([x - eps, 0.3, 0.3, 1.0 - 0.6 - x + eps]);
        let b = Bary4([x + eps, 0.3, 0.3, 1.0 - 0.6 - x - eps]);
        let fa = encode_position(&l, &t, 0, &a).0;
        let fb = encode_position(&l, &t, 0, &b).0;
        for (p, q) in fa.iter().zip(&fb) {
            assert!((p - q).abs() < 1e-6);
        }
    }
}
