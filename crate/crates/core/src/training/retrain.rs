//! Transferring a trained field onto a remeshed proxy.
//!
//! Stage 1 matches position features: points are drawn inside the changed
//! tetrahedra of the new mesh, located in the old mesh, and the new table is
//! fitted to the old encodings under an L1 loss. Points outside the old
//! proxy are dropped. Stage 2 matches colours: random rays through the
//! changed region are rendered by both models and the squared difference is
//! minimised. Unchanged tetrahedra keep their features verbatim throughout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::random_direction;
use super::{Adam, RayTarget, TrainConfig, TrainError, Trainer};
use crate::encoding::{encode_position_backward, FeatureTable, HashLayout};
use crate::geometry::{Bary4, GeometryError, Ray, TetMesh, Vec3};
use crate::model::ImpostorModel;
use crate::rendering::{Camera, RayWorkspace, RenderOptions};

/// Which tetrahedra of the new mesh changed, and where every new
/// tetrahedron came from.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrainRegion {
    /// Sorted indices of changed tetrahedra in the new mesh.
    pub changed: Vec<usize>,
    /// Old index of each new tetrahedron, if it has an exact counterpart.
    pub old_of_new: Vec<Option<usize>>,
}

impl RetrainRegion {
    /// Matches tetrahedra whose vertex positions agree exactly, in order.
    /// Everything without a match is changed.
    pub fn infer(old: &TetMesh, new: &TetMesh) -> Self {
        let key = |m: &TetMesh, t: usize| m.tet_vertices(t).map(|v| [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()]);
        let index: std::collections::HashMap<_, usize> = (0..old.num_tets()).map(|t| (key(old, t), t)).collect();
        let old_of_new: Vec<Option<usize>> = (0..new.num_tets()).map(|t| index.get(&key(new, t)).copied()).collect();
        let changed = (0..new.num_tets()).filter(|&t| old_of_new[t].is_none()).collect();
        RetrainRegion { changed, old_of_new }
    }

    /// Every tetrahedron marked changed and mapped to itself.
    pub fn identity(mesh: &TetMesh) -> Self {
        RetrainRegion {
            changed: (0..mesh.num_tets()).collect(),
            old_of_new: (0..mesh.num_tets()).map(Some).collect(),
        }
    }

    pub fn validate(&self, old: &TetMesh, new: &TetMesh) -> Result<(), TrainError> {
        if self.changed.is_empty() {
            return Err(TrainError::EmptyRegion);
        }
        if self.old_of_new.len() != new.num_tets() {
            return Err(TrainError::InvalidRegion(format!(
                "mapping covers {} tets, new mesh has {}",
                self.old_of_new.len(),
                new.num_tets()
            )));
        }
        if self.changed.windows(2).any(|w| w[0] >= w[1]) || self.changed.iter().any(|&t| t >= new.num_tets()) {
            return Err(TrainError::InvalidRegion("changed tets must be sorted, unique and in range".into()));
        }
        for (t, o) in self.old_of_new.iter().enumerate() {
            match o {
                Some(o) if *o >= old.num_tets() => {
                    return Err(TrainError::InvalidRegion(format!("tet {t} maps to missing old tet {o}")))
                }
                None if self.changed.binary_search(&t).is_err() => return Err(TrainError::UnmappedTet(t)),
                _ => {}
            }
        }
        Ok(())
    }

    fn is_changed(&self, t: usize) -> bool {
        self.changed.binary_search(&t).is_ok()
    }

    /// Old tetrahedron with the same vertices in the same order.
    fn identical_counterpart(&self, old: &TetMesh, new: &TetMesh, t: usize) -> Option<usize> {
        self.old_of_new[t].filter(|&o| old.tet_vertices(o) == new.tet_vertices(t))
    }
}

/// Splits tetrahedron `tet` into eight: four corner tetrahedra and the
/// inner octahedron cut along its shortest diagonal. The children are
/// appended after the remaining tetrahedra; neighbours are not split.
pub fn red_refine(mesh: &TetMesh, tet: usize) -> Result<TetMesh, GeometryError> {
    if tet >= mesh.num_tets() {
        return Err(GeometryError::TetOutOfRange { tet });
    }
    let mut vertices = mesh.vertices().to_vec();
    let t = mesh.tets()[tet];
    let edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut mid = [0usize; 6];
    for (k, &(a, b)) in edges.iter().enumerate() {
        mid[k] = vertices.len();
        vertices.push(0.5 * (vertices[t[a]] + vertices[t[b]]));
    }
    let m = |a: usize, b: usize| mid[edges.iter().position(|&e| e == (a.min(b), a.max(b))).unwrap()];
    let mut tets: Vec<[usize; 4]> = mesh
        .tets()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != tet)
        .map(|(_, t)| *t)
        .collect();
    for c in 0..4 {
        let others: Vec<usize> = (0..4).filter(|&o| o != c).collect();
        tets.push([t[c], m(c, others[0]), m(c, others[1]), m(c, others[2])]);
    }
    // Opposite midpoint pairs of the octahedron.
    let pairs = [(m(0, 1), m(2, 3)), (m(0, 2), m(1, 3)), (m(0, 3), m(1, 2))];
    let len = |(a, b): (usize, usize)| (vertices[a] - vertices[b]).norm();
    let d = (0..3).min_by(|&i, &j| len(pairs[i]).total_cmp(&len(pairs[j]))).unwrap();
    let (a, b) = pairs[d];
    let (p, q) = (pairs[(d + 1) % 3], pairs[(d + 2) % 3]);
    let ring = [p.0, q.0, p.1, q.1];
    for k in 0..4 {
        tets.push([a, b, ring[k], ring[(k + 1) % 4]]);
    }
    TetMesh::build(vertices, tets)
}

/// New model on `new_mesh` with the old decoders and per-tetrahedron table
/// size. Tetrahedra with an old counterpart copy its features; the rest
/// start from small random values.
pub fn transfer(
    old: &ImpostorModel,
    new_mesh: TetMesh,
    region: &RetrainRegion,
    seed: u64,
) -> Result<ImpostorModel, TrainError> {
    region.validate(&old.mesh, &new_mesh)?;
    let ol = &old.layout;
    let needed = ceil_log2(new_mesh.num_tets()) + ol.per_tet_log2;
    let global = ol.global_log2.max(needed.saturating_sub(1));
    let layout = HashLayout::with_per_tet_log2(
        new_mesh.num_tets(),
        global,
        ol.per_tet_log2,
        ol.levels,
        ol.features,
        old.config.max_resolution,
    )
    .map_err(|e| TrainError::InvalidRegion(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = FeatureTable::random(&layout, &mut rng);
    for (t, o) in region.old_of_new.iter().enumerate() {
        if let Some(o) = *o {
            let src = old.table.tet_range(ol, o);
            let dst = table.tet_range(&layout, t);
            table.values[dst].copy_from_slice(&old.table.values[src]);
        }
    }
    let mut config = old.config.clone();
    config.log2_table_size = global;
    Ok(ImpostorModel {
        config,
        mesh: new_mesh,
        layout,
        table,
        decoders: old.decoders.clone(),
    })
}

fn ceil_log2(n: usize) -> u32 {
    usize::BITS - n.saturating_sub(1).leading_zeros()
}

/// A point expressed in both meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturePair {
    pub new_tet: usize,
    pub new_bary: Bary4,
    pub old_tet: usize,
    pub old_bary: Bary4,
}

/// Uniform barycentric weights by sorted-uniform simplex sampling.
pub fn random_bary(rng: &mut ChaCha8Rng) -> Bary4 {
    let mut u = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
    u.sort_by(f64::total_cmp);
    Bary4([u[0], u[1] - u[0], u[2] - u[1], 1.0 - u[2]])
}

/// `n` points spread evenly over the changed tetrahedra, paired with their
/// location in the old mesh. Points outside the old mesh are dropped.
pub fn sample_pairs(
    old: &TetMesh,
    new: &TetMesh,
    region: &RetrainRegion,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<FeaturePair> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = region.changed[i % region.changed.len()];
        let b = random_bary(rng);
        if let Some(o) = region.identical_counterpart(old, new, t) {
            out.push(FeaturePair {
                new_tet: t,
                new_bary: b,
                old_tet: o,
                old_bary: b,
            });
            continue;
        }
        let p = new.point_from_barycentric(t, &b).expect("changed tet in range");
        if let Some((o, ob)) = old.locate_point(&p) {
            out.push(FeaturePair {
                new_tet: t,
                new_bary: b,
                old_tet: o,
                old_bary: ob,
            });
        }
    }
    out
}

/// Mean over `pairs` of the L1 distance between new and old encodings.
/// Adds the gradient with respect to the new table to `grad` when given.
pub fn hash_loss(old: &ImpostorModel, new: &ImpostorModel, pairs: &[FeaturePair], mut grad: Option<&mut [f64]>) -> f64 {
    let d = old.pos_dim();
    let mut fo = vec![0.0; d];
    let mut fnew = vec![0.0; d];
    let mut up = vec![0.0; d];
    let inv = 1.0 / pairs.len().max(1) as f64;
    let mut total = 0.0;
    for p in pairs {
        old.encode_into(p.old_tet, &p.old_bary, &mut fo);
        new.encode_into(p.new_tet, &p.new_bary, &mut fnew);
        for k in 0..d {
            let e = fnew[k] - fo[k];
            total += e.abs();
            up[k] = if e > 0.0 {
                inv
            } else if e < 0.0 {
                -inv
            } else {
                0.0
            };
        }
        if let Some(g) = grad.as_deref_mut() {
            encode_position_backward(&new.layout, p.new_tet, &p.new_bary, &up, g);
        }
    }
    total * inv
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrainConfig {
    pub stage1_steps: usize,
    pub stage1_points: usize,
    pub stage1_lr: f64,
    /// Stage 2 optimiser; `batch_size` counts rays through the region.
    pub stage2: TrainConfig,
    pub update_decoders: bool,
    pub seed: u64,
}

impl Default for RetrainConfig {
    fn default() -> Self {
        RetrainConfig {
            stage1_steps: 500,
            stage1_points: 1 << 14,
            stage1_lr: 1e-2,
            stage2: TrainConfig {
                steps: 500,
                batch_size: 512,
                ..TrainConfig::default()
            },
            update_decoders: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RetrainReport {
    pub stage1_losses: Vec<f64>,
    pub stage2_losses: Vec<f64>,
}

/// Stage 1: fits the changed tetrahedra's features to the old encodings.
pub fn stage1(
    new: &mut ImpostorModel,
    old: &ImpostorModel,
    region: &RetrainRegion,
    cfg: &RetrainConfig,
) -> Result<Vec<f64>, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5354_4147_4531);
    let s2 = &cfg.stage2;
    let mut adam = Adam::new(new.table.values.len(), cfg.stage1_lr, s2.beta1, s2.beta2, s2.eps);
    let mut grad = vec![0.0; new.table.values.len()];
    let mut losses = Vec::with_capacity(cfg.stage1_steps);
    for step in 0..cfg.stage1_steps {
        let pairs = sample_pairs(&old.mesh, &new.mesh, region, cfg.stage1_points, &mut rng);
        grad.fill(0.0);
        let loss = hash_loss(old, new, &pairs, Some(&mut grad));
        if !loss.is_finite() {
            return Err(TrainError::Diverged { step });
        }
        adam.step(&mut new.table.values, &grad);
        losses.push(loss);
    }
    Ok(losses)
}

/// Random rays aimed at uniform points of the changed tetrahedra, starting
/// outside the mesh bounds.
pub fn region_rays(mesh: &TetMesh, changed: &[usize], n: usize, rng: &mut ChaCha8Rng) -> Vec<Ray> {
    let reach = mesh.bounds().diagonal() + 1.0;
    (0..n)
        .map(|_| {
            let t = changed[rng.gen_range(0..changed.len())];
            let p = mesh.point_from_barycentric(t, &random_bary(rng)).expect("tet in range");
            let d = random_direction(rng);
            Ray::through(p - reach * d, d)
        })
        .collect()
}

/// Stage 2: fits the new model's renders of rays through the region to the
/// old model's renders. Unchanged tetrahedra stay frozen.
pub fn stage2(
    new: &mut ImpostorModel,
    old: &ImpostorModel,
    region: &RetrainRegion,
    cfg: &RetrainConfig,
    opts: &RenderOptions,
) -> Result<Vec<f64>, TrainError> {
    let mut trainer = Trainer::new(new, &cfg.stage2)?;
    trainer.update_decoders = cfg.update_decoders;
    trainer.frozen = (0..new.mesh.num_tets())
        .filter(|&t| !region.is_changed(t))
        .map(|t| new.table.tet_range(&new.layout, t))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.stage2.seed ^ 0x5354_4147_4532);
    let mut ws = RayWorkspace::new();
    let mut losses = Vec::with_capacity(cfg.stage2.steps);
    for _ in 0..cfg.stage2.steps {
        let batch: Vec<RayTarget> = region_rays(&new.mesh, &region.changed, cfg.stage2.batch_size, &mut rng)
            .into_iter()
            .map(|ray| RayTarget {
                ray,
                target: ws.forward(old, &ray, &ray.dir, opts, None).rgb,
            })
            .collect();
        losses.push(trainer.step(new, &batch, opts)?);
    }
    Ok(losses)
}

/// Both stages in sequence.
pub fn retrain_local(
    old: &ImpostorModel,
    new_mesh: TetMesh,
    region: &RetrainRegion,
    cfg: &RetrainConfig,
    opts: &RenderOptions,
) -> Result<(ImpostorModel, RetrainReport), TrainError> {
    let mut new = transfer(old, new_mesh, region, cfg.seed)?;
    let stage1_losses = stage1(&mut new, old, region, cfg)?;
    let stage2_losses = stage2(&mut new, old, region, cfg, opts)?;
    Ok((
        new,
        RetrainReport {
            stage1_losses,
            stage2_losses,
        },
    ))
}

/// Cameras on a Fibonacci sphere around the changed tetrahedra, framing
/// their bounding ball.
pub fn probe_cameras(mesh: &TetMesh, tets: &[usize], n: usize, res: usize) -> Vec<Camera> {
    let pts: Vec<Vec3> = tets.iter().flat_map(|&t| mesh.tet_vertices(t)).collect();
    let centre = pts.iter().sum::<Vec3>() / pts.len().max(1) as f64;
    let radius = pts.iter().map(|p| (p - centre).norm()).fold(1e-9, f64::max);
    let dist = 3.0 * radius;
    let focal = 0.5 * res as f64 / (1.2 * (1.0f64 / 3.0).asin()).tan();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let dir = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            let up = if z.abs() > 0.9 { Vec3::x() } else { Vec3::z() };
            Camera::look_at(centre + dist * dir, centre, up, focal, res, res).expect("probe camera")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    fn cube() -> TetMesh {
        TetMesh::cube(Vec3::zeros(), 1.0).unwrap()
    }

    fn config() -> ModelConfig {
        ModelConfig {
            log2_table_size: 12,
            levels: 4,
            radiance_hidden: vec![16],
            ..ModelConfig::default()
        }
    }

    #[test]
    fn red_refinement_preserves_volume() {
        let m = cube();
        let r = red_refine(&m, 5).unwrap();
        assert_eq!(r.num_tets(), 24 + 7);
        let child: f64 = (23..31).map(|t| r.volume(t)).sum();
        assert!((child - m.volume(5)).abs() < 1e-12);
        assert!((23..31).all(|t| (r.volume(t) - m.volume(5) / 8.0).abs() < 1e-12));
        assert!(!r.has_overlaps());
    }

    #[test]
    fn region_inference() {
        let m = cube();
        let r = red_refine(&m, 5).unwrap();
        let region = RetrainRegion::infer(&m, &r);
        assert_eq!(region.changed, (23..31).collect::<Vec<_>>());
        assert_eq!(region.old_of_new[5], Some(6));
        region.validate(&m, &r).unwrap();
        assert_eq!(RetrainRegion::infer(&m, &m).validate(&m, &m), Err(TrainError::EmptyRegion));
        let mut bad = region.clone();
        bad.old_of_new[0] = None;
        assert_eq!(bad.validate(&m, &r), Err(TrainError::UnmappedTet(0)));
    }

    #[test]
    fn identity_transfer_has_zero_hash_loss() {
        let old = ImpostorModel::new(cube(), config(), 4).unwrap();
        let region = RetrainRegion::identity(&old.mesh);
        let new = transfer(&old, cube(), &region, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pairs = sample_pairs(&old.mesh, &new.mesh, &region, 2000, &mut rng);
        assert_eq!(pairs.len(), 2000);
        assert_eq!(hash_loss(&old, &new, &pairs, None), 0.0);
    }

    #[test]
    fn stage1_loss_ignores_vertex_positions() {
        let old = ImpostorModel::new(cube(), config(), 4).unwrap();
        let refined = red_refine(&old.mesh, 3).unwrap();
        let region = RetrainRegion::infer(&old.mesh, &refined);
        let new = transfer(&old, refined, &region, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs = sample_pairs(&old.mesh, &new.mesh, &region, 500, &mut rng);
        let moved: Vec<Vec3> = new.mesh.vertices().iter().map(|v| v * 1.7 + Vec3::new(0.1, 0.0, -2.0)).collect();
        let mut warped = new.clone();
        warped.mesh = new.mesh.with_vertices(moved).unwrap();
        assert_eq!(hash_loss(&old, &new, &pairs, None), hash_loss(&old, &warped, &pairs, None));
    }

    #[test]
    fn transfer_copies_unchanged_tets() {
        let old = ImpostorModel::new(cube(), config(), 4).unwrap();
        let refined = red_refine(&old.mesh, 0).unwrap();
        let region = RetrainRegion::infer(&old.mesh, &refined);
        let new = transfer(&old, refined, &region, 2).unwrap();
        assert_eq!(new.layout.per_tet_log2, old.layout.per_tet_log2);
        let (a, b) = (old.table.tet_range(&old.layout, 7), new.table.tet_range(&new.layout, 6));
        assert_eq!(old.table.values[a], new.table.values[b]);
        let bary = Bary4([0.1, 0.2, 0.3, 0.4]);
        let (mut f, mut g) = (vec![0.0; old.pos_dim()], vec![0.0; old.pos_dim()]);
        old.encode_into(12, &bary, &mut f);
        new.encode_into(11, &bary, &mut g);
        assert_eq!(f, g);
    }

    #[test]
    fn stage1_reduces_feature_loss() {
        let old = ImpostorModel::new(cube(), config(), 4).unwrap();
        let mut old = old;
        for v in &mut old.table.values {
            *v *= 1000.0;
        }
        let refined = red_refine(&old.mesh, 3).unwrap();
        let region = RetrainRegion::infer(&old.mesh, &refined);
        let mut new = transfer(&old, refined, &region, 2).unwrap();
        let cfg = RetrainConfig {
            stage1_steps: 60,
            stage1_points: 512,
            ..RetrainConfig::default()
        };
        let losses = stage1(&mut new, &old, &region, &cfg).unwrap();
        assert!(losses[59] < 0.8 * losses[0], "{} -> {}", losses[0], losses[59]);
    }

    #[test]
    fn probes_look_at_region() {
        let m = cube();
        let cams = probe_cameras(&m, &[2], 16, 16);
        assert_eq!(cams.len(), 16);
        for c in &cams {
            let ray = c.ray(8, 8);
            assert!(m.intersect_ray(&ray, 0.0, f64::INFINITY).iter().any(|s| s.tet == 2));
        }
    }
}
