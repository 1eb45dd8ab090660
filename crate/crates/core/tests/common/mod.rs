#![allow(dead_code)]

use impostor::editing::Affine;
use impostor::geometry::{Bary4, TetMesh, Vec3};
use impostor::model::{ImpostorModel, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Jittered, rotated grid mesh with no overlapping tetrahedra.
pub fn random_mesh(rng: &mut ChaCha8Rng) -> TetMesh {
    let dims = [rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3)];
    let size = Vec3::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
    let base = TetMesh::grid(dims, -size / 2.0, size / 2.0).unwrap();
    let place = Affine::rotate(random_unit(rng), rng.gen_range(0.0..360.0))
        .unwrap()
        .then(&Affine::translate(random_unit(rng) * 0.3));
    let cell = (0..3).map(|k| size[k] / dims[k] as f64).fold(f64::INFINITY, f64::min);
    let mut jitter = 0.15 * cell;
    loop {
        let moved: Vec<Vec3> = base
            .vertices()
            .iter()
            .map(|v| place.apply(&(v + random_unit(rng) * rng.gen_range(0.0..jitter))))
            .collect();
        if let Ok(m) = base.with_vertices(moved) {
            if !m.has_overlaps() {
                return m;
            }
        }
        jitter *= 0.5;
    }
}

/// Strictly interior barycentric point, uniform over the simplex.
pub fn random_bary(rng: &mut ChaCha8Rng) -> Bary4 {
    let e: [f64; 4] = std::array::from_fn(|_| -rng.gen_range(1e-12f64..1.0).ln());
    let s: f64 = e.iter().sum();
    Bary4(e.map(|x| x / s))
}

pub fn small_config() -> ModelConfig {
    ModelConfig {
        log2_table_size: 12,
        levels: 4,
        max_resolution: 8,
        sh_degree: 2,
        radiance_hidden: vec![8],
        ..ModelConfig::default()
    }
}

/// A model with table values large enough to give visible structure.
pub fn textured_model(mesh: TetMesh, rng: &mut ChaCha8Rng) -> ImpostorModel {
    let mut model = ImpostorModel::new(mesh, small_config(), rng.gen()).unwrap();
    for v in &mut model.table.values {
        *v = rng.gen_range(-1.0..1.0);
    }
    model.decoders.density.output_bias_mut()[0] = rng.gen_range(-0.5..1.0);
    model
}

/// Ray origin outside the mesh bounds, aimed at a random interior point.
pub fn random_ray(mesh: &TetMesh, rng: &mut ChaCha8Rng) -> impostor::geometry::Ray {
    let b = mesh.bounds();
    let center = (b.min + b.max) / 2.0;
    let target = center + Vec3::from_fn(|k, _| rng.gen_range(-0.5..0.5) * (b.max[k] - b.min[k]));
    let origin = center + random_unit(rng) * (2.0 * b.diagonal());
    impostor::geometry::Ray::new(origin, (target - origin).normalize()).unwrap()
}
