//! Procedural scenes with analytic density and colour, and their
//! brute-force renders.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Ray, TetMesh, Vec3};
use crate::rendering::{render_pixels, Camera, Image};

/// One analytic primitive.
#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// Ball of constant density with a smoothstep rim of width `falloff`
    /// centred on `radius`. The colour blends from `bottom` to `top` along z.
    SoftSphere {
        center: Vec3,
        radius: f64,
        falloff: f64,
        density: f64,
        bottom: [f64; 3],
        top: [f64; 3],
    },
    /// Spherical shell whose density is a smooth hump between the two radii,
    /// modulated by a product of sines.
    FluffShell {
        center: Vec3,
        inner: f64,
        outer: f64,
        density: f64,
        frequency: f64,
        color: [f64; 3],
    },
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

impl Primitive {
    fn center(&self) -> Vec3 {
        match self {
            Primitive::SoftSphere { center, .. } | Primitive::FluffShell { center, .. } => *center,
        }
    }

    /// Radius outside which the density vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            Primitive::SoftSphere { radius, falloff, .. } => radius + 0.5 * falloff,
            Primitive::FluffShell { outer, .. } => *outer,
        }
    }

    pub fn density(&self, p: &Vec3) -> f64 {
        match self {
            Primitive::SoftSphere {
                center,
                radius,
                falloff,
                density,
                ..
            } => {
                let d = (p - center).norm();
                if *falloff == 0.0 {
                    return if d <= *radius { *density } else { 0.0 };
                }
                density * smoothstep((radius + 0.5 * falloff - d) / falloff)
            }
            Primitive::FluffShell {
                center,
                inner,
                outer,
                density,
                frequency,
                ..
            } => {
                let q = p - center;
                let d = q.norm();
                if d <= *inner || d >= *outer {
                    return 0.0;
                }
                let u = (d - inner) / (outer - inner);
                let hump = 4.0 * u * (1.0 - u);
                let f = *frequency;
                let noise = 0.5 + 0.5 * (f * q.x).sin() * (f * q.y).sin() * (f * q.z).sin();
                density * hump * noise
            }
        }
    }

    pub fn color(&self, p: &Vec3) -> [f64; 3] {
        match self {
            Primitive::SoftSphere {
                center,
                radius,
                bottom,
                top,
                ..
            } => {
                let s = ((p.z - center.z) / radius * 0.5 + 0.5).clamp(0.0, 1.0);
                [0, 1, 2].map(|k| bottom[k] + s * (top[k] - bottom[k]))
            }
            Primitive::FluffShell { color, .. } => *color,
        }
    }

    /// Ray parameters where the ray is inside the support ball.
    fn support_interval(&self, ray: &Ray) -> Option<(f64, f64)> {
        let oc = ray.origin - self.center();
        let r = self.support_radius();
        let b = oc.dot(&ray.dir);
        let c = oc.norm_squared() - r * r;
        let disc = b * b - c;
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        let (t0, t1) = ((-b - s).max(0.0), -b + s);
        (t1 > t0).then_some((t0, t1))
    }
}

/// An analytic scene inside a bounding tetrahedral mesh.
#[derive(Debug, Clone)]
pub struct OracleScene {
    pub primitives: Vec<Primitive>,
    pub mesh: TetMesh,
}

impl OracleScene {
    /// Total density at `p`.
    pub fn density(&self, p: &Vec3) -> f64 {
        self.primitives.iter().map(|q| q.density(p)).sum()
    }

    /// Density-weighted colour at `p`; black where the density vanishes.
    pub fn color(&self, p: &Vec3) -> [f64; 3] {
        let mut acc = [0.0; 3];
        let mut total = 0.0;
        for q in &self.primitives {
            let s = q.density(p);
            if s > 0.0 {
                let c = q.color(p);
                for k in 0..3 {
                    acc[k] += s * c[k];
                }
                total += s;
            }
        }
        if total > 0.0 {
            acc.map(|a| a / total)
        } else {
            acc
        }
    }

    /// Union of the primitives' support intervals along `ray`, sorted.
    pub fn support(&self, ray: &Ray) -> Vec<(f64, f64)> {
        let mut iv: Vec<(f64, f64)> = self.primitives.iter().filter_map(|q| q.support_interval(ray)).collect();
        iv.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(iv.len());
        for (a, b) in iv {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        out
    }

    /// Midpoint quadrature with `quality` steps spread over the support of
    /// the ray. Piecewise constant media are integrated exactly.
    pub fn render_ray(&self, ray: &Ray, quality: usize, background: [f64; 3]) -> [f64; 3] {
        let support = self.support(ray);
        let total: f64 = support.iter().map(|(a, b)| b - a).sum();
        let mut rgb = [0.0; 3];
        let mut trans = 1.0;
        if total > 0.0 {
            for (a, b) in support {
                let n = ((quality as f64 * (b - a) / total).ceil() as usize).max(1);
                let h = (b - a) / n as f64;
                for i in 0..n {
                    let p = ray.at(a + (i as f64 + 0.5) * h);
                    let sigma = self.density(&p);
                    if sigma <= 0.0 {
                        continue;
                    }
                    let alpha = 1.0 - (-sigma * h).exp();
                    let c = self.color(&p);
                    for k in 0..3 {
                        rgb[k] += trans * alpha * c[k];
                    }
                    trans *= 1.0 - alpha;
                }
            }
        }
        [0, 1, 2].map(|k| rgb[k] + trans * background[k])
    }
}

/// Brute-force ground-truth image.
pub fn oracle_render(scene: &OracleScene, camera: &Camera, quality: usize, background: [f64; 3], threads: usize) -> Image {
    render_pixels(camera.width, camera.height, threads, |x, y, _| {
        scene.render_ray(&camera.ray(x, y), quality, background)
    })
}

/// Quadrature steps per ray used for training data.
pub const ORACLE_QUALITY: usize = 512;

pub const TOY_CAMERA_DISTANCE: f64 = 3.2;
pub const TOY_FOCAL: f64 = 77.0;
pub const TOY_RESOLUTION: usize = 64;

/// The fluff ball: a dense core with a vertical colour gradient, a small
/// green satellite and a thin noisy shell, inside a 24-tet cube.
pub fn toy_scene() -> OracleScene {
    OracleScene {
        primitives: vec![
            Primitive::SoftSphere {
                center: Vec3::zeros(),
                radius: 0.5,
                falloff: 0.25,
                density: 30.0,
                bottom: [0.85, 0.3, 0.2],
                top: [0.95, 0.8, 0.35],
            },
            Primitive::SoftSphere {
                center: Vec3::new(0.35, -0.3, 0.4),
                radius: 0.22,
                falloff: 0.15,
                density: 30.0,
                bottom: [0.2, 0.6, 0.3],
                top: [0.3, 0.75, 0.35],
            },
            Primitive::FluffShell {
                center: Vec3::zeros(),
                inner: 0.45,
                outer: 0.8,
                density: 4.0,
                frequency: 6.0,
                color: [0.35, 0.5, 0.9],
            },
        ],
        mesh: TetMesh::cube(Vec3::zeros(), 1.0).expect("cube mesh"),
    }
}

fn toy_camera(dir: Vec3, res: usize) -> Camera {
    let eye = dir.normalize() * TOY_CAMERA_DISTANCE;
    let up = if dir.x.abs() < 1e-9 && dir.y.abs() < 1e-9 { Vec3::y() } else { Vec3::z() };
    let focal = TOY_FOCAL * res as f64 / TOY_RESOLUTION as f64;
    Camera::look_at(eye, Vec3::zeros(), up, focal, res, res).expect("toy camera")
}

/// Eight training cameras on the cube-corner directions.
pub fn toy_train_cameras(res: usize) -> Vec<Camera> {
    (0..8)
        .map(|i| {
            let s = |b: usize| if i >> b & 1 == 1 { 1.0 } else { -1.0 };
            toy_camera(Vec3::new(s(0), s(1), s(2)), res)
        })
        .collect()
}

/// Held-out cameras slightly above the equator, between training azimuths.
pub fn toy_holdout_cameras(res: usize) -> Vec<Camera> {
    (0..4)
        .map(|i| {
            let az = std::f64::consts::FRAC_PI_2 * i as f64 + 0.3;
            let el: f64 = 0.15;
            toy_camera(Vec3::new(az.cos() * el.cos(), az.sin() * el.cos(), el.sin()), res)
        })
        .collect()
}

/// Renders `cameras` with the oracle.
pub fn oracle_views(scene: &OracleScene, cameras: &[Camera], background: [f64; 3], threads: usize) -> Vec<(Camera, Image)> {
    cameras
        .iter()
        .map(|c| (*c, oracle_render(scene, c, ORACLE_QUALITY, background, threads)))
        .collect()
}

/// Uniform direction on the unit sphere.
pub fn random_direction(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}
