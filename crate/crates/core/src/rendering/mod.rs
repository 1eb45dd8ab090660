//! Volume rendering over tetrahedron crossings.
//!
//! Integration runs in barycentric space: a sample interval of length
//! `d_alpha` inside a crossing contributes `d_alpha * |bary_in - bary_out|_1`
//! of optical path, so a rendered colour does not change when tetrahedra are
//! stretched or squashed.
//!
//! Two modes are provided. [`RenderMode::DecodeFirst`] decodes a colour per
//! sample and composites colours. [`RenderMode::EarlyIntegration`]
//! composites position features with the same weights and decodes once per
//! ray:
//!
//! ```text
//! a   = 1 - T_final
//! rgb = a * radiance(sum_i(w_i f_i) / a, dir) + T_final * background
//! ```

mod camera;
mod trace;

use thiserror::Error;

pub use camera::Camera;
pub use trace::{Gradients, RayOutput, RayWorkspace, SampleMask, MIN_OPACITY};

use crate::geometry::{Ray, TetSegment};
use crate::model::ImpostorModel;
use crate::parallel::map_chunks;
use crate::sampling::SamplerParams;

/// PSNR reported for identical images.
pub const PSNR_IDENTICAL: f64 = 99.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    InvalidCamera(&'static str),
    #[error("image sizes differ: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("invalid render options: {0}")]
    InvalidOptions(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderMode {
    DecodeFirst,
    EarlyIntegration,
}

impl std::str::FromStr for RenderMode {
    type Err = RenderError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "decode-first" | "decode_first" => Ok(RenderMode::DecodeFirst),
            "early" | "early-integration" | "early_integration" => Ok(RenderMode::EarlyIntegration),
            _ => Err(RenderError::InvalidOptions(format!("unknown render mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub mode: RenderMode,
    pub sampler: SamplerParams,
    pub background: [f64; 3],
    /// Worker threads for image rendering.
    pub threads: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            mode: RenderMode::EarlyIntegration,
            sampler: SamplerParams::default(),
            background: [1.0; 3],
            threads: 1,
        }
    }
}

impl RenderOptions {
    pub fn with_mode(mut self, mode: RenderMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_background(mut self, background: [f64; 3]) -> Self {
        self.background = background;
        self
    }

    pub fn white_background(self) -> Self {
        self.with_background([1.0; 3])
    }

    pub fn black_background(self) -> Self {
        self.with_background([0.0; 3])
    }

    pub fn with_sampler(mut self, sampler: SamplerParams) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }
}

/// RGB image with values in `[0, 1]`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            pixels: vec![[0.0; 3]; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        Image {
            width,
            height,
            pixels: vec![rgb; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Largest per-channel absolute difference.
    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
            .fold(0.0, f64::max)
    }

    /// Mean per-channel absolute difference.
    pub fn mean_abs_diff(&self, other: &Image) -> f64 {
        let s: f64 = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).abs()))
            .sum();
        s / (3 * self.pixels.len()).max(1) as f64
    }
}

/// Optical path of the part `[a0, a1]` of a crossing, in the Manhattan
/// barycentric measure.
pub fn segment_integration_measure(seg: &TetSegment, a0: f64, a1: f64) -> f64 {
    (a1 - a0) * seg.l1_length()
}

/// Renders one ray with the mode in `opts`.
pub fn render_ray(model: &ImpostorModel, ray: &Ray, opts: &RenderOptions) -> [f64; 3] {
    RayWorkspace::new().forward(model, ray, &ray.dir, opts, None).rgb
}

pub fn render_ray_decode_first(model: &ImpostorModel, ray: &Ray, opts: &RenderOptions) -> [f64; 3] {
    render_ray(model, ray, &opts.with_mode(RenderMode::DecodeFirst))
}

pub fn render_ray_early_integration(model: &ImpostorModel, ray: &Ray, opts: &RenderOptions) -> [f64; 3] {
    render_ray(model, ray, &opts.with_mode(RenderMode::EarlyIntegration))
}

/// Renders every pixel of an image with `f`, splitting rows over
/// `threads` workers. Each pixel is computed independently, so the result
/// does not depend on the thread count.
pub fn render_pixels<F>(width: usize, height: usize, threads: usize, f: F) -> Image
where
    F: Fn(usize, usize, &mut RayWorkspace) -> [f64; 3] + Sync,
{
    let rows = map_chunks(height, threads, |range| {
        let mut ws = RayWorkspace::new();
        let mut out = Vec::with_capacity(range.len() * width);
        for y in range {
            for x in 0..width {
                out.push(f(x, y, &mut ws));
            }
        }
        out
    });
    Image {
        width,
        height,
        pixels: rows.into_iter().flatten().collect(),
    }
}

/// One ray through each pixel centre.
pub fn render_image(model: &ImpostorModel, camera: &Camera, opts: &RenderOptions) -> Image {
    render_pixels(camera.width, camera.height, opts.threads, |x, y, ws| {
        let ray = camera.ray(x, y);
        clamp01(ws.forward(model, &ray, &ray.dir, opts, None).rgb)
    })
}

pub(crate) fn clamp01(c: [f64; 3]) -> [f64; 3] {
    c.map(|v| v.clamp(0.0, 1.0))
}

/// Peak signal-to-noise ratio for unit peak, `10 log10(1 / MSE)`;
/// identical images give [`PSNR_IDENTICAL`].
pub fn psnr(a: &Image, b: &Image) -> Result<f64, RenderError> {
    if a.width != b.width || a.height != b.height {
        return Err(RenderError::SizeMismatch(a.width, a.height, b.width, b.height));
    }
    let mse = mse(&a.pixels, &b.pixels);
    Ok(psnr_from_mse(mse))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_IDENTICAL
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

pub(crate) fn mse(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>())
        .sum();
    s / (3 * a.len()).max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Bary4, TetMesh, Vec3};
    use crate::model::ModelConfig;

    fn seg(a: [f64; 4], b: [f64; 4]) -> TetSegment {
        TetSegment {
            tet: 0,
            t_in: 0.0,
            t_out: 1.0,
            bary_in: Bary4(a),
            bary_out: Bary4(b),
        }
    }

    #[test]
    fn measure_examples() {
        assert_eq!(segment_integration_measure(&seg([0.25; 4], [0.25; 4]), 0.0, 1.0), 0.0);
        assert_eq!(segment_integration_measure(&seg([1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]), 0.0, 1.0), 2.0);
        let m = segment_integration_measure(&seg([0.8, 0.0, 0.1, 0.1], [0.0, 0.8, 0.1, 0.1]), 0.0, 1.0);
        assert!((m - 1.6).abs() < 1e-15);
    }

    #[test]
    fn psnr_examples() {
        let a = Image::filled(4, 3, [0.0; 3]);
        let b = Image::filled(4, 3, [0.1; 3]);
        assert_eq!(psnr(&a, &a).unwrap(), 99.0);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
        assert!(psnr(&a, &Image::new(3, 4)).is_err());
    }

    #[test]
    fn psnr_matches_straight_line_formula() {
        let mut a = Image::new(5, 5);
        let mut b = Image::new(5, 5);
        let mut s = 0u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for p in a.pixels.iter_mut().chain(b.pixels.iter_mut()) {
            *p = [next(), next(), next()];
        }
        let mut sum = 0.0;
        for i in 0..25 {
            for k in 0..3 {
                let d = a.pixels[i][k] - b.pixels[i][k];
                sum += d * d;
            }
        }
        let want = -10.0 * (sum / 75.0).log10();
        assert!((psnr(&a, &b).unwrap() - want).abs() < 1e-9);
    }

    fn unit_tet() -> TetMesh {
        TetMesh::build(vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z()], vec![[0, 1, 2, 3]]).unwrap()
    }

    #[test]
    fn empty_model_shows_background() {
        let m = ImpostorModel::constant(unit_tet(), ModelConfig::default(), 0.0, [0.3; 3]).unwrap();
        let ray = Ray::new(Vec3::new(-1.0, 0.1, 0.1), Vec3::x()).unwrap();
        let bg = [0.2, 0.7, 0.9];
        for mode in [RenderMode::DecodeFirst, RenderMode::EarlyIntegration] {
            let o = RenderOptions::default().with_mode(mode).with_background(bg);
            assert_eq!(render_ray(&m, &ray, &o), bg);
        }
    }

    #[test]
    fn weights_and_final_transmittance_sum_to_one() {
        let m = ImpostorModel::new(unit_tet(), ModelConfig::default(), 3).unwrap();
        let mut ws = RayWorkspace::new();
        let ray = Ray::through(Vec3::new(-1.0, 0.2, 0.1), Vec3::new(1.0, 0.05, 0.1));
        ws.forward(&m, &ray, &ray.dir, &RenderOptions::default(), None);
        assert!(!ws.is_empty());
        let s: f64 = ws.weight.iter().sum::<f64>() + ws.trans.last().unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_density_image_is_white() {
        let m = ImpostorModel::constant(unit_tet(), ModelConfig::default(), 0.0, [0.3; 3]).unwrap();
        let cam = Camera::look_at(Vec3::new(2.0, 1.5, 1.0), Vec3::repeat(0.25), Vec3::z(), 20.0, 8, 6).unwrap();
        let img = render_image(&m, &cam, &RenderOptions::default().white_background());
        assert!(img.pixels.iter().all(|p| *p == [1.0; 3]));
    }

    #[test]
    fn image_is_independent_of_thread_count() {
        let m = ImpostorModel::new(unit_tet(), ModelConfig::default(), 4).unwrap();
        let cam = Camera::look_at(Vec3::new(2.0, 1.5, 1.0), Vec3::repeat(0.25), Vec3::z(), 20.0, 8, 7).unwrap();
        let a = render_image(&m, &cam, &RenderOptions::default().with_threads(1));
        let b = render_image(&m, &cam, &RenderOptions::default().with_threads(3));
        assert_eq!(a, b);
    }
}
