//! Golden-image regression for a two-model selective blend.
//!
//! Set `IMPOSTOR_UPDATE_GOLDEN=1` to rewrite the stored images.

mod common;

use std::path::PathBuf;

use common::{rng, textured_model};
use impostor::editing::{blend_image, BoolOp, BooleanField};
use impostor::geometry::TetMesh;
use impostor::rendering::{Camera, Image, RenderOptions};
use impostor::Vec3;

const TOLERANCE: f64 = 1e-9;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn to_bytes(img: &Image) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend((img.width as u64).to_le_bytes());
    out.extend((img.height as u64).to_le_bytes());
    for px in &img.pixels {
        for v in px {
            out.extend(v.to_le_bytes());
        }
    }
    out
}

fn from_bytes(bytes: &[u8]) -> Image {
    let word = |i: usize| <[u8; 8]>::try_from(&bytes[8 * i..8 * i + 8]).unwrap();
    let mut img = Image::new(u64::from_le_bytes(word(0)) as usize, u64::from_le_bytes(word(1)) as usize);
    for (i, px) in img.pixels.iter_mut().enumerate() {
        *px = std::array::from_fn(|k| f64::from_le_bytes(word(2 + 3 * i + k)));
    }
    img
}

fn check_golden(name: &str, img: &Image) {
    let path = golden_path(name);
    if std::env::var_os("IMPOSTOR_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, to_bytes(img)).unwrap();
        return;
    }
    let stored = from_bytes(&std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display())));
    assert_eq!((stored.width, stored.height), (img.width, img.height));
    let diff = stored.max_abs_diff(img);
    assert!(diff <= TOLERANCE, "{name}: max difference {diff:.3e}");
}

/// Colour from a patterned model inside a sphere stamp, density from a
/// fluffier model everywhere else.
fn blend_scene() -> Image {
    let mut r = rng(2024);
    let mesh = TetMesh::cube(Vec3::zeros(), 1.0).unwrap();
    let pattern = textured_model(mesh.clone(), &mut r);
    let mut fur = textured_model(mesh, &mut r);
    fur.decoders.density.output_bias_mut()[0] = 1.2;
    let stamp = BooleanField::Sphere {
        center: Vec3::new(0.2, -0.1, 0.3),
        radius: 0.6,
    };
    let pattern_side = BooleanField::Density { model: 0, eps: 0.5 }.combine(BoolOp::Intersection, stamp.clone());
    let fur_side = stamp.complement();
    let cam = Camera::look_at(Vec3::new(3.5, 1.0, 1.5), Vec3::zeros(), Vec3::z(), 28.0, 32, 24).unwrap();
    blend_image(&[&pattern, &fur], (0, &pattern_side), (1, &fur_side), &cam, &RenderOptions::default()).unwrap()
}

#[test]
fn blend_matches_golden() {
    let img = blend_scene();
    assert!(img.pixels.iter().flatten().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
    let lit = img.pixels.iter().filter(|p| p.iter().any(|v| *v < 0.99)).count();
    assert!(lit > img.pixels.len() / 10, "only {lit} pixels show the object");
    check_golden("blend_32x24.bin", &img);
}
