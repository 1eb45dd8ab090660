//! Selective blending of two masked models.
//!
//! Each side is rendered with its own field, encoders and decoders. The
//! colour contributions add; the background is weighted by the product of
//! both transmittances so an empty side leaves the other unchanged.

use super::boolean::{render_with_boolean, BooleanField};
use super::EditError;
use crate::geometry::Ray;
use crate::model::ImpostorModel;
use crate::rendering::{render_pixels, Camera, Image, RayOutput, RayWorkspace, RenderOptions};

/// One side of a blend: a model index and the field selecting its samples.
pub type BlendSide<'a> = (usize, &'a BooleanField);

pub fn blend_ray(
    models: &[&ImpostorModel],
    first: BlendSide,
    second: BlendSide,
    ray: &Ray,
    opts: &RenderOptions,
    ws: &mut RayWorkspace,
) -> RayOutput {
    let a = render_with_boolean(models, first.0, first.1, ray, opts, ws);
    let b = render_with_boolean(models, second.0, second.1, ray, opts, ws);
    let transmittance = a.transmittance * b.transmittance;
    let mut premult = [0.0; 3];
    let mut rgb = [0.0; 3];
    for k in 0..3 {
        premult[k] = a.premult[k] + b.premult[k];
        rgb[k] = premult[k] + transmittance * opts.background[k];
    }
    RayOutput {
        rgb,
        premult,
        transmittance,
    }
}

pub fn blend_image(
    models: &[&ImpostorModel],
    first: BlendSide,
    second: BlendSide,
    camera: &Camera,
    opts: &RenderOptions,
) -> Result<Image, EditError> {
    for (target, field) in [first, second] {
        field.check_models(models.len())?;
        if target >= models.len() {
            return Err(EditError::MissingModel(target, models.len()));
        }
    }
    Ok(render_pixels(camera.width, camera.height, opts.threads, |x, y, ws| {
        let rgb = blend_ray(models, first, second, &camera.ray(x, y), opts, ws).rgb;
        rgb.map(|v| v.clamp(0.0, 1.0))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::editing::render_boolean_image;
    use crate::geometry::{TetMesh, Vec3};
    use crate::model::ModelConfig;

    fn models() -> (ImpostorModel, ImpostorModel, Camera) {
        let cfg = ModelConfig {
            log2_table_size: 12,
            levels: 4,
            radiance_hidden: vec![16],
            ..ModelConfig::default()
        };
        let mesh = TetMesh::cube(Vec3::zeros(), 1.0).unwrap();
        let mut a = ImpostorModel::new(mesh.clone(), cfg.clone(), 1).unwrap();
        a.decoders.density.output_bias_mut()[0] = 0.3;
        let mut b = ImpostorModel::new(mesh, cfg, 2).unwrap();
        b.decoders.density.output_bias_mut()[0] = 0.6;
        let cam = Camera::look_at(Vec3::new(2.5, 0.8, 0.6), Vec3::zeros(), Vec3::z(), 10.0, 12, 12).unwrap();
        (a, b, cam)
    }

    #[test]
    fn empty_second_side_is_the_first_masked_render() {
        let (a, b, cam) = models();
        let opts = RenderOptions::default();
        let sphere = BooleanField::Sphere {
            center: Vec3::zeros(),
            radius: 0.6,
        };
        let none = BooleanField::Const(false);
        let blended = blend_image(&[&a, &b], (0, &sphere), (1, &none), &cam, &opts).unwrap();
        let single = render_boolean_image(&[&a, &b], 0, &sphere, &cam, &opts).unwrap();
        assert_eq!(blended, single);
    }

    #[test]
    fn disjoint_masks_add_contributions() {
        let (a, b, cam) = models();
        let opts = RenderOptions::default().black_background();
        let inside = BooleanField::Sphere {
            center: Vec3::zeros(),
            radius: 0.6,
        };
        let outside = inside.clone().complement();
        let models = [&a, &b];
        let mut ws = RayWorkspace::new();
        for y in 0..cam.height {
            for x in 0..cam.width {
                let ray = cam.ray(x, y);
                let out = blend_ray(&models, (0, &inside), (1, &outside), &ray, &opts, &mut ws);
                let ra = render_with_boolean(&models, 0, &inside, &ray, &opts, &mut ws);
                let rb = render_with_boolean(&models, 1, &outside, &ray, &opts, &mut ws);
                for k in 0..3 {
                    assert!((out.rgb[k] - ra.rgb[k] - rb.rgb[k]).abs() < 1e-12);
                }
            }
        }
    }
}
