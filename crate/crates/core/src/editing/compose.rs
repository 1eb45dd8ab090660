//! Scenes built from several transformed model instances.
//!
//! Every ray is mapped into each instance's local frame and sampled there.
//! The samples of all instances are merged by world ray parameter and
//! composited with one transmittance chain, so instances occlude each
//! other. In early-integration mode each instance integrates its own
//! features and decodes once with its own radiance decoder and local view
//! direction.

use nalgebra::{Matrix3, Rotation3, Unit};

use super::boolean::{BooleanField, FieldSample};
use super::EditError;
use crate::encoding::sh_basis;
use crate::geometry::{Ray, Vec3};
use crate::model::ImpostorModel;
use crate::rendering::{render_pixels, Camera, Image, RayOutput, RenderMode, RenderOptions, MIN_OPACITY};
use crate::sampling::sample_ray;

const SINGULAR_TOL: f64 = 1e-12;

/// Maps local points to world points: `world = linear * local + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub linear: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for Affine {
    fn default() -> Self {
        Affine::identity()
    }
}

impl Affine {
    pub fn identity() -> Self {
        Affine {
            linear: Matrix3::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn translate(t: Vec3) -> Self {
        Affine {
            linear: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn scale(s: f64) -> Self {
        Affine {
            linear: Matrix3::identity() * s,
            translation: Vec3::zeros(),
        }
    }

    /// Rotation by `degrees` about `axis`.
    pub fn rotate(axis: Vec3, degrees: f64) -> Result<Self, EditError> {
        let axis = Unit::try_new(axis, SINGULAR_TOL).ok_or(EditError::Invalid("zero rotation axis".into()))?;
        Ok(Affine {
            linear: Rotation3::from_axis_angle(&axis, degrees.to_radians()).into_inner(),
            translation: Vec3::zeros(),
        })
    }

    /// Twelve numbers: three rows of `linear` each followed by the
    /// translation component.
    pub fn from_rows(v: &[f64; 12]) -> Self {
        Affine {
            linear: Matrix3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]),
            translation: Vec3::new(v[3], v[7], v[11]),
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Affine) -> Affine {
        Affine {
            linear: next.linear * self.linear,
            translation: next.linear * self.translation + next.translation,
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.linear * p + self.translation
    }

    pub fn inverse(&self) -> Result<Affine, EditError> {
        if !self.linear.iter().all(|x| x.is_finite()) || !self.translation.iter().all(|x| x.is_finite()) {
            return Err(EditError::SingularTransform);
        }
        if self.linear.determinant().abs() < SINGULAR_TOL {
            return Err(EditError::SingularTransform);
        }
        let inv = self.linear.try_inverse().ok_or(EditError::SingularTransform)?;
        Ok(Affine {
            linear: inv,
            translation: -(inv * self.translation),
        })
    }
}

/// A model placed in the world, optionally restricted by a field evaluated
/// in its local frame.
#[derive(Debug, Clone)]
pub struct Instance {
    pub model: ImpostorModel,
    pub to_world: Affine,
    to_local: Affine,
    pub mask: Option<BooleanField>,
}

impl Instance {
    pub fn new(model: ImpostorModel, to_world: Affine) -> Result<Self, EditError> {
        let to_local = to_world.inverse()?;
        Ok(Instance {
            model,
            to_world,
            to_local,
            mask: None,
        })
    }

    pub fn with_mask(mut self, mask: BooleanField) -> Result<Self, EditError> {
        mask.check_models(1)?;
        self.mask = Some(mask);
        Ok(self)
    }

    /// The world ray in local coordinates and the factor from world to
    /// local ray parameter.
    pub fn local_ray(&self, ray: &Ray) -> (Ray, f64) {
        let origin = self.to_local.apply(&ray.origin);
        let raw = self.to_local.linear * ray.dir;
        let s = raw.norm();
        (Ray { origin, dir: raw / s }, s)
    }
}

#[derive(Debug, Clone, Default)]
pub struct CompositeScene {
    pub instances: Vec<Instance>,
}

struct MergedSample {
    t: f64,
    instance: usize,
    sigma: f64,
    delta: f64,
    feat: Vec<f64>,
}

fn radiance(model: &ImpostorModel, feat: &[f64], dir_feat: &[f64]) -> [f64; 3] {
    let net = &model.decoders.radiance;
    let mut input = Vec::with_capacity(feat.len() + dir_feat.len());
    input.extend_from_slice(feat);
    input.extend_from_slice(dir_feat);
    let mut hidden = vec![0.0; net.hidden_len()];
    let (mut raw, mut out) = ([0.0; 3], [0.0; 3]);
    net.forward(&input, &mut hidden, &mut raw, &mut out);
    out
}

pub fn compose_ray(scene: &CompositeScene, ray: &Ray, opts: &RenderOptions) -> RayOutput {
    let mut merged = Vec::new();
    let mut dir_feats = Vec::with_capacity(scene.instances.len());
    for (k, inst) in scene.instances.iter().enumerate() {
        let model = &inst.model;
        let (local, s) = inst.local_ray(ray);
        let mut dir_feat = vec![0.0; model.dir_dim()];
        sh_basis(&local.dir, model.config.sh_degree, &mut dir_feat);
        dir_feats.push(dir_feat);
        let rs = sample_ray(&model.mesh, &local, &opts.sampler);
        let net = &model.decoders.density;
        let mut hidden = vec![0.0; net.hidden_len()];
        for smp in &rs.samples {
            let seg = &rs.segments[smp.segment];
            if let Some(mask) = &inst.mask {
                let fs = FieldSample {
                    world: model.mesh.point_from_barycentric(smp.tet, &smp.bary).expect("sample tet in range"),
                    source: Some((0, smp.tet, smp.bary)),
                };
                if mask.eval(&[model], &fs) == 0 {
                    continue;
                }
            }
            let mut feat = vec![0.0; model.pos_dim()];
            model.encode_into(smp.tet, &smp.bary, &mut feat);
            let (mut raw, mut sigma) = ([0.0], [0.0]);
            net.forward(&feat, &mut hidden, &mut raw, &mut sigma);
            merged.push(MergedSample {
                t: seg.t_at(smp.alpha_mid()) / s,
                instance: k,
                sigma: sigma[0],
                delta: smp.d_alpha * seg.l1_length(),
                feat,
            });
        }
    }
    merged.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.instance.cmp(&b.instance)));

    let n = scene.instances.len();
    let mut trans = 1.0;
    let mut premult = [0.0; 3];
    let mut sums: Vec<Vec<f64>> = scene.instances.iter().map(|i| vec![0.0; i.model.pos_dim()]).collect();
    let mut opacity = vec![0.0; n];
    for smp in &merged {
        let e = (-smp.sigma * smp.delta).exp();
        let w = trans * (1.0 - e);
        trans *= e;
        if w == 0.0 {
            continue;
        }
        let k = smp.instance;
        match opts.mode {
            RenderMode::DecodeFirst => {
                let c = radiance(&scene.instances[k].model, &smp.feat, &dir_feats[k]);
                for j in 0..3 {
                    premult[j] += w * c[j];
                }
            }
            RenderMode::EarlyIntegration => {
                opacity[k] += w;
                for (g, f) in sums[k].iter_mut().zip(&smp.feat) {
                    *g += w * f;
                }
            }
        }
    }
    if opts.mode == RenderMode::EarlyIntegration {
        for k in 0..n {
            let a = opacity[k];
            if a <= MIN_OPACITY {
                continue;
            }
            sums[k].iter_mut().for_each(|g| *g /= a);
            let c = radiance(&scene.instances[k].model, &sums[k], &dir_feats[k]);
            for j in 0..3 {
                premult[j] += a * c[j];
            }
        }
    }
    let mut rgb = [0.0; 3];
    for j in 0..3 {
        rgb[j] = premult[j] + trans * opts.background[j];
    }
    RayOutput {
        rgb,
        premult,
        transmittance: trans,
    }
}

pub fn compose_image(scene: &CompositeScene, camera: &Camera, opts: &RenderOptions) -> Image {
    render_pixels(camera.width, camera.height, opts.threads, |x, y, _| {
        compose_ray(scene, &camera.ray(x, y), opts).rgb.map(|v| v.clamp(0.0, 1.0))
    })
}
