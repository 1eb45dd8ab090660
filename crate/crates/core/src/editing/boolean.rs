//! Binary fields over samples and masked rendering.
//!
//! A field maps each sample to 0 or 1. Rendering multiplies every sample's
//! density by the field, so samples outside the field vanish while the
//! rest composite as before.

use super::EditError;
use crate::geometry::{Bary4, Ray, Vec3};
use crate::model::ImpostorModel;
use crate::rendering::{render_pixels, Camera, Image, RayOutput, RayWorkspace, RenderOptions};
use crate::sampling::TetSample;

/// Density threshold of model leaves unless set explicitly.
pub const DEFAULT_EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersection,
    Difference,
    Xor,
}

impl BoolOp {
    pub const ALL: [BoolOp; 4] = [BoolOp::Union, BoolOp::Intersection, BoolOp::Difference, BoolOp::Xor];

    /// Combines two statuses: `a + b - ab`, `ab`, `a - ab` or `(a + b) mod 2`.
    pub fn apply(self, a: u8, b: u8) -> u8 {
        debug_assert!(a <= 1 && b <= 1);
        match self {
            BoolOp::Union => a + b - a * b,
            BoolOp::Intersection => a * b,
            BoolOp::Difference => a - a * b,
            BoolOp::Xor => (a + b) % 2,
        }
    }
}

impl std::str::FromStr for BoolOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "union" => Ok(BoolOp::Union),
            "intersect" | "intersection" => Ok(BoolOp::Intersection),
            "diff" | "difference" => Ok(BoolOp::Difference),
            "xor" => Ok(BoolOp::Xor),
            _ => Err(format!("unknown boolean operation '{s}'")),
        }
    }
}

/// Greyscale stamp projected along a world axis. World coordinates
/// `[min, max]` on the two remaining axes map onto the image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageMask {
    pub image: Image,
    /// Projection axis, 0 to 2.
    pub axis: usize,
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl ImageMask {
    fn status(&self, p: &Vec3) -> u8 {
        let (u, v) = match self.axis {
            0 => (p.y, p.z),
            1 => (p.x, p.z),
            _ => (p.x, p.y),
        };
        let fu = (u - self.min[0]) / (self.max[0] - self.min[0]);
        let fv = (self.max[1] - v) / (self.max[1] - self.min[1]);
        if !(0.0..1.0).contains(&fu) || !(0.0..1.0).contains(&fv) {
            return 0;
        }
        let x = ((fu * self.image.width as f64) as usize).min(self.image.width - 1);
        let y = ((fv * self.image.height as f64) as usize).min(self.image.height - 1);
        let c = self.image.get(x, y);
        u8::from((c[0] + c[1] + c[2]) / 3.0 > 0.5)
    }
}

/// Expression tree over sample predicates.
#[derive(Debug, Clone, PartialEq)]
pub enum BooleanField {
    Const(bool),
    /// `[density > eps]` of model `model` in the evaluation context.
    Density { model: usize, eps: f64 },
    Sphere { center: Vec3, radius: f64 },
    Box { min: Vec3, max: Vec3 },
    Mask(ImageMask),
    Not(Box<BooleanField>),
    Combine(BoolOp, Box<BooleanField>, Box<BooleanField>),
}

/// Where a field is evaluated: a world point and, for samples of a model,
/// the model index and the sample's barycentric address.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub world: Vec3,
    pub source: Option<(usize, usize, Bary4)>,
}

impl FieldSample {
    pub fn at(world: Vec3) -> Self {
        FieldSample { world, source: None }
    }
}

impl BooleanField {
    pub fn combine(self, op: BoolOp, other: BooleanField) -> BooleanField {
        BooleanField::Combine(op, Box::new(self), Box::new(other))
    }

    pub fn complement(self) -> BooleanField {
        BooleanField::Not(Box::new(self))
    }

    pub fn eval(&self, models: &[&ImpostorModel], s: &FieldSample) -> u8 {
        match self {
            BooleanField::Const(b) => u8::from(*b),
            BooleanField::Density { model, eps } => {
                let m = models[*model];
                let sigma = match s.source {
                    Some((k, tet, bary)) if k == *model => m.density_at(tet, &bary),
                    _ => match m.mesh.locate_point(&s.world) {
                        Some((tet, bary)) => m.density_at(tet, &bary),
                        None => 0.0,
                    },
                };
                u8::from(sigma > *eps)
            }
            BooleanField::Sphere { center, radius } => u8::from((s.world - center).norm() <= *radius),
            BooleanField::Box { min, max } => {
                u8::from((0..3).all(|k| s.world[k] >= min[k] && s.world[k] <= max[k]))
            }
            BooleanField::Mask(m) => m.status(&s.world),
            BooleanField::Not(a) => 1 - a.eval(models, s),
            BooleanField::Combine(op, a, b) => op.apply(a.eval(models, s), b.eval(models, s)),
        }
    }

    /// Largest model index referenced by a density leaf.
    pub fn max_model(&self) -> Option<usize> {
        match self {
            BooleanField::Density { model, .. } => Some(*model),
            BooleanField::Not(a) => a.max_model(),
            BooleanField::Combine(_, a, b) => a.max_model().max(b.max_model()),
            _ => None,
        }
    }

    pub fn check_models(&self, count: usize) -> Result<(), EditError> {
        match self.max_model() {
            Some(m) if m >= count => Err(EditError::MissingModel(m, count)),
            _ => Ok(()),
        }
    }
}

/// 1 when the decoded density at the sample exceeds `eps`.
pub fn boolean_status(model: &ImpostorModel, tet: usize, bary: &Bary4, eps: f64) -> u8 {
    u8::from(model.density_at(tet, bary) > eps)
}

/// Renders `models[target]` with every sample's density multiplied by
/// `field`.
pub fn render_with_boolean(
    models: &[&ImpostorModel],
    target: usize,
    field: &BooleanField,
    ray: &Ray,
    opts: &RenderOptions,
    ws: &mut RayWorkspace,
) -> RayOutput {
    let model = models[target];
    let mask = |s: &TetSample| {
        let world = model
            .mesh
            .point_from_barycentric(s.tet, &s.bary)
            .expect("sample tet in range");
        let fs = FieldSample {
            world,
            source: Some((target, s.tet, s.bary)),
        };
        field.eval(models, &fs) as f64
    };
    ws.forward(model, ray, &ray.dir, opts, Some(&mask))
}

pub fn render_boolean_image(
    models: &[&ImpostorModel],
    target: usize,
    field: &BooleanField,
    camera: &Camera,
    opts: &RenderOptions,
) -> Result<Image, EditError> {
    field.check_models(models.len())?;
    if target >= models.len() {
        return Err(EditError::MissingModel(target, models.len()));
    }
    Ok(render_pixels(camera.width, camera.height, opts.threads, |x, y, ws| {
        let rgb = render_with_boolean(models, target, field, &camera.ray(x, y), opts, ws).rgb;
        rgb.map(|v| v.clamp(0.0, 1.0))
    }))
}
