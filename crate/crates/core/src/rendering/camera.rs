use nalgebra::{Matrix3, Rotation3};

use super::RenderError;
use crate::geometry::{Ray, Vec3};

/// Pinhole camera. `rotation` maps camera axes (x right, y down, z forward)
/// to world axes, so its columns are the right, down and forward vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub position: Vec3,
    pub rotation: Matrix3<f64>,
    /// Focal length in pixels.
    pub focal: f64,
    pub width: usize,
    pub height: usize,
    /// Principal point in pixels.
    pub cx: f64,
    pub cy: f64,
}

impl Camera {
    /// Camera with the principal point at the image centre.
    pub fn new(position: Vec3, rotation: Matrix3<f64>, focal: f64, width: usize, height: usize) -> Result<Self, RenderError> {
        let cam = Camera {
            position,
            rotation,
            focal,
            width,
            height,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Camera at `eye` looking at `target`, with `up` pointing up in the image.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, focal: f64, width: usize, height: usize) -> Result<Self, RenderError> {
        let forward = (target - eye).try_normalize(1e-12).ok_or(RenderError::InvalidCamera("eye equals target"))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or(RenderError::InvalidCamera("up is parallel to the view direction"))?;
        let down = forward.cross(&right);
        Self::new(eye, Matrix3::from_columns(&[right, down, forward]), focal, width, height)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidCamera("image size must be positive"));
        }
        if !(self.focal > 0.0 && self.focal.is_finite()) {
            return Err(RenderError::InvalidCamera("focal length must be positive"));
        }
        if !self.position.iter().all(|x| x.is_finite()) {
            return Err(RenderError::InvalidCamera("non-finite position"));
        }
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        if !(err <= 1e-9) || self.rotation.determinant() < 0.0 {
            return Err(RenderError::InvalidCamera("rotation is not orthonormal"));
        }
        Ok(())
    }

    /// Ray through the centre of pixel `(x, y)`.
    pub fn ray(&self, x: usize, y: usize) -> Ray {
        let d = Vec3::new(
            (x as f64 + 0.5 - self.cx) / self.focal,
            (y as f64 + 0.5 - self.cy) / self.focal,
            1.0,
        );
        Ray::through(self.position, self.rotation * d)
    }

    /// The same camera after rotating the whole scene frame about `axis`
    /// through the origin.
    pub fn rotated_about(&self, axis: &Vec3, angle: f64) -> Camera {
        let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
        Camera {
            position: r * self.position,
            rotation: r.matrix() * self.rotation,
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn look_at_points_centre_ray_at_target() {
        let c = Camera::look_at(Vec3::new(3.0, 0.0, 0.0), Vec3::zeros(), Vec3::z(), 50.0, 4, 4).unwrap();
        let r = c.ray(2, 2);
        let centre = Ray::through(c.position, c.rotation * Vec3::z());
        assert!((centre.dir - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!(r.dir.x < 0.0);
        // Image up is world +z, so rows further down look further down.
        assert!(c.ray(1, 3).dir.z < c.ray(1, 0).dir.z);
    }

    #[test]
    fn rejects_bad_cameras() {
        assert!(Camera::look_at(Vec3::zeros(), Vec3::zeros(), Vec3::z(), 10.0, 4, 4).is_err());
        assert!(Camera::look_at(Vec3::x(), Vec3::zeros(), Vec3::x(), 10.0, 4, 4).is_err());
        assert!(Camera::new(Vec3::zeros(), Matrix3::identity() * 2.0, 10.0, 4, 4).is_err());
        assert!(Camera::new(Vec3::zeros(), Matrix3::identity(), 0.0, 4, 4).is_err());
        assert!(Camera::new(Vec3::zeros(), Matrix3::identity(), 10.0, 0, 4).is_err());
    }
}
