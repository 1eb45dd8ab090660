//! Barycentric step sampling along rays.
//!
//! Steps are measured in the per-segment interpolation weight `alpha`
//! rather than world distance, so the sample pattern of a ray only depends
//! on which tetrahedra it crosses and not on their size. The step grows with
//! the distance already travelled:
//!
//! ```text
//! step[i+1] = step[i] + cone_angle * travelled[i]
//! travelled[i] = step[0] + ... + step[i]
//! ```
//!
//! where `travelled` accumulates across every segment of the ray, starting
//! at the entry into the first tetrahedron.

use thiserror::Error;

use crate::geometry::{Bary4, Ray, TetMesh, TetSegment, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("cone angle must lie in [0, 1), got {0}")]
    ConeAngle(f64),
    #[error("base step must lie in (0, 1], got {0}")]
    BaseStep(f64),
    #[error("max samples per ray must be positive")]
    MaxSamples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerParams {
    pub cone_angle: f64,
    pub base_step: f64,
    pub max_samples: usize,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams {
            cone_angle: 0.01,
            base_step: 0.05,
            max_samples: 512,
        }
    }
}

impl SamplerParams {
    pub fn new(cone_angle: f64, base_step: f64, max_samples: usize) -> Result<Self, SamplingError> {
        let p = SamplerParams {
            cone_angle,
            base_step,
            max_samples,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if !(0.0..1.0).contains(&self.cone_angle) {
            return Err(SamplingError::ConeAngle(self.cone_angle));
        }
        if !(self.base_step > 0.0 && self.base_step <= 1.0) {
            return Err(SamplingError::BaseStep(self.base_step));
        }
        if self.max_samples == 0 {
            return Err(SamplingError::MaxSamples);
        }
        Ok(())
    }
}

/// One sample inside one tetrahedron crossing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetSample {
    pub tet: usize,
    /// Weights at the midpoint of the sample interval.
    pub bary: Bary4,
    /// End of the sample interval, as a fraction of the segment.
    pub alpha: f64,
    /// Length of the sample interval in `alpha`.
    pub d_alpha: f64,
    pub dir: Vec3,
    /// Index of the owning segment.
    pub segment: usize,
}

impl TetSample {
    pub fn alpha_mid(&self) -> f64 {
        self.alpha - 0.5 * self.d_alpha
    }
}

#[derive(Debug, Clone, Default)]
pub struct RaySamples {
    pub segments: Vec<TetSegment>,
    pub samples: Vec<TetSample>,
}

/// First `n` nominal steps of the recurrence, ignoring segment clamping.
pub fn step_sequence(params: &SamplerParams, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut step = params.base_step;
    let mut travelled = 0.0;
    for _ in 0..n {
        out.push(step);
        travelled += step;
        step += params.cone_angle * travelled;
    }
    out
}

/// Places samples over an ordered list of segments.
pub fn sample_segments(segments: &[TetSegment], dir: Vec3, params: &SamplerParams) -> Vec<TetSample> {
    let mut samples = Vec::new();
    let mut step = params.base_step;
    let mut travelled = 0.0;
    for (si, seg) in segments.iter().enumerate() {
        let mut alpha = 0.0;
        loop {
            if samples.len() >= params.max_samples {
                return samples;
            }
            let mut end = alpha + step;
            if end >= 1.0 - 1e-12 {
                end = 1.0;
            }
            let d = end - alpha;
            samples.push(TetSample {
                tet: seg.tet,
                bary: seg.bary_at(alpha + 0.5 * d),
                alpha: end,
                d_alpha: d,
                dir,
                segment: si,
            });
            travelled += d;
            step += params.cone_angle * travelled;
            alpha = end;
            if end >= 1.0 {
                break;
            }
        }
    }
    samples
}

/// Traverses the mesh from the ray origin and samples every crossing.
pub fn sample_ray(mesh: &TetMesh, ray: &Ray, params: &SamplerParams) -> RaySamples {
    let segments = mesh.intersect_ray(ray, 0.0, f64::INFINITY);
    let samples = sample_segments(&segments, ray.dir, params);
    RaySamples { segments, samples }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_segment() -> Vec<TetSegment> {
        vec![TetSegment {
            tet: 0,
            t_in: 1.0,
            t_out: 1.8,
            bary_in: Bary4([0.8, 0.0, 0.1, 0.1]),
            bary_out: Bary4([0.0, 0.8, 0.1, 0.1]),
        }]
    }

    #[test]
    fn zero_cone_angle_is_uniform() {
        let p = SamplerParams::new(0.0, 0.25, 512).unwrap();
        let s = sample_segments(&one_segment(), Vec3::x(), &p);
        let alphas: Vec<f64> = s.iter().map(|s| s.alpha).collect();
        assert_eq!(alphas, vec![0.25, 0.5, 0.75, 1.0]);
        assert!(s.iter().all(|s| s.d_alpha == 0.25));
    }

    #[test]
    fn recurrence_values() {
        let p = SamplerParams::new(0.5, 0.1, 512).unwrap();
        let steps = step_sequence(&p, 3);
        // 0.1 + 0.05 rounds to 0.15000000000000002, one ulp above the literal.
        for (got, want) in steps.iter().zip([0.1, 0.15, 0.275]) {
            assert!((got - want).abs() <= f64::EPSILON * want, "{got} vs {want}");
        }
        let s = sample_segments(&one_segment(), Vec3::x(), &p);
        assert_eq!(s[0].d_alpha, 0.1);
        assert!((s[1].d_alpha - 0.15).abs() < 1e-15);
        assert!((s[2].d_alpha - 0.275).abs() < 1e-15);
        assert!((s[2].alpha - 0.525).abs() < 1e-15);
    }

    #[test]
    fn full_step_gives_single_clamped_sample() {
        let p = SamplerParams::new(0.0, 1.0, 512).unwrap();
        let s = sample_segments(&one_segment(), Vec3::x(), &p);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].alpha, 1.0);
        assert_eq!(s[0].d_alpha, 1.0);
    }

    #[test]
    fn sample_cap() {
        let p = SamplerParams::new(0.0, 0.01, 7).unwrap();
        assert_eq!(sample_segments(&one_segment(), Vec3::x(), &p).len(), 7);
    }

    #[test]
    fn invalid_params() {
        assert!(SamplerParams::new(1.0, 0.1, 10).is_err());
        assert!(SamplerParams::new(0.1, 0.0, 10).is_err());
        assert!(SamplerParams::new(0.1, 1.5, 10).is_err());
        assert!(SamplerParams::new(0.1, 0.1, 0).is_err());
    }

    #[test]
    fn midpoint_barycentrics_follow_forward_convention() {
        let p = SamplerParams::new(0.0, 0.5, 512).unwrap();
        let s = sample_segments(&one_segment(), Vec3::x(), &p);
        // First interval [0, 0.5], midpoint 0.25 from the entry.
        let want = Bary4([0.6, 0.2, 0.1, 0.1]);
        for k in 0..4 {
            assert!((s[0].bary[k] - want[k]).abs() < 1e-15);
        }
    }
}
