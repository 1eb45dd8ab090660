use super::EncodingError;
use crate::geometry::Vec3;

/// Highest supported degree (number of bands).
pub const MAX_SH_DEGREE: usize = 4;

/// Real spherical-harmonic features of a direction, `degree^2` values in
/// `(l, m)` order with `m` running from `-l` to `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirFeature(pub Vec<f64>);

/// Checked evaluation of the first `degree` bands.
pub fn encode_direction(dir: &Vec3, degree: usize) -> Result<DirFeature, EncodingError> {
    if !(1..=MAX_SH_DEGREE).contains(&degree) {
        return Err(EncodingError::InvalidDegree(degree));
    }
    let n = dir.norm();
    if (n - 1.0).abs() > 1e-9 {
        return Err(EncodingError::NonUnitDirection(n));
    }
    let mut out = vec![0.0; degree * degree];
    sh_basis(dir, degree, &mut out);
    Ok(DirFeature(out))
}

/// Orthonormal real basis without the Condon-Shortley phase. Writes
/// `degree^2` values into `out`; `dir` is assumed unit length.
pub fn sh_basis(dir: &Vec3, degree: usize, out: &mut [f64]) {
    let (x, y, z) = (dir.x, dir.y, dir.z);
    out[0] = 0.28209479177387814;
    if degree < 2 {
        return;
    }
    out[1] = 0.4886025119029199 * y;
    out[2] = 0.4886025119029199 * z;
    out[3] = 0.4886025119029199 * x;
    if degree < 3 {
        return;
    }
    let (xx, yy, zz) = (x * x, y * y, z * z);
    out[4] = 1.0925484305920792 * x * y;
    out[5] = 1.0925484305920792 * y * z;
    out[6] = 0.31539156525252005 * (3.0 * zz - 1.0);
    out[7] = 1.0925484305920792 * x * z;
    out[8] = 0.5462742152960396 * (xx - yy);
    if degree < 4 {
        return;
    }
    out[9] = 0.5900435899266435 * y * (3.0 * xx - yy);
    out[10] = 2.890611442640554 * x * y * z;
    out[11] = 0.4570457994644658 * y * (5.0 * zz - 1.0);
    out[12] = 0.3731763325901154 * z * (5.0 * zz - 3.0);
    out[13] = 0.4570457994644658 * x * (5.0 * zz - 1.0);
    out[14] = 1.445305721320277 * z * (xx - yy);
    out[15] = 0.5900435899266435 * x * (xx - 3.0 * yy);
}
