use super::EditError;
use crate::geometry::Vec3;
use crate::model::ImpostorModel;

/// The same model on moved vertices. Feature tables and decoders are
/// shared unchanged, so every `(tet, barycentric)` sample decodes exactly as
/// before; only where samples land in space changes.
pub fn deform(model: &ImpostorModel, vertices: Vec<Vec3>) -> Result<ImpostorModel, EditError> {
    let mesh = model.mesh.with_vertices(vertices)?;
    Ok(ImpostorModel {
        mesh,
        ..model.clone()
    })
}

/// Per-vertex linear interpolation, `s = 0` giving `a` and `s = 1` giving `b`.
pub fn interpolate_vertices(a: &[Vec3], b: &[Vec3], s: f64) -> Vec<Vec3> {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| p + s * (q - p)).collect()
}
