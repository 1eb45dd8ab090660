//! The `NIMP01` model container.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic            6 bytes  "NIMP01"
//! log2_table_size  u32
//! per_tet_log2     u32
//! levels           u32
//! features         u32
//! max_resolution   u32
//! sh_degree        u32
//! radiance_output  u8       0 sigmoid, 1 exp, 2 identity
//! density_hidden   u32 count, then u32 widths
//! radiance_hidden  u32 count, then u32 widths
//! vertices         u64 count, then 3 f64 each
//! tets             u64 count, then 4 u32 each
//! table            u64 count, then f32 values
//! density params   u64 count, then f32 values
//! radiance params  u64 count, then f32 values
//! ```
//!
//! Trainable values are stored as 32-bit floats; mesh vertices keep full
//! precision.

use std::path::Path;

use super::{read_file, write_file, FormatError};
use crate::decoders::{layer_sizes, DecoderParams, OutputTransform};
use crate::encoding::{FeatureTable, HashLayout, MAX_SH_DEGREE};
use crate::geometry::{TetMesh, Vec3};
use crate::model::{ImpostorModel, ModelConfig};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"NIMP01";

const MAX_HIDDEN_LAYERS: usize = 16;
const MAX_WIDTH: usize = 4096;

fn output_code(t: OutputTransform) -> u8 {
    match t {
        OutputTransform::Sigmoid => 0,
        OutputTransform::Exp => 1,
        OutputTransform::Identity => 2,
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        self.0.extend((v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: usize) {
        self.0.extend((v as u64).to_le_bytes());
    }
    fn f32s(&mut self, v: &[f64]) {
        self.u64(v.len());
        for x in v {
            self.0.extend((*x as f32).to_le_bytes());
        }
    }
}

pub fn encode_checkpoint(model: &ImpostorModel) -> Vec<u8> {
    let c = &model.config;
    let mut w = Writer(CHECKPOINT_MAGIC.to_vec());
    w.u32(c.log2_table_size as usize);
    w.u32(model.layout.per_tet_log2 as usize);
    w.u32(c.levels);
    w.u32(c.features);
    w.u32(c.max_resolution as usize);
    w.u32(c.sh_degree);
    w.0.push(output_code(c.radiance_output));
    for hidden in [&c.density_hidden, &c.radiance_hidden] {
        w.u32(hidden.len());
        for &h in hidden.iter() {
            w.u32(h);
        }
    }
    let verts = model.mesh.vertices();
    w.u64(verts.len());
    for v in verts {
        for x in v.iter() {
            w.0.extend(x.to_le_bytes());
        }
    }
    w.u64(model.mesh.num_tets());
    for t in model.mesh.tets() {
        for &i in t {
            w.u32(i);
        }
    }
    w.f32s(&model.table.values);
    w.f32s(&model.decoders.density.params);
    w.f32s(&model.decoders.radiance.params);
    w.0
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], FormatError> {
        if self.bytes.len() - self.pos < n {
            return Err(FormatError::invalid(format!("checkpoint truncated in {what}")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, FormatError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    /// A count whose `elem`-byte payload must fit in the remaining bytes.
    fn count(&mut self, elem: usize, what: &str) -> Result<usize, FormatError> {
        let n = u64::from_le_bytes(self.take(8, what)?.try_into().unwrap());
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n.checked_mul(elem as u64).map_or(true, |b| b > remaining) {
            return Err(FormatError::invalid(format!("checkpoint {what} count {n} exceeds file size")));
        }
        Ok(n as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f32s(&mut self, expected: usize, what: &str) -> Result<Vec<f64>, FormatError> {
        let n = self.count(4, what)?;
        if n != expected {
            return Err(FormatError::invalid(format!("checkpoint {what}: expected {expected} values, found {n}")));
        }
        let raw = self.take(4 * n, what)?;
        let vals: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if vals.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(FormatError::invalid(format!("checkpoint {what} contains NaN or +inf")));
        }
        Ok(vals)
    }

    fn hidden(&mut self, what: &str) -> Result<Vec<usize>, FormatError> {
        let n = self.u32(what)? as usize;
        if n > MAX_HIDDEN_LAYERS {
            return Err(FormatError::invalid(format!("checkpoint {what}: {n} hidden layers")));
        }
        (0..n)
            .map(|_| {
                let w = self.u32(what)? as usize;
                if w == 0 || w > MAX_WIDTH {
                    return Err(FormatError::invalid(format!("checkpoint {what}: width {w}")));
                }
                Ok(w)
            })
            .collect()
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> crate::Result<ImpostorModel> {
    if bytes.len() < CHECKPOINT_MAGIC.len() || &bytes[..CHECKPOINT_MAGIC.len()] != CHECKPOINT_MAGIC {
        return Err(FormatError::invalid("not an NIMP01 checkpoint").into());
    }
    let mut r = Reader {
        bytes,
        pos: CHECKPOINT_MAGIC.len(),
    };
    let log2_table_size = r.u32("header")?;
    let per_tet_log2 = r.u32("header")?;
    let levels = r.u32("header")? as usize;
    let features = r.u32("header")? as usize;
    let max_resolution = r.u32("header")?;
    let sh_degree = r.u32("header")? as usize;
    let radiance_output = match r.u8("header")? {
        0 => OutputTransform::Sigmoid,
        1 => OutputTransform::Exp,
        2 => OutputTransform::Identity,
        k => return Err(FormatError::invalid(format!("unknown radiance output code {k}")).into()),
    };
    if !(1..=MAX_SH_DEGREE).contains(&sh_degree) {
        return Err(FormatError::invalid(format!("unsupported direction degree {sh_degree}")).into());
    }
    if levels == 0 || levels > 64 || features == 0 || features > 64 {
        return Err(FormatError::invalid("unsupported level or feature count").into());
    }
    let density_hidden = r.hidden("density layers")?;
    let radiance_hidden = r.hidden("radiance layers")?;

    let nv = r.count(24, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(Vec3::new(r.f64("vertices")?, r.f64("vertices")?, r.f64("vertices")?));
    }
    let nt = r.count(16, "tets")?;
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let mut t = [0usize; 4];
        for x in &mut t {
            *x = r.u32("tets")? as usize;
        }
        tets.push(t);
    }
    let mesh = TetMesh::build(vertices, tets)?;

    let config = ModelConfig {
        log2_table_size,
        levels,
        features,
        max_resolution,
        sh_degree,
        density_hidden,
        radiance_hidden,
        radiance_output,
    };
    let layout = HashLayout::with_per_tet_log2(
        mesh.num_tets(),
        log2_table_size,
        per_tet_log2,
        levels,
        features,
        max_resolution,
    )
    .map_err(|e| FormatError::invalid(format!("checkpoint layout: {e}")))?;
    let param_count = |sizes: Vec<usize>| sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum::<usize>();
    let needed = layout.total_slots() * features
        + param_count(layer_sizes(layout.output_dim(), &config.density_hidden, 1))
        + param_count(layer_sizes(layout.output_dim() + config.dir_dim(), &config.radiance_hidden, 3));
    if needed.saturating_mul(4) > bytes.len() - r.pos {
        return Err(FormatError::invalid("checkpoint parameter block truncated").into());
    }
    let mut decoders = DecoderParams::zeros(
        layout.output_dim(),
        config.dir_dim(),
        &config.density_hidden,
        &config.radiance_hidden,
        radiance_output,
    );
    let table = FeatureTable {
        values: r.f32s(layout.total_slots() * features, "table")?,
        features,
    };
    decoders.density.params = r.f32s(decoders.density.num_params(), "density params")?;
    decoders.radiance.params = r.f32s(decoders.radiance.num_params(), "radiance params")?;
    if r.pos != bytes.len() {
        return Err(FormatError::invalid("trailing bytes after checkpoint").into());
    }
    Ok(ImpostorModel {
        config,
        mesh,
        layout,
        table,
        decoders,
    })
}

pub fn write_checkpoint(path: &Path, model: &ImpostorModel) -> Result<(), FormatError> {
    write_file(path, &encode_checkpoint(model))
}

pub fn read_checkpoint(path: &Path) -> crate::Result<ImpostorModel> {
    decode_checkpoint(&read_file(path)?)
}
