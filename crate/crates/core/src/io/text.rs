//! Line-oriented text formats.
//!
//! ```text
//! tetmesh <nv> <nt>        frame <nv>
//! v <x> <y> <z>            v <x> <y> <z>
//! t <i0> <i1> <i2> <i3>
//! cam <px> <py> <pz> <r00> ... <r22> <focal> <width> <height>
//! ```
//!
//! Blank lines and `#` comments are ignored. Indices are 0-based and the
//! camera rotation is row-major, mapping camera axes to world axes.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Matrix3;

use super::{content_lines, parse_f64, parse_usize, read_text, write_file, FormatError};
use crate::geometry::{TetMesh, Vec3};
use crate::rendering::Camera;

fn parse_vertex(toks: &[&str], line: usize) -> Result<Vec3, FormatError> {
    if toks.len() != 4 || toks[0] != "v" {
        return Err(FormatError::parse(line, "expected 'v x y z'"));
    }
    Ok(Vec3::new(
        parse_f64(toks[1], line)?,
        parse_f64(toks[2], line)?,
        parse_f64(toks[3], line)?,
    ))
}

/// Vertices and tetrahedra of a `tetmesh` file, unvalidated geometrically.
pub fn parse_tetmesh(s: &str) -> Result<(Vec<Vec3>, Vec<[usize; 4]>), FormatError> {
    let lines: Vec<(usize, &str)> = content_lines(s).collect();
    let (hl, header) = *lines.first().ok_or_else(|| FormatError::invalid("empty mesh file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 3 || h[0] != "tetmesh" {
        return Err(FormatError::parse(hl, "expected 'tetmesh <nv> <nt>'"));
    }
    let nv = parse_usize(h[1], hl)?;
    let nt = parse_usize(h[2], hl)?;
    let body = &lines[1..];
    if nv.checked_add(nt) != Some(body.len()) {
        return Err(FormatError::parse(
            hl,
            format!("header announces {nv} vertices and {nt} tets, file has {} records", body.len()),
        ));
    }
    let mut vertices = Vec::with_capacity(nv);
    for &(ln, l) in &body[..nv] {
        let toks: Vec<&str> = l.split_whitespace().collect();
        vertices.push(parse_vertex(&toks, ln)?);
    }
    let mut tets = Vec::with_capacity(nt);
    for &(ln, l) in &body[nv..] {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 5 || toks[0] != "t" {
            return Err(FormatError::parse(ln, "expected 't i0 i1 i2 i3'"));
        }
        let mut t = [0usize; 4];
        for k in 0..4 {
            t[k] = parse_usize(toks[k + 1], ln)?;
            if t[k] >= nv {
                return Err(FormatError::parse(ln, format!("vertex index {} out of range", t[k])));
            }
        }
        tets.push(t);
    }
    Ok((vertices, tets))
}

pub fn write_tetmesh(mesh: &TetMesh) -> String {
    let mut s = format!("tetmesh {} {}\n", mesh.vertices().len(), mesh.num_tets());
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in mesh.tets() {
        let _ = writeln!(s, "t {} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    s
}

/// Reads and builds a mesh.
pub fn read_tetmesh(path: &Path) -> crate::Result<TetMesh> {
    let (v, t) = parse_tetmesh(&read_text(path)?)?;
    Ok(TetMesh::build(v, t)?)
}

pub fn parse_frame(s: &str) -> Result<Vec<Vec3>, FormatError> {
    let lines: Vec<(usize, &str)> = content_lines(s).collect();
    let (hl, header) = *lines.first().ok_or_else(|| FormatError::invalid("empty frame file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 2 || h[0] != "frame" {
        return Err(FormatError::parse(hl, "expected 'frame <nv>'"));
    }
    let nv = parse_usize(h[1], hl)?;
    if nv != lines.len() - 1 {
        return Err(FormatError::parse(
            hl,
            format!("header announces {nv} vertices, file has {}", lines.len() - 1),
        ));
    }
    lines[1..]
        .iter()
        .map(|&(ln, l)| parse_vertex(&l.split_whitespace().collect::<Vec<_>>(), ln))
        .collect()
}

pub fn write_frame(vertices: &[Vec3]) -> String {
    let mut s = format!("frame {}\n", vertices.len());
    for v in vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    s
}

pub fn read_frame(path: &Path) -> Result<Vec<Vec3>, FormatError> {
    parse_frame(&read_text(path)?)
}

pub fn parse_cameras(s: &str) -> Result<Vec<Camera>, FormatError> {
    let mut out = Vec::new();
    for (ln, l) in content_lines(s) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 16 || toks[0] != "cam" {
            return Err(FormatError::parse(
                ln,
                "expected 'cam px py pz r00 r01 r02 r10 r11 r12 r20 r21 r22 focal width height'",
            ));
        }
        let mut n = [0.0; 13];
        for k in 0..13 {
            n[k] = parse_f64(toks[k + 1], ln)?;
        }
        let w = parse_usize(toks[14], ln)?;
        let h = parse_usize(toks[15], ln)?;
        if w.saturating_mul(h) > 1 << 26 {
            return Err(FormatError::parse(ln, "image too large"));
        }
        let rot = Matrix3::from_row_slice(&n[3..12]);
        let cam = Camera::new(Vec3::new(n[0], n[1], n[2]), rot, n[12], w, h)
            .map_err(|e| FormatError::parse(ln, e.to_string()))?;
        out.push(cam);
    }
    Ok(out)
}

pub fn write_cameras(cams: &[Camera]) -> String {
    let mut s = String::new();
    for c in cams {
        let p = c.position;
        let r = c.rotation;
        let _ = write!(s, "cam {} {} {}", p.x, p.y, p.z);
        for i in 0..3 {
            for j in 0..3 {
                let _ = write!(s, " {}", r[(i, j)]);
            }
        }
        let _ = writeln!(s, " {} {} {}", c.focal, c.width, c.height);
    }
    s
}

pub fn read_cameras(path: &Path) -> Result<Vec<Camera>, FormatError> {
    parse_cameras(&read_text(path)?)
}

pub(crate) fn save_text(path: &Path, s: &str) -> Result<(), FormatError> {
    write_file(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_round_trip() {
        let src = "# unit tet\ntetmesh 4 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\n\nv 0 0 1\nt 0 1 2 3\n";
        let (v, t) = parse_tetmesh(src).unwrap();
        let mesh = TetMesh::build(v, t).unwrap();
        let again = parse_tetmesh(&write_tetmesh(&mesh)).unwrap();
        assert_eq!(again.0, mesh.vertices());
        assert_eq!(again.1, mesh.tets());
    }

    #[test]
    fn mesh_errors_carry_line_numbers() {
        let e = parse_tetmesh("tetmesh 1 1\nv 0 0 x\nt 0 0 0 0\n").unwrap_err();
        assert!(matches!(e, FormatError::Parse { line: 2, .. }));
        assert!(parse_tetmesh("tetmesh 4 1\nv 0 0 0\n").is_err());
        assert!(parse_tetmesh("tetmesh 1 1\nv 0 0 0\nt 0 0 0 1\n").is_err());
        assert!(parse_tetmesh("").is_err());
        assert!(parse_tetmesh("tetmesh 1 0\nv nan 0 0\n").is_err());
    }

    #[test]
    fn frame_round_trip() {
        let v = vec![Vec3::new(0.5, -1.25, 3.0), Vec3::new(1e-300, 2.0, 0.1)];
        assert_eq!(parse_frame(&write_frame(&v)).unwrap(), v);
        assert!(parse_frame("frame 2\nv 0 0 0\n").is_err());
    }

    #[test]
    fn camera_round_trip() {
        let c = Camera::look_at(Vec3::new(3.0, 1.0, 0.5), Vec3::zeros(), Vec3::z(), 70.0, 64, 48).unwrap();
        let back = parse_cameras(&write_cameras(&[c, c])).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], c);
        assert!(parse_cameras("cam 0 0 0 2 0 0 0 1 0 0 0 1 10 4 4").is_err());
        assert!(parse_cameras("cam 0 0 0").is_err());
    }
}
