//! Line-oriented edit scripts and compose files.
//!
//! Edit script commands, one per line:
//!
//! ```text
//! deform <frame-file>
//! bool <union|intersect|diff|xor> <leaf>
//! blend <model.nimp> <mask-script>
//! eps <threshold>
//! ```
//!
//! where `<leaf>` is one of
//!
//! ```text
//! sphere <cx> <cy> <cz> <r>
//! box <x0> <y0> <z0> <x1> <y1> <z1>
//! density [eps]
//! mask <image.ppm> <x|y|z> <u0> <v0> <u1> <v1>
//! ```
//!
//! Compose files list one instance per line:
//!
//! ```text
//! instance <model.nimp> [translate x y z] [scale s] [rotate ax ay az deg] [affine m00 .. m23]
//! ```
//!
//! Transform clauses apply in the order written.

use std::path::PathBuf;

use super::boolean::{BoolOp, BooleanField, ImageMask};
use super::compose::Affine;
use crate::geometry::Vec3;
use crate::io::{content_lines, parse_f64, FormatError};
use crate::rendering::Image;

#[derive(Debug, Clone, PartialEq)]
pub enum LeafSpec {
    Sphere { center: Vec3, radius: f64 },
    Box { min: Vec3, max: Vec3 },
    /// Density of the edited model; threshold defaults to the script's `eps`.
    Density { eps: Option<f64> },
    Mask { image: PathBuf, axis: usize, min: [f64; 2], max: [f64; 2] },
}

impl LeafSpec {
    /// Builds the leaf. `model` is the index density leaves refer to;
    /// `image` must be given for mask leaves.
    pub fn to_field(&self, eps: f64, model: usize, image: Option<Image>) -> Result<BooleanField, FormatError> {
        Ok(match self {
            LeafSpec::Sphere { center, radius } => BooleanField::Sphere {
                center: *center,
                radius: *radius,
            },
            LeafSpec::Box { min, max } => BooleanField::Box { min: *min, max: *max },
            LeafSpec::Density { eps: own } => BooleanField::Density {
                model,
                eps: own.unwrap_or(eps),
            },
            LeafSpec::Mask { axis, min, max, .. } => BooleanField::Mask(ImageMask {
                image: image.ok_or_else(|| FormatError::invalid("mask leaf needs an image"))?,
                axis: *axis,
                min: *min,
                max: *max,
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EditCommand {
    Deform(PathBuf),
    Bool(BoolOp, LeafSpec),
    Blend { model: PathBuf, mask: PathBuf },
    Eps(f64),
}

fn numbers<const N: usize>(toks: &[&str], line: usize) -> Result<[f64; N], FormatError> {
    if toks.len() != N {
        return Err(FormatError::parse(line, format!("expected {N} numbers, got {}", toks.len())));
    }
    let mut out = [0.0; N];
    for (o, t) in out.iter_mut().zip(toks) {
        *o = parse_f64(t, line)?;
    }
    Ok(out)
}

fn parse_leaf(toks: &[&str], line: usize) -> Result<LeafSpec, FormatError> {
    let (kind, rest) = toks
        .split_first()
        .ok_or_else(|| FormatError::parse(line, "missing leaf"))?;
    match *kind {
        "sphere" => {
            let [x, y, z, r] = numbers::<4>(rest, line)?;
            if r < 0.0 {
                return Err(FormatError::parse(line, "negative sphere radius"));
            }
            Ok(LeafSpec::Sphere {
                center: Vec3::new(x, y, z),
                radius: r,
            })
        }
        "box" => {
            let v = numbers::<6>(rest, line)?;
            let (min, max) = (Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]));
            if (0..3).any(|k| min[k] > max[k]) {
                return Err(FormatError::parse(line, "box minimum exceeds maximum"));
            }
            Ok(LeafSpec::Box { min, max })
        }
        "density" => match rest {
            [] => Ok(LeafSpec::Density { eps: None }),
            [e] => Ok(LeafSpec::Density {
                eps: Some(parse_eps(e, line)?),
            }),
            _ => Err(FormatError::parse(line, "density takes at most one threshold")),
        },
        "mask" => {
            if rest.len() != 6 {
                return Err(FormatError::parse(line, "mask needs <image> <axis> <u0> <v0> <u1> <v1>"));
            }
            let axis = match rest[1] {
                "x" => 0,
                "y" => 1,
                "z" => 2,
                a => return Err(FormatError::parse(line, format!("unknown axis '{a}'"))),
            };
            let [u0, v0, u1, v1] = numbers::<4>(&rest[2..], line)?;
            if u0 >= u1 || v0 >= v1 {
                return Err(FormatError::parse(line, "empty mask extent"));
            }
            Ok(LeafSpec::Mask {
                image: PathBuf::from(rest[0]),
                axis,
                min: [u0, v0],
                max: [u1, v1],
            })
        }
        k => Err(FormatError::parse(line, format!("unknown leaf '{k}'"))),
    }
}

fn parse_eps(tok: &str, line: usize) -> Result<f64, FormatError> {
    let e = parse_f64(tok, line)?;
    if e < 0.0 {
        return Err(FormatError::parse(line, "negative threshold"));
    }
    Ok(e)
}

pub fn parse_script(s: &str) -> Result<Vec<EditCommand>, FormatError> {
    content_lines(s)
        .map(|(line, l)| {
            let toks: Vec<&str> = l.split_whitespace().collect();
            match toks[0] {
                "deform" if toks.len() == 2 => Ok(EditCommand::Deform(PathBuf::from(toks[1]))),
                "bool" if toks.len() >= 3 => {
                    let op = toks[1].parse().map_err(|e: String| FormatError::parse(line, e))?;
                    Ok(EditCommand::Bool(op, parse_leaf(&toks[2..], line)?))
                }
                "blend" if toks.len() == 3 => Ok(EditCommand::Blend {
                    model: PathBuf::from(toks[1]),
                    mask: PathBuf::from(toks[2]),
                }),
                "eps" if toks.len() == 2 => Ok(EditCommand::Eps(parse_eps(toks[1], line)?)),
                "deform" | "bool" | "blend" | "eps" => {
                    Err(FormatError::parse(line, format!("wrong argument count for '{}'", toks[0])))
                }
                c => Err(FormatError::parse(line, format!("unknown command '{c}'"))),
            }
        })
        .collect()
}

/// One `instance` line of a compose file.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub model: PathBuf,
    pub to_world: Affine,
}

pub fn parse_compose(s: &str) -> Result<Vec<InstanceSpec>, FormatError> {
    content_lines(s)
        .map(|(line, l)| {
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks[0] != "instance" || toks.len() < 2 {
                return Err(FormatError::parse(line, "expected 'instance <model> [transforms]'"));
            }
            let mut to_world = Affine::identity();
            let mut rest = &toks[2..];
            while let Some((kind, args)) = rest.split_first() {
                let (step, used) = match *kind {
                    "translate" => {
                        let [x, y, z] = numbers::<3>(args.get(..3).unwrap_or(args), line)?;
                        (Affine::translate(Vec3::new(x, y, z)), 3)
                    }
                    "scale" => {
                        let [s] = numbers::<1>(args.get(..1).unwrap_or(args), line)?;
                        (Affine::scale(s), 1)
                    }
                    "rotate" => {
                        let [x, y, z, deg] = numbers::<4>(args.get(..4).unwrap_or(args), line)?;
                        let r = Affine::rotate(Vec3::new(x, y, z), deg)
                            .map_err(|e| FormatError::parse(line, e.to_string()))?;
                        (r, 4)
                    }
                    "affine" => {
                        let v = numbers::<12>(args.get(..12).unwrap_or(args), line)?;
                        (Affine::from_rows(&v), 12)
                    }
                    k => return Err(FormatError::parse(line, format!("unknown transform '{k}'"))),
                };
                to_world = to_world.then(&step);
                rest = &args[used..];
            }
            if to_world.inverse().is_err() {
                return Err(FormatError::parse(line, "transform is not invertible"));
            }
            Ok(InstanceSpec {
                model: PathBuf::from(toks[1]),
                to_world,
            })
        })
        .collect()
}
