//! Binary PPM (P6, 8-bit) and PNG output.
//!
//! Linear values are clamped to `[0, 1]` and scaled to `0..=255` without
//! any transfer curve.

use std::path::Path;

use super::{read_file, write_file, FormatError};
use crate::rendering::Image;

const MAX_PIXELS: usize = 1 << 26;

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_ppm(img: &Image) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.reserve(img.pixels.len() * 3);
    for p in &img.pixels {
        out.extend(p.iter().map(|&v| quantize(v)));
    }
    out
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<usize, FormatError> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos || *pos - start > 9 {
        return Err(FormatError::invalid("malformed PPM header"));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| FormatError::invalid("malformed PPM header"))
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Image, FormatError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(FormatError::invalid("not a binary PPM (P6) file"));
    }
    let mut pos = 2;
    let w = header_token(bytes, &mut pos)?;
    let h = header_token(bytes, &mut pos)?;
    let maxval = header_token(bytes, &mut pos)?;
    if w == 0 || h == 0 || w.saturating_mul(h) > MAX_PIXELS {
        return Err(FormatError::invalid(format!("unsupported PPM size {w}x{h}")));
    }
    if !(1..=255).contains(&maxval) {
        return Err(FormatError::invalid(format!("unsupported PPM maxval {maxval}")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(FormatError::invalid("malformed PPM header"));
    }
    pos += 1;
    let data = &bytes[pos..];
    if data.len() < w * h * 3 {
        return Err(FormatError::invalid(format!(
            "PPM data truncated: {} of {} bytes",
            data.len(),
            w * h * 3
        )));
    }
    let scale = maxval as f64;
    let pixels = data[..w * h * 3]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]].map(|v| (v as f64 / scale).min(1.0)))
        .collect();
    Ok(Image {
        width: w,
        height: h,
        pixels,
    })
}

pub fn read_ppm(path: &Path) -> Result<Image, FormatError> {
    decode_ppm(&read_file(path)?)
}

pub fn write_ppm(path: &Path, img: &Image) -> Result<(), FormatError> {
    write_file(path, &encode_ppm(img))
}

/// PNG with the same 8-bit pixels as [`encode_ppm`].
pub fn write_png(path: &Path, img: &Image) -> Result<(), FormatError> {
    let raw: Vec<u8> = img.pixels.iter().flat_map(|p| p.map(quantize)).collect();
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, raw)
        .ok_or_else(|| FormatError::invalid("image buffer size mismatch"))?;
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| FormatError::invalid(format!("{}: {e}", path.display())))
}
