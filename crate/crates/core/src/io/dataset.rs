//! Dataset directories: `cameras.txt` plus one `frame_####.ppm` per camera.

use std::path::Path;

use super::ppm::{read_ppm, write_ppm};
use super::text::{read_cameras, save_text, write_cameras};
use super::FormatError;
use crate::rendering::{Camera, Image};

pub fn frame_name(i: usize) -> String {
    format!("frame_{i:04}.ppm")
}

pub fn save_dataset(dir: &Path, views: &[(Camera, Image)]) -> Result<(), FormatError> {
    std::fs::create_dir_all(dir).map_err(|source| FormatError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let cams: Vec<Camera> = views.iter().map(|(c, _)| *c).collect();
    save_text(&dir.join("cameras.txt"), &write_cameras(&cams))?;
    for (i, (_, img)) in views.iter().enumerate() {
        write_ppm(&dir.join(frame_name(i)), img)?;
    }
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Vec<(Camera, Image)>, FormatError> {
    let cams = read_cameras(&dir.join("cameras.txt"))?;
    if cams.is_empty() {
        return Err(FormatError::invalid(format!("{}: no cameras", dir.display())));
    }
    cams.into_iter()
        .enumerate()
        .map(|(i, cam)| {
            let img = read_ppm(&dir.join(frame_name(i)))?;
            if (img.width, img.height) != (cam.width, cam.height) {
                return Err(FormatError::invalid(format!(
                    "{}: image is {}x{}, camera expects {}x{}",
                    frame_name(i),
                    img.width,
                    img.height,
                    cam.width,
                    cam.height
                )));
            }
            Ok((cam, img))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cam = Camera::look_at(Vec3::new(0.0, -3.0, 0.0), Vec3::zeros(), Vec3::z(), 10.0, 4, 3).unwrap();
        let img = Image::filled(4, 3, [1.0, 0.0, 128.0 / 255.0]);
        save_dataset(dir.path(), &[(cam, img.clone()), (cam, img.clone())]).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].1, img);
        std::fs::remove_file(dir.path().join(frame_name(1))).unwrap();
        assert!(load_dataset(dir.path()).is_err());
    }
}
