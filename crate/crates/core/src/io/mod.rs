//! Scene, camera and mask serialization.

mod cameras;
mod ply;
mod png;

use std::path::Path;

pub use cameras::{cameras_to_json, load_cameras, parse_cameras, save_cameras, CameraRecord};
pub use ply::{
    load_splat_model, property_names, read_splat_model, save_splat_model, write_selection, write_splat_model,
};
pub use png::{
    decode_image, decode_mask, encode_image, encode_mask, load_image, load_mask, mask_from_image, save_image,
    save_mask,
};

use crate::error::{Error, Result};
use crate::scene::{Camera, Mask};

/// File stem of an image name (`"frames/000.jpg"` -> `"000"`).
pub fn stem(name: &str) -> String {
    Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads one PNG mask per camera from `dir`, pairing by file stem with the
/// camera's image name. Every camera must have a mask.
pub fn load_masks_for(dir: impl AsRef<Path>, cameras: &[Camera]) -> Result<Vec<Mask>> {
    let dir = dir.as_ref();
    let mut missing = Vec::new();
    let mut masks = Vec::with_capacity(cameras.len());
    for cam in cameras {
        let path = dir.join(format!("{}.png", stem(&cam.image_name)));
        if !path.is_file() {
            missing.push(stem(&cam.image_name));
            continue;
        }
        masks.push(load_mask(&path, cam.width, cam.height)?);
    }
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "mask directory {} has no mask for: {}",
            dir.display(),
            missing.join(", ")
        )));
    }
    Ok(masks)
}
