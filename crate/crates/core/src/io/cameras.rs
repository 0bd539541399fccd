//! `cameras.json` as written by the reference 3DGS trainer.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Camera;

/// One entry of `cameras.json`. `rotation` and `position` are camera-to-world.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraRecord {
    pub id: i64,
    pub img_name: String,
    pub width: usize,
    pub height: usize,
    pub position: [f64; 3],
    pub rotation: [[f64; 3]; 3],
    pub fx: f64,
    pub fy: f64,
}

const ORTHONORMAL_TOL: f64 = 1e-3;

impl CameraRecord {
    pub fn from_camera(cam: &Camera) -> Self {
        let c2w = cam.rotation.transpose();
        let center = cam.center();
        CameraRecord {
            id: cam.id,
            img_name: cam.image_name.clone(),
            width: cam.width,
            height: cam.height,
            position: [center.x, center.y, center.z],
            rotation: [0, 1, 2].map(|r| [0, 1, 2].map(|c| c2w[(r, c)])),
            fx: cam.fx,
            fy: cam.fy,
        }
    }

    pub fn to_camera(&self) -> Result<Camera> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Camera(format!("camera {} has zero image size", self.id)));
        }
        let c2w = Matrix3::from_fn(|r, c| self.rotation[r][c]);
        let deviation = (c2w.transpose() * c2w - Matrix3::identity()).abs().max();
        if !(deviation <= ORTHONORMAL_TOL) {
            return Err(Error::Camera(format!(
                "camera {} rotation is not orthonormal (deviation {deviation:.3e})",
                self.id
            )));
        }
        let rotation = c2w.transpose();
        let position = Vector3::from(self.position);
        Ok(Camera {
            id: self.id,
            image_name: self.img_name.clone(),
            width: self.width,
            height: self.height,
            fx: self.fx,
            fy: self.fy,
            cx: self.width as f64 / 2.0,
            cy: self.height as f64 / 2.0,
            rotation,
            translation: -(rotation * position),
        })
    }
}

pub fn parse_cameras(json: &str) -> Result<Vec<Camera>> {
    let records: Vec<CameraRecord> =
        serde_json::from_str(json).map_err(|e| Error::Camera(format!("malformed cameras JSON: {e}")))?;
    let mut ids = HashSet::new();
    records
        .iter()
        .map(|r| {
            if !ids.insert(r.id) {
                return Err(Error::Camera(format!("duplicate camera id {}", r.id)));
            }
            r.to_camera()
        })
        .collect()
}

pub fn load_cameras(path: impl AsRef<Path>) -> Result<Vec<Camera>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cameras(&text)
}

pub fn cameras_to_json(cameras: &[Camera]) -> String {
    let records: Vec<CameraRecord> = cameras.iter().map(CameraRecord::from_camera).collect();
    serde_json::to_string_pretty(&records).expect("camera records serialize")
}

pub fn save_cameras(cameras: &[Camera], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cameras_to_json(cameras)).map_err(|e| Error::io(path, e))
}
