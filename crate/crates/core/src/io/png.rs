//! PNG masks and images.

use std::io::Cursor;
use std::path::Path;

use image::{ColorType, DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::scene::{Image, Mask};

fn luminance(rgb: [u8; 3]) -> f64 {
    0.299 * f64::from(rgb[0]) + 0.587 * f64::from(rgb[1]) + 0.114 * f64::from(rgb[2])
}

fn check_depth(img: &DynamicImage) -> Result<()> {
    match img.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => Ok(()),
        other => Err(Error::UnsupportedFormat(format!("{other:?}; expected 8-bit grayscale or RGB"))),
    }
}

/// Thresholds a decoded 8-bit image: gray > 127, or RGB luminance > 127.
pub fn mask_from_image(img: &DynamicImage) -> Result<Mask> {
    check_depth(img)?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let bits = match img.color() {
        ColorType::L8 | ColorType::La8 => img.to_luma8().pixels().map(|p| p.0[0] > 127).collect(),
        _ => img.to_rgb8().pixels().map(|p| luminance(p.0) > 127.0).collect(),
    };
    Ok(Mask { width, height, bits })
}

pub fn decode_mask(bytes: &[u8]) -> Result<Mask> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Image(e.to_string()))?;
    mask_from_image(&img)
}

/// Loads a mask, nearest-neighbor resizing to the expected dimensions.
pub fn load_mask(path: impl AsRef<Path>, expected_w: usize, expected_h: usize) -> Result<Mask> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mask = decode_mask(&bytes)?;
    Ok(mask.resized(expected_w, expected_h))
}

pub fn encode_mask(mask: &Mask) -> Vec<u8> {
    let bytes = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(mask.width as u32, mask.height as u32, bytes).expect("mask buffer size");
    encode(DynamicImage::ImageLuma8(img))
}

pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_mask(mask)).map_err(|e| Error::io(path, e))
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn encode_image(img: &Image) -> Vec<u8> {
    let bytes = img.pixels.iter().flat_map(|p| p.map(to_u8)).collect();
    let rgb = RgbImage::from_raw(img.width as u32, img.height as u32, bytes).expect("image buffer size");
    encode(DynamicImage::ImageRgb8(rgb))
}

fn encode(img: DynamicImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding");
    out.into_inner()
}

pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_image(img)).map_err(|e| Error::io(path, e))
}

pub fn decode_image(bytes: &[u8]) -> Result<Image> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Image(e.to_string()))?;
    check_depth(&img)?;
    let rgb = img.to_rgb8();
    Ok(Image {
        width: rgb.width() as usize,
        height: rgb.height() as usize,
        pixels: rgb.pixels().map(|p| p.0.map(|c| f64::from(c) / 255.0)).collect(),
    })
}

pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes)
}
