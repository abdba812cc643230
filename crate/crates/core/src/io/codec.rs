//! Single-file codecs: RGB and mask PNGs, raw DPT1 depth, 16-bit PNG depth,
//! and sorted-key JSON.

use std::fs;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, ImageFormat, Luma, RgbImage};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{DepthFrame, Frame, Mask};

pub const DPT_MAGIC: &[u8; 4] = b"DPT1";
const DPT_HEADER: usize = 12;

fn image_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Image {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

fn decode(path: &Path) -> Result<DynamicImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| image_err(path, e))
}

fn encode(path: &Path, img: &DynamicImage) -> Result<()> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| image_err(path, e))?;
    fs::write(path, buf.into_inner()).map_err(|e| Error::io(path, e))
}

fn check_dims(path: &Path, got: (u32, u32), want: Option<(u32, u32)>) -> Result<()> {
    match want {
        Some(w) if w != got => Err(Error::ManifestMismatch(format!(
            "{} is {}x{}, manifest says {}x{}",
            path.display(),
            got.0,
            got.1,
            w.0,
            w.1
        ))),
        _ => Ok(()),
    }
}

pub fn write_frame(path: &Path, frame: &Frame) -> Result<()> {
    let flat: Vec<u8> = frame.pixels.iter().flatten().copied().collect();
    let img = RgbImage::from_raw(frame.width, frame.height, flat)
        .ok_or_else(|| image_err(path, "frame buffer size"))?;
    encode(path, &DynamicImage::ImageRgb8(img))
}

/// Reads an 8-bit RGB PNG. Other pixel layouts are rejected, not converted.
pub fn read_frame(path: &Path, dims: Option<(u32, u32)>) -> Result<Frame> {
    let img = match decode(path)? {
        DynamicImage::ImageRgb8(img) => img,
        other => {
            return Err(Error::ManifestMismatch(format!(
                "{} is {:?}, expected 8-bit RGB",
                path.display(),
                other.color()
            )))
        }
    };
    check_dims(path, img.dimensions(), dims)?;
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0).collect();
    Frame::new(w, h, pixels)
}

/// Masks are 8-bit gray: 255 = fill, 0 = keep.
pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    let data = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let img = GrayImage::from_raw(mask.width, mask.height, data)
        .ok_or_else(|| image_err(path, "mask buffer size"))?;
    encode(path, &DynamicImage::ImageLuma8(img))
}

pub fn read_mask(path: &Path, dims: Option<(u32, u32)>) -> Result<Mask> {
    let img = match decode(path)? {
        DynamicImage::ImageLuma8(img) => img,
        other => {
            return Err(Error::ManifestMismatch(format!(
                "{} is {:?}, expected 8-bit gray mask",
                path.display(),
                other.color()
            )))
        }
    };
    check_dims(path, img.dimensions(), dims)?;
    let (w, h) = img.dimensions();
    let mut bits = Vec::with_capacity((w * h) as usize);
    for p in img.pixels() {
        match p.0[0] {
            0 => bits.push(false),
            255 => bits.push(true),
            v => {
                return Err(Error::ManifestMismatch(format!(
                    "{} holds mask value {v}; only 0 and 255 are allowed",
                    path.display()
                )))
            }
        }
    }
    Mask::new(w, h, bits)
}

/// `DPT1`: magic, width and height as u32 LE, then row-major f32 LE depths.
pub fn encode_dpt(depth: &DepthFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(DPT_HEADER + 4 * depth.values.len());
    out.extend_from_slice(DPT_MAGIC);
    out.extend_from_slice(&depth.width.to_le_bytes());
    out.extend_from_slice(&depth.height.to_le_bytes());
    for v in &depth.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_dpt(path: &Path, bytes: &[u8], dims: Option<(u32, u32)>) -> Result<DepthFrame> {
    if bytes.len() < 4 || &bytes[..4] != DPT_MAGIC {
        return Err(Error::BadMagic(path.to_owned()));
    }
    if bytes.len() < DPT_HEADER {
        return Err(Error::ManifestMismatch(format!(
            "{} has a truncated header",
            path.display()
        )));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let (w, h) = (word(4), word(8));
    check_dims(path, (w, h), dims)?;
    let expected = DPT_HEADER + 4 * w as usize * h as usize;
    if bytes.len() != expected {
        return Err(Error::ManifestMismatch(format!(
            "{} has {} bytes, {w}x{h} depth needs {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let values = bytes[DPT_HEADER..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    DepthFrame::new(w, h, values)
}

pub fn write_dpt(path: &Path, depth: &DepthFrame) -> Result<()> {
    fs::write(path, encode_dpt(depth)).map_err(|e| Error::io(path, e))
}

pub fn read_dpt(path: &Path, dims: Option<(u32, u32)>) -> Result<DepthFrame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_dpt(path, &bytes, dims)
}

/// 16-bit PNG depth: `depth = value * scale + offset`, value 0 = invalid.
/// Quantizes; valid depths map to codes `1..=65535`.
pub fn write_depth_png16(path: &Path, depth: &DepthFrame, scale: f64, offset: f64) -> Result<()> {
    let data: Vec<u16> = depth
        .values
        .iter()
        .map(|&d| {
            if d > 0.0 {
                ((d as f64 - offset) / scale).round().clamp(1.0, 65535.0) as u16
            } else {
                0
            }
        })
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width, depth.height, data)
            .ok_or_else(|| image_err(path, "depth buffer size"))?;
    encode(path, &DynamicImage::ImageLuma16(img))
}

pub fn read_depth_png16(
    path: &Path,
    dims: Option<(u32, u32)>,
    scale: f64,
    offset: f64,
) -> Result<DepthFrame> {
    let img = match decode(path)? {
        DynamicImage::ImageLuma16(img) => img,
        other => {
            return Err(Error::ManifestMismatch(format!(
                "{} is {:?}, expected 16-bit gray depth",
                path.display(),
                other.color()
            )))
        }
    };
    check_dims(path, img.dimensions(), dims)?;
    let (w, h) = img.dimensions();
    let values = img
        .pixels()
        .map(|p| match p.0[0] {
            0 => 0.0,
            v => (v as f64 * scale + offset) as f32,
        })
        .collect();
    DepthFrame::new(w, h, values)
}

/// Pretty JSON with lexicographically sorted keys and a trailing newline, so
/// identical values always produce identical bytes.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|source| Error::Json {
        path: "<memory>".into(),
        source,
    })?;
    let mut s = serde_json::to_string_pretty(&v).map_err(|source| Error::Json {
        path: "<memory>".into(),
        source,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_canonical_json(value)?).map_err(|e| Error::io(path, e))
}

pub fn read_json_value(path: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

/// Reads a manifest after checking its `"format"` tag: a different family is
/// a mismatch, a different version of the same family is unsupported.
pub fn read_manifest<T: DeserializeOwned>(path: &Path, expected_format: &str) -> Result<T> {
    let value = read_json_value(path)?;
    let found = value
        .get("format")
        .and_then(|f| f.as_str())
        .ok_or_else(|| {
            Error::ManifestMismatch(format!("{} has no \"format\" tag", path.display()))
        })?;
    if found != expected_format {
        let family = |s: &str| s.split('/').next().unwrap_or("").to_owned();
        if family(found) == family(expected_format) {
            return Err(Error::UnsupportedVersion {
                expected: expected_format.to_owned(),
                found: found.to_owned(),
            });
        }
        return Err(Error::ManifestMismatch(format!(
            "{} is a {found:?} manifest, expected {expected_format:?}",
            path.display()
        )));
    }
    serde_json::from_value(value).map_err(|source| Error::Json {
        path: path.to_owned(),
        source,
    })
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
