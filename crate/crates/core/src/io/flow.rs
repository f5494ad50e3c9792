use std::fs;
use std::path::Path;

use super::{io_err, IoError};
use crate::raster::FlowField;

/// Middlebury tag: the float `202021.25`, bytes `"PIEH"`.
pub const FLOW_MAGIC: f32 = 202021.25;
/// Components above this magnitude mark an unknown flow vector.
pub const UNKNOWN_FLOW_THRESHOLD: f32 = 1e9;
const UNKNOWN_FLOW: f32 = 1e10;

/// Reads a Middlebury `.flo` file.
pub fn read_flow(path: impl AsRef<Path>) -> Result<FlowField, IoError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_flow(&bytes).map_err(|bad_magic| {
        if bad_magic {
            IoError::NotAFlowFile(path.to_path_buf())
        } else {
            IoError::CorruptFlowFile(path.to_path_buf())
        }
    })
}

/// `Err(true)` for a bad tag, `Err(false)` for a bad body.
fn decode_flow(bytes: &[u8]) -> Result<FlowField, bool> {
    let word = |i: usize| -> Option<[u8; 4]> { bytes.get(i..i + 4)?.try_into().ok() };
    let magic = word(0).map(f32::from_le_bytes).ok_or(true)?;
    if magic != FLOW_MAGIC {
        return Err(true);
    }
    let width = word(4).map(i32::from_le_bytes).ok_or(false)?;
    let height = word(8).map(i32::from_le_bytes).ok_or(false)?;
    if width <= 0 || height <= 0 {
        return Err(false);
    }
    let (w, h) = (width as usize, height as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(12))
        .ok_or(false)?;
    if bytes.len() != expected {
        return Err(false);
    }
    let mut flow = FlowField::new_invalid(w, h);
    for (i, px) in bytes[12..].chunks_exact(8).enumerate() {
        let u = f32::from_le_bytes(px[0..4].try_into().expect("4 bytes"));
        let v = f32::from_le_bytes(px[4..8].try_into().expect("4 bytes"));
        let known = u.abs() <= UNKNOWN_FLOW_THRESHOLD && v.abs() <= UNKNOWN_FLOW_THRESHOLD;
        if known {
            flow.set(i % w, i / w, u as f64, v as f64);
        }
    }
    Ok(flow)
}

fn encode_flow(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dims();
    let mut out = Vec::with_capacity(12 + w * h * 8);
    out.extend_from_slice(&FLOW_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for r in 0..h {
        for c in 0..w {
            let [u, v] = flow
                .get(c, r)
                .map(|[u, v]| [u as f32, v as f32])
                .unwrap_or([UNKNOWN_FLOW; 2]);
            out.extend_from_slice(&u.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes a Middlebury `.flo` file; invalid pixels are stored as `1e10`.
/// Values are stored as `f32`.
pub fn write_flow(path: impl AsRef<Path>, flow: &FlowField) -> Result<(), IoError> {
    let path = path.as_ref();
    fs::write(path, encode_flow(flow)).map_err(io_err(path))
}
