//! File formats: Middlebury `.flo` flow, PFM / 16-bit PNG depth, KITTI pose
//! text, camera intrinsics, grayscale images and flat `key=value` files.

mod depth;
mod flow;
mod image;
mod intrinsics;
mod kv;
mod trajectory;

pub use self::image::{read_gray_image, write_gray_image};
pub use depth::{read_depth, read_pfm, write_depth, write_pfm};
pub use flow::{read_flow, write_flow, FLOW_MAGIC, UNKNOWN_FLOW_THRESHOLD};
pub use intrinsics::{parse_intrinsics, read_intrinsics, write_intrinsics};
pub use kv::{parse_key_values, read_key_values, write_key_values, KeyValues};
pub use trajectory::{format_pose_line, parse_pose_line, read_trajectory, write_trajectory, Trajectory};

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{Correspondence, GeometryError, PixelPoint};
use crate::raster::{check_same_dims, FlowField, PixelMask, RasterError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: not a flow file")]
    NotAFlowFile(PathBuf),
    #[error("{0}: corrupt flow file")]
    CorruptFlowFile(PathBuf),
    #[error("{0}: unknown file extension")]
    UnknownExtension(PathBuf),
    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: image error: {reason}")]
    Image { path: PathBuf, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One `(x, x + u(x))` pair per valid pixel that is also set in `mask`, in
/// row-major order.
pub fn flow_to_correspondences(
    flow: &FlowField,
    mask: Option<&PixelMask>,
) -> Result<Vec<Correspondence>, RasterError> {
    if let Some(m) = mask {
        check_same_dims(m.dims(), flow.dims())?;
    }
    Ok(flow
        .iter_valid()
        .filter(|(c, r, _)| mask.is_none_or(|m| m.get(*c, *r)))
        .map(|(c, r, [u, v])| {
            let x = PixelPoint::new(c as f64, r as f64);
            Correspondence::new(x, x.offset(u, v))
        })
        .collect())
}
