use super::PoseError;
use crate::features::{detect_keypoint_mask, KeypointParams};
use crate::geometry::Correspondence;
use crate::io::flow_to_correspondences;
use crate::raster::{check_same_dims, FlowField, GrayImage, PixelMask};

/// Which flow vectors feed pose estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaskStrategy {
    All,
    /// Pixels whose column and row are both multiples of `stride`.
    Grid { stride: usize },
    /// DoG keypoint locations in the first image.
    KeypointLocations(KeypointParams),
    /// Pixels whose external weight (uncertainty/confidence map) is at least
    /// `threshold`.
    WeightThreshold { threshold: f64 },
}

impl MaskStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            MaskStrategy::All => "all",
            MaskStrategy::Grid { .. } => "grid",
            MaskStrategy::KeypointLocations(_) => "keypoints",
            MaskStrategy::WeightThreshold { .. } => "weights",
        }
    }
}

/// Auxiliary input some strategies need.
#[derive(Debug, Clone, Copy)]
pub enum MaskAux<'a> {
    Image(&'a GrayImage),
    Weights(&'a GrayImage),
}

/// Builds the pixel mask for `strategy` and extracts the masked
/// correspondences in row-major order.
pub fn apply_mask_strategy(
    flow: &FlowField,
    strategy: &MaskStrategy,
    aux: Option<MaskAux<'_>>,
) -> Result<Vec<Correspondence>, PoseError> {
    let (w, h) = flow.dims();
    let mask = match strategy {
        MaskStrategy::All => None,
        MaskStrategy::Grid { stride } => {
            let stride = (*stride).max(1);
            let mut m = PixelMask::new(w, h, false);
            for r in (0..h).step_by(stride) {
                for c in (0..w).step_by(stride) {
                    m.set(c, r, true);
                }
            }
            Some(m)
        }
        MaskStrategy::KeypointLocations(params) => {
            let Some(MaskAux::Image(img)) = aux else {
                return Err(PoseError::MissingAux("keypoints", "a grayscale image"));
            };
            check_same_dims(img.dims(), flow.dims())?;
            let m = detect_keypoint_mask(img, params)
                .map_err(|e| PoseError::EstimationFailed(e.to_string()))?;
            Some(m)
        }
        MaskStrategy::WeightThreshold { threshold } => {
            let Some(MaskAux::Weights(weights)) = aux else {
                return Err(PoseError::MissingAux("weights", "a weight map"));
            };
            check_same_dims(weights.dims(), flow.dims())?;
            let mut m = PixelMask::new(w, h, false);
            for r in 0..h {
                for c in 0..w {
                    m.set(c, r, weights.get(c, r) >= *threshold);
                }
            }
            Some(m)
        }
    };
    Ok(flow_to_correspondences(flow, mask.as_ref())?)
}
