//! Two-view structure from motion: relative pose from dense correspondences,
//! scale-invariant plane-sweep depth, and the matching evaluation metrics.

pub mod cli;
pub mod features;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pose;
pub mod raster;
pub mod sweep;
pub mod synthetic;
