use super::losses::joint_depths;
use super::{compensated_sum, MetricsError};
use crate::raster::DepthMap;

/// Stereo baseline of the KITTI rig in metres.
pub const KITTI_BASELINE: f64 = 0.54;

/// Depth-to-disparity conversion for D1-all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisparityParams {
    pub focal: f64,
    pub baseline: f64,
}

impl DisparityParams {
    pub fn kitti(focal: f64) -> Self {
        Self {
            focal,
            baseline: KITTI_BASELINE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    None,
    /// Multiply the prediction by `median(gt) / median(pred)`.
    Median,
    /// Multiply the prediction by a known scale.
    GtScale(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    /// `None` when no disparity parameters were supplied.
    pub d1_all: Option<f64>,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub l1_inv: f64,
    pub sc_inv: f64,
    pub l1_rel: f64,
}

impl DepthMetrics {
    pub const KEYS: [&'static str; 11] = [
        "abs_rel", "sq_rel", "rmse", "rmse_log", "d1_all", "delta1", "delta2", "delta3", "l1_inv",
        "sc_inv", "l1_rel",
    ];

    /// Values in [`Self::KEYS`] order; a missing D1-all is `NaN`.
    pub fn values(&self) -> [f64; 11] {
        [
            self.abs_rel,
            self.sq_rel,
            self.rmse,
            self.rmse_log,
            self.d1_all.unwrap_or(f64::NAN),
            self.delta1,
            self.delta2,
            self.delta3,
            self.l1_inv,
            self.sc_inv,
            self.l1_rel,
        ]
    }

    pub fn key_values(&self) -> Vec<(&'static str, f64)> {
        Self::KEYS.iter().copied().zip(self.values()).collect()
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Standard depth error battery over jointly valid pixels.
pub fn depth_metrics(
    pred: &DepthMap,
    gt: &DepthMap,
    scaling: Scaling,
    disparity: Option<DisparityParams>,
) -> Result<DepthMetrics, MetricsError> {
    let pairs = joint_depths(pred, gt)?;
    let factor = match scaling {
        Scaling::None => 1.0,
        Scaling::GtScale(a) => {
            if !(a > 0.0 && a.is_finite()) {
                return Err(MetricsError::InvalidScale(a));
            }
            a
        }
        Scaling::Median => {
            let mut g: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            let mut p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            median(&mut g) / median(&mut p)
        }
    };
    let n = pairs.len() as f64;
    let mean = |f: &dyn Fn(f64, f64) -> f64| compensated_sum(pairs.iter().map(|&(_, p, g)| f(p * factor, g))) / n;
    let fraction = |f: &dyn Fn(f64, f64) -> bool| pairs.iter().filter(|&&(_, p, g)| f(p * factor, g)).count() as f64 / n;

    let abs_rel = mean(&|p, g| (p - g).abs() / g);
    let log_mean = mean(&|p, g| p.ln() - g.ln());
    let log_sq = mean(&|p, g| (p.ln() - g.ln()).powi(2));
    let delta = |k: i32| {
        let th = 1.25f64.powi(k);
        fraction(&|p, g| (p / g).max(g / p) < th)
    };
    let d1_all = disparity.map(|dp| {
        let fb = dp.focal * dp.baseline;
        fraction(&|p, g| {
            let err = (fb / p - fb / g).abs();
            err > 3.0 && err > 0.05 * (fb / g)
        })
    });
    Ok(DepthMetrics {
        abs_rel,
        sq_rel: mean(&|p, g| (p - g).powi(2) / g),
        rmse: mean(&|p, g| (p - g).powi(2)).sqrt(),
        rmse_log: log_sq.sqrt(),
        d1_all,
        delta1: delta(1),
        delta2: delta(2),
        delta3: delta(3),
        l1_inv: mean(&|p, g| (1.0 / p - 1.0 / g).abs()),
        sc_inv: (log_sq - log_mean * log_mean).max(0.0).sqrt(),
        l1_rel: abs_rel,
    })
}

/// Unweighted mean over images. D1-all is averaged only if present in every
/// input.
pub fn aggregate_depth_metrics(items: &[DepthMetrics]) -> Option<DepthMetrics> {
    if items.is_empty() {
        return None;
    }
    let n = items.len() as f64;
    let avg = |f: fn(&DepthMetrics) -> f64| compensated_sum(items.iter().map(f)) / n;
    let d1_all = items
        .iter()
        .map(|m| m.d1_all)
        .collect::<Option<Vec<f64>>>()
        .map(|v| compensated_sum(v) / n);
    Some(DepthMetrics {
        abs_rel: avg(|m| m.abs_rel),
        sq_rel: avg(|m| m.sq_rel),
        rmse: avg(|m| m.rmse),
        rmse_log: avg(|m| m.rmse_log),
        d1_all,
        delta1: avg(|m| m.delta1),
        delta2: avg(|m| m.delta2),
        delta3: avg(|m| m.delta3),
        l1_inv: avg(|m| m.l1_inv),
        sc_inv: avg(|m| m.sc_inv),
        l1_rel: avg(|m| m.l1_rel),
    })
}
