use super::MetricsError;
use crate::raster::{check_same_dims, DepthMap, FlowField};

/// Pairs of `(pred, gt)` depths where both are valid.
pub(crate) fn joint_depths(pred: &DepthMap, gt: &DepthMap) -> Result<Vec<(usize, f64, f64)>, MetricsError> {
    check_same_dims(pred.dims(), gt.dims())?;
    let w = pred.width();
    let pairs: Vec<_> = gt
        .iter_valid()
        .filter_map(|(c, r, g)| pred.get(c, r).map(|p| (r * w + c, p, g)))
        .collect();
    if pairs.is_empty() {
        return Err(MetricsError::EmptyOverlap);
    }
    Ok(pairs)
}

/// `Σ (log d − log d̂ + η)²` with `η` the mean of `log d̂ − log d`, over
/// jointly valid pixels. Zero whenever `pred` is a positive multiple of `gt`.
pub fn scale_invariant_loss(pred: &DepthMap, gt: &DepthMap) -> Result<f64, MetricsError> {
    let pairs = joint_depths(pred, gt)?;
    let logs: Vec<f64> = pairs.iter().map(|(_, p, g)| p.ln() - g.ln()).collect();
    let eta = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(logs.iter().map(|z| (eta - z).powi(2)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HuberForm {
    /// `0.5z²` for `|z| < 1`, otherwise `|z − 0.5|`.
    #[default]
    AsPrinted,
    /// `0.5z²` for `|z| < 1`, otherwise `|z| − 0.5`.
    Symmetric,
}

pub fn huber(z: f64, form: HuberForm) -> f64 {
    if z.abs() < 1.0 {
        0.5 * z * z
    } else {
        match form {
            HuberForm::AsPrinted => (z - 0.5).abs(),
            HuberForm::Symmetric => z.abs() - 0.5,
        }
    }
}

/// Derivative of [`huber`] with respect to `z`.
pub fn huber_grad(z: f64, form: HuberForm) -> f64 {
    if z.abs() < 1.0 {
        z
    } else {
        match form {
            HuberForm::AsPrinted => (z - 0.5).signum(),
            HuberForm::Symmetric => z.signum(),
        }
    }
}

fn check_alpha(alpha_gt: f64) -> Result<(), MetricsError> {
    if !(alpha_gt > 0.0 && alpha_gt.is_finite()) {
        return Err(MetricsError::InvalidScale(alpha_gt));
    }
    Ok(())
}

/// `Σ ℓ_huber(α_gt·d̂ − d)` over jointly valid pixels.
pub fn huber_depth_loss(pred: &DepthMap, gt: &DepthMap, alpha_gt: f64, form: HuberForm) -> Result<f64, MetricsError> {
    check_alpha(alpha_gt)?;
    let pairs = joint_depths(pred, gt)?;
    Ok(pairs.iter().map(|(_, p, g)| huber(alpha_gt * p - g, form)).sum())
}

/// Loss together with `∂L/∂d̂` per pixel (row-major, zero off the joint
/// support).
pub fn huber_depth_loss_with_grad(
    pred: &DepthMap,
    gt: &DepthMap,
    alpha_gt: f64,
    form: HuberForm,
) -> Result<(f64, Vec<f64>), MetricsError> {
    check_alpha(alpha_gt)?;
    let pairs = joint_depths(pred, gt)?;
    let mut grad = vec![0.0; pred.width() * pred.height()];
    let mut loss = 0.0;
    for (i, p, g) in pairs {
        let z = alpha_gt * p - g;
        loss += huber(z, form);
        grad[i] = alpha_gt * huber_grad(z, form);
    }
    Ok((loss, grad))
}

/// `Σ ‖û − u‖²` over pixels where both flows are valid.
pub fn flow_loss(pred: &FlowField, rigid: &FlowField) -> Result<f64, MetricsError> {
    check_same_dims(pred.dims(), rigid.dims())?;
    let mut n = 0usize;
    let mut sum = 0.0;
    for (c, r, [u, v]) in rigid.iter_valid() {
        if let Some([pu, pv]) = pred.get(c, r) {
            n += 1;
            sum += (pu - u).powi(2) + (pv - v).powi(2);
        }
    }
    if n == 0 {
        return Err(MetricsError::EmptyOverlap);
    }
    Ok(sum)
}

/// `L_depth + λ·L_flow`. With `λ = 0` the flow term is ignored entirely,
/// including non-finite values.
pub fn total_loss(depth_loss: f64, flow_loss: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        depth_loss
    } else {
        depth_loss + lambda * flow_loss
    }
}
