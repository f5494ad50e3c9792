use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{five_point, refine_pose, select_by_cheirality, PoseError};
use crate::geometry::{
    decompose_essential, essential_from_pose, CameraIntrinsics, Correspondence, EpipolarScorer, EssentialMatrix,
    NormalizedPoint, RigidTransform,
};

/// Median inlier displacement (pixels) under which an estimate is flagged as
/// low-parallax.
pub const LOW_PARALLAX_PX: f64 = 0.5;

/// Hypotheses per batch. Stopping is only checked between batches, which
/// keeps the result independent of the worker count.
const BATCH: usize = 64;

/// Upper bound on correspondences used for cheirality voting.
const CHEIRALITY_SAMPLES: usize = 2000;

/// Refinement considers correspondences up to this multiple of the inlier
/// threshold, down-weighted by a Cauchy loss.
const REFINE_BAND: f64 = 9.0;

/// Stream offset separating refit samples from hypothesis samples.
const REFIT_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// Sampson threshold in squared pixels.
    pub inlier_threshold: f64,
    pub confidence: f64,
    pub max_iterations: usize,
    pub min_iterations: usize,
    pub seed: u64,
    /// Random 5-subsets of the consensus set re-solved after the main loop;
    /// zero disables the refit.
    pub refit_samples: usize,
    /// Rounds of Sampson-error minimization over the inliers, each followed
    /// by re-classification; zero disables refinement.
    pub refine_rounds: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            inlier_threshold: 1.0,
            confidence: 0.999,
            max_iterations: 2000,
            min_iterations: 64,
            seed: 0,
            refit_samples: 50,
            refine_rounds: 5,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<(), PoseError> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(PoseError::InvalidConfig(format!(
                "confidence must be in (0, 1), got {}",
                self.confidence
            )));
        }
        if !(self.inlier_threshold > 0.0 && self.inlier_threshold.is_finite()) {
            return Err(PoseError::InvalidConfig(format!(
                "inlier threshold must be positive, got {}",
                self.inlier_threshold
            )));
        }
        if self.min_iterations < 1 || self.max_iterations < self.min_iterations {
            return Err(PoseError::InvalidConfig(format!(
                "need max_iterations >= min_iterations >= 1, got {} and {}",
                self.max_iterations, self.min_iterations
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEstimate {
    /// Relative pose with `‖t‖ = 1`.
    pub pose: RigidTransform,
    pub essential: EssentialMatrix,
    pub inlier_mask: Vec<bool>,
    pub iterations_run: usize,
    /// Mean Sampson distance over inliers, squared pixels.
    pub mean_inlier_sampson: f64,
    /// Median inlier displacement fell below [`LOW_PARALLAX_PX`].
    pub low_parallax: bool,
    pub median_inlier_flow: f64,
}

impl PoseEstimate {
    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|&&b| b).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Hypothesis {
    essential: EssentialMatrix,
    inliers: usize,
    mean_error: f64,
    /// (iteration, candidate) for deterministic tie-breaking.
    order: (u64, usize),
}

impl Hypothesis {
    /// Total order: more inliers, then lower mean error, then earlier.
    fn better_than(&self, other: &Hypothesis) -> bool {
        if self.inliers != other.inliers {
            return self.inliers > other.inliers;
        }
        if self.mean_error != other.mean_error {
            return self.mean_error < other.mean_error;
        }
        self.order < other.order
    }
}

fn pick(a: Option<Hypothesis>, b: Option<Hypothesis>) -> Option<Hypothesis> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if b.better_than(&a) { b } else { a }),
        (a, None) => a,
        (None, b) => b,
    }
}

fn score(
    e: &EssentialMatrix,
    k: &CameraIntrinsics,
    correspondences: &[Correspondence],
    threshold: f64,
) -> (usize, f64) {
    let scorer = EpipolarScorer::new(e, k);
    let (mut count, mut sum) = (0usize, 0.0f64);
    for c in correspondences {
        let s = scorer.sampson(&c.first, &c.second);
        if s <= threshold {
            count += 1;
            sum += s;
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { f64::INFINITY };
    (count, mean)
}

/// Solves one seeded minimal sample drawn from `pool` and returns its best
/// candidate.
fn hypothesize(
    stream: u64,
    seed: u64,
    pool: &[usize],
    normalized: &[(NormalizedPoint, NormalizedPoint)],
    correspondences: &[Correspondence],
    k: &CameraIntrinsics,
    threshold: f64,
) -> Option<Hypothesis> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let idx = sample(&mut rng, pool.len(), 5);
    let mut first = [NormalizedPoint::new(0.0, 0.0); 5];
    let mut second = first;
    for (slot, i) in idx.iter().enumerate() {
        let (a, b) = normalized[pool[i]];
        first[slot] = a;
        second[slot] = b;
    }
    let candidates = five_point(&first, &second).ok()?;
    let mut best = None;
    for (ci, e) in candidates.into_iter().enumerate() {
        let (inliers, mean_error) = score(&e, k, correspondences, threshold);
        best = pick(
            best,
            Some(Hypothesis {
                essential: e,
                inliers,
                mean_error,
                order: (stream, ci),
            }),
        );
    }
    best
}

fn required_iterations(inlier_ratio: f64, confidence: f64) -> f64 {
    let good = inlier_ratio.powi(5);
    if good >= 1.0 {
        return 0.0;
    }
    if good <= 0.0 {
        return f64::INFINITY;
    }
    (1.0 - confidence).ln() / (1.0 - good).ln()
}

/// Robust relative pose: seeded RANSAC over five-point hypotheses scored by
/// Sampson distance, a refit on the consensus set, and cheirality selection.
///
/// Hypotheses are evaluated in parallel; the winner is chosen by a total
/// order, so results depend only on the inputs and `config.seed`.
pub fn estimate_pose_ransac(
    correspondences: &[Correspondence],
    k: &CameraIntrinsics,
    config: &RansacConfig,
) -> Result<PoseEstimate, PoseError> {
    config.validate()?;
    let n = correspondences.len();
    if n < 5 {
        return Err(PoseError::NotEnoughCorrespondences(n));
    }
    let normalized: Vec<_> = correspondences
        .iter()
        .map(|c| (k.normalize(&c.first), k.normalize(&c.second)))
        .collect();
    let all: Vec<usize> = (0..n).collect();
    let threshold = config.inlier_threshold;

    let mut best: Option<Hypothesis> = None;
    let mut done = 0usize;
    while done < config.max_iterations {
        let end = (done + BATCH).min(config.max_iterations);
        let batch_best = (done..end)
            .into_par_iter()
            .map(|it| {
                hypothesize(
                    it as u64,
                    config.seed,
                    &all,
                    &normalized,
                    correspondences,
                    k,
                    threshold,
                )
            })
            .reduce(|| None, pick);
        best = pick(best, batch_best);
        done = end;
        if let Some(b) = &best {
            let needed = required_iterations(b.inliers as f64 / n as f64, config.confidence);
            if done >= config.min_iterations && (done as f64) >= needed {
                break;
            }
        }
    }

    let mut best = best
        .filter(|b| b.inliers >= 5)
        .ok_or_else(|| PoseError::EstimationFailed("no model with at least 5 inliers".into()))?;

    if config.refit_samples > 0 {
        let scorer = EpipolarScorer::new(&best.essential, k);
        let consensus: Vec<usize> = correspondences
            .iter()
            .enumerate()
            .filter(|(_, c)| scorer.sampson(&c.first, &c.second) <= threshold)
            .map(|(i, _)| i)
            .collect();
        if consensus.len() > 5 {
            let refit = (0..config.refit_samples)
                .into_par_iter()
                .map(|j| {
                    hypothesize(
                        REFIT_STREAM + j as u64,
                        config.seed,
                        &consensus,
                        &normalized,
                        correspondences,
                        k,
                        threshold,
                    )
                })
                .reduce(|| None, pick);
            best = pick(Some(best), refit).expect("current best");
        }
    }

    let classify = |e: &EssentialMatrix| -> Vec<bool> {
        let scorer = EpipolarScorer::new(e, k);
        correspondences
            .iter()
            .map(|c| scorer.sampson(&c.first, &c.second) <= threshold)
            .collect()
    };
    let select = |mask: &[bool]| -> Vec<Correspondence> {
        correspondences
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(c, _)| *c)
            .collect()
    };
    let choose_pose = |e: &EssentialMatrix, inliers: &[Correspondence]| {
        let step = inliers.len().div_ceil(CHEIRALITY_SAMPLES).max(1);
        let voters: Vec<Correspondence> = inliers.iter().step_by(step).copied().collect();
        let candidates =
            decompose_essential(e).map_err(|e| PoseError::EstimationFailed(e.to_string()))?;
        select_by_cheirality(&candidates, &voters, k)
            .map_err(|e| PoseError::EstimationFailed(format!("degenerate: {e}")))
    };

    let mut essential = best.essential;
    let mut inlier_mask = classify(&essential);
    let mut inliers = select(&inlier_mask);
    let mut pose = choose_pose(&essential, &inliers)?;
    for _ in 0..config.refine_rounds {
        let scorer = EpipolarScorer::new(&essential, k);
        let band: Vec<Correspondence> = correspondences
            .iter()
            .filter(|c| scorer.sampson(&c.first, &c.second) <= REFINE_BAND * threshold)
            .copied()
            .collect();
        let refined = refine_pose(&pose, &band, k, Some(threshold.sqrt()), 100);
        let Ok(e) = essential_from_pose(&refined) else {
            break;
        };
        let mask = classify(&e);
        let stable = mask == inlier_mask;
        essential = e;
        inlier_mask = mask;
        inliers = select(&inlier_mask);
        pose = refined;
        if stable || inliers.len() < 5 {
            break;
        }
    }
    if inliers.len() < 5 {
        return Err(PoseError::EstimationFailed("refinement lost the consensus set".into()));
    }
    if config.refine_rounds > 0 {
        // Sampson error cannot tell t from −t; vote again on the final model.
        pose = choose_pose(&essential, &inliers)?;
    }
    let (_, mean_inlier_sampson) = score(&essential, k, &inliers, threshold);

    let mut flows: Vec<f64> = inliers.iter().map(|c| c.displacement()).collect();
    flows.sort_by(f64::total_cmp);
    let median_inlier_flow = flows[flows.len() / 2];

    Ok(PoseEstimate {
        pose,
        essential,
        inlier_mask,
        iterations_run: done,
        mean_inlier_sampson,
        low_parallax: median_inlier_flow < LOW_PARALLAX_PX,
        median_inlier_flow,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PixelPoint;

    #[test]
    fn config_validation() {
        assert!(RansacConfig::default().validate().is_ok());
        let bad = RansacConfig {
            confidence: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RansacConfig {
            min_iterations: 10,
            max_iterations: 5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RansacConfig {
            inlier_threshold: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn iteration_bound() {
        assert_eq!(required_iterations(1.0, 0.99), 0.0);
        let n = required_iterations(0.5, 0.99);
        assert!((n - (0.01f64).ln() / (1.0 - 0.03125f64).ln()).abs() < 1e-9);
        assert!(required_iterations(0.0, 0.99).is_infinite());
    }

    #[test]
    fn too_few_correspondences() {
        let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap();
        let c = Correspondence::new(PixelPoint::new(0.0, 0.0), PixelPoint::new(1.0, 0.0));
        assert_eq!(
            estimate_pose_ransac(&[c; 4], &k, &RansacConfig::default()),
            Err(PoseError::NotEnoughCorrespondences(4))
        );
    }

    #[test]
    fn zero_motion_is_not_a_success() {
        let k = CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0).unwrap();
        let corr: Vec<_> = (0..100)
            .map(|i| {
                let p = PixelPoint::new((i % 10) as f64 * 9.0, (i / 10) as f64 * 9.0);
                Correspondence::new(p, p)
            })
            .collect();
        match estimate_pose_ransac(&corr, &k, &RansacConfig::default()) {
            Err(_) => {}
            Ok(est) => assert!(est.low_parallax),
        }
    }
}
