//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twoview::features::KeypointParams;
use twoview::geometry::{
    angle_between, decompose_essential, essential_from_pose, rotation_distance, CameraIntrinsics,
    Correspondence, RigidTransform,
};
use twoview::io::Trajectory;
use twoview::metrics::{
    depth_metrics, flow_loss, huber_depth_loss, huber_depth_loss_with_grad, kitti_vo_errors,
    pose_errors, scale_invariant_loss, total_loss, umeyama_align, HuberForm, Scaling, Similarity,
};
use twoview::pose::{
    apply_mask_strategy, estimate_pose_ransac, five_point, select_by_cheirality, MaskAux,
    MaskStrategy, RansacConfig,
};
use twoview::raster::{DepthMap, FlowField};
use twoview::sweep::{
    plane_sweep, reconcile_scale, warp_candidates, CostFunction, ExtractionMode, HypothesisSchedule,
};
use twoview::synthetic::{generate, OutlierMode, SceneKind, SceneSpec, TextureParams};

fn report(id: u32, name: &str, ok: bool, detail: String) {
    println!("criterion {id} [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

/// Random rotation of up to ~11° and a unit baseline in a random direction.
fn unit_baseline_pose(rng: &mut ChaCha8Rng) -> RigidTransform {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let t = loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            break v / n;
        }
    };
    RigidTransform::from_axis_angle(axis, rng.random_range(0.0..0.2), t)
}

fn kitti_like() -> CameraIntrinsics {
    CameraIntrinsics::new(300.0, 300.0, 159.5, 119.5).unwrap()
}

/// Exact correspondences of `n` random points 2–20 units in front of camera 1
/// that are also in front of camera 2 (no image bounds).
fn exact_matches(pose: &RigidTransform, k: &CameraIntrinsics, n: usize, rng: &mut ChaCha8Rng) -> Vec<Correspondence> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let z = rng.random_range(2.0..20.0);
        let x = Vector3::new(rng.random_range(-0.6..0.6) * z, rng.random_range(-0.45..0.45) * z, z);
        let y = pose.transform_point(&x);
        if y.z < 0.5 {
            continue;
        }
        out.push(Correspondence::new(k.project(&x).unwrap(), k.project(&y).unwrap()));
    }
    out
}

#[test]
fn criterion_1_geometry_round_trip() {
    let start = Instant::now();
    let k = kitti_like();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut max_r, mut max_t) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let t = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let pose = RigidTransform::from_axis_angle(axis, rng.random_range(0.0..0.5), t * rng.random_range(0.1..5.0));
        let e = essential_from_pose(&pose).unwrap();
        let candidates = decompose_essential(&e).unwrap();
        let matches = exact_matches(&pose, &k, 20, &mut rng);
        let got = select_by_cheirality(&candidates, &matches, &k).unwrap();
        max_r = max_r.max(rotation_distance(got.rotation(), pose.rotation()));
        max_t = max_t.max(angle_between(got.translation(), pose.translation()));
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = max_r < 1e-6 && max_t < 1e-6 && secs < 5.0;
    report(1, "geometry round trip", ok, format!("max rot {max_r:.2e} rad, max tran {max_t:.2e} rad, {secs:.2} s"));
    assert!(ok);
}

#[test]
fn criterion_2_five_point() {
    let start = Instant::now();
    let k = kitti_like();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst, mut most) = (0.0f64, 0usize);
    for _ in 0..1000 {
        let pose = unit_baseline_pose(&mut rng);
        let truth = essential_from_pose(&pose).unwrap().unit();
        let matches = exact_matches(&pose, &k, 5, &mut rng);
        let first: [_; 5] = std::array::from_fn(|i| k.normalize(&matches[i].first));
        let second: [_; 5] = std::array::from_fn(|i| k.normalize(&matches[i].second));
        let candidates = five_point(&first, &second).unwrap();
        most = most.max(candidates.len());
        let best = candidates
            .iter()
            .map(|e| {
                let e = e.matrix() / e.matrix().norm();
                (e - truth.matrix()).norm().min((e + truth.matrix()).norm())
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst < 1e-6 && most <= 10 && secs < 30.0;
    report(2, "five-point correctness", ok, format!("worst distance {worst:.2e}, max candidates {most}, {secs:.2} s"));
    assert!(ok);
}

#[test]
fn criterion_3_robust_pose() {
    let start = Instant::now();
    let mut good = 0;
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let spec = SceneSpec {
            kind: SceneKind::PointCloud { n: 1000 },
            pose: unit_baseline_pose(&mut rng),
            noise_px: 1.0,
            outlier_ratio: 0.4,
            seed,
            ..Default::default()
        };
        let sample = generate(&spec).unwrap();
        let config = RansacConfig { inlier_threshold: 2.0, seed, ..Default::default() };
        let est = estimate_pose_ransac(&sample.correspondences(), &spec.intrinsics, &config).unwrap();
        let e = pose_errors(&est.pose, &sample.gt_pose).unwrap();
        worst = (worst.0.max(e.rot_deg), worst.1.max(e.tran_deg));
        if e.rot_deg < 1.0 && e.tran_deg < 2.0 {
            good += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = good >= 95 && secs < 120.0;
    report(3, "robust pose", ok, format!("{good}/100 within 1 deg / 2 deg, worst ({:.3}, {:.3}) deg, {secs:.1} s", worst.0, worst.1));
    assert!(ok);
}

#[test]
fn criterion_4_masking_ablation() {
    let mut sums = [(0.0f64, 0.0f64); 2];
    let mut counts = [0usize; 2];
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let spec = SceneSpec {
            kind: SceneKind::TwoPlanes { near: 4.0, far: 10.0, split: 80, texture_seed: seed },
            width: 160,
            height: 120,
            intrinsics: CameraIntrinsics::new(150.0, 150.0, 79.5, 59.5).unwrap(),
            pose: unit_baseline_pose(&mut rng),
            noise_px: 0.5,
            outlier_ratio: 0.3,
            outlier_mode: OutlierMode::Textureless,
            texture: TextureParams { flat_fraction: 0.6, flat_cell_px: 20.0, ..Default::default() },
            seed,
            ..Default::default()
        };
        let sample = match generate(&spec) {
            Ok(s) => s,
            Err(e) => {
                println!("seed {seed}: {e}");
                continue;
            }
        };
        let img = sample.image1.as_ref().unwrap();
        let config = RansacConfig { inlier_threshold: 1.0, seed, ..Default::default() };
        for (i, strat) in [MaskStrategy::All, MaskStrategy::KeypointLocations(KeypointParams { dilate: 1, ..Default::default() })].iter().enumerate() {
            let corr = apply_mask_strategy(&sample.flow, strat, Some(MaskAux::Image(img))).unwrap();
            let est = estimate_pose_ransac(&corr, &spec.intrinsics, &config).unwrap();
            let e = pose_errors(&est.pose, &sample.gt_pose).unwrap();
            sums[i].0 += e.rot_deg;
            sums[i].1 += e.tran_deg;
            counts[i] += 1;
        }
    }
    let mean = |i: usize| (sums[i].0 / counts[i] as f64, sums[i].1 / counts[i] as f64);
    let (all, kp) = (mean(0), mean(1));
    let ok = counts[0] == 100 && kp.0 <= all.0 && kp.1 <= all.1;
    report(4, "masking ablation", ok, format!("keypoints rot {:.4} tran {:.4} vs all rot {:.4} tran {:.4} (n={})", kp.0, kp.1, all.0, all.1, counts[0]));
    assert!(ok);
}

#[test]
fn criterion_6_plane_sweep_fidelity() {
    let start = Instant::now();
    let spec = SceneSpec::default();
    let sample = generate(&spec).unwrap();
    let (unit, alpha) = sample.gt_pose.normalized().unwrap();
    let SceneKind::TexturedPlane { depth, .. } = spec.kind else { unreachable!() };
    let norm_depth = depth / alpha;
    let schedule = HypothesisSchedule::new(64, norm_depth * 23.5 / 64.0).unwrap();
    let bound = schedule.quantization_bound(norm_depth);
    let (img1, img2) = (sample.image1.as_ref().unwrap(), sample.image2.as_ref().unwrap());
    let mut errs = Vec::new();
    for mode in [ExtractionMode::Hard, ExtractionMode::soft()] {
        let res = plane_sweep(img1, img2, &spec.intrinsics, &unit, &schedule, CostFunction::Sad, mode).unwrap();
        let metric = reconcile_scale(&res.depth, alpha).unwrap();
        let m = depth_metrics(&metric, &sample.matchable_depth(3), Scaling::None, None).unwrap();
        errs.push(m.abs_rel);
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = errs[0] <= bound && errs[1] <= bound && errs[1] < errs[0] && secs < 60.0;
    report(6, "plane-sweep fidelity", ok, format!("abs_rel hard {:.5} soft {:.5}, bound {bound:.5}, {secs:.1} s", errs[0], errs[1]));
    assert!(ok);
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn criterion_5_scale_invariant_matching() {
    let k = kitti_like();
    let schedule = HypothesisSchedule::new(64, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alphas = [0.25, 1.0, 4.0];
    let (mut normalized_equal, mut raw_differs) = (true, true);
    for _ in 0..100 {
        let base = unit_baseline_pose(&mut rng);
        let x = twoview::geometry::PixelPoint::new(rng.random_range(0.0..320.0), rng.random_range(0.0..240.0));
        let mut normalized = Vec::new();
        let mut raw = Vec::new();
        for a in alphas {
            let pose = base.with_translation(base.translation() * a);
            let (unit, _) = pose.normalized().unwrap();
            normalized.push(warp_candidates(&x, &k, &unit, &schedule));
            raw.push(warp_candidates(&x, &k, &pose, &schedule));
        }
        normalized_equal &= normalized.iter().all(|c| *c == normalized[0]);
        let max_gap = raw[1..]
            .iter()
            .flat_map(|c| c.iter().zip(&raw[0]))
            .filter_map(|(a, b)| Some(a.as_ref()?.distance(b.as_ref()?)))
            .fold(0.0f64, f64::max);
        raw_differs &= max_gap > 1.0;
    }

    // Whole pipeline on rendered scenes: the sweep result must not move.
    let mut sweep_equal = true;
    for seed in 0..3u64 {
        let base = SceneSpec {
            width: 160,
            height: 120,
            intrinsics: CameraIntrinsics::new(150.0, 150.0, 79.5, 59.5).unwrap(),
            kind: SceneKind::TwoPlanes { near: 4.0, far: 10.0, split: 80, texture_seed: seed },
            pose: unit_baseline_pose(&mut rng).with_translation(Vector3::new(0.3, 0.02, 0.05)),
            seed,
            ..Default::default()
        };
        let mut results = Vec::new();
        for a in alphas {
            let spec = base.scaled(a);
            let sample = generate(&spec).unwrap();
            let (unit, _) = sample.gt_pose.normalized().unwrap();
            let (img1, img2) = (sample.image1.as_ref().unwrap(), sample.image2.as_ref().unwrap());
            let res = plane_sweep(img1, img2, &spec.intrinsics, &unit, &schedule, CostFunction::Sad, ExtractionMode::soft()).unwrap();
            results.push((bits(res.depth.raw()), bits(res.confidence.data())));
        }
        sweep_equal &= results.iter().all(|r| *r == results[0]);
    }
    let ok = normalized_equal && raw_differs && sweep_equal;
    report(
        5,
        "scale-invariant matching",
        ok,
        format!("normalized candidates identical: {normalized_equal}, raw candidates differ > 1 px: {raw_differs}, sweep bitwise invariant: {sweep_equal}"),
    );
    assert!(ok);
}

#[test]
fn criterion_7_loss_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gt = DepthMap::from_vec(8, 8, (0..64).map(|_| rng.random_range(1.0..50.0)).collect()).unwrap();
    let si_max = [0.1, 1.0, 10.0]
        .iter()
        .map(|&c| scale_invariant_loss(&gt.scaled(c), &gt).unwrap().abs())
        .fold(0.0f64, f64::max);

    // Central differences of the loss against the analytic gradient.
    let mut grad_worst = 0.0f64;
    let mut checked = 0;
    for form in [HuberForm::AsPrinted, HuberForm::Symmetric] {
        let mut points = 0;
        while points < 100 {
            let g = rng.random_range(1.0..10.0);
            let alpha = rng.random_range(0.5..2.0);
            let p = (g + rng.random_range(-4.0..4.0)) / alpha;
            let z: f64 = alpha * p - g;
            if p <= 0.0 || (z.abs() - 1.0).abs() <= 1e-4 {
                continue;
            }
            let (pred, gtm) = (DepthMap::filled(1, 1, p), DepthMap::filled(1, 1, g));
            let (_, grad) = huber_depth_loss_with_grad(&pred, &gtm, alpha, form).unwrap();
            let h = 1e-6 * p.max(1.0);
            let f = |x: f64| huber_depth_loss(&DepthMap::filled(1, 1, x), &gtm, alpha, form).unwrap();
            let fd = (f(p + h) - f(p - h)) / (2.0 * h);
            let rel = (fd - grad[0]).abs() / grad[0].abs().max(1e-12);
            grad_worst = grad_worst.max(rel);
            points += 1;
        }
        checked += points;
    }

    let a = FlowField::filled(4, 5, 0.5, -2.0);
    let b = FlowField::filled(4, 5, 1.5, -1.0);
    let flow_exact = flow_loss(&a, &a).unwrap() == 0.0
        && flow_loss(&b, &a).unwrap() == 40.0
        && total_loss(3.0, f64::NAN, 0.0) == 3.0
        && total_loss(3.0, 40.0, 1.0) == 43.0;

    let ok = si_max <= 1e-10 && grad_worst <= 1e-6 && flow_exact;
    report(
        7,
        "loss identities",
        ok,
        format!("max SI(c·d, d) {si_max:.1e}, worst gradient rel err {grad_worst:.1e} over {checked} points, flow hand cases exact: {flow_exact}"),
    );
    assert!(ok);
}

/// Gently curving drive with 1 m steps; `lateral` adds a sideways step.
fn drive(n: usize, lateral: f64) -> Trajectory {
    let mut pose = RigidTransform::identity();
    let mut out = vec![pose];
    for i in 1..n {
        let yaw = 0.01 * (i as f64 * 0.02).sin();
        let step = RigidTransform::from_axis_angle(Vector3::y(), yaw, Vector3::new(lateral, 0.0, 1.0));
        pose = pose.compose(&step);
        out.push(pose);
    }
    Trajectory::new(out)
}

#[test]
fn criterion_8_metric_suite() {
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let gt = DepthMap::from_vec(2, 1, vec![2.0, 4.0]).unwrap();
    let pred = DepthMap::from_vec(2, 1, vec![3.0, 3.0]).unwrap();
    let m = depth_metrics(&pred, &gt, Scaling::None, None).unwrap();
    checks.push((
        "hand depth example",
        (m.abs_rel - 0.375).abs() < 1e-12 && (m.rmse - 1.0).abs() < 1e-12 && m.delta1 == 0.0 && m.delta2 == 1.0,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dense = DepthMap::from_vec(16, 8, (0..128).map(|_| rng.random_range(1.0..80.0)).collect()).unwrap();
    let k = kitti_like();
    let zeros_ones = |m: &twoview::metrics::DepthMetrics| {
        [m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.d1_all.unwrap_or(0.0), m.l1_inv, m.sc_inv, m.l1_rel]
            .iter()
            .all(|&v| v.abs() < 1e-12)
            && m.delta1 == 1.0
            && m.delta2 == 1.0
            && m.delta3 == 1.0
    };
    let perfect = depth_metrics(&dense, &dense, Scaling::None, Some(twoview::metrics::DisparityParams::kitti(k.fx()))).unwrap();
    checks.push(("perfect depth", zeros_ones(&perfect) && perfect.d1_all == Some(0.0)));
    let doubled = depth_metrics(&dense.scaled(2.0), &dense, Scaling::Median, None).unwrap();
    checks.push(("median scaling", zeros_ones(&doubled)));

    let id = RigidTransform::from_axis_angle(Vector3::x(), 0.3, Vector3::new(1.0, 2.0, 3.0));
    let e = pose_errors(&id, &id).unwrap();
    checks.push(("pose perfect", e.rot_deg.abs() < 1e-9 && e.tran_deg.abs() < 1e-6));
    let t = Vector3::new(0.3, -0.2, 1.0);
    let rz = RigidTransform::from_axis_angle(Vector3::z(), std::f64::consts::FRAC_PI_2, t);
    let e = pose_errors(&rz, &RigidTransform::from_axis_angle(Vector3::z(), 0.0, t)).unwrap();
    checks.push(("pose 90 deg", (e.rot_deg - 90.0).abs() < 1e-9 && e.tran_deg.abs() < 1e-6));
    let e = pose_errors(&id.with_translation(-id.translation()), &id).unwrap();
    checks.push(("pose antipodal", (e.tran_deg - 180.0).abs() < 1e-6));

    let pts: Vec<Vector3<f64>> = (0..20)
        .map(|_| Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
        .collect();
    let s = umeyama_align(&pts, &pts).unwrap();
    checks.push((
        "umeyama identity",
        (s.scale - 1.0).abs() < 1e-12 && (s.rotation - nalgebra::Matrix3::identity()).norm() < 1e-12 && s.translation.norm() < 1e-12,
    ));
    let r30 = *RigidTransform::from_axis_angle(Vector3::y(), 30f64.to_radians(), Vector3::zeros()).rotation();
    let pred: Vec<_> = pts.iter().map(|p| 0.5 * (r30 * p)).collect();
    let s = umeyama_align(&pred, &pts).unwrap();
    checks.push((
        "umeyama constructed",
        (s.scale - 2.0).abs() < 1e-10 && (s.rotation - r30.transpose()).norm() < 1e-10 && s.residual < 1e-10,
    ));
    let mirror: Vec<_> = pts.iter().map(|p| Vector3::new(-p.x, p.y, p.z)).collect();
    let s = umeyama_align(&pts, &mirror).unwrap();
    checks.push(("umeyama reflection trap", (s.rotation.determinant() - 1.0).abs() < 1e-12 && s.residual > 0.0));
    let noisy: Vec<_> = pts.iter().map(|p| 1.7 * (r30 * p) + Vector3::new(rng.random_range(-0.5..0.5), 0.3, rng.random_range(-0.5..0.5))).collect();
    let best = umeyama_align(&pts, &noisy).unwrap();
    let optimal = (0..1000).all(|_| {
        let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let cand = Similarity {
            scale: rng.random_range(0.5..3.0),
            rotation: *RigidTransform::from_axis_angle(axis, rng.random_range(0.0..3.0), Vector3::zeros()).rotation(),
            translation: Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            residual: 0.0,
            degenerate: false,
        };
        best.residual <= cand.residual_of(&pts, &noisy)
    });
    checks.push(("umeyama optimality", optimal));

    let gt_traj = drive(1200, 0.0);
    let vo = kitti_vo_errors(&gt_traj, &gt_traj).unwrap();
    checks.push(("vo perfect", vo.t_err_pct < 1e-9 && vo.r_err_deg_per_100m < 1e-9));
    let g = RigidTransform::from_axis_angle(Vector3::new(0.2, 1.0, 0.1), 0.7, Vector3::new(5.0, 1.0, -3.0));
    let moved = Trajectory::new(
        gt_traj
            .poses()
            .iter()
            .map(|p| {
                let q = g.compose(p);
                q.with_translation(q.translation() * 2.5)
            })
            .collect(),
    );
    let vo = kitti_vo_errors(&moved, &gt_traj).unwrap();
    checks.push(("vo similarity", vo.t_err_pct < 1e-6 && vo.r_err_deg_per_100m < 1e-6));
    let drift = kitti_vo_errors(&drive(1200, 0.01), &gt_traj).unwrap();
    checks.push(("vo 1% drift", (drift.t_err_pct - 1.0).abs() <= 0.1));

    let failed: Vec<_> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let ok = failed.is_empty();
    report(
        8,
        "metric suite",
        ok,
        format!("{} checks, failed {:?}, drift t_err {:.4}%", checks.len(), failed, drift.t_err_pct),
    );
    assert!(ok);
}

fn run_binary(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_twoview"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_9_pipeline_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let path = |name: &str| tmp.path().join(name).to_str().unwrap().to_string();
    let sample = path("sample");
    let synth = run_binary(&[
        "synth", "--kind", "two_planes", "--near-depth", "4", "--far-depth", "10",
        "--noise-px", "0.5", "--outlier-ratio", "0.2", "--seed", "9", "--out", &sample,
    ]);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    let file = |name: &str| format!("{sample}/{name}");

    let first = path("first");
    let run = run_binary(&[
        "pipeline", "--threads", "1",
        "--flow", &file("flow.flo"), "--image1", &file("image1.png"), "--image2", &file("image2.png"),
        "--intrinsics", &file("intrinsics.txt"), "--gt-pose", &file("pose.txt"),
        "--gt-depth", &file("depth_matchable.pfm"), "--scaling", "gt", "--dmin", "5",
        "--out", &first,
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let manifest = format!("{first}/run_manifest.txt");
    let reference = dir_bytes(std::path::Path::new(&first));

    let mut identical = Vec::new();
    for threads in ["4", "0"] {
        let out = path(&format!("threads{threads}"));
        let rerun = run_binary(&["pipeline", "--config", &manifest, "--threads", threads, "--out", &out]);
        assert!(rerun.status.success(), "{}", String::from_utf8_lossy(&rerun.stderr));
        identical.push(dir_bytes(std::path::Path::new(&out)) == reference);
    }
    let ok = identical.iter().all(|&b| b);
    let names: Vec<_> = reference.iter().map(|(n, _)| n.as_str()).collect();
    report(9, "end-to-end determinism", ok, format!("{} files {:?}, identical across threads 1/4/all: {:?}", names.len(), names, identical));
    assert!(ok);
}
