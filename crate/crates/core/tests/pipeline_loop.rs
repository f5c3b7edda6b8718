//! End-to-end behavior of the buffered loop with the oracle estimators:
//! warmup signalling, exact depth reconstruction, the planned-shift fixpoint
//! and the near/far split across planes.

use std::sync::Arc;

use motiondepth::estimators::{EstimatorCalibration, OracleEstimator};
use motiondepth::pipeline::{Pipeline, PipelineConfig, SpeedSample, StepOutcome};
use motiondepth::stillbox::{
    generate_scene, render_sequence, sample_trajectory, Intrinsics, Primitive, Scene, SceneParams,
    Trajectory,
};
use nalgebra::Vector3;

/// Feed a rendered sequence with 100 Hz speed samples; collect ready steps.
fn run_pipeline(
    pipeline: &mut Pipeline,
    frames: &[motiondepth::stillbox::Frame],
    trajectory: &Trajectory,
) -> Vec<motiondepth::pipeline::StepOutput> {
    let v = trajectory.velocity();
    let mut outputs = Vec::new();
    let mut speed_t = -trajectory.frame_period;
    for frame in frames {
        let mut speeds = Vec::new();
        while speed_t <= frame.timestamp {
            speeds.push(SpeedSample { velocity: v, timestamp: speed_t });
            speed_t += 0.01;
        }
        match pipeline.step(frame.clone(), &speeds).unwrap() {
            StepOutcome::Warmup => {}
            StepOutcome::Ready(out) => outputs.push(*out),
        }
    }
    outputs
}

#[test]
fn warmup_then_exact_identity_with_oracle() {
    let intr = Intrinsics::square(64);
    let params = SceneParams { primitive_count: 12, ..SceneParams::default() };
    let scene = generate_scene(21, &params).unwrap();
    let trajectory = sample_trajectory(21, 1.0, 0.1, 10).unwrap();
    let frames = render_sequence(&scene, &trajectory, &intr, None).unwrap();

    let config = PipelineConfig::default();
    let est = Arc::new(OracleEstimator::new(config.calibration).unwrap());
    let mut pipeline = Pipeline::new(config.clone(), est).unwrap();

    let outputs = run_pipeline(&mut pipeline, &frames, &trajectory);
    assert_eq!(outputs.len(), frames.len() - 1, "exactly one warmup step");

    // Noiseless oracle + fusion reproduce gt wherever some plane is in the
    // weighted range. Early steps only have short shifts available, so the
    // in-range share starts small and must grow by steady state.
    let mut last_checked = 0;
    for out in &outputs {
        out.depth.validate().unwrap();
        let step_frame = frames.iter().find(|f| f.timestamp == out.depth.timestamp).unwrap();
        last_checked = 0;
        for y in 0..64 {
            for x in 0..64 {
                let in_range = out.beta_maps.iter().any(|m| {
                    let b = m.values.get(x, y) as f64;
                    pipeline.config().fusion.in_range(b)
                });
                if !in_range {
                    continue;
                }
                last_checked += 1;
                let gt = step_frame.gt_depth.get(x, y) as f64;
                let fused = out.depth.values.get(x, y) as f64;
                assert!(
                    (fused - gt).abs() / gt < 1e-6,
                    "t={} ({x},{y}): {fused} vs {gt}",
                    out.depth.timestamp
                );
            }
        }
    }
    assert!(last_checked > 3000, "too few in-range pixels at steady state: {last_checked}");
}

#[test]
fn two_plane_identity_on_narrow_depth_scene() {
    // All depths fit both planes unsaturated, so fusion must be exact at
    // every pixel even with n = 2.
    let intr = Intrinsics::square(64);
    let scene = Scene::walls_only(24.0, 3).unwrap();
    let trajectory = Trajectory {
        direction: [1.0, 0.0, 0.0],
        speed: 1.0,
        frame_period: 0.1,
        frame_count: 10,
    };
    let frames = render_sequence(&scene, &trajectory, &intr, None).unwrap();

    let config = PipelineConfig { planes: 2, ..PipelineConfig::default() };
    let est = Arc::new(OracleEstimator::new(config.calibration).unwrap());
    let mut pipeline = Pipeline::new(config, est).unwrap();
    let outputs = run_pipeline(&mut pipeline, &frames, &trajectory);

    let last = outputs.last().unwrap();
    let step_frame = frames.iter().find(|f| f.timestamp == last.depth.timestamp).unwrap();
    for y in 0..64 {
        for x in 0..64 {
            let gt = step_frame.gt_depth.get(x, y) as f64;
            let fused = last.depth.values.get(x, y) as f64;
            assert!((fused - gt).abs() / gt < 1e-6, "({x},{y}): {fused} vs {gt}");
        }
    }
}

#[test]
fn planned_shift_reaches_beta_mean_fixpoint() {
    // Constant-depth scene (fronto-parallel wall, lateral motion) with exact
    // pair availability: the plan drives mean β to β_mean within 3 steps.
    let intr = Intrinsics::square(64);
    let scene = Scene::walls_only(20.0, 5).unwrap();
    let trajectory = Trajectory {
        direction: [1.0, 0.0, 0.0],
        speed: 0.5,
        frame_period: 0.1,
        frame_count: 10,
    };
    let frames = render_sequence(&scene, &trajectory, &intr, None).unwrap();

    let config = PipelineConfig::default();
    let calib = config.calibration;
    let est = Arc::new(OracleEstimator::new(calib).unwrap());
    let mut pipeline = Pipeline::new(config, est).unwrap();
    let outputs = run_pipeline(&mut pipeline, &frames, &trajectory);

    // Quantization: one frame of displacement either way around the chosen
    // shift changes β by at most this much.
    let step_disp = trajectory.speed * trajectory.frame_period;
    let d_opt = 20.0 / (calib.alpha() * 0.4);
    let quant = {
        let b = |d: f64| 20.0 / (calib.alpha() * d);
        (b(d_opt - step_disp) - 0.4).abs().max((0.4 - b(d_opt + step_disp)).abs())
    };

    let by_third_step = &outputs[2];
    let mean_beta = by_third_step.beta_maps[0].values.mean();
    assert!(
        (mean_beta - 0.4).abs() <= quant + 1e-6,
        "mean β {mean_beta} not within {quant} of 0.4"
    );
    // With this geometry the optimal pair exists exactly: shift 3, D* 0.15.
    assert_eq!(by_third_step.plan.planes[0].shift, 3);
}

#[test]
fn clamped_planes_split_near_and_far_content() {
    // Near sphere + far wall with the mid-range estimator: after a couple of
    // steps the small shift resolves the sphere and the large shift the
    // wall, each to within 10%, and each is wrong for the other's range.
    let intr = Intrinsics::square(64);
    let scene = Scene {
        primitives: vec![Primitive::Sphere { center: [0.0, 0.0, 16.0], radius: 4.5, texture_id: 0 }],
        box_half_extent: 80.0,
        seed: 9,
    };
    let trajectory = Trajectory {
        direction: [1.0, 0.0, 0.0],
        speed: 2.0,
        frame_period: 0.1,
        frame_count: 16,
    };
    let frames = render_sequence(&scene, &trajectory, &intr, None).unwrap();

    let config = PipelineConfig {
        planes: 2,
        calibration: EstimatorCalibration::clamped(),
        ..PipelineConfig::default()
    };
    let est = Arc::new(OracleEstimator::new(config.calibration).unwrap());
    let mut pipeline = Pipeline::new(config.clone(), est).unwrap();
    let outputs = run_pipeline(&mut pipeline, &frames, &trajectory);
    let last = outputs.last().unwrap();
    assert_eq!(last.plan.planes.len(), 2);
    assert!(last.plan.planes[0].shift < last.plan.planes[1].shift);

    let frame = frames.iter().find(|f| f.timestamp == last.depth.timestamp).unwrap();
    let center = 32;
    let near_gt = frame.gt_depth.get(center, center) as f64; // sphere
    let far_gt = frame.gt_depth.get(center, 2) as f64; // wall above the sphere
    assert!(near_gt < 15.0 && far_gt > 70.0, "scene setup: near {near_gt}, far {far_gt}");

    let calib = config.calibration;
    let z = |plane: usize, x: usize, y: usize| last.beta_maps[plane].metric_depth(&calib, x, y);
    let near_err = (z(0, center, center) - near_gt).abs() / near_gt;
    let far_err = (z(1, center, 2) - far_gt).abs() / far_gt;
    assert!(near_err < 0.1, "small shift misses near content: {near_err}");
    assert!(far_err < 0.1, "large shift misses far content: {far_err}");
    let cross_near = (z(1, center, center) - near_gt).abs() / near_gt;
    let cross_far = (z(0, center, 2) - far_gt).abs() / far_gt;
    assert!(cross_near > near_err && cross_far > far_err, "planes did not specialize");
}

#[test]
fn parallel_plane_estimates_match_sequential_rerun() {
    // Determinism across runs (and thus across rayon schedules).
    let intr = Intrinsics::square(32);
    let params = SceneParams { primitive_count: 10, ..SceneParams::default() };
    let scene = generate_scene(33, &params).unwrap();
    let trajectory = sample_trajectory(33, 1.0, 0.1, 8).unwrap();
    let frames = render_sequence(&scene, &trajectory, &intr, None).unwrap();

    let mut depths = Vec::new();
    for _ in 0..2 {
        let config = PipelineConfig { planes: 3, ..PipelineConfig::default() };
        let est = Arc::new(OracleEstimator::new(config.calibration).unwrap());
        let mut pipeline = Pipeline::new(config, est).unwrap();
        let outputs = run_pipeline(&mut pipeline, &frames, &trajectory);
        depths.push(outputs.last().unwrap().depth.clone());
    }
    assert_eq!(depths[0], depths[1]);
}
