//! Property tests for the spec-level invariants that hold on arbitrary
//! inputs: output ranges, fusion bounds and convexity, norm-of-integral vs
//! path length, and format round trips.

use motiondepth::estimators::{
    oracle_estimate, plane_sweep_estimate, EstimatorCalibration, NormalizedDepthMap,
    PlaneSweepConfig,
};
use motiondepth::grid::Grid;
use motiondepth::io::{read_pfm, write_pfm};
use motiondepth::metrics::{l1_error, rmse};
use motiondepth::pipeline::{fuse, fusion_weight, integrate_velocity_samples, FusionParams, SpeedSample};
use motiondepth::stillbox::{render_frame, CameraPose, Intrinsics, Scene};
use nalgebra::Vector3;
use proptest::prelude::*;

fn small_grid(lo: f32, hi: f32) -> impl Strategy<Value = Grid> {
    (2usize..10, 2usize..10).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(lo..hi, w * h)
            .prop_map(move |data| Grid::from_vec(w, h, data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_beta_always_in_unit_interval(
        gt in small_grid(0.01, 500.0),
        displacement in 0.0f64..5.0,
        clamped in any::<bool>(),
    ) {
        let calib = if clamped {
            EstimatorCalibration::clamped()
        } else {
            EstimatorCalibration::unclamped()
        };
        let frame = motiondepth::stillbox::Frame {
            image: Grid::new(gt.width(), gt.height(), 0.5),
            gt_depth: gt,
            timestamp: 0.0,
            pose: CameraPose::identity_at(Vector3::zeros()),
        };
        let m = oracle_estimate(&frame, displacement, &calib).unwrap();
        prop_assert!(m.values.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn fusion_weight_bounds_hold(beta in 0.0f64..=1.0) {
        let p = FusionParams::default();
        let w = fusion_weight(beta, &p);
        prop_assert!(w >= p.epsilon && w <= 1.0 + p.epsilon);
    }

    #[test]
    fn fused_pixel_is_convex_combination(
        betas in proptest::collection::vec(0.0f32..=1.0, 1..4),
        disps in proptest::collection::vec(0.05f64..2.0, 4),
    ) {
        let calib = EstimatorCalibration::unclamped();
        let maps: Vec<NormalizedDepthMap> = betas
            .iter()
            .zip(&disps)
            .map(|(&b, &d)| NormalizedDepthMap::new(Grid::new(3, 3, b), d).unwrap())
            .collect();
        let fused = fuse(&maps, &calib, &FusionParams::default(), 0.0).unwrap();
        let zs: Vec<f64> = maps.iter().map(|m| m.metric_depth(&calib, 1, 1)).collect();
        let lo = zs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = fused.values.get(1, 1) as f64;
        let tol = hi.abs().max(1.0) * 1e-6; // fused maps store f32
        prop_assert!(v >= lo - tol && v <= hi + tol);
    }

    #[test]
    fn displacement_never_exceeds_path_length(
        vels in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0), 2..40),
    ) {
        let samples: Vec<SpeedSample> = vels
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z))| SpeedSample {
                velocity: Vector3::new(x, y, z),
                timestamp: i as f64 * 0.05,
            })
            .collect();
        let t1 = samples.last().unwrap().timestamp;
        let displacement = integrate_velocity_samples(&samples, 0.0, t1).unwrap().norm();
        // Trapezoidal path length over the same knots.
        let mut path = 0.0;
        for pair in samples.windows(2) {
            path += 0.5 * (pair[1].timestamp - pair[0].timestamp)
                * (pair[0].velocity.norm() + pair[1].velocity.norm());
        }
        prop_assert!(displacement <= path + 1e-9, "{displacement} > {path}");
    }

    #[test]
    fn rmse_at_least_l1(pred in small_grid(0.0, 100.0), seed in any::<u64>()) {
        let rng = motiondepth::rng::CounterRng::new(seed);
        let gt = Grid::from_fn(pred.width(), pred.height(), |x, y| {
            rng.uniform_in((y * pred.width() + x) as u64, 1.0, 100.0) as f32
        });
        prop_assert!(rmse(&pred, &gt).unwrap() + 1e-12 >= l1_error(&pred, &gt).unwrap());
    }

    #[test]
    fn pfm_roundtrip_bit_exact(map in small_grid(-1000.0, 1000.0)) {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("m.pfm");
        write_pfm(&path, &map).unwrap();
        prop_assert_eq!(read_pfm(&path).unwrap(), map);
    }
}

proptest! {
    // The sweep renders real frames; keep the case count low.
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn plane_sweep_output_in_unit_interval(
        seed in 0u64..1000,
        tx in 0.05f64..0.5,
        tz in -0.2f64..0.2,
    ) {
        let intr = Intrinsics::square(32);
        let scene = Scene::walls_only(30.0, seed).unwrap();
        let t = Vector3::new(tx, 0.0, tz);
        let reference = render_frame(&scene, &CameraPose::identity_at(-t), &intr);
        let current = render_frame(&scene, &CameraPose::identity_at(Vector3::zeros()), &intr);
        let cfg = PlaneSweepConfig { hypothesis_count: 16, window_radius: 2, min_beta: 0.05 };
        let m = plane_sweep_estimate(
            &current,
            &reference,
            &t,
            &intr,
            &EstimatorCalibration::unclamped(),
            &cfg,
        )
        .unwrap();
        prop_assert!(m.values.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
