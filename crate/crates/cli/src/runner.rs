//! Shared machinery for `run` and `sweep`: build or load the frame
//! sequences, drive the pipeline over them and collect per-step records.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use motiondepth::error::Result;
use motiondepth::estimators;
use motiondepth::io;
use motiondepth::metrics;
use motiondepth::pipeline::{
    DepthMap, Pipeline, PipelineConfig, ShiftPlan, SpeedSample, StepOutcome,
};
use motiondepth::stillbox::{
    generate_scene, render_sequence, sample_trajectory, Frame, Intrinsics, OrientationNoise,
    Trajectory,
};

use crate::config::ExperimentConfig;

/// One scene's input data, shared across estimator/plane-count jobs.
pub struct SceneRun {
    pub index: usize,
    pub seed: u64,
    pub frames: Vec<Frame>,
    pub trajectory: Trajectory,
    pub intrinsics: Intrinsics,
}

/// Render the configured scenes (or load them from a dataset directory).
pub fn build_scenes(cfg: &ExperimentConfig) -> Result<Vec<Arc<SceneRun>>> {
    if let Some(dir) = &cfg.dataset {
        return load_scenes(dir);
    }
    let mut runs = Vec::with_capacity(cfg.scene_count);
    for index in 0..cfg.scene_count {
        let seed = cfg.scene_seed(index);
        let scene = generate_scene(seed, &cfg.scene)?;
        let trajectory = sample_trajectory(
            seed,
            cfg.trajectory.speed,
            cfg.trajectory.frame_period,
            cfg.trajectory.frame_count,
        )?;
        let noise = (cfg.noise_n0 > 0.0)
            .then(|| OrientationNoise::new(cfg.noise_n0, seed ^ 0x6e01).unwrap());
        let frames = render_sequence(&scene, &trajectory, &cfg.intrinsics, noise.as_ref())?;
        runs.push(Arc::new(SceneRun {
            index,
            seed,
            frames,
            trajectory,
            intrinsics: cfg.intrinsics,
        }));
    }
    Ok(runs)
}

fn load_scenes(root: &Path) -> Result<Vec<Arc<SceneRun>>> {
    let manifest: io::Manifest = io::read_json(&io::manifest_path(root))?;
    let mut runs = Vec::with_capacity(manifest.scenes.len());
    for (index, entry) in manifest.scenes.iter().enumerate() {
        let (meta, frames, intrinsics) = io::read_scene_dir(&root.join(&entry.directory))?;
        runs.push(Arc::new(SceneRun {
            index,
            seed: entry.seed,
            frames,
            trajectory: meta.trajectory,
            intrinsics,
        }));
    }
    Ok(runs)
}

/// Per-plane β statistics kept in the step trace.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BetaStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Fraction of pixels with β inside [β_min, β_max).
    pub in_range_frac: f64,
}

/// Everything measured at one ready pipeline step.
pub struct StepRecord {
    pub step: usize,
    pub timestamp: f64,
    pub plan: ShiftPlan,
    pub beta_stats: Vec<BetaStats>,
    pub depth: DepthMap,
    pub l1: f64,
    pub rmse: f64,
    /// Masked normalized error (mean over counted pixels).
    pub norm_err: f64,
    pub err_sum: f64,
    pub err_count: usize,
    pub runtime_ms: f64,
}

/// Drive the pipeline over one scene; speeds are synthesized from the
/// trajectory at the configured sensor rate.
pub fn run_scene(cfg: &ExperimentConfig, scene: &SceneRun) -> Result<Vec<StepRecord>> {
    let calib = cfg.estimator.calibration()?;
    let estimator = estimators::by_name(
        &cfg.estimator.name,
        calib,
        &scene.intrinsics,
        cfg.estimator.plane_sweep,
    )?;
    let pipe_cfg = PipelineConfig {
        planes: cfg.pipeline.planes,
        calibration: calib,
        fusion: cfg.pipeline.fusion,
        frame_capacity: cfg.pipeline.frame_capacity,
        speed_capacity: cfg.pipeline.speed_capacity,
    };
    let mut pipeline = Pipeline::new(pipe_cfg, Arc::from(estimator))?;

    let velocity = scene.trajectory.velocity();
    let period = 1.0 / cfg.speed_rate_hz;
    let mut speed_t = -scene.trajectory.frame_period;
    let mut records = Vec::new();
    for (step, frame) in scene.frames.iter().enumerate() {
        let mut speeds = Vec::new();
        while speed_t <= frame.timestamp {
            speeds.push(SpeedSample { velocity, timestamp: speed_t });
            speed_t += period;
        }
        let started = Instant::now();
        let outcome = pipeline.step(frame.clone(), &speeds)?;
        let runtime_ms = started.elapsed().as_secs_f64() * 1e3;
        let StepOutcome::Ready(out) = outcome else { continue };

        let fusion = &cfg.pipeline.fusion;
        let beta_stats = out
            .beta_maps
            .iter()
            .map(|m| {
                let in_range = m
                    .values
                    .as_slice()
                    .iter()
                    .filter(|&&b| fusion.in_range(b as f64))
                    .count();
                BetaStats {
                    min: m.values.min() as f64,
                    mean: m.values.mean(),
                    max: m.values.max() as f64,
                    in_range_frac: in_range as f64 / m.values.len() as f64,
                }
            })
            .collect();

        // Representable ceiling of this step's plan: the depth that
        // saturates the farthest plane.
        let alpha = calib.alpha();
        let ceiling = if cfg.mask_above_ceiling {
            out.plan
                .planes
                .iter()
                .map(|p| alpha * p.achieved_displacement)
                .fold(0.0f64, f64::max)
        } else {
            f64::INFINITY
        };
        let gt = &frame.gt_depth;
        let pred = &out.depth.values;
        let (err_sum, err_count) = metrics::normalized_abs_error_below(pred, gt, ceiling)?;
        records.push(StepRecord {
            step,
            timestamp: frame.timestamp,
            plan: out.plan.clone(),
            beta_stats,
            depth: out.depth.clone(),
            l1: metrics::l1_error(pred, gt)?,
            rmse: metrics::rmse(pred, gt)?,
            norm_err: if err_count > 0 { err_sum / err_count as f64 } else { f64::NAN },
            err_sum,
            err_count,
            runtime_ms,
        });
    }
    Ok(records)
}

/// Scene-level aggregate over the steady-state steps (skips the first two
/// ready steps while the plan is still adapting, when enough steps exist).
pub struct SceneSummary {
    pub l1: f64,
    pub rmse: f64,
    pub norm_err: f64,
    pub err_sum: f64,
    pub err_count: usize,
    pub runtime_ms: f64,
}

pub fn summarize(records: &[StepRecord]) -> SceneSummary {
    let skip = if records.len() > 3 { 2 } else { 0 };
    let tail = &records[skip..];
    let n = tail.len().max(1) as f64;
    let err_sum: f64 = tail.iter().map(|r| r.err_sum).sum();
    let err_count: usize = tail.iter().map(|r| r.err_count).sum();
    SceneSummary {
        l1: tail.iter().map(|r| r.l1).sum::<f64>() / n,
        rmse: tail.iter().map(|r| r.rmse).sum::<f64>() / n,
        norm_err: if err_count > 0 { err_sum / err_count as f64 } else { f64::NAN },
        err_sum,
        err_count,
        runtime_ms: tail.iter().map(|r| r.runtime_ms).sum::<f64>() / n,
    }
}
