//! Experiment configuration: a JSON file plus command-line overrides. The
//! effective config is archived next to a run's outputs so any artifact can
//! be re-derived from it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use motiondepth::error::{Error, Result};
use motiondepth::estimators::{EstimatorCalibration, PlaneSweepConfig};
use motiondepth::pipeline::FusionParams;
use motiondepth::stillbox::{Intrinsics, SceneParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryParams {
    pub speed: f64,
    pub frame_period: f64,
    pub frame_count: usize,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        // 0.1 m per frame, ten-frame clips.
        Self { speed: 1.0, frame_period: 0.1, frame_count: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSection {
    /// `oracle`, `oracle-clamped` or `plane-sweep`.
    pub name: String,
    /// Calibration overrides; unset fields use the estimator's defaults.
    pub d0: Option<f64>,
    pub max_distance: Option<f64>,
    pub clamp_min: Option<f64>,
    pub clamp_max: Option<f64>,
    pub plane_sweep: PlaneSweepConfig,
}

impl Default for EstimatorSection {
    fn default() -> Self {
        Self {
            name: "oracle".into(),
            d0: None,
            max_distance: None,
            clamp_min: None,
            clamp_max: None,
            plane_sweep: PlaneSweepConfig::default(),
        }
    }
}

impl EstimatorSection {
    /// Resolve the calibration: per-name defaults overridden by any explicit
    /// fields. The plane-sweep default uses d0 = 1 m (α = 100), which keeps
    /// its epipolar steps a few pixels wide at β_mean.
    pub fn calibration(&self) -> Result<EstimatorCalibration> {
        let base = match self.name.as_str() {
            "oracle" => EstimatorCalibration::unclamped(),
            "oracle-clamped" => EstimatorCalibration::clamped(),
            "plane-sweep" => EstimatorCalibration { d0: 1.0, max_distance: 100.0, clamp_range: None },
            other => return Err(Error::config(format!("unknown estimator '{other}'"))),
        };
        let clamp_range = match (self.clamp_min, self.clamp_max) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => base.clamp_range,
            _ => return Err(Error::config("clamp_min and clamp_max must be set together")),
        };
        EstimatorCalibration::new(
            self.d0.unwrap_or(base.d0),
            self.max_distance.unwrap_or(base.max_distance),
            clamp_range,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub planes: usize,
    pub frame_capacity: usize,
    pub speed_capacity: usize,
    pub fusion: FusionParams,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self { planes: 1, frame_capacity: 64, speed_capacity: 1024, fusion: FusionParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub scene_count: usize,
    pub scene: SceneParams,
    pub trajectory: TrajectoryParams,
    pub intrinsics: Intrinsics,
    /// Orientation noise magnitude N0 (radians); 0 disables it.
    pub noise_n0: f64,
    pub estimator: EstimatorSection,
    pub pipeline: PipelineSection,
    /// Speed sensor sampling rate for synthesized runs.
    pub speed_rate_hz: f64,
    /// Run from a previously generated dataset instead of rendering.
    pub dataset: Option<PathBuf>,
    /// Emit per-step fused depth PFMs during `run`.
    pub write_depth: bool,
    /// Emit inverse-depth PGM visualizations (capped at 100 m).
    pub write_viz: bool,
    /// Exclude pixels whose ground truth exceeds the plan's representable
    /// ceiling from the normalized error (on by default).
    pub mask_above_ceiling: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scene_count: 1,
            scene: SceneParams::default(),
            trajectory: TrajectoryParams::default(),
            intrinsics: Intrinsics::square(256),
            noise_n0: 0.0,
            estimator: EstimatorSection::default(),
            pipeline: PipelineSection::default(),
            speed_rate_hz: 100.0,
            dataset: None,
            write_depth: true,
            write_viz: false,
            mask_above_ceiling: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        motiondepth::io::read_json(path)
    }

    /// Check every module invariant before running anything.
    pub fn validate(&self) -> Result<()> {
        if self.scene_count == 0 {
            return Err(Error::config("scene_count must be >= 1"));
        }
        self.scene.validate()?;
        self.intrinsics.validate()?;
        if !(self.trajectory.speed > 0.0) || !(self.trajectory.frame_period > 0.0) {
            return Err(Error::config("trajectory speed and frame_period must be > 0"));
        }
        if self.trajectory.frame_count < 2 {
            return Err(Error::config("trajectory frame_count must be >= 2"));
        }
        if self.noise_n0 < 0.0 {
            return Err(Error::config("noise_n0 must be >= 0"));
        }
        if !(self.speed_rate_hz > 0.0) {
            return Err(Error::config("speed_rate_hz must be > 0"));
        }
        self.estimator.calibration()?;
        self.estimator.plane_sweep.validate()?;
        self.pipeline.fusion.validate()?;
        if self.pipeline.planes == 0 || self.pipeline.planes > motiondepth::pipeline::MAX_PLANES {
            return Err(Error::config("pipeline.planes must be in 1..=4"));
        }
        if self.pipeline.frame_capacity < 2 || self.pipeline.speed_capacity < 2 {
            return Err(Error::config("buffer capacities must be >= 2"));
        }
        Ok(())
    }

    /// Per-scene seed derived from the master seed.
    pub fn scene_seed(&self, index: usize) -> u64 {
        motiondepth::rng::CounterRng::new(self.seed).stream(11).raw(index as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_roundtrips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn estimator_defaults_resolve_by_name() {
        let mut e = EstimatorSection::default();
        assert_eq!(e.calibration().unwrap(), EstimatorCalibration::unclamped());
        e.name = "oracle-clamped".into();
        assert_eq!(e.calibration().unwrap(), EstimatorCalibration::clamped());
        e.name = "plane-sweep".into();
        assert!((e.calibration().unwrap().alpha() - 100.0).abs() < 1e-12);
        e.name = "bogus".into();
        assert!(e.calibration().is_err());
    }

    #[test]
    fn invalid_sections_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.pipeline.planes = 9;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.scene.primitive_count = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.estimator.clamp_min = Some(5.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scene_seeds_are_distinct_and_stable() {
        let cfg = ExperimentConfig::default();
        assert_ne!(cfg.scene_seed(0), cfg.scene_seed(1));
        assert_eq!(cfg.scene_seed(3), cfg.scene_seed(3));
    }
}
