//! The live multi-shift loop: buffer frames and speed samples, integrate
//! displacement, pick one frame pair per depth cluster, run the estimator on
//! each pair (in parallel) and fuse the β maps into a metric depth map that
//! seeds the next step's clustering.

mod fusion;
mod kmeans;

pub use fusion::{fuse, fusion_weight, FusionParams};
pub use kmeans::{kmeans_1d, kmeans_depth, kmeans_depth_with, Clustering};

use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{DepthEstimator, EstimatorCalibration, NormalizedDepthMap};
use crate::grid::Grid;
use crate::stillbox::Frame;

/// Maximum number of planes per step.
pub const MAX_PLANES: usize = 4;

/// One velocity measurement from the speed sensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedSample {
    pub velocity: Vector3<f64>,
    pub timestamp: f64,
}

/// Metric depth map emitted by fusion.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthMap {
    pub values: Grid,
    pub timestamp: f64,
}

impl DepthMap {
    /// Check the all-positive-and-finite invariant.
    pub fn validate(&self) -> Result<()> {
        if self.values.as_slice().iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::contract("depth map must be positive and finite"));
        }
        Ok(())
    }
}

/// One planned plane: the depth cluster it focuses on and the frame pair
/// chosen for it.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PlannedShift {
    /// Cluster centroid Cᵢ, meters.
    pub centroid: f64,
    /// Desired displacement Dᵢ = Cᵢ / (α · β_mean), meters.
    pub desired_displacement: f64,
    /// Chosen frame shift Δᵢ (count of frames back).
    pub shift: usize,
    /// Achieved displacement D*ᵢ of the chosen pair, meters.
    pub achieved_displacement: f64,
}

/// The per-step plan, one entry per plane, centroids ascending.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ShiftPlan {
    pub planes: Vec<PlannedShift>,
}

impl ShiftPlan {
    pub fn validate(&self) -> Result<()> {
        if self.planes.is_empty() || self.planes.len() > MAX_PLANES {
            return Err(Error::contract("plan must hold 1..=4 planes"));
        }
        for pair in self.planes.windows(2) {
            if pair[0].centroid > pair[1].centroid {
                return Err(Error::contract("plan centroids must ascend"));
            }
        }
        if self.planes.iter().any(|p| p.shift < 1 || p.achieved_displacement < 0.0) {
            return Err(Error::contract("plan shifts must be >= 1 with D* >= 0"));
        }
        Ok(())
    }
}

/// Bounded FIFO buffers for frames and speed samples with strictly
/// increasing timestamps.
#[derive(Clone, Debug)]
pub struct RingBuffers {
    frames: VecDeque<Frame>,
    speeds: VecDeque<SpeedSample>,
    frame_capacity: usize,
    speed_capacity: usize,
}

impl RingBuffers {
    pub fn new(frame_capacity: usize, speed_capacity: usize) -> Result<Self> {
        if frame_capacity < 2 || speed_capacity < 2 {
            return Err(Error::config("buffer capacities must be >= 2"));
        }
        Ok(Self {
            frames: VecDeque::with_capacity(frame_capacity),
            speeds: VecDeque::with_capacity(speed_capacity),
            frame_capacity,
            speed_capacity,
        })
    }

    pub fn push_frame(&mut self, frame: Frame) -> Result<()> {
        if let Some(last) = self.frames.back() {
            if frame.timestamp <= last.timestamp {
                return Err(Error::NonMonotonicTimestamp {
                    new: frame.timestamp,
                    last: last.timestamp,
                });
            }
        }
        if self.frames.len() == self.frame_capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn push_speed(&mut self, sample: SpeedSample) -> Result<()> {
        if let Some(last) = self.speeds.back() {
            if sample.timestamp <= last.timestamp {
                return Err(Error::NonMonotonicTimestamp {
                    new: sample.timestamp,
                    last: last.timestamp,
                });
            }
        }
        if self.speeds.len() == self.speed_capacity {
            self.speeds.pop_front();
        }
        self.speeds.push_back(sample);
        Ok(())
    }

    pub fn frames(&self) -> &VecDeque<Frame> {
        &self.frames
    }

    pub fn speeds(&self) -> &VecDeque<SpeedSample> {
        &self.speeds
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Frame `shift` steps behind the newest one.
    pub fn frame_back(&self, shift: usize) -> Option<&Frame> {
        let len = self.frames.len();
        if shift >= len {
            return None;
        }
        self.frames.get(len - 1 - shift)
    }

    /// Vector integral of the buffered velocity over [t - dt, t].
    pub fn integrate_velocity(&self, t: f64, dt: f64) -> Result<Vector3<f64>> {
        let samples: Vec<SpeedSample> = self.speeds.iter().copied().collect();
        integrate_velocity_samples(&samples, t - dt, t)
    }
}

/// Linear interpolation of the velocity signal at time `t`.
///
/// Between samples the value is linear; beyond either end it is linearly
/// extrapolated from the two nearest samples, but no farther than their own
/// spacing. A single-sample buffer is treated as a constant signal.
fn velocity_at(samples: &[SpeedSample], t: f64) -> Result<Vector3<f64>> {
    let first = samples.first().ok_or(Error::PartialCoverage { start: t, end: t })?;
    let last = samples.last().expect("non-empty");
    if samples.len() == 1 {
        return Ok(first.velocity);
    }
    if t < first.timestamp {
        let next = samples[1];
        let gap = next.timestamp - first.timestamp;
        if first.timestamp - t > gap + 1e-12 {
            return Err(Error::PartialCoverage { start: t, end: first.timestamp });
        }
        let slope = (next.velocity - first.velocity) / gap;
        return Ok(first.velocity + slope * (t - first.timestamp));
    }
    if t > last.timestamp {
        let prev = samples[samples.len() - 2];
        let gap = last.timestamp - prev.timestamp;
        if t - last.timestamp > gap + 1e-12 {
            return Err(Error::PartialCoverage { start: last.timestamp, end: t });
        }
        let slope = (last.velocity - prev.velocity) / gap;
        return Ok(last.velocity + slope * (t - last.timestamp));
    }
    let idx = samples.partition_point(|s| s.timestamp <= t);
    let a = samples[idx - 1];
    if idx == samples.len() || a.timestamp == t {
        return Ok(a.velocity);
    }
    let b = samples[idx];
    let w = (t - a.timestamp) / (b.timestamp - a.timestamp);
    Ok(a.velocity + (b.velocity - a.velocity) * w)
}

/// Trapezoidal vector integral of the sampled velocity over [t0, t1].
/// Exact for piecewise-linear signals with knots at the samples.
pub fn integrate_velocity_samples(
    samples: &[SpeedSample],
    t0: f64,
    t1: f64,
) -> Result<Vector3<f64>> {
    if t1 < t0 {
        return Err(Error::contract("integration interval reversed"));
    }
    if t1 == t0 {
        return Ok(Vector3::zeros());
    }
    let mut knots = vec![t0];
    knots.extend(samples.iter().map(|s| s.timestamp).filter(|&ts| ts > t0 && ts < t1));
    knots.push(t1);
    let mut total = Vector3::zeros();
    let mut prev_t = knots[0];
    let mut prev_v = velocity_at(samples, prev_t)?;
    for &ts in &knots[1..] {
        let v = velocity_at(samples, ts)?;
        total += (prev_v + v) * (0.5 * (ts - prev_t));
        prev_t = ts;
        prev_v = v;
    }
    Ok(total)
}

/// Displacement magnitude over [t - dt, t]: the norm of the vector integral
/// (not the integral of the norm — opposing motion cancels).
pub fn integrate_displacement(buffers: &RingBuffers, t: f64, dt: f64) -> Result<f64> {
    Ok(buffers.integrate_velocity(t, dt)?.norm())
}

/// Choose the frame shift whose displacement is closest to the target.
///
/// Returns `(shift, achieved_displacement)`. Ties break toward the smaller
/// shift (fresher pair). Requires at least two buffered frames.
pub fn pick_pair(buffers: &RingBuffers, t: f64, target_displacement: f64) -> Result<(usize, f64)> {
    let len = buffers.frame_count();
    if len < 2 {
        return Err(Error::NotReady("need at least two buffered frames".into()));
    }
    let mut best: Option<(usize, f64, f64)> = None; // (shift, |diff|, displacement)
    let mut last_err = None;
    for shift in 1..len {
        let frame = buffers.frame_back(shift).expect("checked len");
        let dt = t - frame.timestamp;
        if dt <= 0.0 {
            continue;
        }
        match integrate_displacement(buffers, t, dt) {
            Ok(d) => {
                let diff = (d - target_displacement).abs();
                if best.map_or(true, |(_, bd, _)| diff < bd) {
                    best = Some((shift, diff, d));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((shift, _, d)) => Ok((shift, d)),
        None => Err(last_err.unwrap_or_else(|| Error::NotReady("no usable frame pair".into()))),
    }
}

/// Build the per-plane plan from the previous depth map: cluster it, derive
/// each plane's desired displacement Dᵢ = Cᵢ / (α · β_mean), and pick the
/// closest achievable frame pair for each.
pub fn plan_shifts(
    prev_depth: &DepthMap,
    n: usize,
    calib: &EstimatorCalibration,
    fusion_params: &FusionParams,
    buffers: &RingBuffers,
    t: f64,
) -> Result<ShiftPlan> {
    if n == 0 || n > MAX_PLANES {
        return Err(Error::config(format!("plane count must be in 1..={MAX_PLANES}")));
    }
    let centroids = kmeans_depth(prev_depth, n, prev_depth.timestamp.to_bits())?;
    plan_from_centroids(&centroids, calib, fusion_params, buffers, t)
}

fn plan_from_centroids(
    centroids: &[f64],
    calib: &EstimatorCalibration,
    fusion_params: &FusionParams,
    buffers: &RingBuffers,
    t: f64,
) -> Result<ShiftPlan> {
    let alpha = calib.alpha();
    let mut planes = Vec::with_capacity(centroids.len());
    for &centroid in centroids {
        let desired = centroid / (alpha * fusion_params.beta_mean);
        let (shift, achieved) = pick_pair(buffers, t, desired)?;
        planes.push(PlannedShift {
            centroid,
            desired_displacement: desired,
            shift,
            achieved_displacement: achieved,
        });
    }
    let plan = ShiftPlan { planes };
    plan.validate()?;
    Ok(plan)
}

/// Static configuration of the loop.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Number of planes n (1..=4).
    pub planes: usize,
    pub calibration: EstimatorCalibration,
    pub fusion: FusionParams,
    pub frame_capacity: usize,
    pub speed_capacity: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            planes: 1,
            calibration: EstimatorCalibration::unclamped(),
            fusion: FusionParams::default(),
            frame_capacity: 64,
            speed_capacity: 1024,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.planes == 0 || self.planes > MAX_PLANES {
            return Err(Error::config(format!("planes must be in 1..={MAX_PLANES}")));
        }
        self.calibration.validate()?;
        self.fusion.validate()?;
        if self.frame_capacity < 2 || self.speed_capacity < 2 {
            return Err(Error::config("buffer capacities must be >= 2"));
        }
        Ok(())
    }
}

/// Output of one ready pipeline step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub depth: DepthMap,
    pub plan: ShiftPlan,
    /// Per-plane β maps, in plan order (kept for traces and inspection).
    pub beta_maps: Vec<NormalizedDepthMap>,
}

/// Result of pushing one frame: either still warming up or a fused depth.
#[derive(Clone, Debug)]
pub enum StepOutcome {
    /// Fewer than two frames buffered; no depth emitted yet.
    Warmup,
    Ready(Box<StepOutput>),
}

/// The stateful loop. One writer advances the state; the per-plane estimator
/// calls inside a step are read-only and run in parallel with results
/// identical to sequential execution.
pub struct Pipeline {
    config: PipelineConfig,
    estimator: Arc<dyn DepthEstimator>,
    buffers: RingBuffers,
    prev_depth: Option<DepthMap>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, estimator: Arc<dyn DepthEstimator>) -> Result<Self> {
        config.validate()?;
        let buffers = RingBuffers::new(config.frame_capacity, config.speed_capacity)?;
        Ok(Self { config, estimator, buffers, prev_depth: None })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn buffers(&self) -> &RingBuffers {
        &self.buffers
    }

    /// Last fused depth, if any (the next step's clustering input).
    pub fn previous_depth(&self) -> Option<&DepthMap> {
        self.prev_depth.as_ref()
    }

    pub fn push_speed(&mut self, sample: SpeedSample) -> Result<()> {
        self.buffers.push_speed(sample)
    }

    /// Ingest one frame (plus any speed samples since the last one) and run
    /// the plan → estimate × n → fuse loop.
    pub fn step(&mut self, frame: Frame, new_speeds: &[SpeedSample]) -> Result<StepOutcome> {
        for &s in new_speeds {
            self.buffers.push_speed(s)?;
        }
        let t = frame.timestamp;
        self.buffers.push_frame(frame)?;
        if self.buffers.frame_count() < 2 {
            return Ok(StepOutcome::Warmup);
        }

        let calib = &self.config.calibration;
        let plan = match &self.prev_depth {
            Some(prev) => {
                plan_shifts(prev, self.config.planes, calib, &self.config.fusion, &self.buffers, t)?
            }
            None => {
                // Bootstrap: one plane targeting β_mean at the mid-range prior.
                let prior = calib.max_distance / 2.0;
                plan_from_centroids(&[prior], calib, &self.config.fusion, &self.buffers, t)?
            }
        };

        let current = self.buffers.frame_back(0).expect("just pushed");
        let beta_maps: Vec<NormalizedDepthMap> = plan
            .planes
            .par_iter()
            .map(|plane| {
                let reference = self.buffers.frame_back(plane.shift).ok_or_else(|| {
                    Error::NotReady(format!("shift {} exceeds buffered frames", plane.shift))
                })?;
                self.estimator.estimate(current, reference, plane.achieved_displacement)
            })
            .collect::<Result<_>>()?;

        let depth = fuse(&beta_maps, calib, &self.config.fusion, t)?;
        self.prev_depth = Some(depth.clone());
        Ok(StepOutcome::Ready(Box::new(StepOutput { depth, plan, beta_maps })))
    }
}
