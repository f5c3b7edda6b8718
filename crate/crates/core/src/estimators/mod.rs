//! Per-image-pair normalized-depth (β) estimation.
//!
//! Every estimator maps a frame pair plus the camera displacement `D`
//! between them to a β map in [0, 1]; metric depth is recovered through the
//! scale identity `ζ = α · β · D` with `α = max_distance / d0`. A zero
//! displacement yields the all-ones ("everything far") map by convention.
//!
//! Three implementations:
//! * [`OracleEstimator`] — β from ground-truth depth, exact.
//! * `OracleEstimator` with a clamp range — the mid-range-only variant whose
//!   equivalent depth range is restricted (e.g. 10–60 m at its own training
//!   displacement).
//! * [`PlaneSweepEstimator`] — classical translation-stereo search over β
//!   hypotheses with window SAD scoring.

mod plane_sweep;

pub use plane_sweep::{plane_sweep_estimate, PlaneSweepConfig};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stillbox::{Frame, Intrinsics};

/// Scale calibration of an estimator.
///
/// `d0` is the displacement the estimator is calibrated for and
/// `max_distance` the metric depth its β = 1 corresponds to at `d0`. An
/// optional `clamp_range` restricts the equivalent depth range: β is floored
/// at `min_depth / max_distance`, and `max_depth` must equal the depth that
/// saturates β (i.e. `max_depth ≤ max_distance`).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EstimatorCalibration {
    pub d0: f64,
    pub max_distance: f64,
    pub clamp_range: Option<(f64, f64)>,
}

impl EstimatorCalibration {
    pub fn new(d0: f64, max_distance: f64, clamp_range: Option<(f64, f64)>) -> Result<Self> {
        let c = Self { d0, max_distance, clamp_range };
        c.validate()?;
        Ok(c)
    }

    /// Full-range calibration: D₀ = 0.3 m, 100 m ceiling.
    pub fn unclamped() -> Self {
        Self { d0: 0.3, max_distance: 100.0, clamp_range: None }
    }

    /// Mid-range clamped calibration: 10–60 m equivalent range at a training
    /// displacement of 0.5 m (5 frames of 0.1 m rather than 3).
    pub fn clamped() -> Self {
        Self { d0: 0.5, max_distance: 60.0, clamp_range: Some((10.0, 60.0)) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0) {
            return Err(Error::config("calibration d0 must be > 0"));
        }
        if !(self.max_distance > 0.0) {
            return Err(Error::config("calibration max_distance must be > 0"));
        }
        if let Some((lo, hi)) = self.clamp_range {
            if !(0.0 < lo && lo < hi && hi <= self.max_distance) {
                return Err(Error::config(
                    "clamp_range must satisfy 0 < min_depth < max_depth <= max_distance",
                ));
            }
        }
        Ok(())
    }

    /// Dimensionless scale ratio α = max_distance / d0.
    #[inline]
    pub fn alpha(&self) -> f64 {
        self.max_distance / self.d0
    }

    /// β bounds implied by the clamp range ((0, 1) when unclamped).
    #[inline]
    pub fn beta_bounds(&self) -> (f64, f64) {
        match self.clamp_range {
            Some((lo, hi)) => (lo / self.max_distance, hi / self.max_distance),
            None => (0.0, 1.0),
        }
    }
}

/// An estimator's native output: per-pixel β in [0, 1] plus the displacement
/// that produced it (the D* used to rescale β into meters).
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedDepthMap {
    pub values: Grid,
    pub displacement: f64,
}

impl NormalizedDepthMap {
    pub fn new(values: Grid, displacement: f64) -> Result<Self> {
        if displacement < 0.0 {
            return Err(Error::contract("displacement must be >= 0"));
        }
        if values.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::contract("β values must lie in [0, 1]"));
        }
        Ok(Self { values, displacement })
    }

    /// Metric depth of one pixel under a calibration: ζ = α · β · D.
    #[inline]
    pub fn metric_depth(&self, calib: &EstimatorCalibration, x: usize, y: usize) -> f64 {
        calib.alpha() * self.values.get(x, y) as f64 * self.displacement
    }
}

/// Common interface of all per-pair estimators.
///
/// Estimators are stateless after construction; calls on distinct pairs may
/// run concurrently and a batch of shifts is evaluated in parallel by the
/// pipeline.
pub trait DepthEstimator: Send + Sync {
    fn name(&self) -> &'static str;

    fn calibration(&self) -> &EstimatorCalibration;

    /// Estimate β for `(current, reference)` given the sensor displacement
    /// between them. `displacement = 0` returns the all-ones map.
    fn estimate(&self, current: &Frame, reference: &Frame, displacement: f64)
        -> Result<NormalizedDepthMap>;
}

fn check_pair(current: &Frame, reference: &Frame) -> Result<()> {
    if !current.image.same_size(&reference.image) {
        return Err(Error::contract(format!(
            "frame sizes differ: {}x{} vs {}x{}",
            current.image.width(),
            current.image.height(),
            reference.image.width(),
            reference.image.height()
        )));
    }
    Ok(())
}

/// β from ground-truth depth: `β = clamp(gt / (α·D), floor, 1)` with the
/// floor given by the clamp range (0 when unclamped).
pub fn oracle_estimate(
    current: &Frame,
    displacement: f64,
    calib: &EstimatorCalibration,
) -> Result<NormalizedDepthMap> {
    if displacement < 0.0 {
        return Err(Error::contract("displacement must be >= 0"));
    }
    let gt = &current.gt_depth;
    if displacement == 0.0 {
        return NormalizedDepthMap::new(Grid::new(gt.width(), gt.height(), 1.0), 0.0);
    }
    let (floor, _) = calib.beta_bounds();
    let scale = 1.0 / (calib.alpha() * displacement);
    let values = Grid::from_fn(gt.width(), gt.height(), |x, y| {
        (gt.get(x, y) as f64 * scale).clamp(floor, 1.0) as f32
    });
    NormalizedDepthMap::new(values, displacement)
}

/// Ground-truth-backed reference implementation of [`DepthEstimator`].
#[derive(Clone, Debug)]
pub struct OracleEstimator {
    calib: EstimatorCalibration,
}

impl OracleEstimator {
    pub fn new(calib: EstimatorCalibration) -> Result<Self> {
        calib.validate()?;
        Ok(Self { calib })
    }
}

impl DepthEstimator for OracleEstimator {
    fn name(&self) -> &'static str {
        if self.calib.clamp_range.is_some() {
            "oracle-clamped"
        } else {
            "oracle"
        }
    }

    fn calibration(&self) -> &EstimatorCalibration {
        &self.calib
    }

    fn estimate(
        &self,
        current: &Frame,
        reference: &Frame,
        displacement: f64,
    ) -> Result<NormalizedDepthMap> {
        check_pair(current, reference)?;
        oracle_estimate(current, displacement, &self.calib)
    }
}

/// Plane-sweep translation stereo behind the estimator interface.
///
/// The per-pair translation direction is taken from the frame positions in
/// the stabilized (world-aligned) camera frame and rescaled to the sensor
/// displacement magnitude; residual rotation is treated as zero, which is
/// exactly the assumption orientation noise degrades.
#[derive(Clone, Debug)]
pub struct PlaneSweepEstimator {
    calib: EstimatorCalibration,
    intrinsics: Intrinsics,
    config: PlaneSweepConfig,
}

impl PlaneSweepEstimator {
    pub fn new(
        calib: EstimatorCalibration,
        intrinsics: Intrinsics,
        config: PlaneSweepConfig,
    ) -> Result<Self> {
        calib.validate()?;
        intrinsics.validate()?;
        config.validate()?;
        Ok(Self { calib, intrinsics, config })
    }
}

impl DepthEstimator for PlaneSweepEstimator {
    fn name(&self) -> &'static str {
        "plane-sweep"
    }

    fn calibration(&self) -> &EstimatorCalibration {
        &self.calib
    }

    fn estimate(
        &self,
        current: &Frame,
        reference: &Frame,
        displacement: f64,
    ) -> Result<NormalizedDepthMap> {
        check_pair(current, reference)?;
        if displacement == 0.0 {
            let g = Grid::new(current.image.width(), current.image.height(), 1.0);
            return NormalizedDepthMap::new(g, 0.0);
        }
        let step = current.pose.position - reference.pose.position;
        let n = step.norm();
        if n < 1e-12 {
            return Err(Error::contract(
                "zero baseline between frames; route zero-shift pairs to the no-shift convention",
            ));
        }
        let translation = step / n * displacement;
        plane_sweep_estimate(
            current,
            reference,
            &translation,
            &self.intrinsics,
            &self.calib,
            &self.config,
        )
    }
}

/// Instantiate an estimator by its CLI name: `oracle`, `oracle-clamped` or
/// `plane-sweep`.
pub fn by_name(
    name: &str,
    calib: EstimatorCalibration,
    intrinsics: &Intrinsics,
    sweep: PlaneSweepConfig,
) -> Result<Box<dyn DepthEstimator>> {
    match name {
        "oracle" | "oracle-clamped" => Ok(Box::new(OracleEstimator::new(calib)?)),
        "plane-sweep" => Ok(Box::new(PlaneSweepEstimator::new(calib, *intrinsics, sweep)?)),
        other => Err(Error::config(format!("unknown estimator '{other}'"))),
    }
}
