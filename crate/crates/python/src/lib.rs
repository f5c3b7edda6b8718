//! Python bindings: scene generation, rendering, estimators, the multi-shift
//! pipeline and the error metrics, exposed as the `motiondepth_py` module.
//!
//! Images and depth maps cross the boundary as 2-D `numpy` float32 arrays
//! indexed `[row, column]`.

use numpy::ndarray::Array2;
use numpy::{IntoPyArray, PyArray2, PyReadonlyArray2};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use motiondepth::error::Error;
use motiondepth::estimators::{self, EstimatorCalibration, PlaneSweepConfig};
use motiondepth::grid::Grid;
use motiondepth::pipeline::{
    self, FusionParams, PipelineConfig, SpeedSample, StepOutcome,
};
use motiondepth::stillbox::{self, OrientationNoise, SceneParams};
use nalgebra::Vector3;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) => PyValueError::new_err(e.to_string()),
        Error::Contract(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn grid_to_array(py: Python<'_>, grid: &Grid) -> Py<PyArray2<f32>> {
    let arr = Array2::from_shape_vec((grid.height(), grid.width()), grid.as_slice().to_vec())
        .expect("grid dimensions are consistent");
    arr.into_pyarray(py).unbind()
}

fn array_to_grid(arr: &PyReadonlyArray2<'_, f32>) -> PyResult<Grid> {
    let view = arr.as_array();
    let (h, w) = (view.nrows(), view.ncols());
    let data: Vec<f32> = view.iter().copied().collect();
    Grid::from_vec(w, h, data).map_err(py_err)
}

fn resolve_calibration(
    estimator: &str,
    d0: Option<f64>,
    max_distance: Option<f64>,
    clamp: Option<(f64, f64)>,
) -> PyResult<EstimatorCalibration> {
    let base = match estimator {
        "oracle" => EstimatorCalibration::unclamped(),
        "oracle-clamped" => EstimatorCalibration::clamped(),
        "plane-sweep" => EstimatorCalibration { d0: 1.0, max_distance: 100.0, clamp_range: None },
        other => return Err(PyValueError::new_err(format!("unknown estimator '{other}'"))),
    };
    EstimatorCalibration::new(
        d0.unwrap_or(base.d0),
        max_distance.unwrap_or(base.max_distance),
        clamp.or(base.clamp_range),
    )
    .map_err(py_err)
}

/// A generated still scene (primitives enclosed in a box).
#[pyclass(frozen)]
struct Scene {
    inner: stillbox::Scene,
}

#[pymethods]
impl Scene {
    /// Deterministic random scene from a seed.
    #[staticmethod]
    #[pyo3(signature = (seed, primitive_count=24, box_half_extent=50.0, size_min=2.0, size_max=8.0, clear_radius=2.5))]
    fn generate(
        seed: u64,
        primitive_count: usize,
        box_half_extent: f64,
        size_min: f64,
        size_max: f64,
        clear_radius: f64,
    ) -> PyResult<Self> {
        let params = SceneParams {
            primitive_count,
            box_half_extent,
            size_range: (size_min, size_max),
            clear_radius,
        };
        Ok(Self { inner: stillbox::generate_scene(seed, &params).map_err(py_err)? })
    }

    /// Box walls only; constant-depth views for axis-aligned cameras.
    #[staticmethod]
    fn walls_only(box_half_extent: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: stillbox::Scene::walls_only(box_half_extent, seed).map_err(py_err)? })
    }

    #[getter]
    fn primitive_count(&self) -> usize {
        self.inner.primitives.len()
    }

    #[getter]
    fn box_half_extent(&self) -> f64 {
        self.inner.box_half_extent
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
}

/// Constant-velocity pure-translation trajectory.
#[pyclass(frozen)]
struct Trajectory {
    inner: stillbox::Trajectory,
}

#[pymethods]
impl Trajectory {
    /// Uniform random direction on the sphere, fixed speed.
    #[staticmethod]
    fn sample(seed: u64, speed: f64, frame_period: f64, frame_count: usize) -> PyResult<Self> {
        Ok(Self {
            inner: stillbox::sample_trajectory(seed, speed, frame_period, frame_count)
                .map_err(py_err)?,
        })
    }

    #[getter]
    fn direction(&self) -> (f64, f64, f64) {
        let d = self.inner.direction;
        (d[0], d[1], d[2])
    }

    #[getter]
    fn speed(&self) -> f64 {
        self.inner.speed
    }

    #[getter]
    fn frame_period(&self) -> f64 {
        self.inner.frame_period
    }

    #[getter]
    fn frame_count(&self) -> usize {
        self.inner.frame_count
    }

    /// Velocity vector, m/s.
    fn velocity(&self) -> (f64, f64, f64) {
        let v = self.inner.velocity();
        (v.x, v.y, v.z)
    }
}

/// Pinhole intrinsics.
#[pyclass(frozen)]
struct Intrinsics {
    inner: stillbox::Intrinsics,
}

#[pymethods]
impl Intrinsics {
    #[new]
    fn new(width: usize, height: usize, focal_px: f64, cx: f64, cy: f64) -> PyResult<Self> {
        Ok(Self {
            inner: stillbox::Intrinsics::new(width, height, focal_px, [cx, cy]).map_err(py_err)?,
        })
    }

    /// Square image, 90° horizontal FOV, centered principal point.
    #[staticmethod]
    fn square(size: usize) -> Self {
        Self { inner: stillbox::Intrinsics::square(size) }
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height
    }

    #[getter]
    fn focal_px(&self) -> f64 {
        self.inner.focal_px
    }
}

/// One rendered frame: intensity image, exact depth, timestamp, position.
#[pyclass(frozen)]
struct Frame {
    inner: stillbox::Frame,
}

#[pymethods]
impl Frame {
    fn image(&self, py: Python<'_>) -> Py<PyArray2<f32>> {
        grid_to_array(py, &self.inner.image)
    }

    fn depth(&self, py: Python<'_>) -> Py<PyArray2<f32>> {
        grid_to_array(py, &self.inner.gt_depth)
    }

    #[getter]
    fn timestamp(&self) -> f64 {
        self.inner.timestamp
    }

    #[getter]
    fn position(&self) -> (f64, f64, f64) {
        let p = self.inner.pose.position;
        (p.x, p.y, p.z)
    }
}

/// Render every frame of a trajectory; optional orientation noise of
/// magnitude `noise_n0` radians.
#[pyfunction]
#[pyo3(signature = (scene, trajectory, intrinsics, noise_n0=0.0, noise_seed=0))]
fn render_sequence(
    scene: &Scene,
    trajectory: &Trajectory,
    intrinsics: &Intrinsics,
    noise_n0: f64,
    noise_seed: u64,
) -> PyResult<Vec<Frame>> {
    let noise = if noise_n0 > 0.0 {
        Some(OrientationNoise::new(noise_n0, noise_seed).map_err(py_err)?)
    } else {
        None
    };
    let frames =
        stillbox::render_sequence(&scene.inner, &trajectory.inner, &intrinsics.inner, noise.as_ref())
            .map_err(py_err)?;
    Ok(frames.into_iter().map(|inner| Frame { inner }).collect())
}

/// β from ground truth: clamp(gt / (α·D), floor, 1).
#[pyfunction]
#[pyo3(signature = (frame, displacement, estimator="oracle", d0=None, max_distance=None, clamp=None))]
fn oracle_beta(
    py: Python<'_>,
    frame: &Frame,
    displacement: f64,
    estimator: &str,
    d0: Option<f64>,
    max_distance: Option<f64>,
    clamp: Option<(f64, f64)>,
) -> PyResult<Py<PyArray2<f32>>> {
    let calib = resolve_calibration(estimator, d0, max_distance, clamp)?;
    let map = estimators::oracle_estimate(&frame.inner, displacement, &calib).map_err(py_err)?;
    Ok(grid_to_array(py, &map.values))
}

/// Fusion weight ε + f(β) with the piecewise-linear f.
#[pyfunction]
#[pyo3(signature = (beta, beta_min=0.1, beta_mean=0.4, beta_max=0.9, epsilon=1e-3))]
fn fusion_weight(
    beta: f64,
    beta_min: f64,
    beta_mean: f64,
    beta_max: f64,
    epsilon: f64,
) -> PyResult<f64> {
    let p = FusionParams { beta_min, beta_mean, beta_max, epsilon };
    p.validate().map_err(py_err)?;
    Ok(pipeline::fusion_weight(beta, &p))
}

/// Best-of-restarts 1-D K-means; ascending centroids.
#[pyfunction]
fn kmeans_1d(values: Vec<f64>, n: usize, seed: u64) -> PyResult<Vec<f64>> {
    Ok(pipeline::kmeans_1d(&values, n, seed).map_err(py_err)?.centroids)
}

#[pyfunction]
fn l1_error(pred: PyReadonlyArray2<'_, f32>, gt: PyReadonlyArray2<'_, f32>) -> PyResult<f64> {
    motiondepth::metrics::l1_error(&array_to_grid(&pred)?, &array_to_grid(&gt)?).map_err(py_err)
}

#[pyfunction]
fn rmse(pred: PyReadonlyArray2<'_, f32>, gt: PyReadonlyArray2<'_, f32>) -> PyResult<f64> {
    motiondepth::metrics::rmse(&array_to_grid(&pred)?, &array_to_grid(&gt)?).map_err(py_err)
}

#[pyfunction]
fn normalized_abs_error(
    pred: PyReadonlyArray2<'_, f32>,
    gt: PyReadonlyArray2<'_, f32>,
) -> PyResult<f64> {
    motiondepth::metrics::normalized_abs_error(&array_to_grid(&pred)?, &array_to_grid(&gt)?)
        .map_err(py_err)
}

/// Output of one ready pipeline step.
#[pyclass(frozen)]
struct StepResult {
    depth: Grid,
    timestamp: f64,
    plan: Vec<(f64, f64, usize, f64)>,
}

#[pymethods]
impl StepResult {
    /// Fused metric depth, meters.
    fn depth(&self, py: Python<'_>) -> Py<PyArray2<f32>> {
        grid_to_array(py, &self.depth)
    }

    #[getter]
    fn timestamp(&self) -> f64 {
        self.timestamp
    }

    /// Per-plane tuples (centroid, desired_displacement, shift, achieved_displacement).
    #[getter]
    fn plan(&self) -> Vec<(f64, f64, usize, f64)> {
        self.plan.clone()
    }
}

/// The buffered multi-shift loop around a chosen estimator.
#[pyclass]
struct Pipeline {
    inner: pipeline::Pipeline,
}

#[pymethods]
impl Pipeline {
    #[new]
    #[pyo3(signature = (estimator="oracle", planes=1, intrinsics=None, d0=None, max_distance=None, clamp=None,
                        beta_min=0.1, beta_mean=0.4, beta_max=0.9, epsilon=1e-3,
                        frame_capacity=64, speed_capacity=1024))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        estimator: &str,
        planes: usize,
        intrinsics: Option<&Intrinsics>,
        d0: Option<f64>,
        max_distance: Option<f64>,
        clamp: Option<(f64, f64)>,
        beta_min: f64,
        beta_mean: f64,
        beta_max: f64,
        epsilon: f64,
        frame_capacity: usize,
        speed_capacity: usize,
    ) -> PyResult<Self> {
        let calibration = resolve_calibration(estimator, d0, max_distance, clamp)?;
        let intr = intrinsics.map(|i| i.inner).unwrap_or_default();
        if estimator == "plane-sweep" && intrinsics.is_none() {
            return Err(PyValueError::new_err("plane-sweep needs intrinsics"));
        }
        let est = estimators::by_name(estimator, calibration, &intr, PlaneSweepConfig::default())
            .map_err(py_err)?;
        let config = PipelineConfig {
            planes,
            calibration,
            fusion: FusionParams { beta_min, beta_mean, beta_max, epsilon },
            frame_capacity,
            speed_capacity,
        };
        Ok(Self { inner: pipeline::Pipeline::new(config, est.into()).map_err(py_err)? })
    }

    /// Push one speed sample (velocity m/s, timestamp s).
    fn push_speed(&mut self, vx: f64, vy: f64, vz: f64, timestamp: f64) -> PyResult<()> {
        self.inner
            .push_speed(SpeedSample { velocity: Vector3::new(vx, vy, vz), timestamp })
            .map_err(py_err)
    }

    /// Ingest a frame; returns a StepResult once warmed up, else None.
    fn step(&mut self, frame: &Frame) -> PyResult<Option<StepResult>> {
        match self.inner.step(frame.inner.clone(), &[]).map_err(py_err)? {
            StepOutcome::Warmup => Ok(None),
            StepOutcome::Ready(out) => Ok(Some(StepResult {
                depth: out.depth.values,
                timestamp: out.depth.timestamp,
                plan: out
                    .plan
                    .planes
                    .iter()
                    .map(|p| {
                        (p.centroid, p.desired_displacement, p.shift, p.achieved_displacement)
                    })
                    .collect(),
            })),
        }
    }
}

#[pymodule]
fn motiondepth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scene>()?;
    m.add_class::<Trajectory>()?;
    m.add_class::<Intrinsics>()?;
    m.add_class::<Frame>()?;
    m.add_class::<StepResult>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(render_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_beta, m)?)?;
    m.add_function(wrap_pyfunction!(fusion_weight, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans_1d, m)?)?;
    m.add_function(wrap_pyfunction!(l1_error, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_abs_error, m)?)?;
    Ok(())
}
