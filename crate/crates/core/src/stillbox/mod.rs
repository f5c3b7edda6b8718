//! Procedural still scenes: textured primitives enclosed in a large box,
//! rendered along constant-velocity pure-translation trajectories.
//!
//! All generation is a pure function of `(seed, params)`; regenerating with
//! the same inputs yields bit-identical scenes and frames.

mod render;
mod texture;

pub use render::{ray_depth, render_depth, render_frame};
pub use texture::shade;

use nalgebra::{Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::rng::CounterRng;

/// Pinhole camera intrinsics. Pixel `(x, y)` maps to the camera-frame ray
/// `((x - cx)/f, (y - cy)/f, 1)`, so the ray parameter is the z-depth.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Intrinsics {
    pub width: usize,
    pub height: usize,
    pub focal_px: f64,
    /// (cx, cy) in pixels.
    pub principal_point: [f64; 2],
}

impl Default for Intrinsics {
    fn default() -> Self {
        Self::square(256)
    }
}

impl Intrinsics {
    pub fn new(width: usize, height: usize, focal_px: f64, principal_point: [f64; 2]) -> Result<Self> {
        let s = Self { width, height, focal_px, principal_point };
        s.validate()?;
        Ok(s)
    }

    /// Square image with a 90° horizontal field of view and centered
    /// principal point (the default render setup).
    pub fn square(size: usize) -> Self {
        Self {
            width: size,
            height: size,
            focal_px: size as f64 / 2.0,
            principal_point: [size as f64 / 2.0, size as f64 / 2.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::config("image dimensions must be positive"));
        }
        if !(self.focal_px > 0.0) {
            return Err(Error::config("focal_px must be > 0"));
        }
        let [cx, cy] = self.principal_point;
        if !(0.0..=self.width as f64).contains(&cx) || !(0.0..=self.height as f64).contains(&cy) {
            return Err(Error::config("principal point outside image bounds"));
        }
        Ok(())
    }

    /// Camera-frame ray direction for pixel `(x, y)`, with unit z component.
    #[inline]
    pub fn pixel_ray(&self, x: f64, y: f64) -> Vector3<f64> {
        Vector3::new(
            (x - self.principal_point[0]) / self.focal_px,
            (y - self.principal_point[1]) / self.focal_px,
            1.0,
        )
    }

    /// Project a camera-frame point; `None` if it lies at or behind the camera.
    #[inline]
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        if p.z <= 1e-12 {
            return None;
        }
        Some((
            self.focal_px * p.x / p.z + self.principal_point[0],
            self.focal_px * p.y / p.z + self.principal_point[1],
        ))
    }
}

/// A solid in the scene. Sizes are radius (sphere) or half-extent (cube).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Primitive {
    Sphere { center: [f64; 3], radius: f64, texture_id: u32 },
    Cube { center: [f64; 3], half_extent: f64, texture_id: u32 },
}

impl Primitive {
    pub fn center(&self) -> Vector3<f64> {
        match *self {
            Primitive::Sphere { center, .. } | Primitive::Cube { center, .. } => {
                Vector3::new(center[0], center[1], center[2])
            }
        }
    }

    pub fn size(&self) -> f64 {
        match *self {
            Primitive::Sphere { radius, .. } => radius,
            Primitive::Cube { half_extent, .. } => half_extent,
        }
    }

    pub fn texture_id(&self) -> u32 {
        match *self {
            Primitive::Sphere { texture_id, .. } | Primitive::Cube { texture_id, .. } => texture_id,
        }
    }
}

/// A generated scene: primitives plus the enclosing box walls.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    pub box_half_extent: f64,
    pub seed: u64,
}

impl Scene {
    /// Walls-only scene (no primitives); useful for constant-depth setups.
    pub fn walls_only(box_half_extent: f64, seed: u64) -> Result<Self> {
        if !(box_half_extent > 0.0) {
            return Err(Error::config("box_half_extent must be > 0"));
        }
        Ok(Self { primitives: Vec::new(), box_half_extent, seed })
    }

    /// Texture id assigned to box wall face `face` (0..6).
    pub fn wall_texture_id(&self, face: usize) -> u32 {
        self.primitives.len() as u32 + face as u32
    }
}

/// Scene generation parameters.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SceneParams {
    pub primitive_count: usize,
    pub box_half_extent: f64,
    /// (min, max) of radius / half-extent, meters.
    pub size_range: (f64, f64),
    /// Primitives are kept out of a ball of this radius around the origin so
    /// the camera does not start inside an object.
    pub clear_radius: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            primitive_count: 24,
            box_half_extent: 50.0,
            size_range: (2.0, 8.0),
            clear_radius: 2.5,
        }
    }
}

impl SceneParams {
    pub fn validate(&self) -> Result<()> {
        if self.primitive_count == 0 {
            return Err(Error::config("primitive_count must be >= 1"));
        }
        let (lo, hi) = self.size_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::config("size_range must be positive and ordered"));
        }
        if !(self.box_half_extent > 0.0) {
            return Err(Error::config("box_half_extent must be > 0"));
        }
        if hi * 1.01 >= self.box_half_extent {
            return Err(Error::config("primitive sizes must be well below box_half_extent"));
        }
        if self.clear_radius < 0.0 {
            return Err(Error::config("clear_radius must be >= 0"));
        }
        Ok(())
    }
}

/// Camera pose: position and camera-to-world rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    pub position: Vector3<f64>,
    pub orientation: Rotation3<f64>,
}

impl CameraPose {
    pub fn new(position: Vector3<f64>, orientation: Rotation3<f64>) -> Self {
        Self { position, orientation }
    }

    pub fn identity_at(position: Vector3<f64>) -> Self {
        Self { position, orientation: Rotation3::identity() }
    }

    /// Check orthonormality and positive determinant to 1e-9.
    pub fn validate_matrix(m: &nalgebra::Matrix3<f64>) -> Result<()> {
        let should_be_identity = m.transpose() * m;
        let dev = (should_be_identity - nalgebra::Matrix3::identity()).abs().max();
        if dev > 1e-9 {
            return Err(Error::config(format!("orientation not orthonormal (dev {dev:.3e})")));
        }
        if (m.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::config("orientation determinant is not +1"));
        }
        Ok(())
    }
}

/// Constant-velocity pure-translation trajectory.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Trajectory {
    /// Unit direction of motion, constant for the whole scene.
    pub direction: [f64; 3],
    pub speed: f64,
    pub frame_period: f64,
    pub frame_count: usize,
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        let d = self.direction_vec();
        if (d.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::config("trajectory direction must be unit length"));
        }
        if !(self.speed > 0.0) || !(self.frame_period > 0.0) {
            return Err(Error::config("speed and frame_period must be > 0"));
        }
        if self.frame_count < 2 {
            return Err(Error::config("frame_count must be >= 2"));
        }
        Ok(())
    }

    pub fn direction_vec(&self) -> Vector3<f64> {
        Vector3::new(self.direction[0], self.direction[1], self.direction[2])
    }

    /// Constant velocity vector, m/s.
    pub fn velocity(&self) -> Vector3<f64> {
        self.direction_vec() * self.speed
    }

    pub fn timestamp(&self, frame_index: usize) -> f64 {
        frame_index as f64 * self.frame_period
    }

    /// Pose at a frame index: translated from the origin, identity orientation.
    pub fn pose(&self, frame_index: usize) -> CameraPose {
        CameraPose::identity_at(self.velocity() * self.timestamp(frame_index))
    }
}

/// Per-frame orientation jitter: Euler angles of magnitude `n0 · μ(t)` with
/// μ a fresh random unit vector each step.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OrientationNoise {
    /// Noise magnitude in radians.
    pub n0: f64,
    pub rng_seed: u64,
}

impl OrientationNoise {
    pub fn new(n0: f64, rng_seed: u64) -> Result<Self> {
        if n0 < 0.0 {
            return Err(Error::config("n0 must be >= 0"));
        }
        Ok(Self { n0, rng_seed })
    }
}

/// One rendered frame with exact ground-truth depth.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub image: Grid,
    pub gt_depth: Grid,
    pub timestamp: f64,
    pub pose: CameraPose,
}

/// Generate a deterministic scene: `primitive_count` randomly placed and
/// sized spheres/cubes, all strictly inside the enclosing box.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<Scene> {
    params.validate()?;
    let rng = CounterRng::new(seed).stream(1);
    let (size_lo, size_hi) = params.size_range;
    let mut primitives = Vec::with_capacity(params.primitive_count);
    let mut draw = 0u64;
    for i in 0..params.primitive_count {
        // Re-draw placements that intrude on the clear ball around the origin.
        let (center, size, kind) = loop {
            let size = rng.uniform_in(draw, size_lo, size_hi);
            // |center|_inf + size stays strictly below the box half-extent.
            let span = params.box_half_extent - 1.01 * size;
            let center = Vector3::new(
                rng.uniform_in(draw + 1, -span, span),
                rng.uniform_in(draw + 2, -span, span),
                rng.uniform_in(draw + 3, -span, span),
            );
            let kind = rng.raw(draw + 4) & 1;
            draw += 5;
            if center.norm() > params.clear_radius + size * (3.0f64).sqrt() {
                break (center, size, kind);
            }
        };
        let c = [center.x, center.y, center.z];
        primitives.push(if kind == 0 {
            Primitive::Sphere { center: c, radius: size, texture_id: i as u32 }
        } else {
            Primitive::Cube { center: c, half_extent: size, texture_id: i as u32 }
        });
    }
    Ok(Scene { primitives, box_half_extent: params.box_half_extent, seed })
}

/// Sample a constant-speed trajectory with a direction uniform on the sphere.
pub fn sample_trajectory(
    seed: u64,
    speed: f64,
    frame_period: f64,
    frame_count: usize,
) -> Result<Trajectory> {
    if !(speed > 0.0) || !(frame_period > 0.0) {
        return Err(Error::config("speed and frame_period must be > 0"));
    }
    if frame_count < 2 {
        return Err(Error::config("frame_count must be >= 2"));
    }
    let dir = CounterRng::new(seed).stream(2).unit_vector(0);
    Ok(Trajectory {
        direction: [dir.x, dir.y, dir.z],
        speed,
        frame_period,
        frame_count,
    })
}

/// Compose the pose orientation with a small random rotation for this step:
/// `R = R0 · Euler(n0 · μ(step))`, μ a fresh unit vector per step.
///
/// Composition keeps the result in SO(3); with `n0 = 0` the pose is returned
/// unchanged.
pub fn perturb_orientation(
    pose: &CameraPose,
    noise: &OrientationNoise,
    step_index: u64,
) -> CameraPose {
    if noise.n0 == 0.0 {
        return *pose;
    }
    let mu = CounterRng::new(noise.rng_seed).stream(3).unit_vector(step_index);
    let euler = mu * noise.n0;
    let jitter = Rotation3::from_euler_angles(euler.x, euler.y, euler.z);
    CameraPose::new(pose.position, pose.orientation * jitter)
}

/// Render the whole trajectory, applying orientation noise when `n0 > 0`.
pub fn render_sequence(
    scene: &Scene,
    trajectory: &Trajectory,
    intrinsics: &Intrinsics,
    noise: Option<&OrientationNoise>,
) -> Result<Vec<Frame>> {
    trajectory.validate()?;
    intrinsics.validate()?;
    let mut frames = Vec::with_capacity(trajectory.frame_count);
    for k in 0..trajectory.frame_count {
        let mut pose = trajectory.pose(k);
        if let Some(n) = noise {
            pose = perturb_orientation(&pose, n, k as u64);
        }
        let mut frame = render_frame(scene, &pose, intrinsics);
        frame.timestamp = trajectory.timestamp(k);
        frames.push(frame);
    }
    Ok(frames)
}
