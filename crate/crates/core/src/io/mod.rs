//! On-disk formats: 8-bit PGM images, PFM float depth maps, JSON sidecars
//! and the dataset directory layout (one directory per scene, frames
//! `frame_000.{pgm,pfm,json}` plus `scene.json`).

mod pfm;
mod pgm;

pub use pfm::{read_pfm, write_pfm};
pub use pgm::{read_pgm, write_pgm};

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::stillbox::{
    CameraPose, Frame, Intrinsics, OrientationNoise, Scene, SceneParams, Trajectory,
};

/// Serializable camera pose (row-major 3×3 orientation).
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PoseDto {
    pub position: [f64; 3],
    pub orientation: [[f64; 3]; 3],
}

impl From<&CameraPose> for PoseDto {
    fn from(p: &CameraPose) -> Self {
        let m = p.orientation.matrix();
        Self {
            position: [p.position.x, p.position.y, p.position.z],
            orientation: [
                [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            ],
        }
    }
}

impl PoseDto {
    pub fn to_pose(&self) -> Result<CameraPose> {
        let o = &self.orientation;
        let m = Matrix3::new(
            o[0][0], o[0][1], o[0][2],
            o[1][0], o[1][1], o[1][2],
            o[2][0], o[2][1], o[2][2],
        );
        CameraPose::validate_matrix(&m)?;
        Ok(CameraPose::new(
            Vector3::new(self.position[0], self.position[1], self.position[2]),
            Rotation3::from_matrix_unchecked(m),
        ))
    }
}

/// Per-frame sidecar JSON.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrameMeta {
    pub timestamp: f64,
    pub pose: PoseDto,
    pub intrinsics: Intrinsics,
}

/// Per-scene metadata (`scene.json`): everything needed to regenerate it.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SceneMeta {
    pub seed: u64,
    pub params: SceneParams,
    pub trajectory: Trajectory,
    pub noise: Option<OrientationNoise>,
}

/// Dataset root manifest.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Manifest {
    pub scenes: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ManifestEntry {
    pub directory: String,
    pub seed: u64,
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format { path: path.display().to_string(), reason: e.to_string() })?;
    fs::write(path, body).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&body)
        .map_err(|e| Error::Format { path: path.display().to_string(), reason: e.to_string() })
}

/// File stem for frame `index` (`frame_007`).
pub fn frame_stem(index: usize) -> String {
    format!("frame_{index:03}")
}

/// Write one frame as PGM + PFM + JSON sidecar.
pub fn write_frame(dir: &Path, index: usize, frame: &Frame, intrinsics: &Intrinsics) -> Result<()> {
    let stem = frame_stem(index);
    write_pgm(&dir.join(format!("{stem}.pgm")), &frame.image)?;
    write_pfm(&dir.join(format!("{stem}.pfm")), &frame.gt_depth)?;
    let meta = FrameMeta {
        timestamp: frame.timestamp,
        pose: PoseDto::from(&frame.pose),
        intrinsics: *intrinsics,
    };
    write_json(&dir.join(format!("{stem}.json")), &meta)
}

/// Read one frame back (image, depth, sidecar).
pub fn read_frame(dir: &Path, index: usize) -> Result<(Frame, Intrinsics)> {
    let stem = frame_stem(index);
    let image = read_pgm(&dir.join(format!("{stem}.pgm")))?;
    let gt_depth = read_pfm(&dir.join(format!("{stem}.pfm")))?;
    let meta: FrameMeta = read_json(&dir.join(format!("{stem}.json")))?;
    let pose = meta.pose.to_pose()?;
    Ok((Frame { image, gt_depth, timestamp: meta.timestamp, pose }, meta.intrinsics))
}

/// Write a whole scene directory: frames plus `scene.json`.
pub fn write_scene_dir(
    dir: &Path,
    meta: &SceneMeta,
    frames: &[Frame],
    intrinsics: &Intrinsics,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    write_json(&dir.join("scene.json"), meta)?;
    for (i, frame) in frames.iter().enumerate() {
        write_frame(dir, i, frame, intrinsics)?;
    }
    Ok(())
}

/// Load a scene directory written by [`write_scene_dir`].
pub fn read_scene_dir(dir: &Path) -> Result<(SceneMeta, Vec<Frame>, Intrinsics)> {
    let meta: SceneMeta = read_json(&dir.join("scene.json"))?;
    let mut frames = Vec::with_capacity(meta.trajectory.frame_count);
    let mut intrinsics = None;
    for i in 0..meta.trajectory.frame_count {
        let (frame, intr) = read_frame(dir, i)?;
        intrinsics.get_or_insert(intr);
        frames.push(frame);
    }
    let intrinsics = intrinsics
        .ok_or_else(|| Error::Format { path: dir.display().to_string(), reason: "no frames".into() })?;
    Ok((meta, frames, intrinsics))
}

/// Regenerate the `Scene` recorded in a scene.json (bit-identical to the
/// original generation).
pub fn scene_from_meta(meta: &SceneMeta) -> Result<Scene> {
    crate::stillbox::generate_scene(meta.seed, &meta.params)
}

/// Scene subdirectory name inside a dataset (`scene_0003`).
pub fn scene_dir_name(index: usize) -> String {
    format!("scene_{index:04}")
}

pub fn manifest_path(root: &Path) -> PathBuf {
    root.join("manifest.json")
}
