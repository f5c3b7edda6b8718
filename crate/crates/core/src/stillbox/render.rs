//! Analytic ray rendering: exact z-depth and procedural shading.
//!
//! Rays are cast with unit z component in the camera frame, so the ray
//! parameter at the hit *is* the z-depth (distance along the optical axis,
//! not Euclidean ray length). The enclosing box guarantees every ray hits.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::{texture, CameraPose, Frame, Intrinsics, Primitive, Scene};
use crate::grid::Grid;

const T_EPS: f64 = 1e-9;

struct Hit {
    t: f64,
    texture_id: u32,
    /// Surface point relative to the primitive center (world axes); for
    /// walls, the world-space point itself.
    local_point: Vector3<f64>,
}

/// Smallest positive root of |o + t d - c|^2 = r^2; handles rays starting
/// inside the sphere (returns the exit). Direction need not be unit length.
fn sphere_intersect(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    center: &Vector3<f64>,
    radius: f64,
) -> Option<f64> {
    let oc = origin - center;
    let a = dir.dot(dir);
    let b = oc.dot(dir);
    let c = oc.dot(&oc) - radius * radius;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = (-b - sq) / a;
    let t1 = (-b + sq) / a;
    if t0 > T_EPS {
        Some(t0)
    } else if t1 > T_EPS {
        Some(t1)
    } else {
        None
    }
}

/// Slab test for an axis-aligned cube; smallest positive t (entry, or exit
/// when starting inside).
fn cube_intersect(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    center: &Vector3<f64>,
    half: f64,
) -> Option<f64> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for axis in 0..3 {
        let o = origin[axis] - center[axis];
        let d = dir[axis];
        if d.abs() < 1e-15 {
            if o.abs() > half {
                return None;
            }
            continue;
        }
        let ta = (-half - o) / d;
        let tb = (half - o) / d;
        let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
        t_enter = t_enter.max(lo);
        t_exit = t_exit.min(hi);
        if t_enter > t_exit {
            return None;
        }
    }
    if t_enter > T_EPS {
        Some(t_enter)
    } else if t_exit > T_EPS {
        Some(t_exit)
    } else {
        None
    }
}

/// Exit of a ray from inside the enclosing box: (t, wall face 0..6).
fn wall_exit(origin: &Vector3<f64>, dir: &Vector3<f64>, half: f64) -> (f64, usize) {
    let mut t_best = f64::INFINITY;
    let mut face = 0;
    for axis in 0..3 {
        let d = dir[axis];
        if d.abs() < 1e-15 {
            continue;
        }
        let target = if d > 0.0 { half } else { -half };
        let t = (target - origin[axis]) / d;
        if t > T_EPS && t < t_best {
            t_best = t;
            face = axis * 2 + usize::from(d > 0.0);
        }
    }
    (t_best, face)
}

fn intersect_scene(scene: &Scene, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Hit {
    let (mut t_best, wall_face) = wall_exit(origin, dir, scene.box_half_extent);
    let wall_point = origin + dir * t_best;
    let mut hit = Hit {
        t: t_best,
        texture_id: scene.wall_texture_id(wall_face),
        local_point: wall_point,
    };
    for p in &scene.primitives {
        let center = p.center();
        let t = match *p {
            Primitive::Sphere { radius, .. } => sphere_intersect(origin, dir, &center, radius),
            Primitive::Cube { half_extent, .. } => cube_intersect(origin, dir, &center, half_extent),
        };
        if let Some(t) = t {
            if t < t_best {
                t_best = t;
                hit = Hit {
                    t,
                    texture_id: p.texture_id(),
                    local_point: origin + dir * t - center,
                };
            }
        }
    }
    hit
}

/// z-depth of the nearest surface along the ray through pixel `(x, y)`.
/// Always finite: the enclosing box guarantees a hit.
pub fn ray_depth(scene: &Scene, pose: &CameraPose, intrinsics: &Intrinsics, x: usize, y: usize) -> f64 {
    let dir_cam = intrinsics.pixel_ray(x as f64, y as f64);
    let dir_world = pose.orientation * dir_cam;
    intersect_scene(scene, &pose.position, &dir_world).t
}

/// Ground-truth depth map only (no shading).
pub fn render_depth(scene: &Scene, pose: &CameraPose, intrinsics: &Intrinsics) -> Grid {
    let (w, h) = (intrinsics.width, intrinsics.height);
    let mut depth = vec![0f32; w * h];
    depth
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            for (x, d) in row.iter_mut().enumerate() {
                *d = ray_depth(scene, pose, intrinsics, x, y) as f32;
            }
        });
    Grid::from_vec(w, h, depth).expect("sized above")
}

/// Render intensity and exact depth for one pose. Pixel-parallel over rows;
/// scene data is read-only and shared.
pub fn render_frame(scene: &Scene, pose: &CameraPose, intrinsics: &Intrinsics) -> Frame {
    let (w, h) = (intrinsics.width, intrinsics.height);
    let mut image = vec![0f32; w * h];
    let mut depth = vec![0f32; w * h];
    image
        .par_chunks_mut(w)
        .zip(depth.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (img_row, depth_row))| {
            for x in 0..w {
                let dir_cam = intrinsics.pixel_ray(x as f64, y as f64);
                let dir_world = pose.orientation * dir_cam;
                let hit = intersect_scene(scene, &pose.position, &dir_world);
                img_row[x] = texture::shade(scene.seed, hit.texture_id, &hit.local_point);
                depth_row[x] = hit.t as f32;
            }
        });
    Frame {
        image: Grid::from_vec(w, h, image).expect("sized above"),
        gt_depth: Grid::from_vec(w, h, depth).expect("sized above"),
        timestamp: 0.0,
        pose: *pose,
    }
}
