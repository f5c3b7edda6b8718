//! Procedural surface texture: multi-octave 3-D value noise.
//!
//! Intensity is a pure function of `(scene seed, texture id, surface point)`,
//! so a surface point shades identically from every viewpoint. That is the
//! photometric-constancy assumption window-based matching relies on.

use nalgebra::Vector3;

use crate::rng::{lattice_counter, CounterRng};

/// Octave cell sizes in meters and their relative amplitudes. The coarsest
/// octave keeps contrast on distant walls, the finest stays above the pixel
/// footprint of mid-range surfaces so bilinear resampling error stays small.
const OCTAVES: [(f64, f64); 4] = [(8.0, 0.30), (2.0, 0.35), (1.0, 0.22), (0.5, 0.13)];

/// Quintic smoothstep; C2-continuous lattice interpolation.
#[inline]
fn smooth(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// Trilinearly interpolated hash noise in [0, 1].
fn value_noise(rng: &CounterRng, p: &Vector3<f64>) -> f64 {
    let x0 = p.x.floor();
    let y0 = p.y.floor();
    let z0 = p.z.floor();
    let (ix, iy, iz) = (x0 as i64, y0 as i64, z0 as i64);
    let (fx, fy, fz) = (smooth(p.x - x0), smooth(p.y - y0), smooth(p.z - z0));

    let mut corner = [0.0f64; 8];
    for (n, c) in corner.iter_mut().enumerate() {
        let dx = (n & 1) as i64;
        let dy = ((n >> 1) & 1) as i64;
        let dz = ((n >> 2) & 1) as i64;
        *c = rng.uniform(lattice_counter(ix + dx, iy + dy, iz + dz));
    }
    let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
    let x00 = lerp(corner[0], corner[1], fx);
    let x10 = lerp(corner[2], corner[3], fx);
    let x01 = lerp(corner[4], corner[5], fx);
    let x11 = lerp(corner[6], corner[7], fx);
    let y0v = lerp(x00, x10, fy);
    let y1v = lerp(x01, x11, fy);
    lerp(y0v, y1v, fz)
}

/// Surface intensity in [0, 1] for a texture id at a local surface point.
pub fn shade(scene_seed: u64, texture_id: u32, local_point: &Vector3<f64>) -> f32 {
    let base = CounterRng::new(scene_seed).stream(0x7e47);
    let mut acc = 0.0;
    for (octave, &(cell, amplitude)) in OCTAVES.iter().enumerate() {
        let rng = base.stream(((texture_id as u64) << 8) | octave as u64);
        acc += amplitude * value_noise(&rng, &(local_point / cell));
    }
    // acc is in [0, 1]; keep a little headroom at both ends.
    (0.06 + 0.88 * acc) as f32
}
