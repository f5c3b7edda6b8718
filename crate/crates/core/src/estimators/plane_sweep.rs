//! Plane-sweep translation stereo.
//!
//! For each β hypothesis the reference image is warped onto the current one
//! through the hypothesized metric depth `ζ = α·β·D` (pure-translation
//! pinhole warp, bilinear sampling), absolute differences are box-filtered
//! over the matching window, and the per-pixel minimum over hypotheses is
//! refined with a parabolic fit. Out-of-bounds warps cost infinity; pixels
//! with no finite cost fall back to β = 1 (far).

use nalgebra::Vector3;

use super::{EstimatorCalibration, NormalizedDepthMap};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::stillbox::{Frame, Intrinsics};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PlaneSweepConfig {
    /// Number of β hypotheses, uniform in [min_beta, 1].
    pub hypothesis_count: usize,
    /// Matching window radius r; the window is (2r+1)².
    pub window_radius: usize,
    /// Lowest swept β; β = 0 would warp through the camera center.
    pub min_beta: f64,
}

impl Default for PlaneSweepConfig {
    fn default() -> Self {
        Self { hypothesis_count: 64, window_radius: 3, min_beta: 0.02 }
    }
}

impl PlaneSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hypothesis_count < 2 {
            return Err(Error::config("hypothesis_count must be >= 2"));
        }
        if self.window_radius < 1 {
            return Err(Error::config("window_radius must be >= 1"));
        }
        if !(0.0 < self.min_beta && self.min_beta < 1.0) {
            return Err(Error::config("min_beta must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Mean absolute difference over the window around each pixel, +∞ wherever
/// the window contains an invalid (out-of-bounds) warp. Uses summed-area
/// tables; windows are truncated at image borders.
fn window_mean_cost(diff: &[f64], invalid: &[u32], w: usize, h: usize, r: usize, out: &mut [f32]) {
    let iw = w + 1;
    let mut sat = vec![0f64; iw * (h + 1)];
    let mut sat_bad = vec![0u32; iw * (h + 1)];
    for y in 0..h {
        let mut row_sum = 0f64;
        let mut row_bad = 0u32;
        for x in 0..w {
            row_sum += diff[y * w + x];
            row_bad += invalid[y * w + x];
            sat[(y + 1) * iw + (x + 1)] = sat[y * iw + (x + 1)] + row_sum;
            sat_bad[(y + 1) * iw + (x + 1)] = sat_bad[y * iw + (x + 1)] + row_bad;
        }
    }
    for y in 0..h {
        let y0 = y.saturating_sub(r);
        let y1 = (y + r).min(h - 1) + 1;
        for x in 0..w {
            let x0 = x.saturating_sub(r);
            let x1 = (x + r).min(w - 1) + 1;
            let bad = sat_bad[y1 * iw + x1] + sat_bad[y0 * iw + x0]
                - sat_bad[y0 * iw + x1]
                - sat_bad[y1 * iw + x0];
            out[y * w + x] = if bad > 0 {
                f32::INFINITY
            } else {
                let sum = sat[y1 * iw + x1] + sat[y0 * iw + x0]
                    - sat[y0 * iw + x1]
                    - sat[y1 * iw + x0];
                (sum / ((y1 - y0) * (x1 - x0)) as f64) as f32
            };
        }
    }
}

/// Sweep β hypotheses for a pure-translation pair.
///
/// `translation` is the current camera position relative to the reference
/// camera, in the (shared) camera frame, meters. Its norm is the
/// displacement `D` entering the scale identity.
pub fn plane_sweep_estimate(
    current: &Frame,
    reference: &Frame,
    translation: &Vector3<f64>,
    intrinsics: &Intrinsics,
    calib: &EstimatorCalibration,
    config: &PlaneSweepConfig,
) -> Result<NormalizedDepthMap> {
    config.validate()?;
    calib.validate()?;
    let displacement = translation.norm();
    if displacement <= 1e-12 {
        return Err(Error::contract("plane sweep requires a nonzero translation"));
    }
    let (w, h) = (current.image.width(), current.image.height());
    if !current.image.same_size(&reference.image) {
        return Err(Error::contract("frame sizes differ"));
    }
    if w != intrinsics.width || h != intrinsics.height {
        return Err(Error::contract("intrinsics do not match frame size"));
    }

    let n = config.hypothesis_count;
    let beta_step = (1.0 - config.min_beta) / (n - 1) as f64;
    let alpha = calib.alpha();

    // Precompute per-pixel camera rays once.
    let mut rays = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            rays.push(intrinsics.pixel_ray(x as f64, y as f64));
        }
    }

    let mut cost_volume = vec![0f32; n * w * h];
    let mut diff = vec![0f64; w * h];
    let mut invalid = vec![0u32; w * h];
    for hyp in 0..n {
        let beta = config.min_beta + hyp as f64 * beta_step;
        let depth = alpha * beta * displacement;
        for (i, ray) in rays.iter().enumerate() {
            let p_ref = ray * depth + translation;
            let sample = intrinsics
                .project(&p_ref)
                .and_then(|(u, v)| reference.image.bilinear(u, v));
            match sample {
                Some(s) => {
                    diff[i] = (current.image.as_slice()[i] as f64 - s).abs();
                    invalid[i] = 0;
                }
                None => {
                    diff[i] = 0.0;
                    invalid[i] = 1;
                }
            }
        }
        window_mean_cost(
            &diff,
            &invalid,
            w,
            h,
            config.window_radius,
            &mut cost_volume[hyp * w * h..(hyp + 1) * w * h],
        );
    }

    let values = Grid::from_fn(w, h, |x, y| {
        let i = y * w + x;
        // Scan far-to-near so flat (uninformative) costs resolve to far.
        let mut best_h = usize::MAX;
        let mut best_c = f32::INFINITY;
        for hyp in (0..n).rev() {
            let c = cost_volume[hyp * w * h + i];
            if c < best_c {
                best_c = c;
                best_h = hyp;
            }
        }
        if best_h == usize::MAX {
            return 1.0;
        }
        let mut beta = config.min_beta + best_h as f64 * beta_step;
        if best_h > 0 && best_h < n - 1 {
            let cm = cost_volume[(best_h - 1) * w * h + i] as f64;
            let c0 = best_c as f64;
            let cp = cost_volume[(best_h + 1) * w * h + i] as f64;
            if cm.is_finite() && cp.is_finite() {
                let denom = cm - 2.0 * c0 + cp;
                if denom > 1e-12 {
                    let delta = (0.5 * (cm - cp) / denom).clamp(-0.5, 0.5);
                    beta += delta * beta_step;
                }
            }
        }
        beta.clamp(0.0, 1.0) as f32
    });
    NormalizedDepthMap::new(values, displacement)
}
