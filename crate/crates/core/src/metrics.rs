//! Depth map error measures: L1, RMSE, depth-normalized absolute error and
//! a weighted multi-scale L1.

use crate::error::{Error, Result};
use crate::grid::Grid;

fn check_dims(pred: &Grid, gt: &Grid) -> Result<()> {
    if !pred.same_size(gt) {
        return Err(Error::contract(format!(
            "map sizes differ: {}x{} vs {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    if pred.is_empty() {
        return Err(Error::contract("maps are empty"));
    }
    Ok(())
}

/// Mean absolute difference, meters.
pub fn l1_error(pred: &Grid, gt: &Grid) -> Result<f64> {
    check_dims(pred, gt)?;
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .map(|(&p, &g)| (p as f64 - g as f64).abs())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Root mean square error, meters.
pub fn rmse(pred: &Grid, gt: &Grid) -> Result<f64> {
    check_dims(pred, gt)?;
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .map(|(&p, &g)| (p as f64 - g as f64).powi(2))
        .sum();
    Ok((sum / pred.len() as f64).sqrt())
}

/// Mean of |pred - gt| / gt; requires strictly positive ground truth.
/// Diverges as gt → 0 with a fixed error, which is the point of normalizing.
pub fn normalized_abs_error(pred: &Grid, gt: &Grid) -> Result<f64> {
    check_dims(pred, gt)?;
    if gt.as_slice().iter().any(|&g| g <= 0.0) {
        return Err(Error::contract("ground truth must be strictly positive"));
    }
    let sum: f64 = pred
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .map(|(&p, &g)| ((p as f64 - g as f64) / g as f64).abs())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Normalized error over pixels with gt ≤ ceiling (the estimator's
/// representable maximum); errors above it measure the clamp, not the
/// method. Returns the per-pixel error sum and the pixel count so callers
/// can aggregate either per-scene or pooled.
pub fn normalized_abs_error_below(pred: &Grid, gt: &Grid, ceiling: f64) -> Result<(f64, usize)> {
    check_dims(pred, gt)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        if g <= 0.0 {
            return Err(Error::contract("ground truth must be strictly positive"));
        }
        if (g as f64) <= ceiling {
            sum += ((p as f64 - g as f64) / g as f64).abs();
            count += 1;
        }
    }
    Ok((sum, count))
}

/// Scales (downsampling factors) and their weights for the multi-scale L1.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MultiScaleSpec {
    /// Downsampling factors; each must divide both image dimensions.
    pub scales: Vec<usize>,
    pub weights: Vec<f64>,
}

impl MultiScaleSpec {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.scales.is_empty() || self.scales.len() != self.weights.len() {
            return Err(Error::config("scales and weights must be non-empty and match"));
        }
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::config("weights must be > 0"));
        }
        let mut seen = std::collections::HashSet::new();
        for &s in &self.scales {
            if s == 0 || width % s != 0 || height % s != 0 {
                return Err(Error::config(format!("scale {s} does not divide {width}x{height}")));
            }
            if !seen.insert(s) {
                return Err(Error::config("scales must be distinct"));
            }
        }
        Ok(())
    }
}

/// Average pooling by an integer factor that divides both dimensions.
pub fn average_pool(map: &Grid, factor: usize) -> Result<Grid> {
    if factor == 0 || map.width() % factor != 0 || map.height() % factor != 0 {
        return Err(Error::contract(format!(
            "pool factor {factor} does not divide {}x{}",
            map.width(),
            map.height()
        )));
    }
    let (w, h) = (map.width() / factor, map.height() / factor);
    Ok(Grid::from_fn(w, h, |x, y| {
        let mut sum = 0.0f64;
        for dy in 0..factor {
            for dx in 0..factor {
                sum += map.get(x * factor + dx, y * factor + dy) as f64;
            }
        }
        (sum / (factor * factor) as f64) as f32
    }))
}

/// Weighted sum over scales of the per-scale mean absolute error; the ground
/// truth is downscaled with average pooling. `pred_pyramid[i]` must match
/// scale `spec.scales[i]`.
pub fn multiscale_l1(pred_pyramid: &[Grid], gt: &Grid, spec: &MultiScaleSpec) -> Result<f64> {
    spec.validate(gt.width(), gt.height())?;
    if pred_pyramid.len() != spec.scales.len() {
        return Err(Error::contract("pyramid length must match scale count"));
    }
    let mut total = 0.0;
    for ((pred, &scale), &weight) in pred_pyramid.iter().zip(&spec.scales).zip(&spec.weights) {
        let pooled = average_pool(gt, scale)?;
        total += weight * l1_error(pred, &pooled)?;
    }
    Ok(total)
}
