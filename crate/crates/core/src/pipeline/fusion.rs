//! Pixel-wise fusion of β maps into one metric depth map.
//!
//! Each plane's metric depth is `ζᵢ = α · Dᵢ · βᵢ`; the fused depth is the
//! per-pixel weighted mean with weights `wᵢ = ε + f(βᵢ)`, where f rises
//! linearly from β_min to 1 at β_mean and falls back to 0 at β_max. The ε
//! term keeps the mean defined when every plane is off its wanted range.

use crate::error::{Error, Result};
use crate::estimators::{EstimatorCalibration, NormalizedDepthMap};
use crate::grid::Grid;

use super::DepthMap;

/// Parameters of the piecewise-linear fusion weight.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FusionParams {
    pub beta_min: f64,
    pub beta_mean: f64,
    pub beta_max: f64,
    pub epsilon: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        Self { beta_min: 0.1, beta_mean: 0.4, beta_max: 0.9, epsilon: 1e-3 }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.beta_min
            && self.beta_min < self.beta_mean
            && self.beta_mean < self.beta_max
            && self.beta_max <= 1.0)
        {
            return Err(Error::config("need 0 <= beta_min < beta_mean < beta_max <= 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be > 0"));
        }
        Ok(())
    }

    /// Whether a β value falls in the half-open interval [β_min, β_max)
    /// where its plane carries non-ε weight.
    #[inline]
    pub fn in_range(&self, beta: f64) -> bool {
        beta >= self.beta_min && beta < self.beta_max
    }
}

/// ε + f(β): f is 0 below β_min, rises linearly to 1 at β_mean, falls
/// linearly to 0 at β_max, and is 0 from β_max on (half-open branches).
#[inline]
pub fn fusion_weight(beta: f64, p: &FusionParams) -> f64 {
    let f = if beta < p.beta_min {
        0.0
    } else if beta < p.beta_mean {
        (beta - p.beta_min) / (p.beta_mean - p.beta_min)
    } else if beta < p.beta_max {
        (p.beta_max - beta) / (p.beta_max - p.beta_mean)
    } else {
        0.0
    };
    p.epsilon + f
}

/// Fuse per-plane β maps into one metric depth map (timestamped by the
/// caller). All maps must share dimensions.
pub fn fuse(
    maps: &[NormalizedDepthMap],
    calib: &EstimatorCalibration,
    params: &FusionParams,
    timestamp: f64,
) -> Result<DepthMap> {
    params.validate()?;
    let first = maps.first().ok_or_else(|| Error::contract("fuse needs at least one map"))?;
    if maps.iter().any(|m| !m.values.same_size(&first.values)) {
        return Err(Error::contract("β maps have mismatched dimensions"));
    }
    let alpha = calib.alpha();
    let (w, h) = (first.values.width(), first.values.height());
    let values = Grid::from_fn(w, h, |x, y| {
        let mut num = 0.0;
        let mut den = 0.0;
        for m in maps {
            let beta = m.values.get(x, y) as f64;
            let weight = fusion_weight(beta, params);
            num += weight * alpha * m.displacement * beta;
            den += weight;
        }
        (num / den) as f32
    });
    Ok(DepthMap { values, timestamp })
}
