//! `GET /v1/surface`: autarky coverage over the `(k, C_P/C_B)` plane.

use std::collections::BTreeMap;

use serde::Serialize;

use pvtrade_core::model::{entry_threshold_ratio, excess_threshold, regime_outcome};
use pvtrade_core::{BaseloadBackupCost, TradeRegime};

use crate::error::ApiError;
use crate::evaluate::DEFAULT_BASELOAD_TOTAL;
use crate::query::{float, parse, reject_unknown};
use crate::{Quantity, Series};

pub const MAX_STEPS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRequest {
    pub w: f64,
    pub k_steps: usize,
    pub ratio_steps: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub baseload_total: f64,
}

impl Default for SurfaceRequest {
    fn default() -> Self {
        Self { w: 0.0, k_steps: 21, ratio_steps: 100, ratio_min: 0.05, ratio_max: 1.5, baseload_total: DEFAULT_BASELOAD_TOTAL }
    }
}

const KNOWN: &[&str] = &["w", "k_steps", "ratio_steps", "ratio_min", "ratio_max", "baseload_total"];

impl SurfaceRequest {
    pub fn from_query(q: &BTreeMap<String, String>) -> Result<Self, ApiError> {
        reject_unknown(q, KNOWN)?;
        let d = Self::default();
        let req = Self {
            w: float(q, "w")?.ok_or_else(|| ApiError::bad("w", "required"))?,
            k_steps: parse(q, "k_steps")?.unwrap_or(d.k_steps),
            ratio_steps: parse(q, "ratio_steps")?.unwrap_or(d.ratio_steps),
            ratio_min: float(q, "ratio_min")?.unwrap_or(d.ratio_min),
            ratio_max: float(q, "ratio_max")?.unwrap_or(d.ratio_max),
            baseload_total: float(q, "baseload_total")?.unwrap_or(d.baseload_total),
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        for (field, n) in [("k_steps", self.k_steps), ("ratio_steps", self.ratio_steps)] {
            if !(1..=MAX_STEPS).contains(&n) {
                return Err(ApiError::bad(field, format!("must lie in 1..={MAX_STEPS}")));
            }
        }
        if !(self.ratio_min >= 0.0) {
            return Err(ApiError::bad("ratio_min", "must be >= 0"));
        }
        if !(self.ratio_max >= self.ratio_min) {
            return Err(ApiError::conflict("ratio_max", "must be >= ratio_min"));
        }
        Ok(())
    }
}

/// `n` evenly spaced points from `lo` to `hi`; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surface {
    pub winter_hole: Quantity,
    pub excess_threshold: Quantity,
    pub baseload_total: Quantity,
    pub k: Series,
    pub ratio: Series,
    /// `beta[i][j]` at `k[i]`, `ratio[j]`.
    pub beta: Vec<Vec<f64>>,
    pub beta_unit: &'static str,
    /// Per `k`: the ratio below which PV enters (coverage jumps 0 -> e).
    pub cliff_ratio: Series,
}

pub fn surface(req: &SurfaceRequest) -> Result<Surface, ApiError> {
    req.validate()?;
    let e = excess_threshold(req.w)?;
    let ks = linspace(0.0, 1.0, req.k_steps);
    let ratios = linspace(req.ratio_min, req.ratio_max, req.ratio_steps);
    let mut beta = Vec::with_capacity(ks.len());
    let mut cliff = Vec::with_capacity(ks.len());
    for &k in &ks {
        // Same construction as a `/v1/evaluate` call with `k` and `ratio`.
        let bb = BaseloadBackupCost::from_unit_total(req.baseload_total, k)?;
        let row = ratios
            .iter()
            .map(|&r| Ok(regime_outcome(TradeRegime::Autarky, req.w, &bb, r * bb.total_per_mwh())?.0))
            .collect::<Result<Vec<_>, ApiError>>()?;
        beta.push(row);
        cliff.push(entry_threshold_ratio(req.w, k)?);
    }
    Ok(Surface {
        winter_hole: Quantity::ratio(req.w),
        excess_threshold: Quantity::ratio(e),
        baseload_total: Quantity::usd_mwh(req.baseload_total),
        k: Series { values: ks, unit: "1" },
        ratio: Series { values: ratios, unit: "1" },
        beta,
        beta_unit: "1",
        cliff_ratio: Series { values: cliff, unit: "1" },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_ends() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(0.2, 1.0, 1), vec![0.2]);
    }

    #[test]
    fn oversized_grid_rejected() {
        let req = SurfaceRequest { ratio_steps: 501, ..Default::default() };
        assert_eq!(surface(&req).unwrap_err().errors[0].field, "ratio_steps");
        let req = SurfaceRequest { k_steps: 0, ..Default::default() };
        assert!(surface(&req).is_err());
    }

    #[test]
    fn one_by_one() {
        let req = SurfaceRequest { w: 1.0, k_steps: 1, ratio_steps: 1, ..Default::default() };
        let s = surface(&req).unwrap();
        assert_eq!((s.beta.len(), s.beta[0].len()), (1, 1));
    }
}
