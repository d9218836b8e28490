//! Calibration of the joint-unblocked axis length against the blockage
//! factor: for each factor value, scan the axis length that minimizes the
//! gap between the simulated conditional OP curve and the analytical one,
//! then fit a quintic through the optima.

use super::oracle::{conditional_op_oracle, OracleConfig};
use super::ConditionalOpCurve;
use crate::channel::{NetworkParams, Regime};
use crate::error::{Result, SapError};
use crate::geometry::BlockageModel;
use crate::numerics::{eval_polynomial, fit_polynomial};
use crate::op_analysis::{empty_ball_radius_blockage, op_blockage, NumericsConfig};
use crate::seed::SeedStream;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AxisFitPoint {
    pub xi: f64,
    pub l_star: f64,
    /// Count-weighted mean absolute OP gap at the optimum.
    pub gap: f64,
    /// Set when the gap is insensitive to the axis length (no blockage
    /// sensitivity; the optimum is unbounded).
    pub flat: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxisLengthFit {
    pub points: Vec<AxisFitPoint>,
    /// Monomial coefficients, constant first.
    pub coeffs: Vec<f64>,
    pub sse: f64,
}

impl AxisLengthFit {
    pub fn predict(&self, xi: f64) -> f64 {
        eval_polynomial(&self.coeffs, xi)
    }
}

/// Count-weighted mean absolute gap between the analytic OP (at the bin-mean
/// sensed level) and the empirical conditional coverage, over qualifying
/// bins.
pub(crate) fn curve_gap(
    curve: &ConditionalOpCurve,
    params: &NetworkParams,
    l: f64,
    min_count: u64,
    cfg: &NumericsConfig,
) -> Result<f64> {
    let r_l = params.los_radius();
    let mut weighted = 0.0;
    let mut weight = 0.0;
    for b in curve.bins.iter().filter(|b| b.qualifies(min_count)) {
        let r = empty_ball_radius_blockage(b.mean_i(), params, r_l, cfg)?;
        let analytic = op_blockage(r, l, params, curve.beta, cfg)?.value;
        weighted += (analytic - b.p_hat()).abs() * b.count as f64;
        weight += b.count as f64;
    }
    if weight == 0.0 {
        return Err(SapError::Numeric("no qualifying bins for the axis scan".into()));
    }
    Ok(weighted / weight)
}

/// Scans `l_grid` for the axis length minimizing the OP gap at one blockage
/// configuration. The conditional MC curve is simulated once per call.
pub fn scan_axis_length(
    params: &NetworkParams,
    beta: f64,
    l_grid: &[f64],
    oracle_cfg: &OracleConfig,
    cfg: &NumericsConfig,
    seed: SeedStream,
) -> Result<AxisFitPoint> {
    if params.regime != Regime::Blockage {
        return Err(SapError::Parameter(
            "axis-length calibration runs in the blockage regime".into(),
        ));
    }
    let b = params
        .blockage
        .as_ref()
        .ok_or_else(|| SapError::Parameter("blockage model required".into()))?;
    if l_grid.is_empty() {
        return Err(SapError::Parameter("empty axis grid".into()));
    }
    let curve = conditional_op_oracle(params, beta, oracle_cfg, seed)?;
    let mut best = (f64::INFINITY, l_grid[0]);
    let mut worst = f64::NEG_INFINITY;
    let mut gap_top = 0.0;
    for &l in l_grid {
        let gap = curve_gap(&curve, params, l, oracle_cfg.min_bin_count, cfg)?;
        if gap < best.0 {
            best = (gap, l);
        }
        worst = worst.max(gap);
        gap_top = gap;
    }
    // Optimum not identified: either the gap is insensitive to the axis or
    // it is still dropping at the top of the grid (unbounded optimum).
    let flat = (worst - best.0 < 5e-3) || (gap_top - best.0 < 5e-3);
    Ok(AxisFitPoint {
        xi: b.blockage_factor(),
        l_star: best.1,
        gap: best.0,
        flat,
    })
}

/// Default axis scan grid relative to the LOS ball radius.
pub(crate) fn default_axis_grid(r_l: f64, d: f64) -> Vec<f64> {
    let lo = (0.3 * r_l).max(d * 1.5);
    let hi = 3.0 * r_l;
    let n = 24;
    (0..n)
        .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Runs the scan over a grid of blockage factors (rectangle dimensions taken
/// from `base`), fits a quintic through the optima, and reports its SSE.
pub fn fit_axis_length(
    params: &NetworkParams,
    xi_grid: &[f64],
    beta: f64,
    oracle_cfg: &OracleConfig,
    cfg: &NumericsConfig,
    seed: SeedStream,
) -> Result<AxisLengthFit> {
    let base = params
        .blockage
        .as_ref()
        .ok_or_else(|| SapError::Parameter("blockage model required".into()))?;
    let mut points = Vec::with_capacity(xi_grid.len());
    for (j, &xi) in xi_grid.iter().enumerate() {
        if xi <= 0.0 {
            return Err(SapError::Parameter(format!("blockage factor must be > 0, got {xi}")));
        }
        let lam_b = xi / (base.d_len + base.d_wid);
        let mut p = params.clone();
        p.regime = Regime::Blockage;
        p.omega = 2.0 * std::f64::consts::PI;
        p.blockage = Some(BlockageModel::new(lam_b, base.d_len, base.d_wid)?);
        let r_l = p.los_radius();
        let grid = default_axis_grid(r_l, p.d);
        points.push(scan_axis_length(&p, beta, &grid, oracle_cfg, cfg, seed.child(j as u64))?);
    }
    let usable: Vec<&AxisFitPoint> = points.iter().filter(|p| !p.flat).collect();
    if usable.len() < 6 {
        return Err(SapError::Numeric(format!(
            "only {} identifiable optima; need at least 6 for a quintic",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.xi).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.l_star).collect();
    let coeffs = fit_polynomial(&xs, &ys, 5)?;
    let sse: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(&x, &y)| {
            let e = eval_polynomial(&coeffs, x) - y;
            e * e
        })
        .sum();
    Ok(AxisLengthFit { points, coeffs, sse })
}
