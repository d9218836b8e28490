//! Tabulated OP-versus-sensed-interference predictor.
//!
//! The slot engine evaluates the analytical OP once per transmitter per
//! slot; a log-interference table with linear interpolation memoizes the
//! (ball-radius solve + double quadrature) pipeline. Table accuracy is
//! asserted against direct evaluation in the tests.

use crate::channel::{NetworkParams, Regime};
use crate::error::Result;
use crate::op_analysis::{
    empty_ball_radius_below6, empty_ball_radius_blockage, empty_ball_radius_mmw, NumericsConfig,
};
use crate::sap_mac::default_axis_length;

const LN_I_MIN: f64 = -41.0; // ~1.5e-18 W
const LN_I_MAX: f64 = 10.0; // ~2.2e4 W
const TABLE_POINTS: usize = 720;

/// Which OP formula drives the prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PredictorFormula {
    Regime,
    /// The no-blockage formula regardless of the configured regime.
    ForcedBelow6,
}

#[derive(Clone, Debug)]
pub struct OpPredictor {
    ln_lo: f64,
    step: f64,
    table: Vec<f64>,
    zero_i_op: f64,
    beta: f64,
}

impl OpPredictor {
    pub fn build(
        params: &NetworkParams,
        beta: f64,
        axis: Option<f64>,
        cfg: &NumericsConfig,
    ) -> Result<Self> {
        Self::build_with_formula(params, beta, axis, PredictorFormula::Regime, cfg)
    }

    pub(crate) fn build_with_formula(
        params: &NetworkParams,
        beta: f64,
        axis: Option<f64>,
        formula: PredictorFormula,
        cfg: &NumericsConfig,
    ) -> Result<Self> {
        let step = (LN_I_MAX - LN_I_MIN) / (TABLE_POINTS - 1) as f64;
        let eval = |i: f64| -> Result<f64> { Ok(Self::direct(params, beta, axis, formula, i, cfg)?) };
        let mut table = Vec::with_capacity(TABLE_POINTS);
        for k in 0..TABLE_POINTS {
            let i = (LN_I_MIN + step * k as f64).exp();
            table.push(eval(i)?);
        }
        // Zero sensed interference: the most optimistic ball estimate. With
        // unbounded LOS that limit is an unbounded ball (OP -> 1); with a
        // finite LOS range the zero-interference radius stays finite.
        let zero_i_op = match (formula, params.regime) {
            (PredictorFormula::ForcedBelow6, _) | (_, Regime::Below6) => 1.0,
            _ => table[0],
        };
        Ok(OpPredictor {
            ln_lo: LN_I_MIN,
            step,
            table,
            zero_i_op,
            beta,
        })
    }

    /// Direct (untabulated) evaluation of the same prediction pipeline.
    pub(crate) fn direct(
        params: &NetworkParams,
        beta: f64,
        axis: Option<f64>,
        formula: PredictorFormula,
        i: f64,
        cfg: &NumericsConfig,
    ) -> Result<f64> {
        if params.lambda1 == 0.0 {
            return Ok(1.0);
        }
        match formula {
            PredictorFormula::ForcedBelow6 => {
                let r = empty_ball_radius_below6(i, params, cfg)?;
                Ok(crate::op_analysis::op_below6(r, params, beta, cfg)?.value)
            }
            PredictorFormula::Regime => match params.regime {
                Regime::Below6 => {
                    let r = empty_ball_radius_below6(i, params, cfg)?;
                    Ok(crate::op_analysis::op_below6(r, params, beta, cfg)?.value)
                }
                Regime::Blockage => {
                    let r_l = params.los_radius();
                    let r = empty_ball_radius_blockage(i, params, r_l, cfg)?;
                    let l = axis.or_else(|| default_axis_length(params)).unwrap_or(f64::MAX);
                    Ok(crate::op_analysis::op_blockage(r, l, params, beta, cfg)?.value)
                }
                Regime::Mmw => {
                    let r_l = params.los_radius();
                    let r = empty_ball_radius_mmw(i, params, r_l, cfg)?;
                    let l = axis.or_else(|| default_axis_length(params)).unwrap_or(f64::MAX);
                    Ok(crate::op_analysis::op_mmw(r, l, params, beta, cfg)?.value)
                }
            },
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Predicted OP at sensed level `i` (zero and sub-range levels saturate).
    #[inline]
    pub fn predict(&self, i: f64) -> f64 {
        if i <= 0.0 {
            return self.zero_i_op;
        }
        let x = (i.ln() - self.ln_lo) / self.step;
        if x <= 0.0 {
            return self.table[0];
        }
        let n = self.table.len();
        if x >= (n - 1) as f64 {
            return self.table[n - 1];
        }
        let k = x as usize;
        let frac = x - k as f64;
        self.table[k] * (1.0 - frac) + self.table[k + 1] * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Regime;
    use crate::geometry::BlockageModel;
    use std::f64::consts::PI;

    fn params() -> NetworkParams {
        NetworkParams {
            lambda1: 5e-4,
            lambda2: 4e-3,
            p1: crate::units::dbm_to_watts(43.0),
            p2: crate::units::dbm_to_watts(23.0),
            alpha: 4.0,
            d: 2.0,
            omega: 2.0 * PI,
            gamma: 1e-4,
            tau: 0.6,
            regime: Regime::Below6,
            blockage: None,
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let p = params();
        let cfg = NumericsConfig::default();
        let pred = OpPredictor::build(&p, 1.0, None, &cfg).unwrap();
        for i in [3.1e-9, 4.7e-7, 8.3e-5, 2.9e-3, 1.7e-1] {
            let direct =
                OpPredictor::direct(&p, 1.0, None, PredictorFormula::Regime, i, &cfg).unwrap();
            let interp = pred.predict(i);
            assert!(
                (direct - interp).abs() < 2e-4,
                "i={i}: direct={direct}, interp={interp}"
            );
        }
        assert_eq!(pred.predict(0.0), 1.0);
        assert!(pred.predict(1e-30) > 0.999);
        assert!(pred.predict(1e9) < 0.05);
    }

    #[test]
    fn blockage_predictor_has_finite_zero_interference_op() {
        let mut p = params();
        p.regime = Regime::Blockage;
        p.alpha = 2.7;
        p.d = 5.0;
        p.lambda1 = 8e-5;
        p.blockage = Some(BlockageModel::new(0.04 / 30.0, 15.0, 15.0).unwrap());
        let cfg = NumericsConfig::default();
        let pred = OpPredictor::build(&p, 1.0, Some(90.5), &cfg).unwrap();
        let z = pred.predict(0.0);
        assert!(z > 0.5 && z <= 1.0, "zero-I OP = {z}");
    }
}
