//! OP with blockages: the aggregate interference is range-limited to the LOS
//! ball, and the nearest primary TX interferes with the RX only while it
//! stays inside the joint-unblocked ellipse of axis `l`.

use super::below6::nearest_factor;
use super::{aggregate_exponent, product_result, NumericsConfig, OpResult};
use crate::channel::{NetworkParams, Regime};
use crate::error::{Result, SapError};
use crate::geometry::ACOS_CLAMP_TOL;
use crate::numerics::{checked_acos, QuadResult};
use std::f64::consts::PI;

/// Which of the three exposure cases a radius falls into. Boundary ties
/// resolve to the lower-radius case; the value is continuous there.
pub(crate) enum ExposureCase {
    Inside,
    Partial { u: f64 },
    Outside,
}

pub(crate) fn exposure_case(r: f64, l: f64, d: f64) -> Result<ExposureCase> {
    if r <= 0.5 * (l - d) {
        Ok(ExposureCase::Inside)
    } else if r <= 0.5 * (l + d) {
        let arg = (d * d + 2.0 * l * r - l * l) / (2.0 * d * r);
        Ok(ExposureCase::Partial {
            u: checked_acos(arg, ACOS_CLAMP_TOL)?,
        })
    } else {
        Ok(ExposureCase::Outside)
    }
}

fn check_inputs(r: f64, l: f64, params: &NetworkParams, beta: f64) -> Result<f64> {
    if r < 0.0 || beta < 0.0 {
        return Err(SapError::Parameter(format!("need r >= 0 and beta >= 0, got r={r}, beta={beta}")));
    }
    if l < params.d {
        return Err(SapError::Parameter(format!(
            "axis length {l} shorter than pair distance {}",
            params.d
        )));
    }
    let b = params.blockage.as_ref().ok_or_else(|| {
        SapError::Parameter("blockage model required for blockage-regime OP".into())
    })?;
    Ok(b.avg_los_distance())
}

/// OP given the empty-ball radius `r` and the joint-unblocked axis `l`.
/// Zero when the pair separation itself exceeds the LOS range.
pub fn op_blockage(
    r: f64,
    l: f64,
    params: &NetworkParams,
    beta: f64,
    cfg: &NumericsConfig,
) -> Result<OpResult> {
    let r_l = check_inputs(r, l, params, beta)?;
    let d = params.d;
    if d > r_l {
        return Ok(OpResult {
            value: 0.0,
            regime: Regime::Blockage,
            r_used: r,
            l_used: Some(l),
            nearest_factor: 0.0,
            aggregate_factor: 1.0,
            quadrature_error_estimate: 0.0,
        });
    }
    let w = beta * params.p1 * d.powf(params.alpha);
    let agg = aggregate_exponent(r, d, params.lambda1, w, params.p2, params.alpha, r_l, cfg)?;
    let nearest = match exposure_case(r, l, d)? {
        ExposureCase::Inside => nearest_factor(r, d, w, params.p2, params.alpha, PI, cfg)?,
        ExposureCase::Partial { u } => {
            let head = nearest_factor(r, d, w, params.p2, params.alpha, u, cfg)?;
            QuadResult {
                value: head.value + (PI - u) / PI,
                error: head.error,
                evaluations: head.evaluations,
            }
        }
        ExposureCase::Outside => QuadResult {
            value: 1.0,
            error: 0.0,
            evaluations: 0,
        },
    };
    Ok(product_result(Regime::Blockage, r, Some(l), nearest, agg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{NetworkParams, Regime};
    use crate::geometry::BlockageModel;
    use crate::op_analysis::op_below6;

    pub(crate) fn fig7_params() -> NetworkParams {
        // Blockage factor 0.04/m from 1333 rectangles/km^2 of 15 m x 15 m.
        NetworkParams {
            lambda1: 8e-5,
            lambda2: 1.6e-2,
            p1: crate::units::dbm_to_watts(43.0),
            p2: crate::units::dbm_to_watts(23.0),
            alpha: 2.7,
            d: 5.0,
            omega: 2.0 * PI,
            gamma: 0.05,
            tau: 0.8,
            regime: Regime::Blockage,
            blockage: Some(BlockageModel::new(0.04 / 30.0, 15.0, 15.0).unwrap()),
        }
    }

    #[test]
    fn nearest_factor_is_one_in_full_exposure() {
        let p = fig7_params();
        let cfg = NumericsConfig::default();
        let l = 90.5;
        let r = 0.5 * (l + p.d) + 1.0;
        let op = op_blockage(r, l, &p, 1.0, &cfg).unwrap();
        assert_eq!(op.nearest_factor, 1.0);
        assert!(op.value <= 1.0);
    }

    #[test]
    fn zero_when_pair_longer_than_los_range() {
        let mut p = fig7_params();
        // Huge blockage factor shrinks the LOS ball below the pair distance.
        p.blockage = Some(BlockageModel::new(0.2, 15.0, 15.0).unwrap());
        assert!(p.los_radius() < p.d);
        let cfg = NumericsConfig::default();
        let op = op_blockage(10.0, 90.0, &p, 1.0, &cfg).unwrap();
        assert_eq!(op.value, 0.0);
    }

    #[test]
    fn reduces_to_below6_when_blockages_vanish() {
        let mut p = fig7_params();
        p.blockage = Some(BlockageModel::new(1e-15, 15.0, 15.0).unwrap());
        let cfg = NumericsConfig::default();
        let l = 1e9;
        for r in [0.0, 5.0, 25.0, 80.0] {
            for beta in [0.3, 1.0, 5.0] {
                let with = op_blockage(r, l, &p, beta, &cfg).unwrap().value;
                let without = op_below6(r, &p, beta, &cfg).unwrap().value;
                assert!(
                    (with - without).abs() < 1e-6,
                    "r={r}, beta={beta}: {with} vs {without}"
                );
            }
        }
    }

    #[test]
    fn continuous_across_case_boundaries() {
        let p = fig7_params();
        let cfg = NumericsConfig::default();
        let l = 90.5;
        // The partial-exposure angle approaches its limits like sqrt(eps),
        // so the probe tolerance scales accordingly.
        for bnd in [0.5 * (l - p.d), 0.5 * (l + p.d)] {
            let below = op_blockage(bnd - 1e-10, l, &p, 1.0, &cfg).unwrap().value;
            let above = op_blockage(bnd + 1e-10, l, &p, 1.0, &cfg).unwrap().value;
            assert!(
                (below - above).abs() < 1e-5,
                "jump at r={bnd}: {below} vs {above}"
            );
        }
    }

    #[test]
    fn rejects_axis_shorter_than_pair() {
        let p = fig7_params();
        let cfg = NumericsConfig::default();
        assert!(op_blockage(10.0, 2.0, &p, 1.0, &cfg).is_err());
    }

    #[test]
    fn value_in_unit_interval_and_product_decomposition() {
        let p = fig7_params();
        let cfg = NumericsConfig::default();
        for r in [0.0, 10.0, 43.0, 45.0, 60.0] {
            let op = op_blockage(r, 90.5, &p, 2.0, &cfg).unwrap();
            assert!((0.0..=1.0).contains(&op.value));
            assert!((op.value - op.nearest_factor * op.aggregate_factor).abs() < 1e-12);
        }
    }
}
