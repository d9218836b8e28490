//! OP with blockages and directional primary beams.
//!
//! On top of the blockage-regime structure, the nearest primary TX reaches
//! the RX only if its beam covers both pair endpoints (the common interfering
//! probability), and the aggregate interference is thinned by the beam
//! fraction `omega / (2 pi)`.

use super::blockage::{exposure_case, ExposureCase};
use super::{aggregate_exponent, product_result, NumericsConfig, OpResult};
use crate::channel::{NetworkParams, Regime};
use crate::error::{Result, SapError};
use crate::geometry::subtended_angle;
use crate::numerics::{integrate_piecewise, QuadResult};
use std::f64::consts::PI;

/// Angles at which the subtended angle at the nearest primary equals the
/// beamwidth, i.e. the boundary of the always-exposed zone. Returns
/// `(lower, upper)`; either may be absent ("no sector intersection", in
/// particular whenever `d < r sin(omega)`).
pub fn nu_omega_roots(r: f64, d: f64, omega: f64) -> (Option<f64>, Option<f64>) {
    let s2 = omega.sin() * omega.sin();
    let radicand = d * d - r * r * s2;
    if radicand < 0.0 {
        return (None, None);
    }
    let root = omega.cos().abs() * radicand.sqrt();
    let to_angle = |c: f64| -> Option<f64> {
        if c.abs() <= 1.0 + 1e-12 {
            Some(c.clamp(-1.0, 1.0).acos())
        } else {
            None
        }
    };
    let c_plus = (r * s2 + root) / d;
    let c_minus = (r * s2 - root) / d;
    // Larger cosine = smaller angle.
    (to_angle(c_plus), to_angle(c_minus))
}

fn pc(nu: f64, r: f64, d: f64, omega: f64) -> f64 {
    let psi = match subtended_angle(nu, r, d) {
        Ok(p) => p,
        Err(_) => return 0.0,
    };
    if psi > omega {
        0.0
    } else {
        (omega - psi) / omega
    }
}

/// Nearest-TX factor with beam geometry:
/// `(1/pi) int_0^upper [ (1 - p_c) + p_c k(nu) ] dnu`.
fn beam_nearest(
    r: f64,
    d: f64,
    w: f64,
    p2: f64,
    alpha: f64,
    omega: f64,
    upper_angle: f64,
    cfg: &NumericsConfig,
) -> Result<QuadResult> {
    if upper_angle == 0.0 {
        return Ok(QuadResult::zero());
    }
    let f = |nu: f64| {
        let x = super::below6::nearest_distance(r, d, nu);
        let xa = x.powf(alpha);
        let k = p2 * xa / (p2 * xa + w);
        let p = pc(nu, r, d, omega);
        (1.0 - p) + p * k
    };
    // The common-interfering probability has kinks where psi crosses omega.
    let (lo_root, hi_root) = nu_omega_roots(r, d, omega);
    let mut breaks = Vec::new();
    if let Some(x) = lo_root {
        breaks.push(x);
    }
    if let Some(x) = hi_root {
        breaks.push(x);
    }
    let q = integrate_piecewise(
        &f,
        0.0,
        upper_angle,
        &breaks,
        cfg.abs_tol,
        cfg.rel_tol,
        cfg.max_subdivisions,
    )?;
    Ok(QuadResult {
        value: q.value / PI,
        error: q.error / PI,
        evaluations: q.evaluations,
    })
}

/// OP with an explicit beamwidth for the nearest-TX geometry and an explicit
/// thinning fraction for the aggregate term. [`op_mmw`] ties the two to the
/// configured beamwidth; tests use this entry point to study the regime
/// degeneration (wide beam, full thinning) in isolation.
pub fn op_mmw_custom(
    r: f64,
    l: f64,
    params: &NetworkParams,
    beta: f64,
    omega_beam: f64,
    thinning: f64,
    cfg: &NumericsConfig,
) -> Result<OpResult> {
    if r < 0.0 || beta < 0.0 {
        return Err(SapError::Parameter(format!(
            "need r >= 0 and beta >= 0, got r={r}, beta={beta}"
        )));
    }
    if l < params.d {
        return Err(SapError::Parameter(format!(
            "axis length {l} shorter than pair distance {}",
            params.d
        )));
    }
    if !(omega_beam > 0.0 && omega_beam < 2.0 * PI) {
        return Err(SapError::Parameter(format!(
            "beamwidth {omega_beam} outside (0, 2 pi)"
        )));
    }
    let b = params
        .blockage
        .as_ref()
        .ok_or_else(|| SapError::Parameter("blockage model required for mmw OP".into()))?;
    let r_l = b.avg_los_distance();
    let d = params.d;
    if d > r_l {
        return Ok(OpResult {
            value: 0.0,
            regime: Regime::Mmw,
            r_used: r,
            l_used: Some(l),
            nearest_factor: 0.0,
            aggregate_factor: 1.0,
            quadrature_error_estimate: 0.0,
        });
    }
    let w = beta * params.p1 * d.powf(params.alpha);
    let agg = aggregate_exponent(
        r,
        d,
        params.lambda1 * thinning,
        w,
        params.p2,
        params.alpha,
        r_l,
        cfg,
    )?;
    let nearest = match exposure_case(r, l, d)? {
        ExposureCase::Inside => beam_nearest(r, d, w, params.p2, params.alpha, omega_beam, PI, cfg)?,
        ExposureCase::Partial { u } => {
            let head = beam_nearest(r, d, w, params.p2, params.alpha, omega_beam, u, cfg)?;
            // The always-exposed zone boundary caps the interfering arc.
            let nu_omega = nu_omega_roots(r, d, omega_beam).1.unwrap_or(f64::INFINITY);
            let mu = nu_omega.min(u);
            QuadResult {
                value: head.value + (PI - mu) / PI,
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
    Ok(product_result(Regime::Mmw, r, Some(l), nearest, agg))
}

/// OP given the empty-ball radius `r`, axis `l`, and the configured beamwidth
/// `omega` in `(0, pi)`.
pub fn op_mmw(r: f64, l: f64, params: &NetworkParams, beta: f64, cfg: &NumericsConfig) -> Result<OpResult> {
    if !(params.omega > 0.0 && params.omega < PI) {
        return Err(SapError::Parameter(format!(
            "mmw OP requires omega in (0, pi), got {}",
            params.omega
        )));
    }
    op_mmw_custom(
        r,
        l,
        params,
        beta,
        params.omega,
        params.omega / (2.0 * PI),
        cfg,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{NetworkParams, Regime};
    use crate::geometry::BlockageModel;
    use crate::op_analysis::{empty_ball_radius_mmw, op_blockage};

    fn fig8_params(omega: f64) -> NetworkParams {
        NetworkParams {
            lambda1: 8e-5,
            lambda2: 1.6e-2,
            p1: crate::units::dbm_to_watts(43.0),
            p2: crate::units::dbm_to_watts(23.0),
            alpha: 2.7,
            d: 5.0,
            omega,
            gamma: 0.05,
            tau: 0.8,
            regime: Regime::Mmw,
            blockage: Some(BlockageModel::new(0.04 / 30.0, 15.0, 15.0).unwrap()),
        }
    }

    #[test]
    fn nu_omega_roots_solve_the_subtended_angle_equation() {
        let (r, d, omega) = (8.0, 5.0, PI / 6.0);
        let (lo, hi) = nu_omega_roots(r, d, omega);
        for root in [lo.unwrap(), hi.unwrap()] {
            let psi = subtended_angle(root, r, d).unwrap();
            assert!((psi - omega).abs() < 1e-9, "psi({root}) = {psi}");
        }
        // Beyond the guarantee zone there is no intersection.
        assert_eq!(nu_omega_roots(50.0, 5.0, PI / 6.0), (None, None));
    }

    #[test]
    fn narrow_beam_drives_op_to_one() {
        let p = fig8_params(1e-3);
        let cfg = NumericsConfig::default();
        for r in [5.0, 20.0, 44.0] {
            let op = op_mmw(r, 90.5, &p, 1.0, &cfg).unwrap();
            assert!(op.value > 0.99, "r={r}: {}", op.value);
        }
    }

    #[test]
    fn wide_beam_full_thinning_matches_blockage_regime() {
        // With the beam opened toward pi and the aggregate thinning forced to
        // one, the remaining gap is the common-interfering correction, which
        // vanishes as the nearest TX recedes relative to the pair distance.
        let p = fig8_params(PI / 6.0);
        let cfg = NumericsConfig::default();
        let l = 90.5;
        for beta in [0.02, 0.05] {
            for r in [44.0, 46.0, 50.0, 70.0] {
                let wide = op_mmw_custom(r, l, &p, beta, PI - 1e-9, 1.0, &cfg).unwrap().value;
                let blocked = op_blockage(r, l, &p, beta, &cfg).unwrap().value;
                assert!(
                    (wide - blocked).abs() < 1e-3,
                    "r={r}, beta={beta}: {wide} vs {blocked}"
                );
            }
        }
    }

    #[test]
    fn op_decreases_with_beamwidth_at_fixed_interference() {
        let cfg = NumericsConfig::default();
        let l = 90.5;
        for i in [1e-10, 1e-8, 1e-6] {
            for beta in [0.5, 2.0] {
                let narrow = fig8_params(PI / 18.0);
                let wide = fig8_params(PI / 6.0);
                let r_l = narrow.los_radius();
                let rn = empty_ball_radius_mmw(i, &narrow, r_l, &cfg).unwrap();
                let rw = empty_ball_radius_mmw(i, &wide, r_l, &cfg).unwrap();
                let op_n = op_mmw(rn, l, &narrow, beta, &cfg).unwrap().value;
                let op_w = op_mmw(rw, l, &wide, beta, &cfg).unwrap().value;
                assert!(
                    op_n >= op_w - 1e-9,
                    "i={i}, beta={beta}: narrow {op_n} < wide {op_w}"
                );
            }
        }
    }

    #[test]
    fn value_clamped_to_unit_interval() {
        // The partial-exposure case can nominally exceed one when the
        // always-exposed boundary sits below the ellipse angle; the result
        // must clamp.
        let p = fig8_params(PI / 2.5);
        let cfg = NumericsConfig::default();
        for r in [43.0, 45.0, 47.0] {
            let op = op_mmw(r, 90.5, &p, 1e-6, &cfg).unwrap();
            assert!((0.0..=1.0).contains(&op.value), "r={r}: {}", op.value);
        }
    }

    #[test]
    fn omega_validation() {
        let p = fig8_params(PI + 0.1);
        let cfg = NumericsConfig::default();
        assert!(op_mmw(10.0, 90.0, &p, 1.0, &cfg).is_err());
    }
}
