//! Expected empty-ball radius conditioned on the sensed interference level.
//!
//! Matching the sensed level `I` to the mean interference of a process with
//! the nearest TX at distance `R` (one point on the ball, the rest a PPP
//! outside it, range-limited by the LOS ball where applicable) yields
//!
//! `(I/P1 + m lam1 R_L^(2-a)/(a-2)) R^a - m lam1/(a-2) R^2 - 1 = 0`
//!
//! with `m = 2 pi` for omnidirectional interferers and `m = omega` under
//! beam thinning, and `R_L = inf` without blockages. All three regimes share
//! that one-positive-root polynomial; only `(m, R_L)` differ.

use super::NumericsConfig;
use crate::channel::NetworkParams;
use crate::error::{Result, SapError};
use crate::numerics::expand_and_bisect;
use std::f64::consts::PI;

fn poly_coeffs(i: f64, lam1: f64, p1: f64, alpha: f64, r_l: f64, m: f64) -> (f64, f64) {
    let b = m * lam1 / (alpha - 2.0);
    let a = i / p1 + if r_l.is_finite() { b * r_l.powf(2.0 - alpha) } else { 0.0 };
    (a, b)
}

fn solve(i: f64, lam1: f64, p1: f64, alpha: f64, r_l: f64, m: f64, cfg: &NumericsConfig) -> Result<f64> {
    if i <= 0.0 {
        return Err(SapError::Parameter(format!("interference must be > 0, got {i}")));
    }
    if p1 <= 0.0 || alpha <= 2.0 {
        return Err(SapError::Parameter("need p1 > 0 and alpha > 2".into()));
    }
    let (a, b) = poly_coeffs(i, lam1, p1, alpha, r_l, m);
    if b == 0.0 {
        // No other interferers: the ball radius comes from the nearest term alone.
        return Ok(a.powf(-1.0 / alpha));
    }
    let f = |r: f64| a * r.powf(alpha) - b * r * r - 1.0;
    expand_and_bisect(&f, 1e-6, 1.0, cfg.root_bracket_growth, 200, 1e-13)
}

/// Scaled residual of the ball equation at radius `r` (diagnostics/tests).
pub fn empty_ball_residual(i: f64, params: &NetworkParams, r_l: f64, omega_eff: f64, r: f64) -> f64 {
    let (a, b) = poly_coeffs(i, params.lambda1, params.p1, params.alpha, r_l, omega_eff);
    let val = a * r.powf(params.alpha) - b * r * r - 1.0;
    val / (a * r.powf(params.alpha) + b * r * r + 1.0)
}

/// Ball radius without blockages.
pub fn empty_ball_radius_below6(i: f64, params: &NetworkParams, cfg: &NumericsConfig) -> Result<f64> {
    solve(i, params.lambda1, params.p1, params.alpha, f64::INFINITY, 2.0 * PI, cfg)
}

/// Ball radius with the interference range limited to the LOS ball `r_l`.
pub fn empty_ball_radius_blockage(
    i: f64,
    params: &NetworkParams,
    r_l: f64,
    cfg: &NumericsConfig,
) -> Result<f64> {
    if r_l <= 0.0 {
        return Err(SapError::Parameter(format!("r_l must be > 0, got {r_l}")));
    }
    solve(i, params.lambda1, params.p1, params.alpha, r_l, 2.0 * PI, cfg)
}

/// Ball radius with LOS limiting and primary density thinned by the beam
/// fraction `omega/(2 pi)`.
pub fn empty_ball_radius_mmw(
    i: f64,
    params: &NetworkParams,
    r_l: f64,
    cfg: &NumericsConfig,
) -> Result<f64> {
    if r_l <= 0.0 {
        return Err(SapError::Parameter(format!("r_l must be > 0, got {r_l}")));
    }
    solve(i, params.lambda1, params.p1, params.alpha, r_l, params.omega, cfg)
}

/// Closed form of the ball radius at `alpha = 4`:
/// the positive root of `a R^4 - b R^2 - 1 = 0` with
/// `a = I/P1 + (m lam1 / 2) / R_L^2` and `b = m lam1 / 2`.
pub fn closed_form_alpha4(i: f64, lam1: f64, p1: f64, r_l: f64, m: f64) -> Result<f64> {
    if i <= 0.0 {
        return Err(SapError::Parameter(format!("interference must be > 0, got {i}")));
    }
    let b = 0.5 * m * lam1;
    let a = i / p1 + if r_l.is_finite() { b / (r_l * r_l) } else { 0.0 };
    Ok(((b + (b * b + 4.0 * a).sqrt()) / (2.0 * a)).sqrt())
}

/// Closed form of the `alpha -> 2+` limit with LOS limiting:
/// `R = (I/P1 - m lam1 ln R_L)^(-1/2)`, valid only where the bracket is
/// positive.
pub fn closed_form_alpha2_limit(i: f64, lam1: f64, p1: f64, r_l: f64, m: f64) -> Result<f64> {
    if i <= 0.0 {
        return Err(SapError::Parameter(format!("interference must be > 0, got {i}")));
    }
    if !r_l.is_finite() {
        return Err(SapError::Domain("alpha->2 limit requires a finite LOS range".into()));
    }
    let bracket = i / p1 - m * lam1 * r_l.ln();
    if bracket <= 0.0 {
        return Err(SapError::Domain(format!(
            "alpha->2 limit needs I/P1 > m lam1 ln(R_L); bracket = {bracket}"
        )));
    }
    Ok(bracket.powf(-0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{NetworkParams, Regime};

    fn params(alpha: f64, lam1: f64) -> NetworkParams {
        NetworkParams {
            lambda1: lam1,
            lambda2: 4e-3,
            p1: crate::units::dbm_to_watts(43.0),
            p2: crate::units::dbm_to_watts(23.0),
            alpha,
            d: 2.0,
            omega: 2.0 * PI,
            gamma: 0.05,
            tau: 0.8,
            regime: Regime::Below6,
            blockage: None,
        }
    }

    #[test]
    fn rejects_nonpositive_interference() {
        let p = params(4.0, 5e-4);
        let cfg = NumericsConfig::default();
        assert!(empty_ball_radius_below6(0.0, &p, &cfg).is_err());
        assert!(empty_ball_radius_below6(-1.0, &p, &cfg).is_err());
    }

    #[test]
    fn alpha4_root_matches_closed_form_over_grid() {
        let p = params(4.0, 5e-4);
        let cfg = NumericsConfig::default();
        for k in 0..50 {
            let i = 1e-15 * 10f64.powf(12.0 * k as f64 / 49.0);
            let root = empty_ball_radius_below6(i, &p, &cfg).unwrap();
            let closed = closed_form_alpha4(i, p.lambda1, p.p1, f64::INFINITY, 2.0 * PI).unwrap();
            assert!(
                (root - closed).abs() <= 1e-9 * closed,
                "i={i}: root={root}, closed={closed}"
            );
        }
    }

    #[test]
    fn root_residual_is_tiny_and_monotonicities_hold() {
        let p = params(3.3, 5e-4);
        let cfg = NumericsConfig::default();
        let mut last = f64::INFINITY;
        for i in [1e-9, 1e-7, 1e-5, 1e-3] {
            let r = empty_ball_radius_below6(i, &p, &cfg).unwrap();
            assert!(
                empty_ball_residual(i, &p, f64::INFINITY, 2.0 * PI, r).abs() < 1e-10,
                "residual too large at i={i}"
            );
            assert!(r < last, "radius must shrink with interference");
            last = r;
        }
        // Radius grows with density and with power.
        let i = 1e-6;
        let r0 = empty_ball_radius_below6(i, &params(4.0, 5e-4), &cfg).unwrap();
        let r1 = empty_ball_radius_below6(i, &params(4.0, 2e-3), &cfg).unwrap();
        assert!(r1 > r0);
        let mut hp = params(4.0, 5e-4);
        hp.p1 *= 10.0;
        let r2 = empty_ball_radius_below6(i, &hp, &cfg).unwrap();
        assert!(r2 > r0);
    }

    #[test]
    fn blockage_root_converges_to_below6_when_los_unbounded() {
        let p = params(3.1, 8e-5);
        let cfg = NumericsConfig::default();
        for i in [1e-8, 1e-5] {
            let far = empty_ball_radius_blockage(i, &p, 1e12, &cfg).unwrap();
            let free = empty_ball_radius_below6(i, &p, &cfg).unwrap();
            assert!((far - free).abs() < 1e-6 * free, "{far} vs {free}");
        }
    }

    #[test]
    fn blockage_alpha4_closed_form_agrees() {
        let p = params(4.0, 8e-5);
        let cfg = NumericsConfig::default();
        let r_l = 47.8;
        for k in 0..50 {
            let i = 1e-13 * 10f64.powf(10.0 * k as f64 / 49.0);
            let root = empty_ball_radius_blockage(i, &p, r_l, &cfg).unwrap();
            let closed = closed_form_alpha4(i, p.lambda1, p.p1, r_l, 2.0 * PI).unwrap();
            assert!(
                (root - closed).abs() <= 1e-9 * closed,
                "i={i}: {root} vs {closed}"
            );
        }
    }

    #[test]
    fn near_alpha2_limit_matches_closed_form() {
        // The limit formula drops a term proportional to ln(R); it is exact
        // where R sits near one meter, so the check runs on a grid of
        // interference values that keeps R in [0.8, 1.2].
        let p = params(2.0 + 1e-6, 8e-5);
        let cfg = NumericsConfig::default();
        let r_l = 47.8f64;
        let m = 2.0 * PI;
        for k in 0..20 {
            let r_target = 0.8 + 0.4 * k as f64 / 19.0;
            let i = p.p1 * (r_target.powf(-2.0) + m * p.lambda1 * (r_l / r_target).ln());
            let root = empty_ball_radius_blockage(i, &p, r_l, &cfg).unwrap();
            let closed = closed_form_alpha2_limit(i, p.lambda1, p.p1, r_l, m).unwrap();
            assert!(
                (root - closed).abs() <= 1e-4 * closed,
                "R~{r_target}: root={root}, closed={closed}"
            );
        }
    }

    #[test]
    fn alpha2_limit_domain_check() {
        let p = params(2.0 + 1e-6, 8e-5);
        // Tiny interference puts the bracket negative.
        let err = closed_form_alpha2_limit(1e-12 * p.p1, p.lambda1, p.p1, 1e6, 2.0 * PI);
        assert!(matches!(err, Err(SapError::Domain(_))));
    }

    #[test]
    fn mmw_full_beam_equals_blockage() {
        let mut p = params(2.7, 8e-5);
        p.omega = 2.0 * PI;
        let cfg = NumericsConfig::default();
        for i in [1e-9, 1e-6] {
            let a = empty_ball_radius_mmw(i, &p, 47.8, &cfg).unwrap();
            let b = empty_ball_radius_blockage(i, &p, 47.8, &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn radius_grows_as_beam_narrows() {
        let cfg = NumericsConfig::default();
        let i = 1e-7;
        let mut last = 0.0;
        for omega in [PI / 2.0, PI / 6.0, PI / 18.0] {
            let mut p = params(2.7, 8e-5);
            p.omega = omega;
            let r = empty_ball_radius_mmw(i, &p, 47.8, &cfg).unwrap();
            assert!(r > last, "omega={omega}: {r} <= {last}");
            last = r;
        }
    }
}
