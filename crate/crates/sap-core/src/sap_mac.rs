//! The SaP policy layer: optimal OP-to-access mapping, expected OP, coverage,
//! the minimum decoding target under the primary-protection constraint, and
//! the ASE-optimal decoding target.
//!
//! The access threshold always equals the decoding target and the optimal
//! mapping is linear, `F(x) = c* x`; the policy type carries no separate
//! threshold by construction. In the blockage and mmW regimes every
//! threshold functional (`rho0`, `rho`) carries the LOS range as its upper
//! limit, which keeps the outage formula and its inverse `beta_min` exactly
//! consistent.

use crate::channel::{NetworkParams, Regime};
use crate::error::{Result, SapError};
use crate::geometry::axis_length_from_blockage_factor;
use crate::numerics::{expand_and_bisect, integrate_piecewise};
use crate::op_analysis::{
    interference_exponent_base, op_below6, op_blockage, op_mmw, rho, rho0,
    threshold_base_integral, NumericsConfig, OpResult,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The optimized MAC policy.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SapPolicy {
    /// Decoding target; also the access threshold.
    pub beta: f64,
    /// Scaling of the linear OP-to-access mapping. Values above one mean the
    /// linear-map optimality condition fails at this operating point; access
    /// probabilities are clamped and `feasible` is cleared.
    pub c_star: f64,
    /// Smallest decoding target meeting the primary outage cap.
    pub beta_min: f64,
    /// Mean-value constant of the reduced ASE objective (below-6 regime).
    pub s: f64,
    /// Mean-value constant in the blockage/mmW regimes.
    pub s_tilde: Option<f64>,
    pub regime: Regime,
    /// True iff `c_star <= 1`, the regime where the linear map is optimal.
    pub feasible: bool,
}

impl SapPolicy {
    /// The active mean-value constant of the regime.
    pub fn mean_value_len(&self) -> f64 {
        self.s_tilde.unwrap_or(self.s)
    }
}

/// One ASE evaluation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AseResult {
    /// nats/s/Hz/m².
    pub ase: f64,
    pub beta_used: f64,
    pub constraint_outage: f64,
    pub feasible: bool,
}

/// Upper limit of the threshold functionals in the active regime.
fn threshold_upper(params: &NetworkParams) -> f64 {
    params.los_radius()
}

pub fn rho0_regime(params: &NetworkParams, beta: f64, cfg: &NumericsConfig) -> Result<f64> {
    rho0(beta, threshold_upper(params), params.alpha, cfg)
}

fn rho_regime(params: &NetworkParams, a: f64, cfg: &NumericsConfig) -> Result<f64> {
    rho(a, threshold_upper(params), params.alpha, cfg)
}

/// Default joint-unblocked axis length for the regime: the fitted curve at
/// the model's blockage factor, floored at the pair distance.
pub fn default_axis_length(params: &NetworkParams) -> Option<f64> {
    params
        .blockage
        .as_ref()
        .map(|b| axis_length_from_blockage_factor(b.blockage_factor()).value.max(params.d))
}

/// OP of the active regime at empty-ball radius `r`.
pub fn op_for_regime(
    r: f64,
    params: &NetworkParams,
    beta: f64,
    axis: Option<f64>,
    cfg: &NumericsConfig,
) -> Result<OpResult> {
    match params.regime {
        Regime::Below6 => op_below6(r, params, beta, cfg),
        Regime::Blockage => {
            let l = axis
                .or_else(|| default_axis_length(params))
                .ok_or_else(|| SapError::Parameter("axis length required".into()))?;
            op_blockage(r, l, params, beta, cfg)
        }
        Regime::Mmw => {
            let l = axis
                .or_else(|| default_axis_length(params))
                .ok_or_else(|| SapError::Parameter("axis length required".into()))?;
            op_mmw(r, l, params, beta, cfg)
        }
    }
}

/// Scaling factor of the optimal linear mapping,
/// `c* = 1 / (pi lam2 d^2 rho0(beta, .) E[OP])`.
pub fn c_star(params: &NetworkParams, beta: f64, expected_op: f64, cfg: &NumericsConfig) -> Result<f64> {
    if !(expected_op > 0.0 && expected_op <= 1.0) {
        return Err(SapError::Domain(format!(
            "expected OP must be in (0, 1], got {expected_op}"
        )));
    }
    let r0 = rho0_regime(params, beta, cfg)?;
    Ok(1.0 / (PI * params.lambda2 * params.d * params.d * r0 * expected_op))
}

/// The optimal linear mapping from OP to access probability, clamped to one.
pub fn access_probability(op_value: f64, policy: &SapPolicy) -> f64 {
    (policy.c_star * op_value).min(1.0)
}

/// Radius integration limit covering all but `~1e-12` of the nearest-point
/// distance distribution.
fn radius_cutoff(lam_eff: f64) -> f64 {
    (27.6 / (PI * lam_eff)).sqrt()
}

/// Expectation of `f(OP(r))` over the nearest-primary distance law of the
/// regime: `2 pi lam r exp(-pi lam r^2)` below 6 GHz, the beam-thinned
/// truncated variant `omega lam r exp(-omega lam r^2 / 2) / norm` on
/// `[0, R_L]` with blockages.
fn expect_over_radius<F: Fn(&OpResult) -> f64 + Sync>(
    params: &NetworkParams,
    beta: f64,
    axis: Option<f64>,
    cfg: &NumericsConfig,
    f: F,
) -> Result<f64> {
    if params.lambda1 == 0.0 {
        // No primaries: the OP is one with certainty.
        let op = OpResult {
            value: 1.0,
            regime: params.regime,
            r_used: f64::INFINITY,
            l_used: axis,
            nearest_factor: 1.0,
            aggregate_factor: 1.0,
            quadrature_error_estimate: 0.0,
        };
        return Ok(f(&op));
    }
    let profile_abs = 1e-10;
    let profile_rel = 1e-7;
    match params.regime {
        Regime::Below6 => {
            let lam = params.lambda1;
            let rmax = radius_cutoff(lam);
            let integrand = |r: f64| {
                let op = op_for_regime(r, params, beta, axis, cfg).expect("op evaluation");
                f(&op) * 2.0 * PI * lam * r * (-PI * lam * r * r).exp()
            };
            let q = integrate_piecewise(&integrand, 0.0, rmax, &[], profile_abs, profile_rel, 400)?;
            // Tail mass: the OP saturates at its large-radius value.
            let tail_mass = (-PI * lam * rmax * rmax).exp();
            let tail_val = f(&op_for_regime(rmax, params, beta, axis, cfg)?);
            Ok(q.value + tail_mass * tail_val)
        }
        Regime::Blockage | Regime::Mmw => {
            let l = axis
                .or_else(|| default_axis_length(params))
                .ok_or_else(|| SapError::Parameter("axis length required".into()))?;
            let omega_eff = if params.regime == Regime::Mmw {
                params.omega
            } else {
                2.0 * PI
            };
            let lam = params.lambda1;
            let r_l = params.los_radius();
            if !r_l.is_finite() {
                return Err(SapError::Parameter(
                    "blockage regime requires a finite LOS range".into(),
                ));
            }
            let norm = 1.0 - (-omega_eff * lam * r_l * r_l / 2.0).exp();
            if norm <= 0.0 {
                return Err(SapError::Numeric("degenerate truncated radius law".into()));
            }
            let integrand = |r: f64| {
                let op = op_for_regime(r, params, beta, Some(l), cfg).expect("op evaluation");
                f(&op) * omega_eff * lam * r * (-omega_eff * lam * r * r / 2.0).exp() / norm
            };
            let breaks = [0.5 * (l - params.d), 0.5 * (l + params.d)];
            let q =
                integrate_piecewise(&integrand, 0.0, r_l, &breaks, profile_abs, profile_rel, 400)?;
            Ok(q.value)
        }
    }
}

/// Mean OP over the nearest-primary distance law of the regime.
pub fn expected_op(params: &NetworkParams, beta: f64, axis: Option<f64>, cfg: &NumericsConfig) -> Result<f64> {
    expect_over_radius(params, beta, axis, cfg, |op| op.value)
}

/// Conditional secondary coverage under the optimal concurrent thinning:
/// the OP times the constant secondary-interference factor `e^-1`.
pub fn secondary_coverage(
    params: &NetworkParams,
    beta: f64,
    r: f64,
    axis: Option<f64>,
    cfg: &NumericsConfig,
) -> Result<f64> {
    Ok(op_for_regime(r, params, beta, axis, cfg)?.value * (-1.0f64).exp())
}

/// Primary outage probability under the policy's concurrent secondary
/// density `1/(pi d^2 rho0(beta, .))`.
pub fn primary_outage(params: &NetworkParams, beta: f64, cfg: &NumericsConfig) -> Result<f64> {
    if beta <= 0.0 {
        return Err(SapError::Parameter(format!("beta must be > 0, got {beta}")));
    }
    let a2 = 2.0 / params.alpha;
    let r0_beta = rho0_regime(params, beta, cfg)?;
    let r0_gamma = rho0_regime(params, params.gamma, cfg)?;
    let rho_gamma = rho_regime(params, params.gamma, cfg)?;
    let x = r0_gamma * params.p1.powf(a2) / (PI * params.d * params.d * r0_beta);
    let own = params.lambda1 * params.p2.powf(a2);
    Ok(1.0 - own / (x + own * (rho_gamma + 1.0)))
}

/// Smallest decoding target satisfying `outage <= tau`: the exact preimage
/// of the outage cap under [`primary_outage`].
pub fn beta_min(params: &NetworkParams, cfg: &NumericsConfig) -> Result<f64> {
    if params.lambda1 == 0.0 {
        return Ok(0.0); // no primaries, no constraint
    }
    let a2 = 2.0 / params.alpha;
    let rho_gamma = rho_regime(params, params.gamma, cfg)?;
    let bracket = params.tau * (1.0 + rho_gamma) - rho_gamma;
    if bracket <= 0.0 {
        return Err(SapError::Infeasible(format!(
            "primary protection infeasible at any beta: tau={} <= rho/(1+rho)={}",
            params.tau,
            rho_gamma / (1.0 + rho_gamma)
        )));
    }
    let r0_gamma = rho0_regime(params, params.gamma, cfg)?;
    let target_rho0 = r0_gamma * params.p1.powf(a2) * (1.0 - params.tau)
        / (PI * params.d * params.d * params.lambda1 * params.p2.powf(a2) * bracket);
    let base = threshold_base_integral(threshold_upper(params), params.alpha, cfg)?;
    Ok((target_rho0 / base).powf(params.alpha / 2.0))
}

/// Optimal concurrent transmitting density `1/(pi d^2 rho0(beta, .))`,
/// independent of the secondary deployment density.
pub fn optimal_concurrent_density(params: &NetworkParams, beta: f64, cfg: &NumericsConfig) -> Result<f64> {
    Ok(1.0 / (PI * params.d * params.d * rho0_regime(params, beta, cfg)?))
}

/// The mean-value constant: the radius `s` where the OP equals the
/// OP-weighted mean `int OP^2 pdf / int OP pdf`.
pub fn mean_value_constant(
    params: &NetworkParams,
    beta: f64,
    axis: Option<f64>,
    cfg: &NumericsConfig,
) -> Result<f64> {
    let num = expect_over_radius(params, beta, axis, cfg, |op| op.value * op.value)?;
    let den = expected_op(params, beta, axis, cfg)?;
    if den <= 0.0 {
        return Err(SapError::Numeric("vanishing mean OP".into()));
    }
    let ratio = num / den;
    let rmax = match params.regime {
        Regime::Below6 => radius_cutoff(params.lambda1),
        _ => params.los_radius(),
    };
    let op_at = |r: f64| -> Result<f64> { Ok(op_for_regime(r, params, beta, axis, cfg)?.value) };
    // Bracket by scanning; the OP profile is nondecreasing in r up to
    // quadrature noise, and the weighted mean lies inside its range.
    let n = 96;
    let mut prev_r = 0.0f64;
    let mut prev_v = op_at(0.0)?;
    if ratio <= prev_v {
        return Ok(0.0);
    }
    for k in 1..=n {
        let r = rmax * k as f64 / n as f64;
        let v = op_at(r)?;
        if (v - ratio) >= 0.0 {
            let lo = prev_r.max(1e-9);
            let f = |r: f64| op_at(r).unwrap_or(f64::NAN) - ratio;
            return expand_and_bisect(&f, lo, r, 1.0 + 1e-9, 1, 1e-9).or_else(|_| {
                // Fall back to plain bisection between the scanned bracket.
                let mut a = prev_r;
                let mut b = r;
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if op_at(m)? < ratio {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                Ok(0.5 * (a + b))
            });
        }
        prev_r = r;
        prev_v = v;
    }
    let _ = prev_v;
    Err(SapError::Numeric(format!(
        "mean-value ratio {ratio} not bracketed by the OP profile on [0, {rmax}]"
    )))
}

/// Root of the stationarity condition of the reduced ASE objective
/// `ln(1+b) b^(-2/a) exp(-k b^(2/a))`:
/// `a b/(1+b) - 2 ln(1+b) - 2 k b^(2/a) ln(1+b) = 0`.
pub fn optimal_beta_root(k: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(SapError::Parameter(format!("alpha must be > 2, got {alpha}")));
    }
    if k < 0.0 {
        return Err(SapError::Parameter(format!("k must be >= 0, got {k}")));
    }
    let f = |b: f64| {
        alpha * b / (1.0 + b) - 2.0 * (1.0 + b).ln() - 2.0 * k * b.powf(2.0 / alpha) * (1.0 + b).ln()
    };
    expand_and_bisect(&f, 1e-9, 1.0, 2.0, 400, 1e-12)
}

/// Reduced ASE objective with the mean-value constant folded into `k`.
pub fn reduced_ase_objective(beta: f64, k: f64, alpha: f64) -> f64 {
    let e = beta.powf(2.0 / alpha);
    (1.0 + beta).ln() * (-k * e).exp() / e
}

/// Jointly resolves the decoding target and the mean-value constant by a
/// damped fixed point, then assembles the full policy.
pub fn optimal_beta(params: &NetworkParams, axis: Option<f64>, cfg: &NumericsConfig) -> Result<SapPolicy> {
    params.validate()?;
    let b_min = beta_min(params, cfg)?;
    let lam_eff = params.lambda1 * params.beam_thinning();
    let mut s = if lam_eff > 0.0 {
        let mean_nearest = 0.5 / lam_eff.sqrt();
        match params.regime {
            Regime::Below6 => mean_nearest,
            _ => mean_nearest.min(0.5 * params.los_radius()),
        }
    } else {
        params.d
    };
    let mut beta_star = f64::NAN;
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..100 {
        let k = interference_exponent_base(s, params, cfg)?;
        let b0 = optimal_beta_root(k, params.alpha)?;
        let candidate = b0.max(b_min);
        trace.push((s, candidate));
        if beta_star.is_finite() && (candidate - beta_star).abs() / candidate < 1e-6 {
            beta_star = candidate;
            converged = true;
            break;
        }
        beta_star = candidate;
        let s_new = mean_value_constant(params, candidate, axis, cfg)?;
        s += 0.5 * (s_new - s);
    }
    if !converged {
        return Err(SapError::Numeric(format!(
            "beta/s fixed point did not converge in 100 iterations; trace tail: {:?}",
            &trace[trace.len().saturating_sub(5)..]
        )));
    }
    policy_for(params, beta_star, b_min, s, axis, cfg)
}

fn policy_for(
    params: &NetworkParams,
    beta: f64,
    b_min: f64,
    s: f64,
    axis: Option<f64>,
    cfg: &NumericsConfig,
) -> Result<SapPolicy> {
    let e_op = expected_op(params, beta, axis, cfg)?;
    let c = c_star(params, beta, e_op, cfg)?;
    let (s_field, s_tilde) = match params.regime {
        Regime::Below6 => (s, None),
        _ => (s, Some(s)),
    };
    Ok(SapPolicy {
        beta,
        c_star: c,
        beta_min: b_min,
        s: s_field,
        s_tilde,
        regime: params.regime,
        feasible: c <= 1.0,
    })
}

impl SapPolicy {
    /// Policy at an externally chosen decoding target.
    pub fn for_beta(params: &NetworkParams, beta: f64, axis: Option<f64>, cfg: &NumericsConfig) -> Result<Self> {
        params.validate()?;
        if beta <= 0.0 {
            return Err(SapError::Parameter(format!("beta must be > 0, got {beta}")));
        }
        let b_min = beta_min(params, cfg)?;
        let s = if params.lambda1 > 0.0 {
            mean_value_constant(params, beta, axis, cfg)?
        } else {
            params.d
        };
        policy_for(params, beta, b_min, s, axis, cfg)
    }
}

/// Analytic ASE of the SaP policy at decoding target `beta`:
/// `e^-1 ln(1+beta) c* lam2 E[OP^2]` with the regime's radius law.
pub fn ase(params: &NetworkParams, beta: f64, axis: Option<f64>, cfg: &NumericsConfig) -> Result<AseResult> {
    let e_op2 = expect_over_radius(params, beta, axis, cfg, |op| op.value * op.value)?;
    let e_op = expected_op(params, beta, axis, cfg)?;
    let c = c_star(params, beta, e_op, cfg)?;
    let constraint_outage = primary_outage(params, beta, cfg)?;
    Ok(AseResult {
        ase: (-1.0f64).exp() * (1.0 + beta).ln() * c.min(1.0) * params.lambda2 * e_op2,
        beta_used: beta,
        constraint_outage,
        feasible: constraint_outage <= params.tau + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BlockageModel;

    fn cfg() -> NumericsConfig {
        NumericsConfig::default()
    }

    fn fig6b_params() -> NetworkParams {
        NetworkParams {
            lambda1: 8e-5,
            lambda2: 1.6e-2,
            p1: crate::units::dbm_to_watts(43.0),
            p2: crate::units::dbm_to_watts(23.0),
            alpha: 4.0,
            d: 3.0,
            omega: 2.0 * PI,
            gamma: 1e-4,
            tau: 0.6,
            regime: Regime::Below6,
            blockage: None,
        }
    }

    fn mmw_params() -> NetworkParams {
        NetworkParams {
            lambda1: 8e-5,
            lambda2: 1.6e-2,
            p1: crate::units::dbm_to_watts(43.0),
            p2: crate::units::dbm_to_watts(23.0),
            alpha: 2.7,
            d: 5.0,
            omega: PI / 6.0,
            gamma: 1e-4,
            tau: 0.6,
            regime: Regime::Mmw,
            blockage: Some(BlockageModel::new(0.04 / 30.0, 15.0, 15.0).unwrap()),
        }
    }

    #[test]
    fn c_star_scales_inversely_with_density() {
        let p = fig6b_params();
        let mut p2 = p.clone();
        p2.lambda2 *= 2.0;
        let c1 = c_star(&p, 5.0, 0.4, &cfg()).unwrap();
        let c2 = c_star(&p2, 5.0, 0.4, &cfg()).unwrap();
        assert!((c1 / c2 - 2.0).abs() < 1e-12);
        assert!(c_star(&p, 5.0, 0.0, &cfg()).is_err());
    }

    #[test]
    fn average_access_probability_identity() {
        // c* E[OP] = 1/(pi lam2 d^2 rho0) by construction; the product must
        // recover it through the full quadrature pipeline.
        let p = fig6b_params();
        let c = cfg();
        for beta in [2.0, 20.0, 200.0] {
            let e_op = expected_op(&p, beta, None, &c).unwrap();
            let cs = c_star(&p, beta, e_op, &c).unwrap();
            let target = 1.0 / (PI * p.lambda2 * p.d * p.d * rho0_regime(&p, beta, &c).unwrap());
            assert!(
                (cs * e_op - target).abs() <= 1e-8 * target,
                "beta={beta}: {} vs {target}",
                cs * e_op
            );
        }
    }

    #[test]
    fn expected_op_limits() {
        let p = fig6b_params();
        let c = cfg();
        let tiny = expected_op(&p, 1e8, None, &c).unwrap();
        assert!(tiny < 1e-6, "expected OP at huge beta: {tiny}");
        let big = expected_op(&p, 1e-6, None, &c).unwrap();
        assert!(big > 0.999, "expected OP at tiny beta: {big}");
        let mut no_primaries = p.clone();
        no_primaries.lambda1 = 0.0;
        assert_eq!(expected_op(&no_primaries, 5.0, None, &c).unwrap(), 1.0);
    }

    #[test]
    fn access_probability_is_clamped_linear() {
        let policy = SapPolicy {
            beta: 5.0,
            c_star: 0.3,
            beta_min: 1.0,
            s: 10.0,
            s_tilde: None,
            regime: Regime::Below6,
            feasible: true,
        };
        assert_eq!(access_probability(0.0, &policy), 0.0);
        assert_eq!(access_probability(1.0, &policy), 0.3);
        let infeasible = SapPolicy {
            c_star: 2.5,
            feasible: false,
            ..policy
        };
        assert_eq!(access_probability(0.9, &infeasible), 1.0);
    }

    #[test]
    fn coverage_is_op_times_inverse_e() {
        let p = fig6b_params();
        let c = cfg();
        for r in [5.0, 50.0, 1e5] {
            let cov = secondary_coverage(&p, 3.0, r, None, &c).unwrap();
            let op = op_below6(r, &p, 3.0, &c).unwrap().value;
            assert!((cov / op - (-1.0f64).exp()).abs() < 1e-14);
        }
        let cov_far = secondary_coverage(&p, 3.0, 1e6, None, &c).unwrap();
        assert!((cov_far - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn beta_min_inverts_outage_in_all_regimes() {
        let c = cfg();
        for p in [fig6b_params(), mmw_params(), {
            let mut b = mmw_params();
            b.regime = Regime::Blockage;
            b.omega = 2.0 * PI;
            b
        }] {
            let bm = beta_min(&p, &c).unwrap();
            let outage = primary_outage(&p, bm, &c).unwrap();
            assert!(
                (outage - p.tau).abs() < 1e-8,
                "regime {:?}: outage({bm}) = {outage} != {}",
                p.regime,
                p.tau
            );
        }
    }

    #[test]
    fn beta_min_monotone_in_protection_strictness() {
        let c = cfg();
        let mut last = 0.0;
        for tau in [0.9, 0.8, 0.7, 0.6] {
            let mut p = fig6b_params();
            p.tau = tau;
            let bm = beta_min(&p, &c).unwrap();
            assert!(bm > last, "tau={tau}: {bm} <= {last}");
            last = bm;
        }
    }

    #[test]
    fn beta_min_infeasible_when_cap_below_baseline() {
        let mut p = fig6b_params();
        p.gamma = 1.0;
        p.tau = 0.1; // below the primary network's own outage floor
        assert!(matches!(beta_min(&p, &cfg()), Err(SapError::Infeasible(_))));
    }

    #[test]
    fn blockage_beta_min_decreases_with_denser_blockage() {
        let c = cfg();
        let mut last = f64::INFINITY;
        for lam_b in [0.02 / 30.0, 0.04 / 30.0, 0.08 / 30.0] {
            let mut p = mmw_params();
            p.regime = Regime::Blockage;
            p.omega = 2.0 * PI;
            // gamma large enough that the LOS range intersects the
            // threshold functional's support.
            p.gamma = 0.05;
            p.tau = 0.8;
            p.blockage = Some(BlockageModel::new(lam_b, 15.0, 15.0).unwrap());
            let bm = beta_min(&p, &c).unwrap();
            assert!(bm < last, "lam_b={lam_b}: {bm} >= {last}");
            last = bm;
        }
    }

    #[test]
    fn outage_decreases_in_beta_with_known_limit() {
        let p = fig6b_params();
        let c = cfg();
        let mut last = 1.0;
        for beta in [1.0, 10.0, 100.0, 1e4] {
            let o = primary_outage(&p, beta, &c).unwrap();
            assert!(o < last);
            last = o;
        }
        // Algebraic limit as the secondary network falls silent.
        let rho_g = rho(p.gamma, f64::INFINITY, p.alpha, &c).unwrap();
        let limit = 1.0 - 1.0 / (1.0 + rho_g);
        let far = primary_outage(&p, 1e16, &c).unwrap();
        assert!((far - limit).abs() < 1e-6, "{far} vs {limit}");
    }

    #[test]
    fn mean_value_constant_properties() {
        let p = fig6b_params();
        let c = cfg();
        let beta = 50.0;
        let s = mean_value_constant(&p, beta, None, &c).unwrap();
        let num = expect_over_radius(&p, beta, None, &c, |op| op.value * op.value).unwrap();
        let den = expected_op(&p, beta, None, &c).unwrap();
        let ratio = num / den;
        // Weighted mean sits inside the OP range and the OP at s matches it.
        assert!(ratio > 0.0 && ratio < 1.0);
        let at_s = op_below6(s, &p, beta, &c).unwrap().value;
        assert!((at_s - ratio).abs() < 1e-6, "OP(s)={at_s}, ratio={ratio}");
        // Refinement stability.
        let s2 = mean_value_constant(&p, beta, None, &c.halved()).unwrap();
        assert!((s - s2).abs() <= 1e-4 * s, "{s} vs {s2}");
    }

    #[test]
    fn degenerate_profile_returns_matching_point() {
        // At a tiny threshold the OP is essentially one everywhere, the
        // weighted mean equals that constant, and any radius qualifies; the
        // solver must return a point whose OP matches the ratio.
        let p = fig6b_params();
        let c = cfg();
        let s = mean_value_constant(&p, 1e-9, None, &c).unwrap();
        let at_s = op_below6(s, &p, 1e-9, &c).unwrap().value;
        assert!((at_s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn optimal_beta_root_high_op_condition() {
        // k = 0: the root satisfies beta/((1+beta) ln(1+beta)) = 2/alpha.
        for alpha in [2.5, 3.0, 4.0, 6.0] {
            let b = optimal_beta_root(0.0, alpha).unwrap();
            let lhs = b / ((1.0 + b) * (1.0 + b).ln());
            assert!(
                (lhs - 2.0 / alpha).abs() < 1e-6,
                "alpha={alpha}: beta={b}, lhs={lhs}"
            );
        }
    }

    #[test]
    fn optimal_beta_matches_grid_argmax_interior() {
        // Loose protection so the optimum is interior, then the transcendental
        // root must sit at the argmax of the reduced objective.
        let mut p = fig6b_params();
        p.gamma = 1e-6;
        p.tau = 0.9;
        let c = cfg();
        let policy = optimal_beta(&p, None, &c).unwrap();
        assert!(policy.beta > policy.beta_min, "expected interior optimum");
        let k = interference_exponent_base(policy.s, &p, &c).unwrap();
        let lo = policy.beta_min.max(1e-3);
        let hi = 1e3 * lo.max(policy.beta);
        let n = 200;
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..n {
            let b = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            let v = reduced_ase_objective(b, k, p.alpha);
            if v > best.1 {
                best = (b, v);
            }
        }
        let step = (hi / lo).powf(1.0 / (n - 1) as f64);
        assert!(
            policy.beta / best.0 < step && best.0 / policy.beta < step,
            "root {} vs grid argmax {}",
            policy.beta,
            best.0
        );
    }

    #[test]
    fn reduced_objective_unimodal_on_grid() {
        let p = fig6b_params();
        let c = cfg();
        let k = interference_exponent_base(20.0, &p, &c).unwrap();
        let mut values = Vec::new();
        for i in 0..200 {
            let b = 1e-2 * (1e6f64).powf(i as f64 / 199.0);
            values.push(reduced_ase_objective(b, k, p.alpha));
        }
        let peak = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        for w in values[..peak].windows(2) {
            assert!(w[0] <= w[1] + 1e-15);
        }
        for w in values[peak..].windows(2) {
            assert!(w[0] >= w[1] - 1e-15);
        }
    }

    #[test]
    fn concurrent_density_independent_of_secondary_density() {
        let p = fig6b_params();
        let c = cfg();
        let beta = 37.0;
        let mut doubled = p.clone();
        doubled.lambda2 *= 2.0;
        // Realized concurrent density lam2 c* E[OP] equals the target for
        // both, so it cannot move when lam2 doubles (beta held fixed).
        let realized = |pp: &NetworkParams| {
            let e = expected_op(pp, beta, None, &c).unwrap();
            pp.lambda2 * c_star(pp, beta, e, &c).unwrap() * e
        };
        let a = realized(&p);
        let b = realized(&doubled);
        assert!((a - b).abs() <= 1e-6 * a);
        let target = optimal_concurrent_density(&p, beta, &c).unwrap();
        assert!((a - target).abs() <= 1e-8 * target);
    }

    #[test]
    fn ase_flags_constraint_violations() {
        let p = fig6b_params();
        let c = cfg();
        let bm = beta_min(&p, &c).unwrap();
        let below = ase(&p, bm * 0.5, None, &c).unwrap();
        assert!(!below.feasible);
        let above = ase(&p, bm * 1.5, None, &c).unwrap();
        assert!(above.feasible);
        assert!(above.ase > 0.0);
    }

    #[test]
    fn optimal_beta_in_mmw_regime_converges() {
        let mut p = mmw_params();
        p.gamma = 1e-6;
        p.tau = 0.9;
        let c = cfg();
        let policy = optimal_beta(&p, None, &c).unwrap();
        assert!(policy.beta > 0.0 && policy.beta.is_finite());
        assert!(policy.s_tilde.is_some());
        // Narrow-beam limit: the optimality condition loses its interference
        // term entirely.
        let k = interference_exponent_base(policy.mean_value_len(), &p, &c).unwrap();
        let b_free = optimal_beta_root(0.0, p.alpha).unwrap();
        let b_with = optimal_beta_root(k, p.alpha).unwrap();
        assert!(b_with <= b_free);
    }
}
