//! Controlled quadrature, root finding, and small statistics helpers.
//!
//! The analytical formulas in this crate are products of one-dimensional
//! integrals with known kink locations and a single bracketed root here and
//! there. A 15-point Gauss–Kronrod rule with adaptive bisection covers the
//! integrals; the embedded 7-point Gauss value provides the error estimate
//! that is propagated into every reported result.

use crate::error::{Result, SapError};

/// Value and error estimate of a quadrature.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn zero() -> Self {
        QuadResult::default()
    }

    pub fn add(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

// 15-point Kronrod abscissae (positive half) and weights, with the embedded
// 7-point Gauss weights on the shared nodes.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    let diff = (kronrod - gauss).abs();
    // QUADPACK-style sharpened estimate; floor it so the reported error is
    // never optimistically zero on non-trivial integrands.
    let err = if diff > 0.0 {
        (200.0 * diff).powf(1.5).min(diff).max(f64::EPSILON * kronrod.abs())
    } else {
        f64::EPSILON * kronrod.abs()
    };
    (kronrod, err)
}

/// Adaptively integrates `f` over `[a, b]` to the requested tolerances.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(SapError::Parameter(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if b <= a {
        return Ok(QuadResult::zero());
    }

    struct Seg {
        a: f64,
        b: f64,
        value: f64,
        error: f64,
    }
    let (v0, e0) = kronrod_15(f, a, b);
    let mut segs = vec![Seg {
        a,
        b,
        value: v0,
        error: e0,
    }];
    let mut evals = 15usize;

    for _ in 0..max_subdivisions {
        let total_value: f64 = segs.iter().map(|s| s.value).sum();
        let total_error: f64 = segs.iter().map(|s| s.error).sum();
        if total_error <= abs_tol.max(rel_tol * total_value.abs()) {
            return Ok(QuadResult {
                value: total_value,
                error: total_error,
                evaluations: evals,
            });
        }
        let (worst, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .expect("non-empty segment list");
        let seg = segs.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // Interval at floating-point resolution; accept what we have.
            segs.push(seg);
            break;
        }
        let (vl, el) = kronrod_15(f, seg.a, mid);
        let (vr, er) = kronrod_15(f, mid, seg.b);
        evals += 30;
        segs.push(Seg {
            a: seg.a,
            b: mid,
            value: vl,
            error: el,
        });
        segs.push(Seg {
            a: mid,
            b: seg.b,
            value: vr,
            error: er,
        });
    }

    let total_value: f64 = segs.iter().map(|s| s.value).sum();
    let total_error: f64 = segs.iter().map(|s| s.error).sum();
    if total_error <= (10.0 * abs_tol).max(10.0 * rel_tol * total_value.abs()) {
        // Close enough to be usable; the caller sees the honest estimate.
        return Ok(QuadResult {
            value: total_value,
            error: total_error,
            evaluations: evals,
        });
    }
    Err(SapError::Numeric(format!(
        "quadrature did not converge: value={total_value:.6e} error={total_error:.3e}"
    )))
}

/// Integrates with known breakpoints (integrand kinks) inside `[a, b]`.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_subdivisions: usize,
) -> Result<QuadResult> {
    if b <= a {
        return Ok(QuadResult::zero());
    }
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len() + 2);
    edges.push(a);
    edges.extend_from_slice(&pts);
    edges.push(b);
    let mut acc = QuadResult::zero();
    let piece_abs = abs_tol / edges.len() as f64;
    for w in edges.windows(2) {
        acc = acc.add(integrate(f, w[0], w[1], piece_abs, rel_tol, max_subdivisions)?);
    }
    Ok(acc)
}

/// acos with a tolerance band for floating-point excursions outside [-1, 1].
///
/// Boundary geometry routinely produces arguments like `1.0 + 3e-16`; those
/// are clamped. Violations beyond `tol` indicate a real formula error and are
/// reported instead of silently clamped.
pub fn checked_acos(x: f64, tol: f64) -> Result<f64> {
    if x.abs() <= 1.0 {
        Ok(x.acos())
    } else if x.abs() <= 1.0 + tol {
        Ok(x.clamp(-1.0, 1.0).acos())
    } else {
        Err(SapError::Numeric(format!(
            "acos argument {x} outside [-1,1] beyond tolerance {tol}"
        )))
    }
}

/// Expands `[lo, hi]` geometrically until `f` changes sign, then bisects.
///
/// `f(lo)` fixes the reference sign. Fails if no sign change appears within
/// `max_growths` expansions of the upper end.
pub fn expand_and_bisect<F: Fn(f64) -> f64>(
    f: &F,
    lo0: f64,
    hi0: f64,
    growth: f64,
    max_growths: usize,
    rel_tol: f64,
) -> Result<f64> {
    if !(lo0 > 0.0 && hi0 > lo0 && growth > 1.0) {
        return Err(SapError::Parameter(format!(
            "invalid bracket ({lo0}, {hi0}) with growth {growth}"
        )));
    }
    let mut lo = lo0;
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let mut hi = hi0;
    let mut f_hi = f(hi);
    let mut grown = 0usize;
    while f_hi.signum() == f_lo.signum() {
        if grown >= max_growths {
            return Err(SapError::Numeric(format!(
                "no sign change found in [{lo0}, {hi}] after {max_growths} expansions"
            )));
        }
        // The root may also sit below the initial bracket; walk both ends.
        lo = hi0.min(lo); // keep lo anchored at the smaller original end
        hi *= growth;
        f_hi = f(hi);
        grown += 1;
        if !f_hi.is_finite() {
            return Err(SapError::Numeric(format!("function not finite at {hi}")));
        }
    }
    // f_lo and f_hi now differ in sign.
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs() + f64::MIN_POSITIVE {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let _ = f_hi;
    Ok(0.5 * (lo + hi))
}

/// Least-squares polynomial fit returning monomial coefficients
/// `c[0] + c[1] x + ... + c[degree] x^degree`.
///
/// The fit runs in a shifted/scaled basis for conditioning and the
/// coefficients are expanded back to the monomial basis.
pub fn fit_polynomial(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    let n = xs.len();
    let m = degree + 1;
    if n < m {
        return Err(SapError::Parameter(format!(
            "need at least {m} points to fit degree {degree}, got {n}"
        )));
    }
    if ys.len() != n {
        return Err(SapError::Parameter("xs and ys length mismatch".into()));
    }
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (x_min + x_max);
    let half = (0.5 * (x_max - x_min)).max(f64::MIN_POSITIVE);

    // Build the Vandermonde in t = (x - center)/half and solve by Householder QR.
    let mut a = vec![0.0; n * m];
    for (i, &x) in xs.iter().enumerate() {
        let t = (x - center) / half;
        let mut p = 1.0;
        for j in 0..m {
            a[i * m + j] = p;
            p *= t;
        }
    }
    let mut b = ys.to_vec();
    for k in 0..m {
        let mut norm = 0.0;
        for i in k..n {
            norm += a[i * m + k] * a[i * m + k];
        }
        let norm = norm.sqrt();
        if norm == 0.0 {
            return Err(SapError::Numeric("rank-deficient polynomial fit".into()));
        }
        let alpha = if a[k * m + k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n];
        v[k] = a[k * m + k] - alpha;
        for i in (k + 1)..n {
            v[i] = a[i * m + k];
        }
        let vtv: f64 = v[k..n].iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        for j in k..m {
            let dot: f64 = (k..n).map(|i| v[i] * a[i * m + j]).sum();
            let scale = 2.0 * dot / vtv;
            for i in k..n {
                a[i * m + j] -= scale * v[i];
            }
        }
        let dot: f64 = (k..n).map(|i| v[i] * b[i]).sum();
        let scale = 2.0 * dot / vtv;
        for i in k..n {
            b[i] -= scale * v[i];
        }
    }
    // Back substitution on the upper-triangular system.
    let mut c_t = vec![0.0; m];
    for j in (0..m).rev() {
        let mut s = b[j];
        for k in (j + 1)..m {
            s -= a[j * m + k] * c_t[k];
        }
        if a[j * m + j] == 0.0 {
            return Err(SapError::Numeric("singular triangular system in fit".into()));
        }
        c_t[j] = s / a[j * m + j];
    }

    // Expand sum_k c_t[k] ((x - center)/half)^k into monomials of x.
    let mut coeffs = vec![0.0; m];
    let mut basis = vec![0.0; m]; // coefficients of ((x - center)/half)^k
    basis[0] = 1.0;
    for (k, &ck) in c_t.iter().enumerate() {
        if k > 0 {
            // multiply basis by (x - center)/half
            let mut next = vec![0.0; m];
            for (j, &bj) in basis.iter().enumerate() {
                if bj == 0.0 {
                    continue;
                }
                if j + 1 < m {
                    next[j + 1] += bj / half;
                }
                next[j] += -center / half * bj;
            }
            basis = next;
        }
        for j in 0..m {
            coeffs[j] += ck * basis[j];
        }
    }
    Ok(coeffs)
}

pub fn eval_polynomial(coeffs: &[f64], x: f64) -> f64 {
    // Horner form.
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Wilson score interval for a binomial proportion at ~95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Mean and ~95% normal confidence interval of a sample.
pub fn mean_ci(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.959963984540054 * (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_smooth_closed_forms() {
        // Oracle: closed-form antiderivatives.
        let r = integrate(&|x: f64| x.sin(), 0.0, PI, 1e-12, 1e-12, 100).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{}", r.value);
        assert!((r.value - 2.0).abs() <= r.error.max(1e-12));

        let r = integrate(&|x: f64| 1.0 / (1.0 + x * x), 0.0, 1.0, 1e-13, 1e-13, 100).unwrap();
        assert!((r.value - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_kinked_function_with_breakpoints() {
        // |x - 0.3| on [0,1] = 0.3^2/2 + 0.7^2/2 = 0.29
        let f = |x: f64| (x - 0.3).abs();
        let r = integrate_piecewise(&f, 0.0, 1.0, &[0.3], 1e-13, 1e-13, 200).unwrap();
        assert!((r.value - 0.29).abs() < 1e-13);
    }

    #[test]
    fn bisection_finds_sqrt2() {
        let root = expand_and_bisect(&|x| x * x - 2.0, 1e-6, 1.0, 2.0, 200, 1e-14).unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisection_reports_missing_sign_change() {
        let err = expand_and_bisect(&|x| x * x + 1.0, 1e-6, 1.0, 2.0, 16, 1e-12);
        assert!(matches!(err, Err(SapError::Numeric(_))));
    }

    #[test]
    fn polynomial_fit_recovers_exact_coefficients() {
        let truth = [176.0, -1318.0, -1.118e5, 3.847e6, -4.729e7, 2.051e8];
        let xs: Vec<f64> = (0..30).map(|i| 0.002 + 0.0023 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| eval_polynomial(&truth, x)).collect();
        let c = fit_polynomial(&xs, &ys, 5).unwrap();
        for (got, want) in c.iter().zip(truth.iter()) {
            assert!(
                (got - want).abs() <= 1e-6 * want.abs().max(1.0),
                "got {got}, want {want}"
            );
        }
    }

    #[test]
    fn checked_acos_clamps_and_rejects() {
        assert_eq!(checked_acos(1.0 + 1e-13, 1e-12).unwrap(), 0.0);
        assert!((checked_acos(-1.0 - 1e-13, 1e-12).unwrap() - PI).abs() < 1e-15);
        assert!(checked_acos(1.1, 1e-12).is_err());
    }

    #[test]
    fn wilson_interval_brackets_p_hat() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && 0.5 < hi);
        assert!(lo > 0.40 && hi < 0.60);
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }
}
