//! Conditional-OP oracle: the empirical law of (sensed interference at the
//! typical TX, coverage indicator at its RX with all secondaries silent).

use super::{BinStat, ConditionalOpCurve};
use crate::channel::{sense_interference, sir_at, NetworkParams, Regime, TxRef};
use crate::error::{Result, SapError};
use crate::geometry::{sample_blockage_field, sample_ppp_disc, BlockageField, Deployment, Point, SecondaryPair};
use crate::seed::SeedStream;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug)]
pub struct OracleConfig {
    pub n_samples: usize,
    /// Log-spaced bins between the 1st and 99th percentile of sensed
    /// interference.
    pub main_bins: usize,
    /// Primaries are sampled on a disc of this radius around the pair.
    pub sample_radius: f64,
    /// Bins below this count are flagged out of acceptance comparisons.
    pub min_bin_count: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            n_samples: 100_000,
            main_bins: 40,
            sample_radius: 1000.0,
            min_bin_count: 1000,
        }
    }
}

const TAG_PRIMARIES: u64 = 1;
const TAG_AZIMUTH: u64 = 2;
const TAG_BLOCKAGE: u64 = 3;
const TAG_SENSE_FADE: u64 = 4;
const TAG_RX_FADE: u64 = 5;

/// One conditioned topology draw: the pair is outdoors and mutually LOS in
/// the blockage regimes (matching the conditioning under which the
/// analytical OP is stated).
fn draw_topology(params: &NetworkParams, cfg: &OracleConfig, seed: SeedStream) -> Result<Deployment> {
    let tx = Point::new(0.0, 0.0);
    let rx = Point::new(params.d, 0.0);
    let primaries = sample_ppp_disc(params.lambda1, cfg.sample_radius, seed.child(TAG_PRIMARIES))?;
    let mut az_rng = seed.child(TAG_AZIMUTH).rng();
    let primary_txs: Vec<(Point, f64)> = primaries
        .into_iter()
        .map(|p| (p, az_rng.random::<f64>() * 2.0 * PI))
        .collect();

    let blockages = match (&params.blockage, params.regime) {
        (Some(b), Regime::Blockage | Regime::Mmw) => {
            let mut field = None;
            for attempt in 0..256u64 {
                let f = sample_blockage_field(
                    b,
                    cfg.sample_radius,
                    seed.child(TAG_BLOCKAGE).child(attempt),
                )?;
                if !f.covers(tx) && !f.covers(rx) && !f.blocked(tx, rx) {
                    field = Some(f);
                    break;
                }
            }
            field.ok_or_else(|| {
                SapError::Numeric("could not draw an unblocked typical pair in 256 attempts".into())
            })?
        }
        _ => BlockageField::empty(),
    };

    Ok(Deployment {
        primary_txs,
        secondary_pairs: vec![SecondaryPair { tx, rx }],
        blockages,
    })
}

/// Sensed level and silent-coverage indicator for one topology draw.
pub(crate) fn sample_once(
    params: &NetworkParams,
    beta: f64,
    cfg: &OracleConfig,
    seed: SeedStream,
) -> Result<(f64, bool)> {
    let dep = draw_topology(params, cfg, seed)?;
    let tx = dep.secondary_pairs[0].tx;
    let rx = dep.secondary_pairs[0].rx;
    let sensed = sense_interference(tx, &dep, params, seed.child(TAG_SENSE_FADE))?;
    let sir = sir_at(
        rx,
        TxRef::Secondary(0),
        &dep,
        &[true],
        params,
        seed.child(TAG_RX_FADE),
    )?;
    Ok((sensed, sir >= beta))
}

/// Quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Bins (sensed, success) pairs: `main_bins` log-spaced bins over the 1-99
/// percentile range, plus quantile overflow bins that keep the high-
/// interference tail statistically resolvable.
pub(crate) fn bin_samples(samples: &[(f64, bool)], main_bins: usize) -> (Vec<BinStat>, u64, u64) {
    let mut zero_count = 0u64;
    let mut zero_successes = 0u64;
    let mut positive: Vec<(f64, bool)> = Vec::with_capacity(samples.len());
    for &(i, s) in samples {
        if i > 0.0 {
            positive.push((i, s));
        } else {
            zero_count += 1;
            if s {
                zero_successes += 1;
            }
        }
    }
    if positive.is_empty() {
        return (Vec::new(), zero_count, zero_successes);
    }
    let mut sorted: Vec<f64> = positive.iter().map(|&(i, _)| i).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q01 = quantile(&sorted, 0.01).max(f64::MIN_POSITIVE);
    let q99 = quantile(&sorted, 0.99);
    let mut edges: Vec<f64> = Vec::new();
    edges.push(0.0);
    if q99 > q01 {
        for k in 0..=main_bins {
            edges.push(q01 * (q99 / q01).powf(k as f64 / main_bins as f64));
        }
    } else {
        edges.push(q99);
    }
    let main_end = edges.len() - 1;
    for q in [0.995, 0.998, 0.9995] {
        let e = quantile(&sorted, q);
        if e > *edges.last().unwrap() {
            edges.push(e);
        }
    }
    let top = sorted[sorted.len() - 1];
    if top > *edges.last().unwrap() {
        edges.push(top);
    }
    let mut bins: Vec<BinStat> = edges
        .windows(2)
        .enumerate()
        .map(|(idx, w)| BinStat {
            lo: w[0],
            hi: w[1],
            overflow: idx + 1 > main_end,
            ..BinStat::default()
        })
        .collect();
    for (i, s) in positive {
        // Upper-inclusive bins; the last bin catches the maximum.
        let pos = bins
            .iter()
            .position(|b| i <= b.hi)
            .unwrap_or(bins.len() - 1);
        let b = &mut bins[pos];
        b.count += 1;
        b.sum_i += i;
        if s {
            b.successes += 1;
        }
    }
    (bins, zero_count, zero_successes)
}

/// Draws `n_samples` conditioned topologies and returns the binned empirical
/// conditional coverage with Wilson intervals.
pub fn conditional_op_oracle(
    params: &NetworkParams,
    beta: f64,
    cfg: &OracleConfig,
    seed: SeedStream,
) -> Result<ConditionalOpCurve> {
    params.validate()?;
    if beta <= 0.0 {
        return Err(SapError::Parameter(format!("beta must be > 0, got {beta}")));
    }
    let root = seed.child(0x0C0DE);
    let samples: Result<Vec<(f64, bool)>> = (0..cfg.n_samples as u64)
        .into_par_iter()
        .map(|k| sample_once(params, beta, cfg, root.child(k)))
        .collect();
    let samples = samples?;
    let (bins, zero_count, zero_successes) = bin_samples(&samples, cfg.main_bins);
    Ok(ConditionalOpCurve {
        beta,
        bins,
        zero_count,
        zero_successes,
        total_samples: cfg.n_samples as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BlockageModel;

    fn fig6a() -> NetworkParams {
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
    fn tiny_threshold_gives_full_coverage_everywhere() {
        let p = fig6a();
        let cfg = OracleConfig {
            n_samples: 4000,
            main_bins: 10,
            sample_radius: 400.0,
            min_bin_count: 50,
        };
        let curve = conditional_op_oracle(&p, 1e-12, &cfg, SeedStream::new(7)).unwrap();
        for b in &curve.bins {
            if b.count > 0 {
                assert_eq!(b.successes, b.count, "bin [{}, {}]", b.lo, b.hi);
            }
        }
    }

    #[test]
    fn coverage_decreases_with_sensed_interference() {
        let p = fig6a();
        let cfg = OracleConfig {
            n_samples: 60_000,
            main_bins: 12,
            sample_radius: 600.0,
            min_bin_count: 500,
        };
        let curve = conditional_op_oracle(&p, 1.0, &cfg, SeedStream::new(11)).unwrap();
        let qualifying: Vec<&BinStat> = curve
            .bins
            .iter()
            .filter(|b| b.qualifies(cfg.min_bin_count))
            .collect();
        assert!(qualifying.len() >= 8, "too few qualifying bins");
        // Monotone non-increasing up to CI noise: compare first vs last
        // thirds rather than adjacent bins.
        let third = qualifying.len() / 3;
        let head: f64 =
            qualifying[..third].iter().map(|b| b.p_hat()).sum::<f64>() / third as f64;
        let tail: f64 = qualifying[qualifying.len() - third..]
            .iter()
            .map(|b| b.p_hat())
            .sum::<f64>()
            / third as f64;
        assert!(head > tail + 0.2, "head={head}, tail={tail}");
    }

    #[test]
    fn blockage_conditioning_rejects_blocked_pairs() {
        let mut p = fig6a();
        p.regime = Regime::Blockage;
        p.alpha = 2.7;
        p.d = 5.0;
        p.lambda1 = 8e-5;
        p.blockage = Some(BlockageModel::new(0.04 / 30.0, 15.0, 15.0).unwrap());
        let cfg = OracleConfig {
            n_samples: 500,
            main_bins: 8,
            sample_radius: 300.0,
            min_bin_count: 10,
        };
        let curve = conditional_op_oracle(&p, 1.0, &cfg, SeedStream::new(3)).unwrap();
        // Roughly half of all draws sense zero interference in this setting.
        assert!(curve.zero_count > 50, "zero-I draws: {}", curve.zero_count);
        assert_eq!(
            curve.total_samples,
            curve.zero_count + curve.bins.iter().map(|b| b.count).sum::<u64>()
        );
    }

    #[test]
    fn oracle_is_deterministic() {
        let p = fig6a();
        let cfg = OracleConfig {
            n_samples: 2000,
            main_bins: 8,
            sample_radius: 300.0,
            min_bin_count: 10,
        };
        let a = conditional_op_oracle(&p, 1.0, &cfg, SeedStream::new(5)).unwrap();
        let b = conditional_op_oracle(&p, 1.0, &cfg, SeedStream::new(5)).unwrap();
        for (x, y) in a.bins.iter().zip(b.bins.iter()) {
            assert_eq!(x.count, y.count);
            assert_eq!(x.successes, y.successes);
            assert_eq!(x.sum_i.to_bits(), y.sum_i.to_bits());
        }
    }
}
