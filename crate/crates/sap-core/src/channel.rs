//! Path loss, fading, beam thinning, and exact SIR evaluation on a sampled
//! deployment.
//!
//! Interference is noise-free by construction (SIR, not SINR). The analytical
//! modules approximate LOS with a ball of radius `R_L`; functions here that
//! take a `Deployment` use the exact segment-against-rectangles test, so the
//! approximation error itself is measurable.

use crate::error::{Result, SapError};
use crate::geometry::{BlockageModel, Deployment, Point};
use crate::seed::SeedStream;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Propagation regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Sub-6 GHz: no blockages, omnidirectional transmissions.
    Below6,
    /// Above-6 GHz with blockages, omnidirectional transmissions.
    Blockage,
    /// Above-6 GHz with blockages and directional primary beams.
    Mmw,
}

/// All scalar model parameters, in meters / watts / 1/m² / radians.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Primary TX density (1/m²).
    pub lambda1: f64,
    /// Secondary TX density (1/m²).
    pub lambda2: f64,
    /// Primary transmit power (W).
    pub p1: f64,
    /// Secondary transmit power (W).
    pub p2: f64,
    /// Path-loss exponent, > 2.
    pub alpha: f64,
    /// Secondary pair distance (m).
    pub d: f64,
    /// Primary beamwidth (rad); 2π outside the mmW regime.
    pub omega: f64,
    /// Primary decoding threshold (linear SIR).
    pub gamma: f64,
    /// Primary outage cap.
    pub tau: f64,
    pub regime: Regime,
    pub blockage: Option<BlockageModel>,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 2.0) {
            return Err(SapError::Parameter(format!("alpha must be > 2, got {}", self.alpha)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(SapError::Parameter(format!("tau must be in (0,1), got {}", self.tau)));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(SapError::Parameter("densities must be >= 0".into()));
        }
        if !(self.p1 > 0.0 && self.p2 > 0.0 && self.d > 0.0 && self.gamma > 0.0) {
            return Err(SapError::Parameter("powers, pair distance, gamma must be > 0".into()));
        }
        if !(self.omega > 0.0 && self.omega <= 2.0 * PI) {
            return Err(SapError::Parameter(format!(
                "omega must be in (0, 2pi], got {}",
                self.omega
            )));
        }
        match self.regime {
            Regime::Below6 => {}
            Regime::Blockage | Regime::Mmw => {
                if self.blockage.is_none() {
                    return Err(SapError::Parameter(
                        "blockage model required in blockage/mmw regimes".into(),
                    ));
                }
                if self.regime == Regime::Mmw && !(self.omega < PI) {
                    return Err(SapError::Parameter(format!(
                        "mmw regime requires omega < pi, got {}",
                        self.omega
                    )));
                }
            }
        }
        Ok(())
    }

    /// LOS ball radius of the active regime; infinite when blockages are off.
    pub fn los_radius(&self) -> f64 {
        match (self.regime, &self.blockage) {
            (Regime::Below6, _) | (_, None) => f64::INFINITY,
            (_, Some(b)) => b.avg_los_distance(),
        }
    }

    /// Fraction of primary interferers kept by beam thinning.
    pub fn beam_thinning(&self) -> f64 {
        match self.regime {
            Regime::Mmw => self.omega / (2.0 * PI),
            _ => 1.0,
        }
    }
}

/// One unit-mean exponential power fading draw.
#[derive(Clone, Copy, Debug)]
pub struct FadingDraw {
    pub h: f64,
}

impl FadingDraw {
    pub fn sample(seed: SeedStream) -> Self {
        FadingDraw {
            h: seed.unit_exponential(),
        }
    }
}

/// Distance-based gain: plain power law below 6 GHz, power law inside the
/// LOS ball and zero beyond it otherwise.
pub fn path_gain(dist: f64, params: &NetworkParams, r_l: f64) -> Result<f64> {
    if dist <= 0.0 {
        return Err(SapError::Parameter(format!(
            "path gain singular at distance {dist}"
        )));
    }
    match params.regime {
        Regime::Below6 => Ok(dist.powf(-params.alpha)),
        Regime::Blockage | Regime::Mmw => {
            if dist <= r_l {
                Ok(dist.powf(-params.alpha))
            } else {
                Ok(0.0)
            }
        }
    }
}

/// Smallest angular distance between two azimuths.
#[inline]
fn angdist(a: f64, b: f64) -> f64 {
    let mut x = (a - b).rem_euclid(2.0 * PI);
    if x > PI {
        x = 2.0 * PI - x;
    }
    x
}

/// True iff `target` lies inside the beam sector of a TX at `tx` with the
/// given azimuth and the regime's beamwidth.
#[inline]
pub fn in_beam_sector(tx: Point, azimuth: f64, target: Point, params: &NetworkParams) -> bool {
    if params.regime != Regime::Mmw {
        return true;
    }
    let dir = (target.y - tx.y).atan2(target.x - tx.x);
    angdist(azimuth, dir) <= params.omega / 2.0
}

/// Exact LOS indicator of the active regime (segment test in blockage/mmw).
#[inline]
fn exact_los(p: Point, q: Point, dep: &Deployment, params: &NetworkParams) -> bool {
    match params.regime {
        Regime::Below6 => true,
        _ => !dep.blockages.blocked(p, q),
    }
}

fn link_gain(tx: Point, rx: Point, dep: &Deployment, params: &NetworkParams) -> Result<f64> {
    let dist = tx.dist(rx);
    if dist <= 0.0 {
        return Err(SapError::Parameter("coincident TX and RX".into()));
    }
    if !exact_los(tx, rx, dep, params) {
        return Ok(0.0);
    }
    Ok(dist.powf(-params.alpha))
}

/// Which transmitter serves the receiver in a SIR evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TxRef {
    Primary(usize),
    Secondary(usize),
}

// Fading stream tags.
const FADE_DESIRED: u64 = 0x11;
const FADE_PRIMARY: u64 = 0x12;
const FADE_SECONDARY: u64 = 0x13;

fn fade(seed: SeedStream, class: u64, idx: usize) -> f64 {
    seed.child(class).child(idx as u64).unit_exponential()
}

/// Exact SIR at `rx` served by `serving`, with all primaries transmitting and
/// secondary pairs gated by `secondary_active`. Returns the infinite-SIR
/// sentinel when no interferer contributes.
///
/// Primary interferers contribute only if the receiver lies inside their beam
/// sector (mmW) and the link is unblocked; secondary interferers are
/// omnidirectional. Fading is a pure function of `fading_seed` and stable
/// link indices, so two calls with the same seed see identical channels.
pub fn sir_at(
    rx: Point,
    serving: TxRef,
    dep: &Deployment,
    secondary_active: &[bool],
    params: &NetworkParams,
    fading_seed: SeedStream,
) -> Result<f64> {
    if secondary_active.len() != dep.secondary_pairs.len() {
        return Err(SapError::Parameter(format!(
            "active flags length {} != pair count {}",
            secondary_active.len(),
            dep.secondary_pairs.len()
        )));
    }
    let (serving_pt, serving_power) = match serving {
        TxRef::Primary(i) => (dep.primary_txs[i].0, params.p1),
        TxRef::Secondary(k) => {
            if !secondary_active[k] {
                return Err(SapError::Parameter(format!("serving secondary {k} not active")));
            }
            (dep.secondary_pairs[k].tx, params.p2)
        }
    };

    // The desired link is never beam-gated: a serving TX aims at its RX.
    let numerator =
        serving_power * fade(fading_seed, FADE_DESIRED, 0) * link_gain(serving_pt, rx, dep, params)?;

    let mut denom = 0.0;
    for (i, &(p, az)) in dep.primary_txs.iter().enumerate() {
        if serving == TxRef::Primary(i) {
            continue;
        }
        if !in_beam_sector(p, az, rx, params) {
            continue;
        }
        let g = link_gain(p, rx, dep, params)?;
        if g > 0.0 {
            denom += params.p1 * fade(fading_seed, FADE_PRIMARY, i) * g;
        }
    }
    for (k, pair) in dep.secondary_pairs.iter().enumerate() {
        if !secondary_active[k] || serving == TxRef::Secondary(k) {
            continue;
        }
        let g = link_gain(pair.tx, rx, dep, params)?;
        if g > 0.0 {
            denom += params.p2 * fade(fading_seed, FADE_SECONDARY, k) * g;
        }
    }

    if denom == 0.0 {
        return Ok(f64::INFINITY); // interference-free sentinel
    }
    Ok(numerator / denom)
}

/// Aggregate primary interference measured at a sensing secondary TX, all
/// other secondaries silent. Applies the exact LOS and beam-sector rules of
/// the active regime.
pub fn sense_interference(
    tx: Point,
    dep: &Deployment,
    params: &NetworkParams,
    fading_seed: SeedStream,
) -> Result<f64> {
    let mut total = 0.0;
    for (i, &(p, az)) in dep.primary_txs.iter().enumerate() {
        if !in_beam_sector(p, az, tx, params) {
            continue;
        }
        let g = link_gain(p, tx, dep, params)?;
        if g > 0.0 {
            total += params.p1 * fade(fading_seed, FADE_PRIMARY, i) * g;
        }
    }
    Ok(total)
}
