//! The slotted sense/predict/access engine.
//!
//! Each slot: (1) every secondary TX senses the aggregate primary
//! interference with all secondaries silent; (2) predicts the OP at its RX
//! through the regime's ball-radius solver and OP formula; (3) accesses with
//! the MAC's probability; (4) SIRs are evaluated at every tallied secondary
//! RX and at a reference RX per primary TX. Statistics are tallied only for
//! devices inside the inner window.
//!
//! All MACs evaluated in one run share topologies, fading, and access
//! uniforms (common random numbers); only the access rule differs.

use super::predictor::{OpPredictor, PredictorFormula};
use super::{BinStat, Estimate, MacKind, MappingKind, SimReport};
use crate::channel::{in_beam_sector, NetworkParams, Regime};
use crate::error::Result;
use crate::geometry::{sample_deployment, BlockageField, Point, Region, SecondaryPair};
use crate::numerics::{mean_ci, wilson_interval};
use crate::op_analysis::NumericsConfig;
use crate::sap_mac::SapPolicy;
use crate::seed::SeedStream;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug)]
pub struct SlotRunConfig {
    pub n_topologies: usize,
    pub slots_per_topology: usize,
    pub region: Region,
    /// Distance of the reference primary RX from its serving TX; defaults to
    /// the secondary pair distance. The simulated outage is model-dependent
    /// (the analytic formula is the acceptance target).
    pub primary_rx_distance: Option<f64>,
    pub n_bins: usize,
}

impl SlotRunConfig {
    pub fn new(
        n_topologies: usize,
        slots_per_topology: usize,
        half_width: f64,
        params: &NetworkParams,
    ) -> Result<Self> {
        Ok(SlotRunConfig {
            n_topologies,
            slots_per_topology,
            region: Region::with_default_guard(half_width, params.lambda1)?,
            primary_rx_distance: None,
            n_bins: 40,
        })
    }
}

/// Whether fading is drawn per link or pinned at one (geometry-only runs).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FadingMode {
    Random,
    Unit,
}

// Randomness stream tags within a topology.
const T_DEPLOY: u64 = 1;
const T_PRX: u64 = 2;
const T_SENSE: u64 = 3;
const T_RXP: u64 = 4;
const T_DES: u64 = 5;
const T_SEC: u64 = 6;
const T_ACC: u64 = 7;
const T_PRX_P: u64 = 8;
const T_PRX_SERVE: u64 = 9;
const T_PRX_SEC: u64 = 10;
const PILOT_TAG: u64 = 0xBEEF;
const TOPO_TAG: u64 = 0x70B0;

#[inline]
fn fade(topo: SeedStream, tag: u64, slot: u64, a: u64, b: u64, mode: FadingMode) -> f64 {
    match mode {
        FadingMode::Unit => 1.0,
        FadingMode::Random => topo.child(tag).child(slot).child(a).child(b).unit_exponential(),
    }
}

#[inline]
fn gain_sq(d2: f64, alpha: f64) -> f64 {
    if alpha == 4.0 {
        let inv = 1.0 / d2;
        inv * inv
    } else {
        d2.powf(-0.5 * alpha)
    }
}

/// Interaction cutoff for segment-tested links: beyond this range even an
/// unblocked interferer contributes less than 1e-9 of the pair-link gain in
/// expectation over the blockage law, so the exact test is skipped.
fn segment_test_cutoff(params: &NetworkParams) -> f64 {
    match (&params.blockage, params.regime) {
        (Some(b), Regime::Blockage | Regime::Mmw) if b.lambda_b > 0.0 => {
            let c = 2.0 * b.blockage_factor() / PI;
            let mut r = (4.0 * b.avg_los_distance()).min(1e4).max(params.d * 4.0);
            while (-c * r).exp() * (r / params.d).powf(-params.alpha) > 1e-9 && r < 1e5 {
                r *= 1.25;
            }
            r
        }
        _ => f64::INFINITY,
    }
}

struct Topology {
    primaries: Vec<(Point, f64)>,
    prx: Vec<Point>,
    pairs: Vec<SecondaryPair>,
    blockages: BlockageField,
    inner_pairs: Vec<u32>,
    inner_primaries: Vec<u32>,
    /// Sparse geometric gain rows (gated regimes); `None` below 6 GHz where
    /// every link is ungated and gains are recomputed on the fly.
    sense_rows: Option<Vec<Vec<(u32, f64)>>>,
    rx_rows: Option<Vec<Vec<(u32, f64)>>>,
    pair_gain: Vec<f64>,
    prx_rows: Option<Vec<Vec<(u32, f64)>>>,
    prx_serving: Vec<f64>,
    hidden_links: u64,
    exposed_links: u64,
    visible_tx_links: u64,
    visible_rx_links: u64,
    seg_cutoff: f64,
    gated: bool,
}

fn build_topology(params: &NetworkParams, run: &SlotRunConfig, topo_seed: SeedStream) -> Result<Topology> {
    let dep = sample_deployment(
        params.lambda1,
        params.lambda2,
        params.d,
        params.blockage.as_ref(),
        &run.region,
        topo_seed.child(T_DEPLOY),
    )?;
    let d_p = run.primary_rx_distance.unwrap_or(params.d);

    // Reference RX per primary; the primary's beam aims at its own receiver,
    // so the deployment azimuth is replaced by the RX direction.
    let mut primaries = dep.primary_txs;
    let mut prx = Vec::with_capacity(primaries.len());
    for (i, p) in primaries.iter_mut().enumerate() {
        let phi = topo_seed.child(T_PRX).child(i as u64).uniform() * 2.0 * PI;
        p.1 = phi;
        prx.push(Point::new(p.0.x + d_p * phi.cos(), p.0.y + d_p * phi.sin()));
    }
    let pairs = dep.secondary_pairs;
    let blockages = dep.blockages;
    let inner_pairs: Vec<u32> = pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| run.region.contains_inner(p.rx))
        .map(|(k, _)| k as u32)
        .collect();
    let inner_primaries: Vec<u32> = primaries
        .iter()
        .enumerate()
        .filter(|(_, p)| run.region.contains_inner(p.0))
        .map(|(i, _)| i as u32)
        .collect();

    let gated = params.regime != Regime::Below6;
    let seg_cutoff = segment_test_cutoff(params);
    let cutoff_sq = seg_cutoff * seg_cutoff;

    let mut pair_gain = Vec::with_capacity(pairs.len());
    for pr in &pairs {
        let blocked = gated && blockages.blocked(pr.tx, pr.rx);
        pair_gain.push(if blocked {
            0.0
        } else {
            gain_sq(pr.tx.dist_sq(pr.rx), params.alpha)
        });
    }

    let (sense_rows, rx_rows) = if gated {
        let mut srows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(pairs.len());
        let mut rrows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(pairs.len());
        for pr in &pairs {
            let mut srow = Vec::new();
            let mut rrow = Vec::new();
            for (i, &(p, az)) in primaries.iter().enumerate() {
                let d2_tx = p.dist_sq(pr.tx);
                if d2_tx <= cutoff_sq
                    && in_beam_sector(p, az, pr.tx, params)
                    && !blockages.blocked(p, pr.tx)
                {
                    srow.push((i as u32, gain_sq(d2_tx, params.alpha)));
                }
                let d2_rx = p.dist_sq(pr.rx);
                if d2_rx <= cutoff_sq
                    && in_beam_sector(p, az, pr.rx, params)
                    && !blockages.blocked(p, pr.rx)
                {
                    rrow.push((i as u32, gain_sq(d2_rx, params.alpha)));
                }
            }
            srows.push(srow);
            rrows.push(rrow);
        }
        (Some(srows), Some(rrows))
    } else {
        (None, None)
    };

    let (mut hidden, mut exposed, mut vis_tx, mut vis_rx) = (0u64, 0u64, 0u64, 0u64);
    if let (Some(srows), Some(rrows)) = (&sense_rows, &rx_rows) {
        for &k in &inner_pairs {
            let s = &srows[k as usize];
            let r = &rrows[k as usize];
            vis_tx += s.len() as u64;
            vis_rx += r.len() as u64;
            let sset: std::collections::BTreeSet<u32> = s.iter().map(|e| e.0).collect();
            let rset: std::collections::BTreeSet<u32> = r.iter().map(|e| e.0).collect();
            exposed += sset.difference(&rset).count() as u64;
            hidden += rset.difference(&sset).count() as u64;
        }
    }

    let mut prx_serving = Vec::with_capacity(primaries.len());
    for (i, &(p, _)) in primaries.iter().enumerate() {
        let blocked = gated && blockages.blocked(p, prx[i]);
        prx_serving.push(if blocked {
            0.0
        } else {
            gain_sq(p.dist_sq(prx[i]), params.alpha)
        });
    }
    let prx_rows = if gated {
        let mut rows = Vec::with_capacity(prx.len());
        for (j, &rxp) in prx.iter().enumerate() {
            let mut row = Vec::new();
            for (i, &(p, az)) in primaries.iter().enumerate() {
                if i == j {
                    continue;
                }
                let d2 = p.dist_sq(rxp);
                if d2 <= cutoff_sq
                    && in_beam_sector(p, az, rxp, params)
                    && !blockages.blocked(p, rxp)
                {
                    row.push((i as u32, gain_sq(d2, params.alpha)));
                }
            }
            rows.push(row);
        }
        Some(rows)
    } else {
        None
    };

    Ok(Topology {
        primaries,
        prx,
        pairs,
        blockages,
        inner_pairs,
        inner_primaries,
        sense_rows,
        rx_rows,
        pair_gain,
        prx_rows,
        prx_serving,
        hidden_links: hidden,
        exposed_links: exposed,
        visible_tx_links: vis_tx,
        visible_rx_links: vis_rx,
        seg_cutoff,
        gated,
    })
}

impl Topology {
    /// Sensed primary interference at every secondary TX for one slot.
    fn sense_all(&self, params: &NetworkParams, topo_seed: SeedStream, slot: u64, mode: FadingMode) -> Vec<f64> {
        let mut out = vec![0.0; self.pairs.len()];
        if let Some(rows) = &self.sense_rows {
            for (k, row) in rows.iter().enumerate() {
                let mut acc = 0.0;
                for &(i, g) in row {
                    acc += params.p1 * fade(topo_seed, T_SENSE, slot, i as u64, k as u64, mode) * g;
                }
                out[k] = acc;
            }
        } else {
            for (k, pr) in self.pairs.iter().enumerate() {
                let mut acc = 0.0;
                for (i, &(p, _)) in self.primaries.iter().enumerate() {
                    let g = gain_sq(p.dist_sq(pr.tx), params.alpha);
                    acc += params.p1 * fade(topo_seed, T_SENSE, slot, i as u64, k as u64, mode) * g;
                }
                out[k] = acc;
            }
        }
        out
    }

    /// Primary interference at the RX of pair `k` (data-slot fading).
    fn primary_interference_at_rx(
        &self,
        k: usize,
        params: &NetworkParams,
        topo_seed: SeedStream,
        slot: u64,
        mode: FadingMode,
    ) -> f64 {
        let mut acc = 0.0;
        if let Some(rows) = &self.rx_rows {
            for &(i, g) in &rows[k] {
                acc += params.p1 * fade(topo_seed, T_RXP, slot, i as u64, k as u64, mode) * g;
            }
        } else {
            let rx = self.pairs[k].rx;
            for (i, &(p, _)) in self.primaries.iter().enumerate() {
                let g = gain_sq(p.dist_sq(rx), params.alpha);
                acc += params.p1 * fade(topo_seed, T_RXP, slot, i as u64, k as u64, mode) * g;
            }
        }
        acc
    }

    /// Secondary interferer link gate: cheap distance cutoff, then the exact
    /// segment test when the regime has blockages.
    #[inline]
    fn secondary_gain(&self, tx: Point, target: Point, alpha: f64) -> f64 {
        let d2 = tx.dist_sq(target);
        if self.gated {
            if d2 > self.seg_cutoff * self.seg_cutoff {
                return 0.0;
            }
            if self.blockages.blocked(tx, target) {
                return 0.0;
            }
        }
        gain_sq(d2, alpha)
    }
}

/// How a MAC converts its observables into an access probability.
#[derive(Clone)]
pub(crate) struct MacRuntime {
    pub kind: MacKind,
    beta: f64,
    predictor: Option<Arc<OpPredictor>>,
    scale: f64,
    step_x0: f64,
    i_cutoff: f64,
    naive_slope: f64,
}

impl MacRuntime {
    pub(crate) fn op_estimate(&self, sensed: f64) -> f64 {
        match &self.predictor {
            Some(p) => p.predict(sensed),
            None => (-self.naive_slope * sensed).exp(),
        }
    }

    /// Access probability given the sensed level and (for the genie) the
    /// true primary interference at the RX during the data slot.
    pub(crate) fn access_prob(&self, sensed: f64, rx_primary_i: f64) -> f64 {
        match self.kind {
            MacKind::Sap { mapping: MappingKind::Linear } | MacKind::SapBelow6Op | MacKind::NoPrediction => {
                (self.scale * self.op_estimate(sensed)).min(1.0)
            }
            MacKind::Sap { mapping: MappingKind::Step } => {
                if self.op_estimate(sensed) >= self.step_x0 {
                    1.0
                } else {
                    0.0
                }
            }
            MacKind::Sap { mapping: MappingKind::Quadratic } => {
                let op = self.op_estimate(sensed);
                (self.scale * op * op).min(1.0)
            }
            MacKind::TxThreshold { .. } => {
                if sensed <= self.i_cutoff {
                    1.0
                } else {
                    0.0
                }
            }
            MacKind::GenieRx { .. } => {
                if rx_primary_i <= self.i_cutoff {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Builds MAC runtimes. The mapping families and the naive predictor are
/// calibrated to the SaP linear map's realized mean access probability over
/// the pilot sensing pass, so the comparison isolates *where* access
/// probability is spent, not how much.
pub(crate) fn build_mac_runtimes(
    params: &NetworkParams,
    policy: &SapPolicy,
    macs: &[MacKind],
    axis: Option<f64>,
    pilot_i: &[f64],
    cfg: &NumericsConfig,
) -> Result<Vec<MacRuntime>> {
    let needs_regime = macs
        .iter()
        .any(|m| matches!(m, MacKind::Sap { .. }));
    let regime_pred = if needs_regime {
        Some(Arc::new(OpPredictor::build(params, policy.beta, axis, cfg)?))
    } else {
        None
    };
    let below6_pred = if macs.iter().any(|m| matches!(m, MacKind::SapBelow6Op)) {
        Some(Arc::new(OpPredictor::build_with_formula(
            params,
            policy.beta,
            axis,
            PredictorFormula::ForcedBelow6,
            cfg,
        )?))
    } else {
        None
    };
    let naive_slope = policy.beta * params.d.powf(params.alpha) / params.p2;
    let n_pilot = pilot_i.len().max(1) as f64;

    let target_mean = match &regime_pred {
        Some(p) => {
            pilot_i
                .iter()
                .map(|&i| (policy.c_star * p.predict(i)).min(1.0))
                .sum::<f64>()
                / n_pilot
        }
        // Without a SaP participant the families are uncalibrated anyway.
        None => policy.c_star.min(1.0),
    };

    let mut out = Vec::with_capacity(macs.len());
    for &kind in macs {
        let rt = match kind {
            MacKind::Sap { mapping } => {
                let pred = regime_pred.clone().expect("regime predictor");
                match mapping {
                    MappingKind::Linear => MacRuntime {
                        kind,
                        beta: policy.beta,
                        predictor: Some(pred),
                        scale: policy.c_star,
                        step_x0: 0.0,
                        i_cutoff: 0.0,
                        naive_slope,
                    },
                    MappingKind::Step => {
                        let mut ops: Vec<f64> = pilot_i.iter().map(|&i| pred.predict(i)).collect();
                        ops.sort_by(|a, b| b.partial_cmp(a).unwrap());
                        let m = ((target_mean * ops.len() as f64) as usize)
                            .min(ops.len().saturating_sub(1));
                        MacRuntime {
                            kind,
                            beta: policy.beta,
                            predictor: Some(pred),
                            scale: 1.0,
                            step_x0: ops.get(m).copied().unwrap_or(1.0),
                            i_cutoff: 0.0,
                            naive_slope,
                        }
                    }
                    MappingKind::Quadratic => {
                        let mean_sq: f64 = pilot_i
                            .iter()
                            .map(|&i| {
                                let o = pred.predict(i);
                                o * o
                            })
                            .sum::<f64>()
                            / n_pilot;
                        MacRuntime {
                            kind,
                            beta: policy.beta,
                            predictor: Some(pred),
                            scale: if mean_sq > 0.0 { target_mean / mean_sq } else { 0.0 },
                            step_x0: 0.0,
                            i_cutoff: 0.0,
                            naive_slope,
                        }
                    }
                }
            }
            MacKind::SapBelow6Op => {
                let pred = below6_pred.clone().expect("below6 predictor");
                let mean: f64 =
                    pilot_i.iter().map(|&i| pred.predict(i)).sum::<f64>() / n_pilot;
                MacRuntime {
                    kind,
                    beta: policy.beta,
                    predictor: Some(pred),
                    scale: if mean > 0.0 { target_mean / mean } else { 0.0 },
                    step_x0: 0.0,
                    i_cutoff: 0.0,
                    naive_slope,
                }
            }
            MacKind::NoPrediction => {
                let mean: f64 = pilot_i
                    .iter()
                    .map(|&i| (-naive_slope * i).exp())
                    .sum::<f64>()
                    / n_pilot;
                MacRuntime {
                    kind,
                    beta: policy.beta,
                    predictor: None,
                    scale: if mean > 0.0 { target_mean / mean } else { 0.0 },
                    step_x0: 0.0,
                    i_cutoff: 0.0,
                    naive_slope,
                }
            }
            MacKind::TxThreshold { theta } | MacKind::GenieRx { theta } => MacRuntime {
                kind,
                beta: policy.beta,
                predictor: None,
                scale: 0.0,
                step_x0: 0.0,
                i_cutoff: params.p2 * params.d.powf(-params.alpha) / theta,
                naive_slope,
            },
        };
        out.push(rt);
    }
    Ok(out)
}

struct MacTopoTally {
    bin_full: Vec<u64>,
    zero_full: u64,
    accessed: u64,
    covered: u64,
    outage: u64,
    outage_samples: u64,
    ase: f64,
}

struct TopoResult {
    bin_count: Vec<u64>,
    bin_sum: Vec<f64>,
    bin_silent: Vec<u64>,
    zero_count: u64,
    zero_silent: u64,
    sensed_samples: u64,
    macs: Vec<MacTopoTally>,
    hidden_links: u64,
    exposed_links: u64,
    visible_tx_links: u64,
    visible_rx_links: u64,
}

fn bin_index(edges: &[f64], i: f64) -> Option<usize> {
    if i <= 0.0 || edges.len() < 2 {
        return None;
    }
    let n = edges.len() - 1;
    for b in 0..n {
        if i <= edges[b + 1] {
            return Some(b);
        }
    }
    Some(n - 1)
}

fn run_topology(
    params: &NetworkParams,
    run: &SlotRunConfig,
    macs: &[MacRuntime],
    edges: &[f64],
    topo_seed: SeedStream,
    mode: FadingMode,
) -> Result<TopoResult> {
    let topo = build_topology(params, run, topo_seed)?;
    let n_bins = edges.len().saturating_sub(1);
    let mut res = TopoResult {
        bin_count: vec![0; n_bins],
        bin_sum: vec![0.0; n_bins],
        bin_silent: vec![0; n_bins],
        zero_count: 0,
        zero_silent: 0,
        sensed_samples: 0,
        macs: macs
            .iter()
            .map(|_| MacTopoTally {
                bin_full: vec![0; n_bins],
                zero_full: 0,
                accessed: 0,
                covered: 0,
                outage: 0,
                outage_samples: 0,
                ase: 0.0,
            })
            .collect(),
        hidden_links: topo.hidden_links,
        exposed_links: topo.exposed_links,
        visible_tx_links: topo.visible_tx_links,
        visible_rx_links: topo.visible_rx_links,
    };
    let inner_area = run.region.inner_area();
    let mut active: Vec<Vec<u32>> = vec![Vec::new(); macs.len()];
    let mut accessed_flags: Vec<Vec<bool>> = vec![vec![false; topo.pairs.len()]; macs.len()];

    for slot in 0..run.slots_per_topology as u64 {
        let sensed = topo.sense_all(params, topo_seed, slot, mode);
        let rx_primary: Vec<f64> = (0..topo.pairs.len())
            .map(|k| topo.primary_interference_at_rx(k, params, topo_seed, slot, mode))
            .collect();

        for (m, mac) in macs.iter().enumerate() {
            active[m].clear();
            for k in 0..topo.pairs.len() {
                let u = topo_seed.child(T_ACC).child(slot).child(k as u64).uniform();
                let on = u < mac.access_prob(sensed[k], rx_primary[k]);
                accessed_flags[m][k] = on;
                if on {
                    active[m].push(k as u32);
                }
            }
        }

        for &k in &topo.inner_pairs {
            let k = k as usize;
            let des =
                params.p2 * fade(topo_seed, T_DES, slot, k as u64, 0, mode) * topo.pair_gain[k];
            res.sensed_samples += 1;
            let idx = bin_index(edges, sensed[k]);
            let silent_cov = |beta: f64| {
                if rx_primary[k] == 0.0 {
                    des > 0.0
                } else {
                    des / rx_primary[k] >= beta
                }
            };
            let beta0 = macs.first().map(|m| m.beta).unwrap_or(1.0);
            match idx {
                Some(b) => {
                    res.bin_count[b] += 1;
                    res.bin_sum[b] += sensed[k];
                    if silent_cov(beta0) {
                        res.bin_silent[b] += 1;
                    }
                }
                None => {
                    res.zero_count += 1;
                    if silent_cov(beta0) {
                        res.zero_silent += 1;
                    }
                }
            }

            let rx = topo.pairs[k].rx;
            for (m, mac) in macs.iter().enumerate() {
                let mut sec = 0.0;
                for &j in &active[m] {
                    let j = j as usize;
                    if j == k {
                        continue;
                    }
                    let g = topo.secondary_gain(topo.pairs[j].tx, rx, params.alpha);
                    if g > 0.0 {
                        sec += params.p2
                            * fade(topo_seed, T_SEC, slot, j as u64, k as u64, mode)
                            * g;
                    }
                }
                let denom = rx_primary[k] + sec;
                let full_cov = if denom == 0.0 {
                    des > 0.0
                } else {
                    des / denom >= mac.beta
                };
                if let Some(b) = idx {
                    if full_cov {
                        res.macs[m].bin_full[b] += 1;
                    }
                } else if full_cov {
                    res.macs[m].zero_full += 1;
                }
                if accessed_flags[m][k] {
                    res.macs[m].accessed += 1;
                    if full_cov {
                        res.macs[m].covered += 1;
                        res.macs[m].ase += 1.0;
                    }
                }
            }
        }

        for &i in &topo.inner_primaries {
            let i = i as usize;
            let des = params.p1
                * fade(topo_seed, T_PRX_SERVE, slot, i as u64, 0, mode)
                * topo.prx_serving[i];
            let mut others = 0.0;
            if let Some(rows) = &topo.prx_rows {
                for &(j, g) in &rows[i] {
                    others +=
                        params.p1 * fade(topo_seed, T_PRX_P, slot, j as u64, i as u64, mode) * g;
                }
            } else {
                for (j, &(p, _)) in topo.primaries.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let g = gain_sq(p.dist_sq(topo.prx[i]), params.alpha);
                    others +=
                        params.p1 * fade(topo_seed, T_PRX_P, slot, j as u64, i as u64, mode) * g;
                }
            }
            for (m, mac) in macs.iter().enumerate() {
                let mut sec = 0.0;
                for &jj in &active[m] {
                    let j = jj as usize;
                    let g = topo.secondary_gain(topo.pairs[j].tx, topo.prx[i], params.alpha);
                    if g > 0.0 {
                        sec += params.p2
                            * fade(topo_seed, T_PRX_SEC, slot, j as u64, i as u64, mode)
                            * g;
                    }
                }
                let denom = others + sec;
                let outage = if denom == 0.0 {
                    des <= 0.0
                } else {
                    des / denom < params.gamma
                };
                res.macs[m].outage_samples += 1;
                if outage {
                    res.macs[m].outage += 1;
                }
                let _ = mac;
            }
        }
    }

    let slots = run.slots_per_topology as f64;
    for t in &mut res.macs {
        t.ase = t.ase / slots / inner_area;
    }
    Ok(res)
}

/// Pilot sensing pass: sensed levels at the inner pairs of a dedicated
/// topology, used for bin edges and mapping calibration. Deterministic for a
/// fixed seed and shared by every MAC in the run.
fn pilot_sensed(params: &NetworkParams, run: &SlotRunConfig, seed: SeedStream) -> Result<Vec<f64>> {
    let pilot_seed = seed.child(PILOT_TAG);
    let topo = build_topology(params, run, pilot_seed)?;
    let sensed = topo.sense_all(params, pilot_seed, 0, FadingMode::Random);
    Ok(topo.inner_pairs.iter().map(|&k| sensed[k as usize]).collect())
}

fn edges_from_pilot(pilot: &[f64], n_bins: usize) -> Vec<f64> {
    let samples: Vec<(f64, bool)> = pilot.iter().map(|&i| (i, false)).collect();
    let (bins, _, _) = super::oracle::bin_samples(&samples, n_bins);
    if bins.is_empty() {
        return Vec::new();
    }
    let mut edges = vec![bins[0].lo];
    edges.extend(bins.iter().map(|b| b.hi));
    edges
}

/// Runs several MACs on common random numbers and returns one report each.
pub fn run_slots_multi(
    params: &NetworkParams,
    policy: &SapPolicy,
    macs: &[MacKind],
    axis: Option<f64>,
    run: &SlotRunConfig,
    cfg: &NumericsConfig,
    seed: SeedStream,
) -> Result<Vec<SimReport>> {
    params.validate()?;
    if params.regime != policy.regime {
        return Err(crate::error::SapError::Parameter(format!(
            "policy regime {:?} does not match params regime {:?}",
            policy.regime, params.regime
        )));
    }
    let pilot = pilot_sensed(params, run, seed)?;
    let edges = edges_from_pilot(&pilot, run.n_bins);
    let runtimes = build_mac_runtimes(params, policy, macs, axis, &pilot, cfg)?;

    let results: Result<Vec<TopoResult>> = (0..run.n_topologies as u64)
        .into_par_iter()
        .map(|t| run_topology(params, run, &runtimes, &edges, seed.child(TOPO_TAG).child(t), FadingMode::Random))
        .collect();
    let results = results?;

    let n_bins = edges.len().saturating_sub(1);
    let mut reports = Vec::with_capacity(macs.len());
    for (m, mac) in macs.iter().enumerate() {
        let mut bins: Vec<BinStat> = (0..n_bins)
            .map(|b| BinStat {
                lo: edges[b],
                hi: edges[b + 1],
                overflow: false,
                ..BinStat::default()
            })
            .collect();
        let mut zero_count = 0;
        let mut zero_successes = 0;
        let mut sensed_samples = 0;
        let mut accessed = 0u64;
        let mut outage = 0u64;
        let mut outage_samples = 0u64;
        let mut ase_samples = Vec::with_capacity(results.len());
        let (mut hid, mut exp, mut vtx, mut vrx) = (0u64, 0u64, 0u64, 0u64);
        for r in &results {
            for b in 0..n_bins {
                bins[b].count += r.bin_count[b];
                bins[b].sum_i += r.bin_sum[b];
                bins[b].successes += r.bin_silent[b];
                bins[b].full_successes += r.macs[m].bin_full[b];
            }
            zero_count += r.zero_count;
            zero_successes += r.zero_silent;
            sensed_samples += r.sensed_samples;
            accessed += r.macs[m].accessed;
            outage += r.macs[m].outage;
            outage_samples += r.macs[m].outage_samples;
            ase_samples.push(r.macs[m].ase * (1.0 + policy.beta).ln());
            hid += r.hidden_links;
            exp += r.exposed_links;
            vtx += r.visible_tx_links;
            vrx += r.visible_rx_links;
        }
        let (ase_mean, ase_ci) = mean_ci(&ase_samples);
        let primary_outage = if outage_samples > 0 && params.lambda1 > 0.0 {
            let p = outage as f64 / outage_samples as f64;
            let (lo, hi) = wilson_interval(outage, outage_samples);
            Some(Estimate {
                mean: p,
                ci_half: 0.5 * (hi - lo),
            })
        } else {
            None
        };
        reports.push(SimReport {
            mac_label: mac.label(),
            beta: policy.beta,
            n_topologies: run.n_topologies,
            n_slots: run.n_topologies * run.slots_per_topology,
            conditional_op: bins,
            zero_i_count: zero_count,
            zero_i_successes: zero_successes,
            sensed_samples,
            mean_access: if sensed_samples > 0 {
                accessed as f64 / sensed_samples as f64
            } else {
                0.0
            },
            ase: Estimate {
                mean: ase_mean,
                ci_half: ase_ci,
            },
            ase_samples,
            primary_outage,
            primary_rx_samples: outage_samples,
            hidden_rate: if vrx > 0 { hid as f64 / vrx as f64 } else { 0.0 },
            exposed_rate: if vtx > 0 { exp as f64 / vtx as f64 } else { 0.0 },
        });
    }
    Ok(reports)
}

/// Runs one MAC.
pub fn run_slots(
    params: &NetworkParams,
    policy: &SapPolicy,
    mac: MacKind,
    axis: Option<f64>,
    run: &SlotRunConfig,
    cfg: &NumericsConfig,
    seed: SeedStream,
) -> Result<SimReport> {
    Ok(run_slots_multi(params, policy, &[mac], axis, run, cfg, seed)?.remove(0))
}

/// One point of a per-MAC ASE curve.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct MacCurve {
    pub label: String,
    pub points: Vec<(f64, Estimate)>,
}

/// Compares the SaP policy against the baselines over a grid of decoding
/// targets, with common random numbers and per-beta grid-optimized
/// deterministic thresholds.
pub fn compare_macs(
    params: &NetworkParams,
    beta_grid: &[f64],
    n_theta: usize,
    axis: Option<f64>,
    run: &SlotRunConfig,
    cfg: &NumericsConfig,
    seed: SeedStream,
) -> Result<Vec<MacCurve>> {
    let pilot = pilot_sensed(params, run, seed)?;
    let mut sorted = pilot.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut curves: Vec<MacCurve> = ["sap", "no-prediction", "tx-threshold", "genie-rx"]
        .iter()
        .map(|l| MacCurve {
            label: l.to_string(),
            points: Vec::new(),
        })
        .collect();
    for (bi, &beta) in beta_grid.iter().enumerate() {
        let policy = SapPolicy::for_beta(params, beta, axis, cfg)?;
        // Threshold grids from sensed-interference quantiles.
        let mut thetas = Vec::with_capacity(n_theta);
        for j in 0..n_theta {
            let q = 0.05 + 0.9 * j as f64 / (n_theta.max(2) - 1) as f64;
            let idx = ((sorted.len() - 1) as f64 * q) as usize;
            let i_cut = sorted[idx].max(f64::MIN_POSITIVE);
            thetas.push(params.p2 * params.d.powf(-params.alpha) / i_cut);
        }
        let mut macs = vec![
            MacKind::Sap { mapping: MappingKind::Linear },
            MacKind::NoPrediction,
        ];
        for &th in &thetas {
            macs.push(MacKind::TxThreshold { theta: th });
        }
        for &th in &thetas {
            macs.push(MacKind::GenieRx { theta: th });
        }
        let reports = run_slots_multi(params, &policy, &macs, axis, run, cfg, seed.child(bi as u64))?;
        curves[0].points.push((beta, reports[0].ase));
        curves[1].points.push((beta, reports[1].ase));
        let best = |range: std::ops::Range<usize>| -> Estimate {
            reports[range]
                .iter()
                .map(|r| r.ase)
                .max_by(|a, b| a.mean.partial_cmp(&b.mean).unwrap())
                .unwrap_or_default()
        };
        curves[2].points.push((beta, best(2..2 + n_theta)));
        curves[3].points.push((beta, best(2 + n_theta..2 + 2 * n_theta)));
    }
    Ok(curves)
}

/// Detailed single-slot evaluation of a small deployment (tests and
/// diagnostics).
#[derive(Clone, Debug)]
pub struct SlotOutcome {
    pub sensed: Vec<f64>,
    pub op_estimate: Vec<f64>,
    pub accessed: Vec<bool>,
    pub rx_sir: Vec<f64>,
    pub covered: Vec<bool>,
    pub primary_sir: Vec<f64>,
    pub primary_outage: Vec<bool>,
    pub hidden_events: u64,
    pub exposed_events: u64,
}

/// Evaluates one slot of one topology in full detail.
pub fn evaluate_slot(
    params: &NetworkParams,
    policy: &SapPolicy,
    mac: MacKind,
    axis: Option<f64>,
    run: &SlotRunConfig,
    cfg: &NumericsConfig,
    seed: SeedStream,
    slot: u64,
    mode: FadingMode,
) -> Result<SlotOutcome> {
    let pilot = pilot_sensed(params, run, seed)?;
    let runtimes = build_mac_runtimes(params, policy, &[mac], axis, &pilot, cfg)?;
    let mac_rt = &runtimes[0];
    let topo_seed = seed.child(TOPO_TAG).child(0);
    let topo = build_topology(params, run, topo_seed)?;
    let sensed = topo.sense_all(params, topo_seed, slot, mode);
    let rx_primary: Vec<f64> = (0..topo.pairs.len())
        .map(|k| topo.primary_interference_at_rx(k, params, topo_seed, slot, mode))
        .collect();
    let mut accessed = Vec::with_capacity(topo.pairs.len());
    let mut op_estimate = Vec::with_capacity(topo.pairs.len());
    for k in 0..topo.pairs.len() {
        let u = topo_seed.child(T_ACC).child(slot).child(k as u64).uniform();
        op_estimate.push(mac_rt.op_estimate(sensed[k]));
        accessed.push(u < mac_rt.access_prob(sensed[k], rx_primary[k]));
    }
    let active: Vec<u32> = accessed
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(k, _)| k as u32)
        .collect();
    let mut rx_sir = Vec::with_capacity(topo.pairs.len());
    let mut covered = Vec::with_capacity(topo.pairs.len());
    for k in 0..topo.pairs.len() {
        let des = params.p2 * fade(topo_seed, T_DES, slot, k as u64, 0, mode) * topo.pair_gain[k];
        let mut sec = 0.0;
        for &j in &active {
            let j = j as usize;
            if j == k {
                continue;
            }
            let g = topo.secondary_gain(topo.pairs[j].tx, topo.pairs[k].rx, params.alpha);
            if g > 0.0 {
                sec += params.p2 * fade(topo_seed, T_SEC, slot, j as u64, k as u64, mode) * g;
            }
        }
        let denom = rx_primary[k] + sec;
        let sir = if denom == 0.0 {
            if des > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            des / denom
        };
        rx_sir.push(sir);
        covered.push(accessed[k] && sir >= policy.beta);
    }
    let mut primary_sir = Vec::with_capacity(topo.primaries.len());
    let mut primary_outage = Vec::with_capacity(topo.primaries.len());
    for i in 0..topo.primaries.len() {
        let des = params.p1
            * fade(topo_seed, T_PRX_SERVE, slot, i as u64, 0, mode)
            * topo.prx_serving[i];
        let mut denom = 0.0;
        if let Some(rows) = &topo.prx_rows {
            for &(j, g) in &rows[i] {
                denom += params.p1 * fade(topo_seed, T_PRX_P, slot, j as u64, i as u64, mode) * g;
            }
        } else {
            for (j, &(p, _)) in topo.primaries.iter().enumerate() {
                if j != i {
                    denom += params.p1
                        * fade(topo_seed, T_PRX_P, slot, j as u64, i as u64, mode)
                        * gain_sq(p.dist_sq(topo.prx[i]), params.alpha);
                }
            }
        }
        for &jj in &active {
            let j = jj as usize;
            let g = topo.secondary_gain(topo.pairs[j].tx, topo.prx[i], params.alpha);
            if g > 0.0 {
                denom += params.p2 * fade(topo_seed, T_PRX_SEC, slot, j as u64, i as u64, mode) * g;
            }
        }
        let sir = if denom == 0.0 { f64::INFINITY } else { des / denom };
        primary_sir.push(sir);
        primary_outage.push(sir < params.gamma);
    }
    Ok(SlotOutcome {
        sensed,
        op_estimate,
        accessed,
        rx_sir,
        covered,
        primary_sir,
        primary_outage,
        hidden_events: topo.hidden_links,
        exposed_events: topo.exposed_links,
    })
}
