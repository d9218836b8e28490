//! Slot-level Monte Carlo engine: deploys topologies, runs the
//! sense/predict/access loop, and tallies conditional OP, coverage, ASE,
//! primary outage, and hidden/exposed-node incidence. This is the
//! ground-truth oracle for every analytical claim in the crate.
//!
//! Topologies are independent work units distributed across rayon workers;
//! every stochastic quantity derives from (master seed, topology index, slot
//! index, link indices), so results are bit-identical for a fixed seed
//! regardless of worker count, and common-random-number comparisons across
//! MACs share sensed-interference streams exactly.

mod axis_fit;
mod census;
mod oracle;
mod predictor;
mod slots;

pub use axis_fit::{fit_axis_length, scan_axis_length, AxisFitPoint, AxisLengthFit};
pub use census::{node_problem_census, CensusConfig, CensusReport, NearestBin};
pub use oracle::{conditional_op_oracle, OracleConfig};
pub use predictor::OpPredictor;
pub use slots::{
    compare_macs, evaluate_slot, run_slots, run_slots_multi, FadingMode, MacCurve, SlotOutcome,
    SlotRunConfig,
};

use crate::numerics::wilson_interval;
use serde::{Deserialize, Serialize};

/// Which MAC drives the access decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MacKind {
    /// Sense-and-predict: access with probability `F(OP)` where the OP comes
    /// from the regime's analytical formula at the inferred ball radius.
    Sap { mapping: MappingKind },
    /// SaP driven by the no-blockage OP formula even in blockage regimes.
    SapBelow6Op,
    /// Access scaled by the naive coverage that treats the sensed level as if
    /// it were the interference at the RX.
    NoPrediction,
    /// Deterministic: access iff the sensed mean-fading SIR proxy
    /// `P2 d^-alpha / I` reaches `theta`.
    TxThreshold { theta: f64 },
    /// Deterministic with genie knowledge of the primary interference at the
    /// RX during the data slot.
    GenieRx { theta: f64 },
}

/// Mapping family from OP to access probability. All families are calibrated
/// to the same mean access probability; only the linear one is the optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MappingKind {
    Linear,
    Step,
    Quadratic,
}

impl MacKind {
    pub fn label(&self) -> String {
        match self {
            MacKind::Sap { mapping: MappingKind::Linear } => "sap".into(),
            MacKind::Sap { mapping: MappingKind::Step } => "sap-step".into(),
            MacKind::Sap { mapping: MappingKind::Quadratic } => "sap-quadratic".into(),
            MacKind::SapBelow6Op => "sap-no-blockage-op".into(),
            MacKind::NoPrediction => "no-prediction".into(),
            MacKind::TxThreshold { theta } => format!("tx-threshold({theta:.3e})"),
            MacKind::GenieRx { theta } => format!("genie-rx({theta:.3e})"),
        }
    }
}

/// A mean with its ~95% half-width.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci_half: f64,
}

/// Conditional tally for one sensed-interference bin.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct BinStat {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
    /// Successes with all secondaries silent (the OP definition).
    pub successes: u64,
    /// Successes including the concurrent secondary interference.
    pub full_successes: u64,
    pub sum_i: f64,
    /// Bins above the main 1-99 percentile range.
    pub overflow: bool,
}

impl BinStat {
    pub fn mean_i(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum_i / self.count as f64
        }
    }

    pub fn p_hat(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.successes as f64 / self.count as f64
        }
    }

    pub fn wilson(&self) -> (f64, f64) {
        wilson_interval(self.successes, self.count)
    }

    pub fn full_p_hat(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.full_successes as f64 / self.count as f64
        }
    }

    /// Qualifying bins carry enough samples for acceptance comparisons.
    pub fn qualifies(&self, min_count: u64) -> bool {
        self.count >= min_count
    }
}

/// Conditional-OP curve from the typical-pair oracle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionalOpCurve {
    pub beta: f64,
    pub bins: Vec<BinStat>,
    /// Samples that sensed exactly zero interference (possible with
    /// blockage/beam gating); excluded from the binned curve.
    pub zero_count: u64,
    pub zero_successes: u64,
    pub total_samples: u64,
}

impl ConditionalOpCurve {
    /// Unconditional coverage (secondaries silent) over all samples,
    /// including the zero-interference mass.
    pub fn unconditional_coverage(&self) -> f64 {
        let succ: u64 =
            self.bins.iter().map(|b| b.successes).sum::<u64>() + self.zero_successes;
        succ as f64 / self.total_samples as f64
    }
}

/// Aggregated slot-simulation report for one MAC.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    pub mac_label: String,
    pub beta: f64,
    pub n_topologies: usize,
    pub n_slots: usize,
    /// Conditional coverage binned by sensed interference.
    pub conditional_op: Vec<BinStat>,
    pub zero_i_count: u64,
    pub zero_i_successes: u64,
    /// Total sensed samples (pairs x slots, inner window).
    pub sensed_samples: u64,
    /// Fraction of pair-slots that accessed the medium.
    pub mean_access: f64,
    /// nats/s/Hz/m², CI over topology means.
    pub ase: Estimate,
    /// Per-topology ASE samples (for paired comparisons).
    pub ase_samples: Vec<f64>,
    /// None when the deployment has no primaries (outage undefined).
    pub primary_outage: Option<Estimate>,
    pub primary_rx_samples: u64,
    /// Geometric hidden/exposed incidence per (pair, primary) link,
    /// conditioned on the partner link being visible. Zero outside the
    /// blockage regimes.
    pub hidden_rate: f64,
    pub exposed_rate: f64,
}

impl SimReport {
    pub fn mean_conditional_coverage(&self) -> f64 {
        let succ: u64 = self.conditional_op.iter().map(|b| b.successes).sum::<u64>()
            + self.zero_i_successes;
        if self.sensed_samples == 0 {
            return 0.0;
        }
        succ as f64 / self.sensed_samples as f64
    }
}
