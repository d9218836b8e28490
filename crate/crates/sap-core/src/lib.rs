//! Analysis and simulation library for a sense-and-predict (SaP) random-access
//! MAC in spectrum-sharing networks.
//!
//! A secondary transmitter senses the aggregate interference from the primary
//! network, predicts the coverage probability at its own receiver (the
//! *opportunistic probability*, OP), and accesses the medium randomly with a
//! probability proportional to that prediction. The crate provides:
//!
//! * [`geometry`] — Poisson point processes, Boolean rectangle blockages,
//!   LOS balls, joint-unblocked ellipses and beam-sector geometry.
//! * [`channel`] — path loss, Rayleigh fading, and exact SIR evaluation on a
//!   sampled deployment.
//! * [`op_analysis`] — the analytical OP formulas for the below-6 GHz,
//!   blockage, and millimeter-wave regimes, plus the empty-ball radius
//!   equations, evaluated by controlled quadrature and root finding.
//! * [`sap_mac`] — the optimal access policy: linear OP-to-access mapping,
//!   minimum decoding target under a primary-protection constraint, and
//!   area-spectral-efficiency (ASE) optimization.
//! * [`simulator`] — a slot-level Monte Carlo engine that acts as the
//!   independent oracle for every analytical result.
//! * [`acceptance`] — the self-checking validation suite used by the CLI and
//!   the integration tests.

pub mod acceptance;
pub mod channel;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod op_analysis;
pub mod sap_mac;
pub mod seed;
pub mod simulator;
pub mod units;

pub use error::{Result, SapError};
