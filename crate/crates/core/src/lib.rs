//! Remote implementation of restricted quantum operations between two
//! parties under local operations and classical communication (LOCC).
//!
//! The crate is organised bottom-up:
//!
//! * [`sim`] is a dense state-vector and density-matrix kernel.
//! * [`gates`] constructs the fixed operators the protocols use.
//! * [`restricted`] builds, validates and decomposes block-permutation
//!   operators `T(x, G) = sum_m |p_m(x)><m| (x) G_m`.
//! * [`locc`] holds the two-party bookkeeping: qubit ownership, the classical
//!   channel, shared Bell pairs and the resource ledger.
//! * [`teleport`] is single-qubit teleportation and bidirectional state
//!   teleportation (BQST) built from it.
//! * [`engine`] runs the HPV, Wang and hybrid protocols as staged
//!   state machines with exhaustive branch enumeration.
//! * [`verify`] holds the independent oracles: direct application,
//!   intermediate-state closed forms and the mixed-state check.
//!
//! Qubit 0 is always the most-significant bit of an amplitude index.

pub mod engine;
pub mod error;
pub mod gates;
pub mod io;
pub mod locc;
pub mod random;
pub mod restricted;
pub mod sim;
pub mod teleport;
pub mod verify;

pub use engine::{
    init_hybrid, run_hpv, run_hybrid, run_pinned, run_protocol, run_sampled, run_wang, Outcomes,
    Protocol, Registers, RunResult, Session, Stage, Transcript,
};
pub use error::{Error, Result};
pub use gates::{GateMatrix, Permutation};
pub use locc::{ClassicalChannel, Party, ResourceLedger};
pub use restricted::{classify, decompose, Decomposition, RestrictedOp, Variant};
pub use sim::{Branch, DensityMatrix, StateVector, C64};
pub use teleport::{bqst, teleport, TeleportRecord};
pub use verify::{appendix_trace, direct_apply, expand_xi, mixed_state_check, TraceCheckReport};

/// Tolerance for equality of states and operators.
pub const EQ_TOL: f64 = 1e-10;
/// Floor for the smallest eigenvalue of a valid density matrix.
pub const PSD_TOL: f64 = 1e-9;
/// Default acceptance tolerance on `1 - fidelity`.
pub const FIDELITY_TOL: f64 = 1e-9;
