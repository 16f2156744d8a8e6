//! System-level Monte Carlo simulator for uplink multi-user MIMO with
//! amplify-and-forward repeaters deployed as controllable channel scatterers.
//!
//! Three architectures share one drop pipeline:
//!
//! - **C-MIMO**: one 64-element uniform linear array at the cell center.
//! - **D-MIMO**: 64 single-antenna access points on a square mesh, jointly
//!   processed.
//! - **RA-MIMO**: the C-MIMO array assisted by repeaters at the D-MIMO
//!   positions, with activation masking, constrained gain control, and an
//!   amplified-noise-aware MMSE combiner.
//!
//! A drop places users uniformly in the area, draws 3GPP UMi large-scale and
//! Ricean/Rayleigh small-scale coefficients for every link class, runs the
//! repeater pipeline when applicable, and reports per-user post-MMSE SINR.
//! Campaigns pool SINRs across users and drops into empirical CDFs.
//!
//! The [`hwbudget`] module is independent of the simulator: closed-form
//! repeater hardware link-budget calculators (PA backoff, cascaded NF,
//! I/Q EVM, Butterworth group delay, stability-limited gain, RIS sizing).
//!
//! Drops are reproducible: each drop consumes one counter-derived ChaCha
//! substream, so results are identical for any worker count. The `parallel`
//! feature (default) runs drops on a rayon pool; disabling it leaves a
//! sequential fallback with the same outputs.

pub mod channel;
pub mod error;
pub mod hwbudget;
pub mod linalg;
pub mod montecarlo;
pub mod receiver;
pub mod repeater;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::{Mode, ScenarioConfig};
