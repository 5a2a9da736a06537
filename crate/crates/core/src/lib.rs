//! Simulation and diagnostics toolkit for a motor-driven spur gear stage.
//!
//! The crate covers the full signal chain of a gearbox test rig in software:
//!
//! - [`tvms`] — time-varying mesh stiffness of a spur gear pair from tooth
//!   geometry, including root-crack damage levels.
//! - [`cemg`] — coupled electromechanical model: a three-phase induction
//!   motor in phase coordinates driving the gear pair through a torsional
//!   coupling, integrated with fixed-step RK4.
//! - [`signal`] — calibrated additive white Gaussian noise and envelope
//!   spectra.
//! - [`vmd`] — variational mode decomposition (ADMM in the frequency
//!   domain).
//! - [`tsa`] — time-synchronous averaging at the shaft period.
//! - [`chaos`] — delay embedding, largest Lyapunov exponent (divergence-curve
//!   method) and correlation dimension (pairwise correlation sums).
//!
//! Modules are independent: each takes plain slices/structs and returns
//! plain results, so they compose into a pipeline or run standalone.

pub mod cemg;
pub mod chaos;
pub mod signal;
pub mod tsa;
pub mod tvms;
pub mod vmd;

pub(crate) mod util;

pub use cemg::{MechParams, MotorParams, SimMeta, SimResult, State, SteadySummary, SystemParams};
pub use chaos::{CdEstimate, Embedding, FeatureRecord, LeEstimate};
pub use signal::NoisySignal;
pub use tsa::TsaResult;
pub use tvms::{CrackSpec, GearGeometry, StiffnessProfile};
pub use vmd::{VmdConfig, VmdResult};
