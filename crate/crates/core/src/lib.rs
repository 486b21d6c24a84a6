//! Simulation and planning toolkit for two-photon EPR experiments with
//! time-varying analyzers.
//!
//! The crate contrasts two physics engines on the same optical timelines:
//!
//! * [`qm`]: standard quantum predictions for the polarization-entangled pair.
//! * [`bwave`]: a nonlocal model in which the first detection (in a preferred
//!   frame) emits a backward wave that is transformed by the optics it
//!   crosses and forces the partner photon into a definite polarization.
//!
//! Around them sit the special-relativistic ordering analysis ([`lorentz`]),
//! the detour/timing planner ([`planner`]), the seeded Monte Carlo driver
//! ([`sim`]) and the config/CSV plumbing used by the `bwave` CLI
//! ([`config`], [`report`]).

pub mod bwave;
pub mod config;
pub mod error;
pub mod experiment;
pub mod lorentz;
pub mod planner;
pub mod polarization;
pub mod qm;
pub mod report;
pub mod sim;
pub mod timeline;

pub use error::{Error, Result};
pub use experiment::{
    Arm, ArmLayout, Element, EmissionLaw, ExperimentConfig, Model, SwitchSchedule, SyncMode,
    Topology,
};
pub use lorentz::{FrameBoost, LabGeometry, SpacetimeEvent, C};
pub use polarization::{Channel, JointOutcome, Mode, PolarizationAngle};
pub use sim::{RunOptions, RunSummary};
