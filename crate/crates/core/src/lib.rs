//! Cooperative slotted ALOHA as a two-state Markov chain.
//!
//! * [`analytic`] evaluates the chain in closed form (throughput, mean
//!   channel occupancy, delay).
//! * [`simulator`] runs the slot-level process the chain abstracts and
//!   serves as an independent empirical check.
//! * [`experiments`] sweeps the closed form over grids and validates it
//!   against simulation.
//! * [`cli`] and [`output`] back the `contention-lab` binary.

pub mod analytic;
pub mod cli;
pub mod experiments;
pub mod grid;
pub mod output;
pub mod simulator;

pub use analytic::{
    ChainQuantities, ModelError, ModelParams, StationaryDistribution, TransitionMatrix,
};
pub use experiments::{SweepKind, SweepRow, SweepSpec, ValidationReport};
pub use simulator::{SimConfig, SimError, SimStats, SlotOutcome};
