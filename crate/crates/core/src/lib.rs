//! Identification of influential reactions in chemical reaction networks.
//!
//! Sampled trajectories (concentrations and reaction rates) are split into
//! short horizons; on each horizon a sparse selection problem picks the
//! smallest set of reactions that reproduces the observed concentration
//! changes within a relative tolerance. The selections across conditions are
//! then merged into a reduced mechanism.
//!
//! Module map:
//!
//! * [`mechanism`] parses and validates mechanisms and derives the
//!   stoichiometric and reactant-order matrices.
//! * [`kinetics`] evaluates mass-action rates and produces trajectories.
//! * [`lp`] is a self-contained simplex / branch-and-bound solver.
//! * [`selection`] builds and solves the per-horizon selection problems.
//! * [`reduction`] merges selections and compares full vs. reduced runs.

pub mod conditions;
pub mod kinetics;
pub mod lp;
pub mod mechanism;
pub mod reduction;
pub mod selection;
pub mod testnet;

pub use kinetics::{Condition, Schedule, SimulationOptions, Trajectory};
pub use mechanism::{Mechanism, OrderMatrix, RateLaw, Reaction, Species, StoichMatrix};
pub use reduction::{ComparisonReport, InfluentialSet, ReducedMechanism};
pub use selection::{
    ChunkSolver, SelectionConfig, SelectionEngine, SelectionMask, SolverRegistry, WeightMatrix,
};
