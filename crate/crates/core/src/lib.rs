//! Decentralized non-convex, non-smooth consensus optimization with a
//! proximal primal-dual method and Nesterov-type momentum.
//!
//! The crate is organised around the pieces a desk-scale study needs:
//!
//! * [`graph`]: topologies, incidence matrices and mixing weights;
//! * [`oracles`]: per-agent smooth losses and polyhedral regularizers;
//! * [`solver`]: the primal-dual momentum method, its explicit-dual
//!   reference form and the averaging baselines;
//! * [`metrics`]: optimality measures, the descent potential and theory constants;
//! * [`netsim`]: a round-synchronous message-passing executor;
//! * [`harness`]: configuration, experiments, CSV output and the verification suite.

pub mod graph;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod netsim;
pub mod oracles;
pub mod solver;

pub use graph::{Graph, IncidencePair, MixingMatrix, Topology};
pub use linalg::Stacked;
pub use oracles::{Problem, Regularizer, SmoothTerm};
pub use solver::{Batch, DualInit, Momentum, SolverConfig};
