//! Event-triggered resilient consensus of networked two-link arms.
//!
//! Normal agents run a distributed observer whose neighbor inputs pass through
//! a resilient fusion step, broadcast only when their own estimation error
//! crosses a decaying threshold, and track the observer with an adaptive
//! controller. Byzantine agents may evolve arbitrarily and send different
//! values to different neighbors.
//!
//! Agent ids are 0-based throughout the library. Scenario files, graph files
//! and run artifacts use 1-based ids.

pub mod adversary;
pub mod analysis;
pub mod cli;
pub mod engine;
pub mod error;
pub mod expm;
pub mod graph;
pub mod output;
pub mod plant;
pub mod protocol;
pub mod scenario;

pub use engine::{run_scenario, Scenario, SimConfig, SimOutput, Simulation};
pub use graph::{Digraph, VertexSet};
pub use scenario::ScenarioFile;
