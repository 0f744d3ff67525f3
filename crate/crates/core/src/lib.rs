//! Discrete-round simulator for energy-aware cluster-head election in
//! heterogeneous wireless sensor networks.
//!
//! Four election kernels are provided (DEEC, DDEEC, EDEEC and TDEEC). A run
//! places nodes, assigns them initial energies according to a
//! [`HeterogeneityModel`], and then repeats elect / cluster / transmit rounds
//! until every node is dead or the round budget is exhausted.
//!
//! ```no_run
//! use wsnsim::{run_simulation, NetworkConfig, Protocol, ProtocolKind};
//! use wsnsim::cli::ScenarioPreset;
//!
//! let mut config = NetworkConfig::default();
//! config.heterogeneity = ScenarioPreset::S1.heterogeneity(2.0);
//! let summary = run_simulation(&config, ProtocolKind::new(Protocol::Tdeec)).unwrap();
//! println!("first death at {:?}", summary.first_death_round);
//! ```

pub mod cli;
pub mod engine;
pub mod model;
pub mod protocols;
pub mod reporting;

mod error;

pub use engine::{run_round, run_simulation, NetworkState, RoundMetrics, RunSummary};
pub use error::{Error, Result};
pub use model::{EnergyClass, HeterogeneityModel, NetworkConfig, NodeState, Position, RadioParams};
pub use protocols::{ElectionContext, Protocol, ProtocolKind};
pub use reporting::ComparisonTable;
