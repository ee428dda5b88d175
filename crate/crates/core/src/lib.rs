//! Slotted uplink network with fixed-schedule users and a periodic jammer,
//! plus deep Q-learning agents that learn when an intelligent user should
//! transmit.

pub mod agents;
pub mod config;
pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod nn;
pub mod phy;
pub mod scalar;

pub use agents::AgentKind;
pub use config::{scenario, NetworkConfig};
pub use harness::{compare_agents, run_experiment, ExperimentConfig, Manifest};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Env64 = env::Env<f64>;
pub type Env32 = env::Env<f32>;
pub type ParamSet64 = nn::ParamSet<f64>;
pub type ParamSet32 = nn::ParamSet<f32>;
pub type Agent64 = agents::Agent<f64>;
pub type Agent32 = agents::Agent<f32>;
