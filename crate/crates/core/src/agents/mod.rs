//! Channel-access learners and the training loop that drives them.

pub mod dqn;
pub mod explore;
pub mod replay;
pub mod tabular;
mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DrlConfig, OptimizerKind};
use crate::error::{Error, Result};
use crate::nn::{fcdnn, resdnn, LayerKind, ParamSet};
use crate::scalar::Scalar;

pub use dqn::{dqn_train_step, maybe_sync_target, DqnAgent, Optimizer, TrainSettings};
pub use explore::{greedy, select_action_eps_greedy, EpsilonSchedule};
pub use replay::{Experience, ReplayBuffer};
pub use tabular::{state_key, TabularQ};
pub use train::{
    evaluate, run_policy, run_training, run_training_observed, EvalReport, TrainingRun,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Tabular,
    Fcdnn,
    Resdnn,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Tabular, AgentKind::Fcdnn, AgentKind::Resdnn];
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::Tabular => "tabular",
            AgentKind::Fcdnn => "fcdnn",
            AgentKind::Resdnn => "resdnn",
        })
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tabular" => Ok(AgentKind::Tabular),
            "fcdnn" => Ok(AgentKind::Fcdnn),
            "resdnn" => Ok(AgentKind::Resdnn),
            _ => Err(Error::Config(format!(
                "unknown agent `{s}` (expected tabular, fcdnn or resdnn)"
            ))),
        }
    }
}

/// A learner of any kind.
#[derive(Debug, Clone)]
pub enum Agent<T> {
    Tabular(TabularQ<T>),
    Dqn(Box<DqnAgent<T>>),
}

impl<T: Scalar> Agent<T> {
    pub fn new<R: Rng + ?Sized>(
        kind: AgentKind,
        state_len: usize,
        drl: &DrlConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let specs = match kind {
            AgentKind::Tabular => {
                return Ok(Agent::Tabular(TabularQ::new(
                    T::of(drl.tabular_alpha),
                    T::of(drl.gamma),
                )))
            }
            AgentKind::Fcdnn => fcdnn(state_len, drl.hidden_width, drl.residual_blocks, 2),
            AgentKind::Resdnn => resdnn(state_len, drl.hidden_width, drl.residual_blocks, 2),
        };
        Ok(Self::dqn(ParamSet::init(specs, rng)?, drl))
    }

    fn dqn(pred: ParamSet<T>, drl: &DrlConfig) -> Self {
        let settings = TrainSettings {
            alpha: T::of(drl.alpha),
            gamma: T::of(drl.gamma),
            batch_size: drl.batch_size,
            bootstrap: drl.bootstrap,
        };
        Agent::Dqn(Box::new(DqnAgent::new(
            pred,
            drl.optimizer == OptimizerKind::Adam,
            settings,
            drl.replay_capacity,
            drl.sync_period,
            T::of(drl.tau_soft),
        )))
    }

    /// Reads a policy written by [`Agent::save`]. The file kind is detected
    /// from its first line.
    pub fn load(path: &Path, drl: &DrlConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if text.starts_with("key,") {
            let q = TabularQ::parse_dump(&text, T::of(drl.tabular_alpha), T::of(drl.gamma))?;
            Ok(Agent::Tabular(q))
        } else {
            Ok(Self::dqn(text.parse()?, drl))
        }
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Tabular(_) => AgentKind::Tabular,
            Agent::Dqn(d) if d.pred.specs().iter().any(|s| s.kind == LayerKind::Residual) => {
                AgentKind::Resdnn
            }
            Agent::Dqn(_) => AgentKind::Fcdnn,
        }
    }

    /// Input width the policy expects, if fixed.
    pub fn input_width(&self) -> Option<usize> {
        match self {
            Agent::Tabular(_) => None,
            Agent::Dqn(d) => Some(d.pred.input_width()),
        }
    }

    pub fn q_values(&self, state: &[T]) -> Result<[T; 2]> {
        match self {
            Agent::Tabular(q) => Ok(q.q_values(state)),
            Agent::Dqn(d) => d.q_values(state),
        }
    }

    /// Learns from one transition observed at slot `t`.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        e: Experience<T>,
        t: u64,
        rng: &mut R,
    ) -> Result<Option<T>> {
        match self {
            Agent::Tabular(q) => {
                q.update(&e);
                Ok(None)
            }
            Agent::Dqn(d) => d.observe(e, t, rng),
        }
    }

    /// Writes the learned policy: the parameter record of the online
    /// network, or the Q-table dump.
    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            Agent::Tabular(q) => std::fs::write(path, q.dump()).map_err(|e| Error::io(path, e)),
            Agent::Dqn(d) => d.pred.save(path),
        }
    }
}
