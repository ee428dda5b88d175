use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Action, Env, EnvState, SlotOutcome};
use crate::error::Result;
use crate::metrics::{FrameAccumulator, FrameMetrics, TrainingSeries};
use crate::scalar::Scalar;

use super::explore::{greedy, select_action_eps_greedy, EpsilonSchedule};
use super::{Agent, AgentKind, Experience};

const AGENT_STREAM: u64 = 1_000;
const EVAL_STREAM: u64 = 2_000;

/// A trained policy and everything recorded while training it.
#[derive(Debug, Clone)]
pub struct TrainingRun<T> {
    pub kind: AgentKind,
    pub agent: Agent<T>,
    pub series: TrainingSeries,
}

/// Trains a fresh agent of `kind` over every frame of `env`: observe, act
/// epsilon-greedily, step, store, learn, sync, decay.
pub fn run_training<T: Scalar>(env: &mut Env<T>, kind: AgentKind) -> Result<TrainingRun<T>> {
    run_training_observed(env, kind, |_| {})
}

/// [`run_training`] with a callback on every slot outcome.
pub fn run_training_observed<T, F>(
    env: &mut Env<T>,
    kind: AgentKind,
    mut on_slot: F,
) -> Result<TrainingRun<T>>
where
    T: Scalar,
    F: FnMut(&SlotOutcome<T>),
{
    let cfg = env.config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(AGENT_STREAM);
    let mut agent = Agent::new(kind, env.state_len(), &cfg.drl, &mut rng)?;
    let eps = EpsilonSchedule {
        start: cfg.drl.epsilon_start,
        min: cfg.drl.epsilon_min,
        decay: cfg.drl.epsilon_decay,
    };
    let scale = T::of(cfg.drl.reward_scale);
    let mut series = TrainingSeries::default();
    let mut frames = FrameAccumulator::new(cfg.n_uds, cfg.slots_per_frame);

    let mut state = env.reset();
    while !env.is_done() {
        let t = env.clock();
        let epsilon = eps.value(t);
        let action = select_action_eps_greedy(agent.q_values(&state)?, epsilon, &mut rng);
        let step = env.step(action)?;
        let e = Experience {
            state: state.into_vec(),
            action,
            reward: step.reward * scale,
            next_state: step.state.to_vec(),
        };
        if let Some(loss) = agent.observe(e, t, &mut rng)? {
            series.losses.push((t, loss.as_f64()));
        }
        on_slot(&step.outcome);
        series.record_slot(&step.outcome, epsilon);
        if let Some(f) = frames.push(&step.outcome) {
            series.frames.push(f);
        }
        state = step.state;
    }
    Ok(TrainingRun {
        kind,
        agent,
        series,
    })
}

/// Per-slot and per-frame record of a policy run without learning.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub series: TrainingSeries,
}

impl EvalReport {
    pub fn frames(&self) -> &[FrameMetrics] {
        &self.series.frames
    }

    pub fn mean_sclar(&self) -> f64 {
        let f = self.frames();
        f.iter().map(|m| m.sclar).sum::<f64>() / f.len().max(1) as f64
    }

    pub fn mean_reward(&self) -> f64 {
        let r = &self.series.rewards;
        r.iter().sum::<f64>() / r.len().max(1) as f64
    }

    /// Share of all Free slots the iUD used.
    pub fn utilization(&self) -> f64 {
        let (used, free) = self.series.classes.iter().zip(&self.series.actions).fold(
            (0usize, 0usize),
            |(u, f), (c, a)| match c {
                crate::env::SlotClass::Free => (u + (*a == Action::Dispatch) as usize, f + 1),
                _ => (u, f),
            },
        );
        if free == 0 {
            1.0
        } else {
            used as f64 / free as f64
        }
    }

    pub fn collisions(&self) -> usize {
        self.frames().iter().map(|f| f.iud_collisions).sum()
    }

    pub fn jammed_tx(&self) -> usize {
        self.frames().iter().map(|f| f.iud_jammed_tx).sum()
    }
}

/// Drives `env` to the end of its episode with an arbitrary policy.
pub fn run_policy<T, F>(env: &mut Env<T>, mut policy: F) -> Result<EvalReport>
where
    T: Scalar,
    F: FnMut(&EnvState<T>) -> Result<Action>,
{
    let cfg = env.config().clone();
    let mut series = TrainingSeries::default();
    let mut frames = FrameAccumulator::new(cfg.n_uds, cfg.slots_per_frame);
    let mut state = env.reset();
    while !env.is_done() {
        let step = env.step(policy(&state)?)?;
        series.record_slot(&step.outcome, 0.0);
        if let Some(f) = frames.push(&step.outcome) {
            series.frames.push(f);
        }
        state = step.state;
    }
    Ok(EvalReport { series })
}

/// Greedy (epsilon = 0) run of a trained agent on `env`.
pub fn evaluate<T: Scalar>(agent: &Agent<T>, env: &mut Env<T>) -> Result<EvalReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(env.config().seed);
    rng.set_stream(EVAL_STREAM);
    run_policy(env, |s| Ok(greedy(agent.q_values(s)?, &mut rng)))
}

