use rand::Rng;

use crate::config::BootstrapMode;
use crate::error::{Error, Result};
use crate::nn::{Adam, ParamSet};
use crate::scalar::Scalar;

use super::replay::{Experience, ReplayBuffer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSettings<T> {
    pub alpha: T,
    pub gamma: T,
    pub batch_size: usize,
    pub bootstrap: BootstrapMode,
}

#[derive(Debug, Clone)]
pub enum Optimizer<T> {
    Sgd,
    Adam(Adam<T>),
}

impl<T: Scalar> Optimizer<T> {
    fn apply(&mut self, params: &mut ParamSet<T>, grads: &ParamSet<T>, alpha: T) -> Result<()> {
        match self {
            Optimizer::Sgd => params.sgd_step(grads, alpha),
            Optimizer::Adam(state) => state.step(params, grads, alpha),
        }
    }
}

fn max2<T: Scalar>(q: &[T]) -> T {
    q[0].max(q[1])
}

/// One semi-gradient step on a replay batch; returns the batch MSE.
///
/// In [`BootstrapMode::Standard`] the online network `pred` is regressed
/// onto `r + gamma * max_a' Q(s', a'; target)`. In
/// [`BootstrapMode::Faithful`] the prediction comes from `target`, the
/// bootstrap from `pred`, and the gradient taken at `target` is applied
/// to `pred`.
pub fn dqn_train_step<T: Scalar>(
    pred: &mut ParamSet<T>,
    target: &ParamSet<T>,
    batch: &[&Experience<T>],
    optimizer: &mut Optimizer<T>,
    settings: &TrainSettings<T>,
) -> Result<T> {
    if batch.len() != settings.batch_size {
        return Err(Error::Shape {
            expected: settings.batch_size,
            got: batch.len(),
        });
    }
    let n = batch.len();
    let states: Vec<T> = batch.iter().flat_map(|e| e.state.iter().copied()).collect();
    let next: Vec<T> = batch.iter().flat_map(|e| e.next_state.iter().copied()).collect();
    let (predictor, bootstrapper) = match settings.bootstrap {
        BootstrapMode::Standard => (&*pred, target),
        BootstrapMode::Faithful => (target, &*pred),
    };
    let q_next = bootstrapper.forward_batch(&next, n)?;
    let trace = predictor.forward_trace(&states, n)?;
    let q = trace.output();

    let width = predictor.output_width();
    let mut grad_out = vec![T::zero(); q.len()];
    let mut loss = T::zero();
    let scale = T::of(2.0 / n as f64);
    for (b, e) in batch.iter().enumerate() {
        let y = e.reward + settings.gamma * max2(&q_next[b * width..]);
        let k = b * width + e.action.index();
        let err = q[k] - y;
        loss += err * err;
        grad_out[k] = scale * err;
    }
    loss /= T::of(n as f64);
    if !loss.is_finite() {
        let worst = batch
            .iter()
            .map(|e| e.reward.abs())
            .fold(T::zero(), T::max);
        return Err(Error::Training(format!(
            "batch loss is {loss}; largest |reward| in batch {worst}"
        )));
    }
    let grads = predictor.backward(&trace, &grad_out)?;
    optimizer.apply(pred, &grads, settings.alpha)?;
    Ok(loss)
}

/// Blends `pred` into `target` every `sync_period` slots. Returns whether a
/// sync happened.
pub fn maybe_sync_target<T: Scalar>(
    t: u64,
    sync_period: u64,
    tau: T,
    target: &mut ParamSet<T>,
    pred: &ParamSet<T>,
) -> Result<bool> {
    if sync_period == 0 || !t.is_multiple_of(sync_period) {
        return Ok(false);
    }
    target.soft_update(pred, tau)?;
    Ok(true)
}

/// Online and target networks, optimizer and replay memory.
#[derive(Debug, Clone)]
pub struct DqnAgent<T> {
    pub pred: ParamSet<T>,
    pub target: ParamSet<T>,
    pub optimizer: Optimizer<T>,
    pub buffer: ReplayBuffer<T>,
    pub settings: TrainSettings<T>,
    pub sync_period: u64,
    pub tau_soft: T,
}

impl<T: Scalar> DqnAgent<T> {
    pub fn new(
        pred: ParamSet<T>,
        adam: bool,
        settings: TrainSettings<T>,
        replay_capacity: usize,
        sync_period: u64,
        tau_soft: T,
    ) -> Self {
        let optimizer = if adam {
            Optimizer::Adam(Adam::new(&pred))
        } else {
            Optimizer::Sgd
        };
        Self {
            target: pred.clone(),
            pred,
            optimizer,
            buffer: ReplayBuffer::new(replay_capacity),
            settings,
            sync_period,
            tau_soft,
        }
    }

    pub fn q_values(&self, state: &[T]) -> Result<[T; 2]> {
        let q = self.pred.forward(state)?;
        Ok([q[0], q[1]])
    }

    /// Stores `e`, trains once the buffer holds a batch, then syncs the
    /// target on schedule. Returns the batch loss when a step was taken.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        e: Experience<T>,
        t: u64,
        rng: &mut R,
    ) -> Result<Option<T>> {
        self.buffer.push(e);
        let mut loss = None;
        if self.buffer.len() >= self.settings.batch_size {
            let batch = self.buffer.sample(self.settings.batch_size, rng)?;
            loss = Some(dqn_train_step(
                &mut self.pred,
                &self.target,
                &batch,
                &mut self.optimizer,
                &self.settings,
            )?);
        }
        maybe_sync_target(t, self.sync_period, self.tau_soft, &mut self.target, &self.pred)?;
        Ok(loss)
    }
}
