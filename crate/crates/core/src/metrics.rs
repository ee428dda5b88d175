//! MAC/PHY performance measures and training telemetry.

use std::fmt::Write as _;

use crate::env::{Action, SlotClass, SlotOutcome, UdStatus};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fraction of slots in which the UD delivered a packet.
pub fn xi_empirical(outcomes: &[UdStatus]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Argument("success rate of an empty frame".into()));
    }
    let ok = outcomes.iter().filter(|&&s| s == UdStatus::Success).count();
    Ok(ok as f64 / outcomes.len() as f64)
}

/// Cross-layer achievable rate of one slot.
pub fn clar_slot<T: Scalar>(xi: T, c: T) -> T {
    xi * c
}

/// `sum_n r_n . a_n` over every legitimate UD.
pub fn sclar<T: Scalar>(rates: &[Vec<T>], actions: &[Vec<u8>]) -> Result<T> {
    if rates.len() != actions.len() {
        return Err(Error::Shape {
            expected: rates.len(),
            got: actions.len(),
        });
    }
    let mut total = T::zero();
    for (r, a) in rates.iter().zip(actions) {
        if r.len() != a.len() {
            return Err(Error::Shape {
                expected: r.len(),
                got: a.len(),
            });
        }
        if a.iter().any(|&b| b > 1) {
            return Err(Error::Argument("action entries must be 0 or 1".into()));
        }
        total += r
            .iter()
            .zip(a)
            .filter(|(_, &b)| b == 1)
            .map(|(&x, _)| x)
            .sum::<T>();
    }
    Ok(total)
}

/// Trailing mean; the first `window - 1` entries average the prefix seen so far.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for (i, &x) in series.iter().enumerate() {
        sum += x;
        if i >= window {
            sum -= series[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// Aggregates of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    /// Per-UD success fraction, iUD last.
    pub xi: Vec<f64>,
    /// Per-UD frame CLAR `xi_n * sum_t a_n(t) C_n(t)`.
    pub clar: Vec<f64>,
    pub sclar: f64,
    pub free: usize,
    pub occupied: usize,
    pub jammed: usize,
    pub iud_collisions: usize,
    pub iud_jammed_tx: usize,
    /// Share of Free slots the iUD used; 1 when the frame had none to use.
    pub utilization: f64,
}

impl FrameMetrics {
    pub fn slots(&self) -> usize {
        self.free + self.occupied + self.jammed
    }
}

/// Streaming per-frame accumulator fed one slot outcome at a time.
#[derive(Debug, Clone)]
pub struct FrameAccumulator {
    slots_per_frame: usize,
    successes: Vec<usize>,
    rate_sums: Vec<f64>,
    counts: [usize; 3],
    free_dispatch: usize,
    collisions: usize,
    jammed_tx: usize,
    seen: usize,
}

impl FrameAccumulator {
    pub fn new(n_uds: usize, slots_per_frame: usize) -> Self {
        Self {
            slots_per_frame,
            successes: vec![0; n_uds],
            rate_sums: vec![0.0; n_uds],
            counts: [0; 3],
            free_dispatch: 0,
            collisions: 0,
            jammed_tx: 0,
            seen: 0,
        }
    }

    /// Adds one slot; returns the finished frame after its last slot.
    pub fn push<T: Scalar>(&mut self, o: &SlotOutcome<T>) -> Option<FrameMetrics> {
        for (n, (s, r)) in o.statuses.iter().zip(&o.rates).enumerate() {
            if *s == UdStatus::Success {
                self.successes[n] += 1;
            }
            if s.transmitted() {
                self.rate_sums[n] += r.as_f64();
            }
        }
        self.counts[o.class as usize] += 1;
        match (o.class, o.action, o.iud_status()) {
            (SlotClass::Free, Action::Dispatch, _) => self.free_dispatch += 1,
            (_, _, UdStatus::Collision) => self.collisions += 1,
            (_, _, UdStatus::Jammed) => self.jammed_tx += 1,
            _ => {}
        }
        self.seen += 1;
        if self.seen < self.slots_per_frame {
            return None;
        }
        let s = self.slots_per_frame as f64;
        let xi: Vec<f64> = self.successes.iter().map(|&k| k as f64 / s).collect();
        let clar: Vec<f64> = xi
            .iter()
            .zip(&self.rate_sums)
            .map(|(&x, &c)| clar_slot(x, c))
            .collect();
        let [free, occupied, jammed] = self.counts;
        let out = FrameMetrics {
            frame: o.frame,
            sclar: clar.iter().sum(),
            xi,
            clar,
            free,
            occupied,
            jammed,
            iud_collisions: self.collisions,
            iud_jammed_tx: self.jammed_tx,
            utilization: if free == 0 {
                1.0
            } else {
                self.free_dispatch as f64 / free as f64
            },
        };
        *self = Self::new(self.successes.len(), self.slots_per_frame);
        Some(out)
    }
}

/// Per-slot, per-step and per-frame series of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSeries {
    pub rewards: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub actions: Vec<Action>,
    pub classes: Vec<SlotClass>,
    /// `(slot index, batch loss)` for every gradient step.
    pub losses: Vec<(u64, f64)>,
    pub frames: Vec<FrameMetrics>,
}

impl TrainingSeries {
    pub fn record_slot<T: Scalar>(&mut self, o: &SlotOutcome<T>, epsilon: f64) {
        self.rewards.push(o.reward.as_f64());
        self.epsilons.push(epsilon);
        self.actions.push(o.action);
        self.classes.push(o.class);
    }

    pub fn smoothed_rewards(&self, window: usize) -> Vec<f64> {
        moving_average(&self.rewards, window)
    }

    pub fn learning_curve_csv(&self, window: usize) -> String {
        let ma = self.smoothed_rewards(window);
        let mut s = String::from("slot,reward,reward_ma,epsilon,action,slot_class\n");
        for i in 0..self.rewards.len() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{},{}",
                self.rewards[i],
                ma[i],
                self.epsilons[i],
                self.actions[i].index(),
                self.classes[i]
            );
        }
        s
    }

    pub fn loss_curve_csv(&self) -> String {
        let mut s = String::from("train_step,batch_loss\n");
        for (k, (_, loss)) in self.losses.iter().enumerate() {
            let _ = writeln!(s, "{k},{loss}");
        }
        s
    }

    pub fn sclar_csv(&self) -> String {
        sclar_csv(&self.frames)
    }
}

pub fn sclar_csv(frames: &[FrameMetrics]) -> String {
    let mut s = String::from("frame,sclar,utilization,collisions,jammed_tx\n");
    for f in frames {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            f.frame, f.sclar, f.utilization, f.iud_collisions, f.iud_jammed_tx
        );
    }
    s
}

/// Mean over the `[from, to)` fraction of a series, e.g. `(0.9, 1.0)` for
/// the last tenth.
pub fn segment_mean(series: &[f64], from: f64, to: f64) -> f64 {
    let n = series.len();
    let a = ((n as f64 * from).floor() as usize).min(n);
    let b = ((n as f64 * to).ceil() as usize).clamp(a, n);
    if a == b {
        return f64::NAN;
    }
    series[a..b].iter().sum::<f64>() / (b - a) as f64
}

/// Means of `parts` consecutive equal segments.
pub fn segment_means(series: &[f64], parts: usize) -> Vec<f64> {
    (0..parts)
        .map(|k| segment_mean(series, k as f64 / parts as f64, (k + 1) as f64 / parts as f64))
        .collect()
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
