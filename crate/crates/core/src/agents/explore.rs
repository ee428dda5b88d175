use rand::Rng;

use crate::env::Action;
use crate::scalar::Scalar;

/// `eps_t = max(eps_min, eps_0 * decay^t)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub min: f64,
    pub decay: f64,
}

impl EpsilonSchedule {
    pub fn value(&self, t: u64) -> f64 {
        let t = i32::try_from(t).unwrap_or(i32::MAX);
        (self.start * self.decay.powi(t)).max(self.min)
    }
}

/// Greedy action with uniform tie-breaking.
pub fn greedy<T: Scalar, R: Rng + ?Sized>(q: [T; 2], rng: &mut R) -> Action {
    if q[0] == q[1] {
        if rng.random_bool(0.5) {
            Action::Dispatch
        } else {
            Action::Hold
        }
    } else if q[1] > q[0] {
        Action::Dispatch
    } else {
        Action::Hold
    }
}

/// Uniform random action with probability `epsilon`, greedy otherwise.
pub fn select_action_eps_greedy<T: Scalar, R: Rng + ?Sized>(
    q: [T; 2],
    epsilon: f64,
    rng: &mut R,
) -> Action {
    if epsilon > 0.0 && rng.random_bool(epsilon.min(1.0)) {
        Action::ALL[rng.random_range(0..2)]
    } else {
        greedy(q, rng)
    }
}
