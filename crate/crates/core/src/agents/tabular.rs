use std::collections::HashMap;
use std::fmt::Write as _;

use crate::env::{Action, ENCODING_WIDTH};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::replay::Experience;

/// Discrete part of an observation: one symbol per UD per history slot,
/// `4 * action_bit + outcome_index`. Rates are dropped.
pub fn state_key<T: Scalar>(state: &[T]) -> Vec<u8> {
    state
        .chunks_exact(ENCODING_WIDTH)
        .map(|rec| {
            let outcome = (0..4)
                .max_by(|&a, &b| rec[1 + a].partial_cmp(&rec[1 + b]).expect("finite"))
                .expect("four outcome slots") as u8;
            let acted = (rec[0] > T::of(0.5)) as u8;
            4 * acted + outcome
        })
        .collect()
}

const DUMP_HEADER: &str = "key,q_hold,q_dispatch";

/// Q-table keyed by [`state_key`]; unseen states read as zero.
#[derive(Debug, Clone)]
pub struct TabularQ<T> {
    table: HashMap<Vec<u8>, [T; 2]>,
    pub alpha: T,
    pub gamma: T,
}

impl<T: Scalar> TabularQ<T> {
    pub fn new(alpha: T, gamma: T) -> Self {
        Self {
            table: HashMap::new(),
            alpha,
            gamma,
        }
    }

    pub fn get(&self, key: &[u8]) -> [T; 2] {
        self.table.get(key).copied().unwrap_or([T::zero(); 2])
    }

    pub fn q_values(&self, state: &[T]) -> [T; 2] {
        self.get(&state_key(state))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// One Bellman backup of the visited cell.
    pub fn update(&mut self, e: &Experience<T>) {
        let next = self.get(&state_key(&e.next_state));
        let target = e.reward + self.gamma * next[0].max(next[1]);
        let cell = self
            .table
            .entry(state_key(&e.state))
            .or_insert([T::zero(); 2]);
        let q = &mut cell[e.action.index()];
        *q += self.alpha * (target - *q);
    }

    /// `key,q_hold,q_dispatch` rows sorted by key.
    pub fn dump(&self) -> String {
        let mut rows: Vec<_> = self.table.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        let mut s = format!("{DUMP_HEADER}\n");
        for (k, q) in rows {
            let key: String = k.iter().map(|d| char::from(b'0' + d)).collect();
            let _ = writeln!(s, "{key},{},{}", q[0], q[1]);
        }
        s
    }

    /// Inverse of [`TabularQ::dump`].
    pub fn parse_dump(text: &str, alpha: T, gamma: T) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(DUMP_HEADER) {
            return Err(Error::Format(format!("Q-table must start with `{DUMP_HEADER}`")));
        }
        let mut q = Self::new(alpha, gamma);
        for (i, line) in lines.enumerate() {
            let bad = || Error::Format(format!("Q-table row {}: `{line}`", i + 1));
            let mut cols = line.split(',');
            let (Some(key), Some(hold), Some(dispatch), None) =
                (cols.next(), cols.next(), cols.next(), cols.next())
            else {
                return Err(bad());
            };
            let key = key
                .bytes()
                .map(|c| c.checked_sub(b'0').filter(|&d| d < 8))
                .collect::<Option<Vec<u8>>>()
                .ok_or_else(bad)?;
            let hold: T = hold.parse().map_err(|_| bad())?;
            let dispatch: T = dispatch.parse().map_err(|_| bad())?;
            q.table.insert(key, [hold, dispatch]);
        }
        Ok(q)
    }

    pub fn greedy_action(&self, state: &[T]) -> Option<Action> {
        let q = self.q_values(state);
        match q[0].partial_cmp(&q[1])? {
            std::cmp::Ordering::Less => Some(Action::Dispatch),
            std::cmp::Ordering::Greater => Some(Action::Hold),
            std::cmp::Ordering::Equal => None,
        }
    }
}
