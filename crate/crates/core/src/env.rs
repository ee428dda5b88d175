//! Slotted uplink environment seen by the intelligent UD.
//!
//! UD indices `0..N-1` are the fixed-schedule UDs; index `N-1` is the iUD.
//! One call to [`Env::step`] advances one slot.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ChannelRedraw, NetworkConfig, RewardRate, ScheduleMode};
use crate::error::{Error, Result};
use crate::phy::{self, ChannelRealization};
use crate::scalar::Scalar;

/// iUD decision for one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Hold,
    Dispatch,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Hold, Action::Dispatch];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(Action::Hold),
            1 => Ok(Action::Dispatch),
            _ => Err(Error::Argument(format!("action index {i} out of range"))),
        }
    }

    pub fn transmits(self) -> bool {
        self == Action::Dispatch
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Hold => "hold",
            Action::Dispatch => "dispatch",
        })
    }
}

/// Channel condition before the iUD acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotClass {
    Free,
    Occupied,
    Jammed,
}

impl SlotClass {
    pub const ALL: [SlotClass; 3] = [SlotClass::Free, SlotClass::Occupied, SlotClass::Jammed];
}

impl fmt::Display for SlotClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SlotClass::Free => "free",
            SlotClass::Occupied => "occupied",
            SlotClass::Jammed => "jammed",
        })
    }
}

/// Per-UD transmission outcome as acknowledged by the AP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UdStatus {
    Idle,
    Success,
    Collision,
    Jammed,
}

impl UdStatus {
    pub const ALL: [UdStatus; 4] = [
        UdStatus::Idle,
        UdStatus::Success,
        UdStatus::Collision,
        UdStatus::Jammed,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn transmitted(self) -> bool {
        self != UdStatus::Idle
    }
}

/// Qualitative label of an iUD decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Good,
    Worst,
    Bad,
    Excellent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardRow {
    pub class: SlotClass,
    pub action: Action,
    pub decision: Decision,
    pub nu_ud: f64,
    pub nu_net: f64,
}

/// The six (slot class, iUD action) scaling rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    rows: [RewardRow; 6],
}

impl Default for RewardTable {
    fn default() -> Self {
        use Action::*;
        use Decision::*;
        let row = |class, action, decision, nu_ud, nu_net| RewardRow {
            class,
            action,
            decision,
            nu_ud,
            nu_net,
        };
        Self {
            rows: [
                row(SlotClass::Jammed, Hold, Good, 4.0, 5.0),
                row(SlotClass::Occupied, Hold, Good, 4.0, 5.0),
                row(SlotClass::Free, Hold, Worst, 1.0, -10.0),
                row(SlotClass::Jammed, Dispatch, Worst, 1.0, -10.0),
                row(SlotClass::Occupied, Dispatch, Bad, 3.0, -5.0),
                row(SlotClass::Free, Dispatch, Excellent, 5.0, 10.0),
            ],
        }
    }
}

impl RewardTable {
    pub fn rows(&self) -> &[RewardRow] {
        &self.rows
    }

    pub fn lookup(&self, class: SlotClass, action: Action) -> &RewardRow {
        self.rows
            .iter()
            .find(|r| r.class == class && r.action == action)
            .expect("table covers every class/action pair")
    }
}

/// UD utility: scaled achievable rate.
pub fn utility<T: Scalar>(ud_rate: T, nu_ud: T) -> T {
    nu_ud * ud_rate
}

/// Network reward for one slot.
pub fn reward<T: Scalar>(iud_utility: T, fud_utilities: &[T], nu_net: T) -> T {
    nu_net * (iud_utility + fud_utilities.iter().copied().sum::<T>())
}

/// One row of bits per fUD, indexed by slot within the frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FudSchedule {
    bits: Vec<Vec<u8>>,
}

impl FudSchedule {
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len() || r.iter().any(|&b| b > 1)) {
                return Err(Error::Argument("schedule rows must be equal-length bit rows".into()));
            }
        }
        Ok(Self { bits: rows })
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.bits
    }

    /// fUD transmit bits for slot `s` of a frame.
    pub fn slot(&self, s: usize) -> Vec<bool> {
        self.bits.iter().map(|row| row[s] == 1).collect()
    }
}

/// Independent Bernoulli(omega) bit per fUD and slot, or the scripted
/// schedule when the config carries one.
pub fn gen_fud_schedule<R: Rng + ?Sized>(config: &NetworkConfig, rng: &mut R) -> FudSchedule {
    if let Some(rows) = &config.scripted_schedule {
        return FudSchedule { bits: rows.clone() };
    }
    let bits = (0..config.n_fuds())
        .map(|_| {
            (0..config.slots_per_frame)
                .map(|_| rng.random_bool(config.omega) as u8)
                .collect()
        })
        .collect();
    FudSchedule { bits }
}

/// Jammer on/off state at global slot `t`, one entry per jammer.
///
/// Every period of `jam_period` slots opens with `jam_quiet` silent slots;
/// the rest of the period is jammed. `invert_jam_pattern` swaps the two.
pub fn jammer_active(t: u64, config: &NetworkConfig) -> Vec<bool> {
    if config.n_jammers == 0 {
        return Vec::new();
    }
    let phase = (t % config.jam_period as u64) as usize;
    let in_prefix = phase < config.jam_quiet;
    vec![in_prefix == config.invert_jam_pattern; config.n_jammers]
}

/// Slot class (ignoring the iUD) and per-UD statuses, iUD last.
pub fn classify_slot(fud_bits: &[bool], iud_action: Action, jam: bool) -> (SlotClass, Vec<UdStatus>) {
    let class = if jam {
        SlotClass::Jammed
    } else if fud_bits.iter().any(|&b| b) {
        SlotClass::Occupied
    } else {
        SlotClass::Free
    };
    let tx: Vec<bool> = fud_bits
        .iter()
        .copied()
        .chain(std::iter::once(iud_action.transmits()))
        .collect();
    let transmitters = tx.iter().filter(|&&b| b).count();
    let statuses = tx
        .into_iter()
        .map(|t| match (t, jam, transmitters) {
            (false, _, _) => UdStatus::Idle,
            (true, true, _) => UdStatus::Jammed,
            (true, false, 1) => UdStatus::Success,
            (true, false, _) => UdStatus::Collision,
        })
        .collect();
    (class, statuses)
}

/// Everything that happened in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome<T> {
    pub frame: usize,
    pub slot: usize,
    pub fud_bits: Vec<bool>,
    pub jam: bool,
    pub action: Action,
    pub class: SlotClass,
    pub statuses: Vec<UdStatus>,
    /// Matched-filter rate of every transmitting UD, zero for silent ones.
    pub phy_rates: Vec<T>,
    /// Rate actually delivered: the PHY rate on success, zero otherwise.
    pub rates: Vec<T>,
    pub reward: T,
}

impl<T: Scalar> SlotOutcome<T> {
    pub fn iud_status(&self) -> UdStatus {
        *self.statuses.last().expect("at least one UD")
    }

    /// `frame,slot,fud_bits,jam,iud_action,slot_class,reward`
    pub fn trace_row(&self) -> String {
        let bits: String = self.fud_bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        format!(
            "{},{},{},{},{},{},{}",
            self.frame, self.slot, bits, self.jam as u8, self.action, self.class, self.reward
        )
    }
}

pub const TRACE_HEADER: &str = "frame,slot,fud_bits,jam,iud_action,slot_class,reward";

/// Values stored per UD per history slot: action bit, four outcome
/// indicators, delivered rate.
pub const ENCODING_WIDTH: usize = 6;

/// Flattened observation: `window` slots, oldest first, each holding
/// `N` UD records of [`ENCODING_WIDTH`] values.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState<T>(Vec<T>);

impl<T: Scalar> EnvState<T> {
    fn idle(window: usize, n_uds: usize) -> Self {
        let mut v = vec![T::zero(); window * n_uds * ENCODING_WIDTH];
        for rec in v.chunks_mut(ENCODING_WIDTH) {
            rec[1 + UdStatus::Idle.index()] = T::one();
        }
        EnvState(v)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T> std::ops::Deref for EnvState<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Result of one [`Env::step`].
#[derive(Debug, Clone)]
pub struct Step<T> {
    pub state: EnvState<T>,
    pub reward: T,
    /// The iUD's own acknowledgement.
    pub ack: UdStatus,
    pub outcome: SlotOutcome<T>,
}

/// The simulated network for one run.
pub struct Env<T> {
    config: NetworkConfig,
    table: RewardTable,
    schedule: FudSchedule,
    schedule_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    channels: Option<ChannelRealization<T>>,
    state: EnvState<T>,
    t: u64,
}

impl<T: Scalar> Env<T> {
    /// Environment on channel stream 0 of `config.seed`.
    pub fn new(config: NetworkConfig) -> Result<Self> {
        Self::with_channel_stream(config, 0)
    }

    /// Environment whose fUD schedule comes from `config.seed` and whose
    /// channel and power draws come from an independent `stream`. Streams
    /// share the schedule, so a policy trained on stream 0 can be
    /// evaluated on held-out fading from stream 1.
    pub fn with_channel_stream(config: NetworkConfig, stream: u64) -> Result<Self> {
        config.validate()?;
        let mut schedule_rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut channel_rng = ChaCha8Rng::seed_from_u64(config.seed);
        channel_rng.set_stream(stream + 1);
        let schedule = gen_fud_schedule(&config, &mut schedule_rng);
        let state = EnvState::idle(config.window(), config.n_uds);
        Ok(Self {
            config,
            table: RewardTable::default(),
            schedule,
            schedule_rng,
            channel_rng,
            channels: None,
            state,
            t: 0,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn schedule(&self) -> &FudSchedule {
        &self.schedule
    }

    pub fn reward_table(&self) -> &RewardTable {
        &self.table
    }

    /// Global slot index of the next step.
    pub fn clock(&self) -> u64 {
        self.t
    }

    pub fn state_len(&self) -> usize {
        self.config.window() * self.config.n_uds * ENCODING_WIDTH
    }

    pub fn state(&self) -> &EnvState<T> {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.config.total_slots()
    }

    /// Rewinds the clock and clears the history. A quasi-static network
    /// keeps its schedule; otherwise a fresh one is drawn.
    pub fn reset(&mut self) -> EnvState<T> {
        if self.config.schedule_mode == ScheduleMode::RedrawPerFrame {
            self.schedule = gen_fud_schedule(&self.config, &mut self.schedule_rng);
        }
        self.t = 0;
        self.channels = None;
        self.state = EnvState::idle(self.config.window(), self.config.n_uds);
        self.state.clone()
    }

    /// Advances one slot. The history is cleared at each frame boundary
    /// unless `carry_history` is set.
    pub fn step(&mut self, action: Action) -> Result<Step<T>> {
        if self.is_done() {
            return Err(Error::State(format!(
                "episode of {} slots is exhausted",
                self.config.total_slots()
            )));
        }
        let cfg = &self.config;
        let s_len = cfg.slots_per_frame;
        let (frame, slot) = ((self.t / s_len as u64) as usize, (self.t % s_len as u64) as usize);
        if slot == 0 && self.t > 0 && cfg.schedule_mode == ScheduleMode::RedrawPerFrame {
            self.schedule = gen_fud_schedule(cfg, &mut self.schedule_rng);
        }

        let fud_bits = self.schedule.slot(slot);
        let jamming = jammer_active(self.t, cfg);
        let jam = jamming.iter().any(|&j| j);
        let (class, statuses) = classify_slot(&fud_bits, action, jam);

        if self.channels.is_none() || cfg.channel_redraw == ChannelRedraw::PerSlot || slot == 0 {
            self.channels = Some(phy::sample_channels(cfg, &mut self.channel_rng)?);
        }
        let ch = self.channels.as_ref().expect("drawn above");
        let powers = phy::sample_powers::<T, _>(cfg, &mut self.channel_rng);

        let active: Vec<bool> = statuses.iter().map(|s| s.transmitted()).collect();
        let mut phy_rates = Vec::with_capacity(cfg.n_uds);
        for n in 0..cfg.n_uds {
            let gamma = phy::sinr_mf(ch, &powers, &active, &jamming, n, cfg.ideal_sic)?;
            phy_rates.push(phy::rate_per_slot(gamma)?);
        }
        let rates: Vec<T> = statuses
            .iter()
            .zip(&phy_rates)
            .map(|(s, &r)| if *s == UdStatus::Success { r } else { T::zero() })
            .collect();

        let row = self.table.lookup(class, action);
        let credited = match cfg.reward_rate {
            RewardRate::Sinr => &phy_rates,
            RewardRate::SuccessOnly => &rates,
        };
        let nu_ud = T::of(row.nu_ud);
        let iud = cfg.iud_index();
        let fud_utils: Vec<T> = credited[..iud].iter().map(|&r| utility(r, nu_ud)).collect();
        let r = reward(utility(credited[iud], nu_ud), &fud_utils, T::of(row.nu_net));

        self.push_history(&statuses, &rates);
        self.t += 1;
        if self.t.is_multiple_of(s_len as u64) && !self.config.carry_history {
            self.state = EnvState::idle(self.config.window(), self.config.n_uds);
        }

        let outcome = SlotOutcome {
            frame,
            slot,
            fud_bits,
            jam,
            action,
            class,
            statuses,
            phy_rates,
            rates,
            reward: r,
        };
        Ok(Step {
            state: self.state.clone(),
            reward: r,
            ack: outcome.iud_status(),
            outcome,
        })
    }

    fn push_history(&mut self, statuses: &[UdStatus], rates: &[T]) {
        let width = self.config.n_uds * ENCODING_WIDTH;
        let v = &mut self.state.0;
        v.copy_within(width.., 0);
        let start = v.len() - width;
        for (n, rec) in v[start..].chunks_mut(ENCODING_WIDTH).enumerate() {
            rec.fill(T::zero());
            rec[0] = if statuses[n].transmitted() { T::one() } else { T::zero() };
            rec[1 + statuses[n].index()] = T::one();
            rec[5] = rates[n];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::scenario;

    fn jam_cfg(period: usize, quiet: usize) -> NetworkConfig {
        NetworkConfig {
            jam_period: period,
            jam_quiet: quiet,
            ..NetworkConfig::default()
        }
    }

    #[test]
    fn table_rows_are_exact() {
        let t = RewardTable::default();
        let expect = [
            (SlotClass::Jammed, Action::Hold, Decision::Good, 4.0, 5.0),
            (SlotClass::Occupied, Action::Hold, Decision::Good, 4.0, 5.0),
            (SlotClass::Free, Action::Hold, Decision::Worst, 1.0, -10.0),
            (SlotClass::Jammed, Action::Dispatch, Decision::Worst, 1.0, -10.0),
            (SlotClass::Occupied, Action::Dispatch, Decision::Bad, 3.0, -5.0),
            (SlotClass::Free, Action::Dispatch, Decision::Excellent, 5.0, 10.0),
        ];
        for (class, action, decision, nu_ud, nu_net) in expect {
            let row = t.lookup(class, action);
            assert_eq!((row.decision, row.nu_ud, row.nu_net), (decision, nu_ud, nu_net));
        }
    }

    #[test]
    fn utility_and_reward_values() {
        assert_eq!(utility(0.0, 7.0), 0.0);
        assert_eq!(utility(2.5, 4.0), 10.0);
        assert_eq!(utility(1.7f64, 5.0), 8.5);
        assert_eq!(reward(0.0, &[0.0, 0.0], -10.0), 0.0);
        assert_eq!(reward(2.0, &[1.0, 2.0], 10.0), 50.0);
        assert_eq!(reward(0.0, &[4.0], -10.0), -40.0);
    }

    #[test]
    fn jammer_unrolls_periodically() {
        let cfg = jam_cfg(5, 2);
        let pattern: Vec<u8> = (0..10).map(|t| jammer_active(t, &cfg)[0] as u8).collect();
        assert_eq!(pattern, [0, 0, 1, 1, 1, 0, 0, 1, 1, 1]);
        let always = jam_cfg(5, 0);
        assert!((0..20).all(|t| jammer_active(t, &always)[0]));
        let inverted = NetworkConfig {
            invert_jam_pattern: true,
            ..cfg.clone()
        };
        let flipped: Vec<u8> = (0..5).map(|t| jammer_active(t, &inverted)[0] as u8).collect();
        assert_eq!(flipped, [1, 1, 0, 0, 0]);
        let none = NetworkConfig {
            n_jammers: 0,
            ..cfg
        };
        assert!(jammer_active(3, &none).is_empty());
    }

    #[test]
    fn classify_examples() {
        let (c, s) = classify_slot(&[false, false], Action::Dispatch, false);
        assert_eq!(c, SlotClass::Free);
        assert_eq!(s, [UdStatus::Idle, UdStatus::Idle, UdStatus::Success]);

        let (c, s) = classify_slot(&[true, false], Action::Dispatch, false);
        assert_eq!(c, SlotClass::Occupied);
        assert_eq!(s, [UdStatus::Collision, UdStatus::Idle, UdStatus::Collision]);

        let (c, s) = classify_slot(&[false, true], Action::Hold, true);
        assert_eq!(c, SlotClass::Jammed);
        assert_eq!(s, [UdStatus::Idle, UdStatus::Jammed, UdStatus::Idle]);
    }

    #[test]
    fn schedule_degenerate_omegas() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (omega, bit) in [(0.0, 0u8), (1.0, 1u8)] {
            let cfg = NetworkConfig {
                omega,
                ..NetworkConfig::default()
            };
            let s = gen_fud_schedule(&cfg, &mut rng);
            assert_eq!(s.rows().len(), 3);
            assert!(s.rows().iter().flatten().all(|&b| b == bit));
        }
    }

    #[test]
    fn reset_state_shape_and_idle() {
        let cfg = scenario("S1").unwrap();
        let mut a = Env::<f64>::new(cfg.clone()).unwrap();
        let mut b = Env::<f64>::new(cfg.clone()).unwrap();
        let sa = a.reset();
        assert_eq!(sa, b.reset());
        assert_eq!(sa.len(), 5 * 4 * ENCODING_WIDTH);
        assert_eq!(sa.len(), a.state_len());
        for rec in sa.chunks(ENCODING_WIDTH) {
            assert_eq!(rec, [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    fn unit_env(bits: Vec<u8>, jam_quiet: usize) -> Env<f64> {
        let s = bits.len();
        let cfg = NetworkConfig {
            n_uds: 2,
            slots_per_frame: s,
            jam_period: s,
            jam_quiet,
            frames: 4,
            scripted_schedule: Some(vec![bits]),
            ud_power_dbm: crate::config::DbmRange::new(20.0, 20.0),
            noise_dbm: crate::config::DbmRange::new(0.0, 0.0),
            ..NetworkConfig::default()
        };
        Env::new(cfg).unwrap()
    }

    #[test]
    fn free_dispatch_is_rewarded() {
        let mut env = unit_env(vec![0, 0], 1);
        let step = env.step(Action::Dispatch).unwrap();
        assert_eq!(step.outcome.class, SlotClass::Free);
        assert_eq!(step.ack, UdStatus::Success);
        assert!(step.reward > 0.0);
        assert!(step.outcome.rates[1] > 0.0);
    }

    #[test]
    fn jammed_dispatch_is_not_rewarded() {
        let mut env = unit_env(vec![0, 0], 1);
        env.step(Action::Hold).unwrap();
        let step = env.step(Action::Dispatch).unwrap();
        assert_eq!(step.outcome.class, SlotClass::Jammed);
        assert_eq!(step.ack, UdStatus::Jammed);
        assert_eq!(step.outcome.rates[1], 0.0);
        assert!(step.reward <= 0.0);
    }

    #[test]
    fn scripted_frame_classes() {
        // jam_quiet == period keeps the jammer silent for the whole frame.
        let cfg = NetworkConfig {
            n_uds: 2,
            n_jammers: 0,
            frames: 1,
            scripted_schedule: Some(vec![vec![1, 0, 0, 1, 0]]),
            ..NetworkConfig::default()
        };
        let mut env = Env::<f64>::new(cfg).unwrap();
        let classes: Vec<SlotClass> = (0..5)
            .map(|_| env.step(Action::Hold).unwrap().outcome.class)
            .collect();
        use SlotClass::*;
        assert_eq!(classes, [Occupied, Free, Free, Occupied, Free]);
        assert!(matches!(env.step(Action::Hold), Err(Error::State(_))));
    }

    #[test]
    fn history_records_latest_slot_last() {
        let mut env = unit_env(vec![1, 0, 0], 2);
        let step = env.step(Action::Dispatch).unwrap();
        let n = 2 * ENCODING_WIDTH;
        let latest = &step.state[step.state.len() - n..];
        // fUD then iUD: both transmitted and collided, no delivered rate.
        assert_eq!(latest, [1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let prev = &step.state[step.state.len() - 2 * n..step.state.len() - n];
        assert_eq!(prev[1], 1.0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let cfg = scenario("S1").unwrap();
        let run = || {
            let mut env = Env::<f64>::new(cfg.clone()).unwrap();
            (0..40)
                .map(|t| {
                    let a = if t % 3 == 0 { Action::Dispatch } else { Action::Hold };
                    env.step(a).unwrap().reward
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn held_out_stream_keeps_schedule() {
        let cfg = scenario("S1").unwrap();
        let a = Env::<f64>::with_channel_stream(cfg.clone(), 0).unwrap();
        let mut b = Env::<f64>::with_channel_stream(cfg, 1).unwrap();
        assert_eq!(a.schedule(), b.schedule());
        let mut a = a;
        assert_ne!(
            a.step(Action::Hold).unwrap().outcome.phy_rates,
            b.step(Action::Hold).unwrap().outcome.phy_rates
        );
    }

    #[test]
    fn trace_row_format() {
        let mut env = unit_env(vec![1, 0, 0], 2);
        let step = env.step(Action::Hold).unwrap();
        let row = step.outcome.trace_row();
        assert!(row.starts_with("0,0,1,0,hold,occupied,"), "{row}");
        assert_eq!(row.split(',').count(), TRACE_HEADER.split(',').count());
    }
}
