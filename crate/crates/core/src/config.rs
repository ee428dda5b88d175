//! Scenario and learner configuration.
//!
//! Configs are flat TOML with two dotted sections, `network.*` and `drl.*`.
//! Every field has a default, so a file only needs the keys it overrides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How often channel vectors are redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelRedraw {
    PerSlot,
    PerFrame,
}

/// Whether fUD schedules are drawn once per run or at every frame start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    QuasiStatic,
    RedrawPerFrame,
}

/// Which per-UD rate enters the utility terms of the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardRate {
    /// Every transmitting UD contributes its matched-filter rate, so a
    /// collided or jammed transmission still carries the sign of the
    /// table's network scaling factor.
    Sinr,
    /// Only successful transmissions contribute; failures count as zero.
    SuccessOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Which network produces the regression prediction and which one the
/// bootstrap target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    /// Predict with the online network, bootstrap with the target network.
    Standard,
    /// Predict with the target network, bootstrap with the online network,
    /// apply the resulting gradient to the online network.
    Faithful,
}

/// Inclusive range in dBm that per-slot powers are drawn uniformly from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbmRange {
    pub lo: f64,
    pub hi: f64,
}

impl DbmRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }
}

/// Inert physical constants carried for completeness. Nothing in the
/// signal model reads them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnitConstants {
    pub lambda: f64,
    pub ple: f64,
    pub big_lambda: f64,
}

impl Default for UnitConstants {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            ple: 1.0,
            big_lambda: 1.0,
        }
    }
}

/// Learner hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrlConfig {
    pub gamma: f64,
    /// Step size of the DQN optimizer.
    pub alpha: f64,
    /// Step size of the tabular Q-learning update.
    pub tabular_alpha: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    /// Multiplicative decay applied once per slot.
    pub epsilon_decay: f64,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Target sync period in slots.
    pub sync_period: u64,
    /// Soft-update coefficient used at each sync.
    pub tau_soft: f64,
    pub optimizer: OptimizerKind,
    pub bootstrap: BootstrapMode,
    /// Rewards are multiplied by this before they reach a learner. The
    /// environment and every metric keep the unscaled value.
    pub reward_scale: f64,
    pub hidden_width: usize,
    pub residual_blocks: usize,
    /// Trailing window of the smoothed learning curve, in slots.
    pub ma_window: usize,
}

impl Default for DrlConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            alpha: 1e-3,
            tabular_alpha: 1e-3,
            epsilon_start: 1.0,
            epsilon_min: 0.02,
            epsilon_decay: 0.999,
            replay_capacity: 10_000,
            batch_size: 32,
            sync_period: 100,
            tau_soft: 0.1,
            optimizer: OptimizerKind::Sgd,
            bootstrap: BootstrapMode::Standard,
            reward_scale: 0.01,
            hidden_width: 64,
            residual_blocks: 2,
            ma_window: 100,
        }
    }
}

/// Every constant of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Legitimate UDs, the iUD included. The iUD is always the last index.
    pub n_uds: usize,
    pub n_jammers: usize,
    pub antennas: usize,
    pub slots_per_frame: usize,
    pub frames: usize,
    /// Bernoulli parameter of every fUD schedule bit.
    pub omega: f64,
    pub jam_period: usize,
    /// Length of the quiet prefix of every jammer period.
    pub jam_quiet: usize,
    /// Mark the prefix as active and the remainder as quiet instead.
    pub invert_jam_pattern: bool,
    pub ud_power_dbm: DbmRange,
    pub jam_power_dbm: DbmRange,
    pub noise_dbm: DbmRange,
    pub units: UnitConstants,
    /// Drop the co-UD interference sum from the SINR denominator.
    pub ideal_sic: bool,
    pub channel_redraw: ChannelRedraw,
    pub schedule_mode: ScheduleMode,
    /// Slots of history stacked into the observation; `None` means one frame.
    pub history_window: Option<usize>,
    /// Keep the history across frame boundaries instead of clearing it.
    pub carry_history: bool,
    pub reward_rate: RewardRate,
    /// Fixed fUD schedule, one row of `slots_per_frame` bits per fUD.
    /// Replaces the Bernoulli draw when present.
    pub scripted_schedule: Option<Vec<Vec<u8>>>,
    pub seed: u64,
    pub drl: DrlConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_uds: 4,
            n_jammers: 1,
            antennas: 4,
            slots_per_frame: 5,
            frames: 2_000,
            omega: 0.5,
            jam_period: 5,
            jam_quiet: 3,
            invert_jam_pattern: false,
            ud_power_dbm: DbmRange::new(20.0, 25.0),
            jam_power_dbm: DbmRange::new(20.0, 25.0),
            noise_dbm: DbmRange::new(2.0, 5.0),
            units: UnitConstants::default(),
            ideal_sic: false,
            channel_redraw: ChannelRedraw::PerSlot,
            schedule_mode: ScheduleMode::QuasiStatic,
            history_window: None,
            carry_history: false,
            reward_rate: RewardRate::Sinr,
            scripted_schedule: None,
            seed: 1,
            drl: DrlConfig::default(),
        }
    }
}

impl NetworkConfig {
    pub fn n_fuds(&self) -> usize {
        self.n_uds - 1
    }

    pub fn iud_index(&self) -> usize {
        self.n_uds - 1
    }

    pub fn window(&self) -> usize {
        self.history_window.unwrap_or(self.slots_per_frame)
    }

    pub fn total_slots(&self) -> u64 {
        (self.frames * self.slots_per_frame) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_uds < 1 {
            return bad("n_uds must be at least 1".into());
        }
        if self.antennas < 1 {
            return bad("antennas must be at least 1".into());
        }
        if self.slots_per_frame < 1 {
            return bad("slots_per_frame must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return bad(format!("omega must lie in [0, 1], got {}", self.omega));
        }
        if self.n_jammers > 0 {
            if self.jam_period < 1 {
                return bad("jam_period must be at least 1".into());
            }
            if self.jam_quiet >= self.jam_period {
                return bad(format!(
                    "jam_quiet ({}) must be shorter than jam_period ({})",
                    self.jam_quiet, self.jam_period
                ));
            }
        }
        for (name, r) in [
            ("ud_power_dbm", self.ud_power_dbm),
            ("jam_power_dbm", self.jam_power_dbm),
            ("noise_dbm", self.noise_dbm),
        ] {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi) {
                return bad(format!("{name} must be a finite range with lo <= hi"));
            }
        }
        if self.window() < 1 {
            return bad("history_window must be at least 1".into());
        }
        if let Some(rows) = &self.scripted_schedule {
            if rows.len() != self.n_fuds() {
                return bad(format!(
                    "scripted_schedule has {} rows for {} fUDs",
                    rows.len(),
                    self.n_fuds()
                ));
            }
            if rows
                .iter()
                .any(|r| r.len() != self.slots_per_frame || r.iter().any(|&b| b > 1))
            {
                return bad("scripted_schedule rows must be slots_per_frame bits".into());
            }
        }
        self.drl.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        NetworkConfig::default().overlay(&table)
    }

    /// Applies the `network` and `drl` sections of `table` on top of `self`.
    /// Other top-level keys are ignored.
    pub fn overlay(&self, table: &toml::Table) -> Result<Self> {
        let mut merged = self.to_sections();
        for section in ["network", "drl"] {
            let Some(v) = table.get(section) else { continue };
            let toml::Value::Table(over) = v else {
                return Err(Error::Config(format!("`{section}` must be a table")));
            };
            let dst = match merged.get_mut(section) {
                Some(toml::Value::Table(t)) => t,
                _ => unreachable!("to_sections emits both tables"),
            };
            merge(dst, over);
        }
        let mut network = match merged.remove("network") {
            Some(toml::Value::Table(t)) => t,
            _ => unreachable!(),
        };
        network.insert("drl".into(), merged.remove("drl").expect("drl section"));
        toml::Value::Table(network)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Inverse of [`NetworkConfig::from_toml`].
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_sections()).expect("config serializes")
    }

    pub(crate) fn to_sections(&self) -> toml::Table {
        let mut network = toml::Table::try_from(self).expect("config serializes");
        let drl = network.remove("drl").expect("drl section");
        let mut out = toml::Table::new();
        out.insert("network".into(), toml::Value::Table(network));
        out.insert("drl".into(), drl);
        out
    }
}

fn merge(dst: &mut toml::Table, src: &toml::Table) {
    for (k, v) in src {
        match (dst.get_mut(k), v) {
            (Some(toml::Value::Table(d)), toml::Value::Table(s)) => merge(d, s),
            _ => {
                dst.insert(k.clone(), v.clone());
            }
        }
    }
}

impl DrlConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("drl.gamma must lie in [0, 1]");
        }
        if !(self.alpha > 0.0) || !(self.tabular_alpha > 0.0 && self.tabular_alpha <= 1.0) {
            return bad("learning rates must be positive (tabular_alpha at most 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_min)
            || !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0)
        {
            return bad("epsilon schedule values must lie in [0, 1]");
        }
        if self.batch_size < 1 || self.replay_capacity < self.batch_size {
            return bad("need 1 <= batch_size <= replay_capacity");
        }
        if self.sync_period < 1 {
            return bad("drl.sync_period must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.tau_soft) {
            return bad("drl.tau_soft must lie in [0, 1]");
        }
        if !(self.reward_scale > 0.0) || !self.reward_scale.is_finite() {
            return bad("drl.reward_scale must be positive");
        }
        if self.hidden_width < 1 || self.ma_window < 1 {
            return bad("hidden_width and ma_window must be at least 1");
        }
        Ok(())
    }
}

/// Names of the built-in scenarios.
pub const SCENARIOS: [&str; 4] = ["D1", "S1", "S2", "S3"];

/// Built-in scenario by name (case-insensitive).
pub fn scenario(name: &str) -> Result<NetworkConfig> {
    let base = NetworkConfig::default();
    let cfg = match name.to_ascii_uppercase().as_str() {
        // One fUD on a fixed script; the jammer covers the last two slots.
        "D1" => NetworkConfig {
            n_uds: 2,
            frames: 400,
            omega: 0.0,
            scripted_schedule: Some(vec![vec![1, 0, 0, 1, 0]]),
            ..base
        },
        "S1" => base,
        "S2" => NetworkConfig {
            slots_per_frame: 10,
            frames: 1_000,
            jam_period: 10,
            jam_quiet: 6,
            ..base
        },
        "S3" => NetworkConfig {
            slots_per_frame: 20,
            frames: 500,
            jam_period: 20,
            jam_quiet: 12,
            ..base
        },
        _ => return Err(Error::UnknownScenario(name.to_string())),
    };
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in SCENARIOS {
            scenario(name).unwrap().validate().unwrap();
        }
        assert!(matches!(scenario("nope"), Err(Error::UnknownScenario(_))));
        assert_eq!(scenario("s2").unwrap().slots_per_frame, 10);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = NetworkConfig::default();
        c.omega = 1.5;
        assert!(c.validate().is_err());
        let mut c = NetworkConfig::default();
        c.jam_quiet = c.jam_period;
        assert!(c.validate().is_err());
        let mut c = NetworkConfig::default();
        c.antennas = 0;
        assert!(c.validate().is_err());
        let mut c = NetworkConfig::default();
        c.n_jammers = 0;
        c.jam_quiet = 99;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn toml_overrides_only_named_keys() {
        let cfg = NetworkConfig::from_toml(
            "[network]\nomega = 0.25\nslots_per_frame = 10\n\n[drl]\ngamma = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.omega, 0.25);
        assert_eq!(cfg.slots_per_frame, 10);
        assert_eq!(cfg.antennas, 4);
        assert_eq!(cfg.drl.gamma, 0.5);
        assert_eq!(cfg.drl.batch_size, 32);
    }

    #[test]
    fn dotted_keys_parse() {
        let cfg = NetworkConfig::from_toml("network.omega = 0.1\ndrl.tau_soft = 1.0\n").unwrap();
        assert_eq!(cfg.omega, 0.1);
        assert_eq!(cfg.drl.tau_soft, 1.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = scenario("D1").unwrap();
        let back = NetworkConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(NetworkConfig::from_toml("[network]\nomgea = 0.1\n").is_err());
        assert!(NetworkConfig::from_toml("[drl]\ngama = 0.1\n").is_err());
    }

    #[test]
    fn overlay_keeps_preset_fields() {
        let over: toml::Table = toml::from_str("network.frames = 7\ndrl.gamma = 0.0\n").unwrap();
        let cfg = scenario("D1").unwrap().overlay(&over).unwrap();
        assert_eq!(cfg.frames, 7);
        assert_eq!(cfg.drl.gamma, 0.0);
        assert_eq!(cfg.scripted_schedule, Some(vec![vec![1, 0, 0, 1, 0]]));
        assert_eq!(cfg.n_uds, 2);
    }
}
