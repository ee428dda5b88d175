//! Seeded experiment campaigns over a seed x agent x frame-size grid.
//!
//! An experiment file is the network config format with one more section:
//!
//! ```toml
//! [experiment]
//! scenario = "S1"
//! agents = ["tabular", "resdnn"]
//! seeds = [1, 2, 3]
//! out = "runs/s1"
//! ```
//!
//! `[network]` and `[drl]` keys override the named scenario. A run writes its
//! CSVs under `out/S<frame size>/<agent>/seed<seed>/` and a `manifest.toml`
//! that is itself a valid experiment file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::agents::{evaluate, run_policy, run_training_observed, Agent, AgentKind, EvalReport};
use crate::config::{scenario, NetworkConfig};
use crate::env::{Action, Env, TRACE_HEADER};
use crate::error::{Error, Result};
use crate::metrics::{mean_std, sclar_csv};
use crate::scalar::Scalar;

/// Channel stream of held-out evaluation runs. Training uses stream 0.
pub const HELD_OUT_STREAM: u64 = 1;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Floating-point type the simulation runs in.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ExperimentSection {
    scenario: Option<String>,
    agents: Vec<AgentKind>,
    seeds: Vec<u64>,
    out: PathBuf,
    frame_sizes: Vec<usize>,
    eval_frames: Option<usize>,
    trace: bool,
    precision: Precision,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            scenario: None,
            agents: vec![AgentKind::Resdnn],
            seeds: vec![1],
            out: PathBuf::from("runs"),
            frame_sizes: Vec::new(),
            eval_frames: None,
            trace: false,
            precision: Precision::F64,
        }
    }
}

/// Everything one campaign needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Preset the network was derived from, kept as a label.
    pub scenario: Option<String>,
    pub network: NetworkConfig,
    pub agents: Vec<AgentKind>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Frame sizes to sweep. Empty means the network's own.
    pub frame_sizes: Vec<usize>,
    /// Length of the greedy held-out run; defaults to the training length.
    pub eval_frames: Option<usize>,
    /// Also write a per-slot `trace.csv` of training.
    pub trace: bool,
    pub precision: Precision,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::from_section(ExperimentSection::default(), NetworkConfig::default())
    }
}

impl ExperimentConfig {
    fn from_section(e: ExperimentSection, network: NetworkConfig) -> Self {
        Self {
            scenario: e.scenario,
            network,
            agents: e.agents,
            seeds: e.seeds,
            out_dir: e.out,
            frame_sizes: e.frame_sizes,
            eval_frames: e.eval_frames,
            trace: e.trace,
            precision: e.precision,
        }
    }

    fn section(&self) -> ExperimentSection {
        ExperimentSection {
            scenario: self.scenario.clone(),
            agents: self.agents.clone(),
            seeds: self.seeds.clone(),
            out: self.out_dir.clone(),
            frame_sizes: self.frame_sizes.clone(),
            eval_frames: self.eval_frames,
            trace: self.trace,
            precision: self.precision,
        }
    }

    pub fn from_scenario(name: &str) -> Result<Self> {
        Ok(Self {
            scenario: Some(name.to_ascii_uppercase()),
            network: scenario(name)?,
            ..Self::default()
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_table(&table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn from_table(table: &toml::Table) -> Result<Self> {
        const KNOWN: [&str; 5] = ["experiment", "network", "drl", "fingerprint", "runs"];
        if let Some(k) = table.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown top-level key `{k}`")));
        }
        let section: ExperimentSection = match table.get("experiment") {
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?,
            None => ExperimentSection::default(),
        };
        let base = match &section.scenario {
            Some(name) => scenario(name)?,
            None => NetworkConfig::default(),
        };
        let network = base.overlay(table)?;
        Ok(Self::from_section(section, network))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("config serializes")
    }

    fn to_table(&self) -> toml::Table {
        let mut t = self.network.to_sections();
        let e = toml::Table::try_from(self.section()).expect("experiment serializes");
        t.insert("experiment".into(), toml::Value::Table(e));
        t
    }

    /// Frame sizes actually run.
    pub fn sizes(&self) -> Vec<usize> {
        if self.frame_sizes.is_empty() {
            vec![self.network.slots_per_frame]
        } else {
            self.frame_sizes.clone()
        }
    }

    /// Every check that can fail before any simulation starts, except the
    /// output directory, which [`run_experiment`] probes by creating it.
    pub fn validate(&self) -> Result<()> {
        if let Some(name) = &self.scenario {
            scenario(name)?;
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.agents.is_empty() {
            return Err(Error::Config("at least one agent is required".into()));
        }
        if self.eval_frames == Some(0) {
            return Err(Error::Config("eval_frames must be at least 1".into()));
        }
        self.network.validate()?;
        for s in self.sizes() {
            resize_frame(&self.network, s)?.validate()?;
        }
        Ok(())
    }

    /// The (frame size, agent, seed) grid in run order.
    pub fn plan(&self) -> Result<Vec<RunSpec>> {
        let mut out = Vec::new();
        for s in self.sizes() {
            let sized = resize_frame(&self.network, s)?;
            for &agent in &self.agents {
                for &seed in &self.seeds {
                    let mut config = sized.clone();
                    config.seed = seed;
                    out.push(RunSpec {
                        agent,
                        seed,
                        config,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Hash of the network config without the seed, shared by every manifest
    /// of the same scenario.
    pub fn fingerprint(&self) -> String {
        let mut net = self.network.clone();
        net.seed = 0;
        let mut t = net.to_sections();
        t.remove("drl");
        let text = toml::to_string(&t).expect("config serializes");
        format!("{:016x}", fnv1a(text.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Rescales a network to `s` slots per frame. The jammer period and quiet
/// prefix keep their proportion to the frame, and the frame count shrinks so
/// that the total number of slots stays the same.
pub fn resize_frame(base: &NetworkConfig, s: usize) -> Result<NetworkConfig> {
    if s == base.slots_per_frame {
        return Ok(base.clone());
    }
    if s == 0 {
        return Err(Error::Config("frame sizes must be at least 1".into()));
    }
    if base.scripted_schedule.is_some() {
        return Err(Error::Config(
            "a scripted schedule cannot be swept over frame sizes".into(),
        ));
    }
    let ratio = s as f64 / base.slots_per_frame as f64;
    let period = ((base.jam_period as f64 * ratio).round() as usize).max(2);
    let quiet = ((base.jam_quiet as f64 * period as f64 / base.jam_period as f64).round() as usize)
        .clamp(1, period - 1);
    Ok(NetworkConfig {
        slots_per_frame: s,
        frames: ((base.frames as f64 / ratio).round() as usize).max(1),
        jam_period: period,
        jam_quiet: quiet,
        ..base.clone()
    })
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub agent: AgentKind,
    pub seed: u64,
    pub config: NetworkConfig,
}

impl RunSpec {
    /// Output directory relative to the experiment root.
    pub fn dir(&self) -> PathBuf {
        PathBuf::from(format!("S{}", self.config.slots_per_frame))
            .join(self.agent.to_string())
            .join(format!("seed{}", self.seed))
    }
}

/// Final numbers of one run, as stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub agent: AgentKind,
    pub seed: u64,
    pub slots_per_frame: usize,
    pub frames: usize,
    /// Run directory relative to the manifest.
    pub dir: String,
    pub files: Vec<String>,
    pub wall_clock_s: f64,
    /// Last value of the moving-average training reward.
    pub final_ma_reward: f64,
    /// SCLAR of the last training frame.
    pub final_sclar: f64,
    pub eval_frames: usize,
    pub eval_mean_sclar: f64,
    pub eval_mean_reward: f64,
    pub eval_utilization: f64,
    pub eval_collisions: usize,
    pub eval_jammed_tx: usize,
    /// Mean SCLAR of the held-out run when the iUD never transmits.
    pub hold_mean_sclar: f64,
}

/// What [`run_experiment`] leaves on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub fingerprint: String,
    pub runs: Vec<RunRecord>,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        let mut t = self.config.to_table();
        t.insert(
            "fingerprint".into(),
            toml::Value::String(self.fingerprint.clone()),
        );
        let runs = self
            .runs
            .iter()
            .map(|r| toml::Value::try_from(r).expect("record serializes"))
            .collect();
        t.insert("runs".into(), toml::Value::Array(runs));
        toml::to_string(&t).expect("manifest serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let config = ExperimentConfig::from_table(&table)?;
        let fingerprint = match table.remove("fingerprint") {
            Some(toml::Value::String(s)) => s,
            _ => return Err(Error::Format("manifest has no fingerprint".into())),
        };
        let runs = match table.remove("runs") {
            Some(v) => v
                .try_into()
                .map_err(|e: toml::de::Error| Error::Format(e.to_string()))?,
            None => Vec::new(),
        };
        Ok(Self {
            config,
            fingerprint,
            runs,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

/// Runs the whole grid and returns the manifest written to
/// `out_dir/manifest.toml`. Outputs are staged in a scratch directory and
/// moved into place only after every run succeeded.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Manifest> {
    config.validate()?;
    let plan = config.plan()?;
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let staging = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(out)
        .map_err(|e| Error::io(out, e))?;

    let mut runs = Vec::with_capacity(plan.len());
    for spec in &plan {
        let record = match config.precision {
            Precision::F64 => run_one::<f64>(spec, config, staging.path())?,
            Precision::F32 => run_one::<f32>(spec, config, staging.path())?,
        };
        runs.push(record);
    }

    for s in config.sizes() {
        let name = format!("S{s}");
        let (from, to) = (staging.path().join(&name), out.join(&name));
        if to.exists() {
            fs::remove_dir_all(&to).map_err(|e| Error::io(&to, e))?;
        }
        fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
    }
    let manifest = Manifest {
        config: config.clone(),
        fingerprint: config.fingerprint(),
        runs,
    };
    write_atomic(&out.join(MANIFEST_FILE), &manifest.to_toml())?;
    Ok(manifest)
}

fn run_one<T: Scalar>(spec: &RunSpec, exp: &ExperimentConfig, root: &Path) -> Result<RunRecord> {
    let started = Instant::now();
    let rel = spec.dir();
    let dir = root.join(&rel);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let cfg = &spec.config;

    let mut trace = exp.trace.then(|| format!("{TRACE_HEADER}\n"));
    let mut env = Env::<T>::new(cfg.clone())?;
    let run = run_training_observed(&mut env, spec.agent, |o| {
        if let Some(t) = trace.as_mut() {
            t.push_str(&o.trace_row());
            t.push('\n');
        }
    })?;

    let eval_frames = exp.eval_frames.unwrap_or(cfg.frames);
    let eval_cfg = NetworkConfig {
        frames: eval_frames,
        ..cfg.clone()
    };
    let report = evaluate(
        &run.agent,
        &mut Env::<T>::with_channel_stream(eval_cfg.clone(), HELD_OUT_STREAM)?,
    )?;
    let hold = run_policy(
        &mut Env::<T>::with_channel_stream(eval_cfg, HELD_OUT_STREAM)?,
        |_| Ok(Action::Hold),
    )?;

    let mut files = vec![
        ("learning_curve.csv", run.series.learning_curve_csv(cfg.drl.ma_window)),
        ("loss_curve.csv", run.series.loss_curve_csv()),
        ("sclar.csv", run.series.sclar_csv()),
        ("eval_sclar.csv", sclar_csv(report.frames())),
    ];
    if let Some(t) = trace {
        files.push(("trace.csv", t));
    }
    let mut names = Vec::new();
    for (name, body) in &files {
        write_atomic(&dir.join(name), body)?;
        names.push(name.to_string());
    }
    let policy = match run.agent {
        Agent::Tabular(_) => "qtable.csv",
        Agent::Dqn(_) => "policy.txt",
    };
    run.agent.save(&dir.join(policy))?;
    names.push(policy.to_string());

    let ma = run.series.smoothed_rewards(cfg.drl.ma_window);
    Ok(RunRecord {
        agent: spec.agent,
        seed: spec.seed,
        slots_per_frame: cfg.slots_per_frame,
        frames: cfg.frames,
        dir: path_string(&rel),
        files: names,
        wall_clock_s: started.elapsed().as_secs_f64(),
        final_ma_reward: ma.last().copied().unwrap_or(f64::NAN),
        final_sclar: run.series.frames.last().map_or(f64::NAN, |f| f.sclar),
        eval_frames,
        eval_mean_sclar: report.mean_sclar(),
        eval_mean_reward: report.mean_reward(),
        eval_utilization: report.utilization(),
        eval_collisions: report.collisions(),
        eval_jammed_tx: report.jammed_tx(),
        hold_mean_sclar: hold.mean_sclar(),
    })
}

fn path_string(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Writes through a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    std::io::Write::write_all(&mut tmp, body.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Held-out greedy run of one stored policy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub seed: u64,
    pub frames: usize,
    pub mean_sclar: f64,
    pub mean_reward: f64,
    pub utilization: f64,
    pub collisions: usize,
    pub jammed_tx: usize,
    pub hold_mean_sclar: f64,
}

pub const EVAL_HEADER: &str =
    "seed,frames,mean_sclar,mean_reward,utilization,collisions,jammed_tx,hold_mean_sclar";

impl EvalRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.seed,
            self.frames,
            self.mean_sclar,
            self.mean_reward,
            self.utilization,
            self.collisions,
            self.jammed_tx,
            self.hold_mean_sclar
        )
    }
}

/// Greedy evaluation of the policy file at `policy` on every seed of
/// `config`, over `eval_frames` frames (the network's frame count if unset).
/// Frame sizes and agents of `config` are ignored.
pub fn evaluate_policy(config: &ExperimentConfig, policy: &Path) -> Result<Vec<EvalRecord>> {
    config.validate()?;
    match config.precision {
        Precision::F64 => evaluate_policy_as::<f64>(config, policy),
        Precision::F32 => evaluate_policy_as::<f32>(config, policy),
    }
}

fn evaluate_policy_as<T: Scalar>(
    config: &ExperimentConfig,
    policy: &Path,
) -> Result<Vec<EvalRecord>> {
    let agent = Agent::<T>::load(policy, &config.network.drl)?;
    let frames = config.eval_frames.unwrap_or(config.network.frames);
    let mut out = Vec::new();
    for &seed in &config.seeds {
        let cfg = NetworkConfig {
            frames,
            seed,
            ..config.network.clone()
        };
        let mut env = Env::<T>::with_channel_stream(cfg.clone(), HELD_OUT_STREAM)?;
        if let Some(w) = agent.input_width() {
            if w != env.state_len() {
                return Err(Error::Config(format!(
                    "policy expects {w} inputs but the scenario produces {}",
                    env.state_len()
                )));
            }
        }
        let report: EvalReport = evaluate(&agent, &mut env)?;
        let hold = run_policy(
            &mut Env::<T>::with_channel_stream(cfg, HELD_OUT_STREAM)?,
            |_| Ok(Action::Hold),
        )?;
        out.push(EvalRecord {
            seed,
            frames,
            mean_sclar: report.mean_sclar(),
            mean_reward: report.mean_reward(),
            utilization: report.utilization(),
            collisions: report.collisions(),
            jammed_tx: report.jammed_tx(),
            hold_mean_sclar: hold.mean_sclar(),
        });
    }
    Ok(out)
}

/// One line of the agent comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub agent: AgentKind,
    pub slots_per_frame: usize,
    pub runs: usize,
    pub reward_mean: f64,
    pub reward_std: f64,
    pub reward_rank: usize,
    /// Best mean in the frame-size group minus this mean.
    pub reward_gap: f64,
    pub sclar_mean: f64,
    pub sclar_std: f64,
    pub sclar_rank: usize,
    pub sclar_gap: f64,
}

pub const SUMMARY_HEADER: &str = "slots_per_frame,agent,runs,final_reward_mean,final_reward_std,\
final_reward_rank,final_reward_gap,final_sclar_mean,final_sclar_std,final_sclar_rank,final_sclar_gap";

/// Per-agent mean and standard deviation of final reward and final-frame
/// SCLAR across seeds, ranked within each frame size.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub rows: Vec<SummaryRow>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{SUMMARY_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.slots_per_frame,
                r.label,
                r.runs,
                r.reward_mean,
                r.reward_std,
                r.reward_rank,
                r.reward_gap,
                r.sclar_mean,
                r.sclar_std,
                r.sclar_rank,
                r.sclar_gap
            );
        }
        s
    }

    pub fn row(&self, label: &str, slots_per_frame: usize) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.label == label && r.slots_per_frame == slots_per_frame)
    }
}

/// Compares the agents of several manifests. Every manifest must share one
/// scenario fingerprint and one seed set, and there must be at least two
/// (manifest, agent) entries in total. An agent appearing in more than one
/// manifest gets a `#k` suffix from its second appearance on.
pub fn compare_agents(manifests: &[Manifest]) -> Result<Comparison> {
    let Some(first) = manifests.first() else {
        return Err(Error::Comparison("no manifests given".into()));
    };
    let mut seeds = first.config.seeds.clone();
    seeds.sort_unstable();
    for m in &manifests[1..] {
        if m.fingerprint != first.fingerprint {
            return Err(Error::Comparison(format!(
                "scenario fingerprints differ: {} vs {}",
                first.fingerprint, m.fingerprint
            )));
        }
        let mut s = m.config.seeds.clone();
        s.sort_unstable();
        if s != seeds {
            return Err(Error::Comparison(format!(
                "seed sets differ: {seeds:?} vs {s:?}"
            )));
        }
    }

    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut seen: Vec<(AgentKind, usize)> = Vec::new();
    for m in manifests {
        let mut groups: Vec<(AgentKind, usize)> =
            m.runs.iter().map(|r| (r.agent, r.slots_per_frame)).collect();
        groups.sort_unstable();
        groups.dedup();
        for (agent, s) in groups {
            let picked: Vec<&RunRecord> = m
                .runs
                .iter()
                .filter(|r| r.agent == agent && r.slots_per_frame == s)
                .collect();
            let rewards: Vec<f64> = picked.iter().map(|r| r.final_ma_reward).collect();
            let sclars: Vec<f64> = picked.iter().map(|r| r.final_sclar).collect();
            let (reward_mean, reward_std) = mean_std(&rewards);
            let (sclar_mean, sclar_std) = mean_std(&sclars);
            let copies = seen.iter().filter(|&&g| g == (agent, s)).count();
            seen.push((agent, s));
            rows.push(SummaryRow {
                label: if copies == 0 {
                    agent.to_string()
                } else {
                    format!("{agent}#{}", copies + 1)
                },
                agent,
                slots_per_frame: s,
                runs: picked.len(),
                reward_mean,
                reward_std,
                reward_rank: 0,
                reward_gap: 0.0,
                sclar_mean,
                sclar_std,
                sclar_rank: 0,
                sclar_gap: 0.0,
            });
        }
    }
    if rows.len() < 2 {
        return Err(Error::Comparison(
            "need at least two agents or manifests to compare".into(),
        ));
    }

    let mut sizes: Vec<usize> = rows.iter().map(|r| r.slots_per_frame).collect();
    sizes.sort_unstable();
    sizes.dedup();
    for s in sizes {
        let idx: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].slots_per_frame == s)
            .collect();
        let means = |f: fn(&SummaryRow) -> f64| idx.iter().map(|&i| f(&rows[i])).collect::<Vec<_>>();
        let reward = means(|r| r.reward_mean);
        let sclar = means(|r| r.sclar_mean);
        let (best_r, best_s) = (max(&reward), max(&sclar));
        for (k, &i) in idx.iter().enumerate() {
            rows[i].reward_rank = rank(&reward, k);
            rows[i].sclar_rank = rank(&sclar, k);
            rows[i].reward_gap = best_r - reward[k];
            rows[i].sclar_gap = best_s - sclar[k];
        }
    }
    rows.sort_by(|a, b| {
        (a.slots_per_frame, a.reward_rank, &a.label).cmp(&(b.slots_per_frame, b.reward_rank, &b.label))
    });
    Ok(Comparison { rows })
}

fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Competition rank, 1 for the largest value; ties share a rank.
fn rank(xs: &[f64], k: usize) -> usize {
    1 + xs.iter().filter(|&&x| x > xs[k]).count()
}
