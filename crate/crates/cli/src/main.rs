use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sclar::config::{BootstrapMode, ScheduleMode};
use sclar::harness::{
    compare_agents, evaluate_policy, run_experiment, write_atomic, ExperimentConfig, Manifest,
    Precision, EVAL_HEADER, MANIFEST_FILE,
};
use sclar::{AgentKind, Error, Result};

#[derive(Parser)]
#[command(name = "sclar", version, about = "Jammed slotted-uplink simulator and channel-access learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train agents over a seed x agent x frame-size grid and write CSVs.
    Train(TrainArgs),
    /// Run a stored policy greedily on held-out channels.
    Eval(EvalArgs),
    /// Rank the agents of two or more manifests.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML with experiment, network and drl sections).
    #[arg(long, value_name = "PATH", conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in scenario: D1, S1, S2 or S3.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    /// Seeds, e.g. `1,2,3` or `1-5`.
    #[arg(long, value_name = "LIST", value_parser = parse_seeds)]
    seeds: Option<SeedList>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.scenario) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::from_scenario(name)?,
            (None, None) => ExperimentConfig::default(),
        };
        if let Some(SeedList(seeds)) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        if let Some(out) = &self.out {
            cfg.out_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Agents to train: tabular, fcdnn, resdnn (comma-separated or repeated).
    #[arg(long, value_name = "KIND", value_delimiter = ',')]
    agent: Vec<AgentKind>,
    /// Training frames.
    #[arg(long, value_name = "N")]
    frames: Option<usize>,
    /// Frame sizes to sweep, e.g. `5,10,20`.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    frame_sizes: Vec<usize>,
    /// Frames of the held-out greedy run (default: the training length).
    #[arg(long, value_name = "N")]
    eval_frames: Option<usize>,
    /// Write a per-slot trace.csv for every run.
    #[arg(long)]
    trace: bool,
    /// Use the literal loss assignment: predict with the target network.
    #[arg(long)]
    faithful: bool,
    /// Drop co-UD interference from the SINR.
    #[arg(long)]
    ideal_sic: bool,
    /// Mark the first slots of each jammer period as active.
    #[arg(long)]
    invert_jam: bool,
    /// Draw a new fUD schedule at every frame.
    #[arg(long)]
    redraw_schedule: bool,
    /// Simulate in single precision.
    #[arg(long)]
    f32: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Policy file written by `train` (policy.txt or qtable.csv).
    #[arg(long, value_name = "PATH")]
    policy: PathBuf,
    /// Frames of the greedy run.
    #[arg(long, value_name = "N")]
    frames: Option<usize>,
}

#[derive(Args)]
struct CompareArgs {
    /// Manifest files, or directories holding a manifest.toml.
    #[arg(required = true, value_name = "MANIFEST")]
    manifests: Vec<PathBuf>,
    /// Write the table here instead of standard output.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad seed `{t}`"));
        match item.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(format!("empty seed range `{item}`"));
                }
                out.extend(a..=b);
            }
            None => out.push(num(item)?),
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(SeedList(out))
}

fn train(args: TrainArgs) -> Result<()> {
    let mut cfg = args.common.resolve()?;
    if !args.agent.is_empty() {
        cfg.agents = args.agent;
    }
    if let Some(f) = args.frames {
        cfg.network.frames = f;
    }
    if !args.frame_sizes.is_empty() {
        cfg.frame_sizes = args.frame_sizes;
    }
    if args.eval_frames.is_some() {
        cfg.eval_frames = args.eval_frames;
    }
    cfg.trace |= args.trace;
    if args.faithful {
        cfg.network.drl.bootstrap = BootstrapMode::Faithful;
    }
    cfg.network.ideal_sic |= args.ideal_sic;
    cfg.network.invert_jam_pattern |= args.invert_jam;
    if args.redraw_schedule {
        cfg.network.schedule_mode = ScheduleMode::RedrawPerFrame;
    }
    if args.f32 {
        cfg.precision = Precision::F32;
    }

    let manifest = run_experiment(&cfg)?;
    for r in &manifest.runs {
        println!(
            "S{} {} seed {}: final_ma_reward {:.3} final_sclar {:.3} eval_sclar {:.3} \
             utilization {:.3} ({:.1}s)",
            r.slots_per_frame,
            r.agent,
            r.seed,
            r.final_ma_reward,
            r.final_sclar,
            r.eval_mean_sclar,
            r.eval_utilization,
            r.wall_clock_s
        );
    }
    println!("manifest: {}", cfg.out_dir.join(MANIFEST_FILE).display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let mut cfg = args.common.resolve()?;
    if args.frames.is_some() {
        cfg.eval_frames = args.frames;
    }
    let records = evaluate_policy(&cfg, &args.policy)?;
    let mut csv = format!("{EVAL_HEADER}\n");
    for r in &records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    match &args.common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            let path = dir.join("eval.csv");
            write_atomic(&path, &csv)?;
            println!("{}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let manifests = args
        .manifests
        .iter()
        .map(|p| {
            if p.is_dir() {
                Manifest::load(&p.join(MANIFEST_FILE))
            } else {
                Manifest::load(p)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let csv = compare_agents(&manifests)?.to_csv();
    match &args.out {
        Some(path) => write_atomic(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// Collapses a possibly multi-line message (TOML errors carry a source
/// excerpt) into one line.
fn one_line(msg: &str) -> String {
    msg.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.contains('|'))
        .collect::<Vec<_>>()
        .join(": ")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sclar: {}", one_line(&e.to_string()));
            ExitCode::FAILURE
        }
    }
}
