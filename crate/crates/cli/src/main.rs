//! `coverbot` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use coverbot::checkpoint::{load_checkpoint, save_checkpoint};
use coverbot::config::{Command, Preset, RunConfig, Settings, OUT_ENV};
use coverbot::dqn::{DqnAgent, DqnHyper};
use coverbot::envgen::{generate, GenConfig};
use coverbot::experiment::{evaluate, train_with, EvalAgent, EvalReport, Stat};
use coverbot::report::{
    read_metrics_csv, render_plot_svg, write_episodes_csv, write_metrics_csv, PlotKind,
};

#[derive(Parser)]
#[command(
    name = "coverbot",
    version,
    about = "Coverage path planning in a bumper-only gridworld",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Train a Q-network online and write metrics and checkpoints
    Train(Common),
    /// Evaluate a saved checkpoint with exploration switched off
    Evaluate(Common),
    /// Evaluate the spiral-then-random-walk baseline robot
    Baseline(Common),
    /// Print a generated room in the layout text format
    GenEnv(Common),
    /// Render running-average SVG plots from a metrics CSV
    Plot {
        /// Metrics CSV to plot [default: <out>/metrics.csv]
        input: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Default)]
struct Common {
    /// Master seed (room seed for gen-env)
    #[arg(long)]
    seed: Option<u64>,
    /// Training episodes, or evaluation episodes for evaluate/baseline
    #[arg(long)]
    episodes: Option<u64>,
    /// Number of exploration cycles over the run
    #[arg(long)]
    mini_epochs: Option<u64>,
    /// Initial exploration rate, in [0,1]
    #[arg(long)]
    eps0: Option<f64>,
    /// Per-episode decay of the exploration envelope, in (0,1]
    #[arg(long)]
    eps_decay: Option<f64>,
    /// Discount factor, in [0,1)
    #[arg(long)]
    gamma: Option<f64>,
    /// Adam learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Steps per episode
    #[arg(long)]
    budget: Option<u32>,
    /// Output directory [env: COVERBOT_OUT, default: coverbot-out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Checkpoint to load (evaluate) or final checkpoint path (train)
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Running-average window for plots
    #[arg(long)]
    window: Option<usize>,
    /// key = value settings file, overridden by flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Default hyperparameters: standard (5000 episodes) or desk (300)
    #[arg(long)]
    preset: Option<Preset>,
    /// Feed the raw step count to the network instead of step/budget
    #[arg(long)]
    raw_time: bool,
}

impl Common {
    fn settings(&self, input: Option<PathBuf>) -> Settings {
        Settings {
            seed: self.seed,
            episodes: self.episodes,
            mini_epochs: self.mini_epochs,
            eps0: self.eps0,
            eps_decay: self.eps_decay,
            gamma: self.gamma,
            lr: self.lr,
            budget: self.budget,
            out: self.out.clone(),
            checkpoint: self.checkpoint.clone(),
            window: self.window,
            preset: self.preset,
            raw_time: self.raw_time.then_some(true),
            input,
        }
    }
}

fn resolve(command: Command, common: &Common, input: Option<PathBuf>) -> Result<RunConfig> {
    let mut layers = vec![Settings::from_env_value(std::env::var(OUT_ENV).ok())];
    if let Some(path) = &common.config {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        layers.push(Settings::parse_file(&text).with_context(|| format!("in {}", path.display()))?);
    }
    let mut flags = common.settings(input);
    if command == Command::Plot && flags.input.is_none() {
        // fall back to the metrics file of the resolved output directory
        let out = layers
            .iter()
            .chain(std::iter::once(&flags))
            .filter_map(|l| l.out.clone())
            .next_back();
        flags.input = Some(
            out.unwrap_or_else(|| PathBuf::from(coverbot::config::DEFAULT_OUT))
                .join("metrics.csv"),
        );
    }
    layers.push(flags);
    Ok(RunConfig::resolve(command, &layers)?)
}

fn create_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating {}", cfg.out.display()))
}

fn run_train(cfg: &RunConfig) -> Result<()> {
    create_out(cfg)?;
    let tc = cfg.train_config();
    let every = (tc.episodes / 20).max(1);
    let outcome = train_with(&tc, |m| {
        if (m.episode + 1) % every == 0 || m.episode + 1 == tc.episodes {
            eprintln!(
                "episode {:>6}/{}  eps {:.4}  coverage {:.3}  collisions {:>4}  reward {:>5}",
                m.episode + 1,
                tc.episodes,
                m.epsilon,
                m.coverage,
                m.collisions,
                m.total_reward
            );
        }
    })?;

    let metrics = cfg.out.join("metrics.csv");
    write_metrics_csv(&outcome.log, &metrics)?;
    println!("metrics     {}", metrics.display());
    for c in &outcome.checkpoints {
        let path = cfg.out.join(format!("checkpoint-ep{:05}.ckpt", c.episode));
        save_checkpoint(&path, &c.net, &c.adam)?;
        println!("checkpoint  {}", path.display());
    }
    let last = cfg
        .checkpoint
        .clone()
        .unwrap_or_else(|| cfg.out.join("final.ckpt"));
    save_checkpoint(&last, &outcome.agent.net, &outcome.agent.adam)?;
    println!("final       {}", last.display());
    Ok(())
}

fn print_report(title: &str, report: &EvalReport) {
    let s = &report.summary;
    let line = |name: &str, st: Stat| {
        println!("{name:<13} mean {:>10.4}  sd {:>10.4}", st.mean, st.stddev)
    };
    println!("{title}: {} episodes", s.episodes);
    line("coverage", s.coverage);
    line("collisions", s.collisions);
    line("steps", s.steps);
    line("total_reward", s.total_reward);
}

fn run_eval(cfg: &RunConfig, agent: EvalAgent<'_>, title: &str, file: &str) -> Result<()> {
    create_out(cfg)?;
    let report = evaluate(agent, &cfg.eval_config())?;
    let path = cfg.out.join(file);
    write_episodes_csv(&report.episodes, &path)?;
    print_report(title, &report);
    println!("episodes    {}", path.display());
    Ok(())
}

fn run_evaluate(cfg: &RunConfig) -> Result<()> {
    let path = cfg
        .checkpoint
        .as_deref()
        .expect("validated: evaluate needs a checkpoint");
    let (net, adam) = load_checkpoint(path)?;
    let agent = DqnAgent {
        net,
        adam,
        hyper: DqnHyper {
            gamma: cfg.gamma,
            learning_rate: cfg.learning_rate,
            schedule: cfg.schedule(),
            time: cfg.time_encoding(),
        },
    };
    run_eval(cfg, EvalAgent::Dqn(&agent), "dqn", "eval.csv")
}

fn run_gen_env(cfg: &RunConfig) -> Result<()> {
    let layout = generate(&GenConfig::with_seed(cfg.seed))?;
    print!("{layout}");
    Ok(())
}

fn run_plot(cfg: &RunConfig) -> Result<()> {
    let input: &Path = cfg
        .input
        .as_deref()
        .expect("validated: plot needs an input");
    let metrics = read_metrics_csv(input)?;
    create_out(cfg)?;
    let coverage: Vec<f64> = metrics.iter().map(|m| m.coverage).collect();
    let collisions: Vec<f64> = metrics.iter().map(|m| f64::from(m.collisions)).collect();
    for (series, kind, name) in [
        (&coverage, PlotKind::Coverage, "coverage.svg"),
        (&collisions, PlotKind::Collisions, "collisions.svg"),
    ] {
        let path = cfg.out.join(name);
        render_plot_svg(series, cfg.window, kind, &path)?;
        println!("plot        {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Sub::Train(c) => run_train(&resolve(Command::Train, &c, None)?),
        Sub::Evaluate(c) => run_evaluate(&resolve(Command::Evaluate, &c, None)?),
        Sub::Baseline(c) => {
            let cfg = resolve(Command::Baseline, &c, None)?;
            run_eval(&cfg, EvalAgent::Baseline, "baseline", "baseline.csv")
        }
        Sub::GenEnv(c) => run_gen_env(&resolve(Command::GenEnv, &c, None)?),
        Sub::Plot { input, common } => run_plot(&resolve(Command::Plot, &common, input)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
