//! Run configuration for the command-line front end.
//!
//! Settings come in layers: built-in defaults, then the `COVERBOT_OUT`
//! environment variable, then a `key = value` config file, then command-line
//! flags. A later layer overrides an earlier one field by field.
//!
//! Config files hold one `key = value` pair per line; `#` starts a comment.
//! Keys match the long flag names with `_` in place of `-`:
//!
//! ```text
//! # desk-scale run
//! preset = desk
//! seed = 7
//! eps_decay = 0.99
//! out = runs/seed7
//! ```

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::dqn::{EpsilonSchedule, TimeEncoding};
use crate::envgen::GenConfig;
use crate::experiment::{EvalConfig, TrainConfig};
use crate::report::DEFAULT_WINDOW;

pub const OUT_ENV: &str = "COVERBOT_OUT";
pub const DEFAULT_OUT: &str = "coverbot-out";
pub const DEFAULT_EVAL_EPISODES: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Train,
    Evaluate,
    Baseline,
    GenEnv,
    Plot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preset {
    #[default]
    Standard,
    Desk,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Preset::Standard),
            "desk" => Ok(Preset::Desk),
            _ => Err(format!("unknown preset {s:?} (expected standard or desk)")),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Standard => "standard",
            Preset::Desk => "desk",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{field} {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing required path: {0}")]
    MissingPath(&'static str),
}

/// One layer of optional settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub seed: Option<u64>,
    pub episodes: Option<u64>,
    pub mini_epochs: Option<u64>,
    pub eps0: Option<f64>,
    pub eps_decay: Option<f64>,
    pub gamma: Option<f64>,
    pub lr: Option<f64>,
    pub budget: Option<u32>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub window: Option<usize>,
    pub preset: Option<Preset>,
    pub raw_time: Option<bool>,
    pub input: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        let base = self;
        overlay_fields!(base, top; seed, episodes, mini_epochs, eps0, eps_decay, gamma, lr,
            budget, out, checkpoint, window, preset, raw_time, input)
    }

    pub fn from_env_value(out: Option<String>) -> Settings {
        Settings {
            out: out.filter(|s| !s.is_empty()).map(PathBuf::from),
            ..Settings::default()
        }
    }

    pub fn parse_file(text: &str) -> Result<Settings, ConfigError> {
        let mut s = Settings::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                msg: "expected key = value".into(),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |what: &str| ConfigError::Syntax {
                line,
                msg: format!("{key}: cannot parse {value:?} as {what}"),
            };
            fn num<T: FromStr>(v: &str) -> Option<T> {
                v.parse().ok()
            }
            match key {
                "seed" => s.seed = Some(num(value).ok_or_else(|| bad("an integer"))?),
                "episodes" => s.episodes = Some(num(value).ok_or_else(|| bad("an integer"))?),
                "mini_epochs" => s.mini_epochs = Some(num(value).ok_or_else(|| bad("an integer"))?),
                "eps0" => s.eps0 = Some(num(value).ok_or_else(|| bad("a number"))?),
                "eps_decay" => s.eps_decay = Some(num(value).ok_or_else(|| bad("a number"))?),
                "gamma" => s.gamma = Some(num(value).ok_or_else(|| bad("a number"))?),
                "lr" | "learning_rate" => s.lr = Some(num(value).ok_or_else(|| bad("a number"))?),
                "budget" => s.budget = Some(num(value).ok_or_else(|| bad("an integer"))?),
                "window" => s.window = Some(num(value).ok_or_else(|| bad("an integer"))?),
                "out" => s.out = Some(PathBuf::from(value)),
                "checkpoint" => s.checkpoint = Some(PathBuf::from(value)),
                "input" => s.input = Some(PathBuf::from(value)),
                "preset" => {
                    s.preset = Some(
                        value
                            .parse()
                            .map_err(|m| ConfigError::Syntax { line, msg: m })?,
                    )
                }
                "raw_time" => s.raw_time = Some(num(value).ok_or_else(|| bad("true or false"))?),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        Ok(s)
    }
}

/// Fully resolved and validated settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Preset,
    pub seed: u64,
    pub episodes: u64,
    pub mini_epochs: u64,
    pub eps0: f64,
    pub eps_decay: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub budget: u32,
    pub out: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub window: usize,
    pub raw_time: bool,
    pub input: Option<PathBuf>,
}

fn invalid(field: &'static str, reason: &str) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.to_string(),
    }
}

impl RunConfig {
    /// Applies `layers` (lowest priority first) over the defaults and validates.
    pub fn resolve(command: Command, layers: &[Settings]) -> Result<RunConfig, ConfigError> {
        let s = layers
            .iter()
            .cloned()
            .fold(Settings::default(), Settings::overlay);
        let preset = s.preset.unwrap_or_default();
        let base = match preset {
            Preset::Standard => TrainConfig::standard(),
            Preset::Desk => TrainConfig::desk(),
        };
        let default_episodes = match command {
            Command::Train => base.episodes,
            _ => DEFAULT_EVAL_EPISODES,
        };
        let cfg = RunConfig {
            command,
            preset,
            seed: s.seed.unwrap_or(base.master_seed),
            episodes: s.episodes.unwrap_or(default_episodes),
            mini_epochs: s.mini_epochs.unwrap_or(base.mini_epochs),
            eps0: s.eps0.unwrap_or(base.eps0),
            eps_decay: s.eps_decay.unwrap_or(base.eps_decay),
            gamma: s.gamma.unwrap_or(base.gamma),
            learning_rate: s.lr.unwrap_or(base.learning_rate),
            budget: s.budget.unwrap_or(base.budget),
            out: s.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            checkpoint: s.checkpoint,
            window: s.window.unwrap_or(DEFAULT_WINDOW),
            raw_time: s.raw_time.unwrap_or(false),
            input: s.input,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.eps0) {
            return Err(invalid("eps0", "must be in [0,1]"));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay <= 1.0) {
            return Err(invalid("eps_decay", "must be in (0,1]"));
        }
        if self.mini_epochs == 0 {
            return Err(invalid("mini_epochs", "must be at least 1"));
        }
        if self.episodes == 0 {
            return Err(invalid("episodes", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("gamma", "must be in [0,1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("lr", "must be a positive number"));
        }
        if self.budget == 0 {
            return Err(invalid("budget", "must be at least 1"));
        }
        if self.window == 0 {
            return Err(invalid("window", "must be at least 1"));
        }
        match self.command {
            Command::Evaluate if self.checkpoint.is_none() => {
                Err(ConfigError::MissingPath("checkpoint"))
            }
            Command::Plot if self.input.is_none() => Err(ConfigError::MissingPath("input")),
            _ => Ok(()),
        }
    }

    pub fn time_encoding(&self) -> TimeEncoding {
        if self.raw_time {
            TimeEncoding::Raw
        } else {
            TimeEncoding::Normalized
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            episodes: self.episodes,
            mini_epochs: self.mini_epochs,
            eps0: self.eps0,
            eps_decay: self.eps_decay,
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            budget: self.budget,
            master_seed: self.seed,
            time: self.time_encoding(),
            gen: GenConfig::default(),
        }
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            episodes: self.episodes,
            master_seed: self.seed,
            budget: self.budget,
            gen: GenConfig::default(),
        }
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            eps0: self.eps0,
            decay: self.eps_decay,
            mini_epochs: self.mini_epochs,
            total_episodes: self.episodes,
        }
    }
}
