//! Episode loop, online training, frozen-policy evaluation and summaries.
//!
//! Every random quantity is derived from the master seed:
//!
//! | stream                  | seed                                         |
//! |-------------------------|----------------------------------------------|
//! | training layout `x`     | `derive_seed(master, TrainLayout, x)`        |
//! | training agent rng `x`  | `derive_seed(master, TrainAgent, x)`         |
//! | evaluation layout `i`   | `derive_seed(master, EvalLayout, i)`         |
//! | evaluation agent rng `i`| `derive_seed(master, EvalAgent, i)`          |
//! | network initialisation  | `derive_seed(master, NetInit, 0)`            |
//!
//! so a run is fully determined by its configuration and master seed.

use rayon::prelude::*;
use thiserror::Error;

use crate::baseline::BaselineState;
use crate::dqn::{
    select_action, DqnAgent, DqnHyper, EpsilonSchedule, ScheduleError, TimeEncoding, Transition,
};
use crate::envgen::{generate, GenConfig, GenError};
use crate::layout::Layout;
use crate::nn::{AdamState, DenseNet, NnError};
use crate::rng::{derive_seed, SimRng, Stream};
use crate::world::{Action, DoneReason, StepOutcome, World, WorldError, DEFAULT_BUDGET};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("training diverged in episode {episode}: {source}")]
    Diverged { episode: u64, source: NnError },
    #[error("training diverged in episode {episode}: non-finite loss")]
    NonFiniteLoss { episode: u64 },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: u64,
    pub coverage: f64,
    pub collisions: u32,
    pub steps: u32,
    pub terminal_reason: DoneReason,
    pub total_reward: i64,
    pub epsilon: f64,
    /// Cells entered for the first time (the base is not counted).
    pub newly_visited: u32,
}

/// Who is driving an episode.
pub enum Policy<'a> {
    Baseline,
    UniformRandom,
    Dqn {
        agent: &'a mut DqnAgent,
        epsilon: f64,
        train: bool,
    },
}

/// Runs one episode to completion. `seed` feeds the policy's randomness.
pub fn run_episode(
    layout: &Layout,
    policy: Policy<'_>,
    budget: u32,
    seed: u64,
    episode: u64,
) -> Result<EpisodeMetrics, RunError> {
    let mut world = World::new(layout.clone(), budget)?;
    let mut rng = SimRng::new(seed);
    let mut total_reward = 0i64;
    let mut newly_visited = 0u32;
    let epsilon = match &policy {
        Policy::Dqn { epsilon, .. } => *epsilon,
        _ => 0.0,
    };

    let mut record = |out: &StepOutcome| {
        total_reward += i64::from(out.reward);
        newly_visited += u32::from(out.newly_visited);
    };

    match policy {
        Policy::Baseline => {
            let mut state = BaselineState::new(seed);
            let mut last: Option<StepOutcome> = None;
            while !world.is_done() {
                let action = state.next_action(last.as_ref());
                let out = world.apply_action(action)?;
                record(&out);
                last = Some(out);
            }
        }
        Policy::UniformRandom => {
            while !world.is_done() {
                let action = Action::ALL[rng.index(Action::COUNT)];
                record(&world.apply_action(action)?);
            }
        }
        Policy::Dqn {
            agent,
            epsilon,
            train,
        } => {
            let mut state = agent.encode(&world.observe(), budget);
            while !world.is_done() {
                let action = select_action(&agent.net, &state, epsilon, &mut rng);
                let out = world.apply_action(action)?;
                record(&out);
                let next_state = agent.encode(&world.observe(), budget);
                if train {
                    let tr = Transition {
                        state,
                        action,
                        reward: out.reward,
                        next_state,
                        terminal: out.done,
                    };
                    let loss = agent
                        .learn(&tr)
                        .map_err(|source| RunError::Diverged { episode, source })?;
                    if !loss.is_finite() {
                        return Err(RunError::NonFiniteLoss { episode });
                    }
                    state = tr.next_state;
                } else {
                    state = next_state;
                }
            }
        }
    }

    Ok(EpisodeMetrics {
        episode,
        coverage: world.coverage(),
        collisions: world.collision_count(),
        steps: world.step(),
        terminal_reason: world.done_reason().expect("loop exits only when done"),
        total_reward,
        epsilon,
        newly_visited,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub episodes: u64,
    pub mini_epochs: u64,
    pub eps0: f64,
    pub eps_decay: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub budget: u32,
    pub master_seed: u64,
    pub time: TimeEncoding,
    /// Room generator settings; the seed field is replaced per episode.
    pub gen: GenConfig,
}

impl TrainConfig {
    /// Long run: 5000 episodes, five mini-epochs, ε_d = 0.9997.
    pub fn standard() -> Self {
        Self {
            episodes: 5000,
            mini_epochs: 5,
            eps0: 1.0,
            eps_decay: 0.9997,
            gamma: DqnHyper::DEFAULT_GAMMA,
            learning_rate: AdamState::DEFAULT_LEARNING_RATE,
            budget: DEFAULT_BUDGET,
            master_seed: 0,
            time: TimeEncoding::Normalized,
            gen: GenConfig::default(),
        }
    }

    /// Desk-scale run: 300 episodes in a single mini-epoch with ε_d = 0.995
    /// and a shorter horizon (γ = 0.9), which learns far faster at this scale.
    pub fn desk() -> Self {
        Self {
            episodes: 300,
            mini_epochs: 1,
            eps_decay: 0.995,
            gamma: 0.9,
            ..Self::standard()
        }
    }

    pub fn schedule(&self) -> Result<EpsilonSchedule, ScheduleError> {
        EpsilonSchedule::new(self.eps0, self.eps_decay, self.mini_epochs, self.episodes)
    }

    pub fn hyper(&self) -> Result<DqnHyper, RunError> {
        Ok(DqnHyper {
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            schedule: self.schedule()?,
            time: self.time,
        })
    }

    pub fn validate(&self) -> Result<(), RunError> {
        self.schedule()?;
        self.gen.validate()?;
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(RunError::Config("gamma must be in [0,1)".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(RunError::Config("learning_rate must be positive".into()));
        }
        if self.budget == 0 {
            return Err(RunError::Config("budget must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::standard()
    }
}

/// Layout of training episode `x`.
pub fn training_layout(master_seed: u64, x: u64, gen: &GenConfig) -> Result<Layout, GenError> {
    generate(&GenConfig {
        seed: derive_seed(master_seed, Stream::TrainLayout, x),
        ..*gen
    })
}

/// Layout of evaluation episode `i`.
pub fn evaluation_layout(master_seed: u64, i: u64, gen: &GenConfig) -> Result<Layout, GenError> {
    generate(&GenConfig {
        seed: derive_seed(master_seed, Stream::EvalLayout, i),
        ..*gen
    })
}

/// Network snapshot taken at the end of a trough episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub episode: u64,
    pub net: DenseNet,
    pub adam: AdamState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub config: TrainConfig,
    pub episodes: Vec<EpisodeMetrics>,
    pub checkpoint_episodes: Vec<u64>,
}

impl TrainingLog {
    pub fn coverage_series(&self) -> Vec<f64> {
        self.episodes.iter().map(|m| m.coverage).collect()
    }

    pub fn collision_series(&self) -> Vec<f64> {
        self.episodes
            .iter()
            .map(|m| f64::from(m.collisions))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub log: TrainingLog,
    pub checkpoints: Vec<Checkpoint>,
    pub agent: DqnAgent,
}

pub fn train(config: &TrainConfig) -> Result<TrainOutcome, RunError> {
    train_with(config, |_| {})
}

/// [`train`], calling `on_episode` after every finished episode.
pub fn train_with<F>(config: &TrainConfig, mut on_episode: F) -> Result<TrainOutcome, RunError>
where
    F: FnMut(&EpisodeMetrics),
{
    config.validate()?;
    let hyper = config.hyper()?;
    let schedule = hyper.schedule;
    let troughs = schedule.trough_episodes();
    let mut agent = DqnAgent::new(derive_seed(config.master_seed, Stream::NetInit, 0), hyper);
    let mut episodes = Vec::with_capacity(config.episodes as usize);
    let mut checkpoints = Vec::with_capacity(troughs.len());

    for x in 0..config.episodes {
        let layout = training_layout(config.master_seed, x, &config.gen)?;
        let policy = Policy::Dqn {
            agent: &mut agent,
            epsilon: schedule.epsilon(x),
            train: true,
        };
        let seed = derive_seed(config.master_seed, Stream::TrainAgent, x);
        let metrics = run_episode(&layout, policy, config.budget, seed, x)?;
        on_episode(&metrics);
        episodes.push(metrics);
        if troughs.binary_search(&x).is_ok() {
            checkpoints.push(Checkpoint {
                episode: x,
                net: agent.net.clone(),
                adam: agent.adam.clone(),
            });
        }
    }

    Ok(TrainOutcome {
        log: TrainingLog {
            config: *config,
            episodes,
            checkpoint_episodes: troughs,
        },
        checkpoints,
        agent,
    })
}

/// Which frozen policy to evaluate.
#[derive(Debug, Clone, Copy)]
pub enum EvalAgent<'a> {
    Baseline,
    UniformRandom,
    Dqn(&'a DqnAgent),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
}

impl Stat {
    /// Mean and population standard deviation, summed in index order.
    pub fn of(values: &[f64]) -> Stat {
        if values.is_empty() {
            return Stat {
                mean: f64::NAN,
                stddev: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Stat {
            mean,
            stddev: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub episodes: usize,
    pub coverage: Stat,
    pub collisions: Stat,
    pub steps: Stat,
    pub total_reward: Stat,
}

impl Summary {
    pub fn of(metrics: &[EpisodeMetrics]) -> Summary {
        let col =
            |f: fn(&EpisodeMetrics) -> f64| Stat::of(&metrics.iter().map(f).collect::<Vec<_>>());
        Summary {
            episodes: metrics.len(),
            coverage: col(|m| m.coverage),
            collisions: col(|m| f64::from(m.collisions)),
            steps: col(|m| f64::from(m.steps)),
            total_reward: col(|m| m.total_reward as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: Vec<EpisodeMetrics>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub episodes: u64,
    pub master_seed: u64,
    pub budget: u32,
    pub gen: GenConfig,
}

impl EvalConfig {
    pub fn new(episodes: u64, master_seed: u64) -> Self {
        Self {
            episodes,
            master_seed,
            budget: DEFAULT_BUDGET,
            gen: GenConfig::default(),
        }
    }
}

/// Runs `config.episodes` frozen-policy episodes (ε = 0 for the DQN) on the
/// evaluation layouts of `config.master_seed`. Episodes run in parallel; the
/// result is ordered by episode index and does not depend on scheduling.
pub fn evaluate(agent: EvalAgent<'_>, config: &EvalConfig) -> Result<EvalReport, RunError> {
    if config.episodes == 0 {
        return Err(RunError::Config("episodes must be at least 1".into()));
    }
    if config.budget == 0 {
        return Err(RunError::Config("budget must be at least 1".into()));
    }
    config.gen.validate()?;
    let episodes = (0..config.episodes)
        .into_par_iter()
        .map(|i| {
            let layout = evaluation_layout(config.master_seed, i, &config.gen)?;
            let seed = derive_seed(config.master_seed, Stream::EvalAgent, i);
            match agent {
                EvalAgent::Baseline => {
                    run_episode(&layout, Policy::Baseline, config.budget, seed, i)
                }
                EvalAgent::UniformRandom => {
                    run_episode(&layout, Policy::UniformRandom, config.budget, seed, i)
                }
                EvalAgent::Dqn(dqn) => {
                    let mut frozen = dqn.clone();
                    let policy = Policy::Dqn {
                        agent: &mut frozen,
                        epsilon: 0.0,
                        train: false,
                    };
                    run_episode(&layout, policy, config.budget, seed, i)
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = Summary::of(&episodes);
    Ok(EvalReport { episodes, summary })
}

/// Trailing mean: element `i` averages `series[i+1-window ..= i]`, or the
/// whole prefix while fewer than `window` values exist.
pub fn running_average(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be at least 1");
    (0..series.len())
        .map(|i| {
            let start = (i + 1).saturating_sub(window);
            // incremental mean keeps a constant window exactly constant
            series[start..=i]
                .iter()
                .enumerate()
                .fold(0.0, |mean, (k, &v)| mean + (v - mean) / (k + 1) as f64)
        })
        .collect()
}
