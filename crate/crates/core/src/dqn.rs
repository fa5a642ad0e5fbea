//! Online deep Q-learning.
//!
//! Each transition is learned from immediately, with no replay buffer and no
//! separate target network: the target `r + γ · max_a' Q(s', a')` comes from
//! the same network that is being updated.
//!
//! Exploration follows a damped raised-cosine schedule,
//!
//! ```text
//! ε(x) = ε₀ · ε_dˣ · ½ · (1 + cos(2π · x · n / X))
//! ```
//!
//! for episode `x` of `X` with `n` mini-epochs. The exponential envelope
//! decays over training while the cosine pulls ε to zero `n` times, once in
//! the middle of every mini-epoch, and lets it rise again afterwards.

use std::f64::consts::PI;

use thiserror::Error;

use crate::nn::{adam_step, masked_l2_grad, AdamState, DenseNet, NnError, QValues, INPUT};
use crate::rng::SimRng;
use crate::world::{Action, Observation, WINDOW};

/// Index of the agent's own cell in an encoded state vector.
pub const CENTER_INDEX: usize = 1 + (WINDOW / 2) * WINDOW + WINDOW / 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("eps0 must be in [0,1]")]
    Eps0,
    #[error("eps_decay must be in (0,1]")]
    Decay,
    #[error("mini_epochs must be at least 1")]
    MiniEpochs,
    #[error("episodes must be at least 1")]
    Episodes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub eps0: f64,
    pub decay: f64,
    pub mini_epochs: u64,
    pub total_episodes: u64,
}

impl EpsilonSchedule {
    pub fn new(
        eps0: f64,
        decay: f64,
        mini_epochs: u64,
        total_episodes: u64,
    ) -> Result<Self, ScheduleError> {
        let s = Self {
            eps0,
            decay,
            mini_epochs,
            total_episodes,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if !(0.0..=1.0).contains(&self.eps0) {
            return Err(ScheduleError::Eps0);
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(ScheduleError::Decay);
        }
        if self.mini_epochs == 0 {
            return Err(ScheduleError::MiniEpochs);
        }
        if self.total_episodes == 0 {
            return Err(ScheduleError::Episodes);
        }
        Ok(())
    }

    /// ε for episode `x`.
    pub fn epsilon(&self, x: u64) -> f64 {
        epsilon(x, self)
    }

    /// Episodes at which ε bottoms out, `round((2k+1)·X / 2n)` for
    /// `k = 0..n`, clamped to the last episode and deduplicated.
    pub fn trough_episodes(&self) -> Vec<u64> {
        let x_total = self.total_episodes;
        let n = self.mini_epochs;
        let mut out: Vec<u64> = (0..n)
            .map(|k| {
                // round-half-up of (2k+1)X / (2n) in integer arithmetic
                let num = (2 * k + 1) * x_total;
                let den = 2 * n;
                ((2 * num + den) / (2 * den)).min(x_total - 1)
            })
            .collect();
        out.dedup();
        out
    }
}

/// The damped raised-cosine exploration rate for episode `x`.
pub fn epsilon(x: u64, s: &EpsilonSchedule) -> f64 {
    // reduce the phase exactly in integers before leaving them
    let phase = ((u128::from(x) * u128::from(s.mini_epochs)) % u128::from(s.total_episodes)) as f64
        / s.total_episodes as f64;
    s.eps0 * s.decay.powf(x as f64) * 0.5 * (1.0 + (2.0 * PI * phase).cos())
}

/// How elapsed time enters the state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeEncoding {
    /// `step / budget`, in [0, 1].
    #[default]
    Normalized,
    /// The raw step count.
    Raw,
}

/// Flattens an observation into the 82-element network input: element 0 is
/// elapsed time, elements 1..=81 the window in row-major order.
pub fn encode(obs: &Observation, budget: u32, time: TimeEncoding) -> Vec<f64> {
    let mut v = Vec::with_capacity(INPUT);
    v.push(match time {
        TimeEncoding::Normalized => f64::from(obs.step) / f64::from(budget),
        TimeEncoding::Raw => f64::from(obs.step),
    });
    v.extend(obs.window.iter().flatten().map(|&c| f64::from(c)));
    v
}

/// Recovers the window from an encoded vector.
pub fn decode_window(v: &[f64]) -> [[i8; WINDOW]; WINDOW] {
    let mut w = [[0i8; WINDOW]; WINDOW];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = v[1 + i * WINDOW + j] as i8;
        }
    }
    w
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &QValues) -> Action {
    let mut best = 0;
    for a in 1..q.len() {
        if q[a] > q[best] {
            best = a;
        }
    }
    Action::from_index(best).expect("q has one entry per action")
}

/// ε-greedy choice. Always consumes one uniform draw, plus one more when
/// exploring.
pub fn select_action(net: &DenseNet, x: &[f64], eps: f64, rng: &mut SimRng) -> Action {
    if rng.unit() < eps {
        Action::ALL[rng.index(Action::COUNT)]
    } else {
        argmax(&net.q_values(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Action,
    pub reward: i8,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DqnHyper {
    pub gamma: f64,
    pub learning_rate: f64,
    pub schedule: EpsilonSchedule,
    pub time: TimeEncoding,
}

impl DqnHyper {
    pub const DEFAULT_GAMMA: f64 = 0.99;
}

/// TD target for a transition under the current network.
pub fn td_target(net: &DenseNet, tr: &Transition, gamma: f64) -> f64 {
    let r = f64::from(tr.reward);
    if tr.terminal {
        return r;
    }
    let next = net.q_values(&tr.next_state);
    r + gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// One online Q-learning step. Returns the loss measured before the update.
pub fn td_update(
    net: &mut DenseNet,
    adam: &mut AdamState,
    tr: &Transition,
    gamma: f64,
) -> Result<f64, NnError> {
    let target = td_target(net, tr, gamma);
    let cache = net.forward(&tr.state);
    let (loss, dq) = masked_l2_grad(&cache.q, tr.action, target);
    let grads = net.backward(&cache, &dq);
    adam_step(net, adam, &grads)?;
    Ok(loss)
}

/// A network, its optimiser and the hyperparameters that drive them.
#[derive(Debug, Clone, PartialEq)]
pub struct DqnAgent {
    pub net: DenseNet,
    pub adam: AdamState,
    pub hyper: DqnHyper,
}

impl DqnAgent {
    pub fn new(net_seed: u64, hyper: DqnHyper) -> Self {
        Self {
            net: DenseNet::new(net_seed),
            adam: AdamState::for_net(hyper.learning_rate),
            hyper,
        }
    }

    pub fn encode(&self, obs: &Observation, budget: u32) -> Vec<f64> {
        encode(obs, budget, self.hyper.time)
    }

    pub fn learn(&mut self, tr: &Transition) -> Result<f64, NnError> {
        td_update(&mut self.net, &mut self.adam, tr, self.hyper.gamma)
    }
}
