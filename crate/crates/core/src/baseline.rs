//! Bumper-only baseline robot.
//!
//! The robot spirals outward from its base (forward runs of 1, 1, 2, 2, 3,
//! 3, … cells, each followed by one 90° turn in a direction fixed for the
//! episode) until it first bumps into something. From then on it random
//! walks: drive forward until a bump, then turn left or right with equal
//! probability. When the drive straight after a turn bumps again, the robot
//! keeps turning the same way, which gets it out of any dead end within
//! three turns.
//!
//! The policy sees nothing but the outcome of its previous action.

use crate::rng::SimRng;
use crate::world::{Action, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Spiral,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TurnDirection {
    Left,
    Right,
}

impl TurnDirection {
    pub fn action(self) -> Action {
        match self {
            TurnDirection::Left => Action::TurnLeft,
            TurnDirection::Right => Action::TurnRight,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BaselineState {
    mode: Mode,
    leg_length: u32,
    steps_remaining: u32,
    legs_at_length: u8,
    turn_direction: TurnDirection,
    last_emitted: Option<Action>,
    /// Turn emitted right before the most recent forward, if any.
    turn_before_forward: Option<Action>,
    rng: SimRng,
}

impl BaselineState {
    /// Fresh state; the spiral's turn direction is drawn from `seed`.
    pub fn new(seed: u64) -> Self {
        let mut rng = SimRng::new(seed);
        let turn_direction = if rng.coin() {
            TurnDirection::Right
        } else {
            TurnDirection::Left
        };
        Self::with_turn_direction(turn_direction, rng)
    }

    pub fn with_turn_direction(turn_direction: TurnDirection, rng: SimRng) -> Self {
        Self {
            mode: Mode::Spiral,
            leg_length: 1,
            steps_remaining: 1,
            legs_at_length: 0,
            turn_direction,
            last_emitted: None,
            turn_before_forward: None,
            rng,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn leg_length(&self) -> u32 {
        self.leg_length
    }

    pub fn turn_direction(&self) -> TurnDirection {
        self.turn_direction
    }

    /// Next action given the outcome of the previous one (`None` at the start
    /// of an episode).
    pub fn next_action(&mut self, last_outcome: Option<&StepOutcome>) -> Action {
        let collided = last_outcome.is_some_and(|o| o.collided);
        if self.mode == Mode::Spiral && collided {
            self.mode = Mode::RandomWalk;
        }
        let action = match self.mode {
            Mode::Spiral => self.spiral_next(),
            Mode::RandomWalk => self.random_walk_next(last_outcome),
        };
        if action == Action::Forward {
            self.turn_before_forward = self.last_emitted.filter(|a| a.is_turn());
        }
        self.last_emitted = Some(action);
        action
    }

    /// One step of the square spiral.
    pub fn spiral_next(&mut self) -> Action {
        debug_assert_eq!(self.mode, Mode::Spiral);
        if self.steps_remaining > 0 {
            self.steps_remaining -= 1;
            return Action::Forward;
        }
        self.legs_at_length += 1;
        if self.legs_at_length == 2 {
            self.legs_at_length = 0;
            self.leg_length += 1;
        }
        self.steps_remaining = self.leg_length;
        self.turn_direction.action()
    }

    /// One step of the bump-and-turn random walk.
    pub fn random_walk_next(&mut self, last_outcome: Option<&StepOutcome>) -> Action {
        debug_assert_eq!(self.mode, Mode::RandomWalk);
        if !last_outcome.is_some_and(|o| o.collided) {
            return Action::Forward;
        }
        // A bump on the forward right after a turn keeps turning that way.
        match self.turn_before_forward {
            Some(turn) => turn,
            None if self.rng.coin() => Action::TurnRight,
            None => Action::TurnLeft,
        }
    }
}

/// Pairs a [`BaselineState`] with the outcome of its previous action.
#[derive(Debug, Clone)]
pub struct BaselineAgent {
    state: BaselineState,
    last: Option<StepOutcome>,
}

impl BaselineAgent {
    pub fn new(seed: u64) -> Self {
        Self::from_state(BaselineState::new(seed))
    }

    pub fn from_state(state: BaselineState) -> Self {
        Self { state, last: None }
    }

    pub fn state(&self) -> &BaselineState {
        &self.state
    }

    pub fn act(&mut self) -> Action {
        self.state.next_action(self.last.as_ref())
    }

    pub fn record(&mut self, outcome: StepOutcome) {
        self.last = Some(outcome);
    }
}
