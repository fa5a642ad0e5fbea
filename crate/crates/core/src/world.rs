//! Grid world dynamics: poses, actions, the bumper observation model, rewards
//! and coverage accounting.
//!
//! The agent starts on its base knowing nothing else about the room. Driving
//! forward into a free cell moves it there and reveals the cell as empty;
//! driving into an obstacle bumps it, reveals the obstacle and leaves the
//! agent in place. The outer edge of the layout is an implicit wall: bumping
//! it costs a collision but reveals nothing, since there is no cell to mark.
//!
//! Rewards are +1 for entering a cell for the first time, −1 for a bump and 0
//! for everything else (turns and revisits). Every action is one time step.

use std::fmt;

use thiserror::Error;

use crate::layout::{CellCoord, Layout, Tile};

pub const DEFAULT_BUDGET: u32 = 1800;

/// Side length of the egocentric observation window.
pub const WINDOW: usize = 9;
const HALF: isize = (WINDOW / 2) as isize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    pub fn left(self) -> Self {
        match self {
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
            Heading::East => Heading::North,
        }
    }

    pub fn right(self) -> Self {
        match self {
            Heading::North => Heading::East,
            Heading::East => Heading::South,
            Heading::South => Heading::West,
            Heading::West => Heading::North,
        }
    }

    /// (row, col) displacement of one forward move.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Heading::North => (-1, 0),
            Heading::East => (0, 1),
            Heading::South => (1, 0),
            Heading::West => (0, -1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Forward = 0,
    TurnLeft = 1,
    TurnRight = 2,
}

impl Action {
    pub const COUNT: usize = 3;
    pub const ALL: [Action; 3] = [Action::Forward, Action::TurnLeft, Action::TurnRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_turn(self) -> bool {
        self != Action::Forward
    }
}

/// What the agent knows about one cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KnowledgeCell {
    Unobserved,
    Empty { visited: bool },
    Obstacle,
    Base,
}

impl KnowledgeCell {
    /// Network-facing code: −1 unobserved, 0 empty, 1 obstacle, 2 base.
    /// The visited flag is deliberately dropped.
    pub fn code(self) -> i8 {
        match self {
            KnowledgeCell::Unobserved => -1,
            KnowledgeCell::Empty { .. } => 0,
            KnowledgeCell::Obstacle => 1,
            KnowledgeCell::Base => 2,
        }
    }

    pub fn is_visited(self) -> bool {
        matches!(
            self,
            KnowledgeCell::Base | KnowledgeCell::Empty { visited: true }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DoneReason {
    BudgetExhausted,
    FullCoverage,
}

impl DoneReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DoneReason::BudgetExhausted => "budget_exhausted",
            DoneReason::FullCoverage => "full_coverage",
        }
    }
}

impl fmt::Display for DoneReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub reward: i8,
    pub collided: bool,
    pub newly_visited: bool,
    pub done: bool,
    pub done_reason: Option<DoneReason>,
}

/// Agent-visible state: elapsed steps plus the egocentric knowledge window.
///
/// Row 0 of `window` is the row furthest ahead of the agent, column 0 is
/// furthest to its left, and the agent sits at `[4][4]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub step: u32,
    pub window: [[i8; WINDOW]; WINDOW],
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WorldError {
    #[error("base {0} is outside the layout")]
    BaseOutOfBounds(CellCoord),
    #[error("base {0} is on an obstacle")]
    BaseOnObstacle(CellCoord),
    #[error("empty cells are not all reachable from the base")]
    Disconnected,
    #[error("step budget must be at least 1")]
    ZeroBudget,
    #[error("episode already finished ({0})")]
    Finished(DoneReason),
}

#[derive(Debug, Clone)]
pub struct World {
    layout: Layout,
    knowledge: Vec<KnowledgeCell>,
    position: CellCoord,
    heading: Heading,
    step: u32,
    budget: u32,
    visited_count: usize,
    empty_count: usize,
    collision_count: u32,
}

impl World {
    /// Places the agent on the layout's base, facing north.
    pub fn new(layout: Layout, budget: u32) -> Result<Self, WorldError> {
        let base = layout.base();
        if !layout.contains(base) {
            return Err(WorldError::BaseOutOfBounds(base));
        }
        if layout.is_obstacle(base) {
            return Err(WorldError::BaseOnObstacle(base));
        }
        if !layout.is_connected() {
            return Err(WorldError::Disconnected);
        }
        if budget == 0 {
            return Err(WorldError::ZeroBudget);
        }
        let mut knowledge = vec![KnowledgeCell::Unobserved; layout.rows() * layout.cols()];
        knowledge[layout.index(base)] = KnowledgeCell::Base;
        let empty_count = layout.empty_count();
        Ok(Self {
            layout,
            knowledge,
            position: base,
            heading: Heading::North,
            step: 0,
            budget,
            visited_count: 1,
            empty_count,
            collision_count: 0,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn base(&self) -> CellCoord {
        self.layout.base()
    }

    pub fn position(&self) -> CellCoord {
        self.position
    }

    pub fn heading(&self) -> Heading {
        self.heading
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn budget(&self) -> u32 {
        self.budget
    }

    pub fn visited_count(&self) -> usize {
        self.visited_count
    }

    pub fn empty_count(&self) -> usize {
        self.empty_count
    }

    pub fn collision_count(&self) -> u32 {
        self.collision_count
    }

    pub fn knowledge(&self, c: CellCoord) -> KnowledgeCell {
        self.knowledge[self.layout.index(c)]
    }

    /// Fraction of empty cells visited so far.
    pub fn coverage(&self) -> f64 {
        self.visited_count as f64 / self.empty_count as f64
    }

    pub fn done_reason(&self) -> Option<DoneReason> {
        if self.visited_count == self.empty_count {
            Some(DoneReason::FullCoverage)
        } else if self.step >= self.budget {
            Some(DoneReason::BudgetExhausted)
        } else {
            None
        }
    }

    pub fn is_done(&self) -> bool {
        self.done_reason().is_some()
    }

    /// Test and tooling hook: put the agent at an arbitrary empty cell and
    /// heading without touching knowledge or counters.
    pub fn set_pose(&mut self, position: CellCoord, heading: Heading) {
        assert!(
            self.layout.contains(position) && !self.layout.is_obstacle(position),
            "pose must be on an empty cell"
        );
        self.position = position;
        self.heading = heading;
    }

    fn offset(&self, from: CellCoord, dr: isize, dc: isize) -> Option<CellCoord> {
        let r = from.row as isize + dr;
        let c = from.col as isize + dc;
        if r < 0 || c < 0 {
            return None;
        }
        let cell = CellCoord::new(r as usize, c as usize);
        self.layout.contains(cell).then_some(cell)
    }

    pub fn apply_action(&mut self, action: Action) -> Result<StepOutcome, WorldError> {
        if let Some(reason) = self.done_reason() {
            return Err(WorldError::Finished(reason));
        }
        self.step += 1;
        let mut reward = 0;
        match action {
            Action::TurnLeft => self.heading = self.heading.left(),
            Action::TurnRight => self.heading = self.heading.right(),
            Action::Forward => {
                let (dr, dc) = self.heading.delta();
                match self.offset(self.position, dr, dc) {
                    None => {
                        self.collision_count += 1;
                        reward = -1;
                    }
                    Some(target) if self.layout.tile(target) == Tile::Obstacle => {
                        let i = self.layout.index(target);
                        self.knowledge[i] = KnowledgeCell::Obstacle;
                        self.collision_count += 1;
                        reward = -1;
                    }
                    Some(target) => {
                        let i = self.layout.index(target);
                        let cell = &mut self.knowledge[i];
                        if !cell.is_visited() {
                            *cell = KnowledgeCell::Empty { visited: true };
                            self.visited_count += 1;
                            reward = 1;
                        }
                        self.position = target;
                    }
                }
            }
        }
        let done_reason = self.done_reason();
        Ok(StepOutcome {
            reward,
            collided: reward == -1,
            newly_visited: reward == 1,
            done: done_reason.is_some(),
            done_reason,
        })
    }

    /// The 9×9 knowledge window around the agent, turned so its heading points
    /// to row 0. Cells outside the layout read as unobserved.
    pub fn observe(&self) -> Observation {
        let (fr, fc) = self.heading.delta();
        let (rr, rc) = self.heading.right().delta();
        let mut window = [[KnowledgeCell::Unobserved.code(); WINDOW]; WINDOW];
        for (i, row) in window.iter_mut().enumerate() {
            let ahead = HALF - i as isize;
            for (j, slot) in row.iter_mut().enumerate() {
                let right = j as isize - HALF;
                let dr = ahead * fr + right * rr;
                let dc = ahead * fc + right * rc;
                if let Some(cell) = self.offset(self.position, dr, dc) {
                    *slot = self.knowledge(cell).code();
                }
            }
        }
        Observation {
            step: self.step,
            window,
        }
    }
}
