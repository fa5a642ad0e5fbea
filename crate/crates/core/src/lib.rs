//! Coverage path planning in initially unknown grid rooms.
//!
//! A robot starts on its base in a room it has never seen and must drive over
//! every free cell within a fixed step budget. It can drive forward or turn
//! 90° in place, and learns about obstacles only by bumping into them. Two
//! drivers are provided: a bumper-only baseline that spirals out and then
//! random walks ([`baseline`]), and an online deep Q-network ([`dqn`]) trained
//! with a damped raised-cosine exploration schedule.
//!
//! ```
//! use coverbot::envgen::{generate, GenConfig};
//! use coverbot::experiment::{run_episode, Policy};
//!
//! let layout = generate(&GenConfig::with_seed(42)).unwrap();
//! let metrics = run_episode(&layout, Policy::Baseline, 1800, 1, 0).unwrap();
//! assert!(metrics.coverage > 0.0 && metrics.coverage <= 1.0);
//! ```

pub mod baseline;
pub mod checkpoint;
pub mod config;
pub mod dqn;
pub mod envgen;
pub mod experiment;
pub mod layout;
pub mod nn;
pub mod report;
pub mod rng;
pub mod world;

pub use layout::{CellCoord, Layout, Tile};
pub use world::{Action, Heading, Observation, StepOutcome, World};

/// The guide's code blocks, compiled and run as doctests.
#[cfg(doctest)]
mod guide {
    macro_rules! chapter {
        ($name:ident, $file:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        };
    }

    chapter!(introduction, "introduction.md");
    chapter!(world, "world.md");
    chapter!(environments, "environments.md");
    chapter!(baseline, "baseline.md");
    chapter!(network, "network.md");
    chapter!(exploration, "exploration.md");
    chapter!(training, "training.md");
    chapter!(formats, "formats.md");
}
