//! Procedural room generation.
//!
//! A room is a rectangle of 10 to 20 cells per side. Up to six pieces of
//! furniture, each drawn from a fixed catalog of 17 shapes, are dropped at
//! random positions in one of four orientations. A placement that overlaps
//! earlier furniture or splits the free floor into more than one region is
//! redrawn, at most [`PLACEMENT_RETRIES`] times, after which that piece is
//! skipped. The base is then picked uniformly among the free cells.
//!
//! Every draw comes from one [`SimRng`] seeded with `GenConfig::seed`, in
//! this order: rows, cols, piece count, then per piece its catalog id and
//! per attempt its rotation, top row and left column, and finally the base.

use std::sync::OnceLock;

use thiserror::Error;

use crate::layout::{CellCoord, Layout, Tile};
use crate::rng::SimRng;

pub const CATALOG_SIZE: usize = 17;
pub const PLACEMENT_RETRIES: usize = 50;

/// One furniture shape. `cells` is a row-major occupancy mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FurniturePiece {
    pub id: usize,
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<bool>,
}

impl FurniturePiece {
    fn from_rows(id: usize, name: &'static str, art: &[&str]) -> Self {
        let rows = art.len();
        let cols = art[0].len();
        let cells = art
            .iter()
            .flat_map(|line| {
                assert_eq!(line.len(), cols);
                line.chars().map(|ch| ch == '#')
            })
            .collect();
        Self {
            id,
            name,
            rows,
            cols,
            cells,
        }
    }

    pub fn occupied(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn area(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// The mask turned clockwise by `quarter_turns` × 90°.
    pub fn rotated(&self, quarter_turns: u8) -> FurniturePiece {
        let mut piece = self.clone();
        for _ in 0..quarter_turns % 4 {
            let (h, w) = (piece.rows, piece.cols);
            let mut cells = vec![false; h * w];
            for r in 0..w {
                for c in 0..h {
                    cells[r * h + c] = piece.occupied(h - 1 - c, r);
                }
            }
            piece = FurniturePiece {
                rows: w,
                cols: h,
                cells,
                ..piece
            };
        }
        piece
    }
}

/// The fixed 17-piece catalog: ten solid rectangles from 1×1 to 4×4, then
/// seven irregular shapes.
pub fn furniture_catalog() -> &'static [FurniturePiece] {
    static CATALOG: OnceLock<Vec<FurniturePiece>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let shapes: [(&str, &[&str]); CATALOG_SIZE] = [
            ("block 1x1", &["#"]),
            ("bar 1x2", &["##"]),
            ("bar 1x3", &["###"]),
            ("bar 1x4", &["####"]),
            ("block 2x2", &["##", "##"]),
            ("block 2x3", &["###", "###"]),
            ("block 2x4", &["####", "####"]),
            ("block 3x3", &["###", "###", "###"]),
            ("block 3x4", &["####", "####", "####"]),
            ("block 4x4", &["####", "####", "####", "####"]),
            ("L", &["#..", "#..", "###"]),
            ("T", &["###", ".#.", ".#."]),
            ("S", &[".##", "##."]),
            ("Z", &["##.", ".##"]),
            ("U", &["#.#", "#.#", "###"]),
            ("plus", &[".#.", "###", ".#."]),
            ("H", &["#.#", "###", "#.#"]),
        ];
        shapes
            .iter()
            .enumerate()
            .map(|(id, (name, art))| FurniturePiece::from_rows(id, name, art))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub min_dim: usize,
    pub max_dim: usize,
    pub max_pieces: usize,
    pub seed: u64,
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if !(10 <= self.min_dim && self.min_dim <= self.max_dim && self.max_dim <= 20) {
            return Err(GenError::Dimensions {
                min: self.min_dim,
                max: self.max_dim,
            });
        }
        if self.max_pieces > 6 {
            return Err(GenError::TooManyPieces(self.max_pieces));
        }
        Ok(())
    }
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            min_dim: 10,
            max_dim: 20,
            max_pieces: 6,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("room dimensions must satisfy 10 <= min_dim <= max_dim <= 20 (got {min}..={max})")]
    Dimensions { min: usize, max: usize },
    #[error("at most 6 furniture pieces may be placed (got {0})")]
    TooManyPieces(usize),
}

/// Where one piece of furniture ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub piece: usize,
    pub quarter_turns: u8,
    pub top: usize,
    pub left: usize,
}

/// A generated room together with the furniture that was placed in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub layout: Layout,
    pub placements: Vec<Placement>,
    /// Number of pieces drawn, including skipped ones.
    pub requested: usize,
}

pub fn generate(config: &GenConfig) -> Result<Layout, GenError> {
    generate_detailed(config).map(|g| g.layout)
}

/// Same as [`generate`], also reporting the individual placements.
pub fn generate_detailed(config: &GenConfig) -> Result<Generated, GenError> {
    config.validate()?;
    let mut rng = SimRng::new(config.seed);
    let rows = rng.range_inclusive(config.min_dim as u64, config.max_dim as u64) as usize;
    let cols = rng.range_inclusive(config.min_dim as u64, config.max_dim as u64) as usize;
    let requested = rng.range_inclusive(0, config.max_pieces as u64) as usize;

    let origin = CellCoord::new(0, 0);
    let mut layout = Layout::open(rows, cols, origin).expect("dimensions are validated");
    let catalog = furniture_catalog();
    let mut placements = Vec::with_capacity(requested);

    for _ in 0..requested {
        let piece_id = rng.index(catalog.len());
        for _ in 0..PLACEMENT_RETRIES {
            let quarter_turns = rng.below(4) as u8;
            let shape = catalog[piece_id].rotated(quarter_turns);
            let top = rng.index(rows - shape.rows + 1);
            let left = rng.index(cols - shape.cols + 1);
            if try_place(&mut layout, &shape, top, left) {
                placements.push(Placement {
                    piece: piece_id,
                    quarter_turns,
                    top,
                    left,
                });
                break;
            }
        }
    }

    let free: Vec<CellCoord> = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| CellCoord::new(r, c)))
        .filter(|&c| !layout.is_obstacle(c))
        .collect();
    let base = free[rng.index(free.len())];
    layout.set_base(base).expect("base is in bounds");

    Ok(Generated {
        layout,
        placements,
        requested,
    })
}

/// Stamps `shape` at (`top`, `left`) unless it would overlap furniture or
/// disconnect the free floor; on rejection the layout is left untouched.
fn try_place(layout: &mut Layout, shape: &FurniturePiece, top: usize, left: usize) -> bool {
    let cells: Vec<CellCoord> = (0..shape.rows)
        .flat_map(|r| (0..shape.cols).map(move |c| (r, c)))
        .filter(|&(r, c)| shape.occupied(r, c))
        .map(|(r, c)| CellCoord::new(top + r, left + c))
        .collect();
    if cells.iter().any(|&c| layout.is_obstacle(c)) {
        return false;
    }
    for &c in &cells {
        layout.set_tile(c, Tile::Obstacle);
    }
    let free = layout.empty_count();
    let start = (0..layout.rows())
        .flat_map(|r| (0..layout.cols()).map(move |c| CellCoord::new(r, c)))
        .find(|&c| !layout.is_obstacle(c));
    let connected = match start {
        Some(s) => layout.reachable_from(s) == free,
        None => false,
    };
    if !connected {
        for &c in &cells {
            layout.set_tile(c, Tile::Empty);
        }
    }
    connected
}
