//! Ground-truth room layouts and their text format.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCoord {
    pub row: usize,
    pub col: usize,
}

impl CellCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for CellCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tile {
    Empty,
    Obstacle,
}

/// A rectangular grid of tiles plus the robot's base cell.
///
/// The layout itself enforces only that the base is in bounds. Emptiness of
/// the base and connectivity are checked where a layout is turned into a
/// world, so malformed layouts can still be represented and inspected.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layout {
    rows: usize,
    cols: usize,
    tiles: Vec<Tile>,
    base: CellCoord,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("layout must have at least one row and one column")]
    Empty,
    #[error("tile count {got} does not match {rows}x{cols}")]
    TileCount {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("base {0} lies outside the layout")]
    BaseOutOfBounds(CellCoord),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Layout {
    pub fn new(
        rows: usize,
        cols: usize,
        tiles: Vec<Tile>,
        base: CellCoord,
    ) -> Result<Self, LayoutError> {
        if rows == 0 || cols == 0 {
            return Err(LayoutError::Empty);
        }
        if tiles.len() != rows * cols {
            return Err(LayoutError::TileCount {
                rows,
                cols,
                got: tiles.len(),
            });
        }
        if base.row >= rows || base.col >= cols {
            return Err(LayoutError::BaseOutOfBounds(base));
        }
        Ok(Self {
            rows,
            cols,
            tiles,
            base,
        })
    }

    /// An obstacle-free room.
    pub fn open(rows: usize, cols: usize, base: CellCoord) -> Result<Self, LayoutError> {
        Self::new(rows, cols, vec![Tile::Empty; rows * cols], base)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn base(&self) -> CellCoord {
        self.base
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn contains(&self, c: CellCoord) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    pub fn index(&self, c: CellCoord) -> usize {
        debug_assert!(self.contains(c));
        c.row * self.cols + c.col
    }

    pub fn tile(&self, c: CellCoord) -> Tile {
        self.tiles[self.index(c)]
    }

    pub fn is_obstacle(&self, c: CellCoord) -> bool {
        self.tile(c) == Tile::Obstacle
    }

    pub fn set_tile(&mut self, c: CellCoord, tile: Tile) {
        let i = self.index(c);
        self.tiles[i] = tile;
    }

    pub fn set_base(&mut self, base: CellCoord) -> Result<(), LayoutError> {
        if !self.contains(base) {
            return Err(LayoutError::BaseOutOfBounds(base));
        }
        self.base = base;
        Ok(())
    }

    pub fn empty_count(&self) -> usize {
        self.tiles.iter().filter(|&&t| t == Tile::Empty).count()
    }

    pub fn obstacle_count(&self) -> usize {
        self.tiles.len() - self.empty_count()
    }

    /// In-bounds 4-neighbours of `c`, in N, E, S, W order.
    pub fn neighbours(&self, c: CellCoord) -> impl Iterator<Item = CellCoord> + '_ {
        let candidates = [
            c.row.checked_sub(1).map(|r| CellCoord::new(r, c.col)),
            Some(CellCoord::new(c.row, c.col + 1)),
            Some(CellCoord::new(c.row + 1, c.col)),
            c.col.checked_sub(1).map(|cc| CellCoord::new(c.row, cc)),
        ];
        candidates
            .into_iter()
            .flatten()
            .filter(move |n| self.contains(*n))
    }

    /// Number of empty cells 4-reachable from `start` (0 if `start` is an obstacle).
    pub fn reachable_from(&self, start: CellCoord) -> usize {
        if self.is_obstacle(start) {
            return 0;
        }
        let mut seen = vec![false; self.tiles.len()];
        let mut queue = VecDeque::from([start]);
        seen[self.index(start)] = true;
        let mut count = 0;
        while let Some(c) = queue.pop_front() {
            count += 1;
            for n in self.neighbours(c) {
                let i = self.index(n);
                if !seen[i] && self.tiles[i] == Tile::Empty {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        count
    }

    /// True iff a 4-neighbourhood flood fill from the base reaches every empty cell.
    pub fn is_connected(&self) -> bool {
        self.reachable_from(self.base) == self.empty_count()
    }
}

/// Text form: a header line `rows cols base_row base_col`, then one line per
/// row of `.` (empty) and `x` (obstacle). Every line ends with `\n`.
impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} {} {} {}",
            self.rows, self.cols, self.base.row, self.base.col
        )?;
        for row in self.tiles.chunks(self.cols) {
            let line: String = row
                .iter()
                .map(|t| match t {
                    Tile::Empty => '.',
                    Tile::Obstacle => 'x',
                })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl FromStr for Layout {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = |line: usize, msg: &str| LayoutError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = s.lines();
        let header = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(1, "header must be four non-negative integers"))?;
        let [rows, cols, base_row, base_col] = nums[..] else {
            return Err(parse_err(1, "header must be four non-negative integers"));
        };
        let mut tiles = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| parse_err(r + 2, "missing grid row"))?;
            if line.chars().count() != cols {
                return Err(parse_err(r + 2, "row length does not match column count"));
            }
            for ch in line.chars() {
                tiles.push(match ch {
                    '.' => Tile::Empty,
                    'x' => Tile::Obstacle,
                    _ => return Err(parse_err(r + 2, "expected '.' or 'x'")),
                });
            }
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(parse_err(rows + 2, "trailing content after grid"));
        }
        Layout::new(rows, cols, tiles, CellCoord::new(base_row, base_col))
    }
}
