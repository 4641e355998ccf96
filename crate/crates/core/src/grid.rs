//! Uniform occupancy grids anchored to a world-frame lattice.

use crate::geom::{Rect, Vec2};
use crate::world::ObstacleMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }
}

const SNAP_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    /// World position of the lower-left corner of cell (0, 0).
    pub origin: Vec2,
    blocked: Vec<bool>,
}

impl Grid {
    pub fn new(width: usize, height: usize, cell_size: f64, origin: Vec2) -> Self {
        Grid {
            width,
            height,
            cell_size,
            origin,
            blocked: vec![false; width * height],
        }
    }

    /// Builds a grid covering `region`, snapped outward onto the lattice of
    /// spacing `cell_size` anchored at `lattice_origin`. A cell is blocked
    /// when the cell box inflated by `inflate` meets an obstacle or leaves
    /// the workspace.
    pub fn from_map(
        map: &ObstacleMap,
        lattice_origin: Vec2,
        region: Rect,
        cell_size: f64,
        inflate: f64,
    ) -> Grid {
        let c0 = ((region.min.x - lattice_origin.x) / cell_size + SNAP_EPS).floor();
        let r0 = ((region.min.y - lattice_origin.y) / cell_size + SNAP_EPS).floor();
        let origin = Vec2::new(
            lattice_origin.x + c0 * cell_size,
            lattice_origin.y + r0 * cell_size,
        );
        let width = (((region.max.x - origin.x) / cell_size) - SNAP_EPS).ceil().max(1.0) as usize;
        let height = (((region.max.y - origin.y) / cell_size) - SNAP_EPS).ceil().max(1.0) as usize;
        let mut g = Grid::new(width, height, cell_size, origin);
        for row in 0..height {
            for col in 0..width {
                let c = Cell::new(col, row);
                let r = g.cell_rect(c).inflate(inflate);
                if !map.rect_free(&r) {
                    g.set_blocked(c, true);
                }
            }
        }
        g
    }

    /// Parses a grid from rows of `.` (free) and `@`/`#`/`T` (blocked); the
    /// first string is the top row.
    pub fn from_ascii(rows: &[&str], cell_size: f64) -> Grid {
        let height = rows.len();
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let mut g = Grid::new(width, height, cell_size, Vec2::ZERO);
        for (i, line) in rows.iter().enumerate() {
            let row = height - 1 - i;
            for (col, ch) in line.chars().enumerate() {
                if matches!(ch, '@' | '#' | 'T' | 'O' | 'W') {
                    g.set_blocked(Cell::new(col, row), true);
                }
            }
        }
        g
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    #[inline]
    pub fn contains(&self, c: Cell) -> bool {
        c.col < self.width && c.row < self.height
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        !self.contains(c) || self.blocked[self.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_blocked(c)
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        let i = self.index(c);
        self.blocked[i] = blocked;
    }

    pub fn free_count(&self) -> usize {
        self.blocked.iter().filter(|b| !**b).count()
    }

    pub fn cell_rect(&self, c: Cell) -> Rect {
        let x0 = self.origin.x + c.col as f64 * self.cell_size;
        let y0 = self.origin.y + c.row as f64 * self.cell_size;
        Rect::new(x0, y0, x0 + self.cell_size, y0 + self.cell_size)
    }

    pub fn cell_center(&self, c: Cell) -> Vec2 {
        Vec2::new(
            self.origin.x + (c.col as f64 + 0.5) * self.cell_size,
            self.origin.y + (c.row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width as f64 * self.cell_size,
            self.origin.y + self.height as f64 * self.cell_size,
        )
    }

    /// Cell containing `p`, if inside the grid.
    pub fn world_to_cell(&self, p: Vec2) -> Option<Cell> {
        let fx = ((p.x - self.origin.x) / self.cell_size).floor();
        let fy = ((p.y - self.origin.y) / self.cell_size).floor();
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let c = Cell::new(fx as usize, fy as usize);
        self.contains(c).then_some(c)
    }

    /// Free cell whose center is nearest to `p` (row-major index breaks ties).
    pub fn nearest_free_cell(&self, p: Vec2) -> Option<Cell> {
        (0..self.len())
            .map(|i| self.cell_at(i))
            .filter(|c| self.is_free(*c))
            .min_by(|a, b| {
                self.cell_center(*a)
                    .distance(p)
                    .total_cmp(&self.cell_center(*b).distance(p))
                    .then(self.index(*a).cmp(&self.index(*b)))
            })
    }

    fn offset(&self, c: Cell, dc: i64, dr: i64) -> Option<Cell> {
        let col = c.col as i64 + dc;
        let row = c.row as i64 + dr;
        if col < 0 || row < 0 || col >= self.width as i64 || row >= self.height as i64 {
            return None;
        }
        Some(Cell::new(col as usize, row as usize))
    }

    /// Free 4-connected neighbors in fixed order (E, N, W, S).
    pub fn neighbors4(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        [(1, 0), (0, 1), (-1, 0), (0, -1)]
            .into_iter()
            .filter_map(move |(dc, dr)| self.offset(c, dc, dr))
            .filter(move |n| self.is_free(*n))
    }

    /// Free 8-connected neighbors with step cost. Diagonal moves require both
    /// orthogonally adjacent cells to be free (no corner cutting).
    pub fn neighbors8(&self, c: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const MOVES: [(i64, i64); 8] = [
            (1, 0),
            (1, 1),
            (0, 1),
            (-1, 1),
            (-1, 0),
            (-1, -1),
            (0, -1),
            (1, -1),
        ];
        MOVES.into_iter().filter_map(move |(dc, dr)| {
            let n = self.offset(c, dc, dr)?;
            if self.is_blocked(n) {
                return None;
            }
            if dc != 0 && dr != 0 {
                let a = self.offset(c, dc, 0)?;
                let b = self.offset(c, 0, dr)?;
                if self.is_blocked(a) || self.is_blocked(b) {
                    return None;
                }
                Some((n, std::f64::consts::SQRT_2))
            } else {
                Some((n, 1.0))
            }
        })
    }
}
