//! Planar geometry: points, the rectangular workspace and its cell grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane, serialized as `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub const fn new(x: [f64; 2], y: [f64; 2]) -> Self {
        Rect { x, y }
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x[0] && p.x <= self.x[1] && p.y >= self.y[0] && p.y <= self.y[1]
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x[0] >= self.x[0]
            && other.x[1] <= self.x[1]
            && other.y[0] >= self.y[0]
            && other.y[1] <= self.y[1]
    }

    fn is_proper(&self) -> bool {
        self.x[0] < self.x[1] && self.y[0] < self.y[1]
    }
}

/// A grid cell, addressed by row (y index) then column (x index).
///
/// The derived ordering is row-major, which is the tie-break order used by
/// every argmax in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

/// The workspace: outer bounds, the region relays may occupy, the grid
/// spacing, and the source/destination positions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub bounds: Rect,
    pub relay_region: Rect,
    pub cell: f64,
    pub p_s: Point,
    pub p_d: Point,
}

impl Workspace {
    /// The 30×30 terrain with unit cells, source at (15, 0), destination at
    /// (15, 30) and relays confined to `[0,30] × [12,18]`.
    pub fn reference() -> Self {
        Workspace {
            bounds: Rect::new([0.0, 30.0], [0.0, 30.0]),
            relay_region: Rect::new([0.0, 30.0], [12.0, 18.0]),
            cell: 1.0,
            p_s: Point::new(15.0, 0.0),
            p_d: Point::new(15.0, 30.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(Error::Config("workspace.cell must be positive".into()));
        }
        if !self.bounds.is_proper() {
            return Err(Error::Config("workspace.bounds must be a proper rectangle".into()));
        }
        if !self.relay_region.is_proper() || !self.bounds.contains_rect(&self.relay_region) {
            return Err(Error::Config(
                "workspace.relay_region must be a proper rectangle inside bounds".into(),
            ));
        }
        if self.relay_region.contains(&self.p_s) {
            return Err(Error::Config("workspace.p_s lies inside relay_region".into()));
        }
        if self.relay_region.contains(&self.p_d) {
            return Err(Error::Config("workspace.p_d lies inside relay_region".into()));
        }
        if self.n_cols() == 0 || self.n_rows() == 0 || self.relay_cells().is_empty() {
            return Err(Error::Config("workspace grid has no relay cells".into()));
        }
        Ok(())
    }

    pub fn n_cols(&self) -> usize {
        ((self.bounds.x[1] - self.bounds.x[0]) / self.cell).round() as usize
    }

    pub fn n_rows(&self) -> usize {
        ((self.bounds.y[1] - self.bounds.y[0]) / self.cell).round() as usize
    }

    pub fn center(&self, c: Cell) -> Point {
        Point::new(
            self.bounds.x[0] + (c.col as f64 + 0.5) * self.cell,
            self.bounds.y[0] + (c.row as f64 + 0.5) * self.cell,
        )
    }

    /// Snaps a point to the grid cell containing it.
    pub fn cell_of(&self, p: Point) -> Option<Cell> {
        if !self.bounds.contains(&p) {
            return None;
        }
        let col = ((p.x - self.bounds.x[0]) / self.cell).floor() as usize;
        let row = ((p.y - self.bounds.y[0]) / self.cell).floor() as usize;
        Some(Cell::new(row.min(self.n_rows() - 1), col.min(self.n_cols() - 1)))
    }

    pub fn in_relay_region(&self, c: Cell) -> bool {
        c.row < self.n_rows() && c.col < self.n_cols() && self.relay_region.contains(&self.center(c))
    }

    /// All cells whose centers lie in the relay region, row-major.
    pub fn relay_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for row in 0..self.n_rows() {
            for col in 0..self.n_cols() {
                let c = Cell::new(row, col);
                if self.in_relay_region(c) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Moore neighbourhood of `c` (itself included) intersected with the
    /// relay region, row-major.
    pub fn neighborhood(&self, c: Cell) -> Vec<Cell> {
        let mut out = Vec::with_capacity(9);
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                let row = c.row as i64 + dr;
                let col = c.col as i64 + dc;
                if row < 0 || col < 0 {
                    continue;
                }
                let n = Cell::new(row as usize, col as usize);
                if self.in_relay_region(n) {
                    out.push(n);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_has_six_relay_rows() {
        let ws = Workspace::reference();
        ws.validate().unwrap();
        assert_eq!(ws.n_cols(), 30);
        assert_eq!(ws.n_rows(), 30);
        let cells = ws.relay_cells();
        assert_eq!(cells.len(), 180);
        assert_eq!(cells[0], Cell::new(12, 0));
        assert_eq!(*cells.last().unwrap(), Cell::new(17, 29));
    }

    #[test]
    fn neighborhood_is_clipped_and_sorted() {
        let ws = Workspace::reference();
        let corner = ws.neighborhood(Cell::new(12, 0));
        assert_eq!(
            corner,
            vec![Cell::new(12, 0), Cell::new(12, 1), Cell::new(13, 0), Cell::new(13, 1)]
        );
        assert_eq!(ws.neighborhood(Cell::new(14, 10)).len(), 9);
    }

    #[test]
    fn snapping_round_trips_centers() {
        let ws = Workspace::reference();
        for c in ws.relay_cells() {
            assert_eq!(ws.cell_of(ws.center(c)), Some(c));
        }
        assert_eq!(ws.cell_of(Point::new(31.0, 2.0)), None);
    }

    #[test]
    fn endpoints_inside_relay_region_are_rejected() {
        let mut ws = Workspace::reference();
        ws.p_s = Point::new(15.0, 15.0);
        assert!(matches!(ws.validate(), Err(Error::Config(_))));
    }
}
