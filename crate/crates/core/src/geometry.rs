//! Grid geometry shared by the world, the partial map and the value map.
//!
//! Cell `(row, col)` covers `x ∈ [col·s, (col+1)·s)` and `y ∈ [row·s, (row+1)·s)`
//! where `s` is the cell size. Row 0 is the southern edge; headings are
//! measured counterclockwise from +x (east).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

const NEIGHBORS_4: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDims {
    pub width: usize,
    pub height: usize,
    /// Meters per cell side.
    pub cell_size: f64,
}

impl GridDims {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Self {
        Self {
            width,
            height,
            cell_size,
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.width, index % self.width)
    }

    pub fn contains(&self, row: isize, col: isize) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    pub fn offset(&self, cell: Cell, dr: isize, dc: isize) -> Option<Cell> {
        let r = cell.row as isize + dr;
        let c = cell.col as isize + dc;
        self.contains(r, c).then(|| Cell::new(r as usize, c as usize))
    }

    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_4
            .iter()
            .filter_map(move |&(dr, dc)| self.offset(cell, dr, dc))
    }

    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS_8
            .iter()
            .filter_map(move |&(dr, dc)| self.offset(cell, dr, dc))
    }

    /// Cell containing the metric point, if it lies inside the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<Cell> {
        let c = (x / self.cell_size).floor();
        let r = (y / self.cell_size).floor();
        if c < 0.0 || r < 0.0 {
            return None;
        }
        let (r, c) = (r as usize, c as usize);
        (r < self.height && c < self.width).then_some(Cell::new(r, c))
    }

    pub fn center(&self, cell: Cell) -> (f64, f64) {
        (
            (cell.col as f64 + 0.5) * self.cell_size,
            (cell.row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.len()).map(move |i| self.cell_at(i))
    }

    /// Cells pierced by the ray `origin + t·dir` for `t ∈ [0, max_t]`, in order.
    pub fn ray_cells(&self, origin: (f64, f64), dir: (f64, f64), max_t: f64) -> RayCells {
        RayCells::new(*self, origin, dir, max_t)
    }
}

/// Unit direction for a heading in degrees. Multiples of 30° come from an
/// exact table so axis-aligned motion stays on the cell lattice.
pub fn unit_vector(deg: f64) -> (f64, f64) {
    const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;
    const TABLE: [(f64, f64); 12] = [
        (1.0, 0.0),
        (HALF_SQRT3, 0.5),
        (0.5, HALF_SQRT3),
        (0.0, 1.0),
        (-0.5, HALF_SQRT3),
        (-HALF_SQRT3, 0.5),
        (-1.0, 0.0),
        (-HALF_SQRT3, -0.5),
        (-0.5, -HALF_SQRT3),
        (0.0, -1.0),
        (0.5, -HALF_SQRT3),
        (HALF_SQRT3, -0.5),
    ];
    let norm = deg.rem_euclid(360.0);
    if norm.fract() == 0.0 && (norm as u32).is_multiple_of(30) {
        return TABLE[(norm as usize / 30) % 12];
    }
    let rad = norm.to_radians();
    (rad.cos(), rad.sin())
}

/// Signed difference `a − b` wrapped into `(-180, 180]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Bearing from one point to another, degrees in `[0, 360)`.
pub fn bearing(from: (f64, f64), to: (f64, f64)) -> f64 {
    (to.1 - from.1)
        .atan2(to.0 - from.0)
        .to_degrees()
        .rem_euclid(360.0)
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Whether a point moving `len` along `dir` stays on passable cells. The
/// segment may not leave the grid, and where it crosses a cell corner
/// diagonally both side cells must be passable too.
pub fn sweep_clear(
    dims: &GridDims,
    from: (f64, f64),
    dir: (f64, f64),
    len: f64,
    passable: impl Fn(Cell) -> bool,
) -> bool {
    let end = (from.0 + dir.0 * len, from.1 + dir.1 * len);
    match dims.cell_of(end.0, end.1) {
        Some(c) if passable(c) => {}
        _ => return false,
    }
    let mut prev: Option<Cell> = None;
    for (cell, _) in dims.ray_cells(from, dir, len) {
        if !passable(cell) {
            return false;
        }
        if let Some(p) = prev {
            if p.row != cell.row
                && p.col != cell.col
                && (!passable(Cell::new(p.row, cell.col)) || !passable(Cell::new(cell.row, p.col)))
            {
                return false;
            }
        }
        prev = Some(cell);
    }
    true
}

/// Amanatides–Woo grid traversal. Yields `(cell, t_entry)` pairs; the first
/// item is the origin cell with `t_entry = 0`. Stops on leaving the grid or
/// once the entry parameter exceeds `max_t`.
#[derive(Debug, Clone)]
pub struct RayCells {
    dims: GridDims,
    col: isize,
    row: isize,
    step_col: isize,
    step_row: isize,
    t_max_x: f64,
    t_max_y: f64,
    t_delta_x: f64,
    t_delta_y: f64,
    t_entry: f64,
    max_t: f64,
    done: bool,
}

impl RayCells {
    fn new(dims: GridDims, origin: (f64, f64), dir: (f64, f64), max_t: f64) -> Self {
        let s = dims.cell_size;
        let col = (origin.0 / s).floor() as isize;
        let row = (origin.1 / s).floor() as isize;
        let axis = |pos: f64, d: f64, idx: isize| -> (isize, f64, f64) {
            if d > 0.0 {
                (1, ((idx + 1) as f64 * s - pos) / d, s / d)
            } else if d < 0.0 {
                (-1, (idx as f64 * s - pos) / d, -s / d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (step_col, t_max_x, t_delta_x) = axis(origin.0, dir.0, col);
        let (step_row, t_max_y, t_delta_y) = axis(origin.1, dir.1, row);
        Self {
            dims,
            col,
            row,
            step_col,
            step_row,
            t_max_x,
            t_max_y,
            t_delta_x,
            t_delta_y,
            t_entry: 0.0,
            max_t,
            done: false,
        }
    }

    /// Entry parameter of the cell the traversal would yield next. Once the
    /// iterator is exhausted, a value `<= max_t` means the ray left the grid
    /// there.
    pub fn pending_entry(&self) -> f64 {
        self.t_entry
    }
}

impl Iterator for RayCells {
    type Item = (Cell, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done || self.t_entry > self.max_t || !self.dims.contains(self.row, self.col) {
            self.done = true;
            return None;
        }
        let out = (Cell::new(self.row as usize, self.col as usize), self.t_entry);
        if self.t_max_x < self.t_max_y {
            self.col += self.step_col;
            self.t_entry = self.t_max_x;
            self.t_max_x += self.t_delta_x;
        } else if self.t_max_y < self.t_max_x {
            self.row += self.step_row;
            self.t_entry = self.t_max_y;
            self.t_max_y += self.t_delta_y;
        } else if self.t_max_x.is_finite() {
            // Exact corner crossing: the ray passes diagonally.
            self.col += self.step_col;
            self.row += self.step_row;
            self.t_entry = self.t_max_x;
            self.t_max_x += self.t_delta_x;
            self.t_max_y += self.t_delta_y;
        } else {
            self.done = true;
        }
        Some(out)
    }
}

/// Shortest-path distances over passable cells with 8-connectivity. Axis
/// steps cost one cell size, diagonal steps `√2` cell sizes, and a diagonal
/// step is only allowed when both orthogonally adjacent cells are passable.
#[derive(Debug, Clone)]
pub struct DistanceField {
    dims: GridDims,
    dist: Vec<f64>,
    parent: Vec<usize>,
}

const NO_PARENT: usize = usize::MAX;

#[derive(PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl DistanceField {
    /// Multi-source Dijkstra. Sources that are not passable are still
    /// expanded from, which lets callers seed from obstacle-adjacent goals.
    pub fn compute(
        dims: GridDims,
        sources: impl IntoIterator<Item = Cell>,
        passable: impl Fn(Cell) -> bool,
    ) -> Self {
        let n = dims.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![NO_PARENT; n];
        let mut heap = BinaryHeap::new();
        for s in sources {
            let i = dims.index(s);
            if dist[i] > 0.0 {
                dist[i] = 0.0;
                heap.push(HeapEntry(0.0, i));
            }
        }
        let axis = dims.cell_size;
        let diag = dims.cell_size * std::f64::consts::SQRT_2;
        while let Some(HeapEntry(d, i)) = heap.pop() {
            if d > dist[i] {
                continue;
            }
            let cell = dims.cell_at(i);
            for &(dr, dc) in NEIGHBORS_8.iter() {
                let Some(next) = dims.offset(cell, dr, dc) else {
                    continue;
                };
                if !passable(next) {
                    continue;
                }
                let step = if dr != 0 && dc != 0 {
                    let side_a = dims.offset(cell, dr, 0).is_some_and(&passable);
                    let side_b = dims.offset(cell, 0, dc).is_some_and(&passable);
                    if !(side_a && side_b) {
                        continue;
                    }
                    diag
                } else {
                    axis
                };
                let j = dims.index(next);
                let nd = d + step;
                if nd < dist[j] {
                    dist[j] = nd;
                    parent[j] = i;
                    heap.push(HeapEntry(nd, j));
                }
            }
        }
        Self { dims, dist, parent }
    }

    /// Distance in meters, `None` when unreachable.
    pub fn get(&self, cell: Cell) -> Option<f64> {
        let d = self.dist[self.dims.index(cell)];
        d.is_finite().then_some(d)
    }

    pub fn raw(&self) -> &[f64] {
        &self.dist
    }

    /// Cells from the nearest source to `cell`, inclusive at both ends.
    pub fn path_to(&self, cell: Cell) -> Option<Vec<Cell>> {
        self.get(cell)?;
        let mut out = vec![cell];
        let mut i = self.dims.index(cell);
        while self.parent[i] != NO_PARENT {
            i = self.parent[i];
            out.push(self.dims.cell_at(i));
        }
        out.reverse();
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_table_for_turn_quanta() {
        assert_eq!(unit_vector(0.0), (1.0, 0.0));
        assert_eq!(unit_vector(90.0), (0.0, 1.0));
        assert_eq!(unit_vector(-90.0), (0.0, -1.0));
        assert_eq!(unit_vector(390.0), unit_vector(30.0));
        let (x, y) = unit_vector(45.0);
        assert!((x - y).abs() < 1e-15);
    }

    #[test]
    fn angle_diff_wraps() {
        assert_eq!(angle_diff(10.0, 350.0), 20.0);
        assert_eq!(angle_diff(350.0, 10.0), -20.0);
        assert_eq!(angle_diff(180.0, 0.0), 180.0);
        assert_eq!(angle_diff(0.0, 180.0), 180.0);
    }

    #[test]
    fn traversal_along_axis() {
        let dims = GridDims::new(8, 3, 0.25);
        let cells: Vec<_> = dims.ray_cells((0.125, 0.375), (1.0, 0.0), 1.0).collect();
        let cols: Vec<_> = cells.iter().map(|(c, _)| c.col).collect();
        assert_eq!(cols, vec![0, 1, 2, 3, 4]);
        assert!(cells.iter().all(|(c, _)| c.row == 1));
        assert_eq!(cells[1].1, 0.125);
        assert_eq!(cells[4].1, 0.875);
    }

    #[test]
    fn traversal_is_four_connected_except_at_exact_corners() {
        let dims = GridDims::new(20, 20, 0.25);
        let dir = unit_vector(37.0);
        let cells: Vec<_> = dims.ray_cells((0.3, 0.4), dir, 3.0).map(|c| c.0).collect();
        for w in cells.windows(2) {
            let dr = w[0].row.abs_diff(w[1].row);
            let dc = w[0].col.abs_diff(w[1].col);
            assert_eq!(dr + dc, 1);
        }
    }

    #[test]
    fn distance_field_open_grid() {
        let dims = GridDims::new(3, 3, 0.25);
        let field = DistanceField::compute(dims, [Cell::new(0, 0)], |_| true);
        let d = field.get(Cell::new(2, 2)).unwrap();
        assert!((d - 2.0 * std::f64::consts::SQRT_2 * 0.25).abs() < 1e-12);
        assert_eq!(field.path_to(Cell::new(2, 2)).unwrap().len(), 3);
    }

    #[test]
    fn no_corner_cutting() {
        // .#
        // #.   diagonal squeeze between two obstacles is not allowed
        let dims = GridDims::new(2, 2, 0.25);
        let blocked = [Cell::new(0, 1), Cell::new(1, 0)];
        let field = DistanceField::compute(dims, [Cell::new(0, 0)], |c| !blocked.contains(&c));
        assert_eq!(field.get(Cell::new(1, 1)), None);
    }

    #[test]
    fn traversal_stops_at_grid_edge() {
        let dims = GridDims::new(4, 4, 0.25);
        let n = dims.ray_cells((0.125, 0.125), (-1.0, 0.0), 10.0).count();
        assert_eq!(n, 1);
    }
}
