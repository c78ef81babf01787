//! The agent's partial map: occupancy from depth scans, frontiers, and
//! known-space distances.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{unit_vector, Cell, DistanceField, GridDims};
use crate::gridworld::{AgentPose, DepthScan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Obstacle,
}

/// Occupancy grid built from scans. Obstacles are sticky: once a cell is an
/// obstacle it never becomes free again.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialMap {
    dims: GridDims,
    state: Vec<CellState>,
}

/// A maximal 8-connected group of free cells that touch unknown space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub id: usize,
    /// Members ordered along the component, end to end.
    pub cells: Vec<Cell>,
    pub midpoint: Cell,
}

impl PartialMap {
    pub fn new(dims: GridDims) -> Self {
        Self {
            dims,
            state: vec![CellState::Unknown; dims.len()],
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn get(&self, cell: Cell) -> CellState {
        self.state[self.dims.index(cell)]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.get(cell) == CellState::Free
    }

    pub fn states(&self) -> &[CellState] {
        &self.state
    }

    /// Sets a cell directly, honoring the sticky-obstacle rule. Returns
    /// whether the cell changed.
    pub fn set(&mut self, cell: Cell, new: CellState) -> bool {
        let i = self.dims.index(cell);
        let old = self.state[i];
        let allowed = matches!(
            (old, new),
            (CellState::Unknown, CellState::Free)
                | (CellState::Unknown, CellState::Obstacle)
                | (CellState::Free, CellState::Obstacle)
        );
        if allowed {
            self.state[i] = new;
        }
        allowed
    }

    pub fn known_count(&self) -> usize {
        self.state.iter().filter(|&&s| s != CellState::Unknown).count()
    }

    /// Raycasts the scan into the map. Cells a ray crosses before its hit
    /// become free; hit cells become obstacles. Returns the distinct cells
    /// this scan saw as free, in first-seen order.
    pub fn integrate_scan(&mut self, pose: AgentPose, scan: &DepthScan) -> Vec<Cell> {
        let origin = pose.position();
        let mut seen = vec![false; self.dims.len()];
        let mut observed = Vec::new();
        let mut mark_free = |map: &mut Self, cell: Cell| {
            map.set(cell, CellState::Free);
            let i = map.dims.index(cell);
            if !seen[i] && map.state[i] == CellState::Free {
                seen[i] = true;
                observed.push(cell);
            }
        };
        if let Some(own) = self.dims.cell_of(origin.0, origin.1) {
            mark_free(self, own);
        }
        let heading = pose.heading.degrees() as f64;
        for ray in &scan.rays {
            let dir = unit_vector(heading + ray.offset_deg);
            let limit = ray.range - 1e-9;
            for (cell, t) in self.dims.ray_cells(origin, dir, ray.range) {
                if t >= limit || Some(cell) == ray.hit_cell {
                    break;
                }
                mark_free(self, cell);
            }
            if let Some(hit) = ray.hit_cell {
                self.set(hit, CellState::Obstacle);
            }
        }
        observed
    }

    fn is_frontier_cell(&self, cell: Cell) -> bool {
        self.is_free(cell) && self.dims.neighbors4(cell).any(|n| self.get(n) == CellState::Unknown)
    }

    /// Frontier components sorted by midpoint `(row, col)`; ids follow that
    /// order.
    pub fn extract_frontiers(&self) -> Vec<Frontier> {
        let n = self.dims.len();
        let is_member: Vec<bool> = (0..n).map(|i| self.is_frontier_cell(self.dims.cell_at(i))).collect();
        let mut visited = vec![false; n];
        let mut out = Vec::new();
        for seed in 0..n {
            if !is_member[seed] || visited[seed] {
                continue;
            }
            let mut component = Vec::new();
            let mut queue = VecDeque::from([seed]);
            visited[seed] = true;
            while let Some(i) = queue.pop_front() {
                let cell = self.dims.cell_at(i);
                component.push(cell);
                for nb in self.dims.neighbors8(cell) {
                    let j = self.dims.index(nb);
                    if is_member[j] && !visited[j] {
                        visited[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            let cells = self.order_component(&component, &is_member);
            let midpoint = cells[(cells.len() - 1) / 2];
            out.push(Frontier { id: 0, cells, midpoint });
        }
        out.sort_by_key(|f| f.midpoint);
        for (id, f) in out.iter_mut().enumerate() {
            f.id = id;
        }
        out
    }

    /// Orders a component by hop distance from one of its far ends, so the
    /// median element is the middle of the boundary.
    fn order_component(&self, component: &[Cell], is_member: &[bool]) -> Vec<Cell> {
        let first = *component.iter().min().expect("non-empty component");
        let hops = self.component_hops(first, is_member);
        let end = *component
            .iter()
            .max_by(|a, b| {
                hops[self.dims.index(**a)]
                    .cmp(&hops[self.dims.index(**b)])
                    .then_with(|| b.cmp(a))
            })
            .unwrap();
        let hops = self.component_hops(end, is_member);
        let mut ordered = component.to_vec();
        ordered.sort_by_key(|c| (hops[self.dims.index(*c)], *c));
        ordered
    }

    fn component_hops(&self, from: Cell, is_member: &[bool]) -> Vec<usize> {
        let mut hops = vec![usize::MAX; self.dims.len()];
        let mut queue = VecDeque::from([from]);
        hops[self.dims.index(from)] = 0;
        while let Some(c) = queue.pop_front() {
            let h = hops[self.dims.index(c)];
            for nb in self.dims.neighbors8(c) {
                let j = self.dims.index(nb);
                if is_member[j] && hops[j] == usize::MAX {
                    hops[j] = h + 1;
                    queue.push_back(nb);
                }
            }
        }
        hops
    }

    /// Known-space distances from `from` to every cell.
    pub fn distance_field(&self, from: Cell) -> DistanceField {
        DistanceField::compute(self.dims, [from], |c| self.is_free(c))
    }

    /// Shortest path length through free cells, or `None` if unreachable.
    pub fn known_distance(&self, from: Cell, to: Cell) -> Option<f64> {
        if !self.is_free(to) {
            return None;
        }
        self.distance_field(from).get(to)
    }
}
