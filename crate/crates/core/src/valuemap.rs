//! Two-channel semantic value / confidence map.
//!
//! Each timestep's scalar score is spread over the cells in view, weighted by
//! how close each cell lies to the optical axis. A cell's value is the
//! confidence-weighted mean of everything it has seen, and its confidence is
//! the self-weighted mean of the confidences.

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_diff, bearing, distance, Cell, GridDims};
use crate::gridworld::AgentPose;
use crate::mapping::Frontier;
use crate::PROB_EPSILON;

/// Default neighborhood for reading frontier probabilities, meters.
pub const DEFAULT_READOUT_RADIUS: f64 = 0.5;

/// `cos²` falloff from 1 on the optical axis to 0 at the FOV edge.
pub fn confidence_profile(angle_offset: f64, fov: f64) -> f64 {
    let half = fov / 2.0;
    if !(half > 0.0) || angle_offset.abs() > half {
        return 0.0;
    }
    let c = (angle_offset / half * std::f64::consts::FRAC_PI_2).cos();
    (c * c).clamp(0.0, 1.0)
}

/// One fusion update of `(value, confidence)` with a new observation.
/// A zero-confidence side contributes nothing, so the other pair is returned
/// as is.
pub fn fuse(prev: (f64, f64), curr: (f64, f64)) -> (f64, f64) {
    let (v_prev, c_prev) = prev;
    let (v_curr, c_curr) = curr;
    if c_curr <= 0.0 {
        return prev;
    }
    if c_prev <= 0.0 {
        return curr;
    }
    let total = c_curr + c_prev;
    let v = (c_curr * v_curr + c_prev * v_prev) / total;
    let c = (c_curr * c_curr + c_prev * c_prev) / total;
    (v, c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueMap {
    dims: GridDims,
    value: Vec<f64>,
    confidence: Vec<f64>,
}

impl ValueMap {
    pub fn new(dims: GridDims) -> Self {
        Self {
            dims,
            value: vec![0.0; dims.len()],
            confidence: vec![0.0; dims.len()],
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn value(&self, cell: Cell) -> f64 {
        self.value[self.dims.index(cell)]
    }

    pub fn confidence(&self, cell: Cell) -> f64 {
        self.confidence[self.dims.index(cell)]
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    pub fn confidences(&self) -> &[f64] {
        &self.confidence
    }

    /// Overwrites one cell; used to seed maps in tests and tools.
    pub fn set(&mut self, cell: Cell, value: f64, confidence: f64) {
        let i = self.dims.index(cell);
        self.value[i] = value;
        self.confidence[i] = confidence;
    }

    /// Fuses `score` into every visible cell with confidence taken from the
    /// cell's bearing relative to the heading.
    pub fn fuse_observation(&mut self, pose: AgentPose, fov: f64, score: f64, visible_cells: &[Cell]) {
        let score = score.clamp(0.0, 1.0);
        let heading = pose.heading.degrees() as f64;
        let origin = pose.position();
        for &cell in visible_cells {
            let center = self.dims.center(cell);
            let c_curr = if distance(origin, center) < 1e-12 {
                1.0
            } else {
                confidence_profile(angle_diff(bearing(origin, center), heading), fov)
            };
            let i = self.dims.index(cell);
            let (v, c) = fuse((self.value[i], self.confidence[i]), (score, c_curr));
            self.value[i] = v;
            self.confidence[i] = c;
        }
    }

    /// Largest value among observed cells within `radius` of the frontier
    /// midpoint, clamped to `[ε, 1−ε]`; `ε` when nothing nearby was observed.
    pub fn frontier_probability(&self, frontier: &Frontier, radius: f64) -> f64 {
        let mid = self.dims.center(frontier.midpoint);
        let reach = (radius / self.dims.cell_size).ceil() as isize;
        let mut best: Option<f64> = None;
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let Some(cell) = self.dims.offset(frontier.midpoint, dr, dc) else {
                    continue;
                };
                if distance(self.dims.center(cell), mid) > radius + 1e-12 {
                    continue;
                }
                let i = self.dims.index(cell);
                if self.confidence[i] > 0.0 {
                    best = Some(best.map_or(self.value[i], |b: f64| b.max(self.value[i])));
                }
            }
        }
        best.unwrap_or(PROB_EPSILON).clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Heading;

    #[test]
    fn profile_endpoints() {
        assert_eq!(confidence_profile(0.0, 90.0), 1.0);
        assert!(confidence_profile(45.0, 90.0).abs() < 1e-15);
        assert!(confidence_profile(-45.0, 90.0).abs() < 1e-15);
        assert_eq!(confidence_profile(50.0, 90.0), 0.0);
        assert!((confidence_profile(22.5, 90.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn worked_fusions() {
        let (v, c) = fuse((0.0, 0.0), (0.6, 0.8));
        assert!((v - 0.6).abs() < 1e-12 && (c - 0.8).abs() < 1e-12);
        let (v, c) = fuse((0.8, 0.5), (0.2, 0.5));
        assert!((v - 0.5).abs() < 1e-12 && (c - 0.5).abs() < 1e-12);
        let (v, c) = fuse((0.0, 0.1), (1.0, 0.9));
        assert!((v - 0.9).abs() < 1e-12 && (c - 0.82).abs() < 1e-12);
        assert_eq!(fuse((0.3, 0.0), (0.7, 0.0)), (0.3, 0.0));
    }

    fn frontier_at(cell: Cell) -> Frontier {
        Frontier {
            id: 0,
            cells: vec![cell],
            midpoint: cell,
        }
    }

    #[test]
    fn probability_readout() {
        let dims = GridDims::new(10, 10, 0.25);
        let f = frontier_at(Cell::new(5, 5));
        let mut vm = ValueMap::new(dims);
        assert_eq!(vm.frontier_probability(&f, 0.5), PROB_EPSILON);
        vm.set(Cell::new(5, 6), 0.8, 0.4);
        assert_eq!(vm.frontier_probability(&f, 0.5), 0.8);
        vm.set(Cell::new(4, 5), 0.3, 0.2);
        vm.set(Cell::new(5, 4), 0.75, 0.9);
        vm.set(Cell::new(5, 6), 0.5, 0.1);
        assert_eq!(vm.frontier_probability(&f, 0.5), 0.75);
        // Outside the radius: two cells diagonal is 0.707 m away.
        vm.set(Cell::new(7, 7), 0.95, 1.0);
        assert_eq!(vm.frontier_probability(&f, 0.5), 0.75);
        vm.set(Cell::new(5, 5), 1.0, 1.0);
        assert_eq!(vm.frontier_probability(&f, 0.5), 1.0 - PROB_EPSILON);
    }

    #[test]
    fn fuse_observation_weights_by_bearing() {
        let dims = GridDims::new(20, 20, 0.25);
        let mut vm = ValueMap::new(dims);
        let pose = AgentPose::new(2.625, 2.625, Heading::EAST);
        let ahead = Cell::new(10, 14);
        let edge = Cell::new(14, 14); // 45° off axis
        vm.fuse_observation(pose, 90.0, 0.7, &[ahead, edge]);
        assert_eq!(vm.value(ahead), 0.7);
        assert_eq!(vm.confidence(ahead), 1.0);
        assert!(vm.confidence(edge) < 1e-12);
    }
}
