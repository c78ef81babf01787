//! Local navigation: grid paths to the current subgoal and the discrete
//! action that follows them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_diff, bearing, distance, sweep_clear, unit_vector, Cell, GridDims};
use crate::gridworld::{Action, AgentPose, DepthScan, HitKind, FORWARD_STEP, TURN_STEP};
use crate::mapping::{CellState, PartialMap};

pub const FRONTIER_STOP_RADIUS: f64 = 0.25;
pub const OBJECT_STOP_RADIUS: f64 = 0.9;
/// Half the turn quantum.
pub const ALIGN_TOLERANCE_DEG: f64 = 15.0;
pub const STUCK_THRESHOLD: usize = 3;
/// How many path cells ahead the follower may aim at directly.
const LOOKAHEAD: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum NavError {
    #[error("no known-space path to {0:?}")]
    NoPath(Cell),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalKind {
    Frontier,
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavGoal {
    pub cell: Cell,
    pub kind: GoalKind,
    pub stop_radius: f64,
}

impl NavGoal {
    pub fn frontier(cell: Cell) -> Self {
        Self {
            cell,
            kind: GoalKind::Frontier,
            stop_radius: FRONTIER_STOP_RADIUS,
        }
    }

    pub fn object(cell: Cell) -> Self {
        Self {
            cell,
            kind: GoalKind::Object,
            stop_radius: OBJECT_STOP_RADIUS,
        }
    }

    pub fn reached(&self, dims: &GridDims, pose: AgentPose) -> bool {
        distance(pose.position(), dims.center(self.cell)) <= self.stop_radius
    }
}

/// Shortest known-free path from `from` to the goal, both ends included.
/// Object goals sitting on a non-free cell are approached via their nearest
/// free 8-neighbor.
pub fn plan_path(map: &PartialMap, from: Cell, goal: &NavGoal) -> Result<Vec<Cell>, NavError> {
    let field = map.distance_field(from);
    let dims = map.dims();
    let dest = if map.is_free(goal.cell) {
        field.get(goal.cell).map(|_| goal.cell)
    } else if goal.kind == GoalKind::Object {
        dims.neighbors8(goal.cell)
            .filter(|&c| map.is_free(c))
            .filter_map(|c| field.get(c).map(|d| (d, c)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, c)| c)
    } else {
        None
    };
    dest.and_then(|d| field.path_to(d)).ok_or(NavError::NoPath(goal.cell))
}

fn forward_clear(map: &PartialMap, from: (f64, f64), heading_deg: f64) -> bool {
    sweep_clear(&map.dims(), from, unit_vector(heading_deg), FORWARD_STEP, |c| map.is_free(c))
}

fn segment_clear(map: &PartialMap, from: (f64, f64), to: (f64, f64)) -> bool {
    let len = distance(from, to);
    if len < 1e-12 {
        return true;
    }
    let dir = ((to.0 - from.0) / len, (to.1 - from.1) / len);
    sweep_clear(&map.dims(), from, dir, len, |c| map.is_free(c))
}

/// The point the follower steers at: the farthest of the next few path
/// cells that is in straight known-free view, else the next path cell.
pub fn steering_point(map: &PartialMap, pose: AgentPose, path: &[Cell]) -> (f64, f64) {
    let dims = map.dims();
    if path.len() <= 1 {
        return dims.center(*path.first().expect("non-empty path"));
    }
    let here = pose.position();
    let last = path.len().min(LOOKAHEAD + 1) - 1;
    (2..=last)
        .rev()
        .map(|i| dims.center(path[i]))
        .find(|&p| segment_clear(map, here, p))
        .unwrap_or_else(|| dims.center(path[1]))
}

/// Heading (multiple of the turn quantum) the agent should move along.
/// Nominally the quantum nearest the bearing to the steering point; when
/// that move would sweep through cells not known to be free, the nearest
/// safe alternative within 60° that still closes distance is used.
pub fn desired_heading(map: &PartialMap, pose: AgentPose, target: (f64, f64)) -> u16 {
    let here = pose.position();
    let b = bearing(here, target);
    let quantum = TURN_STEP as f64;
    let current = pose.heading.degrees() as f64;
    let nominal = if angle_diff(b, current).abs() <= ALIGN_TOLERANCE_DEG {
        current
    } else {
        ((b / quantum).round() * quantum).rem_euclid(360.0)
    };
    if forward_clear(map, here, nominal) {
        return nominal as u16;
    }
    let now = distance(here, target);
    let mut alternatives: Vec<f64> = [-2.0, -1.0, 1.0, 2.0]
        .iter()
        .map(|k| (nominal + k * quantum).rem_euclid(360.0))
        .collect();
    alternatives.sort_by(|x, y| {
        angle_diff(*x, b)
            .abs()
            .total_cmp(&angle_diff(*y, b).abs())
            .then(x.total_cmp(y))
    });
    alternatives
        .into_iter()
        .find(|&h| {
            let u = unit_vector(h);
            let end = (here.0 + u.0 * FORWARD_STEP, here.1 + u.1 * FORWARD_STEP);
            forward_clear(map, here, h) && distance(end, target) < now
        })
        .unwrap_or(nominal) as u16
}

/// Discrete action toward the goal along `path` (which starts at the
/// agent's cell).
pub fn next_action(map: &PartialMap, pose: AgentPose, path: &[Cell], goal: &NavGoal) -> Action {
    let dims = map.dims();
    if goal.kind == GoalKind::Object && goal.reached(&dims, pose) {
        return Action::Stop;
    }
    let target = steering_point(map, pose, path);
    let want = desired_heading(map, pose, target) as f64;
    let diff = angle_diff(want, pose.heading.degrees() as f64);
    if diff.abs() <= ALIGN_TOLERANCE_DEG {
        Action::MoveForward
    } else if diff > 0.0 {
        Action::TurnLeft
    } else {
        Action::TurnRight
    }
}

/// Object goal at the nearest target hit, or `None` if the scan saw none.
pub fn goal_from_detection(scan: &DepthScan) -> Option<NavGoal> {
    scan.rays
        .iter()
        .filter(|r| r.kind == HitKind::Target)
        .filter_map(|r| r.hit_cell.map(|c| (r.range, c)))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, cell)| NavGoal::object(cell))
}

/// Counts consecutive blocked forward moves.
#[derive(Debug, Clone, Default)]
pub struct StuckMonitor {
    consecutive: usize,
}

impl StuckMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, action: Action, collided: bool) {
        if action == Action::MoveForward && collided {
            self.consecutive += 1;
        } else if action == Action::MoveForward {
            self.consecutive = 0;
        }
    }

    pub fn consecutive(&self) -> usize {
        self.consecutive
    }

    /// After enough blocked moves, marks the first cell ahead as an obstacle
    /// and resets. Returns `Some(patched)` (`None` inside when nothing could
    /// be marked) whenever a replan should follow.
    pub fn recover_if_stuck(&mut self, pose: AgentPose, map: &mut PartialMap) -> Option<Option<Cell>> {
        if self.consecutive < STUCK_THRESHOLD {
            return None;
        }
        self.consecutive = 0;
        let dims = map.dims();
        let own = dims.cell_of(pose.x, pose.y);
        let dir = pose.heading.unit();
        let ahead = dims
            .ray_cells(pose.position(), dir, FORWARD_STEP)
            .map(|(c, _)| c)
            .find(|&c| Some(c) != own)
            .or_else(|| {
                let p = (pose.x + dir.0 * 2.0 * FORWARD_STEP, pose.y + dir.1 * 2.0 * FORWARD_STEP);
                dims.cell_of(p.0, p.1).filter(|&c| Some(c) != own)
            });
        if let Some(cell) = ahead {
            map.set(cell, CellState::Obstacle);
        }
        Some(ahead)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Heading;

    fn map_from(rows: &[&str]) -> PartialMap {
        let h = rows.len();
        let mut m = PartialMap::new(GridDims::new(rows[0].len(), h, 0.25));
        for (i, line) in rows.iter().enumerate() {
            for (c, ch) in line.chars().enumerate() {
                let cell = Cell::new(h - 1 - i, c);
                match ch {
                    '.' => m.set(cell, CellState::Free),
                    '#' => m.set(cell, CellState::Obstacle),
                    _ => false,
                };
            }
        }
        m
    }

    #[test]
    fn corridor_path_is_straight() {
        let m = map_from(&["..........", "..........", ".........."]);
        let p = plan_path(&m, Cell::new(1, 0), &NavGoal::frontier(Cell::new(1, 9))).unwrap();
        assert_eq!(p.len(), 10);
        assert!(p.iter().all(|c| c.row == 1));
    }

    #[test]
    fn sealed_goal_has_no_path() {
        let m = map_from(&["..#..", "..#..", "..#.."]);
        assert_eq!(
            plan_path(&m, Cell::new(0, 0), &NavGoal::frontier(Cell::new(0, 4))),
            Err(NavError::NoPath(Cell::new(0, 4)))
        );
    }

    #[test]
    fn object_goal_approaches_neighbor() {
        let m = map_from(&[".....", "....#", "....."]);
        let p = plan_path(&m, Cell::new(1, 0), &NavGoal::object(Cell::new(1, 4))).unwrap();
        assert_eq!(*p.last().unwrap(), Cell::new(1, 3));
    }

    #[test]
    fn actions() {
        let m = map_from(&["..........", "..........", "..........", ".........."]);
        let pose = AgentPose::new(0.125, 0.375, Heading::EAST);
        let path: Vec<Cell> = (0..10).map(|c| Cell::new(1, c)).collect();
        let goal = NavGoal::frontier(Cell::new(1, 9));
        assert_eq!(next_action(&m, pose, &path, &goal), Action::MoveForward);

        // Waypoint at +40° relative: two rows up, roughly two columns over.
        let pose = AgentPose::new(0.125, 0.125, Heading::EAST);
        let path = vec![Cell::new(0, 0), Cell::new(1, 1), Cell::new(2, 2)];
        let b = bearing(pose.position(), m.dims().center(Cell::new(2, 2)));
        assert!(b > 15.0);
        assert_eq!(next_action(&m, pose, &path, &NavGoal::frontier(Cell::new(2, 2))), Action::TurnLeft);

        let goal = NavGoal::object(Cell::new(1, 5));
        let (gx, gy) = m.dims().center(goal.cell);
        let pose = AgentPose::new(gx - 0.8, gy, Heading::EAST);
        assert_eq!(next_action(&m, pose, &[Cell::new(1, 2)], &goal), Action::Stop);
        let far = AgentPose::new(gx - 1.0, gy, Heading::EAST);
        assert_ne!(next_action(&m, far, &[Cell::new(1, 1), Cell::new(1, 2)], &goal), Action::Stop);
    }

    #[test]
    fn frontier_goal_never_stops() {
        let m = map_from(&["...", "...", "..."]);
        let goal = NavGoal::frontier(Cell::new(1, 1));
        let pose = AgentPose::new(0.375, 0.375, Heading::EAST);
        assert_ne!(next_action(&m, pose, &[Cell::new(1, 1)], &goal), Action::Stop);
    }

    #[test]
    fn stuck_threshold() {
        let mut m = map_from(&["....", "....", "...."]);
        let pose = AgentPose::new(0.375, 0.375, Heading::EAST);
        let mut s = StuckMonitor::new();
        s.record(Action::MoveForward, true);
        s.record(Action::MoveForward, true);
        s.record(Action::MoveForward, false);
        assert_eq!(s.recover_if_stuck(pose, &mut m), None);
        for _ in 0..3 {
            s.record(Action::MoveForward, true);
        }
        assert_eq!(s.recover_if_stuck(pose, &mut m), Some(Some(Cell::new(1, 2))));
        assert_eq!(m.get(Cell::new(1, 2)), CellState::Obstacle);
        assert_eq!(s.consecutive(), 0);
    }
}
