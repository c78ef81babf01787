//! Ground-truth environment: layout, kinematics, depth sensing and success.

mod generate;
mod scenario;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, sweep_clear, unit_vector, Cell, DistanceField, GridDims};

pub use generate::{generate_scenario, GenParams};
pub use scenario::{load_scenario, parse_scenario, save_scenario};

/// Meters covered by one `MOVE_FORWARD`.
pub const FORWARD_STEP: f64 = 0.25;
/// Degrees per turn action.
pub const TURN_STEP: u16 = 30;
/// Success radius around any target instance, meters.
pub const SUCCESS_RADIUS: f64 = 1.0;
pub const DEFAULT_MAX_STEPS: usize = 500;
pub const DEFAULT_CELL_SIZE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("row {row}, column {col}: {message}")]
    Invariant {
        row: usize,
        col: usize,
        message: String,
    },
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("scenario generation: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terrain {
    Free,
    Obstacle,
}

/// Heading in degrees, always a multiple of the turn quantum in `[0, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u16", into = "u16")]
pub struct Heading(u16);

impl Heading {
    pub const EAST: Heading = Heading(0);

    pub fn new(deg: u16) -> Option<Self> {
        (deg < 360 && deg.is_multiple_of(TURN_STEP)).then_some(Self(deg))
    }

    pub fn degrees(self) -> u16 {
        self.0
    }

    pub fn turned_left(self) -> Self {
        Self((self.0 + TURN_STEP) % 360)
    }

    pub fn turned_right(self) -> Self {
        Self((self.0 + 360 - TURN_STEP) % 360)
    }

    pub fn unit(self) -> (f64, f64) {
        unit_vector(self.0 as f64)
    }
}

impl TryFrom<u16> for Heading {
    type Error = String;

    fn try_from(v: u16) -> Result<Self, Self::Error> {
        Heading::new(v).ok_or_else(|| format!("heading {v} is not a multiple of {TURN_STEP} in [0, 360)"))
    }
}

impl From<Heading> for u16 {
    fn from(h: Heading) -> u16 {
        h.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub x: f64,
    pub y: f64,
    pub heading: Heading,
}

impl AgentPose {
    pub fn new(x: f64, y: f64, heading: Heading) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::MoveForward => "MOVE_FORWARD",
            Action::TurnLeft => "TURN_LEFT",
            Action::TurnRight => "TURN_RIGHT",
            Action::Stop => "STOP",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HitKind {
    Obstacle,
    Target,
    MaxRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayReading {
    /// Degrees relative to the heading, counterclockwise positive.
    pub offset_deg: f64,
    pub range: f64,
    pub kind: HitKind,
    /// Grid cell that stopped the ray; `None` for max-range rays and rays
    /// leaving the grid.
    pub hit_cell: Option<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthScan {
    pub fov_deg: f64,
    pub max_range: f64,
    pub rays: Vec<RayReading>,
}

impl DepthScan {
    /// The reading on the optical axis.
    pub fn center(&self) -> &RayReading {
        &self.rays[self.rays.len() / 2]
    }

    pub fn has_target(&self) -> bool {
        self.rays.iter().any(|r| r.kind == HitKind::Target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub rays: usize,
    pub max_range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov_deg: 90.0,
            rays: 91,
            max_range: 5.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.fov_deg > 0.0 && self.fov_deg <= 180.0) {
            return Err(WorldError::Invalid(format!("fov {} outside (0, 180]", self.fov_deg)));
        }
        if self.rays.is_multiple_of(2) {
            return Err(WorldError::Invalid(format!("ray count {} must be odd", self.rays)));
        }
        if !(self.max_range > 0.0) {
            return Err(WorldError::Invalid("max_range must be positive".into()));
        }
        Ok(())
    }

    pub fn ray_offsets(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.rays;
        let half = self.fov_deg / 2.0;
        (0..n).map(move |i| {
            if n == 1 {
                0.0
            } else {
                -half + self.fov_deg * i as f64 / (n - 1) as f64
            }
        })
    }
}

/// Immutable ground truth for one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    dims: GridDims,
    terrain: Vec<Terrain>,
    targets: BTreeSet<Cell>,
    pub start: AgentPose,
    pub target_label: String,
}

impl WorldSpec {
    /// Builds and validates a world. Target cells must be solid (obstacle
    /// terrain); they are told apart from walls through the target set.
    pub fn new(
        dims: GridDims,
        terrain: Vec<Terrain>,
        targets: BTreeSet<Cell>,
        start: AgentPose,
        target_label: impl Into<String>,
    ) -> Result<Self, WorldError> {
        if terrain.len() != dims.len() || dims.is_empty() {
            return Err(WorldError::Invalid(format!(
                "terrain has {} cells, expected {}x{}",
                terrain.len(),
                dims.width,
                dims.height
            )));
        }
        if !(dims.cell_size > 0.0) {
            return Err(WorldError::Invalid("cell size must be positive".into()));
        }
        let world = Self {
            dims,
            terrain,
            targets,
            start,
            target_label: target_label.into(),
        };
        world.validate()?;
        Ok(world)
    }

    fn validate(&self) -> Result<(), WorldError> {
        let start = self.dims.cell_of(self.start.x, self.start.y).ok_or_else(|| {
            WorldError::Invalid(format!("start ({}, {}) outside the grid", self.start.x, self.start.y))
        })?;
        if self.is_blocked(start) {
            return Err(WorldError::Invariant {
                row: start.row,
                col: start.col,
                message: "start cell is not free".into(),
            });
        }
        if self.targets.is_empty() {
            return Err(WorldError::Invalid("no target cells".into()));
        }
        for &t in &self.targets {
            if t.row >= self.dims.height || t.col >= self.dims.width {
                return Err(WorldError::Invalid(format!("target {t:?} outside the grid")));
            }
            if self.terrain[self.dims.index(t)] != Terrain::Obstacle {
                return Err(WorldError::Invariant {
                    row: t.row,
                    col: t.col,
                    message: "target cell must be solid".into(),
                });
            }
        }
        let approachable = self
            .targets
            .iter()
            .any(|&t| self.dims.neighbors8(t).any(|n| !self.is_blocked(n)));
        if !approachable {
            let t = self.targets.iter().next().unwrap();
            return Err(WorldError::Invariant {
                row: t.row,
                col: t.col,
                message: "no target cell has a free neighbor".into(),
            });
        }
        Ok(())
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn terrain(&self, cell: Cell) -> Terrain {
        self.terrain[self.dims.index(cell)]
    }

    pub fn is_blocked(&self, cell: Cell) -> bool {
        self.terrain(cell) == Terrain::Obstacle
    }

    pub fn is_target(&self, cell: Cell) -> bool {
        self.targets.contains(&cell)
    }

    pub fn targets(&self) -> &BTreeSet<Cell> {
        &self.targets
    }

    pub fn start_cell(&self) -> Cell {
        self.dims
            .cell_of(self.start.x, self.start.y)
            .expect("validated start")
    }

    /// Applies one action. A blocked forward move is a no-op flagged as a
    /// collision.
    pub fn step(&self, pose: AgentPose, action: Action) -> (AgentPose, bool) {
        match action {
            Action::TurnLeft => (AgentPose { heading: pose.heading.turned_left(), ..pose }, false),
            Action::TurnRight => (AgentPose { heading: pose.heading.turned_right(), ..pose }, false),
            Action::Stop => (pose, false),
            Action::MoveForward => {
                let dir = pose.heading.unit();
                if self.sweep_blocked(pose.position(), dir, FORWARD_STEP) {
                    (pose, true)
                } else {
                    let moved = AgentPose {
                        x: pose.x + dir.0 * FORWARD_STEP,
                        y: pose.y + dir.1 * FORWARD_STEP,
                        heading: pose.heading,
                    };
                    (moved, false)
                }
            }
        }
    }

    fn sweep_blocked(&self, from: (f64, f64), dir: (f64, f64), len: f64) -> bool {
        !sweep_clear(&self.dims, from, dir, len, |c| !self.is_blocked(c))
    }

    /// Marches each ray until the first solid cell or `max_range`. The grid
    /// border reads as an obstacle without a hit cell.
    pub fn sense_depth(&self, pose: AgentPose, sensor: &SensorConfig) -> DepthScan {
        let origin = pose.position();
        let heading = pose.heading.degrees() as f64;
        let rays = sensor
            .ray_offsets()
            .map(|offset| {
                let dir = unit_vector(heading + offset);
                let mut it = self.dims.ray_cells(origin, dir, sensor.max_range);
                let mut reading = RayReading {
                    offset_deg: offset,
                    range: sensor.max_range,
                    kind: HitKind::MaxRange,
                    hit_cell: None,
                };
                let mut first = true;
                for (cell, t) in it.by_ref() {
                    if first {
                        first = false;
                        continue;
                    }
                    if self.is_blocked(cell) {
                        reading.range = t;
                        reading.kind = if self.is_target(cell) {
                            HitKind::Target
                        } else {
                            HitKind::Obstacle
                        };
                        reading.hit_cell = Some(cell);
                        return reading;
                    }
                }
                let t = it.pending_entry();
                if t <= sensor.max_range {
                    reading.range = t;
                    reading.kind = HitKind::Obstacle;
                }
                reading
            })
            .collect();
        DepthScan {
            fov_deg: sensor.fov_deg,
            max_range: sensor.max_range,
            rays,
        }
    }

    /// Euclidean distance from a point to the nearest target-cell center.
    pub fn nearest_target_distance(&self, point: (f64, f64)) -> f64 {
        self.targets
            .iter()
            .map(|&t| distance(point, self.dims.center(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Success under the default 500-step budget.
    pub fn is_success(&self, pose: AgentPose, stopped: bool, steps: usize) -> bool {
        self.is_success_within(pose, stopped, steps, DEFAULT_MAX_STEPS)
    }

    pub fn is_success_within(
        &self,
        pose: AgentPose,
        stopped: bool,
        steps: usize,
        budget: usize,
    ) -> bool {
        stopped && steps <= budget && self.nearest_target_distance(pose.position()) <= SUCCESS_RADIUS
    }

    /// Free cells whose center lies within the success radius of a target.
    pub fn success_cells(&self) -> Vec<Cell> {
        self.dims
            .cells()
            .filter(|&c| !self.is_blocked(c))
            .filter(|&c| self.nearest_target_distance(self.dims.center(c)) <= SUCCESS_RADIUS)
            .collect()
    }

    /// Free cells 8-adjacent to a target cell.
    pub fn target_approach_cells(&self) -> BTreeSet<Cell> {
        self.targets
            .iter()
            .flat_map(|&t| self.dims.neighbors8(t))
            .filter(|&c| !self.is_blocked(c))
            .collect()
    }

    /// Ground-truth geodesic distances over free cells from the given sources.
    pub fn distance_field(&self, sources: impl IntoIterator<Item = Cell>) -> DistanceField {
        DistanceField::compute(self.dims, sources, |c| !self.is_blocked(c))
    }

    /// Shortest free-space path length from the start cell to any cell
    /// inside the success radius.
    pub fn oracle_shortest_path(&self) -> Option<f64> {
        self.distance_field(self.success_cells()).get(self.start_cell())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_world(w: usize, h: usize, target: Cell) -> WorldSpec {
        let dims = GridDims::new(w, h, 0.25);
        let mut terrain = vec![Terrain::Free; dims.len()];
        terrain[dims.index(target)] = Terrain::Obstacle;
        WorldSpec::new(
            dims,
            terrain,
            [target].into(),
            AgentPose::new(1.0, 1.0, Heading::EAST),
            "chair",
        )
        .unwrap()
    }

    fn with_wall_column(col: usize) -> WorldSpec {
        let dims = GridDims::new(24, 16, 0.25);
        let mut terrain = vec![Terrain::Free; dims.len()];
        for r in 0..dims.height {
            terrain[dims.index(Cell::new(r, col))] = Terrain::Obstacle;
        }
        terrain[dims.index(Cell::new(15, 0))] = Terrain::Obstacle;
        WorldSpec::new(
            dims,
            terrain,
            [Cell::new(15, 0)].into(),
            AgentPose::new(1.0, 1.0, Heading::EAST),
            "tv",
        )
        .unwrap()
    }

    #[test]
    fn forward_moves_quarter_meter() {
        let w = open_world(16, 16, Cell::new(15, 15));
        let (p, hit) = w.step(AgentPose::new(1.0, 1.0, Heading::EAST), Action::MoveForward);
        assert!(!hit);
        assert_eq!((p.x, p.y, p.heading.degrees()), (1.25, 1.0, 0));
    }

    #[test]
    fn turns_are_thirty_degrees() {
        let w = open_world(16, 16, Cell::new(15, 15));
        let start = AgentPose::new(1.0, 1.0, Heading::EAST);
        let (p, _) = w.step(start, Action::TurnLeft);
        assert_eq!(p.heading.degrees(), 30);
        assert_eq!((p.x, p.y), (1.0, 1.0));
        let (p, _) = w.step(start, Action::TurnRight);
        assert_eq!(p.heading.degrees(), 330);
        let (p, hit) = w.step(start, Action::Stop);
        assert_eq!(p, start);
        assert!(!hit);
    }

    #[test]
    fn blocked_forward_is_noop() {
        // Wall column 5 starts at x = 1.25, 0.1 m ahead.
        let w = with_wall_column(5);
        let pose = AgentPose::new(1.15, 1.0, Heading::EAST);
        let (p, hit) = w.step(pose, Action::MoveForward);
        assert!(hit);
        assert_eq!(p, pose);
    }

    #[test]
    fn cannot_leave_grid() {
        let w = open_world(12, 12, Cell::new(11, 11));
        let pose = AgentPose::new(0.125, 0.125, Heading::new(180).unwrap());
        assert!(w.step(pose, Action::MoveForward).1);
    }

    #[test]
    fn depth_hits_wall_at_two_meters() {
        let w = with_wall_column(12);
        let scan = w.sense_depth(AgentPose::new(1.0, 1.0, Heading::EAST), &SensorConfig::default());
        let c = scan.center();
        assert_eq!(c.offset_deg, 0.0);
        assert!((c.range - 2.0).abs() < 1e-12);
        assert_eq!(c.kind, HitKind::Obstacle);
        assert_eq!(c.hit_cell, Some(Cell::new(4, 12)));
    }

    #[test]
    fn open_space_reads_max_range() {
        let dims = GridDims::new(80, 80, 0.25);
        let mut terrain = vec![Terrain::Free; dims.len()];
        terrain[0] = Terrain::Obstacle;
        let w = WorldSpec::new(dims, terrain, [Cell::new(0, 0)].into(), AgentPose::new(10.0, 10.0, Heading::EAST), "x")
            .unwrap();
        let scan = w.sense_depth(w.start, &SensorConfig::default());
        assert_eq!(scan.rays.len(), 91);
        assert!(scan.rays.iter().all(|r| r.range == 5.0 && r.kind == HitKind::MaxRange));
    }

    #[test]
    fn target_on_axis_is_reported() {
        // Target cell spans x ∈ [2.0, 2.25) on the row through y = 1.0.
        let w = open_world(16, 16, Cell::new(4, 8));
        let scan = w.sense_depth(AgentPose::new(1.0, 1.125, Heading::EAST), &SensorConfig::default());
        assert_eq!(scan.center().kind, HitKind::Target);
        assert!((scan.center().range - 1.0).abs() < 1e-12);
    }

    #[test]
    fn success_boundary() {
        let w = open_world(16, 16, Cell::new(4, 8));
        let (tx, ty) = w.dims().center(Cell::new(4, 8));
        let at = |d: f64| AgentPose::new(tx - d, ty, Heading::EAST);
        assert!(w.is_success(at(0.9), true, 120));
        assert!(!w.is_success(at(1.1), true, 120));
        assert!(!w.is_success(at(0.5), false, 120));
        assert!(w.is_success(at(0.99), true, 500));
        assert!(!w.is_success(at(1.01), true, 500));
        assert!(!w.is_success(at(0.5), true, 501));
    }

    #[test]
    fn rejects_heading_off_quantum() {
        assert!(Heading::new(45).is_none());
        assert!(Heading::new(360).is_none());
        assert_eq!(Heading::new(330).unwrap().turned_left(), Heading::EAST);
    }
}
