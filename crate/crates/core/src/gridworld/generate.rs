//! Procedural rooms-and-corridors layouts.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AgentPose, Heading, Terrain, WorldError, WorldSpec, DEFAULT_CELL_SIZE};
use crate::geometry::{Cell, GridDims};

const LABELS: [&str; 6] = ["bed", "couch", "chair", "potted plant", "toilet", "tv"];
const MAX_ATTEMPTS: usize = 200;
const ROOM_PLACEMENT_TRIES: usize = 400;

/// Layout parameters. Sizes are in cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub width: usize,
    pub height: usize,
    pub min_rooms: usize,
    pub max_rooms: usize,
    pub min_room_size: usize,
    pub max_room_size: usize,
    pub corridor_width: usize,
    pub min_targets: usize,
    pub max_targets: usize,
    /// Upper bound on furniture blocks per room.
    pub max_furniture: usize,
    /// Minimum ground-truth distance from the start to the success region, meters.
    pub min_start_distance: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            width: 40,
            height: 32,
            min_rooms: 4,
            max_rooms: 6,
            min_room_size: 6,
            max_room_size: 11,
            corridor_width: 2,
            min_targets: 1,
            max_targets: 2,
            max_furniture: 2,
            min_start_distance: 3.0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::Invalid(format!("generation params: {m}")));
        if !(16..=256).contains(&self.width) || !(16..=256).contains(&self.height) {
            return bad("width and height must lie in 16..=256");
        }
        if self.min_rooms < 2 || self.max_rooms < self.min_rooms || self.max_rooms > 16 {
            return bad("room count range must satisfy 2 <= min <= max <= 16");
        }
        let limit = self.width.min(self.height) / 2;
        if self.min_room_size < 4 || self.max_room_size < self.min_room_size || self.max_room_size > limit {
            return bad("room size range must satisfy 4 <= min <= max <= min(width, height) / 2");
        }
        if !(1..=3).contains(&self.corridor_width) {
            return bad("corridor width must lie in 1..=3");
        }
        if self.min_targets < 1 || self.max_targets < self.min_targets || self.max_targets > 4 {
            return bad("target count range must satisfy 1 <= min <= max <= 4");
        }
        if !(self.min_start_distance >= 0.0) {
            return bad("min_start_distance must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Room {
    col: usize,
    row: usize,
    w: usize,
    h: usize,
}

impl Room {
    fn center(&self) -> (usize, usize) {
        (self.col + self.w / 2, self.row + self.h / 2)
    }

    fn overlaps_with_margin(&self, other: &Room) -> bool {
        let (a0, a1) = (self.col as isize - 1, (self.col + self.w) as isize + 1);
        let (b0, b1) = (self.row as isize - 1, (self.row + self.h) as isize + 1);
        let (c0, c1) = (other.col as isize, (other.col + other.w) as isize);
        let (d0, d1) = (other.row as isize, (other.row + other.h) as isize);
        a0 < c1 && c0 < a1 && b0 < d1 && d0 < b1
    }

    fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.row..self.row + self.h).flat_map(move |r| (self.col..self.col + self.w).map(move |c| Cell::new(r, c)))
    }
}

struct Canvas {
    dims: GridDims,
    terrain: Vec<Terrain>,
}

impl Canvas {
    fn carve(&mut self, col: usize, row: usize, w: usize, h: usize) {
        let max_c = self.dims.width - 1;
        let max_r = self.dims.height - 1;
        for r in row.max(1)..(row + h).min(max_r) {
            for c in col.max(1)..(col + w).min(max_c) {
                let i = self.dims.index(Cell::new(r, c));
                self.terrain[i] = Terrain::Free;
            }
        }
    }

    fn corridor(&mut self, from: (usize, usize), to: (usize, usize), width: usize, horizontal_first: bool) {
        let (c1, r1) = from;
        let (c2, r2) = to;
        if horizontal_first {
            self.carve(c1.min(c2), r1, c1.abs_diff(c2) + width, width);
            self.carve(c2, r1.min(r2), width, r1.abs_diff(r2) + width);
        } else {
            self.carve(c1, r1.min(r2), width, r1.abs_diff(r2) + width);
            self.carve(c1.min(c2), r2, c1.abs_diff(c2) + width, width);
        }
    }

    fn is_free(&self, cell: Cell) -> bool {
        self.terrain[self.dims.index(cell)] == Terrain::Free
    }

    fn set(&mut self, cell: Cell, t: Terrain) {
        let i = self.dims.index(cell);
        self.terrain[i] = t;
    }

    /// All free cells form one 8-connected (corner-safe) component.
    fn free_space_connected(&self) -> bool {
        let Some(seed) = self.dims.cells().find(|&c| self.is_free(c)) else {
            return false;
        };
        let field = crate::geometry::DistanceField::compute(self.dims, [seed], |c| self.is_free(c));
        self.dims
            .cells()
            .filter(|&c| self.is_free(c))
            .all(|c| field.get(c).is_some())
    }
}

/// Deterministic layout for `(seed, params)`: rooms joined by corridors,
/// furniture blocks, wall-adjacent target objects and a start cell in a
/// different room from the first target.
pub fn generate_scenario(seed: u64, params: &GenParams) -> Result<WorldSpec, WorldError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Some(world) = attempt(&mut rng, params) {
            return Ok(world);
        }
    }
    Err(WorldError::Generation(format!(
        "no valid layout for seed {seed} after {MAX_ATTEMPTS} attempts"
    )))
}

fn attempt(rng: &mut ChaCha8Rng, p: &GenParams) -> Option<WorldSpec> {
    let dims = GridDims::new(p.width, p.height, DEFAULT_CELL_SIZE);
    let mut canvas = Canvas {
        dims,
        terrain: vec![Terrain::Obstacle; dims.len()],
    };

    let want = rng.random_range(p.min_rooms..=p.max_rooms);
    let mut rooms: Vec<Room> = Vec::with_capacity(want);
    for _ in 0..ROOM_PLACEMENT_TRIES {
        if rooms.len() == want {
            break;
        }
        let w = rng.random_range(p.min_room_size..=p.max_room_size);
        let h = rng.random_range(p.min_room_size..=p.max_room_size);
        if w + 2 > p.width || h + 2 > p.height {
            continue;
        }
        let room = Room {
            col: rng.random_range(1..=p.width - 1 - w),
            row: rng.random_range(1..=p.height - 1 - h),
            w,
            h,
        };
        if rooms.iter().all(|r| !room.overlaps_with_margin(r)) {
            rooms.push(room);
        }
    }
    if rooms.len() < p.min_rooms {
        return None;
    }
    for r in &rooms {
        canvas.carve(r.col, r.row, r.w, r.h);
    }

    let mut order: Vec<usize> = (0..rooms.len()).collect();
    order.sort_by_key(|&i| rooms[i].center());
    for pair in order.windows(2) {
        let (a, b) = (rooms[pair[0]].center(), rooms[pair[1]].center());
        canvas.corridor(a, b, p.corridor_width, rng.random_bool(0.5));
    }
    if rooms.len() > 2 && rng.random_bool(0.5) {
        let a = rng.random_range(0..rooms.len());
        let b = rng.random_range(0..rooms.len());
        if a != b {
            canvas.corridor(rooms[a].center(), rooms[b].center(), p.corridor_width, rng.random_bool(0.5));
        }
    }

    for room in &rooms {
        let n = rng.random_range(0..=p.max_furniture);
        for _ in 0..n {
            let (bw, bh) = *[(1, 1), (2, 1), (1, 2), (2, 2)].choose(rng).unwrap();
            if room.w < bw + 4 || room.h < bh + 4 {
                continue;
            }
            let c0 = rng.random_range(room.col + 2..=room.col + room.w - 2 - bw);
            let r0 = rng.random_range(room.row + 2..=room.row + room.h - 2 - bh);
            for r in r0..r0 + bh {
                for c in c0..c0 + bw {
                    canvas.set(Cell::new(r, c), Terrain::Obstacle);
                }
            }
        }
    }

    let start_room = rng.random_range(0..rooms.len());
    let mut target_rooms = vec![loop {
        let r = rng.random_range(0..rooms.len());
        if r != start_room {
            break r;
        }
    }];
    let extra = rng.random_range(p.min_targets..=p.max_targets) - 1;
    for _ in 0..extra {
        target_rooms.push(rng.random_range(0..rooms.len()));
    }

    let mut targets = BTreeSet::new();
    for &ri in &target_rooms {
        let candidates: Vec<Cell> = rooms[ri]
            .cells()
            .filter(|&c| canvas.is_free(c))
            .filter(|&c| dims.neighbors4(c).any(|n| !canvas.is_free(n) && !targets.contains(&n)))
            .collect();
        let &cell = candidates.choose(rng)?;
        canvas.set(cell, Terrain::Obstacle);
        targets.insert(cell);
    }
    if !canvas.free_space_connected() {
        return None;
    }

    let label = *LABELS.choose(rng).unwrap();
    let start_cells: Vec<Cell> = rooms[start_room].cells().filter(|&c| canvas.is_free(c)).collect();
    for _ in 0..16 {
        let &cell = start_cells.choose(rng)?;
        let (x, y) = dims.center(cell);
        let world = WorldSpec::new(
            dims,
            canvas.terrain.clone(),
            targets.clone(),
            AgentPose::new(x, y, Heading::EAST),
            label,
        )
        .ok()?;
        match world.oracle_shortest_path() {
            Some(d) if d >= p.min_start_distance && d > 0.0 => return Some(world),
            _ => continue,
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let p = GenParams::default();
        let a = generate_scenario(7, &p).unwrap();
        let b = generate_scenario(7, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_scenario_string(), b.to_scenario_string());
    }

    #[test]
    fn seeds_differ() {
        let p = GenParams::default();
        let a = generate_scenario(7, &p).unwrap();
        let b = generate_scenario(8, &p).unwrap();
        assert_ne!(a.to_scenario_string(), b.to_scenario_string());
    }

    #[test]
    fn rejects_out_of_bounds_params() {
        let p = GenParams {
            min_rooms: 5,
            max_rooms: 3,
            ..GenParams::default()
        };
        assert!(generate_scenario(1, &p).is_err());
    }
}
