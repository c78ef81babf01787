//! Plain-text scenario files.
//!
//! ```text
//! semnav-scenario v1
//! <width> <height> <cell_size>
//! <height rows of width chars: '#' obstacle, '.' free, 'T' target, 'S' start>
//! target_label: <text>
//! ```
//!
//! The first grid row is the northern edge. The start pose sits at the center
//! of the `S` cell facing east.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use super::{AgentPose, Heading, Terrain, WorldError, WorldSpec};
use crate::geometry::{Cell, GridDims};

const HEADER: &str = "semnav-scenario v1";
const LABEL_PREFIX: &str = "target_label:";

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> WorldError {
    WorldError::Parse {
        line,
        column,
        message: message.into(),
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<WorldSpec, WorldError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

pub fn save_scenario(world: &WorldSpec, path: impl AsRef<Path>) -> Result<(), WorldError> {
    std::fs::write(path, world.to_scenario_string())?;
    Ok(())
}

pub fn parse_scenario(text: &str) -> Result<WorldSpec, WorldError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (n, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty file"))?;
    if header.trim() != HEADER {
        return Err(parse_err(n, 1, format!("expected header `{HEADER}`")));
    }

    let (n, dims_line) = lines.next().ok_or_else(|| parse_err(2, 1, "missing dimensions line"))?;
    let fields: Vec<&str> = dims_line.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(n, 1, "expected `width height cell_size`"));
    }
    let width: usize = fields[0]
        .parse()
        .map_err(|_| parse_err(n, 1, format!("bad width `{}`", fields[0])))?;
    let height: usize = fields[1]
        .parse()
        .map_err(|_| parse_err(n, 1, format!("bad height `{}`", fields[1])))?;
    let cell_size: f64 = fields[2]
        .parse()
        .map_err(|_| parse_err(n, 1, format!("bad cell size `{}`", fields[2])))?;
    if width == 0 || height == 0 {
        return Err(parse_err(n, 1, "grid must be non-empty"));
    }
    if !(cell_size > 0.0 && cell_size.is_finite()) {
        return Err(parse_err(n, 1, "cell size must be positive"));
    }
    let dims = GridDims::new(width, height, cell_size);

    let mut terrain = vec![Terrain::Free; dims.len()];
    let mut targets = BTreeSet::new();
    let mut start: Option<(Cell, usize, usize)> = None;
    let first_row_line = n + 1;
    for i in 0..height {
        let (n, row_text) = lines
            .next()
            .ok_or_else(|| parse_err(first_row_line + i, 1, format!("expected {height} grid rows, found {i}")))?;
        let chars: Vec<char> = row_text.chars().collect();
        if chars.len() != width {
            return Err(parse_err(
                n,
                chars.len().min(width) + 1,
                format!("row has {} cells, expected {width}", chars.len()),
            ));
        }
        let row = height - 1 - i;
        for (col, ch) in chars.into_iter().enumerate() {
            let cell = Cell::new(row, col);
            let idx = dims.index(cell);
            match ch {
                '.' => {}
                '#' => terrain[idx] = Terrain::Obstacle,
                'T' => {
                    terrain[idx] = Terrain::Obstacle;
                    targets.insert(cell);
                }
                'S' => {
                    if let Some((_, l, c)) = start {
                        return Err(parse_err(n, col + 1, format!("second start cell (first at line {l}, column {c})")));
                    }
                    start = Some((cell, n, col + 1));
                }
                other => return Err(parse_err(n, col + 1, format!("unexpected character `{other}`"))),
            }
        }
    }

    let (n, label_line) = lines
        .next()
        .ok_or_else(|| parse_err(first_row_line + height, 1, "missing `target_label:` line"))?;
    let label = label_line
        .strip_prefix(LABEL_PREFIX)
        .ok_or_else(|| parse_err(n, 1, "expected `target_label: <text>`"))?
        .trim();
    if label.is_empty() {
        return Err(parse_err(n, LABEL_PREFIX.len() + 1, "empty target label"));
    }
    if let Some((n, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(parse_err(n, 1, format!("trailing content `{extra}`")));
    }

    let (start_cell, _, _) = start.ok_or_else(|| parse_err(first_row_line, 1, "no start cell `S`"))?;
    let (x, y) = dims.center(start_cell);
    WorldSpec::new(dims, terrain, targets, AgentPose::new(x, y, Heading::EAST), label).map_err(|e| match e {
        WorldError::Invariant { row, col, message } => {
            parse_err(first_row_line + (height - 1 - row), col + 1, message)
        }
        other => other,
    })
}

impl WorldSpec {
    /// Serializes to the scenario text format. The start pose is written as
    /// its containing cell.
    pub fn to_scenario_string(&self) -> String {
        let dims = self.dims();
        let start = self.start_cell();
        let mut out = String::with_capacity(dims.len() + dims.height + 64);
        let _ = writeln!(out, "{HEADER}");
        let _ = writeln!(out, "{} {} {}", dims.width, dims.height, dims.cell_size);
        for row in (0..dims.height).rev() {
            for col in 0..dims.width {
                let cell = Cell::new(row, col);
                let ch = if cell == start {
                    'S'
                } else if self.is_target(cell) {
                    'T'
                } else if self.is_blocked(cell) {
                    '#'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        let _ = writeln!(out, "{LABEL_PREFIX} {}", self.target_label);
        out
    }
}
