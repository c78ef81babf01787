//! Binary PGM (P5) snapshots of the partial map and value map.
//!
//! One byte per cell, northern row first. Occupancy: 0 obstacle, 128
//! unknown, 255 free. Values: `V` scaled to 0–255.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::geometry::{Cell, GridDims};
use crate::mapping::{CellState, PartialMap};
use crate::valuemap::ValueMap;

fn write_pgm(mut out: impl Write, dims: GridDims, pixel: impl Fn(Cell) -> u8) -> io::Result<()> {
    write!(out, "P5\n{} {}\n255\n", dims.width, dims.height)?;
    let mut row_buf = Vec::with_capacity(dims.width);
    for row in (0..dims.height).rev() {
        row_buf.clear();
        row_buf.extend((0..dims.width).map(|col| pixel(Cell::new(row, col))));
        out.write_all(&row_buf)?;
    }
    Ok(())
}

pub fn encode_map(map: &PartialMap) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pgm(&mut buf, map.dims(), |c| match map.get(c) {
        CellState::Obstacle => 0,
        CellState::Unknown => 128,
        CellState::Free => 255,
    })
    .expect("writing to a Vec cannot fail");
    buf
}

pub fn encode_values(vm: &ValueMap) -> Vec<u8> {
    let mut buf = Vec::new();
    write_pgm(&mut buf, vm.dims(), |c| (vm.value(c).clamp(0.0, 1.0) * 255.0).round() as u8)
        .expect("writing to a Vec cannot fail");
    buf
}

pub fn map_snapshot_path(dir: &Path, episode: &str, step: usize) -> PathBuf {
    dir.join(format!("map_{episode}_{step}.pgm"))
}

pub fn value_snapshot_path(dir: &Path, episode: &str, step: usize) -> PathBuf {
    dir.join(format!("value_{episode}_{step}.pgm"))
}

/// Writes both snapshots for one step into `dir`.
pub fn write_snapshots(dir: &Path, episode: &str, step: usize, map: &PartialMap, vm: &ValueMap) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(map_snapshot_path(dir, episode, step), encode_map(map))?;
    std::fs::write(value_snapshot_path(dir, episode, step), encode_values(vm))?;
    Ok(())
}
