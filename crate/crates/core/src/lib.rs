//! Object-goal navigation in a deterministic 2D grid world.
//!
//! The pipeline per timestep is sense → map → score → fuse → plan → act:
//!
//! * [`gridworld`] owns ground truth: scenario files, procedural layouts,
//!   agent kinematics, depth raycasting and success adjudication.
//! * [`mapping`] grows the agent's partial occupancy map from depth scans,
//!   extracts frontiers and measures known-space distances.
//! * [`valuemap`] fuses per-timestep semantic scores into a value/confidence
//!   map and reads out a success probability per frontier.
//! * [`scorer`] provides those semantic scores (table mock, ground-truth
//!   oracle, or an HTTP vision-language endpoint).
//! * [`planner`] picks the next frontier, either greedily by probability or
//!   by minimizing expected search cost over all visit orderings.
//! * [`navigator`] turns a subgoal into discrete actions.
//! * [`harness`] runs episodes and batches and computes SR / SPL.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod gridworld;
pub mod harness;
pub mod mapping;
pub mod navigator;
pub mod planner;
pub mod scorer;
pub mod snapshot;
pub mod valuemap;

pub use geometry::{Cell, GridDims};
pub use gridworld::{Action, AgentPose, DepthScan, HitKind, SensorConfig, WorldSpec};
pub use mapping::{Frontier, PartialMap};
pub use planner::{PlanDecision, PlannerKind, PlannerState};
pub use valuemap::ValueMap;

/// Floor and cap applied to every simulated probability.
pub const PROB_EPSILON: f64 = 0.01;
