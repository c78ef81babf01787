use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{EpisodeConfig, HarnessError};
use crate::geometry::{distance, Cell};
use crate::gridworld::{Action, AgentPose, DepthScan, WorldSpec, FORWARD_STEP};
use crate::mapping::{Frontier, PartialMap};
use crate::navigator::{goal_from_detection, next_action, plan_path, NavGoal, StuckMonitor};
use crate::planner::{prune_frontiers, select_frontier, Candidate, PlanDecision, PlannerState};
use crate::scorer::{render_depth_png, Observation, ScoreRequest, Scorer};
use crate::snapshot::write_snapshots;
use crate::valuemap::ValueMap;
use crate::PROB_EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stopped,
    BudgetExhausted,
    /// The episode panicked and was recorded as a failure.
    Aborted,
}

/// One executed step. `pose` is where the step was decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub pose: AgentPose,
    pub action: Action,
    pub collided: bool,
    pub score: f64,
    /// Goal being pursued when the action was chosen.
    pub goal: Option<NavGoal>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<PlanDecision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    /// Meters actually travelled.
    pub agent_path_length: f64,
    /// Ground-truth shortest path from the start into the success region;
    /// `None` when the target cannot be reached.
    pub oracle_shortest: Option<f64>,
    pub termination: Termination,
    pub final_pose: AgentPose,
    #[serde(skip)]
    pub trace: Vec<StepRecord>,
}

impl EpisodeResult {
    pub(crate) fn aborted(world: &WorldSpec) -> Self {
        Self {
            success: false,
            steps: 0,
            agent_path_length: 0.0,
            oracle_shortest: world.oracle_shortest_path(),
            termination: Termination::Aborted,
            final_pose: world.start,
            trace: Vec::new(),
        }
    }
}

/// Runs one episode with the scorer named in `config`.
pub fn run_episode(world: &WorldSpec, config: &EpisodeConfig) -> Result<EpisodeResult, HarnessError> {
    config.validate()?;
    let world = Arc::new(world.clone());
    let scorer = config.scorer.build(&world)?;
    run_episode_with(&world, config, scorer.as_ref(), None)
}

/// Runs one episode against an explicit scorer. With `snapshots` set to
/// `(dir, episode_name)`, map and value PGMs are written at every replan
/// and at the final step.
pub fn run_episode_with(
    world: &WorldSpec,
    config: &EpisodeConfig,
    scorer: &dyn Scorer,
    snapshots: Option<(&Path, &str)>,
) -> Result<EpisodeResult, HarnessError> {
    config.validate()?;
    let mut ep = Episode::new(world, config, scorer, snapshots);
    ep.run()?;
    Ok(ep.finish())
}

struct Episode<'a> {
    world: &'a WorldSpec,
    config: &'a EpisodeConfig,
    scorer: &'a dyn Scorer,
    snapshots: Option<(&'a Path, &'a str)>,
    map: PartialMap,
    values: ValueMap,
    pose: AgentPose,
    steps: usize,
    path_length: f64,
    stopped: bool,
    subgoal: Option<Cell>,
    object_goal: Option<NavGoal>,
    last_plan: Option<usize>,
    force_replan: bool,
    monitor: StuckMonitor,
    trace: Vec<StepRecord>,
}

impl<'a> Episode<'a> {
    fn new(
        world: &'a WorldSpec,
        config: &'a EpisodeConfig,
        scorer: &'a dyn Scorer,
        snapshots: Option<(&'a Path, &'a str)>,
    ) -> Self {
        let dims = world.dims();
        Self {
            world,
            config,
            scorer,
            snapshots,
            map: PartialMap::new(dims),
            values: ValueMap::new(dims),
            pose: world.start,
            steps: 0,
            path_length: 0.0,
            stopped: false,
            subgoal: None,
            object_goal: None,
            last_plan: None,
            force_replan: false,
            monitor: StuckMonitor::new(),
            trace: Vec::new(),
        }
    }

    fn run(&mut self) -> Result<(), HarnessError> {
        while self.steps < self.config.max_steps {
            let scan = self.world.sense_depth(self.pose, &self.config.sensor);
            let observed = self.map.integrate_scan(self.pose, &scan);
            let score = self.score(&scan);
            self.values
                .fuse_observation(self.pose, self.config.sensor.fov_deg, score, &observed);
            if let Some(goal) = goal_from_detection(&scan) {
                self.object_goal = Some(goal);
            }

            let (action, decision) = match self.object_goal {
                Some(goal) => (self.approach_object(goal), None),
                None => self.explore(),
            };
            let goal = self
                .object_goal
                .or_else(|| self.subgoal.map(NavGoal::frontier));
            if decision.is_some() {
                self.snapshot()?;
            }

            let before = self.pose;
            self.steps += 1;
            if action == Action::Stop {
                self.stopped = true;
                self.record(before, action, false, score, goal, decision);
                break;
            }
            let (next, collided) = self.world.step(self.pose, action);
            if action == Action::MoveForward && !collided {
                self.path_length += FORWARD_STEP;
            }
            self.monitor.record(action, collided);
            if self.monitor.recover_if_stuck(next, &mut self.map).is_some() {
                self.force_replan = true;
            }
            self.pose = next;
            self.record(before, action, collided, score, goal, decision);
        }
        self.snapshot()?;
        Ok(())
    }

    fn record(
        &mut self,
        pose: AgentPose,
        action: Action,
        collided: bool,
        score: f64,
        goal: Option<NavGoal>,
        decision: Option<PlanDecision>,
    ) {
        self.trace.push(StepRecord {
            step: self.steps,
            pose,
            action,
            collided,
            score,
            goal,
            decision,
        });
    }

    fn score(&self, scan: &DepthScan) -> f64 {
        let observation = if self.scorer.needs_image() {
            Observation::Image(render_depth_png(scan))
        } else {
            Observation::Scan(scan.clone())
        };
        let req = ScoreRequest {
            target_label: self.world.target_label.clone(),
            observation,
            pose: self.pose,
        };
        match self.scorer.score(&req) {
            Ok(s) if s.is_finite() => s.clamp(0.0, 1.0),
            Ok(s) => {
                log::warn!("scorer returned non-finite {s}; using floor");
                PROB_EPSILON
            }
            Err(e) => {
                log::warn!("scorer failed at step {}: {e}; using floor", self.steps);
                PROB_EPSILON
            }
        }
    }

    fn agent_cell(&self) -> Cell {
        self.world
            .dims()
            .cell_of(self.pose.x, self.pose.y)
            .expect("agent stays inside the grid")
    }

    fn approach_object(&mut self, goal: NavGoal) -> Action {
        let dims = self.map.dims();
        if goal.reached(&dims, self.pose) {
            return Action::Stop;
        }
        let from = self.agent_cell();
        match plan_path(&self.map, from, &goal) {
            Ok(path) => next_action(&self.map, self.pose, &path, &goal),
            Err(_) => {
                // Head for the known-reachable cell closest to the object.
                let field = self.map.distance_field(from);
                let target = dims.center(goal.cell);
                let best = dims
                    .cells()
                    .filter(|&c| field.get(c).is_some())
                    .min_by(|a, b| {
                        distance(dims.center(*a), target)
                            .total_cmp(&distance(dims.center(*b), target))
                            .then(a.cmp(b))
                    });
                match best.and_then(|c| field.path_to(c)) {
                    Some(path) if path.len() > 1 => next_action(&self.map, self.pose, &path, &goal),
                    _ => Action::TurnLeft,
                }
            }
        }
    }

    fn needs_replan(&self, frontiers: &[Frontier]) -> bool {
        let Some(goal) = self.subgoal else {
            return true;
        };
        if self.force_replan {
            return true;
        }
        if self
            .last_plan
            .is_none_or(|at| self.steps - at >= self.config.replan_interval)
        {
            return true;
        }
        if !frontiers.iter().any(|f| f.cells.contains(&goal)) {
            return true;
        }
        NavGoal::frontier(goal).reached(&self.map.dims(), self.pose)
    }

    fn explore(&mut self) -> (Action, Option<PlanDecision>) {
        let frontiers = self.map.extract_frontiers();
        let mut decision = None;
        if self.needs_replan(&frontiers) {
            self.force_replan = false;
            self.last_plan = Some(self.steps);
            decision = self.plan(&frontiers);
            self.subgoal = decision.as_ref().map(|d| {
                frontiers
                    .iter()
                    .find(|f| f.id == d.chosen)
                    .expect("chosen id is a live frontier")
                    .midpoint
            });
        }
        let Some(goal) = self.subgoal else {
            // Nothing reachable left to explore: keep looking around.
            return (Action::TurnLeft, decision);
        };
        let goal = NavGoal::frontier(goal);
        if goal.cell == self.agent_cell() {
            self.force_replan = true;
            return (Action::TurnLeft, decision);
        }
        match plan_path(&self.map, self.agent_cell(), &goal) {
            Ok(path) => (next_action(&self.map, self.pose, &path, &goal), decision),
            Err(_) => {
                self.force_replan = true;
                (Action::TurnLeft, decision)
            }
        }
    }

    /// Scores reachable frontiers and picks one. A frontier whose midpoint
    /// is the agent's own cell is skipped: turning in place resolves it,
    /// since every 4-neighbor shares an edge with that cell.
    fn plan(&self, frontiers: &[Frontier]) -> Option<PlanDecision> {
        let here = self.agent_cell();
        let field = self.map.distance_field(here);
        let live: Vec<(&Frontier, f64)> = frontiers
            .iter()
            .filter(|f| f.midpoint != here)
            .filter_map(|f| field.get(f.midpoint).map(|d| (f, d)))
            .collect();
        if live.is_empty() {
            return None;
        }
        let candidates: Vec<Candidate> = live
            .iter()
            .map(|&(f, d)| Candidate {
                id: f.id,
                midpoint: f.midpoint,
                p_success: self.values.frontier_probability(f, self.config.readout_radius),
                distance: d,
            })
            .collect();
        // Prune on agent distance first so only K distance fields are needed.
        let shell = PlannerState::new(
            candidates.clone(),
            vec![vec![0.0; candidates.len()]; candidates.len()],
            self.config.costs,
        )
        .ok()?;
        let kept: Vec<Candidate> = prune_frontiers(shell, self.config.max_frontiers)
            .candidates()
            .to_vec();
        let fields: Vec<_> = kept.iter().map(|c| self.map.distance_field(c.midpoint)).collect();
        let between: Vec<Vec<f64>> = fields
            .iter()
            .map(|f| {
                kept.iter()
                    .map(|c| f.get(c.midpoint).expect("frontiers share the agent's component"))
                    .collect()
            })
            .collect();
        let state = PlannerState::new(kept, between, self.config.costs).ok()?;
        match select_frontier(self.config.planner, &state) {
            Ok(d) => Some(d),
            Err(e) => {
                log::warn!("planning failed: {e}");
                None
            }
        }
    }

    fn snapshot(&self) -> Result<(), HarnessError> {
        if let Some((dir, name)) = self.snapshots {
            write_snapshots(dir, name, self.steps, &self.map, &self.values)?;
        }
        Ok(())
    }

    fn finish(self) -> EpisodeResult {
        let success = self
            .world
            .is_success_within(self.pose, self.stopped, self.steps, self.config.max_steps);
        EpisodeResult {
            success,
            steps: self.steps,
            agent_path_length: self.path_length,
            oracle_shortest: self.world.oracle_shortest_path(),
            termination: if self.stopped {
                Termination::Stopped
            } else {
                Termination::BudgetExhausted
            },
            final_pose: self.pose,
            trace: self.trace,
        }
    }
}
