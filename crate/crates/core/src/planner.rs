//! Frontier selection.
//!
//! The expected cost of committing to frontier `a` first is
//!
//! ```text
//! Q(a) = D(q, a) + P(a)·R_S + (1 − P(a))·(R_E + min_b Q'(a, b))
//! ```
//!
//! where the continuation `Q'` repeats the same expression from `a`'s
//! midpoint over the frontiers not yet tried. Each continuation depends only
//! on the current frontier and the set still remaining, so all of `Q` comes
//! out of one dynamic program over `(frontier, remaining-subset)` states in
//! `O(2ⁿ·n²)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Cell;

/// Largest frontier set the subset DP accepts.
pub const MAX_DP_FRONTIERS: usize = 16;
pub const DEFAULT_MAX_FRONTIERS: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no frontier to plan over")]
    NoFrontier,
    #[error("{0} frontiers exceed the planner limit of {MAX_DP_FRONTIERS}")]
    TooManyFrontiers(usize),
    #[error("invalid planner state: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerKind {
    Lsp,
    Greedy,
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlannerKind::Lsp => "lsp",
            PlannerKind::Greedy => "greedy",
        })
    }
}

impl FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lsp" => Ok(PlannerKind::Lsp),
            "greedy" => Ok(PlannerKind::Greedy),
            other => Err(format!("unknown planner `{other}` (expected lsp or greedy)")),
        }
    }
}

/// Success and exploration costs in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspCosts {
    pub success: f64,
    pub exploration: f64,
}

impl Default for LspCosts {
    fn default() -> Self {
        Self {
            success: 3.0,
            exploration: 6.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: usize,
    pub midpoint: Cell,
    pub p_success: f64,
    /// Known-space distance from the agent, meters.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerState {
    candidates: Vec<Candidate>,
    /// Midpoint-to-midpoint known-space distances, indexed like `candidates`.
    between: Vec<Vec<f64>>,
    pub costs: LspCosts,
}

impl PlannerState {
    pub fn new(candidates: Vec<Candidate>, between: Vec<Vec<f64>>, costs: LspCosts) -> Result<Self, PlanError> {
        let n = candidates.len();
        if between.len() != n || between.iter().any(|row| row.len() != n) {
            return Err(PlanError::Invalid(format!("distance matrix must be {n}x{n}")));
        }
        for c in &candidates {
            if !(c.p_success > 0.0 && c.p_success < 1.0) {
                return Err(PlanError::Invalid(format!("frontier {} has P_S = {} outside (0, 1)", c.id, c.p_success)));
            }
            if !(c.distance >= 0.0 && c.distance.is_finite()) {
                return Err(PlanError::Invalid(format!("frontier {} has distance {}", c.id, c.distance)));
            }
        }
        if between.iter().flatten().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(PlanError::Invalid("pairwise distances must be finite and non-negative".into()));
        }
        if !(costs.success >= 0.0 && costs.exploration >= 0.0) {
            return Err(PlanError::Invalid("R_S and R_E must be non-negative".into()));
        }
        Ok(Self {
            candidates,
            between,
            costs,
        })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn between(&self, i: usize, j: usize) -> f64 {
        self.between[i][j]
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Keeps the `k` frontiers nearest the agent, ties to the lower id. Order of
/// the survivors follows the input order.
pub fn prune_frontiers(state: PlannerState, k: usize) -> PlannerState {
    if state.len() <= k {
        return state;
    }
    let mut ranked: Vec<usize> = (0..state.len()).collect();
    ranked.sort_by(|&a, &b| {
        let (ca, cb) = (&state.candidates[a], &state.candidates[b]);
        ca.distance.total_cmp(&cb.distance).then(ca.id.cmp(&cb.id))
    });
    let mut keep: Vec<usize> = ranked.into_iter().take(k).collect();
    keep.sort_unstable();
    let candidates = keep.iter().map(|&i| state.candidates[i]).collect();
    let between = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| state.between[i][j]).collect())
        .collect();
    PlannerState {
        candidates,
        between,
        costs: state.costs,
    }
}

/// Expected cost `Q` for each frontier, in candidate order.
pub fn lsp_expected_costs(state: &PlannerState) -> Result<Vec<f64>, PlanError> {
    lsp_expected_costs_with_terminal(state, 0.0)
}

/// As [`lsp_expected_costs`], with `terminal` charged once every frontier
/// has been tried without success.
pub fn lsp_expected_costs_with_terminal(state: &PlannerState, terminal: f64) -> Result<Vec<f64>, PlanError> {
    let n = state.len();
    if n == 0 {
        return Err(PlanError::NoFrontier);
    }
    if n > MAX_DP_FRONTIERS {
        return Err(PlanError::TooManyFrontiers(n));
    }
    let LspCosts {
        success: r_s,
        exploration: r_e,
    } = state.costs;
    let p: Vec<f64> = state.candidates.iter().map(|c| c.p_success).collect();
    let full = (1usize << n) - 1;

    // cont[mask * n + at]: best expected cost-to-go standing at frontier
    // `at` with `mask` still untried (`at` never in `mask`).
    let mut cont = vec![f64::INFINITY; (full + 1) * n];
    cont[..n].fill(terminal);
    for mask in 1..=full {
        for at in 0..n {
            if mask & (1 << at) != 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut bits = mask;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let rest = mask & !(1 << b);
                let q = state.between[at][b] + p[b] * r_s + (1.0 - p[b]) * (r_e + cont[rest * n + b]);
                if q < best {
                    best = q;
                }
            }
            cont[mask * n + at] = best;
        }
    }

    Ok((0..n)
        .map(|a| {
            let rest = full & !(1 << a);
            state.candidates[a].distance + p[a] * r_s + (1.0 - p[a]) * (r_e + cont[rest * n + a])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierScore {
    pub id: usize,
    pub distance: f64,
    pub p_success: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDecision {
    pub method: PlannerKind,
    pub chosen: usize,
    pub frontiers: Vec<FrontierScore>,
}

impl PlanDecision {
    pub fn chosen_score(&self) -> &FrontierScore {
        self.frontiers
            .iter()
            .find(|f| f.id == self.chosen)
            .expect("chosen frontier is among the scored ones")
    }
}

fn scores(state: &PlannerState) -> Result<Vec<FrontierScore>, PlanError> {
    let q = lsp_expected_costs(state)?;
    Ok(state
        .candidates
        .iter()
        .zip(q)
        .map(|(c, q)| FrontierScore {
            id: c.id,
            distance: c.distance,
            p_success: c.p_success,
            q,
        })
        .collect())
}

/// Index of the minimum by `key`, ties broken by smaller distance then id.
fn pick(scores: &[FrontierScore], key: impl Fn(&FrontierScore, &FrontierScore) -> Ordering) -> usize {
    scores
        .iter()
        .min_by(|a, b| {
            key(a, b)
                .then(a.distance.total_cmp(&b.distance))
                .then(a.id.cmp(&b.id))
        })
        .map(|s| s.id)
        .expect("non-empty")
}

/// Chooses the frontier of minimum expected cost.
pub fn select_frontier_lsp(state: &PlannerState) -> Result<PlanDecision, PlanError> {
    let frontiers = scores(state)?;
    let chosen = pick(&frontiers, |a, b| a.q.total_cmp(&b.q));
    Ok(PlanDecision {
        method: PlannerKind::Lsp,
        chosen,
        frontiers,
    })
}

/// Chooses the frontier with the highest success probability.
pub fn select_frontier_greedy(state: &PlannerState) -> Result<PlanDecision, PlanError> {
    let frontiers = scores(state)?;
    let chosen = pick(&frontiers, |a, b| b.p_success.total_cmp(&a.p_success));
    Ok(PlanDecision {
        method: PlannerKind::Greedy,
        chosen,
        frontiers,
    })
}

pub fn select_frontier(kind: PlannerKind, state: &PlannerState) -> Result<PlanDecision, PlanError> {
    match kind {
        PlannerKind::Lsp => select_frontier_lsp(state),
        PlannerKind::Greedy => select_frontier_greedy(state),
    }
}
