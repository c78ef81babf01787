//! Episode orchestration, SR / SPL metrics and batch runs.

mod batch;
mod episode;
mod metrics;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridworld::{SensorConfig, WorldError, WorldSpec, DEFAULT_MAX_STEPS};
use crate::planner::{LspCosts, PlannerKind, DEFAULT_MAX_FRONTIERS, MAX_DP_FRONTIERS};
use crate::scorer::{ExternalScorer, MockScorer, OracleScorer, Scorer, ScorerError, Sector, DEFAULT_ORACLE_LAMBDA};
use crate::valuemap::DEFAULT_READOUT_RADIUS;

pub use batch::{
    load_scenarios, run_batch, run_batch_with, write_summary_csv, write_traces_jsonl, BatchOutcome, EpisodeOutcome, NamedWorld,
    ScenarioSource, SummaryRow, CSV_HEADER,
};
pub use episode::{run_episode, run_episode_with, EpisodeResult, StepRecord, Termination};
pub use metrics::{compute_metrics, spl_term, Metrics};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid episode config: {0}")]
    Config(String),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("no episodes to aggregate")]
    Empty,
    #[error("no scenarios given")]
    NoScenarios,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScorerConfig {
    Mock {
        table: BTreeMap<Sector, f64>,
        default: f64,
    },
    Oracle {
        lambda: f64,
    },
    External {
        endpoint: String,
        model: String,
        timeout_secs: f64,
    },
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::Oracle {
            lambda: DEFAULT_ORACLE_LAMBDA,
        }
    }
}

impl ScorerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ScorerConfig::Mock { .. } => "mock",
            ScorerConfig::Oracle { .. } => "oracle",
            ScorerConfig::External { .. } => "external",
        }
    }

    /// Instantiates the provider for one world.
    pub fn build(&self, world: &Arc<WorldSpec>) -> Result<Arc<dyn Scorer>, ScorerError> {
        Ok(match self {
            ScorerConfig::Mock { table, default } => Arc::new(MockScorer::new(table.clone(), *default)?),
            ScorerConfig::Oracle { lambda } => Arc::new(OracleScorer::new(world.clone(), *lambda)?),
            ScorerConfig::External {
                endpoint,
                model,
                timeout_secs,
            } => {
                if !(*timeout_secs > 0.0) {
                    return Err(ScorerError::Config("timeout must be positive".into()));
                }
                Arc::new(ExternalScorer::new(endpoint.clone(), Duration::from_secs_f64(*timeout_secs))?.model(model.clone()))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub planner: PlannerKind,
    pub scorer: ScorerConfig,
    pub max_steps: usize,
    pub sensor: SensorConfig,
    pub costs: LspCosts,
    /// Most frontiers handed to the planner per decision.
    pub max_frontiers: usize,
    pub seed: u64,
    /// Forced replanning cadence in steps.
    pub replan_interval: usize,
    /// Radius for reading frontier probabilities off the value map.
    pub readout_radius: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            planner: PlannerKind::Lsp,
            scorer: ScorerConfig::default(),
            max_steps: DEFAULT_MAX_STEPS,
            sensor: SensorConfig::default(),
            costs: LspCosts::default(),
            max_frontiers: DEFAULT_MAX_FRONTIERS,
            seed: 0,
            replan_interval: 20,
            readout_radius: DEFAULT_READOUT_RADIUS,
        }
    }
}

impl EpisodeConfig {
    pub fn with_planner(planner: PlannerKind) -> Self {
        Self {
            planner,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.max_steps == 0 {
            return Err(HarnessError::Config("max_steps must be at least 1".into()));
        }
        if !(1..=MAX_DP_FRONTIERS).contains(&self.max_frontiers) {
            return Err(HarnessError::Config(format!("K must lie in 1..={MAX_DP_FRONTIERS}")));
        }
        if self.replan_interval == 0 {
            return Err(HarnessError::Config("replan interval must be at least 1".into()));
        }
        if !(self.costs.success >= 0.0 && self.costs.exploration >= 0.0) {
            return Err(HarnessError::Config("R_S and R_E must be non-negative".into()));
        }
        if !(self.readout_radius >= 0.0) {
            return Err(HarnessError::Config("readout radius must be non-negative".into()));
        }
        self.sensor.validate()?;
        Ok(())
    }

    pub fn config_id(&self) -> String {
        format!("{}-{}", self.planner, self.scorer.name())
    }
}
