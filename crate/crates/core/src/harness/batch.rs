use std::io::Write;
use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{compute_metrics, run_episode_with, EpisodeConfig, EpisodeResult, HarnessError, StepRecord};
use crate::gridworld::{generate_scenario, load_scenario, GenParams, WorldSpec};
use crate::scorer::{Scorer, ScorerError};

/// Where a batch's worlds come from.
#[derive(Debug, Clone)]
pub enum ScenarioSource {
    Seeds(Range<u64>, GenParams),
    Files(Vec<PathBuf>),
}

#[derive(Debug, Clone)]
pub struct NamedWorld {
    pub name: String,
    pub world: Arc<WorldSpec>,
}

pub fn load_scenarios(source: &ScenarioSource) -> Result<Vec<NamedWorld>, HarnessError> {
    let worlds: Vec<NamedWorld> = match source {
        ScenarioSource::Seeds(range, params) => range
            .clone()
            .map(|seed| {
                Ok(NamedWorld {
                    name: format!("seed{seed}"),
                    world: Arc::new(generate_scenario(seed, params)?),
                })
            })
            .collect::<Result<_, HarnessError>>()?,
        ScenarioSource::Files(paths) => paths
            .iter()
            .map(|p| {
                let name = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| p.display().to_string());
                Ok(NamedWorld {
                    name,
                    world: Arc::new(load_scenario(p)?),
                })
            })
            .collect::<Result<_, HarnessError>>()?,
    };
    if worlds.is_empty() {
        return Err(HarnessError::NoScenarios);
    }
    Ok(worlds)
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub config_id: String,
    pub scenario: String,
    pub result: EpisodeResult,
}

pub const CSV_HEADER: [&str; 8] = [
    "config_id",
    "planner",
    "scorer",
    "episodes",
    "SR",
    "SPL",
    "mean_steps",
    "mean_path_m",
];

/// One CSV line per configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub config_id: String,
    pub planner: String,
    pub scorer: String,
    pub episodes: usize,
    pub sr: f64,
    pub spl: f64,
    pub mean_steps: f64,
    pub mean_path_m: f64,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub rows: Vec<SummaryRow>,
    /// Ordered by configuration, then scenario.
    pub episodes: Vec<EpisodeOutcome>,
}

impl BatchOutcome {
    pub fn results_for(&self, config_id: &str) -> Vec<&EpisodeResult> {
        self.episodes
            .iter()
            .filter(|e| e.config_id == config_id)
            .map(|e| &e.result)
            .collect()
    }
}

fn unique_ids(variants: &[EpisodeConfig]) -> Vec<String> {
    let base: Vec<String> = variants.iter().map(EpisodeConfig::config_id).collect();
    base.iter()
        .enumerate()
        .map(|(i, id)| {
            if base.iter().filter(|b| *b == id).count() > 1 {
                format!("{id}-{i}")
            } else {
                id.clone()
            }
        })
        .collect()
}

/// Runs every configuration on every world. Episodes run in parallel, and
/// results come back in a fixed order, so output does not depend on
/// scheduling. A panicking episode is logged and counted as a failure.
pub fn run_batch(
    worlds: &[NamedWorld],
    variants: &[EpisodeConfig],
    snapshot_dir: Option<&Path>,
) -> Result<BatchOutcome, HarnessError> {
    run_batch_with(worlds, variants, snapshot_dir, |config, world| config.scorer.build(world))
}

/// [`run_batch`] with a caller-supplied scorer per `(config, world)`.
pub fn run_batch_with<F>(
    worlds: &[NamedWorld],
    variants: &[EpisodeConfig],
    snapshot_dir: Option<&Path>,
    make_scorer: F,
) -> Result<BatchOutcome, HarnessError>
where
    F: Fn(&EpisodeConfig, &Arc<WorldSpec>) -> Result<Arc<dyn Scorer>, ScorerError> + Sync,
{
    if worlds.is_empty() {
        return Err(HarnessError::NoScenarios);
    }
    for v in variants {
        v.validate()?;
    }
    let ids = unique_ids(variants);
    let jobs: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..worlds.len()).map(move |w| (v, w)))
        .collect();
    let episodes: Vec<EpisodeOutcome> = jobs
        .par_iter()
        .map(|&(v, w)| {
            let config = &variants[v];
            let named = &worlds[w];
            let label = format!("{}_{}", ids[v], named.name);
            let result = catch_unwind(AssertUnwindSafe(|| -> Result<EpisodeResult, HarnessError> {
                let scorer = make_scorer(config, &named.world)?;
                run_episode_with(
                    &named.world,
                    config,
                    scorer.as_ref(),
                    snapshot_dir.map(|d| (d, label.as_str())),
                )
            }));
            let result = match result {
                Ok(r) => r?,
                Err(_) => {
                    log::error!("episode {label} panicked; recorded as failure");
                    EpisodeResult::aborted(&named.world)
                }
            };
            Ok(EpisodeOutcome {
                config_id: ids[v].clone(),
                scenario: named.name.clone(),
                result,
            })
        })
        .collect::<Result<_, HarnessError>>()?;

    let rows = variants
        .iter()
        .zip(&ids)
        .map(|(config, id)| {
            let results: Vec<EpisodeResult> = episodes
                .iter()
                .filter(|e| &e.config_id == id)
                .map(|e| e.result.clone())
                .collect();
            let m = compute_metrics(&results)?;
            let n = results.len() as f64;
            Ok(SummaryRow {
                config_id: id.clone(),
                planner: config.planner.to_string(),
                scorer: config.scorer.name().to_string(),
                episodes: results.len(),
                sr: m.sr,
                spl: m.spl,
                mean_steps: results.iter().map(|r| r.steps as f64).sum::<f64>() / n,
                mean_path_m: results.iter().map(|r| r.agent_path_length).sum::<f64>() / n,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok(BatchOutcome { rows, episodes })
}

pub fn write_summary_csv(rows: &[SummaryRow], out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.config_id.clone(),
            r.planner.clone(),
            r.scorer.clone(),
            r.episodes.to_string(),
            format!("{:.4}", r.sr),
            format!("{:.4}", r.spl),
            format!("{:.4}", r.mean_steps),
            format!("{:.4}", r.mean_path_m),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TraceLine<'a> {
    Step {
        config_id: &'a str,
        scenario: &'a str,
        #[serde(flatten)]
        record: &'a StepRecord,
    },
    Episode {
        config_id: &'a str,
        scenario: &'a str,
        #[serde(flatten)]
        result: &'a EpisodeResult,
    },
}

/// One JSON object per step, then one `"kind":"episode"` summary line per
/// episode.
pub fn write_traces_jsonl(episodes: &[EpisodeOutcome], mut out: impl Write) -> Result<(), HarnessError> {
    for e in episodes {
        for record in &e.result.trace {
            let line = TraceLine::Step {
                config_id: &e.config_id,
                scenario: &e.scenario,
                record,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        let line = TraceLine::Episode {
            config_id: &e.config_id,
            scenario: &e.scenario,
            result: &e.result,
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
