use serde::{Deserialize, Serialize};

use super::{EpisodeResult, HarnessError};

/// Success rate and success weighted by path length, both in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sr: f64,
    pub spl: f64,
}

/// Per-episode SPL term `S · l / max(p, l)`. A successful episode with
/// `max(p, l) = 0` scores 1.
pub fn spl_term(success: bool, shortest: f64, travelled: f64) -> f64 {
    if !success {
        return 0.0;
    }
    let denom = travelled.max(shortest);
    if denom <= 0.0 {
        1.0
    } else {
        shortest / denom
    }
}

pub fn compute_metrics(results: &[EpisodeResult]) -> Result<Metrics, HarnessError> {
    if results.is_empty() {
        return Err(HarnessError::Empty);
    }
    let n = results.len() as f64;
    let successes = results.iter().filter(|r| r.success).count() as f64;
    let spl_sum: f64 = results
        .iter()
        .map(|r| match r.oracle_shortest {
            Some(l) => spl_term(r.success, l, r.agent_path_length),
            None => 0.0,
        })
        .sum();
    Ok(Metrics {
        sr: 100.0 * successes / n,
        spl: 100.0 * spl_sum / n,
    })
}
