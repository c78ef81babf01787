//! Semantic likelihood providers: "how likely is the target if I keep going
//! this way?"
//!
//! All providers return a value in `[0, 1]`. The simulated ones (table mock
//! and ground-truth oracle) additionally stay within `[ε, 1−ε]`.

mod external;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Cell, DistanceField};
use crate::gridworld::{AgentPose, DepthScan, WorldSpec};
use crate::PROB_EPSILON;

pub use external::{extract_likelihood, likelihood_prompt, render_depth_png, ExternalScorer, API_KEY_ENV};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer configuration: {0}")]
    Config(String),
    #[error("scorer unavailable: {0}")]
    Unavailable(String),
    #[error("unparsable scorer reply: {0:?}")]
    Parse(String),
    #[error("request lacks the observation payload this scorer needs")]
    WrongPayload,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    /// Simulated depth context.
    Scan(DepthScan),
    /// Encoded PNG bytes for image-based providers.
    Image(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRequest {
    pub target_label: String,
    pub observation: Observation,
    pub pose: AgentPose,
}

pub trait Scorer: Send + Sync {
    fn score(&self, req: &ScoreRequest) -> Result<f64, ScorerError>;

    /// Whether requests must carry [`Observation::Image`].
    fn needs_image(&self) -> bool {
        false
    }
}

impl<S: Scorer + ?Sized> Scorer for Arc<S> {
    fn score(&self, req: &ScoreRequest) -> Result<f64, ScorerError> {
        (**self).score(req)
    }

    fn needs_image(&self) -> bool {
        (**self).needs_image()
    }
}

fn clamp_simulated(p: f64) -> f64 {
    p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON)
}

/// 45° compass sector containing a heading; east is centered on 0°.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    East,
    NorthEast,
    North,
    NorthWest,
    West,
    SouthWest,
    South,
    SouthEast,
}

impl Sector {
    const ALL: [Sector; 8] = [
        Sector::East,
        Sector::NorthEast,
        Sector::North,
        Sector::NorthWest,
        Sector::West,
        Sector::SouthWest,
        Sector::South,
        Sector::SouthEast,
    ];

    pub fn of_heading(deg: f64) -> Self {
        let idx = ((deg.rem_euclid(360.0) + 22.5) / 45.0).floor() as usize % 8;
        Self::ALL[idx]
    }
}

impl FromStr for Sector {
    type Err = ScorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "e" | "east" => Sector::East,
            "ne" | "northeast" => Sector::NorthEast,
            "n" | "north" => Sector::North,
            "nw" | "northwest" => Sector::NorthWest,
            "w" | "west" => Sector::West,
            "sw" | "southwest" => Sector::SouthWest,
            "s" | "south" => Sector::South,
            "se" | "southeast" => Sector::SouthEast,
            other => return Err(ScorerError::Config(format!("unknown sector `{other}`"))),
        })
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sector::East => "east",
            Sector::NorthEast => "northeast",
            Sector::North => "north",
            Sector::NorthWest => "northwest",
            Sector::West => "west",
            Sector::SouthWest => "southwest",
            Sector::South => "south",
            Sector::SouthEast => "southeast",
        };
        f.write_str(s)
    }
}

/// Fixed score per heading sector.
#[derive(Debug, Clone, PartialEq)]
pub struct MockScorer {
    table: BTreeMap<Sector, f64>,
    default: f64,
}

impl MockScorer {
    pub fn new(table: BTreeMap<Sector, f64>, default: f64) -> Result<Self, ScorerError> {
        for (sector, &v) in &table {
            if !(0.0..=1.0).contains(&v) {
                return Err(ScorerError::Config(format!("value {v} for {sector} outside [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&default) {
            return Err(ScorerError::Config(format!("default {default} outside [0, 1]")));
        }
        Ok(Self { table, default })
    }

    /// Parses `east=0.9,north=0.2`.
    pub fn parse_table(spec: &str) -> Result<BTreeMap<Sector, f64>, ScorerError> {
        spec.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|entry| {
                let (k, v) = entry
                    .split_once('=')
                    .ok_or_else(|| ScorerError::Config(format!("expected sector=value, got `{entry}`")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| ScorerError::Config(format!("bad value in `{entry}`")))?;
                Ok((k.parse()?, v))
            })
            .collect()
    }
}

impl Scorer for MockScorer {
    fn score(&self, req: &ScoreRequest) -> Result<f64, ScorerError> {
        let sector = Sector::of_heading(req.pose.heading.degrees() as f64);
        Ok(clamp_simulated(*self.table.get(&sector).unwrap_or(&self.default)))
    }
}

/// Ground-truth stand-in for a vision-language model: `exp(−d/λ)`, where `d`
/// is the geodesic distance from the point the optical axis reaches to the
/// nearest target approach cell.
#[derive(Debug, Clone)]
pub struct OracleScorer {
    world: Arc<WorldSpec>,
    field: Arc<DistanceField>,
    lambda: f64,
}

pub const DEFAULT_ORACLE_LAMBDA: f64 = 5.0;

impl OracleScorer {
    pub fn new(world: Arc<WorldSpec>, lambda: f64) -> Result<Self, ScorerError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ScorerError::Config(format!("lambda must be positive, got {lambda}")));
        }
        let field = Arc::new(world.distance_field(world.target_approach_cells()));
        Ok(Self { world, field, lambda })
    }

    /// Last traversable cell along the optical axis within `max_range`.
    pub fn axis_endpoint(&self, pose: AgentPose, max_range: f64) -> Option<Cell> {
        let dims = self.world.dims();
        let mut last = None;
        for (cell, _) in dims.ray_cells(pose.position(), pose.heading.unit(), max_range) {
            if self.world.is_blocked(cell) {
                break;
            }
            last = Some(cell);
        }
        last
    }

    /// Likelihood for a known remaining distance (meters, `None` = no path).
    pub fn likelihood(&self, remaining: Option<f64>) -> f64 {
        match remaining {
            Some(d) => clamp_simulated((-d / self.lambda).exp()),
            None => PROB_EPSILON,
        }
    }
}

impl Scorer for OracleScorer {
    fn score(&self, req: &ScoreRequest) -> Result<f64, ScorerError> {
        let max_range = match &req.observation {
            Observation::Scan(scan) => scan.max_range,
            Observation::Image(_) => crate::gridworld::SensorConfig::default().max_range,
        };
        let remaining = self
            .axis_endpoint(req.pose, max_range)
            .and_then(|cell| self.field.get(cell));
        Ok(self.likelihood(remaining))
    }
}
