use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semnav::gridworld::{generate_scenario, save_scenario, GenParams};
use semnav::harness::{
    load_scenarios, run_batch, write_summary_csv, write_traces_jsonl, EpisodeConfig, HarnessError, ScenarioSource,
    ScorerConfig,
};
use semnav::planner::{LspCosts, PlannerKind};
use semnav::scorer::{MockScorer, DEFAULT_ORACLE_LAMBDA};
use semnav::SensorConfig;

#[derive(Parser)]
#[command(name = "semnav", version, about = "Object-goal navigation on 2D grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write a summary table.
    Run(Box<RunArgs>),
    /// Write generated scenarios to files.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario files (repeatable).
    #[arg(long, num_args = 1.., required_unless_present = "seeds", conflicts_with = "seeds")]
    scenario: Vec<PathBuf>,
    /// Half-open seed range for generated worlds, e.g. 0..100.
    #[arg(long, value_parser = parse_range)]
    seeds: Option<(u64, u64)>,
    /// Planners to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "lsp")]
    planner: Vec<PlannerKind>,
    #[arg(long, default_value = "oracle", value_parser = ["mock", "oracle", "external"])]
    scorer: String,
    #[arg(long, default_value_t = 500)]
    max_steps: usize,
    /// Success cost R_S, meters.
    #[arg(long, default_value_t = 3.0)]
    rs: f64,
    /// Exploration cost R_E, meters.
    #[arg(long, default_value_t = 6.0)]
    re: f64,
    /// Frontiers kept per decision.
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-step JSONL trace path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Directory for map and value-map PGM snapshots.
    #[arg(long)]
    snapshots: Option<PathBuf>,
    #[arg(long)]
    vlm_endpoint: Option<String>,
    #[arg(long, default_value = "gpt-4o")]
    vlm_model: String,
    #[arg(long, default_value_t = 30.0)]
    vlm_timeout: f64,
    /// Mock scores per sector, e.g. east=0.9,north=0.2.
    #[arg(long, default_value = "")]
    mock_table: String,
    #[arg(long, default_value_t = 0.5)]
    mock_default: f64,
    /// Decay length of the oracle scorer, meters.
    #[arg(long, default_value_t = DEFAULT_ORACLE_LAMBDA)]
    lambda: f64,
    #[arg(long, default_value_t = 90.0)]
    fov: f64,
    #[arg(long, default_value_t = 91)]
    rays: usize,
    #[arg(long, default_value_t = 5.0)]
    max_range: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_range)]
    seeds: (u64, u64),
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 40)]
    width: usize,
    #[arg(long, default_value_t = 32)]
    height: usize,
}

fn parse_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if b <= a {
        return Err("empty seed range".into());
    }
    Ok((a, b))
}

fn scorer_config(args: &RunArgs) -> Result<ScorerConfig, String> {
    Ok(match args.scorer.as_str() {
        "mock" => ScorerConfig::Mock {
            table: MockScorer::parse_table(&args.mock_table).map_err(|e| e.to_string())?,
            default: args.mock_default,
        },
        "oracle" => ScorerConfig::Oracle { lambda: args.lambda },
        _ => ScorerConfig::External {
            endpoint: args
                .vlm_endpoint
                .clone()
                .ok_or("--scorer external requires --vlm-endpoint")?,
            model: args.vlm_model.clone(),
            timeout_secs: args.vlm_timeout,
        },
    })
}

fn run(args: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let scorer = scorer_config(&args)?;
    let variants: Vec<EpisodeConfig> = args
        .planner
        .iter()
        .map(|&planner| EpisodeConfig {
            planner,
            scorer: scorer.clone(),
            max_steps: args.max_steps,
            sensor: SensorConfig {
                fov_deg: args.fov,
                rays: args.rays,
                max_range: args.max_range,
            },
            costs: LspCosts {
                success: args.rs,
                exploration: args.re,
            },
            max_frontiers: args.k,
            seed: args.seed,
            ..EpisodeConfig::default()
        })
        .collect();
    let source = match args.seeds {
        Some((a, b)) => ScenarioSource::Seeds(a..b, GenParams::default()),
        None => ScenarioSource::Files(args.scenario.clone()),
    };
    let worlds = load_scenarios(&source)?;
    if let Some(dir) = &args.snapshots {
        std::fs::create_dir_all(dir)?;
    }
    let outcome = run_batch(&worlds, &variants, args.snapshots.as_deref())?;
    match &args.out {
        Some(p) => write_summary_csv(&outcome.rows, BufWriter::new(File::create(p)?))?,
        None => write_summary_csv(&outcome.rows, io::stdout().lock())?,
    }
    if let Some(p) = &args.trace {
        write_traces_jsonl(&outcome.episodes, BufWriter::new(File::create(p)?))?;
    }
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), Box<dyn std::error::Error>> {
    let params = GenParams {
        width: args.width,
        height: args.height,
        ..GenParams::default()
    };
    std::fs::create_dir_all(&args.out)?;
    for seed in args.seeds.0..args.seeds.1 {
        let world = generate_scenario(seed, &params)?;
        let path = args.out.join(format!("seed{seed}.txt"));
        save_scenario(&world, &path)?;
        writeln!(io::stderr(), "wrote {}", path.display())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(*args),
        Command::Generate(args) => generate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.downcast_ref::<HarnessError>().is_some_and(|h| matches!(h, HarnessError::NoScenarios)) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
