//! `mapf-lab` command-line front end.
//!
//! Machine-readable results go to stdout (JSON) or to files; diagnostics go
//! to stderr. Exit status is 0 on success, 1 when the domain answer is
//! negative (unsolved instance, conflicting plan) and 2 for usage or
//! configuration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mapf_lab::bench::{
    self, aggregate, export, parse_config_partial, parse_duration, ExperimentConfig, ExportFormat, MapSpec,
};
use mapf_lab::high_level::{solve, Budget, Outcome, Strategy};
use mapf_lab::instance::ProblemInstance;
use mapf_lab::map::{parse_map, parse_scenario, random_scenario, GridMap};
use mapf_lab::plan_file::PlanFile;
use mapf_lab::roadmap::{build_roadmap, GridRoadmap, DEFAULT_ROBOT_WIDTH};
use mapf_lab::topology::{analyze, write_heatmap, ClassifierConfig};
use mapf_lab::validate_plan;

const DATA_ENV: &str = "MAPF_LAB_DATA";

#[derive(Parser)]
#[command(
    name = "mapf-lab",
    version,
    about = "Constraint-based multi-agent pathfinding on grid roadmaps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print the outcome.
    Solve(SolveArgs),
    /// Run the benchmark protocol and write records and aggregates.
    Bench(BenchArgs),
    /// Classify a map's topology and write a centrality heatmap.
    Topology(TopologyArgs),
    /// Check a plan file for invalid moves and conflicts.
    Validate(ValidateArgs),
    /// Build a roadmap and write its vertices and edges as JSON.
    Roadmap(RoadmapArgs),
}

#[derive(Args)]
struct MapArgs {
    /// MovingAI .map file; relative paths are also looked up under $MAPF_LAB_DATA.
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 1)]
    resolution: u32,
    #[arg(long, default_value_t = DEFAULT_ROBOT_WIDTH)]
    robot_width: f64,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Scenario file. Without it, seeded random start/goal pairs are drawn.
    #[arg(long)]
    scen: Option<PathBuf>,
    #[arg(long)]
    agents: usize,
    #[arg(long, default_value = "cbs")]
    strategy: Strategy,
    /// Wall-clock limit such as 60, 1.5s or 500ms.
    #[arg(long, default_value = "60s", value_parser = parse_duration)]
    time_limit: Duration,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the plan JSON when solved.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Config file, `key = value` lines or JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Maps to run instead of (or in addition to) the config's.
    #[arg(long)]
    map: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    resolution: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<Strategy>>,
    #[arg(long)]
    scenarios: Option<usize>,
    #[arg(long, value_parser = parse_duration)]
    time_limit: Option<Duration>,
    #[arg(long)]
    node_limit: Option<usize>,
    #[arg(long)]
    max_agents: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Use the full-size protocol (25 scenarios, 15 minutes, r = 1, 2, 4).
    #[arg(long)]
    full_scale: bool,
    /// Run directory.
    #[arg(long, default_value = "mapf-lab-run")]
    out: PathBuf,
}

#[derive(Args)]
struct TopologyArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Classifier thresholds as JSON.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    #[arg(long)]
    empty_cv: Option<f64>,
    #[arg(long)]
    high_threshold: Option<f64>,
    #[arg(long)]
    chain_min: Option<usize>,
    #[arg(long)]
    narrow_fraction: Option<f64>,
    /// Heatmap CSV (`x,y,bc`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    map: PathBuf,
    /// Defaults to the resolution stored in the plan.
    #[arg(long)]
    resolution: Option<u32>,
    #[arg(long)]
    plan: PathBuf,
}

#[derive(Args)]
struct RoadmapArgs {
    #[command(flatten)]
    map: MapArgs,
    /// Output JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Why a command did not succeed, mapped to the exit status.
#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn data_root() -> Option<PathBuf> {
    std::env::var_os(DATA_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// `path` as given if it exists, else under the data root.
fn locate(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match data_root() {
        Some(root) if root.join(path).exists() => root.join(path),
        _ => path.to_path_buf(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load_map(path: &Path) -> Result<(PathBuf, GridMap), Failure> {
    let path = locate(path);
    let map = parse_map(&read(&path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok((path, map))
}

fn load_roadmap(args: &MapArgs) -> Result<(PathBuf, Arc<GridRoadmap>), Failure> {
    let (path, map) = load_map(&args.map)?;
    let roadmap = build_roadmap(map, args.resolution, args.robot_width).map_err(usage)?;
    Ok((path, Arc::new(roadmap)))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes to stdout, tolerating a closed pipe.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}").and_then(|_| out.flush());
}

fn print_json(value: &serde_json::Value) {
    emit(&serde_json::to_string_pretty(value).expect("json value"));
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let (map_path, roadmap) = load_roadmap(&args.map)?;
    let entries = match &args.scen {
        Some(scen) => parse_scenario(&read(&locate(scen))?, roadmap.map()).map_err(usage)?,
        None => random_scenario(roadmap.map(), args.agents, args.seed)
            .ok_or_else(|| Failure::Usage(format!("the map has fewer than {} connected free cells", args.agents)))?,
    };
    let instance = ProblemInstance::from_scenario(Arc::clone(&roadmap), &entries, args.agents).map_err(usage)?;
    let budget = Budget {
        time_limit: Some(args.time_limit),
        node_limit: args.node_limit,
        ..Budget::default()
    };
    let result = solve(&instance, args.strategy, &budget);
    print_json(&json!({
        "outcome": result.outcome,
        "strategy": result.strategy,
        "agents": args.agents,
        "resolution": args.map.resolution,
        "cost": result.cost,
        "makespan": result.plan.as_ref().map(|p| p.makespan()),
        "stats": result.stats,
    }));
    if let (Some(plan), Some(out)) = (&result.plan, &args.out) {
        let file = PlanFile::new(
            file_name(&map_path),
            args.map.resolution,
            args.map.robot_width,
            Some(args.strategy),
            plan,
        );
        write(out, &file.to_json())?;
        eprintln!("plan written to {}", out.display());
    }
    match result.outcome {
        Outcome::Solved => Ok(()),
        other => Err(Failure::Domain(format!("instance not solved: {}", other.name()))),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let root = data_root();
    let mut config = match &args.config {
        Some(path) => {
            let text = read(path)?;
            let base = path.parent().unwrap_or(Path::new("."));
            parse_config_partial(&text, base, root.as_deref()).map_err(usage)?
        }
        None => ExperimentConfig::default(),
    };
    if args.full_scale {
        config = config.full_scale();
    }
    for m in &args.map {
        config.maps.push(MapSpec::new(locate(m)));
    }
    if let Some(v) = args.resolution {
        config.resolutions = v;
    }
    if let Some(v) = args.strategy {
        config.strategies = v;
    }
    if let Some(v) = args.scenarios {
        config.scenarios_per_map = v;
    }
    if let Some(v) = args.time_limit {
        config.time_limit = v;
    }
    if args.node_limit.is_some() {
        config.node_limit = args.node_limit;
    }
    if args.max_agents.is_some() {
        config.max_agents = args.max_agents;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.workers {
        config.workers = v;
    }
    config.validate().map_err(usage)?;

    let records = bench::run_experiment(&config, Some(&args.out), &|r| {
        eprintln!(
            "{} r={} s={} n={} {}: {} {:.1} ms",
            r.map,
            r.resolution,
            r.scenario,
            r.agents,
            r.strategy,
            r.outcome.name(),
            r.time_ms
        );
    })
    .map_err(usage)?;
    let all = args.out.join("records.csv");
    bench::write_records_csv(&records, &all).map_err(usage)?;
    let metrics = aggregate(&records).map_err(usage)?;
    export(&metrics, ExportFormat::Json, &args.out.join("aggregate.json")).map_err(usage)?;
    export(&metrics, ExportFormat::Csv, &args.out.join("runtime_instances.csv")).map_err(usage)?;
    let solved = records.iter().filter(|r| r.outcome == Outcome::Solved).count();
    print_json(&json!({
        "out": args.out,
        "records": records.len(),
        "solved": solved,
        "mean_cost_ratio": metrics.mean_cost_ratio(),
    }));
    Ok(())
}

fn cmd_topology(args: TopologyArgs) -> Result<(), Failure> {
    let mut config = match &args.thresholds {
        Some(path) => serde_json::from_str::<ClassifierConfig>(&read(path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => ClassifierConfig::default(),
    };
    config.resolution = args.map.resolution;
    if let Some(v) = args.empty_cv {
        config.empty_cv_threshold = v;
    }
    if let Some(v) = args.high_threshold {
        config.high_threshold = v;
    }
    if let Some(v) = args.chain_min {
        config.chain_min = v;
    }
    if let Some(v) = args.narrow_fraction {
        config.narrow_fraction = v;
    }
    let (map_path, roadmap) = load_roadmap(&args.map)?;
    let (field, label) = analyze(&roadmap, &config).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(out) = &args.out {
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(usage)?;
        }
        write_heatmap(&roadmap, &field, out).map_err(usage)?;
        eprintln!("heatmap written to {}", out.display());
    }
    print_json(&json!({
        "map": file_name(&map_path),
        "resolution": args.map.resolution,
        "vertices": roadmap.num_vertices(),
        "label": label.label,
        "evidence": label.evidence,
    }));
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let text = read(&args.plan)?;
    let file = PlanFile::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", args.plan.display())))?;
    let resolution = args.resolution.unwrap_or(file.resolution);
    let (_, map) = load_map(&args.map)?;
    let roadmap = Arc::new(build_roadmap(map, resolution, file.robot_width).map_err(usage)?);
    if file.paths.iter().any(|p| p.states.is_empty()) {
        return Err(Failure::Usage("plan contains an empty path".into()));
    }
    if file.paths.iter().flat_map(|p| &p.states).any(|v| !roadmap.contains(*v)) {
        return Err(Failure::Domain(format!(
            "plan refers to vertices outside the roadmap at resolution {resolution}"
        )));
    }
    let instance = ProblemInstance::new(Arc::clone(&roadmap), file.tasks())
        .map_err(|e| Failure::Domain(format!("invalid plan: {e}")))?;
    let plan = file.plan();
    let conflicts =
        validate_plan(&plan, &roadmap, &instance).map_err(|e| Failure::Domain(format!("invalid plan: {e}")))?;
    print_json(&json!({
        "valid": conflicts.is_empty(),
        "cost": plan.cost(),
        "makespan": plan.makespan(),
        "conflicts": conflicts,
    }));
    if conflicts.is_empty() {
        Ok(())
    } else {
        Err(Failure::Domain(format!("{} conflict(s) found", conflicts.len())))
    }
}

fn cmd_roadmap(args: RoadmapArgs) -> Result<(), Failure> {
    let (_, roadmap) = load_roadmap(&args.map)?;
    let text = serde_json::to_string(&roadmap.to_json()).expect("roadmap json");
    eprintln!(
        "{} vertices, {} edges at resolution {}",
        roadmap.num_vertices(),
        roadmap.num_edges(),
        roadmap.resolution()
    );
    match &args.out {
        Some(out) => write(out, &text),
        None => {
            emit(&text);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Topology(a) => cmd_topology(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Roadmap(a) => cmd_roadmap(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mapf-lab: {f}");
            ExitCode::from(f.code())
        }
    }
}
