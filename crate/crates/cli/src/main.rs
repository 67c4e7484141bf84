use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use segcube::check::self_check;
use segcube::clustering::{connected_components, threshold_components, UnitAssignment};
use segcube::cube::ClusteringDescriptor;
use segcube::export::{export_csv, export_json, parse_json, report_summary};
use segcube::indexes::IndexKind;
use segcube::pipeline::{
    cube_from_table, load_assignment, load_dataset, load_schema, read_text, run_pipeline, write_cube, write_file,
    RunConfig,
};
use segcube::projection::{project_with, ProjectedGraph, ProjectionOptions, ProjectionSide};
use segcube::schema::SnapshotDate;
use segcube::table::{build_individual_table, build_table, load_table};

mod wizard;

#[derive(Parser)]
#[command(name = "segcube", version, about = "Segregation data cubes from affiliation data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline for every snapshot.
    Run(Box<RunArgs>),
    /// Project the membership graph onto groups or individuals.
    Project(ProjectArgs),
    /// Partition a projected graph into units.
    Cluster(ClusterArgs),
    /// Build the unit table from graph inputs and a unit assignment.
    Table(TableArgs),
    /// Mine a unit table and write the cube.
    Cube(CubeArgs),
    /// Re-export a cube document as JSON, CSV or a text summary.
    Export(ExportArgs),
    /// Run the built-in oracle checks.
    Check(CheckArgs),
}

/// Flags shared with the config file; each maps onto one config key.
#[derive(Args, Default)]
struct ConfigFlags {
    #[arg(long, value_name = "tabular|unipartite|bipartite")]
    mode: Option<String>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    individuals: Option<PathBuf>,
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long)]
    membership: Option<PathBuf>,
    #[arg(long)]
    final_table: Option<PathBuf>,
    /// Precomputed `nodeID,unitID` assignment (unipartite mode).
    #[arg(long)]
    node_units: Option<PathBuf>,
    /// File with a `date` column listing snapshot dates.
    #[arg(long)]
    snapshot_file: Option<PathBuf>,
    /// Snapshot date, repeatable.
    #[arg(long = "snapshot", value_name = "YYYY-MM-DD")]
    snapshots: Vec<String>,
    #[arg(long, value_name = "groups|individuals")]
    project: Option<String>,
    #[arg(long)]
    max_pairs_per_hub: Option<u64>,
    #[arg(long, value_name = "cc|threshold")]
    clustering: Option<String>,
    #[arg(long)]
    min_weight: Option<u64>,
    #[arg(long, value_name = "int|percent")]
    minsup: Option<String>,
    #[arg(long, value_name = "D,G,H,ISO,INT,ATK")]
    indexes: Option<String>,
    #[arg(long)]
    atkinson_b: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
}

impl ConfigFlags {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let mut out = Vec::new();
        let mut push = |key: &'static str, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        push("mode", self.mode.clone());
        push("schema", path(&self.schema));
        push("individuals", path(&self.individuals));
        push("groups", path(&self.groups));
        push("membership", path(&self.membership));
        push("final_table", path(&self.final_table));
        push("node_units", path(&self.node_units));
        push("snapshot_file", path(&self.snapshot_file));
        push("snapshots", (!self.snapshots.is_empty()).then(|| self.snapshots.join(",")));
        push("project", self.project.clone());
        push("max_pairs_per_hub", self.max_pairs_per_hub.map(|v| v.to_string()));
        push("clustering", self.clustering.clone());
        push("min_weight", self.min_weight.map(|v| v.to_string()));
        push("minsup", self.minsup.clone());
        push("indexes", self.indexes.clone());
        push("atkinson_b", self.atkinson_b.map(|v| v.to_string()));
        push("out", path(&self.out));
        push("jobs", self.jobs.map(|v| v.to_string()));
        out
    }

    /// Config file first, then flags on top.
    fn resolve(&self, config: Option<&Path>) -> Result<RunConfig> {
        let mut cfg = match config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let mut errors = Vec::new();
        for (key, value) in self.pairs() {
            if let Err(e) = cfg.set(key, &value) {
                errors.push(format!("--{}: {e}", key.replace('_', "-")));
            }
        }
        if !errors.is_empty() {
            bail!(errors.join("\n"));
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    flags: ConfigFlags,
    /// `key=value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
    /// Prompt for each setting on the terminal.
    #[arg(long)]
    wizard: bool,
}

#[derive(Args)]
struct GraphInputs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    individuals: PathBuf,
    #[arg(long)]
    groups: PathBuf,
    #[arg(long)]
    membership: PathBuf,
    #[arg(long, value_name = "YYYY-MM-DD")]
    snapshot: Option<SnapshotDate>,
    #[arg(long, value_enum, default_value_t = Side::Groups)]
    project: Side,
}

impl GraphInputs {
    fn config(&self) -> RunConfig {
        RunConfig {
            schema: Some(self.schema.clone()),
            individuals: Some(self.individuals.clone()),
            groups: Some(self.groups.clone()),
            membership: Some(self.membership.clone()),
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Groups,
    Individuals,
}

impl From<Side> for ProjectionSide {
    fn from(s: Side) -> Self {
        match s {
            Side::Groups => ProjectionSide::Groups,
            Side::Individuals => ProjectionSide::Individuals,
        }
    }
}

#[derive(Args)]
struct ProjectArgs {
    #[command(flatten)]
    inputs: GraphInputs,
    #[arg(long)]
    max_pairs_per_hub: Option<u64>,
    /// Directory receiving `edges.csv` and `isolated.csv`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Cc,
    Threshold,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    isolated: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Cc)]
    clustering: Method,
    #[arg(long)]
    min_weight: Option<u64>,
    /// Output `nodeUnit.csv` path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    inputs: GraphInputs,
    #[arg(long)]
    node_units: PathBuf,
    /// Output `finalTable.csv` path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CubeArgs {
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    final_table: PathBuf,
    #[arg(long, default_value = "1%")]
    minsup: String,
    #[arg(long)]
    indexes: Option<String>,
    #[arg(long)]
    atkinson_b: Option<f64>,
    /// Directory receiving `cube.json`, `cube.csv` and `summary.txt`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Summary,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    cube: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Summary)]
    format: Format,
    /// Index for the summary; defaults to the document's first index.
    #[arg(long)]
    index: Option<IndexKind>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Directory of cube documents to validate as well.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(args) => run(*args),
        Command::Project(args) => {
            let dataset = load_dataset(&args.inputs.config())?;
            let graph = projected(&dataset, &args.inputs, args.max_pairs_per_hub);
            write_file(&args.out.join("edges.csv"), graph.edges_csv().as_bytes())?;
            write_file(&args.out.join("isolated.csv"), graph.isolated_csv().as_bytes())?;
            let stats = segcube::projection::degree_stats(&graph);
            println!(
                "{} nodes, {} edges, {} isolated, max weight {}",
                stats.nodes, stats.edges, stats.isolated, stats.max_weight
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Cluster(args) => {
            let edges = read_text(&args.edges)?;
            let isolated = read_text(&args.isolated)?;
            let graph = ProjectedGraph::from_csv(edges.as_bytes(), isolated.as_bytes())
                .with_context(|| format!("{} / {}", args.edges.display(), args.isolated.display()))?;
            let assignment = match (args.clustering, args.min_weight) {
                (Method::Cc, None) => connected_components(&graph),
                (Method::Threshold, Some(w)) => threshold_components(&graph, w),
                (Method::Cc, Some(_)) => bail!("--min-weight only applies to --clustering threshold"),
                (Method::Threshold, None) => bail!("--clustering threshold requires --min-weight"),
            };
            write_file(&args.out, assignment.to_csv().as_bytes())?;
            println!("{} nodes in {} units", assignment.len(), assignment.unit_count());
            Ok(ExitCode::SUCCESS)
        }
        Command::Table(args) => {
            let dataset = load_dataset(&args.inputs.config())?;
            let assignment: UnitAssignment = load_assignment(&args.node_units)?;
            let table = match args.inputs.project {
                Side::Groups => build_table(&dataset, &assignment, args.inputs.snapshot)?,
                Side::Individuals => build_individual_table(&dataset, &assignment, args.inputs.snapshot)?,
            };
            write_file(&args.out, table.to_csv().as_bytes())?;
            println!("{} rows", table.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Cube(args) => {
            let mut cfg = RunConfig::default();
            cfg.set("minsup", &args.minsup)?;
            if let Some(ix) = &args.indexes {
                cfg.set("indexes", ix)?;
            }
            if let Some(b) = args.atkinson_b {
                cfg.set("atkinson_b", &b.to_string())?;
            }
            let schema = load_schema(&args.schema)?;
            let text = read_text(&args.final_table)?;
            let table = load_table(text.as_bytes(), &schema).map_err(|errors| {
                anyhow!(errors
                    .iter()
                    .map(|e| format!("{}: {e}", args.final_table.display()))
                    .collect::<Vec<_>>()
                    .join("\n"))
            })?;
            let cube = cube_from_table(&table, &cfg, None, ClusteringDescriptor::tabular())?;
            write_cube(&args.out, &cube)?;
            println!("{} cells", cube.cells.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Export(args) => {
            let bytes = fs::read(&args.cube).with_context(|| args.cube.display().to_string())?;
            let cube = parse_json(&bytes).with_context(|| args.cube.display().to_string())?;
            let output = match args.format {
                Format::Json => export_json(&cube),
                Format::Csv => export_csv(&cube),
                Format::Summary => {
                    let index = args
                        .index
                        .or_else(|| cube.params.indexes.first().copied())
                        .unwrap_or(IndexKind::Dissimilarity);
                    report_summary(&cube, index).into_bytes()
                }
            };
            match &args.out {
                Some(path) => write_file(path, &output)?,
                None => io::stdout().write_all(&output)?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check(args) => {
            let report = self_check(args.fixtures.as_deref())?;
            print!("{report}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn projected(dataset: &segcube::Dataset, inputs: &GraphInputs, cap: Option<u64>) -> ProjectedGraph {
    let side: ProjectionSide = inputs.project.into();
    let nodes: Vec<&str> = match side {
        ProjectionSide::Groups => dataset.groups.iter().map(|g| g.id.as_str()).collect(),
        ProjectionSide::Individuals => dataset.individuals.iter().map(|i| i.id.as_str()).collect(),
    };
    let options = ProjectionOptions {
        side,
        max_pairs_per_hub: cap,
        ..Default::default()
    };
    project_with(&dataset.membership, nodes, inputs.snapshot, &options)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let mut cfg = args.flags.resolve(args.config.as_deref())?;
    if args.wizard {
        let stdin = io::stdin();
        cfg = wizard::prompt(stdin.lock(), io::stderr(), cfg)?;
    }
    if args.print_config {
        cfg.absolutize(&std::env::current_dir()?);
        print!("{}", cfg.to_config_text());
        return Ok(ExitCode::SUCCESS);
    }
    let report = run_pipeline(&cfg)?;
    for outcome in &report.outcomes {
        match &outcome.result {
            Ok(cells) => println!("{}: {cells} cells -> {}", outcome.label, outcome.dir.display()),
            Err(e) => eprintln!("error: snapshot {}: {e}", outcome.label),
        }
    }
    Ok(if report.success() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

