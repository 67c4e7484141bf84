//! End-to-end driver: configuration, per-snapshot fan-out and artifact layout.
//!
//! Each snapshot writes into `<out>/<date>/` (or `<out>/all/` when no date
//! applies): `edges.csv`, `isolated.csv`, `nodeUnit.csv` and `finalTable.csv`
//! where the stage ran, then `cube.json`, `cube.csv` and `summary.txt`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::clustering::{connected_components, threshold_components, AssignmentError, UnitAssignment};
use crate::cube::{build_cube, ClusteringDescriptor, CubeError, CubeParams, SegregationCube};
use crate::export::{export_csv, export_json, report_summary};
use crate::indexes::{IndexKind, DEFAULT_ATKINSON_B};
use crate::ingest::{parse_groups, parse_individuals, parse_membership, parse_snapshots, Dataset, IngestError};
use crate::miner::{encode, mine_closed, resolve_minsup};
use crate::projection::{project_with, ProjectionOptions, ProjectionSide};
use crate::schema::{AttributeSchema, SchemaError, SnapshotDate};
use crate::table::{build_individual_table, build_table, load_table, TableError, UnitTable};

/// Output directory name for runs without a snapshot date.
pub const ALL_LABEL: &str = "all";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// A ready unit table; no projection or clustering.
    Tabular,
    /// A precomputed node-to-unit assignment over one side of the graph.
    Unipartite,
    /// Individuals, groups and dated memberships.
    Bipartite,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Tabular => "tabular",
            Mode::Unipartite => "unipartite",
            Mode::Bipartite => "bipartite",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tabular" => Ok(Mode::Tabular),
            "unipartite" => Ok(Mode::Unipartite),
            "bipartite" => Ok(Mode::Bipartite),
            other => Err(format!("unknown mode `{other}` (expected tabular, unipartite or bipartite)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusteringChoice {
    Components,
    Threshold,
}

impl ClusteringChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusteringChoice::Components => "cc",
            ClusteringChoice::Threshold => "threshold",
        }
    }
}

impl FromStr for ClusteringChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cc" => Ok(ClusteringChoice::Components),
            "threshold" => Ok(ClusteringChoice::Threshold),
            other => Err(format!("unknown clustering `{other}` (expected cc or threshold)")),
        }
    }
}

/// Everything a run needs. Unset options fall back to the mode's needs;
/// `mode` itself is inferred from the inputs when absent.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub schema: Option<PathBuf>,
    pub individuals: Option<PathBuf>,
    pub groups: Option<PathBuf>,
    pub membership: Option<PathBuf>,
    pub final_table: Option<PathBuf>,
    pub node_units: Option<PathBuf>,
    pub snapshot_file: Option<PathBuf>,
    pub snapshots: Vec<SnapshotDate>,
    pub clustering: Option<ClusteringChoice>,
    pub min_weight: Option<u64>,
    pub minsup: String,
    pub indexes: Vec<IndexKind>,
    pub atkinson_b: f64,
    pub project: Option<ProjectionSide>,
    pub max_pairs_per_hub: Option<u64>,
    pub out: PathBuf,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: None,
            schema: None,
            individuals: None,
            groups: None,
            membership: None,
            final_table: None,
            node_units: None,
            snapshot_file: None,
            snapshots: Vec::new(),
            clustering: None,
            min_weight: None,
            minsup: "1%".into(),
            indexes: IndexKind::ALL.to_vec(),
            atkinson_b: DEFAULT_ATKINSON_B,
            project: None,
            max_pairs_per_hub: None,
            out: PathBuf::from("out"),
            jobs: 1,
        }
    }
}

/// Keys accepted by [`RunConfig::set`], in pipeline order.
pub const CONFIG_KEYS: &[&str] = &[
    "mode",
    "schema",
    "individuals",
    "groups",
    "membership",
    "final_table",
    "node_units",
    "snapshot_file",
    "snapshots",
    "project",
    "max_pairs_per_hub",
    "clustering",
    "min_weight",
    "minsup",
    "indexes",
    "atkinson_b",
    "out",
    "jobs",
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("{0}")]
    Inconsistent(String),
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    if value.is_empty() {
        return Ok(None);
    }
    value.parse().map(Some).map_err(|e: T::Err| ConfigError::InvalidValue {
        key: key.into(),
        message: e.to_string(),
    })
}

fn show<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    /// Sets one option from its textual form. An empty value resets an
    /// optional setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let invalid = |message: String| ConfigError::InvalidValue {
            key: key.into(),
            message,
        };
        match key {
            "mode" => self.mode = parse_opt(key, value)?,
            "schema" => self.schema = opt_path(value),
            "individuals" => self.individuals = opt_path(value),
            "groups" => self.groups = opt_path(value),
            "membership" => self.membership = opt_path(value),
            "final_table" => self.final_table = opt_path(value),
            "node_units" => self.node_units = opt_path(value),
            "snapshot_file" => self.snapshot_file = opt_path(value),
            "snapshots" => {
                let mut dates = Vec::new();
                for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    dates.push(
                        part.parse::<SnapshotDate>()
                            .map_err(|e| invalid(format!("`{part}`: {e}")))?,
                    );
                }
                self.snapshots = dates;
            }
            "project" => self.project = parse_opt(key, value)?,
            "max_pairs_per_hub" => self.max_pairs_per_hub = parse_opt(key, value)?,
            "clustering" => self.clustering = parse_opt(key, value)?,
            "min_weight" => self.min_weight = parse_opt(key, value)?,
            "minsup" => {
                resolve_minsup(value, 0).map_err(invalid)?;
                self.minsup = value.to_string();
            }
            "indexes" => self.indexes = IndexKind::parse_list(value).map_err(invalid)?,
            "atkinson_b" => {
                let b: f64 = value.parse().map_err(|_| invalid(format!("`{value}` is not a number")))?;
                if !(b > 0.0 && b < 1.0) {
                    return Err(invalid(format!("must lie strictly between 0 and 1, got {value}")));
                }
                self.atkinson_b = b;
            }
            "out" => {
                if value.is_empty() {
                    return Err(invalid("must not be empty".into()));
                }
                self.out = PathBuf::from(value);
            }
            "jobs" => match value.parse::<usize>() {
                Ok(n) if n > 0 => self.jobs = n,
                _ => return Err(invalid(format!("expected a positive integer, got `{value}`"))),
            },
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "mode" => self.mode.map(Mode::as_str).unwrap_or_default().to_string(),
            "schema" => show_path(&self.schema),
            "individuals" => show_path(&self.individuals),
            "groups" => show_path(&self.groups),
            "membership" => show_path(&self.membership),
            "final_table" => show_path(&self.final_table),
            "node_units" => show_path(&self.node_units),
            "snapshot_file" => show_path(&self.snapshot_file),
            "snapshots" => self.snapshots.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
            "project" => self.project.map(ProjectionSide::as_str).unwrap_or_default().to_string(),
            "max_pairs_per_hub" => show(&self.max_pairs_per_hub),
            "clustering" => self.clustering.map(ClusteringChoice::as_str).unwrap_or_default().to_string(),
            "min_weight" => show(&self.min_weight),
            "minsup" => self.minsup.clone(),
            "indexes" => self.indexes.iter().map(|k| k.code()).collect::<Vec<_>>().join(","),
            "atkinson_b" => serde_json::Number::from_f64(self.atkinson_b).map(|n| n.to_string()).unwrap_or_default(),
            "out" => self.out.display().to_string(),
            "jobs" => self.jobs.to_string(),
            _ => return None,
        })
    }

    /// Applies `key=value` lines on top of `self`. Blank lines and lines
    /// starting with `#` are ignored. Relative paths resolve against `base`.
    pub fn apply_file_text(&mut self, text: &str, base: Option<&Path>) -> Result<(), Vec<ConfigError>> {
        let mut errors = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(ConfigError::Syntax {
                    line: i + 1,
                    message: format!("expected key=value, got `{line}`"),
                });
                continue;
            };
            let key = key.trim();
            let value = value.trim();
            let value = match base {
                Some(base) if is_path_key(key) && !value.is_empty() && Path::new(value).is_relative() => {
                    base.join(value).display().to_string()
                }
                _ => value.to_string(),
            };
            if let Err(e) = self.set(key, &value) {
                errors.push(ConfigError::Syntax {
                    line: i + 1,
                    message: e.to_string(),
                });
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Reads a config file; relative paths inside it are taken from its directory.
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = read_text(path)?;
        let mut config = RunConfig::default();
        config
            .apply_file_text(&text, path.parent())
            .map_err(|errors| PipelineError::Config(errors.iter().map(|e| format!("{}: {e}", path.display())).collect()))?;
        Ok(config)
    }

    /// Makes every relative path absolute against `base`, so the printed
    /// config means the same thing wherever it is saved.
    pub fn absolutize(&mut self, base: &Path) {
        for key in CONFIG_KEYS.iter().filter(|k| is_path_key(k)) {
            if let Some(value) = self.get(key).filter(|v| !v.is_empty() && Path::new(v).is_relative()) {
                self.set(key, &base.join(value).display().to_string()).expect("path keys accept any path");
            }
        }
    }

    /// Every key with its current value, one `key=value` per line.
    pub fn to_config_text(&self) -> String {
        CONFIG_KEYS
            .iter()
            .map(|k| format!("{k}={}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn effective_mode(&self) -> Mode {
        self.mode.unwrap_or(if self.final_table.is_some() {
            Mode::Tabular
        } else if self.node_units.is_some() {
            Mode::Unipartite
        } else {
            Mode::Bipartite
        })
    }

    /// Checks that the options fit the mode.
    pub fn validate(&self) -> Result<Mode, Vec<ConfigError>> {
        let mode = self.effective_mode();
        let mut errors = Vec::new();
        let mut need = |present: bool, what: &str| {
            if !present {
                errors.push(ConfigError::Inconsistent(format!("{} mode requires {what}", mode.as_str())));
            }
        };
        need(self.schema.is_some(), "a schema");
        match mode {
            Mode::Tabular => need(self.final_table.is_some(), "a final table"),
            Mode::Unipartite => {
                need(self.individuals.is_some(), "individuals");
                need(self.groups.is_some(), "groups");
                need(self.membership.is_some(), "membership");
                need(self.node_units.is_some(), "a node-unit assignment");
            }
            Mode::Bipartite => {
                need(self.individuals.is_some(), "individuals");
                need(self.groups.is_some(), "groups");
                need(self.membership.is_some(), "membership");
            }
        }
        let mut forbid = |present: bool, what: &str| {
            if present {
                errors.push(ConfigError::Inconsistent(format!("{what} not allowed in {} mode", mode.as_str())));
            }
        };
        match mode {
            Mode::Tabular => {
                forbid(self.clustering.is_some(), "clustering is");
                forbid(self.min_weight.is_some(), "min_weight is");
                forbid(self.project.is_some(), "project is");
                forbid(self.max_pairs_per_hub.is_some(), "max_pairs_per_hub is");
                forbid(self.node_units.is_some(), "node_units is");
                forbid(self.individuals.is_some() || self.groups.is_some() || self.membership.is_some(), "graph inputs are");
                forbid(!self.snapshots.is_empty() || self.snapshot_file.is_some(), "snapshots are");
            }
            Mode::Unipartite => {
                forbid(self.clustering.is_some(), "clustering is");
                forbid(self.min_weight.is_some(), "min_weight is");
                forbid(self.max_pairs_per_hub.is_some(), "max_pairs_per_hub is");
                forbid(self.final_table.is_some(), "final_table is");
            }
            Mode::Bipartite => {
                forbid(self.final_table.is_some(), "final_table is");
                forbid(self.node_units.is_some(), "node_units is");
                match (self.clustering, self.min_weight) {
                    (Some(ClusteringChoice::Threshold), None) => {
                        errors.push(ConfigError::Inconsistent("threshold clustering requires min_weight".into()))
                    }
                    (None | Some(ClusteringChoice::Components), Some(_)) => errors.push(ConfigError::Inconsistent(
                        "min_weight only applies to threshold clustering".into(),
                    )),
                    _ => {}
                }
            }
        }
        if self.indexes.is_empty() {
            errors.push(ConfigError::Inconsistent("at least one index is required".into()));
        }
        if errors.is_empty() {
            Ok(mode)
        } else {
            Err(errors)
        }
    }

    pub fn cube_params(&self, transactions: usize) -> Result<CubeParams, PipelineError> {
        Ok(CubeParams {
            minsup: resolve_minsup(&self.minsup, transactions).map_err(PipelineError::Minsup)?,
            indexes: self.indexes.clone(),
            atkinson_b: self.atkinson_b,
        })
    }
}

fn is_path_key(key: &str) -> bool {
    matches!(
        key,
        "schema" | "individuals" | "groups" | "membership" | "final_table" | "node_units" | "snapshot_file" | "out"
    )
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{}", render_all(path, errors))]
    Schema { path: PathBuf, errors: Vec<SchemaError> },
    #[error("{}", render_all(path, errors))]
    Ingest { path: PathBuf, errors: Vec<IngestError> },
    #[error("{path}: {source}")]
    Assignment { path: PathBuf, source: AssignmentError },
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Cube(#[from] CubeError),
    #[error("minsup: {0}")]
    Minsup(String),
}

fn render_all<E: fmt::Display>(path: &Path, errors: &[E]) -> String {
    errors
        .iter()
        .map(|e| format!("{}: {e}", path.display()))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let io = |e: std::io::Error| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, bytes).map_err(io)
}

fn required<'p>(path: &'p Option<PathBuf>, what: &str) -> Result<&'p Path, PipelineError> {
    path.as_deref()
        .ok_or_else(|| PipelineError::Config(vec![format!("missing {what}")]))
}

pub fn load_schema(path: &Path) -> Result<AttributeSchema, PipelineError> {
    AttributeSchema::from_csv(read_text(path)?.as_bytes()).map_err(|errors| PipelineError::Schema {
        path: path.to_path_buf(),
        errors,
    })
}

fn ingest<T>(path: &Path, parse: impl FnOnce(&[u8]) -> Result<T, Vec<IngestError>>) -> Result<T, PipelineError> {
    parse(read_text(path)?.as_bytes()).map_err(|errors| PipelineError::Ingest {
        path: path.to_path_buf(),
        errors,
    })
}

/// Parses and cross-checks the graph inputs named in `config`.
pub fn load_dataset(config: &RunConfig) -> Result<Dataset, PipelineError> {
    let schema_path = required(&config.schema, "schema")?;
    let schema = load_schema(schema_path)?;
    let ind_path = required(&config.individuals, "individuals")?;
    let grp_path = required(&config.groups, "groups")?;
    let mem_path = required(&config.membership, "membership")?;
    let individuals = ingest(ind_path, |b| parse_individuals(b, &schema))?;
    let groups = ingest(grp_path, |b| parse_groups(b, &schema))?;
    let membership = ingest(mem_path, |b| parse_membership(b))?;
    let mut snapshots = match &config.snapshot_file {
        Some(p) => ingest(p, |b| parse_snapshots(b))?,
        None => Vec::new(),
    };
    snapshots.extend(config.snapshots.iter().copied());
    snapshots.sort_unstable();
    snapshots.dedup();
    Dataset {
        schema,
        individuals,
        groups,
        membership,
        snapshots,
    }
    .link_check()
    .map_err(|errors| PipelineError::Ingest {
        path: mem_path.to_path_buf(),
        errors,
    })
}

pub fn load_assignment(path: &Path) -> Result<UnitAssignment, PipelineError> {
    UnitAssignment::from_csv(read_text(path)?.as_bytes()).map_err(|source| PipelineError::Assignment {
        path: path.to_path_buf(),
        source,
    })
}

/// Mines and fills a cube for one table.
pub fn cube_from_table(
    table: &UnitTable,
    config: &RunConfig,
    snapshot: Option<SnapshotDate>,
    clustering: ClusteringDescriptor,
) -> Result<SegregationCube, PipelineError> {
    let db = encode(table);
    let params = config.cube_params(db.transactions.len())?;
    let closed = mine_closed(&db.transactions, params.minsup);
    log::info!(
        "{} transactions, {} items, minsup {}, {} closed itemsets",
        db.transactions.len(),
        db.items.len(),
        params.minsup,
        closed.len()
    );
    let mut cube = build_cube(&closed, &db, table.schema(), &params)?;
    cube.snapshot = snapshot;
    cube.clustering = clustering;
    if !cube.skipped.missing_context.is_empty() {
        log::warn!("{} cells skipped for missing context closures", cube.skipped.missing_context.len());
    }
    Ok(cube)
}

/// The three cube artifacts plus one summary section per index.
pub fn write_cube(dir: &Path, cube: &SegregationCube) -> Result<(), PipelineError> {
    write_file(&dir.join("cube.json"), &export_json(cube))?;
    write_file(&dir.join("cube.csv"), &export_csv(cube))?;
    let summary: Vec<String> = cube.params.indexes.iter().map(|&k| report_summary(cube, k)).collect();
    write_file(&dir.join("summary.txt"), summary.join("\n").as_bytes())
}

/// Outcome of one snapshot.
#[derive(Debug)]
pub struct SnapshotOutcome {
    pub label: String,
    pub dir: PathBuf,
    pub result: Result<usize, PipelineError>,
}

#[derive(Debug)]
pub struct RunReport {
    pub outcomes: Vec<SnapshotOutcome>,
}

impl RunReport {
    /// True iff every requested snapshot produced a cube.
    pub fn success(&self) -> bool {
        !self.outcomes.is_empty() && self.outcomes.iter().all(|o| o.result.is_ok())
    }
}

fn label_of(date: Option<SnapshotDate>) -> String {
    date.map_or_else(|| ALL_LABEL.to_string(), |d| d.to_string())
}

fn run_graph_snapshot(
    dataset: &Dataset,
    config: &RunConfig,
    mode: Mode,
    given: Option<&UnitAssignment>,
    date: Option<SnapshotDate>,
    dir: &Path,
) -> Result<usize, PipelineError> {
    let side = config.project.unwrap_or_default();
    let (assignment, descriptor) = match (mode, given) {
        (Mode::Unipartite, Some(given)) => (
            given.clone(),
            ClusteringDescriptor {
                method: "given".into(),
                min_weight: None,
                projection: Some(side.as_str().into()),
            },
        ),
        _ => {
            let options = ProjectionOptions {
                side,
                max_pairs_per_hub: config.max_pairs_per_hub,
                ..Default::default()
            };
            let nodes: Vec<&str> = match side {
                ProjectionSide::Groups => dataset.groups.iter().map(|g| g.id.as_str()).collect(),
                ProjectionSide::Individuals => dataset.individuals.iter().map(|i| i.id.as_str()).collect(),
            };
            let graph = project_with(&dataset.membership, nodes, date, &options);
            write_file(&dir.join("edges.csv"), graph.edges_csv().as_bytes())?;
            write_file(&dir.join("isolated.csv"), graph.isolated_csv().as_bytes())?;
            let assignment = match (config.clustering, config.min_weight) {
                (Some(ClusteringChoice::Threshold), Some(w)) => threshold_components(&graph, w),
                _ => connected_components(&graph),
            };
            let method = assignment.method();
            (
                assignment,
                ClusteringDescriptor {
                    method: method.name().into(),
                    min_weight: method.min_weight(),
                    projection: Some(side.as_str().into()),
                },
            )
        }
    };
    write_file(&dir.join("nodeUnit.csv"), assignment.to_csv().as_bytes())?;
    log::info!("{}: {} units", label_of(date), assignment.unit_count());
    let table = match side {
        ProjectionSide::Groups => build_table(dataset, &assignment, date)?,
        ProjectionSide::Individuals => build_individual_table(dataset, &assignment, date)?,
    };
    write_file(&dir.join("finalTable.csv"), table.to_csv().as_bytes())?;
    let cube = cube_from_table(&table, config, date, descriptor)?;
    write_cube(dir, &cube)?;
    Ok(cube.cells.len())
}

/// Runs every snapshot, up to `config.jobs` at a time. Input errors abort the
/// whole run; errors inside a snapshot only abort that snapshot.
pub fn run_pipeline(config: &RunConfig) -> Result<RunReport, PipelineError> {
    let mode = config
        .validate()
        .map_err(|errors| PipelineError::Config(errors.iter().map(ToString::to_string).collect()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| PipelineError::Config(vec![format!("thread pool: {e}")]))?;

    if mode == Mode::Tabular {
        let schema = load_schema(required(&config.schema, "schema")?)?;
        let table_path = required(&config.final_table, "final table")?;
        let table = ingest(table_path, |b| load_table(b, &schema))?;
        let dir = config.out.join(ALL_LABEL);
        let result = pool.install(|| {
            let cube = cube_from_table(&table, config, None, ClusteringDescriptor::tabular())?;
            write_cube(&dir, &cube)?;
            Ok(cube.cells.len())
        });
        return Ok(RunReport {
            outcomes: vec![SnapshotOutcome {
                label: ALL_LABEL.into(),
                dir,
                result,
            }],
        });
    }

    let dataset = load_dataset(config)?;
    let given = match mode {
        Mode::Unipartite => Some(load_assignment(required(&config.node_units, "node-unit assignment")?)?),
        _ => None,
    };
    let dates: Vec<Option<SnapshotDate>> = if dataset.snapshots.is_empty() {
        vec![None]
    } else {
        dataset.snapshots.iter().copied().map(Some).collect()
    };
    let outcomes = pool.install(|| {
        dates
            .par_iter()
            .map(|&date| {
                let label = label_of(date);
                let dir = config.out.join(&label);
                let result = run_graph_snapshot(&dataset, config, mode, given.as_ref(), date, &dir);
                if let Err(e) = &result {
                    log::error!("snapshot {label}: {e}");
                }
                SnapshotOutcome { label, dir, result }
            })
            .collect()
    });
    Ok(RunReport { outcomes })
}
