//! Cube serialization: a versioned JSON document, a flat CSV and a text summary.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cube::{describe, render_coordinate, top_k, ClusteringDescriptor, CubeCell, CubeParams, SegregationCube, SkipReport};
use crate::indexes::{IndexKind, CountsVector};
use crate::ingest::{split_cell_as, STAR};
use crate::schema::{AttributeKind, AttributeSchema, AttributeValues, SnapshotDate};

pub const FORMAT_VERSION: u32 = 1;
/// Rendering of an undefined or missing index value in text outputs.
pub const UNDEFINED: &str = "-";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CubeDocument {
    pub format_version: u32,
    pub metadata: Metadata,
    pub cells: Vec<CellDocument>,
    pub skip_report: SkipReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Metadata {
    pub snapshot: Option<SnapshotDate>,
    pub clustering: ClusteringDescriptor,
    pub minsup: u64,
    pub transactions: u64,
    pub indexes: Vec<IndexKind>,
    pub atkinson_b: f64,
    pub schema: AttributeSchema,
    pub units: Vec<String>,
    pub domain: IndexMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDocument {
    /// Every SA attribute, `*` for roll-up, `|`-joined for multiple values.
    pub sa: IndexMap<String, String>,
    pub ca: IndexMap<String, String>,
    #[serde(rename = "T")]
    pub population: u64,
    #[serde(rename = "M")]
    pub minority: u64,
    /// `[unit, total, minority]` for each unit with positive total.
    pub units: Vec<[u64; 3]>,
    /// Index code to value; `null` when undefined.
    pub values: IndexMap<IndexKind, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("unsupported formatVersion {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u32),
    #[error("malformed cube document: {0}")]
    Malformed(String),
    #[error("cell {cell}: {message}")]
    InconsistentCell { cell: usize, message: String },
}

fn coordinate_map(schema: &AttributeSchema, kind: AttributeKind, coords: &AttributeValues) -> IndexMap<String, String> {
    schema
        .of_kind(kind)
        .map(|d| (d.name.clone(), render_coordinate(coords, &d.name)))
        .collect()
}

impl CubeDocument {
    pub fn from_cube(cube: &SegregationCube) -> Self {
        let schema = &cube.schema;
        let cells = cube
            .cells
            .iter()
            .map(|c| CellDocument {
                sa: coordinate_map(schema, AttributeKind::Segregation, &c.sa),
                ca: coordinate_map(schema, AttributeKind::Context, &c.ca),
                population: c.population(),
                minority: c.minority_population(),
                units: c
                    .units
                    .iter()
                    .zip(c.totals.iter().zip(&c.minority))
                    .map(|(&u, (&t, &m))| [u as u64, t, m])
                    .collect(),
                values: c.values.iter().copied().collect(),
            })
            .collect();
        let domain = schema
            .attributes()
            .iter()
            .filter_map(|d| {
                cube.domain
                    .get(&d.name)
                    .map(|v| (d.name.clone(), v.iter().cloned().collect()))
            })
            .collect();
        CubeDocument {
            format_version: FORMAT_VERSION,
            metadata: Metadata {
                snapshot: cube.snapshot,
                clustering: cube.clustering.clone(),
                minsup: cube.params.minsup,
                transactions: cube.transactions,
                indexes: cube.params.indexes.clone(),
                atkinson_b: cube.params.atkinson_b,
                schema: cube.schema.clone(),
                units: cube.units.clone(),
                domain,
            },
            cells,
            skip_report: cube.skipped.clone(),
        }
    }

    /// Parses and version-checks a document.
    pub fn parse(bytes: &[u8]) -> Result<Self, DocumentError> {
        #[derive(Deserialize)]
        #[serde(rename_all = "camelCase")]
        struct Probe {
            format_version: u32,
        }
        let probe: Probe = serde_json::from_slice(bytes).map_err(|e| DocumentError::Malformed(e.to_string()))?;
        if probe.format_version != FORMAT_VERSION {
            return Err(DocumentError::UnsupportedVersion(probe.format_version));
        }
        serde_json::from_slice(bytes).map_err(|e| DocumentError::Malformed(e.to_string()))
    }

    /// Rebuilds the cube, checking every cell for internal consistency.
    pub fn into_cube(self) -> Result<SegregationCube, DocumentError> {
        let meta = self.metadata;
        let schema = meta.schema;
        let n_units = meta.units.len() as u64;
        let mut domain = AttributeValues::new();
        for (attr, values) in meta.domain {
            if schema.get(&attr).is_none() {
                return Err(DocumentError::Malformed(format!("domain names unknown attribute `{attr}`")));
            }
            domain.insert(attr, values.into_iter().collect());
        }
        let mut seen = HashSet::new();
        let mut cells = Vec::with_capacity(self.cells.len());
        for (idx, doc) in self.cells.into_iter().enumerate() {
            let bad = |message: String| DocumentError::InconsistentCell { cell: idx, message };
            let sa = parse_coordinates(&schema, AttributeKind::Segregation, &doc.sa).map_err(bad)?;
            let ca = parse_coordinates(&schema, AttributeKind::Context, &doc.ca).map_err(bad)?;
            let mut units = Vec::with_capacity(doc.units.len());
            let mut totals = Vec::with_capacity(doc.units.len());
            let mut minority = Vec::with_capacity(doc.units.len());
            for [u, t, m] in doc.units {
                if u >= n_units {
                    return Err(bad(format!("unit {u} out of range")));
                }
                if units.last().is_some_and(|&last| last as u64 >= u) {
                    return Err(bad("units not strictly ascending".into()));
                }
                if t == 0 {
                    return Err(bad(format!("unit {u} has zero population")));
                }
                if m > t {
                    return Err(bad(format!("unit {u}: minority {m} exceeds total {t}")));
                }
                units.push(u as u32);
                totals.push(t);
                minority.push(m);
            }
            let sum_t = totals.iter().try_fold(0u64, |a, &t| a.checked_add(t));
            let sum_m = minority.iter().try_fold(0u64, |a, &m| a.checked_add(m));
            if sum_t != Some(doc.population) || sum_m != Some(doc.minority) {
                return Err(bad("T or M disagrees with per-unit counts".into()));
            }
            if doc.values.keys().ne(meta.indexes.iter()) {
                return Err(bad("value keys differ from the index list".into()));
            }
            if doc.values.values().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(bad("index value outside [0, 1]".into()));
            }
            if !seen.insert((sa.clone(), ca.clone())) {
                return Err(bad("duplicate coordinates".into()));
            }
            cells.push(CubeCell {
                sa,
                ca,
                units,
                totals,
                minority,
                values: doc.values.into_iter().collect(),
            });
        }
        Ok(SegregationCube {
            schema,
            snapshot: meta.snapshot,
            clustering: meta.clustering,
            params: CubeParams {
                minsup: meta.minsup,
                indexes: meta.indexes,
                atkinson_b: meta.atkinson_b,
            },
            transactions: meta.transactions,
            units: meta.units,
            domain,
            cells,
            skipped: self.skip_report,
        })
    }
}

fn parse_coordinates(
    schema: &AttributeSchema,
    kind: AttributeKind,
    coords: &IndexMap<String, String>,
) -> Result<AttributeValues, String> {
    let expected: Vec<&str> = schema.of_kind(kind).map(|d| d.name.as_str()).collect();
    if coords.keys().map(String::as_str).ne(expected.iter().copied()) {
        return Err(format!("{} coordinates must list exactly {}", kind.as_str(), expected.join(",")));
    }
    let mut out = AttributeValues::new();
    for (attr, rendered) in coords {
        if rendered == STAR {
            continue;
        }
        let decl = schema.get(attr).expect("checked above");
        let values: BTreeSet<String> = split_cell_as(rendered, decl.is_set_valued_in_table());
        if values.is_empty() || values.contains(STAR) {
            return Err(format!("bad coordinate `{rendered}` for `{attr}`"));
        }
        out.insert(attr.clone(), values);
    }
    Ok(out)
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_value(v: Option<f64>) -> String {
    match v.and_then(serde_json::Number::from_f64) {
        Some(n) => n.to_string(),
        None => UNDEFINED.to_string(),
    }
}

/// Deterministic JSON bytes for a cube.
pub fn export_json(cube: &SegregationCube) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&CubeDocument::from_cube(cube)).expect("cube documents always serialize");
    out.push(b'\n');
    out
}

pub fn parse_json(bytes: &[u8]) -> Result<SegregationCube, DocumentError> {
    CubeDocument::parse(bytes)?.into_cube()
}

/// One row per cell: SA columns, CA columns, `T`, `M`, then index columns.
pub fn export_csv(cube: &SegregationCube) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let sa: Vec<&str> = cube.schema.of_kind(AttributeKind::Segregation).map(|d| d.name.as_str()).collect();
    let ca: Vec<&str> = cube.schema.of_kind(AttributeKind::Context).map(|d| d.name.as_str()).collect();
    let mut header: Vec<&str> = sa.iter().chain(&ca).copied().collect();
    header.extend(["T", "M"]);
    header.extend(cube.params.indexes.iter().map(|k| k.code()));
    w.write_record(&header).expect("in-memory write");
    for cell in &cube.cells {
        let mut rec: Vec<String> = sa.iter().map(|a| render_coordinate(&cell.sa, a)).collect();
        rec.extend(ca.iter().map(|a| render_coordinate(&cell.ca, a)));
        rec.push(cell.population().to_string());
        rec.push(cell.minority_population().to_string());
        rec.extend(cube.params.indexes.iter().map(|&k| format_value(cell.value(k))));
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Number of ranked contexts listed in a summary.
pub const SUMMARY_TOP: usize = 10;

fn cell_line(cell: &CubeCell, index: IndexKind) -> String {
    format!(
        "{}={} T={} M={}",
        index,
        format_value(cell.value(index)),
        cell.population(),
        cell.minority_population()
    )
}

/// Text report for one index: for each single-valued minority, the value over
/// the whole population followed by a breakdown per context attribute, then
/// the most segregated contexts overall.
pub fn report_summary(cube: &SegregationCube, index: IndexKind) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "segregation summary: index {index}");
    let snapshot = cube.snapshot.map_or_else(|| "none".to_string(), |s| s.to_string());
    let _ = writeln!(
        out,
        "snapshot {snapshot}; units {}; transactions {}; minsup {}; cells {}",
        cube.units.len(),
        cube.transactions,
        cube.params.minsup,
        cube.cells.len()
    );
    if !cube.params.indexes.contains(&index) {
        let _ = writeln!(out, "index {index} not computed for this cube");
        return out;
    }
    if let Some(global) = cube.cells.iter().find(|c| c.is_global()) {
        let _ = writeln!(out, "global population: T={}", global.population());
    }

    let minorities: Vec<&CubeCell> = cube
        .cells
        .iter()
        .filter(|c| c.ca.is_empty() && c.sa.len() == 1 && c.sa.values().all(|v| v.len() == 1))
        .collect();
    for baseline in minorities {
        let _ = writeln!(out);
        let _ = writeln!(out, "minority {}", describe(cube, baseline));
        let _ = writeln!(out, "  baseline: {}", cell_line(baseline, index));
        for decl in cube.schema.of_kind(AttributeKind::Context) {
            let lines: Vec<&CubeCell> = cube
                .cells
                .iter()
                .filter(|c| {
                    c.sa == baseline.sa
                        && c.ca.len() == 1
                        && c.ca.get(&decl.name).is_some_and(|v| v.len() == 1)
                })
                .collect();
            if lines.is_empty() {
                continue;
            }
            let _ = writeln!(out, "  {}:", decl.name);
            for c in lines {
                let _ = writeln!(out, "    {}: {}", render_coordinate(&c.ca, &decl.name), cell_line(c, index));
            }
        }
    }

    let ranked = top_k(cube, index, SUMMARY_TOP, 0);
    if !ranked.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "top {} contexts by {index}:", ranked.len());
        for (rank, c) in ranked.into_iter().enumerate() {
            let _ = writeln!(out, "  {}. {} {}", rank + 1, describe(cube, c), cell_line(c, index));
        }
    }
    out
}

/// Recomputes every defined index from the stored counts. Used to validate
/// documents that did not come from this process.
pub fn verify_cells(cube: &SegregationCube) -> Vec<String> {
    let mut problems = Vec::new();
    for (i, cell) in cube.cells.iter().enumerate() {
        let counts = match CountsVector::new(&cell.totals, &cell.minority) {
            Ok(c) => c,
            Err(e) => {
                problems.push(format!("cell {i} {}: {e}", describe(cube, cell)));
                continue;
            }
        };
        for &(kind, stored) in &cell.values {
            let fresh = crate::indexes::compute(kind, &counts, cube.params.atkinson_b).ok();
            let agree = match (stored, fresh) {
                (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                (None, None) => true,
                _ => false,
            };
            if !agree {
                problems.push(format!(
                    "cell {i} {}: stored {kind}={} but counts give {}",
                    describe(cube, cell),
                    format_value(stored),
                    format_value(fresh)
                ));
            }
        }
    }
    problems
}
