//! Join of individual features with the features of their groups, per unit.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;

use thiserror::Error;

use crate::clustering::UnitAssignment;
use crate::ingest::{join_cell, map_columns, read_values, Dataset, IngestError};
use crate::schema::{AttributeDecl, AttributeSchema, AttributeValues, Group, SnapshotDate};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitRow {
    /// Absent when the table was loaded from a file without an `id` column.
    pub individual: Option<String>,
    pub values: AttributeValues,
    pub unit: String,
}

/// The `finalTable`: one row per (individual, unit) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitTable {
    schema: AttributeSchema,
    rows: Vec<UnitRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("group `{0}` has an active membership but no unit")]
    UnassignedGroup(String),
    #[error("individual `{0}` has an active membership but no unit")]
    UnassignedIndividual(String),
}

impl UnitTable {
    pub fn new(schema: AttributeSchema, rows: Vec<UnitRow>) -> Self {
        UnitTable { schema, rows }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[UnitRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `finalTable` CSV: optional `id`, SA columns, CA columns, `unitID`.
    /// Cells hold `|`-joined values sorted lexicographically.
    pub fn to_csv(&self) -> String {
        let columns = self.schema.table_columns();
        let with_id = self.rows.iter().any(|r| r.individual.is_some());
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = Vec::new();
        if with_id {
            header.push("id");
        }
        header.extend(columns.iter().map(|d| d.name.as_str()));
        header.push("unitID");
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec = Vec::with_capacity(header.len());
            if with_id {
                rec.push(row.individual.clone().unwrap_or_default());
            }
            for d in &columns {
                rec.push(row.values.get(&d.name).map(join_cell).unwrap_or_default());
            }
            rec.push(row.unit.clone());
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Reads a precomputed `finalTable`: every declared attribute column plus
/// `unitID`, optionally `id`.
pub fn load_table<R: Read>(input: R, schema: &AttributeSchema) -> Result<UnitTable, Vec<IngestError>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(input);
    let header = rdr
        .headers()
        .map_err(|e| {
            vec![IngestError::MalformedRow {
                line: 1,
                message: e.to_string(),
            }]
        })?
        .clone();
    let declared: Vec<&AttributeDecl> = schema.table_columns();
    let (columns, optional) = map_columns(&header, &["unitID"], &["id"], &declared, "table")?;
    let unit_col = columns.extra[0];
    let id_col = optional[0];

    let mut errors = Vec::new();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                errors.push(IngestError::MalformedRow {
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let unit = record[unit_col].to_string();
        if unit.is_empty() {
            errors.push(IngestError::MalformedRow {
                line,
                message: "empty unitID".into(),
            });
            continue;
        }
        let values = read_values(&record, &columns, true, &mut errors);
        let individual = id_col.map(|i| record[i].to_string()).filter(|s| !s.is_empty());
        rows.push(UnitRow {
            individual,
            values,
            unit,
        });
    }
    if errors.is_empty() {
        Ok(UnitTable::new(schema.clone(), rows))
    } else {
        Err(errors)
    }
}

fn merge_values(into: &mut AttributeValues, from: &AttributeValues) {
    for (attr, vals) in from {
        into.entry(attr.clone()).or_default().extend(vals.iter().cloned());
    }
}

/// Active group ids per individual at `date`, deduplicated.
fn active_groups(dataset: &Dataset, date: Option<SnapshotDate>) -> HashMap<&str, Vec<&str>> {
    let mut out: HashMap<&str, Vec<&str>> = HashMap::new();
    for e in dataset.membership.iter().filter(|e| e.active_at_opt(date)) {
        out.entry(e.individual.as_str()).or_default().push(e.group.as_str());
    }
    for groups in out.values_mut() {
        groups.sort_unstable();
        groups.dedup();
    }
    out
}

/// Builds one row per (individual, unit) for units given over groups. A row's
/// CA values are the individual's own plus those of each of its groups in
/// that unit. Individuals with no active membership produce no rows.
pub fn build_table(
    dataset: &Dataset,
    assignment: &UnitAssignment,
    date: Option<SnapshotDate>,
) -> Result<UnitTable, TableError> {
    let groups: HashMap<&str, &Group> = dataset.groups.iter().map(|g| (g.id.as_str(), g)).collect();
    let active = active_groups(dataset, date);
    let mut individuals: Vec<_> = dataset.individuals.iter().collect();
    individuals.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rows = Vec::new();
    for ind in individuals {
        let Some(member_of) = active.get(ind.id.as_str()) else {
            continue;
        };
        let mut by_unit: BTreeMap<u32, AttributeValues> = BTreeMap::new();
        for &gid in member_of {
            let unit = assignment
                .unit_of(gid)
                .ok_or_else(|| TableError::UnassignedGroup(gid.to_string()))?;
            let values = by_unit.entry(unit).or_insert_with(|| ind.values.clone());
            if let Some(group) = groups.get(gid) {
                merge_values(values, &group.values);
            }
        }
        rows.extend(by_unit.into_iter().map(|(unit, values)| UnitRow {
            individual: Some(ind.id.clone()),
            values,
            unit: unit.to_string(),
        }));
    }
    Ok(UnitTable::new(dataset.schema.clone(), rows))
}

/// Variant for units given over individuals (individuals projected by shared
/// groups): one row per active individual, carrying the CA values of all its
/// active groups.
pub fn build_individual_table(
    dataset: &Dataset,
    assignment: &UnitAssignment,
    date: Option<SnapshotDate>,
) -> Result<UnitTable, TableError> {
    let groups: HashMap<&str, &Group> = dataset.groups.iter().map(|g| (g.id.as_str(), g)).collect();
    let active = active_groups(dataset, date);
    let mut individuals: Vec<_> = dataset.individuals.iter().collect();
    individuals.sort_by(|a, b| a.id.cmp(&b.id));

    let mut rows = Vec::new();
    for ind in individuals {
        let Some(member_of) = active.get(ind.id.as_str()) else {
            continue;
        };
        let unit = assignment
            .unit_of(&ind.id)
            .ok_or_else(|| TableError::UnassignedIndividual(ind.id.clone()))?;
        let mut values = ind.values.clone();
        for gid in member_of {
            if let Some(group) = groups.get(gid) {
                merge_values(&mut values, &group.values);
            }
        }
        rows.push(UnitRow {
            individual: Some(ind.id.clone()),
            values,
            unit: unit.to_string(),
        });
    }
    Ok(UnitTable::new(dataset.schema.clone(), rows))
}

/// Parses a `finalTable` after checking it against a schema file's text; used
/// where both arrive as raw bytes.
pub fn load_table_with_schema(table: &[u8], schema: &[u8]) -> Result<UnitTable, String> {
    let schema = AttributeSchema::from_csv(schema).map_err(|e| format!("{e:?}"))?;
    load_table(table, &schema).map_err(|e| format!("{e:?}"))
}
