//! CSV ingestion of individuals, groups, membership edges and snapshot dates.
//!
//! Dialect: comma separated, `"` quoting, UTF-8, `|` separates the values of a
//! multi-valued cell, an empty cell carries no value. Every error carries the
//! 1-based line number of the offending record.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::Read;

use chrono::NaiveDate;
use thiserror::Error;

use crate::schema::{
    AttributeDecl, AttributeSchema, AttributeValues, Group, Individual, MembershipEdge, Owner,
    SnapshotDate, Validity,
};

/// Separator between the values of a multi-valued cell.
pub const MULTI_SEPARATOR: char = '|';
/// Reserved rendering of the roll-up coordinate; never a legal attribute value.
pub const STAR: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("line {line}: missing column `{column}`")]
    MissingColumn { line: u64, column: String },
    #[error("line {line}: column `{column}` is not a declared {owner} attribute")]
    UnknownColumn {
        line: u64,
        column: String,
        owner: &'static str,
    },
    #[error("line {line}: column `{column}` appears more than once")]
    DuplicateColumn { line: u64, column: String },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: u64, id: String },
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("line {line}: `{value}` is not a valid YYYY-MM-DD date")]
    MalformedDate { line: u64, value: String },
    #[error("line {line}: validity interval starts after it ends")]
    InvertedInterval { line: u64 },
    #[error("line {line}: membership ({individual}, {group}) overlaps an earlier edge on line {previous}")]
    OverlappingMembership {
        line: u64,
        previous: u64,
        individual: String,
        group: String,
    },
    #[error("line {line}: value `{value}` in column `{column}` is reserved")]
    ReservedValue {
        line: u64,
        column: String,
        value: String,
    },
    #[error("membership references unknown individual `{0}`")]
    UnknownIndividual(String),
    #[error("membership references unknown group `{0}`")]
    UnknownGroup(String),
}

pub type IngestResult<T> = Result<T, Vec<IngestError>>;

/// All four inputs plus the schema they were parsed against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub schema: AttributeSchema,
    pub individuals: Vec<Individual>,
    pub groups: Vec<Group>,
    pub membership: Vec<MembershipEdge>,
    pub snapshots: Vec<SnapshotDate>,
}

impl Dataset {
    /// Enforces referential integrity, reporting every dangling id.
    pub fn link_check(self) -> IngestResult<Dataset> {
        let mut errors = Vec::new();
        let mut individuals = HashSet::new();
        for ind in &self.individuals {
            if !individuals.insert(ind.id.as_str()) {
                errors.push(IngestError::DuplicateId {
                    line: 0,
                    id: ind.id.clone(),
                });
            }
        }
        let mut groups = HashSet::new();
        for g in &self.groups {
            if !groups.insert(g.id.as_str()) {
                errors.push(IngestError::DuplicateId {
                    line: 0,
                    id: g.id.clone(),
                });
            }
        }
        let mut reported_ind = HashSet::new();
        let mut reported_grp = HashSet::new();
        for e in &self.membership {
            if !individuals.contains(e.individual.as_str()) && reported_ind.insert(&e.individual) {
                errors.push(IngestError::UnknownIndividual(e.individual.clone()));
            }
            if !groups.contains(e.group.as_str()) && reported_grp.insert(&e.group) {
                errors.push(IngestError::UnknownGroup(e.group.clone()));
            }
        }
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(errors)
        }
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_error(e: &csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    IngestError::MalformedRow {
        line,
        message: match e.kind() {
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => format!("expected {expected_len} fields, found {len}"),
            csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
            _ => e.to_string(),
        },
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

/// Splits a cell into its value set according to the attribute multiplicity.
pub(crate) fn split_cell_as(cell: &str, set_valued: bool) -> BTreeSet<String> {
    if cell.is_empty() {
        BTreeSet::new()
    } else if set_valued {
        cell.split(MULTI_SEPARATOR)
            .filter(|v| !v.is_empty())
            .map(str::to_string)
            .collect()
    } else {
        BTreeSet::from([cell.to_string()])
    }
}

/// Inverse of [`split_cell_as`]: values joined in sorted order.
pub(crate) fn join_cell(values: &BTreeSet<String>) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(MULTI_SEPARATOR);
        }
        out.push_str(v);
    }
    out
}

/// Maps header columns to declared attributes. `extra` names non-attribute
/// columns that must be present exactly once (e.g. `id`, `unitID`).
pub(crate) struct ColumnMap<'s> {
    pub extra: Vec<usize>,
    pub attributes: Vec<(usize, &'s AttributeDecl)>,
}

pub(crate) fn map_columns<'s>(
    header: &csv::StringRecord,
    extra: &[&str],
    optional: &[&str],
    declared: &[&'s AttributeDecl],
    owner: &'static str,
) -> IngestResult<(ColumnMap<'s>, Vec<Option<usize>>)> {
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for col in header.iter() {
        if !seen.insert(col) {
            errors.push(IngestError::DuplicateColumn {
                line: 1,
                column: col.to_string(),
            });
        }
        let known = extra.contains(&col)
            || optional.contains(&col)
            || declared.iter().any(|d| d.name == col);
        if !known {
            errors.push(IngestError::UnknownColumn {
                line: 1,
                column: col.to_string(),
                owner,
            });
        }
    }
    let find = |name: &str| header.iter().position(|c| c == name);
    let mut extra_idx = Vec::new();
    for name in extra {
        match find(name) {
            Some(i) => extra_idx.push(i),
            None => errors.push(IngestError::MissingColumn {
                line: 1,
                column: name.to_string(),
            }),
        }
    }
    let mut attributes = Vec::new();
    for decl in declared {
        match find(&decl.name) {
            Some(i) => attributes.push((i, *decl)),
            None => errors.push(IngestError::MissingColumn {
                line: 1,
                column: decl.name.clone(),
            }),
        }
    }
    let optional_idx = optional.iter().map(|n| find(n)).collect();
    if errors.is_empty() {
        Ok((
            ColumnMap {
                extra: extra_idx,
                attributes,
            },
            optional_idx,
        ))
    } else {
        Err(errors)
    }
}

/// Reads the attribute cells of one record, rejecting the reserved `*` value.
/// Unit table rows allow several values for group attributes.
pub(crate) fn read_values(
    record: &csv::StringRecord,
    columns: &ColumnMap<'_>,
    unit_table: bool,
    errors: &mut Vec<IngestError>,
) -> AttributeValues {
    let line = line_of(record);
    let mut values = AttributeValues::new();
    for &(idx, decl) in &columns.attributes {
        let set_valued = if unit_table { decl.is_set_valued_in_table() } else { decl.is_multi() };
        let set = split_cell_as(&record[idx], set_valued);
        if set.contains(STAR) {
            errors.push(IngestError::ReservedValue {
                line,
                column: decl.name.clone(),
                value: STAR.to_string(),
            });
        }
        if !set.is_empty() {
            values.insert(decl.name.clone(), set);
        }
    }
    values
}

fn parse_entities<R: Read>(
    input: R,
    schema: &AttributeSchema,
    owner: Owner,
) -> IngestResult<Vec<(String, AttributeValues)>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| vec![csv_error(&e)])?.clone();
    let declared: Vec<&AttributeDecl> = schema.owned_by(owner).collect();
    let (columns, _) = map_columns(&header, &["id"], &[], &declared, owner.as_str())?;
    let id_col = columns.extra[0];

    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                errors.push(csv_error(&e));
                continue;
            }
        };
        let line = line_of(&record);
        let id = record[id_col].to_string();
        if id.is_empty() {
            errors.push(IngestError::MalformedRow {
                line,
                message: "empty id".to_string(),
            });
            continue;
        }
        if !seen.insert(id.clone()) {
            errors.push(IngestError::DuplicateId { line, id });
            continue;
        }
        let values = read_values(&record, &columns, false, &mut errors);
        out.push((id, values));
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

pub fn parse_individuals<R: Read>(input: R, schema: &AttributeSchema) -> IngestResult<Vec<Individual>> {
    Ok(parse_entities(input, schema, Owner::Individual)?
        .into_iter()
        .map(|(id, values)| Individual { id, values })
        .collect())
}

pub fn parse_groups<R: Read>(input: R, schema: &AttributeSchema) -> IngestResult<Vec<Group>> {
    Ok(parse_entities(input, schema, Owner::Group)?
        .into_iter()
        .map(|(id, values)| Group { id, values })
        .collect())
}

fn parse_date(cell: &str, line: u64) -> Result<Option<NaiveDate>, IngestError> {
    if cell.is_empty() {
        return Ok(None);
    }
    // chrono accepts some non-padded forms; insist on the exact 10-byte layout
    let ok_shape = cell.len() == 10
        && cell.bytes().enumerate().all(|(i, b)| match i {
            4 | 7 => b == b'-',
            _ => b.is_ascii_digit(),
        });
    if !ok_shape {
        return Err(IngestError::MalformedDate {
            line,
            value: cell.to_string(),
        });
    }
    NaiveDate::parse_from_str(cell, "%Y-%m-%d")
        .map(Some)
        .map_err(|_| IngestError::MalformedDate {
            line,
            value: cell.to_string(),
        })
}

/// Parses membership edges with header `individualID,groupID[,start,end]`.
///
/// Repeated (individual, group) pairs are accepted only when their validity
/// intervals are disjoint.
pub fn parse_membership<R: Read>(input: R) -> IngestResult<Vec<MembershipEdge>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| vec![csv_error(&e)])?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let dated = match cols.as_slice() {
        ["individualID", "groupID"] => false,
        ["individualID", "groupID", "start", "end"] => true,
        _ => {
            return Err(vec![IngestError::MalformedRow {
                line: 1,
                message: "expected header `individualID,groupID` or `individualID,groupID,start,end`"
                    .to_string(),
            }])
        }
    };

    let mut errors = Vec::new();
    let mut edges = Vec::new();
    let mut by_pair: HashMap<(String, String), Vec<(Validity, u64)>> = HashMap::new();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                errors.push(csv_error(&e));
                continue;
            }
        };
        let line = line_of(&record);
        let (ind, grp) = (&record[0], &record[1]);
        if ind.is_empty() || grp.is_empty() {
            errors.push(IngestError::MalformedRow {
                line,
                message: "empty individualID or groupID".to_string(),
            });
            continue;
        }
        let validity = if dated {
            let start = parse_date(&record[2], line);
            let end = parse_date(&record[3], line);
            match (start, end) {
                (Ok(None), Ok(None)) => None,
                (Ok(s), Ok(e)) => match Validity::new(s, e) {
                    Some(v) => Some(v),
                    None => {
                        errors.push(IngestError::InvertedInterval { line });
                        continue;
                    }
                },
                (s, e) => {
                    errors.extend(s.err());
                    errors.extend(e.err());
                    continue;
                }
            }
        } else {
            None
        };
        let span = validity.unwrap_or(Validity {
            start: None,
            end: None,
        });
        let prior = by_pair.entry((ind.to_string(), grp.to_string())).or_default();
        if let Some(&(_, previous)) = prior.iter().find(|(v, _)| v.overlaps(&span)) {
            errors.push(IngestError::OverlappingMembership {
                line,
                previous,
                individual: ind.to_string(),
                group: grp.to_string(),
            });
            continue;
        }
        prior.push((span, line));
        edges.push(MembershipEdge {
            individual: ind.to_string(),
            group: grp.to_string(),
            validity,
        });
    }
    if errors.is_empty() {
        Ok(edges)
    } else {
        Err(errors)
    }
}

/// Parses a snapshot list with header `date`. Output is sorted and deduplicated.
pub fn parse_snapshots<R: Read>(input: R) -> IngestResult<Vec<SnapshotDate>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(|e| vec![csv_error(&e)])?.clone();
    if header.len() != 1 || &header[0] != "date" {
        return Err(vec![IngestError::MissingColumn {
            line: 1,
            column: "date".to_string(),
        }]);
    }
    let mut errors = Vec::new();
    let mut dates = BTreeSet::new();
    for record in rdr.records() {
        match record {
            Ok(r) => match parse_date(&r[0], line_of(&r)) {
                Ok(Some(d)) => {
                    dates.insert(SnapshotDate(d));
                }
                Ok(None) => errors.push(IngestError::MalformedDate {
                    line: line_of(&r),
                    value: String::new(),
                }),
                Err(e) => errors.push(e),
            },
            Err(e) => errors.push(csv_error(&e)),
        }
    }
    if errors.is_empty() {
        Ok(dates.into_iter().collect())
    } else {
        Err(errors)
    }
}

fn write_entities<'a>(
    schema: &AttributeSchema,
    owner: Owner,
    rows: impl Iterator<Item = (&'a str, &'a AttributeValues)>,
) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let declared: Vec<&AttributeDecl> = schema.owned_by(owner).collect();
    let mut header = vec!["id"];
    header.extend(declared.iter().map(|d| d.name.as_str()));
    w.write_record(&header).expect("in-memory write");
    for (id, values) in rows {
        let mut rec = vec![id.to_string()];
        for d in &declared {
            rec.push(values.get(&d.name).map(join_cell).unwrap_or_default());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn write_individuals(schema: &AttributeSchema, individuals: &[Individual]) -> String {
    write_entities(
        schema,
        Owner::Individual,
        individuals.iter().map(|i| (i.id.as_str(), &i.values)),
    )
}

pub fn write_groups(schema: &AttributeSchema, groups: &[Group]) -> String {
    write_entities(
        schema,
        Owner::Group,
        groups.iter().map(|g| (g.id.as_str(), &g.values)),
    )
}

pub fn write_membership(edges: &[MembershipEdge]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["individualID", "groupID", "start", "end"])
        .expect("in-memory write");
    let fmt = |d: Option<NaiveDate>| d.map(|d| d.format("%Y-%m-%d").to_string()).unwrap_or_default();
    for e in edges {
        let (s, t) = e.validity.map_or((None, None), |v| (v.start, v.end));
        w.write_record([e.individual.as_str(), e.group.as_str(), &fmt(s), &fmt(t)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn write_snapshots(snapshots: &[SnapshotDate]) -> String {
    let mut out = String::from("date\n");
    for s in snapshots {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}
