//! Attribute schema, entity records and membership edges shared by every stage.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Whether an attribute designates potentially segregated groups or contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttributeKind {
    #[serde(rename = "SA")]
    Segregation,
    #[serde(rename = "CA")]
    Context,
}

impl AttributeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributeKind::Segregation => "SA",
            AttributeKind::Context => "CA",
        }
    }
}

impl FromStr for AttributeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SA" => Ok(AttributeKind::Segregation),
            "CA" => Ok(AttributeKind::Context),
            other => Err(format!("unknown attribute kind `{other}` (expected SA or CA)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Individual,
    Group,
}

impl Owner {
    pub fn as_str(self) -> &'static str {
        match self {
            Owner::Individual => "individual",
            Owner::Group => "group",
        }
    }
}

impl FromStr for Owner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "individual" => Ok(Owner::Individual),
            "group" => Ok(Owner::Group),
            other => Err(format!("unknown owner `{other}` (expected individual or group)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiplicity {
    Single,
    Multi,
}

impl Multiplicity {
    pub fn as_str(self) -> &'static str {
        match self {
            Multiplicity::Single => "single",
            Multiplicity::Multi => "multi",
        }
    }
}

impl FromStr for Multiplicity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Multiplicity::Single),
            "multi" => Ok(Multiplicity::Multi),
            other => Err(format!("unknown multiplicity `{other}` (expected single or multi)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeDecl {
    pub name: String,
    pub kind: AttributeKind,
    pub owner: Owner,
    pub multiplicity: Multiplicity,
}

impl AttributeDecl {
    pub fn new(name: &str, kind: AttributeKind, owner: Owner, multiplicity: Multiplicity) -> Self {
        AttributeDecl {
            name: name.to_string(),
            kind,
            owner,
            multiplicity,
        }
    }

    pub fn is_multi(&self) -> bool {
        self.multiplicity == Multiplicity::Multi
    }

    /// Whether a unit table cell may hold several values: multi-valued
    /// attributes, and group attributes of individuals in several groups.
    pub fn is_set_valued_in_table(&self) -> bool {
        self.is_multi() || self.owner == Owner::Group
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("attribute `{0}` declared more than once")]
    DuplicateAttribute(String),
    #[error("attribute `{0}` is a segregation attribute owned by groups; groups carry context attributes only")]
    GroupSAForbidden(String),
    #[error("schema declares no {0} attribute")]
    EmptySchema(&'static str),
    #[error("invalid attribute name `{0}`: names must be non-empty and contain no commas")]
    InvalidName(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

/// Ordered attribute declarations. Only constructible through [`AttributeSchema::validate`],
/// so a value of this type always satisfies the schema invariants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct AttributeSchema {
    attributes: Vec<AttributeDecl>,
}

impl AttributeSchema {
    /// Checks every invariant and collects all violations.
    pub fn validate(attributes: Vec<AttributeDecl>) -> Result<Self, Vec<SchemaError>> {
        let mut errors = Vec::new();
        let mut seen = HashSet::new();
        for decl in &attributes {
            if decl.name.is_empty() || decl.name.contains(',') {
                errors.push(SchemaError::InvalidName(decl.name.clone()));
            }
            if !seen.insert(decl.name.as_str()) {
                errors.push(SchemaError::DuplicateAttribute(decl.name.clone()));
            }
            if decl.owner == Owner::Group && decl.kind == AttributeKind::Segregation {
                errors.push(SchemaError::GroupSAForbidden(decl.name.clone()));
            }
        }
        if !attributes.iter().any(|a| a.kind == AttributeKind::Segregation) {
            errors.push(SchemaError::EmptySchema("segregation (SA)"));
        }
        if !attributes.iter().any(|a| a.kind == AttributeKind::Context) {
            errors.push(SchemaError::EmptySchema("context (CA)"));
        }
        if errors.is_empty() {
            Ok(AttributeSchema { attributes })
        } else {
            Err(errors)
        }
    }

    /// Parses a schema file with header `name,kind,owner,multiplicity`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, Vec<SchemaError>> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| vec![csv_schema_error(&e)])?
            .clone();
        let expected = ["name", "kind", "owner", "multiplicity"];
        if header.iter().ne(expected.iter().copied()) {
            return Err(vec![SchemaError::Malformed {
                line: 1,
                message: format!("expected header `{}`", expected.join(",")),
            }]);
        }
        let mut decls = Vec::new();
        let mut errors = Vec::new();
        for record in rdr.records() {
            let record = match record {
                Ok(r) => r,
                Err(e) => {
                    errors.push(csv_schema_error(&e));
                    continue;
                }
            };
            let line = record.position().map_or(0, |p| p.line());
            let parsed = (|| -> Result<AttributeDecl, String> {
                Ok(AttributeDecl {
                    name: record[0].to_string(),
                    kind: record[1].parse()?,
                    owner: record[2].parse()?,
                    multiplicity: record[3].parse()?,
                })
            })();
            match parsed {
                Ok(d) => decls.push(d),
                Err(message) => errors.push(SchemaError::Malformed { line, message }),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        AttributeSchema::validate(decls)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,kind,owner,multiplicity\n");
        for a in &self.attributes {
            out.push_str(&format!(
                "{},{},{},{}\n",
                a.name,
                a.kind.as_str(),
                a.owner.as_str(),
                a.multiplicity.as_str()
            ));
        }
        out
    }

    pub fn attributes(&self) -> &[AttributeDecl] {
        &self.attributes
    }

    pub fn get(&self, name: &str) -> Option<&AttributeDecl> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn owned_by(&self, owner: Owner) -> impl Iterator<Item = &AttributeDecl> {
        self.attributes.iter().filter(move |a| a.owner == owner)
    }

    pub fn of_kind(&self, kind: AttributeKind) -> impl Iterator<Item = &AttributeDecl> {
        self.attributes.iter().filter(move |a| a.kind == kind)
    }

    /// Column order of a unit table: SA attributes then CA attributes, each in declaration order.
    pub fn table_columns(&self) -> Vec<&AttributeDecl> {
        self.of_kind(AttributeKind::Segregation)
            .chain(self.of_kind(AttributeKind::Context))
            .collect()
    }
}

impl<'de> Deserialize<'de> for AttributeSchema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let decls = Vec::<AttributeDecl>::deserialize(d)?;
        AttributeSchema::validate(decls).map_err(|errs| {
            let msg: Vec<String> = errs.iter().map(ToString::to_string).collect();
            serde::de::Error::custom(msg.join("; "))
        })
    }
}

fn csv_schema_error(e: &csv::Error) -> SchemaError {
    SchemaError::Malformed {
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    }
}

/// Attribute values of one entity. Values are kept as ordered sets so that
/// equality and serialization do not depend on input order.
pub type AttributeValues = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Individual {
    pub id: String,
    pub values: AttributeValues,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub id: String,
    pub values: AttributeValues,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SnapshotDate(pub NaiveDate);

impl SnapshotDate {
    pub fn date(self) -> NaiveDate {
        self.0
    }
}

impl FromStr for SnapshotDate {
    type Err = chrono::ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").map(SnapshotDate)
    }
}

impl fmt::Display for SnapshotDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

/// Validity interval; an absent bound is unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Validity {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl Validity {
    pub fn new(start: Option<NaiveDate>, end: Option<NaiveDate>) -> Option<Self> {
        match (start, end) {
            (Some(s), Some(e)) if s > e => None,
            _ => Some(Validity { start, end }),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start.map_or(true, |s| s <= date) && self.end.map_or(true, |e| date <= e)
    }

    pub fn overlaps(&self, other: &Validity) -> bool {
        let starts_before_other_ends = match (self.start, other.end) {
            (Some(s), Some(e)) => s <= e,
            _ => true,
        };
        let other_starts_before_end = match (other.start, self.end) {
            (Some(s), Some(e)) => s <= e,
            _ => true,
        };
        starts_before_other_ends && other_starts_before_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MembershipEdge {
    pub individual: String,
    pub group: String,
    pub validity: Option<Validity>,
}

impl MembershipEdge {
    pub fn new(individual: &str, group: &str) -> Self {
        MembershipEdge {
            individual: individual.to_string(),
            group: group.to_string(),
            validity: None,
        }
    }

    pub fn with_validity(mut self, validity: Validity) -> Self {
        self.validity = Some(validity);
        self
    }

    /// Unlabeled edges are always active.
    pub fn active_at(&self, date: SnapshotDate) -> bool {
        self.validity.map_or(true, |v| v.contains(date.0))
    }

    /// `None` means no snapshot filter: every edge counts.
    pub fn active_at_opt(&self, date: Option<SnapshotDate>) -> bool {
        date.map_or(true, |d| self.active_at(d))
    }
}
