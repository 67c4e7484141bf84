//! Segregation data cube built from closed itemsets.
//!
//! A cell has SA coordinates `A` and CA coordinates `B`; attributes missing
//! from a coordinate map stand for the roll-up value `*`. The context
//! population of unit `i` is the number of rows in `i` covering `B`, the
//! minority the number covering `A ∪ B`. Every value is computed from the
//! cell's own counts; cells are never aggregated from other cells.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indexes::{self, cmp_desc, CountsVector, IndexError, IndexKind, DEFAULT_ATKINSON_B};
use crate::ingest::STAR;
use crate::miner::{canonical_cmp, split_coordinates, ClosedItemset, ItemId, TransactionDb, UnitId};
use crate::schema::{AttributeKind, AttributeSchema, AttributeValues, SnapshotDate};

#[derive(Debug, Clone, PartialEq)]
pub struct CubeParams {
    pub minsup: u64,
    pub indexes: Vec<IndexKind>,
    pub atkinson_b: f64,
}

impl Default for CubeParams {
    fn default() -> Self {
        CubeParams {
            minsup: 1,
            indexes: IndexKind::ALL.to_vec(),
            atkinson_b: DEFAULT_ATKINSON_B,
        }
    }
}

/// How units were obtained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClusteringDescriptor {
    /// `table` (units given in the input table), `given`, `cc` or `threshold`.
    pub method: String,
    pub min_weight: Option<u64>,
    /// Projected side (`groups` or `individuals`) for graph scenarios.
    pub projection: Option<String>,
}

impl ClusteringDescriptor {
    pub fn tabular() -> Self {
        ClusteringDescriptor {
            method: "table".into(),
            min_weight: None,
            projection: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubeCell {
    pub sa: AttributeValues,
    pub ca: AttributeValues,
    /// Units with positive context population, ascending.
    pub units: Vec<UnitId>,
    pub totals: Vec<u64>,
    pub minority: Vec<u64>,
    pub values: Vec<(IndexKind, Option<f64>)>,
}

impl CubeCell {
    pub fn population(&self) -> u64 {
        self.totals.iter().sum()
    }

    pub fn minority_population(&self) -> u64 {
        self.minority.iter().sum()
    }

    pub fn value(&self, kind: IndexKind) -> Option<f64> {
        self.values.iter().find(|(k, _)| *k == kind).and_then(|(_, v)| *v)
    }

    pub fn has_index(&self, kind: IndexKind) -> bool {
        self.values.iter().any(|(k, _)| *k == kind)
    }

    pub fn counts(&self) -> Result<CountsVector, indexes::CountsError> {
        CountsVector::new(&self.totals, &self.minority)
    }

    pub fn is_global(&self) -> bool {
        self.sa.is_empty() && self.ca.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SkipReport {
    /// Itemsets whose context closure was not among the mined itemsets.
    pub missing_context: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegregationCube {
    pub schema: AttributeSchema,
    pub snapshot: Option<SnapshotDate>,
    pub clustering: ClusteringDescriptor,
    pub params: CubeParams,
    pub transactions: u64,
    /// Unit labels indexed by [`UnitId`].
    pub units: Vec<String>,
    /// Attribute values present in the data.
    pub domain: AttributeValues,
    /// Canonically ordered; the global all-`*` cell comes first.
    pub cells: Vec<CubeCell>,
    pub skipped: SkipReport,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CubeError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("value `{value}` never occurs for attribute `{attribute}`")]
    UnknownValue { attribute: String, value: String },
}

fn coordinates(items: &[ItemId], db: &TransactionDb) -> AttributeValues {
    let mut out = AttributeValues::new();
    for &i in items {
        let item = db.items.item(i);
        out.entry(item.attribute.clone()).or_default().insert(item.value.clone());
    }
    out
}

/// Maps every frequent itemset to the index of its closure. Closed sets are
/// visited by descending support, so the first one containing an itemset is
/// its closure; subsets already assigned are pruned with their down-sets.
fn closure_classes(closed: &[ClosedItemset]) -> HashMap<Vec<ItemId>, usize> {
    let mut order: Vec<usize> = (0..closed.len()).collect();
    order.sort_by(|&a, &b| closed[b].support.cmp(&closed[a].support).then(a.cmp(&b)));
    let mut classes: HashMap<Vec<ItemId>, usize> = HashMap::new();
    let mut stack = Vec::new();
    for c in order {
        stack.push((closed[c].items.clone(), 0usize));
        while let Some((set, from)) = stack.pop() {
            if classes.contains_key(&set) {
                continue;
            }
            for pos in from..set.len() {
                let mut child = set.clone();
                child.remove(pos);
                stack.push((child, pos));
            }
            classes.insert(set, c);
        }
    }
    classes
}

fn cell_from_counts(
    sa: AttributeValues,
    ca: AttributeValues,
    context: &ClosedItemset,
    minority: &ClosedItemset,
    params: &CubeParams,
) -> CubeCell {
    let units: Vec<UnitId> = context.per_unit.iter().map(|u| u.0).collect();
    let totals: Vec<u64> = context.per_unit.iter().map(|u| u.1).collect();
    let minority: Vec<u64> = units.iter().map(|&u| minority.count_in(u)).collect();
    let counts = CountsVector::new(&totals, &minority).expect("minority itemset is a superset of its context");
    let values = params
        .indexes
        .iter()
        .map(|&k| (k, indexes::compute(k, &counts, params.atkinson_b).ok()))
        .collect();
    CubeCell {
        sa,
        ca,
        units,
        totals,
        minority,
        values,
    }
}

/// Fills one cell per frequent itemset with non-empty SA part, plus the
/// global all-`*` cell. Counts for an itemset are those of its closure.
pub fn build_cube(
    closed: &[ClosedItemset],
    db: &TransactionDb,
    schema: &AttributeSchema,
    params: &CubeParams,
) -> Result<SegregationCube, CubeError> {
    if params.indexes.contains(&IndexKind::Atkinson) && !(params.atkinson_b > 0.0 && params.atkinson_b < 1.0) {
        return Err(IndexError::InvalidShape(params.atkinson_b).into());
    }
    let classes = closure_classes(closed);

    let mut keyed: Vec<(&Vec<ItemId>, Result<CubeCell, String>)> = classes
        .par_iter()
        .filter_map(|(x, &class)| {
            let (a, b) = split_coordinates(x, &db.items);
            if x.is_empty() {
                let root = &closed[class];
                return Some((x, Ok(cell_from_counts(AttributeValues::new(), AttributeValues::new(), root, root, params))));
            }
            if a.is_empty() {
                return None;
            }
            let outcome = match classes.get(&b) {
                Some(&ctx) => Ok(cell_from_counts(
                    coordinates(&a, db),
                    coordinates(&b, db),
                    &closed[ctx],
                    &closed[class],
                    params,
                )),
                None => Err(db.items.render(x)),
            };
            Some((x, outcome))
        })
        .collect();
    keyed.sort_by(|a, b| canonical_cmp(a.0, b.0));

    let mut cells = Vec::with_capacity(keyed.len());
    let mut skipped = SkipReport::default();
    for (_, outcome) in keyed {
        match outcome {
            Ok(cell) => cells.push(cell),
            Err(rendered) => skipped.missing_context.push(rendered),
        }
    }

    let mut domain = AttributeValues::new();
    for item in db.items.items() {
        domain.entry(item.attribute.clone()).or_default().insert(item.value.clone());
    }

    Ok(SegregationCube {
        schema: schema.clone(),
        snapshot: None,
        clustering: ClusteringDescriptor::tabular(),
        params: params.clone(),
        transactions: db.transactions.len() as u64,
        units: db.units.clone(),
        domain,
        cells,
        skipped,
    })
}

/// Cell coordinates as (attribute, value) pairs; `*` or an absent attribute
/// means roll-up. A multi-valued attribute may appear with several values.
pub fn query_cell<'c>(cube: &'c SegregationCube, coords: &[(&str, &str)]) -> Result<Option<&'c CubeCell>, CubeError> {
    let mut sa = AttributeValues::new();
    let mut ca = AttributeValues::new();
    for &(attribute, value) in coords {
        let decl = cube
            .schema
            .get(attribute)
            .ok_or_else(|| CubeError::UnknownAttribute(attribute.to_string()))?;
        if value == STAR {
            continue;
        }
        if !cube.domain.get(attribute).is_some_and(|d| d.contains(value)) {
            return Err(CubeError::UnknownValue {
                attribute: attribute.to_string(),
                value: value.to_string(),
            });
        }
        let target = match decl.kind {
            AttributeKind::Segregation => &mut sa,
            AttributeKind::Context => &mut ca,
        };
        target.entry(attribute.to_string()).or_default().insert(value.to_string());
    }
    Ok(cube.cells.iter().find(|c| c.sa == sa && c.ca == ca))
}

/// Cells with a defined `index` and population at least `min_population`,
/// most segregated first; ties go to the larger population, then to cube order.
pub fn top_k(cube: &SegregationCube, index: IndexKind, k: usize, min_population: u64) -> Vec<&CubeCell> {
    let mut ranked: Vec<(usize, &CubeCell)> = cube
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.value(index).is_some() && c.population() >= min_population)
        .collect();
    ranked.sort_by(|(ia, a), (ib, b)| {
        cmp_desc(a.value(index), b.value(index))
            .then_with(|| b.population().cmp(&a.population()))
            .then_with(|| ia.cmp(ib))
    });
    ranked.into_iter().take(k).map(|(_, c)| c).collect()
}

/// Renders coordinates for one attribute kind: `*` for roll-up, `|`-joined values otherwise.
pub fn render_coordinate(coords: &AttributeValues, attribute: &str) -> String {
    coords
        .get(attribute)
        .map(|v| v.iter().cloned().collect::<Vec<_>>().join("|"))
        .unwrap_or_else(|| STAR.to_string())
}

/// Human-readable coordinates, e.g. `gender=F, age=* | sector=education`.
pub fn describe(cube: &SegregationCube, cell: &CubeCell) -> String {
    let part = |coords: &AttributeValues, kind: AttributeKind| {
        let rendered: Vec<String> = cube
            .schema
            .of_kind(kind)
            .filter(|d| coords.contains_key(&d.name))
            .map(|d| format!("{}={}", d.name, render_coordinate(coords, &d.name)))
            .collect();
        if rendered.is_empty() {
            STAR.to_string()
        } else {
            rendered.join(", ")
        }
    };
    format!(
        "[{}] in [{}]",
        part(&cell.sa, AttributeKind::Segregation),
        part(&cell.ca, AttributeKind::Context)
    )
}

/// Helper for callers building coordinate maps by hand.
pub fn coords_of(pairs: &[(&str, &str)]) -> AttributeValues {
    let mut out: AttributeValues = BTreeMap::new();
    for &(a, v) in pairs {
        out.entry(a.to_string()).or_default().insert(v.to_string());
    }
    out
}
