//! Built-in oracle suite: small random instances checked against naive
//! reimplementations, plus validation of cube documents found in a fixture
//! directory.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clustering::{connected_components, threshold_components};
use crate::cube::{build_cube, CubeParams};
use crate::export::{parse_json, verify_cells};
use crate::indexes::{compute, CountsVector};
use crate::miner::{encode, mine_closed, Transaction};
use crate::projection::project;
use crate::schema::{AttributeDecl, AttributeKind, AttributeSchema, MembershipEdge, Multiplicity, Owner};
use crate::table::{UnitRow, UnitTable};

const ROUNDS: u64 = 25;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("fixture directory {0} does not exist")]
    MissingFixtures(PathBuf),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: String,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.failure.is_none())
    }

    fn record(&mut self, name: impl Into<String>, result: Result<(), String>) {
        self.outcomes.push(CheckOutcome {
            name: name.into(),
            failure: result.err(),
        });
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in &self.outcomes {
            match &o.failure {
                None => writeln!(f, "PASS {}", o.name)?,
                Some(why) => writeln!(f, "FAIL {}: {why}", o.name)?,
            }
        }
        Ok(())
    }
}

/// Runs the oracle suite, then validates every `*.json` cube under `fixtures`.
pub fn self_check(fixtures: Option<&Path>) -> Result<CheckReport, CheckError> {
    let cubes = match fixtures {
        Some(dir) if !dir.is_dir() => return Err(CheckError::MissingFixtures(dir.to_path_buf())),
        Some(dir) => {
            let mut found = Vec::new();
            collect_json(dir, &mut found)?;
            found.sort();
            found
        }
        None => Vec::new(),
    };
    let mut report = CheckReport::default();
    report.record("projection", (0..ROUNDS).try_for_each(check_projection));
    report.record("components", (0..ROUNDS).try_for_each(check_components));
    report.record("mining", (0..ROUNDS).try_for_each(check_mining));
    report.record("cells", (0..ROUNDS).try_for_each(check_cells));
    for path in cubes {
        let result = fs::read(&path)
            .map_err(|e| e.to_string())
            .and_then(|bytes| parse_json(&bytes).map_err(|e| e.to_string()))
            .and_then(|cube| {
                let problems = verify_cells(&cube);
                if problems.is_empty() {
                    Ok(())
                } else {
                    Err(problems.join("; "))
                }
            });
        report.record(format!("fixture {}", path.display()), result);
    }
    Ok(report)
}

fn collect_json(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CheckError> {
    let io = |e: std::io::Error| CheckError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    };
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            collect_json(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "json") {
            out.push(path);
        }
    }
    Ok(())
}

fn rng(round: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(salt.wrapping_mul(1_000_003) ^ round)
}

fn random_membership(rng: &mut ChaCha8Rng, individuals: usize, groups: usize, density: f64) -> Vec<MembershipEdge> {
    let mut out = Vec::new();
    for i in 0..individuals {
        for g in 0..groups {
            if rng.gen_bool(density) {
                out.push(MembershipEdge::new(&format!("i{i}"), &format!("g{g:02}")));
            }
        }
    }
    out
}

fn check_projection(round: u64) -> Result<(), String> {
    let mut rng = rng(round, 1);
    let n_groups = rng.gen_range(1..20);
    let n_individuals = rng.gen_range(0..30);
    let membership = random_membership(&mut rng, n_individuals, n_groups, 0.1);
    let groups: Vec<String> = (0..n_groups).map(|g| format!("g{g:02}")).collect();
    let graph = project(&membership, groups.iter().map(String::as_str), None);

    let mut members: BTreeMap<&str, BTreeSet<&str>> = groups.iter().map(|g| (g.as_str(), BTreeSet::new())).collect();
    for e in &membership {
        members.get_mut(e.group.as_str()).expect("known group").insert(&e.individual);
    }
    let mut expected = BTreeMap::new();
    let mut isolated = BTreeSet::new();
    for (a, ma) in &members {
        let mut linked = false;
        for (b, mb) in &members {
            let shared = ma.intersection(mb).count() as u64;
            if a != b && shared > 0 {
                linked = true;
                if a < b {
                    expected.insert((a.to_string(), b.to_string()), shared);
                }
            }
        }
        if !linked {
            isolated.insert(a.to_string());
        }
    }
    let actual: BTreeMap<(String, String), u64> = graph
        .edges()
        .iter()
        .map(|e| ((graph.nodes()[e.a].clone(), graph.nodes()[e.b].clone()), e.weight))
        .collect();
    let actual_isolated: BTreeSet<String> = graph.isolated().map(str::to_string).collect();
    if actual != expected || actual_isolated != isolated {
        return Err(format!("round {round}: projection differs from pairwise intersection"));
    }
    Ok(())
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn check_components(round: u64) -> Result<(), String> {
    let mut rng = rng(round, 2);
    let (n_individuals, n_groups) = (rng.gen_range(0..25), rng.gen_range(1..25));
    let membership = random_membership(&mut rng, n_individuals, n_groups, 0.08);
    let graph = project(&membership, std::iter::empty(), None);
    let n = graph.nodes().len();
    let mut parent: Vec<usize> = (0..n).collect();
    for e in graph.edges() {
        let (a, b) = (find(&mut parent, e.a), find(&mut parent, e.b));
        parent[a] = b;
    }
    let cc = connected_components(&graph);
    for x in 0..n {
        for y in x + 1..n {
            let same = find(&mut parent, x) == find(&mut parent, y);
            let (nx, ny) = (&graph.nodes()[x], &graph.nodes()[y]);
            if same != (cc.unit_of(nx) == cc.unit_of(ny)) {
                return Err(format!("round {round}: {nx} and {ny} disagree with union-find"));
            }
        }
    }
    let t1 = threshold_components(&graph, 1);
    if t1.iter().ne(cc.iter()) {
        return Err(format!("round {round}: threshold 1 differs from components"));
    }
    let mut previous = cc.unit_count();
    for w in 2..5 {
        let count = threshold_components(&graph, w).unit_count();
        if count < previous {
            return Err(format!("round {round}: unit count fell at min weight {w}"));
        }
        previous = count;
    }
    Ok(())
}

fn check_mining(round: u64) -> Result<(), String> {
    let mut rng = rng(round, 3);
    let n_items = rng.gen_range(1..8u32);
    let minsup = rng.gen_range(1..4u64);
    let transactions: Vec<Transaction> = (0..rng.gen_range(0..25))
        .map(|_| {
            let items = (0..n_items).filter(|_| rng.gen_bool(0.4)).collect();
            Transaction::new(items, rng.gen_range(0..3))
        })
        .collect();
    let mut expected = BTreeMap::new();
    for mask in 0u32..(1 << n_items) {
        let set: Vec<u32> = (0..n_items).filter(|i| mask & (1 << i) != 0).collect();
        let covering: Vec<&Transaction> = transactions
            .iter()
            .filter(|t| set.iter().all(|i| t.items.contains(i)))
            .collect();
        if (covering.len() as u64) < minsup {
            continue;
        }
        let closure: Vec<u32> = (0..n_items)
            .filter(|i| covering.iter().all(|t| t.items.contains(i)))
            .collect();
        if closure == set {
            let mut per_unit = BTreeMap::new();
            for t in &covering {
                *per_unit.entry(t.unit).or_insert(0u64) += 1;
            }
            expected.insert(set, (covering.len() as u64, per_unit.into_iter().collect::<Vec<_>>()));
        }
    }
    let actual: BTreeMap<_, _> = mine_closed(&transactions, minsup)
        .into_iter()
        .map(|c| (c.items, (c.support, c.per_unit)))
        .collect();
    if actual != expected {
        return Err(format!("round {round}: closed itemsets differ from power-set enumeration"));
    }
    Ok(())
}

fn check_cells(round: u64) -> Result<(), String> {
    let mut rng = rng(round, 4);
    use AttributeKind::*;
    let schema = AttributeSchema::validate(vec![
        AttributeDecl::new("s1", Segregation, Owner::Individual, Multiplicity::Single),
        AttributeDecl::new("s2", Segregation, Owner::Individual, Multiplicity::Single),
        AttributeDecl::new("c1", Context, Owner::Individual, Multiplicity::Single),
        AttributeDecl::new("c2", Context, Owner::Group, Multiplicity::Multi),
    ])
    .expect("static schema");
    let rows: Vec<UnitRow> = (0..rng.gen_range(0..40))
        .map(|_| {
            let mut values = BTreeMap::new();
            for decl in schema.attributes() {
                let mut v = BTreeSet::new();
                for value in ["a", "b", "c"] {
                    let p = if decl.is_multi() { 0.3 } else { 0.0 };
                    if rng.gen_bool(p) {
                        v.insert(value.to_string());
                    }
                }
                if !decl.is_multi() && rng.gen_bool(0.9) {
                    v.insert(["a", "b"][rng.gen_range(0..2)].to_string());
                }
                if !v.is_empty() {
                    values.insert(decl.name.clone(), v);
                }
            }
            UnitRow {
                individual: None,
                values,
                unit: rng.gen_range(0..4).to_string(),
            }
        })
        .collect();
    let table = UnitTable::new(schema.clone(), rows);
    let db = encode(&table);
    let minsup = rng.gen_range(1..3);
    let params = CubeParams {
        minsup,
        ..Default::default()
    };
    let cube = build_cube(&mine_closed(&db.transactions, minsup), &db, &schema, &params).map_err(|e| e.to_string())?;
    let covers = |row: &UnitRow, coords: &crate::schema::AttributeValues| {
        coords
            .iter()
            .all(|(a, vs)| row.values.get(a).is_some_and(|have| vs.is_subset(have)))
    };
    for cell in &cube.cells {
        let mut t: HashMap<&str, u64> = HashMap::new();
        let mut m: HashMap<&str, u64> = HashMap::new();
        for row in table.rows() {
            if covers(row, &cell.ca) {
                *t.entry(&row.unit).or_default() += 1;
                if covers(row, &cell.sa) {
                    *m.entry(&row.unit).or_default() += 1;
                }
            }
        }
        for (k, &u) in cell.units.iter().enumerate() {
            let label = cube.units[u as usize].as_str();
            if t.get(label).copied() != Some(cell.totals[k]) || m.get(label).copied().unwrap_or(0) != cell.minority[k] {
                return Err(format!("round {round}: counts differ from group-by in unit {label}"));
            }
        }
        if t.len() != cell.units.len() {
            return Err(format!("round {round}: unit set differs from group-by"));
        }
        let counts = CountsVector::new(&cell.totals, &cell.minority).map_err(|e| e.to_string())?;
        for &(kind, value) in &cell.values {
            let fresh = compute(kind, &counts, params.atkinson_b).ok();
            if fresh != value {
                return Err(format!("round {round}: {kind} differs on recomputation"));
            }
        }
    }
    Ok(())
}
