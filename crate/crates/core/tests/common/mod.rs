//! Naive reference implementations shared by the integration tests. Nothing
//! here calls into the library's algorithms; only data types are shared.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use segcube::schema::{AttributeDecl, AttributeKind, AttributeSchema, Multiplicity, Owner};
use segcube::table::{UnitRow, UnitTable};

/// Index values straight from the textbook formulas; `None` when the
/// minority is empty or the whole population.
pub struct NaiveIndexes {
    pub d: f64,
    pub g: f64,
    pub h: f64,
    pub iso: f64,
    pub int: f64,
    pub atk: f64,
}

fn entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    -(term(p) + term(1.0 - p))
}

pub fn naive_indexes(totals: &[u64], minority: &[u64], b: f64) -> Option<NaiveIndexes> {
    let units: Vec<(f64, f64)> = totals
        .iter()
        .zip(minority)
        .filter(|(t, _)| **t > 0)
        .map(|(&t, &m)| (t as f64, m as f64))
        .collect();
    let t_sum: f64 = units.iter().map(|u| u.0).sum();
    let m_sum: f64 = units.iter().map(|u| u.1).sum();
    if m_sum == 0.0 || m_sum == t_sum {
        return None;
    }
    let p = m_sum / t_sum;

    let d = 0.5
        * units
            .iter()
            .map(|&(t, m)| (m / m_sum - (t - m) / (t_sum - m_sum)).abs())
            .sum::<f64>();

    let mut g_num = 0.0;
    for &(ti, mi) in &units {
        for &(tj, mj) in &units {
            g_num += ti * tj * (mi / ti - mj / tj).abs();
        }
    }
    let g = g_num / (2.0 * t_sum * t_sum * p * (1.0 - p));

    let e = entropy(p);
    let h = units.iter().map(|&(t, m)| t * (e - entropy(m / t))).sum::<f64>() / (t_sum * e);

    let iso = units.iter().map(|&(t, m)| (m / m_sum) * (m / t)).sum();
    let int = units.iter().map(|&(t, m)| (m / m_sum) * ((t - m) / t)).sum();

    let inner: f64 = units
        .iter()
        .map(|&(t, m)| {
            let pi = m / t;
            (1.0 - pi).powf(1.0 - b) * pi.powf(b) * t / (p * t_sum)
        })
        .sum();
    let atk = 1.0 - (p / (1.0 - p)) * inner.abs().powf(1.0 / (1.0 - b));

    Some(NaiveIndexes { d, g, h, iso, int, atk })
}

/// Closed itemsets by brute force over all item subsets (`n_items` ≤ 16):
/// `(items, support, per-unit counts)` sorted by size then items.
pub fn power_set_closed(transactions: &[(Vec<u32>, u32)], n_items: u32, minsup: u64) -> Mined {
    let masks: Vec<(u32, u32)> = transactions
        .iter()
        .map(|(items, unit)| (items.iter().fold(0u32, |acc, &i| acc | (1 << i)), *unit))
        .collect();
    let full = if n_items == 32 { u32::MAX } else { (1u32 << n_items) - 1 };
    let mut out = Vec::new();
    for set in 0..=full {
        let mut support = 0u64;
        let mut closure = full;
        for &(mask, _) in &masks {
            if mask & set == set {
                support += 1;
                closure &= mask;
            }
        }
        if support < minsup || closure != set {
            continue;
        }
        let mut per_unit: BTreeMap<u32, u64> = BTreeMap::new();
        for &(mask, unit) in &masks {
            if mask & set == set {
                *per_unit.entry(unit).or_default() += 1;
            }
        }
        let items: Vec<u32> = (0..n_items).filter(|i| set & (1 << i) != 0).collect();
        out.push((items, support, per_unit.into_iter().collect()));
    }
    out.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    out
}

/// `(items, support, per-unit counts)` per closed itemset.
pub type Mined = Vec<(Vec<u32>, u64, Vec<(u32, u64)>)>;

pub type Coordinate = BTreeSet<(String, String)>;

/// Per-unit counts of every itemset covered by at least one row, found by
/// enumerating the subsets of each row.
pub fn group_by_all(table: &UnitTable) -> HashMap<Coordinate, BTreeMap<String, u64>> {
    let mut out: HashMap<Coordinate, BTreeMap<String, u64>> = HashMap::new();
    for row in table.rows() {
        let items: Vec<(String, String)> = row
            .values
            .iter()
            .flat_map(|(a, vs)| vs.iter().map(move |v| (a.clone(), v.clone())))
            .collect();
        assert!(items.len() < 20, "row too wide for subset enumeration");
        for mask in 0u32..(1 << items.len()) {
            let subset: Coordinate = (0..items.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| items[i].clone())
                .collect();
            *out.entry(subset).or_default().entry(row.unit.clone()).or_default() += 1;
        }
    }
    out
}

/// Direct scan: rows per unit covering every pair in `coords`.
pub fn group_by(table: &UnitTable, coords: &Coordinate) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for row in table.rows() {
        let covered = coords
            .iter()
            .all(|(a, v)| row.values.get(a).is_some_and(|vs| vs.contains(v)));
        if covered {
            *out.entry(row.unit.clone()).or_default() += 1;
        }
    }
    out
}

pub fn coordinate(values: &BTreeMap<String, BTreeSet<String>>) -> Coordinate {
    values
        .iter()
        .flat_map(|(a, vs)| vs.iter().map(move |v| (a.clone(), v.clone())))
        .collect()
}

/// Disjoint-set forest over `0..n`.
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Partition as a set of sorted member lists.
    pub fn blocks(&mut self) -> BTreeSet<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.parent.len() {
            let r = self.find(x);
            by_root.entry(r).or_default().push(x);
        }
        by_root.into_values().collect()
    }
}

/// Group pairs with the number of shared members, by intersecting member
/// sets for every pair of groups.
pub fn naive_projection(
    members: &BTreeMap<String, BTreeSet<String>>,
) -> (BTreeMap<(String, String), u64>, BTreeSet<String>) {
    let groups: Vec<(&String, &BTreeSet<String>)> = members.iter().collect();
    let mut edges = BTreeMap::new();
    let mut linked = BTreeSet::new();
    for (i, (a, ma)) in groups.iter().enumerate() {
        for (b, mb) in &groups[i + 1..] {
            let shared = ma.intersection(mb).count() as u64;
            if shared > 0 {
                edges.insert(((*a).clone(), (*b).clone()), shared);
                linked.insert((*a).clone());
                linked.insert((*b).clone());
            }
        }
    }
    let isolated = members.keys().filter(|g| !linked.contains(*g)).cloned().collect();
    (edges, isolated)
}

/// Random schema with `n_sa` SA and `n_ca` CA attributes; the last CA
/// attribute is multi-valued when `multi` is set.
pub fn random_schema(n_sa: usize, n_ca: usize, multi: bool) -> AttributeSchema {
    let mut decls = Vec::new();
    for i in 0..n_sa {
        decls.push(AttributeDecl::new(&format!("sa{i}"), AttributeKind::Segregation, Owner::Individual, Multiplicity::Single));
    }
    for i in 0..n_ca {
        let m = if multi && i + 1 == n_ca { Multiplicity::Multi } else { Multiplicity::Single };
        let owner = if m == Multiplicity::Multi { Owner::Group } else { Owner::Individual };
        decls.push(AttributeDecl::new(&format!("ca{i}"), AttributeKind::Context, owner, m));
    }
    AttributeSchema::validate(decls).unwrap()
}

/// Random rows over `schema`: single attributes take one of `domain` values
/// (or none with small probability), multi attributes up to three values.
pub fn random_table<R: Rng>(rng: &mut R, schema: &AttributeSchema, rows: usize, domain: usize, units: usize) -> UnitTable {
    let rows = (0..rows)
        .map(|_| {
            let mut values = BTreeMap::new();
            for decl in schema.attributes() {
                let mut set = BTreeSet::new();
                if decl.is_multi() {
                    for _ in 0..rng.gen_range(0..=3) {
                        set.insert(format!("v{}", rng.gen_range(0..domain)));
                    }
                } else if rng.gen_bool(0.95) {
                    set.insert(format!("v{}", rng.gen_range(0..domain)));
                }
                if !set.is_empty() {
                    values.insert(decl.name.clone(), set);
                }
            }
            UnitRow {
                individual: None,
                values,
                unit: rng.gen_range(0..units).to_string(),
            }
        })
        .collect();
    UnitTable::new(schema.clone(), rows)
}
