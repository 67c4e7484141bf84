//! Transaction encoding of unit tables and frequent closed itemset mining with
//! per-unit support counts.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::schema::AttributeKind;
use crate::table::UnitTable;

pub type ItemId = u32;
pub type UnitId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Item {
    pub attribute: String,
    pub value: String,
    pub kind: AttributeKind,
}

/// Dense interning of (attribute, value) pairs. Ids follow table column order
/// then value order, so they depend only on the set of pairs present.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ItemDictionary {
    items: Vec<Item>,
    /// Column position of each item's attribute in the unit table.
    columns: Vec<usize>,
    lookup: HashMap<(String, String), ItemId>,
}

impl ItemDictionary {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: ItemId) -> &Item {
        &self.items[id as usize]
    }

    pub fn column(&self, id: ItemId) -> usize {
        self.columns[id as usize]
    }

    pub fn id(&self, attribute: &str, value: &str) -> Option<ItemId> {
        self.lookup.get(&(attribute.to_string(), value.to_string())).copied()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn render(&self, items: &[ItemId]) -> String {
        let mut out = String::new();
        for (i, &id) in items.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let item = self.item(id);
            let _ = write!(out, "{}={}", item.attribute, item.value);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    /// Sorted, duplicate-free.
    pub items: Vec<ItemId>,
    pub unit: UnitId,
}

impl Transaction {
    pub fn new(mut items: Vec<ItemId>, unit: UnitId) -> Self {
        items.sort_unstable();
        items.dedup();
        Transaction { items, unit }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransactionDb {
    pub transactions: Vec<Transaction>,
    pub items: ItemDictionary,
    /// Unit labels indexed by [`UnitId`].
    pub units: Vec<String>,
}

/// Sort key placing integer labels first in numeric order.
fn unit_key(label: &str) -> (bool, u128, &str) {
    match label.parse::<u128>() {
        Ok(n) if !label.starts_with('+') && (label == "0" || !label.starts_with('0')) => (false, n, label),
        _ => (true, 0, label),
    }
}

/// One transaction per row; a multi-valued cell yields one item per value.
pub fn encode(table: &UnitTable) -> TransactionDb {
    let columns = table.schema().table_columns();
    let mut pairs: BTreeSet<(usize, &str)> = BTreeSet::new();
    let mut labels: BTreeSet<&str> = BTreeSet::new();
    for row in table.rows() {
        labels.insert(&row.unit);
        for (col, decl) in columns.iter().enumerate() {
            if let Some(values) = row.values.get(&decl.name) {
                pairs.extend(values.iter().map(|v| (col, v.as_str())));
            }
        }
    }

    let mut dict = ItemDictionary::default();
    for (col, value) in pairs {
        let decl = columns[col];
        let id = dict.items.len() as ItemId;
        dict.items.push(Item {
            attribute: decl.name.clone(),
            value: value.to_string(),
            kind: decl.kind,
        });
        dict.columns.push(col);
        dict.lookup.insert((decl.name.clone(), value.to_string()), id);
    }

    let mut units: Vec<&str> = labels.into_iter().collect();
    units.sort_by(|a, b| unit_key(a).cmp(&unit_key(b)));
    let unit_ids: HashMap<&str, UnitId> = units.iter().enumerate().map(|(i, u)| (*u, i as UnitId)).collect();

    let transactions = table
        .rows()
        .iter()
        .map(|row| {
            let mut items = Vec::new();
            for decl in &columns {
                if let Some(values) = row.values.get(&decl.name) {
                    items.extend(values.iter().map(|v| dict.lookup[&(decl.name.clone(), v.clone())]));
                }
            }
            Transaction::new(items, unit_ids[row.unit.as_str()])
        })
        .collect();

    TransactionDb {
        transactions,
        items: dict,
        units: units.into_iter().map(str::to_string).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedItemset {
    pub items: Vec<ItemId>,
    pub support: u64,
    /// Sorted by unit, zero counts omitted. Sums to `support`.
    pub per_unit: Vec<(UnitId, u64)>,
}

impl ClosedItemset {
    pub fn count_in(&self, unit: UnitId) -> u64 {
        self.per_unit
            .binary_search_by_key(&unit, |&(u, _)| u)
            .map_or(0, |i| self.per_unit[i].1)
    }
}

/// Distinct item sets with multiplicities bucketed by unit.
struct WeightedTx {
    items: Vec<ItemId>,
    weight: u64,
    units: Vec<(UnitId, u64)>,
}

struct Miner {
    txs: Vec<WeightedTx>,
    n_items: usize,
    minsup: u64,
}

impl Miner {
    fn new(transactions: &[Transaction], minsup: u64) -> Self {
        let n_items = transactions
            .iter()
            .flat_map(|t| t.items.iter())
            .max()
            .map_or(0, |&m| m as usize + 1);
        let mut support = vec![0u64; n_items];
        for t in transactions {
            for &i in &t.items {
                support[i as usize] += 1;
            }
        }
        // items below minsup never occur in a frequent closed set
        let mut grouped: HashMap<Vec<ItemId>, HashMap<UnitId, u64>> = HashMap::new();
        for t in transactions {
            let items: Vec<ItemId> = t
                .items
                .iter()
                .copied()
                .filter(|&i| support[i as usize] >= minsup)
                .collect();
            *grouped.entry(items).or_default().entry(t.unit).or_insert(0) += 1;
        }
        let mut txs: Vec<WeightedTx> = grouped
            .into_iter()
            .map(|(items, units)| {
                let mut units: Vec<(UnitId, u64)> = units.into_iter().collect();
                units.sort_unstable();
                WeightedTx {
                    weight: units.iter().map(|u| u.1).sum(),
                    items,
                    units,
                }
            })
            .collect();
        txs.sort_unstable_by(|a, b| a.items.cmp(&b.items));
        Miner { txs, n_items, minsup }
    }

    fn frequencies(&self, db: &[u32]) -> Vec<u64> {
        let mut freq = vec![0u64; self.n_items];
        for &t in db {
            let tx = &self.txs[t as usize];
            for &i in &tx.items {
                freq[i as usize] += tx.weight;
            }
        }
        freq
    }

    fn emit(&self, items: Vec<ItemId>, support: u64, db: &[u32]) -> ClosedItemset {
        let mut per_unit: Vec<(UnitId, u64)> = db
            .iter()
            .flat_map(|&t| self.txs[t as usize].units.iter().copied())
            .collect();
        per_unit.sort_unstable_by_key(|u| u.0);
        per_unit.dedup_by(|next, acc| {
            if next.0 == acc.0 {
                acc.1 += next.1;
                true
            } else {
                false
            }
        });
        ClosedItemset {
            items,
            support,
            per_unit,
        }
    }

    /// Extends `parent` by `item` over the projected database `db` (the
    /// transactions containing `parent ∪ {item}`). Emits the closure when it
    /// is a prefix-preserving extension, then recurses on larger items.
    fn extend(&self, parent: &[ItemId], item: ItemId, db: Vec<u32>, out: &mut Vec<ClosedItemset>) {
        let freq = self.frequencies(&db);
        let support = freq[item as usize];
        let closure: Vec<ItemId> = (0..self.n_items as ItemId)
            .filter(|&j| freq[j as usize] == support)
            .collect();
        // prefix preservation: nothing below `item` may enter the closure
        let below_closure = closure.iter().take_while(|&&j| j < item);
        let below_parent = parent.iter().take_while(|&&j| j < item);
        if below_closure.ne(below_parent) {
            return;
        }
        self.expand(closure, Some(item), db, &freq, support, out);
    }

    fn expand(
        &self,
        closed: Vec<ItemId>,
        core: Option<ItemId>,
        db: Vec<u32>,
        freq: &[u64],
        support: u64,
        out: &mut Vec<ClosedItemset>,
    ) {
        let candidates = self.candidates(&closed, core, freq);
        out.push(self.emit(closed.clone(), support, &db));
        for e in candidates {
            let sub = self.project(&db, e);
            self.extend(&closed, e, sub, out);
        }
    }

    fn candidates(&self, closed: &[ItemId], core: Option<ItemId>, freq: &[u64]) -> Vec<ItemId> {
        let start = core.map_or(0, |c| c + 1);
        (start..self.n_items as ItemId)
            .filter(|&e| freq[e as usize] >= self.minsup && closed.binary_search(&e).is_err())
            .collect()
    }

    fn project(&self, db: &[u32], item: ItemId) -> Vec<u32> {
        db.iter()
            .copied()
            .filter(|&t| self.txs[t as usize].items.binary_search(&item).is_ok())
            .collect()
    }
}

/// Canonical order: by size, then lexicographically by item ids.
pub fn canonical_cmp(a: &[ItemId], b: &[ItemId]) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Mines every closed itemset with support ≥ `minsup`, each with exact
/// per-unit counts. The closure of the empty set comes first in the search;
/// it is the empty itemset itself unless some item occurs in every
/// transaction.
pub fn mine_closed(transactions: &[Transaction], minsup: u64) -> Vec<ClosedItemset> {
    let minsup = minsup.max(1);
    let miner = Miner::new(transactions, minsup);
    let total: u64 = miner.txs.iter().map(|t| t.weight).sum();
    if total < minsup {
        return Vec::new();
    }
    let db: Vec<u32> = (0..miner.txs.len() as u32).collect();
    let freq = miner.frequencies(&db);
    let root: Vec<ItemId> = (0..miner.n_items as ItemId)
        .filter(|&j| freq[j as usize] == total)
        .collect();
    let candidates = miner.candidates(&root, None, &freq);

    let mut out = vec![miner.emit(root.clone(), total, &db)];
    let branches: Vec<Vec<ClosedItemset>> = candidates
        .into_par_iter()
        .map(|e| {
            let mut local = Vec::new();
            miner.extend(&root, e, miner.project(&db, e), &mut local);
            local
        })
        .collect();
    out.extend(branches.into_iter().flatten());
    out.sort_unstable_by(|a, b| canonical_cmp(&a.items, &b.items));
    out
}

/// Splits an itemset into its SA part `A` and CA part `B`.
pub fn split_coordinates(items: &[ItemId], dict: &ItemDictionary) -> (Vec<ItemId>, Vec<ItemId>) {
    items
        .iter()
        .partition(|&&i| dict.item(i).kind == AttributeKind::Segregation)
}

/// Debug dump: `items;support;unit:count,unit:count,...`.
pub fn dump_itemsets(closed: &[ClosedItemset], db: &TransactionDb) -> String {
    let mut out = String::from("items;support;units\n");
    for c in closed {
        let units: Vec<String> = c
            .per_unit
            .iter()
            .map(|&(u, n)| format!("{}:{}", db.units[u as usize], n))
            .collect();
        let _ = writeln!(out, "{};{};{}", db.items.render(&c.items), c.support, units.join(","));
    }
    out
}

/// Absolute support threshold: an integer, or a percentage of `n` such as
/// `1%` or `2.5%` (rounded up, at least 1).
pub fn resolve_minsup(spec: &str, n: usize) -> Result<u64, String> {
    let spec = spec.trim();
    if let Some(pct) = spec.strip_suffix('%') {
        let pct: f64 = pct
            .trim()
            .parse()
            .map_err(|_| format!("invalid percentage `{spec}`"))?;
        if !(pct > 0.0 && pct <= 100.0) {
            return Err(format!("percentage must be in (0, 100], got `{spec}`"));
        }
        Ok(((pct * n as f64 / 100.0).ceil() as u64).max(1))
    } else {
        match spec.parse::<u64>() {
            Ok(0) | Err(_) => Err(format!("minsup must be a positive integer or a percentage, got `{spec}`")),
            Ok(v) => Ok(v),
        }
    }
}
