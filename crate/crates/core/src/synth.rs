//! Seeded synthetic affiliation data for benchmarks and smoke tests.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::Dataset;
use crate::schema::{
    AttributeDecl, AttributeKind, AttributeSchema, AttributeValues, Group, Individual, MembershipEdge, Multiplicity,
    Owner, SnapshotDate, Validity,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub individuals: usize,
    pub groups: usize,
    /// Distinct (individual, group) pairs; capped at `individuals * groups`.
    pub memberships: usize,
    /// Groups are split into this many communities; most memberships stay inside one.
    pub communities: usize,
    /// Probability that a membership leaves the individual's home community.
    pub crossover: f64,
    /// Attach validity intervals and these snapshot dates.
    pub snapshots: Vec<SnapshotDate>,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            individuals: 1_000,
            groups: 500,
            memberships: 3_000,
            communities: 50,
            crossover: 0.05,
            snapshots: Vec::new(),
            seed: 0,
        }
    }
}

const GENDERS: [&str; 2] = ["F", "M"];
const AGES: [&str; 4] = ["15-38", "39-46", "47-54", "55-"];
const BIRTHPLACES: [&str; 3] = ["north", "centre", "south"];
const RESIDENCES: [&str; 5] = ["north-east", "north-west", "centre", "south", "islands"];
const SECTORS: [&str; 8] = [
    "agriculture",
    "construction",
    "education",
    "energy",
    "finance",
    "health",
    "manufacturing",
    "transports",
];

pub fn synthetic_schema() -> AttributeSchema {
    use AttributeKind::*;
    use Multiplicity::*;
    AttributeSchema::validate(vec![
        AttributeDecl::new("gender", Segregation, Owner::Individual, Single),
        AttributeDecl::new("age", Segregation, Owner::Individual, Single),
        AttributeDecl::new("birthplace", Segregation, Owner::Individual, Single),
        AttributeDecl::new("residence", Context, Owner::Individual, Single),
        AttributeDecl::new("sector", Context, Owner::Group, Multi),
    ])
    .expect("static schema is valid")
}

fn values(pairs: &[(&str, &str)]) -> AttributeValues {
    let mut out = BTreeMap::new();
    for &(a, v) in pairs {
        out.entry(a.to_string()).or_insert_with(BTreeSet::new).insert(v.to_string());
    }
    out
}

/// Generates a linked dataset. Women are over-represented in half of the
/// communities so that the cube has something to find.
pub fn synthetic_dataset(params: &SynthParams) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n_ind = params.individuals;
    let n_grp = params.groups.max(1);
    let communities = params.communities.clamp(1, n_grp);
    let width = n_ind.to_string().len().max(n_grp.to_string().len());

    let groups: Vec<Group> = (0..n_grp)
        .map(|g| {
            let mut v = vec![("sector", SECTORS[rng.gen_range(0..SECTORS.len())])];
            if rng.gen_bool(0.1) {
                v.push(("sector", SECTORS[rng.gen_range(0..SECTORS.len())]));
            }
            Group {
                id: format!("g{g:0width$}"),
                values: values(&v),
            }
        })
        .collect();

    let home: Vec<usize> = (0..n_ind).map(|_| rng.gen_range(0..communities)).collect();
    let individuals: Vec<Individual> = (0..n_ind)
        .map(|i| {
            let female = if home[i] % 2 == 0 { 0.6 } else { 0.2 };
            let gender = if rng.gen_bool(female) { GENDERS[0] } else { GENDERS[1] };
            Individual {
                id: format!("p{i:0width$}"),
                values: values(&[
                    ("gender", gender),
                    ("age", AGES.choose(&mut rng).expect("non-empty")),
                    ("birthplace", BIRTHPLACES.choose(&mut rng).expect("non-empty")),
                    ("residence", RESIDENCES.choose(&mut rng).expect("non-empty")),
                ]),
            }
        })
        .collect();

    let target = params.memberships.min(n_ind.saturating_mul(n_grp));
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(target);
    let mut pairs = Vec::with_capacity(target);
    // every individual gets one membership first, while there is budget
    let mut next_ind = 0usize;
    while pairs.len() < target {
        let i = if next_ind < n_ind {
            next_ind += 1;
            next_ind - 1
        } else {
            rng.gen_range(0..n_ind)
        };
        let community = if rng.gen_bool(params.crossover) {
            rng.gen_range(0..communities)
        } else {
            home[i]
        };
        // community c holds groups c, c + communities, c + 2 * communities, ...
        let span = (n_grp - community).div_ceil(communities);
        let g = community + communities * rng.gen_range(0..span);
        if seen.insert((i, g)) {
            pairs.push((i, g));
        }
    }
    pairs.sort_unstable();

    let dated = !params.snapshots.is_empty();
    let first = params.snapshots.iter().min().map(|d| d.date());
    let last = params.snapshots.iter().max().map(|d| d.date());
    let membership = pairs
        .into_iter()
        .map(|(i, g)| {
            let edge = MembershipEdge::new(&individuals[i].id, &groups[g].id);
            match (dated, first, last) {
                (true, Some(first), Some(last)) => {
                    let span = (last - first).num_days().max(1);
                    let start = first - chrono::Duration::days(rng.gen_range(0..=span));
                    let end = (rng.gen_bool(0.5)).then(|| start + chrono::Duration::days(rng.gen_range(0..=2 * span)));
                    edge.with_validity(Validity::new(Some(start), end).expect("end follows start"))
                }
                _ => edge,
            }
        })
        .collect();

    Dataset {
        schema: synthetic_schema(),
        individuals,
        groups,
        membership,
        snapshots: params.snapshots.clone(),
    }
}

/// A fixed date helper for callers that want a reproducible pair of snapshots.
pub fn default_snapshots() -> Vec<SnapshotDate> {
    [(2010, 12, 31), (2012, 12, 31)]
        .into_iter()
        .map(|(y, m, d)| SnapshotDate(NaiveDate::from_ymd_opt(y, m, d).expect("valid date")))
        .collect()
}
