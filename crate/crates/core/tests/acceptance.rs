//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines always reach the output.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{group_by_all, naive_projection, power_set_closed, random_schema, random_table, Coordinate, UnionFind};
use segcube::clustering::{connected_components, threshold_components, UnitAssignment};
use segcube::cube::{build_cube, CubeParams};
use segcube::indexes::{compute, dissimilarity, CountsVector, IndexKind};
use segcube::ingest::{write_groups, write_individuals, write_membership};
use segcube::miner::{encode, mine_closed, Transaction};
use segcube::pipeline::{run_pipeline, RunConfig};
use segcube::projection::{project, ProjectedGraph};
use segcube::schema::MembershipEdge;
use segcube::synth::{synthetic_dataset, SynthParams};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || {
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

fn all_values(c: &CountsVector) -> Option<[f64; 6]> {
    let mut out = [0.0; 6];
    for (slot, kind) in out.iter_mut().zip(IndexKind::ALL) {
        *slot = compute(kind, c, 0.5).ok()?;
    }
    Some(out)
}

fn index_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0usize;
    let mut defined = 0usize;
    while checked < 12_000 {
        let n = rng.gen_range(1..25);
        let totals: Vec<u64> = (0..n).map(|_| if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..60) }).collect();
        let minority: Vec<u64> = totals.iter().map(|&t| rng.gen_range(0..=t)).collect();
        let Ok(c) = CountsVector::new(&totals, &minority) else { continue };
        checked += 1;
        let Some(v) = all_values(&c) else { continue };
        defined += 1;
        ensure(v.iter().all(|x| (0.0..=1.0).contains(x)), || format!("value outside [0,1]: {v:?} for t={totals:?} m={minority:?}"))?;
        let (d, g, iso, int) = (v[0], v[1], v[3], v[4]);
        ensure((iso + int - 1.0).abs() <= 1e-12, || format!("ISO+INT={} for t={totals:?} m={minority:?}", iso + int))?;
        ensure(d <= g + 1e-12, || format!("D={d} > G={g} for t={totals:?} m={minority:?}"))?;
        let t3: Vec<u64> = totals.iter().map(|t| 3 * t).collect();
        let m3: Vec<u64> = minority.iter().map(|m| 3 * m).collect();
        let v3 = all_values(&CountsVector::new(&t3, &m3).unwrap()).ok_or("replica undefined")?;
        for (k, (a, b)) in IndexKind::ALL.iter().zip(v.iter().zip(&v3)) {
            ensure((a - b).abs() <= 1e-12, || format!("{k} not replication invariant: {a} vs {b}"))?;
        }
    }
    // uniform shares and complete segregation
    for _ in 0..2_000 {
        let n = rng.gen_range(2..15);
        let (q, r) = (rng.gen_range(2..9u64), 0);
        let r = r + rng.gen_range(1..q);
        let ks: Vec<u64> = (0..n).map(|_| rng.gen_range(1..7)).collect();
        let uniform = CountsVector::new(&ks.iter().map(|k| k * q).collect::<Vec<_>>(), &ks.iter().map(|k| k * r).collect::<Vec<_>>()).unwrap();
        let mut minority: Vec<u64> = ks.iter().map(|&k| if rng.gen_bool(0.5) { k * q } else { 0 }).collect();
        minority[0] = ks[0] * q;
        minority[1] = 0;
        let segregated = CountsVector::new(&ks.iter().map(|k| k * q).collect::<Vec<_>>(), &minority).unwrap();
        for kind in [IndexKind::Dissimilarity, IndexKind::Gini, IndexKind::Information, IndexKind::Atkinson] {
            let u = compute(kind, &uniform, 0.5).map_err(|e| e.to_string())?;
            let s = compute(kind, &segregated, 0.5).map_err(|e| e.to_string())?;
            ensure(u.abs() <= 1e-12, || format!("{kind} on uniform shares = {u}"))?;
            ensure((s - 1.0).abs() <= 1e-12, || format!("{kind} under complete segregation = {s}"))?;
        }
    }
    within(start.elapsed(), 10)?;
    Ok(format!("{checked} vectors ({defined} defined) in {:.2}s", start.elapsed().as_secs_f64()))
}

fn dissimilarity_spot() -> Outcome {
    let (m, t) = ([3.0f64, 1.0], [4.0f64, 4.0]);
    let (big_m, big_t) = (4.0, 8.0);
    let scalar = 0.5 * ((m[0] / big_m - (t[0] - m[0]) / (big_t - big_m)).abs() + (m[1] / big_m - (t[1] - m[1]) / (big_t - big_m)).abs());
    let lib = dissimilarity(&CountsVector::new(&[4, 4], &[3, 1]).unwrap()).map_err(|e| e.to_string())?;
    ensure(scalar == 0.5 && lib == 0.5, || format!("scalar {scalar}, library {lib}"))?;
    Ok("D = 0.5".into())
}

fn miner_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut itemsets = 0usize;
    for db in 0..200 {
        let n_items = rng.gen_range(1..=15u32);
        let n_tx = rng.gen_range(0..=64);
        let n_units = rng.gen_range(1..=5u32);
        let density = rng.gen_range(0.1..0.7);
        let raw: Vec<(Vec<u32>, u32)> = (0..n_tx)
            .map(|_| ((0..n_items).filter(|_| rng.gen_bool(density)).collect(), rng.gen_range(0..n_units)))
            .collect();
        let transactions: Vec<Transaction> = raw.iter().map(|(i, u)| Transaction::new(i.clone(), *u)).collect();
        for minsup in 1..=3 {
            let expected = power_set_closed(&raw, n_items, minsup);
            let actual: common::Mined = mine_closed(&transactions, minsup)
                .into_iter()
                .map(|c| (c.items, c.support, c.per_unit))
                .collect();
            ensure(actual == expected, || {
                format!("database {db}, minsup {minsup}: {} mined vs {} expected", actual.len(), expected.len())
            })?;
            itemsets += expected.len();
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("200 databases x 3 thresholds, {itemsets} closed itemsets, {:.2}s", start.elapsed().as_secs_f64()))
}

fn cube_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut cells = 0usize;
    for ds in 0..50 {
        let n_sa = rng.gen_range(1..=3);
        let n_ca = rng.gen_range(1..=6 - n_sa);
        let schema = random_schema(n_sa, n_ca, rng.gen_bool(0.5));
        let rows = rng.gen_range(1..=1_000);
        let (domain, units) = (rng.gen_range(2..=4), rng.gen_range(1..=6));
        let table = random_table(&mut rng, &schema, rows, domain, units);
        let minsup = rng.gen_range(1..=8);
        let params = CubeParams {
            minsup,
            ..Default::default()
        };
        let db = encode(&table);
        let cube = build_cube(&mine_closed(&db.transactions, minsup), &db, &schema, &params).map_err(|e| e.to_string())?;

        let counts = group_by_all(&table);
        let is_sa = |attr: &str| schema.get(attr).unwrap().kind == segcube::AttributeKind::Segregation;
        let support = |c: &BTreeMap<String, u64>| c.values().sum::<u64>();
        let mut expected: BTreeSet<Coordinate> = counts
            .iter()
            .filter(|(k, c)| support(c) >= minsup && k.iter().any(|(a, _)| is_sa(a)))
            .map(|(k, _)| k.clone())
            .collect();
        expected.insert(Coordinate::new());
        let actual: BTreeSet<Coordinate> = cube
            .cells
            .iter()
            .map(|c| {
                let mut k = common::coordinate(&c.sa);
                k.extend(common::coordinate(&c.ca));
                k
            })
            .collect();
        ensure(actual.len() == cube.cells.len(), || format!("dataset {ds}: duplicate coordinates"))?;
        ensure(actual == expected, || {
            format!("dataset {ds}: {} cells, {} frequent coordinates expected", actual.len(), expected.len())
        })?;

        for cell in &cube.cells {
            let ca = common::coordinate(&cell.ca);
            let mut all = common::coordinate(&cell.sa);
            all.extend(ca.iter().cloned());
            let t_by_unit = &counts[&ca];
            let m_by_unit = if cell.is_global() { t_by_unit } else { &counts[&all] };
            let units: Vec<&str> = cell.units.iter().map(|&u| cube.units[u as usize].as_str()).collect();
            let t_exp: Vec<u64> = units.iter().map(|u| t_by_unit.get(*u).copied().unwrap_or(0)).collect();
            let m_exp: Vec<u64> = units.iter().map(|u| m_by_unit.get(*u).copied().unwrap_or(0)).collect();
            ensure(units.len() == t_by_unit.len() && t_exp == cell.totals && m_exp == cell.minority, || {
                format!("dataset {ds}: counts differ from group-by at {all:?}")
            })?;
            let naive = common::naive_indexes(&cell.totals, &cell.minority, params.atkinson_b);
            for &(kind, value) in &cell.values {
                let reference = naive.as_ref().map(|n| match kind {
                    IndexKind::Dissimilarity => n.d,
                    IndexKind::Gini => n.g,
                    IndexKind::Information => n.h,
                    IndexKind::Isolation => n.iso,
                    IndexKind::Interaction => n.int,
                    IndexKind::Atkinson => n.atk,
                });
                let agree = match (value, reference) {
                    (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                    (None, None) => true,
                    _ => false,
                };
                ensure(agree, || format!("dataset {ds}: {kind} {value:?} vs formula {reference:?} at {all:?}"))?;
            }
        }
        cells += cube.cells.len();
    }
    Ok(format!("50 datasets, {cells} cells"))
}

fn projection_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut edges_total = 0;
    for round in 0..12 {
        let (n_groups, n_ind) = if round == 0 { (500, 2_000) } else { (rng.gen_range(1..=500), rng.gen_range(0..=2_000)) };
        let max_deg = rng.gen_range(1..=6);
        let mut membership = Vec::new();
        let mut members: BTreeMap<String, BTreeSet<String>> = (0..n_groups).map(|g| (format!("g{g:03}"), BTreeSet::new())).collect();
        for i in 0..n_ind {
            let ind = format!("i{i:04}");
            let groups: BTreeSet<usize> = (0..rng.gen_range(0..=max_deg)).map(|_| rng.gen_range(0..n_groups)).collect();
            for g in groups {
                let gid = format!("g{g:03}");
                membership.push(MembershipEdge::new(&ind, &gid));
                members.get_mut(&gid).unwrap().insert(ind.clone());
            }
        }
        let (expected, isolated) = naive_projection(&members);
        let graph = project(&membership, members.keys().map(String::as_str), None);
        let actual: BTreeMap<(String, String), u64> = graph
            .edges()
            .iter()
            .map(|e| ((graph.nodes()[e.a].clone(), graph.nodes()[e.b].clone()), e.weight))
            .collect();
        let actual_isolated: BTreeSet<String> = graph.isolated().map(str::to_string).collect();
        ensure(actual == expected, || format!("round {round}: edges differ"))?;
        ensure(actual_isolated == isolated, || format!("round {round}: isolated sets differ"))?;
        edges_total += expected.len();
    }
    Ok(format!("12 graphs, {edges_total} edges"))
}

fn blocks(assignment: &UnitAssignment, graph: &ProjectedGraph) -> BTreeSet<Vec<usize>> {
    let mut by_unit: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (node, unit) in assignment.iter() {
        by_unit.entry(unit).or_default().push(graph.node_index(node).unwrap());
    }
    by_unit.into_values().collect()
}

fn clustering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for round in 0..100 {
        let n = rng.gen_range(1..80);
        let nodes: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
        let mut pairs = BTreeSet::new();
        let m = rng.gen_range(0..2 * n);
        for _ in 0..m {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
        let edges: Vec<(String, String, u64)> = pairs
            .iter()
            .map(|&(a, b)| (nodes[a].clone(), nodes[b].clone(), rng.gen_range(1..6)))
            .collect();
        let graph = ProjectedGraph::from_parts(nodes.clone(), edges).map_err(|e| e.to_string())?;

        let mut uf = UnionFind::new(n);
        for e in graph.edges() {
            uf.union(e.a, e.b);
        }
        let components = uf.blocks();
        let cc = connected_components(&graph);
        ensure(blocks(&cc, &graph) == components, || format!("graph {round}: components differ from union-find"))?;
        let t1 = threshold_components(&graph, 1);
        ensure(t1.iter().eq(cc.iter()) && t1.unit_count() == cc.unit_count(), || format!("graph {round}: minWeight 1 differs"))?;

        let giant = components
            .iter()
            .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b[0].cmp(&a[0])))
            .cloned()
            .unwrap_or_default();
        let giant: BTreeSet<usize> = giant.into_iter().collect();
        let mut previous = 0;
        for w in 1..7 {
            let mut uf = UnionFind::new(n);
            for e in graph.edges() {
                if !(giant.contains(&e.a) && e.weight < w) {
                    uf.union(e.a, e.b);
                }
            }
            let t = threshold_components(&graph, w);
            ensure(blocks(&t, &graph) == uf.blocks(), || format!("graph {round}: minWeight {w} differs from oracle"))?;
            ensure(t.unit_count() >= previous, || format!("graph {round}: unit count fell at minWeight {w}"))?;
            previous = t.unit_count();
        }
    }
    Ok("100 graphs".into())
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    for (i, jobs) in [1, 4, 4].into_iter().enumerate() {
        let mut cfg = RunConfig::from_file(&fixtures().join("bipartite/run.conf")).map_err(|e| e.to_string())?;
        cfg.out = tmp.path().join(format!("run{i}"));
        cfg.jobs = jobs;
        let report = run_pipeline(&cfg).map_err(|e| e.to_string())?;
        ensure(report.success() && report.outcomes.len() == 2, || "pipeline did not produce two cubes".into())?;
        trees.push(read_tree(&cfg.out));
    }
    let exports = trees[0].keys().filter(|k| k.ends_with(".json") || k.ends_with(".csv")).count();
    ensure(exports >= 4 && trees.iter().all(|t| *t == trees[0]), || "outputs differ between runs".into())?;
    Ok(format!("3 runs (jobs 1, 4, 4), {} identical files", trees[0].len()))
}

fn peak_rss_mib() -> Option<f64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kib: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib / 1024.0)
}

fn scale() -> Outcome {
    let dataset = synthetic_dataset(&SynthParams {
        individuals: 100_000,
        groups: 50_000,
        memberships: 300_000,
        communities: 5_000,
        crossover: 0.02,
        seed: 16,
        ..Default::default()
    });
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    fs::write(dir.join("schema.csv"), dataset.schema.to_csv()).map_err(|e| e.to_string())?;
    fs::write(dir.join("individuals.csv"), write_individuals(&dataset.schema, &dataset.individuals)).map_err(|e| e.to_string())?;
    fs::write(dir.join("groups.csv"), write_groups(&dataset.schema, &dataset.groups)).map_err(|e| e.to_string())?;
    fs::write(dir.join("membership.csv"), write_membership(&dataset.membership)).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        schema: Some(dir.join("schema.csv")),
        individuals: Some(dir.join("individuals.csv")),
        groups: Some(dir.join("groups.csv")),
        membership: Some(dir.join("membership.csv")),
        out: dir.join("out"),
        jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..Default::default()
    };
    let start = Instant::now();
    let report = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let cells = match &report.outcomes[..] {
        [one] => one.result.as_ref().map_err(|e| e.to_string())?.to_owned(),
        _ => return Err("expected a single cube".into()),
    };
    within(elapsed, 120)?;
    let rss = peak_rss_mib();
    if let Some(mib) = rss {
        ensure(mib < 4096.0, || format!("peak memory {mib:.0} MiB"))?;
    }
    Ok(format!(
        "{cells} cells in {:.1}s, peak RSS {}",
        elapsed.as_secs_f64(),
        rss.map_or("unknown".into(), |m| format!("{m:.0} MiB"))
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("index correctness", index_correctness),
        ("dissimilarity spot value", dissimilarity_spot),
        ("miner oracle", miner_oracle),
        ("cube oracle", cube_oracle),
        ("projection oracle", projection_oracle),
        ("clustering", clustering),
        ("determinism", determinism),
        ("scale smoke test", scale),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = panic::catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
