//! One-mode projection of the individual/group affiliation graph.

use std::collections::{HashMap, HashSet};
use std::io::Read;

use log::warn;
use thiserror::Error;

use crate::schema::{MembershipEdge, SnapshotDate};

/// Which side of the bipartite graph becomes the node set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionSide {
    /// Groups connected by shared individuals.
    #[default]
    Groups,
    /// Individuals connected by shared groups.
    Individuals,
}

impl ProjectionSide {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionSide::Groups => "groups",
            ProjectionSide::Individuals => "individuals",
        }
    }
}

impl std::str::FromStr for ProjectionSide {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "groups" => Ok(ProjectionSide::Groups),
            "individuals" => Ok(ProjectionSide::Individuals),
            other => Err(format!("unknown projection side `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectionOptions {
    pub side: ProjectionSide,
    /// Individuals (or groups, when projecting individuals) generating more
    /// pairs than this are skipped. `None` keeps everything.
    pub max_pairs_per_hub: Option<u64>,
    pub warn_pairs: u64,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            side: ProjectionSide::Groups,
            max_pairs_per_hub: None,
            warn_pairs: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeightedEdge {
    pub a: usize,
    pub b: usize,
    pub weight: u64,
}

/// Weighted unipartite graph. Node ids are sorted lexicographically and edge
/// endpoints refer to positions in that order, with `a < b`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProjectedGraph {
    nodes: Vec<String>,
    edges: Vec<WeightedEdge>,
    isolated: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: self-loop on `{node}`")]
    SelfLoop { line: u64, node: String },
    #[error("line {line}: duplicate edge ({a}, {b})")]
    DuplicateEdge { line: u64, a: String, b: String },
    #[error("line {line}: weight must be a positive integer, got `{value}`")]
    BadWeight { line: u64, value: String },
    #[error("node `{0}` is listed as isolated but has edges")]
    IsolatedWithEdges(String),
}

impl ProjectedGraph {
    /// Builds a graph from explicit parts; nodes are deduplicated and sorted,
    /// and every edge endpoint is added to the node set.
    pub fn from_parts<S: AsRef<str>>(
        nodes: impl IntoIterator<Item = S>,
        edges: impl IntoIterator<Item = (S, S, u64)>,
    ) -> Result<Self, GraphError> {
        let edges: Vec<(S, S, u64)> = edges.into_iter().collect();
        let mut all: Vec<String> = nodes.into_iter().map(|s| s.as_ref().to_string()).collect();
        for (a, b, _) in &edges {
            all.push(a.as_ref().to_string());
            all.push(b.as_ref().to_string());
        }
        all.sort();
        all.dedup();
        let index: HashMap<&str, usize> = all.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut out = Vec::with_capacity(edges.len());
        let mut seen = HashSet::new();
        for (line, (a, b, w)) in edges.iter().enumerate() {
            let line = line as u64 + 2;
            let (ia, ib) = (index[a.as_ref()], index[b.as_ref()]);
            if ia == ib {
                return Err(GraphError::SelfLoop {
                    line,
                    node: a.as_ref().to_string(),
                });
            }
            if *w == 0 {
                return Err(GraphError::BadWeight {
                    line,
                    value: "0".into(),
                });
            }
            let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
            if !seen.insert((lo, hi)) {
                return Err(GraphError::DuplicateEdge {
                    line,
                    a: all[lo].clone(),
                    b: all[hi].clone(),
                });
            }
            out.push(WeightedEdge {
                a: lo,
                b: hi,
                weight: *w,
            });
        }
        Ok(Self::assemble(all, out))
    }

    fn assemble(nodes: Vec<String>, mut edges: Vec<WeightedEdge>) -> Self {
        edges.sort_unstable();
        let mut has_edge = vec![false; nodes.len()];
        for e in &edges {
            has_edge[e.a] = true;
            has_edge[e.b] = true;
        }
        let isolated = (0..nodes.len()).filter(|&i| !has_edge[i]).collect();
        ProjectedGraph {
            nodes,
            edges,
            isolated,
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[WeightedEdge] {
        &self.edges
    }

    pub fn isolated(&self) -> impl Iterator<Item = &str> {
        self.isolated.iter().map(|&i| self.nodes[i].as_str())
    }

    pub fn isolated_indices(&self) -> &[usize] {
        &self.isolated
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).ok()
    }

    /// Edge weight between two node ids, if connected.
    pub fn weight(&self, a: &str, b: &str) -> Option<u64> {
        let (ia, ib) = (self.node_index(a)?, self.node_index(b)?);
        let (lo, hi) = if ia < ib { (ia, ib) } else { (ib, ia) };
        self.edges
            .binary_search_by(|e| (e.a, e.b).cmp(&(lo, hi)))
            .ok()
            .map(|i| self.edges[i].weight)
    }

    /// Edge list CSV `groupA,groupB,weight`, lexicographically sorted.
    pub fn edges_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["groupA", "groupB", "weight"]).expect("in-memory write");
        for e in &self.edges {
            w.write_record([&self.nodes[e.a], &self.nodes[e.b], &e.weight.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// One-column CSV of zero-degree nodes.
    pub fn isolated_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["groupID"]).expect("in-memory write");
        for id in self.isolated() {
            w.write_record([id]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Reads back the pair of files written by [`edges_csv`](Self::edges_csv)
    /// and [`isolated_csv`](Self::isolated_csv).
    pub fn from_csv<R1: Read, R2: Read>(edges: R1, isolated: R2) -> Result<Self, GraphError> {
        let malformed = |e: csv::Error| GraphError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let mut rdr = csv::Reader::from_reader(edges);
        let header = rdr.headers().map_err(malformed)?.clone();
        if header.iter().ne(["groupA", "groupB", "weight"]) {
            return Err(GraphError::Malformed {
                line: 1,
                message: "expected header `groupA,groupB,weight`".into(),
            });
        }
        let mut triples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(malformed)?;
            let line = rec.position().map_or(0, |p| p.line());
            let weight: u64 = rec[2].parse().map_err(|_| GraphError::BadWeight {
                line,
                value: rec[2].to_string(),
            })?;
            if rec[0].is_empty() || rec[1].is_empty() {
                return Err(GraphError::Malformed {
                    line,
                    message: "empty node id".into(),
                });
            }
            triples.push((rec[0].to_string(), rec[1].to_string(), weight));
        }
        let mut rdr = csv::Reader::from_reader(isolated);
        let header = rdr.headers().map_err(malformed)?.clone();
        if header.iter().ne(["groupID"]) {
            return Err(GraphError::Malformed {
                line: 1,
                message: "expected header `groupID`".into(),
            });
        }
        let mut lonely = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(malformed)?;
            if rec[0].is_empty() {
                return Err(GraphError::Malformed {
                    line: rec.position().map_or(0, |p| p.line()),
                    message: "empty node id".into(),
                });
            }
            lonely.push(rec[0].to_string());
        }
        let endpoints: HashSet<&str> = triples
            .iter()
            .flat_map(|(a, b, _)| [a.as_str(), b.as_str()])
            .collect();
        if let Some(bad) = lonely.iter().find(|n| endpoints.contains(n.as_str())) {
            return Err(GraphError::IsolatedWithEdges(bad.clone()));
        }
        Self::from_parts(lonely, triples)
    }
}

/// Projects onto groups: two groups are joined when at least one individual
/// is active in both at `date`; the weight counts those individuals.
pub fn project<'a>(
    membership: &'a [MembershipEdge],
    all_groups: impl IntoIterator<Item = &'a str>,
    date: Option<SnapshotDate>,
) -> ProjectedGraph {
    project_with(membership, all_groups, date, &ProjectionOptions::default())
}

pub fn project_with<'a>(
    membership: &'a [MembershipEdge],
    all_nodes: impl IntoIterator<Item = &'a str>,
    date: Option<SnapshotDate>,
    options: &ProjectionOptions,
) -> ProjectedGraph {
    let active = membership.iter().filter(|e| e.active_at_opt(date));
    let side = |e: &'a MembershipEdge| -> (&'a str, &'a str) {
        match options.side {
            ProjectionSide::Groups => (e.individual.as_str(), e.group.as_str()),
            ProjectionSide::Individuals => (e.group.as_str(), e.individual.as_str()),
        }
    };
    // hub: the side being projected away; node: the side that remains
    let pairs: Vec<(&str, &str)> = active.map(side).collect();

    let mut nodes: Vec<String> = all_nodes.into_iter().map(str::to_string).collect();
    nodes.extend(pairs.iter().map(|(_, n)| n.to_string()));
    nodes.sort_unstable();
    nodes.dedup();
    let index: HashMap<&str, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();

    let mut by_hub: HashMap<&str, Vec<u32>> = HashMap::new();
    for (hub, node) in &pairs {
        by_hub.entry(hub).or_default().push(index[node]);
    }

    let mut counts: HashMap<(u32, u32), u64> = HashMap::new();
    for (hub, mut members) in by_hub {
        members.sort_unstable();
        members.dedup();
        let k = members.len() as u64;
        let pair_count = k * k.saturating_sub(1) / 2;
        if let Some(cap) = options.max_pairs_per_hub {
            if pair_count > cap {
                warn!("skipping `{hub}`: {pair_count} pairs exceeds the cap of {cap}");
                continue;
            }
        }
        if pair_count > options.warn_pairs {
            warn!("`{hub}` generates {pair_count} projected pairs");
        }
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                *counts.entry((a, b)).or_insert(0) += 1;
            }
        }
    }

    let edges = counts
        .into_iter()
        .map(|((a, b), weight)| WeightedEdge {
            a: a as usize,
            b: b as usize,
            weight,
        })
        .collect();
    ProjectedGraph::assemble(nodes, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DegreeStats {
    pub nodes: usize,
    pub edges: usize,
    pub isolated: usize,
    pub max_weight: u64,
    pub mean_weight: f64,
}

pub fn degree_stats(graph: &ProjectedGraph) -> DegreeStats {
    let total: u64 = graph.edges.iter().map(|e| e.weight).sum();
    DegreeStats {
        nodes: graph.nodes.len(),
        edges: graph.edges.len(),
        isolated: graph.isolated.len(),
        max_weight: graph.edges.iter().map(|e| e.weight).max().unwrap_or(0),
        mean_weight: if graph.edges.is_empty() {
            0.0
        } else {
            total as f64 / graph.edges.len() as f64
        },
    }
}
