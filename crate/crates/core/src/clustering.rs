//! Partitioning of projected-graph nodes into organizational units.

use std::collections::{HashSet, VecDeque};
use std::io::Read;

use thiserror::Error;

use crate::projection::{ProjectedGraph, WeightedEdge};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusteringMethod {
    /// Connected components.
    Components,
    /// Connected components after dropping light edges inside the giant component.
    ThresholdComponents { min_weight: u64 },
    /// Assignment read from a `nodeUnit` file.
    Given,
}

impl ClusteringMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ClusteringMethod::Components => "cc",
            ClusteringMethod::ThresholdComponents { .. } => "threshold",
            ClusteringMethod::Given => "given",
        }
    }

    pub fn min_weight(&self) -> Option<u64> {
        match self {
            ClusteringMethod::ThresholdComponents { min_weight } => Some(*min_weight),
            _ => None,
        }
    }
}

/// Total map from node id to a dense unit id. Units are numbered in order of
/// their lexicographically smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitAssignment {
    nodes: Vec<String>,
    units: Vec<u32>,
    unit_count: u32,
    method: ClusteringMethod,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignmentError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: node `{node}` assigned twice")]
    DuplicateNode { line: u64, node: String },
}

impl UnitAssignment {
    /// Canonicalizes arbitrary labels: nodes are sorted and units renumbered
    /// by first appearance in that order.
    pub fn from_labels<S: AsRef<str>, L: Eq + std::hash::Hash>(
        pairs: impl IntoIterator<Item = (S, L)>,
        method: ClusteringMethod,
    ) -> Self {
        let mut pairs: Vec<(String, L)> = pairs
            .into_iter()
            .map(|(n, l)| (n.as_ref().to_string(), l))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut renumber = std::collections::HashMap::new();
        let mut nodes = Vec::with_capacity(pairs.len());
        let mut units = Vec::with_capacity(pairs.len());
        for (node, label) in pairs {
            let next = renumber.len() as u32;
            let unit = *renumber.entry(label).or_insert(next);
            nodes.push(node);
            units.push(unit);
        }
        UnitAssignment {
            nodes,
            units,
            unit_count: renumber.len() as u32,
            method,
        }
    }

    pub fn method(&self) -> ClusteringMethod {
        self.method
    }

    pub fn unit_count(&self) -> usize {
        self.unit_count as usize
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn unit_of(&self, node: &str) -> Option<u32> {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(node))
            .ok()
            .map(|i| self.units[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.nodes.iter().map(String::as_str).zip(self.units.iter().copied())
    }

    /// Units as sorted member lists, indexed by unit id.
    pub fn units(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.unit_count as usize];
        for (node, unit) in self.iter() {
            out[unit as usize].push(node);
        }
        out
    }

    /// `nodeUnit` CSV: `groupID,unitID`, sorted by node id.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["groupID", "unitID"]).expect("in-memory write");
        for (node, unit) in self.iter() {
            w.write_record([node, &unit.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Reads a `nodeUnit` file. The node column may be named `groupID` or
    /// `individualID`. Unit labels are arbitrary strings and are renumbered
    /// canonically.
    pub fn from_csv<R: Read>(input: R) -> Result<Self, AssignmentError> {
        let malformed = |e: csv::Error| AssignmentError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(malformed)?.clone();
        let node_column = header.get(0).is_some_and(|h| h == "groupID" || h == "individualID");
        if !node_column || header.len() != 2 || &header[1] != "unitID" {
            return Err(AssignmentError::Malformed {
                line: 1,
                message: "expected header `groupID,unitID` or `individualID,unitID`".into(),
            });
        }
        let mut seen = HashSet::new();
        let mut pairs = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(malformed)?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec[0].is_empty() || rec[1].is_empty() {
                return Err(AssignmentError::Malformed {
                    line,
                    message: "empty node or unit id".into(),
                });
            }
            if !seen.insert(rec[0].to_string()) {
                return Err(AssignmentError::DuplicateNode {
                    line,
                    node: rec[0].to_string(),
                });
            }
            pairs.push((rec[0].to_string(), rec[1].to_string()));
        }
        Ok(UnitAssignment::from_labels(pairs, ClusteringMethod::Given))
    }
}

/// Graph in, total assignment out.
pub trait Clustering {
    fn cluster(&self, graph: &ProjectedGraph) -> UnitAssignment;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ConnectedComponents;

impl Clustering for ConnectedComponents {
    fn cluster(&self, graph: &ProjectedGraph) -> UnitAssignment {
        connected_components(graph)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ThresholdComponents {
    pub min_weight: u64,
}

impl Clustering for ThresholdComponents {
    fn cluster(&self, graph: &ProjectedGraph) -> UnitAssignment {
        threshold_components(graph, self.min_weight)
    }
}

/// BFS labelling over nodes `0..n`. Labels follow the smallest node index in
/// each component, which is also the lexicographically smallest id.
fn bfs_labels<'e>(n: usize, edges: impl Iterator<Item = &'e WeightedEdge>) -> (Vec<u32>, u32) {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in edges {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut label = vec![u32::MAX; n];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if label[start] != u32::MAX {
            continue;
        }
        label[start] = next;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if label[w] == u32::MAX {
                    label[w] = next;
                    queue.push_back(w);
                }
            }
        }
        next += 1;
    }
    (label, next)
}

fn assignment(graph: &ProjectedGraph, labels: Vec<u32>, count: u32, method: ClusteringMethod) -> UnitAssignment {
    UnitAssignment {
        nodes: graph.nodes().to_vec(),
        units: labels,
        unit_count: count,
        method,
    }
}

pub fn connected_components(graph: &ProjectedGraph) -> UnitAssignment {
    let (labels, count) = bfs_labels(graph.nodes().len(), graph.edges().iter());
    assignment(graph, labels, count, ClusteringMethod::Components)
}

/// Two-phase clustering: find the giant component (largest node count, ties
/// to the smallest member id), drop its edges lighter than `min_weight`, then
/// recompute components over the whole graph. A single pass only.
pub fn threshold_components(graph: &ProjectedGraph, min_weight: u64) -> UnitAssignment {
    let method = ClusteringMethod::ThresholdComponents { min_weight };
    let n = graph.nodes().len();
    let (labels, count) = bfs_labels(n, graph.edges().iter());
    if count == 0 {
        return assignment(graph, labels, count, method);
    }
    let mut sizes = vec![0usize; count as usize];
    for &l in &labels {
        sizes[l as usize] += 1;
    }
    // labels are ordered by smallest member, so the first maximum wins ties
    let giant = sizes
        .iter()
        .enumerate()
        .fold(0usize, |best, (i, &s)| if s > sizes[best] { i } else { best }) as u32;
    let kept = graph
        .edges()
        .iter()
        .filter(|e| labels[e.a] != giant || e.weight >= min_weight);
    let (labels, count) = bfs_labels(n, kept);
    assignment(graph, labels, count, method)
}
