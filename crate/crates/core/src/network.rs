//! Process-network graphs: nodes, edges, and the directed connectivity
//! relation between them, plus generators for the standard families.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("duplicate identifier `{0}`")]
    Duplicate(String),
    #[error("duplicate connection ({0}, {1})")]
    DuplicateConnection(String, String),
    #[error("connection ({0}, {1}) must join a node and an edge")]
    BadConnection(String, String),
    #[error("invalid size: {0}")]
    InvalidSize(String),
}

/// A connection in `C`: either a node writing an edge or an edge read by a
/// node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Connection {
    /// `(node, edge)`: the node may write the edge.
    Writes { node: usize, edge: usize },
    /// `(edge, node)`: the node may read the edge.
    Reads { edge: usize, node: usize },
}

/// The edges around one node, split by access direction. Lists are in edge
/// declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub node: usize,
    pub read_edges: Vec<usize>,
    pub write_edges: Vec<usize>,
}

impl Neighborhood {
    /// All edges connected to the node, in declaration order.
    pub fn edges(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .read_edges
            .iter()
            .chain(self.write_edges.iter())
            .copied()
            .collect();
        set.into_iter().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.read_edges.is_empty() && self.write_edges.is_empty()
    }
}

/// The graph `(N, E, C)`. Immutable once built; identifiers are opaque
/// strings ordered by declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    nodes: Vec<String>,
    edges: Vec<String>,
    connections: Vec<Connection>,
    node_index: HashMap<String, usize>,
    edge_index: HashMap<String, usize>,
    neighborhoods: Vec<Neighborhood>,
    endpoints: Vec<Vec<usize>>,
}

/// Serialized form: connections are `[from, to]` pairs of identifiers.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct NetworkDoc {
    pub nodes: Vec<String>,
    pub edges: Vec<String>,
    pub connections: Vec<(String, String)>,
}

impl NetworkGraph {
    pub fn new(
        nodes: Vec<String>,
        edges: Vec<String>,
        connections: Vec<(String, String)>,
    ) -> Result<Self, NetworkError> {
        let mut node_index = HashMap::new();
        let mut edge_index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.clone(), i).is_some() {
                return Err(NetworkError::Duplicate(n.clone()));
            }
        }
        for (i, e) in edges.iter().enumerate() {
            if node_index.contains_key(e) || edge_index.insert(e.clone(), i).is_some() {
                return Err(NetworkError::Duplicate(e.clone()));
            }
        }
        let mut seen = HashSet::new();
        let mut conns = Vec::with_capacity(connections.len());
        for (a, b) in connections {
            let c = match (
                node_index.get(&a),
                edge_index.get(&b),
                edge_index.get(&a),
                node_index.get(&b),
            ) {
                (Some(&node), Some(&edge), _, _) => Connection::Writes { node, edge },
                (_, _, Some(&edge), Some(&node)) => Connection::Reads { edge, node },
                _ => {
                    if !node_index.contains_key(&a) && !edge_index.contains_key(&a) {
                        return Err(unknown(&a));
                    }
                    if !node_index.contains_key(&b) && !edge_index.contains_key(&b) {
                        return Err(unknown(&b));
                    }
                    return Err(NetworkError::BadConnection(a, b));
                }
            };
            if !seen.insert(c) {
                return Err(NetworkError::DuplicateConnection(a, b));
            }
            conns.push(c);
        }
        let mut neighborhoods: Vec<Neighborhood> = (0..nodes.len())
            .map(|node| Neighborhood {
                node,
                read_edges: Vec::new(),
                write_edges: Vec::new(),
            })
            .collect();
        for c in &conns {
            match *c {
                Connection::Writes { node, edge } => neighborhoods[node].write_edges.push(edge),
                Connection::Reads { edge, node } => neighborhoods[node].read_edges.push(edge),
            }
        }
        let mut endpoints = vec![Vec::new(); edges.len()];
        for nb in &mut neighborhoods {
            nb.read_edges.sort_unstable();
            nb.write_edges.sort_unstable();
            for e in nb.edges() {
                endpoints[e].push(nb.node);
            }
        }
        Ok(Self {
            nodes,
            edges,
            connections: conns,
            node_index,
            edge_index,
            neighborhoods,
            endpoints,
        })
    }

    pub fn from_doc(doc: NetworkDoc) -> Result<Self, NetworkError> {
        Self::new(doc.nodes, doc.edges, doc.connections)
    }

    pub fn to_doc(&self) -> NetworkDoc {
        NetworkDoc {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            connections: self
                .connections
                .iter()
                .map(|c| match *c {
                    Connection::Writes { node, edge } => {
                        (self.nodes[node].clone(), self.edges[edge].clone())
                    }
                    Connection::Reads { edge, node } => {
                        (self.edges[edge].clone(), self.nodes[node].clone())
                    }
                })
                .collect(),
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &[String] {
        &self.edges
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_id(&self, name: &str) -> Result<usize, NetworkError> {
        self.node_index
            .get(name)
            .copied()
            .ok_or_else(|| NetworkError::UnknownNode(name.to_string()))
    }

    pub fn edge_id(&self, name: &str) -> Result<usize, NetworkError> {
        self.edge_index
            .get(name)
            .copied()
            .ok_or_else(|| NetworkError::UnknownEdge(name.to_string()))
    }

    pub fn node_name(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    pub fn edge_name(&self, edge: usize) -> &str {
        &self.edges[edge]
    }

    pub fn neighborhood_of(&self, node: usize) -> &Neighborhood {
        &self.neighborhoods[node]
    }

    pub fn neighborhood(&self, node: &str) -> Result<&Neighborhood, NetworkError> {
        Ok(self.neighborhood_of(self.node_id(node)?))
    }

    pub fn reads(&self, node: usize, edge: usize) -> bool {
        self.neighborhoods[node].read_edges.binary_search(&edge).is_ok()
    }

    pub fn writes(&self, node: usize, edge: usize) -> bool {
        self.neighborhoods[node].write_edges.binary_search(&edge).is_ok()
    }

    pub fn in_neighborhood(&self, node: usize, edge: usize) -> bool {
        self.reads(node, edge) || self.writes(node, edge)
    }

    /// Nodes connected to `edge` in either direction, in node order.
    pub fn endpoints(&self, edge: usize) -> Vec<usize> {
        self.endpoints[edge].clone()
    }

    /// `m` points-to `n`: `m` writes some edge in the neighborhood of `n`.
    pub fn points_to_ix(&self, m: usize, n: usize) -> bool {
        let nb = &self.neighborhoods[n];
        self.neighborhoods[m]
            .write_edges
            .iter()
            .any(|e| nb.read_edges.binary_search(e).is_ok() || nb.write_edges.binary_search(e).is_ok())
    }

    pub fn points_to(&self, m: &str, n: &str) -> Result<bool, NetworkError> {
        Ok(self.points_to_ix(self.node_id(m)?, self.node_id(n)?))
    }

    /// The two neighborhoods share an edge.
    pub fn adjacent_ix(&self, m: usize, n: usize) -> bool {
        let a = self.neighborhoods[m].edges();
        let b = self.neighborhoods[n].edges();
        a.iter().any(|e| b.binary_search(e).is_ok())
    }

    pub fn adjacent(&self, m: &str, n: &str) -> Result<bool, NetworkError> {
        Ok(self.adjacent_ix(self.node_id(m)?, self.node_id(n)?))
    }

    /// Edges common to both neighborhoods, in declaration order.
    pub fn common_edges(&self, m: usize, n: usize) -> Vec<usize> {
        let b = self.neighborhoods[n].edges();
        self.neighborhoods[m]
            .edges()
            .into_iter()
            .filter(|e| b.binary_search(e).is_ok())
            .collect()
    }

    /// Returns a copy with `count` extra unconnected nodes appended.
    pub fn with_isolated_nodes(&self, count: usize) -> Result<Self, NetworkError> {
        let mut doc = self.to_doc();
        let mut next = doc.nodes.len();
        for _ in 0..count {
            while doc.nodes.iter().chain(doc.edges.iter()).any(|s| *s == format!("n{next}")) {
                next += 1;
            }
            doc.nodes.push(format!("n{next}"));
            next += 1;
        }
        Self::from_doc(doc)
    }
}

fn unknown(id: &str) -> NetworkError {
    NetworkError::UnknownNode(id.to_string())
}

/// Built-in network families. All generated connectivity is bidirectional.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Ring { size: usize },
    Star { leaves: usize },
    Torus { rows: usize, cols: usize },
    Line { size: usize },
    /// Havel-Hakimi realization of a degree sequence; zero entries give
    /// isolated nodes.
    DegreeSequence { degrees: Vec<usize> },
}

struct Builder {
    nodes: Vec<String>,
    edges: Vec<String>,
    connections: Vec<(String, String)>,
}

impl Builder {
    fn with_nodes(count: usize) -> Self {
        Self {
            nodes: (0..count).map(|i| format!("n{i}")).collect(),
            edges: Vec::new(),
            connections: Vec::new(),
        }
    }

    fn link(&mut self, name: String, a: usize, b: usize) {
        for n in [a, b] {
            let node = self.nodes[n].clone();
            self.connections.push((node.clone(), name.clone()));
            self.connections.push((name.clone(), node));
        }
        self.edges.push(name);
    }

    fn build(self) -> Result<NetworkGraph, NetworkError> {
        NetworkGraph::new(self.nodes, self.edges, self.connections)
    }
}

/// Builds a member of a network family. Deterministic in its parameters.
pub fn generate(family: &Family) -> Result<NetworkGraph, NetworkError> {
    match family {
        Family::Ring { size } => {
            if *size < 2 {
                return Err(NetworkError::InvalidSize(format!("ring needs at least 2 nodes, got {size}")));
            }
            let mut b = Builder::with_nodes(*size);
            for i in 0..*size {
                let j = (i + 1) % size;
                b.link(format!("f{i}_{j}"), i, j);
            }
            b.build()
        }
        Family::Star { leaves } => {
            if *leaves < 1 {
                return Err(NetworkError::InvalidSize("star needs at least 1 leaf".into()));
            }
            let mut b = Builder::with_nodes(leaves + 1);
            for leaf in 1..=*leaves {
                b.link(format!("f0_{leaf}"), 0, leaf);
            }
            b.build()
        }
        Family::Torus { rows, cols } => {
            if *rows < 2 || *cols < 2 {
                return Err(NetworkError::InvalidSize(format!(
                    "torus needs at least 2x2, got {rows}x{cols}"
                )));
            }
            let mut b = Builder::with_nodes(rows * cols);
            for r in 0..*rows {
                for c in 0..*cols {
                    let here = r * cols + c;
                    let right = r * cols + (c + 1) % cols;
                    b.link(format!("h{here}_{right}"), here, right);
                }
            }
            for r in 0..*rows {
                for c in 0..*cols {
                    let here = r * cols + c;
                    let down = ((r + 1) % rows) * cols + c;
                    b.link(format!("v{here}_{down}"), here, down);
                }
            }
            b.build()
        }
        Family::Line { size } => {
            if *size < 1 {
                return Err(NetworkError::InvalidSize("line needs at least 1 node".into()));
            }
            let mut b = Builder::with_nodes(*size);
            for i in 1..*size {
                b.link(format!("f{}_{i}", i - 1), i - 1, i);
            }
            b.build()
        }
        Family::DegreeSequence { degrees } => {
            if degrees.is_empty() {
                return Err(NetworkError::InvalidSize("empty degree sequence".into()));
            }
            let mut b = Builder::with_nodes(degrees.len());
            let mut residual: Vec<(usize, usize)> =
                degrees.iter().copied().enumerate().map(|(i, d)| (d, i)).collect();
            loop {
                // Highest residual degree first, ties broken by node order.
                residual.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                let (d, v) = residual[0];
                if d == 0 {
                    break;
                }
                if d >= residual.len() || residual[d].0 == 0 {
                    return Err(NetworkError::InvalidSize(format!(
                        "degree sequence {degrees:?} is not graphical"
                    )));
                }
                residual[0].0 = 0;
                for k in 1..=d {
                    residual[k].0 -= 1;
                    let u = residual[k].1;
                    let (a, c) = if v < u { (v, u) } else { (u, v) };
                    b.link(format!("e{a}_{c}"), a, c);
                }
            }
            b.build()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_neighborhoods_are_bidirectional() {
        let g = generate(&Family::Ring { size: 3 }).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.connections().len(), 12);
        let nb = g.neighborhood("n1").unwrap();
        let names: Vec<&str> = nb.edges().iter().map(|&e| g.edge_name(e)).collect();
        assert_eq!(names, ["f0_1", "f1_2"]);
        assert_eq!(nb.read_edges, nb.write_edges);
    }

    #[test]
    fn star_leaf_sees_only_hub_edge() {
        let g = generate(&Family::Star { leaves: 4 }).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (5, 4));
        let nb = g.neighborhood("n3").unwrap();
        assert_eq!(nb.edges(), vec![g.edge_id("f0_3").unwrap()]);
        assert!(g.adjacent("n0", "n2").unwrap());
        assert!(!g.adjacent("n1", "n2").unwrap());
    }

    #[test]
    fn torus_counts() {
        let g = generate(&Family::Torus { rows: 2, cols: 2 }).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 8));
        for n in 0..4 {
            assert_eq!(g.neighborhood_of(n).edges().len(), 4);
        }
    }

    #[test]
    fn ring_of_two_keeps_two_edges() {
        let g = generate(&Family::Ring { size: 2 }).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.neighborhood_of(0).edges().len(), 2);
        assert!(generate(&Family::Ring { size: 1 }).is_err());
    }

    #[test]
    fn isolated_node_has_empty_neighborhood() {
        let g = generate(&Family::Line { size: 1 }).unwrap();
        assert!(g.neighborhood("n0").unwrap().is_empty());
        let g = generate(&Family::Line { size: 3 }).unwrap().with_isolated_nodes(1).unwrap();
        assert_eq!(g.nodes().last().unwrap(), "n3");
        assert!(g.neighborhood("n3").unwrap().is_empty());
        assert!(!g.adjacent("n3", "n0").unwrap());
    }

    #[test]
    fn points_to_on_ring() {
        let g = generate(&Family::Ring { size: 4 }).unwrap();
        assert!(g.points_to("n0", "n1").unwrap());
        assert!(!g.points_to("n0", "n2").unwrap());
        // Writing an edge of its own neighborhood makes a node point to itself.
        assert!(g.points_to("n2", "n2").unwrap());
        assert!(g.points_to("nope", "n1").is_err());
    }

    #[test]
    fn directed_points_to() {
        let g = NetworkGraph::new(
            vec!["a".into(), "b".into()],
            vec!["e".into()],
            vec![("a".into(), "e".into()), ("e".into(), "b".into())],
        )
        .unwrap();
        assert!(g.points_to("a", "b").unwrap());
        assert!(!g.points_to("b", "a").unwrap());
        assert!(g.adjacent("a", "b").unwrap());
        assert!(g.adjacent("b", "a").unwrap());
        assert!(!g.points_to("b", "b").unwrap());
    }

    #[test]
    fn rejects_bad_connections() {
        let dup = NetworkGraph::new(
            vec!["a".into()],
            vec!["e".into()],
            vec![("a".into(), "e".into()), ("a".into(), "e".into())],
        );
        assert!(matches!(dup, Err(NetworkError::DuplicateConnection(..))));
        let bad = NetworkGraph::new(vec!["a".into(), "b".into()], vec![], vec![("a".into(), "b".into())]);
        assert!(matches!(bad, Err(NetworkError::BadConnection(..))));
        let missing = NetworkGraph::new(vec!["a".into()], vec![], vec![("a".into(), "x".into())]);
        assert!(missing.is_err());
    }

    #[test]
    fn degree_sequence_realization() {
        let g = generate(&Family::DegreeSequence { degrees: vec![2, 2, 2, 0] }).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.neighborhood("n3").unwrap().is_empty());
        for n in 0..3 {
            assert_eq!(g.neighborhood_of(n).edges().len(), 2);
        }
        assert!(generate(&Family::DegreeSequence { degrees: vec![3, 1] }).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&Family::Torus { rows: 3, cols: 2 }).unwrap();
        let b = generate(&Family::Torus { rows: 3, cols: 2 }).unwrap();
        assert_eq!(
            serde_json::to_string(&a.to_doc()).unwrap(),
            serde_json::to_string(&b.to_doc()).unwrap()
        );
    }
}
