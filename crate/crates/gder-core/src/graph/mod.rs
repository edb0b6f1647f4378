//! Property-graph data model and file ingestion.
//!
//! A [`PropertyGraph`] is a directed labeled multigraph. Nodes carry an
//! ordered attribute list and an optional real-world entity id (`eid`) used as
//! ground truth. Edges are stored directed, but neighborhood queries and
//! random walks traverse them in both directions.
//!
//! Graphs are immutable after load and safe for unsynchronized concurrent
//! reads.

pub mod convert;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Node identifier. Ordering is "natural": digit runs compare numerically, so
/// `v9 < v10`. Source datasets mix integer and prefixed ids, and the natural
/// order keeps reports and canonical pairs readable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl Ord for NodeId {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0)
    }
}

impl PartialOrd for NodeId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compare strings run by run, treating maximal digit runs as numbers.
/// Ties (e.g. "v01" vs "v1") fall back to plain string order so the relation
/// stays total.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    let ab = a.as_bytes();
    let bb = b.as_bytes();
    let (mut i, mut j) = (0, 0);
    while i < ab.len() && j < bb.len() {
        let ca = ab[i];
        let cb = bb[j];
        if ca.is_ascii_digit() && cb.is_ascii_digit() {
            let si = i;
            let sj = j;
            while i < ab.len() && ab[i].is_ascii_digit() {
                i += 1;
            }
            while j < bb.len() && bb[j].is_ascii_digit() {
                j += 1;
            }
            let na = a[si..i].trim_start_matches('0');
            let nb = b[sj..j].trim_start_matches('0');
            let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
            if ord != Ordering::Equal {
                return ord;
            }
        } else {
            let ord = ca.cmp(&cb);
            if ord != Ordering::Equal {
                return ord;
            }
            i += 1;
            j += 1;
        }
    }
    ab.len().cmp(&bb.len()).then_with(|| a.cmp(b))
}

/// Attribute value: the raw string plus a numeric interpretation cached at
/// load time. Distance functions need both views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "serde_json::Value", into = "serde_json::Value")]
pub struct AttrValue {
    pub raw: String,
    pub num: Option<f64>,
}

impl AttrValue {
    pub fn new(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let num = raw.trim().parse::<f64>().ok().filter(|x| x.is_finite());
        AttrValue { raw, num }
    }
}

impl From<serde_json::Value> for AttrValue {
    fn from(v: serde_json::Value) -> Self {
        match v {
            serde_json::Value::String(s) => AttrValue::new(s),
            serde_json::Value::Number(n) => AttrValue::new(n.to_string()),
            serde_json::Value::Bool(b) => AttrValue::new(b.to_string()),
            other => AttrValue::new(other.to_string()),
        }
    }
}

impl From<AttrValue> for serde_json::Value {
    fn from(v: AttrValue) -> Self {
        serde_json::Value::String(v.raw)
    }
}

/// Graph node: immutable id, label, optional entity id, ordered attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub eid: Option<String>,
    attrs: Vec<(String, AttrValue)>,
}

impl Node {
    pub fn new(id: impl Into<NodeId>, label: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            label: label.into(),
            eid: None,
            attrs: Vec::new(),
        }
    }

    pub fn with_eid(mut self, eid: impl Into<String>) -> Self {
        self.eid = Some(eid.into());
        self
    }

    /// Append an attribute; names must stay unique per node.
    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(
            self.attr(&name).is_none(),
            "attribute {name} already present"
        );
        self.attrs.push((name, AttrValue::new(value)));
        self
    }

    pub fn attr(&self, name: &str) -> Option<&AttrValue> {
        self.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    pub fn attrs(&self) -> &[(String, AttrValue)] {
        &self.attrs
    }

    pub fn attr_names(&self) -> impl Iterator<Item = &str> {
        self.attrs.iter().map(|(n, _)| n.as_str())
    }

    pub(crate) fn set_attr(&mut self, name: &str, value: AttrValue) {
        if let Some(slot) = self.attrs.iter_mut().find(|(n, _)| n == name) {
            slot.1 = value;
        } else {
            self.attrs.push((name.to_string(), value));
        }
    }

    pub(crate) fn remove_attr(&mut self, name: &str) {
        self.attrs.retain(|(n, _)| n != name);
    }
}

/// Directed labeled edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub label: String,
    pub dst: NodeId,
}

/// Directed property graph with per-label and adjacency indexes.
#[derive(Debug, Clone, Default)]
pub struct PropertyGraph {
    nodes: BTreeMap<NodeId, Node>,
    edges: Vec<Edge>,
    label_index: BTreeMap<String, BTreeSet<NodeId>>,
    // adjacency: node -> [(edge label, other endpoint, outgoing?)]
    adjacency: BTreeMap<NodeId, Vec<(String, NodeId, bool)>>,
}

impl PropertyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build a graph from parts, checking every invariant.
    pub fn from_parts(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let mut g = PropertyGraph::new();
        for node in nodes {
            g.insert_node(node)?;
        }
        for edge in edges {
            g.insert_edge(edge)?;
        }
        Ok(g)
    }

    pub fn insert_node(&mut self, node: Node) -> Result<()> {
        if self.nodes.contains_key(&node.id) {
            return Err(Error::DuplicateNode(node.id.to_string()));
        }
        let mut seen = BTreeSet::new();
        for (name, _) in node.attrs() {
            if !seen.insert(name.clone()) {
                return Err(Error::MalformedRecord {
                    line: 0,
                    message: format!("node {} repeats attribute {name}", node.id),
                });
            }
        }
        self.label_index
            .entry(node.label.clone())
            .or_default()
            .insert(node.id.clone());
        self.adjacency.entry(node.id.clone()).or_default();
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub fn insert_edge(&mut self, edge: Edge) -> Result<()> {
        for endpoint in [&edge.src, &edge.dst] {
            if !self.nodes.contains_key(endpoint) {
                return Err(Error::DanglingEdge {
                    src: edge.src.to_string(),
                    label: edge.label.clone(),
                    dst: edge.dst.to_string(),
                    missing: endpoint.to_string(),
                });
            }
        }
        self.adjacency
            .get_mut(&edge.src)
            .expect("endpoint checked")
            .push((edge.label.clone(), edge.dst.clone(), true));
        if edge.src != edge.dst {
            self.adjacency
                .get_mut(&edge.dst)
                .expect("endpoint checked")
                .push((edge.label.clone(), edge.src.clone(), false));
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.label_index.keys().map(|s| s.as_str())
    }

    pub fn label_of(&self, id: &NodeId) -> Option<&str> {
        self.nodes.get(id).map(|n| n.label.as_str())
    }

    /// Nodes carrying a given label, in id order.
    pub fn nodes_with_label(&self, label: &str) -> impl Iterator<Item = &NodeId> {
        self.label_index
            .get(label)
            .into_iter()
            .flat_map(|s| s.iter())
    }

    pub fn label_count(&self, label: &str) -> usize {
        self.label_index.get(label).map_or(0, |s| s.len())
    }

    /// All incident edge stubs of `v`: (edge label, other endpoint, outgoing).
    pub fn incident(&self, v: &NodeId) -> &[(String, NodeId, bool)] {
        self.adjacency.get(v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Undirected neighbors of `v` whose label matches `l` (`"*"` matches
    /// every label), deduplicated, in natural id order.
    pub fn neighbors_by_label(&self, v: &NodeId, l: &str) -> Result<Vec<NodeId>> {
        if !self.nodes.contains_key(v) {
            return Err(Error::NodeNotFound(v.to_string()));
        }
        let mut out: BTreeSet<NodeId> = BTreeSet::new();
        for (_, other, _) in self.incident(v) {
            let other_label = self.label_of(other).expect("edge endpoints exist");
            if labels_match(l, other_label) {
                out.insert(other.clone());
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Outgoing relation targets: nodes `w` with an edge `v -[rela]-> w`.
    pub fn relation_targets(&self, v: &NodeId, rela: &str) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .incident(v)
            .iter()
            .filter(|(l, _, outgoing)| *outgoing && l == rela)
            .map(|(_, w, _)| w.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// True pair set derived from shared eid values, per label.
    pub fn eid_pairs(&self) -> BTreeSet<(NodeId, NodeId)> {
        let mut by_eid: BTreeMap<(&str, &str), Vec<&NodeId>> = BTreeMap::new();
        for node in self.nodes.values() {
            if let Some(eid) = &node.eid {
                by_eid
                    .entry((node.label.as_str(), eid.as_str()))
                    .or_default()
                    .push(&node.id);
            }
        }
        let mut pairs = BTreeSet::new();
        for ids in by_eid.values() {
            for (i, a) in ids.iter().enumerate() {
                for b in &ids[i + 1..] {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    pairs.insert(((*lo).clone(), (*hi).clone()));
                }
            }
        }
        pairs
    }
}

/// Relaxed label matching: equal, or either side is the wildcard `*`.
pub fn labels_match(l: &str, l2: &str) -> bool {
    l == l2 || l == "*" || l2 == "*"
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: String,
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    eid: Option<String>,
    #[serde(default)]
    attrs: BTreeMap<String, AttrValue>,
}

/// Load a graph from JSON-lines node and edge streams.
///
/// Node lines: `{"id": str, "label": str, "eid": str?, "attrs": {name: value}}`.
/// Edge lines: `{"src": str, "label": str, "dst": str}`.
pub fn load_graph<R: BufRead, R2: BufRead>(nodes_source: R, edges_source: R2) -> Result<PropertyGraph> {
    let mut graph = PropertyGraph::new();
    for (lineno, line) in nodes_source.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedRecord {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: NodeRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let mut node = Node::new(rec.id, rec.label);
        node.eid = rec.eid;
        for (name, value) in rec.attrs {
            node.attrs.push((name, value));
        }
        graph.insert_node(node)?;
    }
    for (lineno, line) in edges_source.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedRecord {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let edge: Edge = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: lineno + 1,
            message: e.to_string(),
        })?;
        graph.insert_edge(edge)?;
    }
    Ok(graph)
}

pub fn load_graph_files(nodes_path: &Path, edges_path: &Path) -> Result<PropertyGraph> {
    let nodes = std::fs::File::open(nodes_path)
        .map_err(|e| Error::io(nodes_path.display().to_string(), e))?;
    let edges = std::fs::File::open(edges_path)
        .map_err(|e| Error::io(edges_path.display().to_string(), e))?;
    load_graph(std::io::BufReader::new(nodes), std::io::BufReader::new(edges))
}

/// Serialize a graph back to the JSON-lines formats, nodes in id order and
/// edges sorted, so `load_graph . save_graph` is the identity on graphs.
pub fn save_graph<W: Write, W2: Write>(
    graph: &PropertyGraph,
    mut nodes_sink: W,
    mut edges_sink: W2,
) -> Result<()> {
    for node in graph.nodes() {
        let rec = NodeRecord {
            id: node.id.to_string(),
            label: node.label.clone(),
            eid: node.eid.clone(),
            attrs: node
                .attrs()
                .iter()
                .map(|(n, v)| (n.clone(), v.clone()))
                .collect(),
        };
        let line = serde_json::to_string(&rec)?;
        writeln!(nodes_sink, "{line}").map_err(|e| Error::io("nodes sink", e))?;
    }
    let mut edges = graph.edges().to_vec();
    edges.sort();
    for edge in edges {
        let line = serde_json::to_string(&edge)?;
        writeln!(edges_sink, "{line}").map_err(|e| Error::io("edges sink", e))?;
    }
    Ok(())
}

pub fn save_graph_files(graph: &PropertyGraph, nodes_path: &Path, edges_path: &Path) -> Result<()> {
    let nodes = std::fs::File::create(nodes_path)
        .map_err(|e| Error::io(nodes_path.display().to_string(), e))?;
    let edges = std::fs::File::create(edges_path)
        .map_err(|e| Error::io(edges_path.display().to_string(), e))?;
    save_graph(graph, std::io::BufWriter::new(nodes), std::io::BufWriter::new(edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn natural_order_sorts_digit_runs_numerically() {
        let mut ids: Vec<NodeId> = ["v10", "v2", "v1", "v11", "a", "v2x"]
            .iter()
            .map(|s| NodeId::from(*s))
            .collect();
        ids.sort();
        let sorted: Vec<&str> = ids.iter().map(|i| i.as_str()).collect();
        assert_eq!(sorted, ["a", "v1", "v2", "v2x", "v10", "v11"]);
    }

    #[test]
    fn toy_graph_shape() {
        let g = fixtures::toy_graph();
        assert_eq!(g.node_count(), 12);
        assert_eq!(g.edge_count(), 12);
        assert_eq!(g.labels().count(), 4);
    }

    #[test]
    fn neighbors_by_label_on_shared_ip() {
        let g = fixtures::toy_graph();
        let users = g
            .neighbors_by_label(&NodeId::from("v7"), "user")
            .unwrap();
        let ids: Vec<&str> = users.iter().map(|i| i.as_str()).collect();
        assert_eq!(ids, ["v3", "v4", "v10", "v11"]);
    }

    #[test]
    fn wildcard_neighbors_superset_of_labelled() {
        let g = fixtures::toy_graph();
        for node in g.nodes() {
            let all = g.neighbors_by_label(&node.id, "*").unwrap();
            for label in ["user", "video", "genre", "ipaddress"] {
                let some = g.neighbors_by_label(&node.id, label).unwrap();
                assert!(some.iter().all(|n| all.contains(n)));
            }
        }
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let mut g = PropertyGraph::new();
        g.insert_node(Node::new("lonely", "user")).unwrap();
        assert!(g
            .neighbors_by_label(&NodeId::from("lonely"), "*")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unknown_node_neighbors_errors() {
        let g = fixtures::toy_graph();
        let err = g.neighbors_by_label(&NodeId::from("v99"), "*").unwrap_err();
        assert!(matches!(err, Error::NodeNotFound(_)));
    }

    #[test]
    fn empty_sources_give_empty_graph() {
        let g = load_graph(&b""[..], &b""[..]).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn dangling_edge_is_rejected_by_name() {
        let nodes = br#"{"id":"v1","label":"user"}"#;
        let edges = br#"{"src":"v1","label":"knows","dst":"v99"}"#;
        let err = load_graph(&nodes[..], &edges[..]).unwrap_err();
        match err {
            Error::DanglingEdge { missing, .. } => assert_eq!(missing, "v99"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn duplicate_node_id_is_rejected_by_name() {
        let nodes = br#"{"id":"v1","label":"user"}
{"id":"v1","label":"user"}"#;
        let err = load_graph(&nodes[..], &b""[..]).unwrap_err();
        match err {
            Error::DuplicateNode(id) => assert_eq!(id, "v1"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn malformed_record_names_line() {
        let nodes = br#"{"id":"v1","label":"user"}
not json"#;
        let err = load_graph(&nodes[..], &b""[..]).unwrap_err();
        match err {
            Error::MalformedRecord { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn save_load_round_trip_is_identity() {
        let g = fixtures::toy_graph();
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        save_graph(&g, &mut nodes, &mut edges).unwrap();
        let g2 = load_graph(&nodes[..], &edges[..]).unwrap();
        assert_eq!(g.node_count(), g2.node_count());
        assert_eq!(g.edge_count(), g2.edge_count());
        for node in g.nodes() {
            let other = g2.node(&node.id).expect("node survived round trip");
            assert_eq!(node.label, other.label);
            assert_eq!(node.eid, other.eid);
            let a: BTreeMap<_, _> = node.attrs().iter().cloned().collect();
            let b: BTreeMap<_, _> = other.attrs().iter().cloned().collect();
            assert_eq!(a, b);
        }
        let mut e1 = g.edges().to_vec();
        let mut e2 = g2.edges().to_vec();
        e1.sort();
        e2.sort();
        assert_eq!(e1, e2);
    }

    #[test]
    fn numeric_attr_values_cache_parse() {
        let v = AttrValue::new("42.5");
        assert_eq!(v.num, Some(42.5));
        let v = AttrValue::new("abc");
        assert_eq!(v.num, None);
    }
}
