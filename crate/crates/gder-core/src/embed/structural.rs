//! Meta-path schemes and guided random walks.
//!
//! Rule scopes are turned into symmetric label paths between same-label
//! variable pairs; walks then follow a scheme's label sequence cyclically,
//! stepping uniformly over the neighbors carrying the next label, and stop
//! early when no conforming neighbor exists. Every walk draws its own RNG
//! seeded from (seed, scheme, start node, repetition), so generation is
//! deterministic and safe to parallelize.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embed::corpus::{TrainConfig, WalkCorpus};
use crate::graph::{labels_match, NodeId, PropertyGraph};
use crate::pattern::GraphPattern;

/// Symmetric label path: node labels interleaved with edge labels, first and
/// last node labels equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MetaPathScheme {
    pub node_labels: Vec<String>,
    pub edge_labels: Vec<String>,
}

impl MetaPathScheme {
    fn new(node_labels: Vec<String>, edge_labels: Vec<String>) -> Self {
        debug_assert_eq!(node_labels.len(), edge_labels.len() + 1);
        debug_assert_eq!(node_labels.first(), node_labels.last());
        MetaPathScheme {
            node_labels,
            edge_labels,
        }
    }

    /// Human-readable tag, e.g. `user-ipaddress-user`.
    pub fn tag(&self) -> String {
        self.node_labels.join("-")
    }

    /// Label expected at walk position `i` (cyclic).
    pub fn label_at(&self, i: usize) -> &str {
        let cycle = self.node_labels.len() - 1;
        if cycle == 0 {
            return &self.node_labels[0];
        }
        &self.node_labels[i % cycle]
    }

    fn canonical(mut self) -> Self {
        let mut rev_nodes = self.node_labels.clone();
        rev_nodes.reverse();
        let mut rev_edges = self.edge_labels.clone();
        rev_edges.reverse();
        if (&rev_nodes, &rev_edges) < (&self.node_labels, &self.edge_labels) {
            self.node_labels = rev_nodes;
            self.edge_labels = rev_edges;
        }
        self
    }
}

/// Derive all symmetric meta-path schemes of a scope: one per simple path
/// between a pair of distinct same-label variables, deduplicated by label
/// sequence (a path and its reverse are one scheme).
///
/// Scopes with no same-label variable pair yield nothing; lift such patterns
/// with [`GraphPattern::lift_to_pair`] first.
pub fn metapath_schemes(scope: &GraphPattern) -> Vec<MetaPathScheme> {
    let vars = scope.vars();
    let mut schemes: BTreeSet<MetaPathScheme> = BTreeSet::new();
    for (i, a) in vars.iter().enumerate() {
        for b in vars.iter().skip(i + 1) {
            if scope.var_label(a) != scope.var_label(b) {
                continue;
            }
            for path in simple_paths(scope, a, b) {
                let node_labels: Vec<String> = path
                    .nodes
                    .iter()
                    .map(|v| scope.var_label(v).expect("declared var").to_string())
                    .collect();
                schemes.insert(MetaPathScheme::new(node_labels, path.edge_labels).canonical());
            }
        }
    }
    schemes.into_iter().collect()
}

struct VarPath {
    nodes: Vec<String>,
    edge_labels: Vec<String>,
}

fn simple_paths(scope: &GraphPattern, from: &str, to: &str) -> Vec<VarPath> {
    let mut out = Vec::new();
    let mut nodes = vec![from.to_string()];
    let mut edges = Vec::new();
    let mut visited: BTreeSet<String> = BTreeSet::from([from.to_string()]);
    dfs_paths(scope, to, &mut nodes, &mut edges, &mut visited, &mut out);
    out
}

fn dfs_paths(
    scope: &GraphPattern,
    goal: &str,
    nodes: &mut Vec<String>,
    edges: &mut Vec<String>,
    visited: &mut BTreeSet<String>,
    out: &mut Vec<VarPath>,
) {
    let current = nodes.last().expect("path nonempty").clone();
    if current == goal {
        out.push(VarPath {
            nodes: nodes.clone(),
            edge_labels: edges.clone(),
        });
        return;
    }
    for (edge_label, next) in scope.pattern_neighbors(&current) {
        if visited.contains(&next) {
            continue;
        }
        visited.insert(next.clone());
        nodes.push(next.clone());
        edges.push(edge_label);
        dfs_paths(scope, goal, nodes, edges, visited, out);
        nodes.pop();
        edges.pop();
        visited.remove(&next);
    }
}

/// Per-(node, label) undirected neighbor lists, deduplicated and sorted.
struct NeighborIndex {
    by_label: BTreeMap<NodeId, BTreeMap<String, Vec<NodeId>>>,
    all: BTreeMap<NodeId, Vec<NodeId>>,
}

impl NeighborIndex {
    fn build(graph: &PropertyGraph) -> Self {
        let mut by_label: BTreeMap<NodeId, BTreeMap<String, Vec<NodeId>>> = BTreeMap::new();
        let mut all: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for node in graph.nodes() {
            let mut seen: BTreeSet<NodeId> = BTreeSet::new();
            for (_, other, _) in graph.incident(&node.id) {
                seen.insert(other.clone());
            }
            let mut grouped: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
            for other in &seen {
                let label = graph.label_of(other).expect("endpoint exists");
                grouped.entry(label.to_string()).or_default().push(other.clone());
            }
            all.insert(node.id.clone(), seen.into_iter().collect());
            by_label.insert(node.id.clone(), grouped);
        }
        NeighborIndex { by_label, all }
    }

    fn conforming(&self, v: &NodeId, label: &str) -> &[NodeId] {
        if label == "*" {
            return self.all.get(v).map(Vec::as_slice).unwrap_or(&[]);
        }
        self.by_label
            .get(v)
            .and_then(|m| m.get(label))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for part in parts {
        for &byte in *part {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash ^= 0xff; // separator
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Generate scheme-guided walks from every node whose label matches a scheme
/// start, `walks_per_node` times each.
pub fn random_walks(
    graph: &PropertyGraph,
    schemes: &[MetaPathScheme],
    cfg: &TrainConfig,
) -> WalkCorpus {
    let index = NeighborIndex::build(graph);
    let mut jobs: Vec<(usize, NodeId, usize)> = Vec::new();
    for (s, scheme) in schemes.iter().enumerate() {
        let start_label = &scheme.node_labels[0];
        for node in graph.nodes() {
            if labels_match(start_label, &node.label) {
                for rep in 0..cfg.walks_per_node {
                    jobs.push((s, node.id.clone(), rep));
                }
            }
        }
    }

    let walks: Vec<(usize, Vec<NodeId>)> = jobs
        .par_iter()
        .map(|(s, start, rep)| {
            let scheme = &schemes[*s];
            let seed = fnv1a(&[
                &cfg.seed.to_le_bytes(),
                scheme.tag().as_bytes(),
                start.as_str().as_bytes(),
                &rep.to_le_bytes(),
            ]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut walk = vec![start.clone()];
            let mut cur = start.clone();
            for pos in 0..cfg.walk_length.saturating_sub(1) {
                let next_label = scheme.label_at(pos + 1);
                let candidates = index.conforming(&cur, next_label);
                if candidates.is_empty() {
                    break;
                }
                let next = candidates[rng.random_range(0..candidates.len())].clone();
                walk.push(next.clone());
                cur = next;
            }
            (*s, walk)
        })
        .collect();

    let mut corpus = WalkCorpus::new();
    for (s, walk) in walks {
        let tag = schemes[s].tag();
        let tokens: Vec<(String, String)> = walk
            .iter()
            .map(|id| {
                let label = graph.label_of(id).expect("walk stays in graph").to_string();
                (id.to_string(), label)
            })
            .collect();
        corpus.push_sequence(
            tokens.iter().map(|(k, g)| (k.as_str(), g.as_str(), true)),
            &tag,
        );
    }
    corpus
}

/// Check that every consecutive pair in every sequence is a graph edge and
/// follows its scheme's label cycle; returns the number of transitions.
pub fn count_valid_transitions(
    graph: &PropertyGraph,
    schemes: &[MetaPathScheme],
    corpus: &WalkCorpus,
) -> Result<usize, String> {
    let by_tag: BTreeMap<String, &MetaPathScheme> =
        schemes.iter().map(|s| (s.tag(), s)).collect();
    let mut transitions = 0;
    for (seq, tag) in corpus.sequences.iter().zip(&corpus.provenance) {
        let scheme = by_tag.get(tag).ok_or_else(|| format!("unknown scheme {tag}"))?;
        for (pos, pair) in seq.windows(2).enumerate() {
            let a = NodeId::from(corpus.key_of(pair[0]));
            let b = NodeId::from(corpus.key_of(pair[1]));
            let connected = graph
                .incident(&a)
                .iter()
                .any(|(_, other, _)| *other == b);
            if !connected {
                return Err(format!("{a} -> {b} is not a graph edge"));
            }
            let expected = scheme.label_at(pos + 1);
            let actual = graph.label_of(&b).expect("node exists");
            if !labels_match(expected, actual) {
                return Err(format!(
                    "{a} -> {b}: expected label {expected}, found {actual}"
                ));
            }
            transitions += 1;
        }
    }
    Ok(transitions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::collections::BTreeMap;

    #[test]
    fn shared_ip_scope_gives_user_ip_user() {
        let schemes = metapath_schemes(&fixtures::shared_ip_pattern());
        assert_eq!(schemes.len(), 1);
        assert_eq!(schemes[0].tag(), "user-ipaddress-user");
        assert_eq!(schemes[0].edge_labels, vec!["uses", "uses"]);
    }

    #[test]
    fn lifted_watch_scope_gives_palindrome() {
        let q4 = GraphPattern::new(
            [("x", "user"), ("y", "video"), ("z", "genre")],
            [("x", "watched", "y"), ("y", "has", "z")],
        )
        .unwrap();
        let schemes = metapath_schemes(&q4.lift_to_pair("x").unwrap());
        assert!(schemes
            .iter()
            .any(|s| s.tag() == "user-video-genre-video-user"));
    }

    #[test]
    fn single_var_pattern_has_no_schemes() {
        let p = GraphPattern::new([("x", "user")], []).unwrap();
        assert!(metapath_schemes(&p).is_empty());
    }

    #[test]
    fn no_same_label_pair_means_no_schemes() {
        let q4 = GraphPattern::new(
            [("x", "user"), ("y", "video"), ("z", "genre")],
            [("x", "watched", "y"), ("y", "has", "z")],
        )
        .unwrap();
        assert!(metapath_schemes(&q4).is_empty());
    }

    #[test]
    fn walks_are_valid_and_deterministic() {
        let g = fixtures::toy_graph();
        let schemes = metapath_schemes(&fixtures::shared_ip_pattern());
        let cfg = TrainConfig {
            walks_per_node: 4,
            walk_length: 9,
            ..TrainConfig::toy()
        };
        let a = random_walks(&g, &schemes, &cfg);
        let b = random_walks(&g, &schemes, &cfg);
        assert_eq!(a.sequences, b.sequences);
        assert!(count_valid_transitions(&g, &schemes, &a).unwrap() > 0);
    }

    #[test]
    fn ip_group_walks_never_cross_groups() {
        // walks seeded at v2/v5 stay on ip v6 and never reach v7's users
        let g = fixtures::toy_graph();
        let schemes = metapath_schemes(&fixtures::shared_ip_pattern());
        let cfg = TrainConfig {
            walks_per_node: 10,
            walk_length: 15,
            ..TrainConfig::toy()
        };
        let corpus = random_walks(&g, &schemes, &cfg);
        for seq in &corpus.sequences {
            let keys: Vec<&str> = seq.iter().map(|&id| corpus.key_of(id)).collect();
            if keys[0] == "v2" || keys[0] == "v5" {
                assert!(!keys.contains(&"v7"));
                for banned in ["v3", "v4", "v10", "v11"] {
                    assert!(!keys.contains(&banned));
                }
            }
        }
    }

    #[test]
    fn empty_neighborhood_truncates_walk() {
        let g = fixtures::toy_graph();
        // genre nodes have no genre-labeled neighbors at the next step
        let scheme = MetaPathScheme::new(
            vec!["genre".into(), "genre".into()],
            vec!["likes".into()],
        );
        let cfg = TrainConfig {
            walks_per_node: 2,
            walk_length: 5,
            ..TrainConfig::toy()
        };
        let corpus = random_walks(&g, &[scheme], &cfg);
        for seq in &corpus.sequences {
            assert_eq!(seq.len(), 1);
        }
    }

    #[test]
    fn transition_frequencies_are_uniform_over_conforming_neighbors() {
        let g = fixtures::toy_graph();
        let schemes = metapath_schemes(&fixtures::shared_ip_pattern());
        let cfg = TrainConfig {
            walks_per_node: 600,
            walk_length: 20,
            ..TrainConfig::toy()
        };
        let corpus = random_walks(&g, &schemes, &cfg);
        // count transitions out of v7 into each of its four users
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut total = 0usize;
        for seq in &corpus.sequences {
            for pair in seq.windows(2) {
                if corpus.key_of(pair[0]) == "v7" {
                    *counts.entry(corpus.key_of(pair[1])).or_default() += 1;
                    total += 1;
                }
            }
        }
        assert!(total > 10_000, "need samples, got {total}");
        let p = 0.25;
        let sigma = (p * (1.0 - p) / total as f64).sqrt();
        for user in ["v3", "v4", "v10", "v11"] {
            let freq = *counts.get(user).unwrap_or(&0) as f64 / total as f64;
            assert!(
                (freq - p).abs() <= 3.0 * sigma,
                "{user}: freq {freq} vs 1/4 +- {}",
                3.0 * sigma
            );
        }
    }
}
