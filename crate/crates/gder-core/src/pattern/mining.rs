//! Bounded frequent-pattern miner.
//!
//! Label-level patterns are grown one edge at a time from the single-edge
//! label triples present in the graph, deduplicated by a canonical code, and
//! kept while their match count stays at or above `min_support`. The code is
//! the lexicographically minimal serialization of the labeled edge list over
//! all label-preserving variable orderings, so shapes that share a label
//! multiset but differ in topology (two users on one ip vs one user on two
//! ips) stay distinct.

use std::collections::BTreeSet;

use crate::graph::PropertyGraph;
use crate::pattern::matching::match_pattern;
use crate::pattern::GraphPattern;

/// Mine all connected label-level patterns with at most `max_edges` edges and
/// at least `min_support` (canonicalized) matches.
pub fn mine_frequent_patterns(
    graph: &PropertyGraph,
    min_support: usize,
    max_edges: usize,
) -> Vec<GraphPattern> {
    assert!(min_support >= 1, "min_support must be at least 1");
    assert!(max_edges >= 1, "max_edges must be at least 1");

    let schema: BTreeSet<(String, String, String)> = graph
        .edges()
        .iter()
        .map(|e| {
            (
                graph.label_of(&e.src).expect("endpoint exists").to_string(),
                e.label.clone(),
                graph.label_of(&e.dst).expect("endpoint exists").to_string(),
            )
        })
        .collect();

    let mut frequent: Vec<GraphPattern> = Vec::new();
    let mut seen_codes: BTreeSet<String> = BTreeSet::new();
    let mut frontier: Vec<GraphPattern> = Vec::new();

    for (src_label, edge_label, dst_label) in &schema {
        let pattern = single_edge_pattern(src_label, edge_label, dst_label);
        let code = canonical_code(&pattern);
        if !seen_codes.insert(code) {
            continue;
        }
        if match_pattern(graph, &pattern).len() >= min_support {
            frequent.push(pattern.clone());
            frontier.push(pattern);
        }
    }

    for _ in 1..max_edges {
        let mut next_frontier = Vec::new();
        for pattern in &frontier {
            for candidate in extend_by_one_edge(pattern, &schema) {
                let code = canonical_code(&candidate);
                if !seen_codes.insert(code) {
                    continue;
                }
                if match_pattern(graph, &candidate).len() >= min_support {
                    frequent.push(candidate.clone());
                    next_frontier.push(candidate);
                }
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        frontier = next_frontier;
    }

    frequent.sort_by_key(canonical_code);
    frequent
}

fn single_edge_pattern(src_label: &str, edge_label: &str, dst_label: &str) -> GraphPattern {
    GraphPattern::from_owned(
        vec![
            ("u0".to_string(), src_label.to_string()),
            ("u1".to_string(), dst_label.to_string()),
        ],
        vec![("u0".to_string(), edge_label.to_string(), "u1".to_string())],
    )
    .expect("single edge pattern is valid")
}

/// All one-edge extensions: attach a schema-compatible edge between an
/// existing variable and a fresh one (either direction), or close an edge
/// between two existing variables.
fn extend_by_one_edge(
    pattern: &GraphPattern,
    schema: &BTreeSet<(String, String, String)>,
) -> Vec<GraphPattern> {
    let mut out = Vec::new();
    let fresh = format!("u{}", pattern.vars().len());
    let vars: Vec<(String, String)> = pattern
        .vars()
        .iter()
        .map(|v| (v.clone(), pattern.var_label(v).unwrap().to_string()))
        .collect();

    let mut push = |vars: Vec<(String, String)>, edges: Vec<(String, String, String)>| {
        if let Ok(p) = GraphPattern::from_owned(vars, edges) {
            out.push(p);
        }
    };

    for (src_label, edge_label, dst_label) in schema {
        for (v, vl) in &vars {
            // v as source of a new edge to a fresh var
            if vl == src_label {
                let mut new_vars = vars.clone();
                new_vars.push((fresh.clone(), dst_label.clone()));
                let mut edges = pattern.edges().to_vec();
                edges.push((v.clone(), edge_label.clone(), fresh.clone()));
                push(new_vars, edges);
            }
            // v as target of a new edge from a fresh var
            if vl == dst_label {
                let mut new_vars = vars.clone();
                new_vars.push((fresh.clone(), src_label.clone()));
                let mut edges = pattern.edges().to_vec();
                edges.push((fresh.clone(), edge_label.clone(), v.clone()));
                push(new_vars, edges);
            }
        }
        // close an edge between existing vars
        for (a, al) in &vars {
            for (b, bl) in &vars {
                if a == b || al != src_label || bl != dst_label {
                    continue;
                }
                let edge = (a.clone(), edge_label.clone(), b.clone());
                if pattern.edges().contains(&edge) {
                    continue;
                }
                let mut edges = pattern.edges().to_vec();
                edges.push(edge);
                push(vars.clone(), edges);
            }
        }
    }
    out
}

/// Canonical code: minimal serialization over label-preserving variable
/// permutations.
pub fn canonical_code(pattern: &GraphPattern) -> String {
    let n = pattern.vars().len();
    let labels: Vec<&str> = pattern
        .vars()
        .iter()
        .map(|v| pattern.var_label(v).unwrap())
        .collect();
    let mut best: Option<String> = None;
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |perm| {
        let mut edges: Vec<String> = pattern
            .edges()
            .iter()
            .map(|(s, l, d)| {
                let si = perm[pattern.var_index(s).unwrap()];
                let di = perm[pattern.var_index(d).unwrap()];
                format!("{si}-{l}->{di}")
            })
            .collect();
        edges.sort();
        let mut ordered_labels: Vec<(usize, &str)> =
            (0..n).map(|i| (perm[i], labels[i])).collect();
        ordered_labels.sort();
        let code = format!(
            "[{}]|{}",
            ordered_labels
                .iter()
                .map(|(_, l)| *l)
                .collect::<Vec<_>>()
                .join(","),
            edges.join(";")
        );
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
    });
    best.expect("at least the identity permutation")
}

fn permute(perm: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        visit(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, visit);
        perm.swap(k, i);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn has_shape(patterns: &[GraphPattern], probe: &GraphPattern) -> bool {
        let code = canonical_code(probe);
        patterns.iter().any(|p| canonical_code(p) == code)
    }

    #[test]
    fn single_edge_mining_finds_frequent_triples() {
        let g = fixtures::toy_graph();
        let mined = mine_frequent_patterns(&g, 2, 1);
        let uses = single_edge_pattern("user", "uses", "ipaddress");
        let has = single_edge_pattern("video", "has", "genre");
        assert!(has_shape(&mined, &uses));
        assert!(has_shape(&mined, &has));
        for p in &mined {
            assert_eq!(p.edges().len(), 1);
        }
    }

    #[test]
    fn huge_min_support_mines_nothing() {
        let g = fixtures::toy_graph();
        let n = g.node_count();
        assert!(mine_frequent_patterns(&g, n * n + 1, 2).is_empty());
    }

    #[test]
    fn two_edge_mining_finds_shared_ip_shape() {
        let g = fixtures::toy_graph();
        let mined = mine_frequent_patterns(&g, 2, 2);
        assert!(has_shape(&mined, &fixtures::shared_ip_pattern()));
    }

    #[test]
    fn canonical_code_distinguishes_topology() {
        // two users on one ip vs one user on two ips
        let two_users = fixtures::shared_ip_pattern();
        let two_ips = GraphPattern::new(
            [("x", "user"), ("y", "ipaddress"), ("y2", "ipaddress")],
            [("x", "uses", "y"), ("x", "uses", "y2")],
        )
        .unwrap();
        assert_ne!(canonical_code(&two_users), canonical_code(&two_ips));
    }

    #[test]
    fn canonical_code_invariant_under_renaming() {
        let a = fixtures::shared_ip_pattern();
        let b = GraphPattern::new(
            [("p", "user"), ("q", "ipaddress"), ("r", "user")],
            [("r", "uses", "q"), ("p", "uses", "q")],
        )
        .unwrap();
        assert_eq!(canonical_code(&a), canonical_code(&b));
    }
}
