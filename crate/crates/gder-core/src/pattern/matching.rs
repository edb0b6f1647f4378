//! Backtracking homomorphism matcher.
//!
//! Variables are assigned in an order that always extends the connected
//! frontier, picking the variable with the smallest candidate set next.
//! Candidates are drawn from the label index and intersected with adjacency
//! constraints from already-assigned neighbors.
//!
//! Matches are deduplicated modulo pattern automorphisms, and two variables in
//! the same automorphism orbit never map to the same node, so a symmetric
//! pair like two users sharing an ip appears once and never as a self-pair.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::{labels_match, NodeId, PropertyGraph};
use crate::pattern::{Assignment, GraphPattern, MatchList};

/// Find all canonicalized homomorphisms of `pattern` in `graph`.
pub fn match_pattern(graph: &PropertyGraph, pattern: &GraphPattern) -> MatchList {
    let raw = enumerate_homomorphisms(graph, pattern, &BTreeMap::new());
    MatchList {
        pattern: pattern.clone(),
        rows: canonicalize(pattern, raw),
    }
}

/// Like [`match_pattern`] but with some variables pinned to fixed nodes.
/// Returns raw (uncanonicalized) matches extending the pin; used for witness
/// search where the pinned pair is already an unordered choice.
pub fn match_pattern_pinned(
    graph: &PropertyGraph,
    pattern: &GraphPattern,
    pinned: &Assignment,
) -> Vec<Assignment> {
    enumerate_homomorphisms(graph, pattern, pinned)
}

/// Drop same-orbit collisions and keep one representative per automorphism
/// class, in deterministic order.
pub fn canonicalize(pattern: &GraphPattern, rows: Vec<Assignment>) -> Vec<Assignment> {
    let autos = pattern.automorphisms();
    let orbits = pattern.orbits();
    let mut kept: BTreeSet<Vec<NodeId>> = BTreeSet::new();
    for row in rows {
        if orbits.iter().any(|orbit| {
            let mut seen = BTreeSet::new();
            orbit.iter().any(|v| !seen.insert(&row[v]))
        }) {
            continue; // a node cannot duplicate itself within an orbit
        }
        let canonical = autos
            .iter()
            .map(|auto| {
                pattern
                    .vars()
                    .iter()
                    .map(|v| row[&auto[v]].clone())
                    .collect::<Vec<_>>()
            })
            .min()
            .expect("identity automorphism always present");
        kept.insert(canonical);
    }
    kept.into_iter()
        .map(|tuple| {
            pattern
                .vars()
                .iter()
                .cloned()
                .zip(tuple)
                .collect::<Assignment>()
        })
        .collect()
}

fn enumerate_homomorphisms(
    graph: &PropertyGraph,
    pattern: &GraphPattern,
    pinned: &Assignment,
) -> Vec<Assignment> {
    // Pins must themselves respect labels.
    for (var, node) in pinned {
        let Some(pl) = pattern.var_label(var) else {
            return Vec::new();
        };
        let Some(nl) = graph.label_of(node) else {
            return Vec::new();
        };
        if !labels_match(pl, nl) {
            return Vec::new();
        }
    }
    let mut assignment: Assignment = pinned.clone();
    let mut results = Vec::new();
    backtrack(graph, pattern, &mut assignment, &mut results);
    results
}

fn candidate_set(
    graph: &PropertyGraph,
    pattern: &GraphPattern,
    assignment: &Assignment,
    var: &str,
) -> Vec<NodeId> {
    let label = pattern.var_label(var).expect("declared var");
    // Adjacency constraints from assigned neighbors shrink the pool fastest.
    let mut pool: Option<BTreeSet<NodeId>> = None;
    for (src, elabel, dst) in pattern.edges() {
        let (other, outgoing) = if src == var {
            (dst, true)
        } else if dst == var {
            (src, false)
        } else {
            continue;
        };
        if let Some(anchor) = assignment.get(other) {
            let mut feasible = BTreeSet::new();
            for (l, nb, out) in graph.incident(anchor) {
                // an edge var->other needs nb -> anchor seen from anchor as incoming
                if *out != outgoing && labels_match(elabel, l) {
                    feasible.insert(nb.clone());
                }
            }
            pool = Some(match pool {
                None => feasible,
                Some(prev) => prev.intersection(&feasible).cloned().collect(),
            });
        }
    }
    let base: Vec<NodeId> = match pool {
        Some(set) => set.into_iter().collect(),
        None => {
            if label == "*" {
                graph.nodes().map(|n| n.id.clone()).collect()
            } else {
                graph.nodes_with_label(label).cloned().collect()
            }
        }
    };
    base.into_iter()
        .filter(|id| labels_match(label, graph.label_of(id).expect("node exists")))
        .collect()
}

fn backtrack(
    graph: &PropertyGraph,
    pattern: &GraphPattern,
    assignment: &mut Assignment,
    results: &mut Vec<Assignment>,
) {
    if assignment.len() == pattern.vars().len() {
        if verify(graph, pattern, assignment) {
            results.push(assignment.clone());
        }
        return;
    }
    // Next variable: prefer ones adjacent to the assigned frontier, then the
    // smallest candidate set.
    let unassigned: Vec<&String> = pattern
        .vars()
        .iter()
        .filter(|v| !assignment.contains_key(*v))
        .collect();
    let connected: Vec<&String> = unassigned
        .iter()
        .copied()
        .filter(|v| {
            assignment.is_empty()
                || pattern
                    .pattern_neighbors(v)
                    .iter()
                    .any(|(_, nb)| assignment.contains_key(nb))
        })
        .collect();
    let pool = if connected.is_empty() { &unassigned } else { &connected };
    let (var, candidates) = pool
        .iter()
        .map(|v| {
            let cands = candidate_set(graph, pattern, assignment, v);
            ((*v).clone(), cands)
        })
        .min_by_key(|(v, cands)| (cands.len(), v.clone()))
        .expect("at least one unassigned var");

    for node in candidates {
        assignment.insert(var.clone(), node);
        backtrack(graph, pattern, assignment, results);
        assignment.remove(&var);
    }
}

/// Full edge-by-edge re-check of a complete assignment.
fn verify(graph: &PropertyGraph, pattern: &GraphPattern, assignment: &Assignment) -> bool {
    pattern.vars().iter().all(|v| {
        let node = &assignment[v];
        graph
            .label_of(node)
            .is_some_and(|nl| labels_match(pattern.var_label(v).unwrap(), nl))
    }) && pattern.edges().iter().all(|(s, l, d)| {
        let src = &assignment[s];
        let dst = &assignment[d];
        graph
            .incident(src)
            .iter()
            .any(|(el, nb, out)| *out && nb == dst && labels_match(l, el))
    })
}
