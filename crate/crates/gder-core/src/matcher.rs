//! Match confirmation and linked-entity assembly.
//!
//! A candidate pair is linked when some rule's scope has a homomorphism with
//! the pair pinned to the rule's eid variables and every LHS constraint
//! holds. The first satisfying (rule, homomorphism) under the rule ranking is
//! kept as the witness, together with the measured distance of every
//! constraint, so decisions can be replayed and explained. Confirmed pairs
//! are closed transitively into entity clusters with a union-find.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::gdd::{measure_constraint, rank_rules, EvalContext, Gdd};
use crate::graph::{NodeId, PropertyGraph};
use crate::pattern::matching::match_pattern_pinned;
use crate::pattern::Assignment;
use crate::scalar::{cosine, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchReason {
    SatisfiedRule,
    NoPatternMatch,
    ConstraintsViolated,
}

/// The justification for a linked pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    /// Index into the ranked rule list.
    pub rule_index: usize,
    /// Human-readable rule text.
    pub rule: String,
    /// Variable to node assignment of the witnessing homomorphism.
    pub assignment: BTreeMap<String, String>,
    /// Measured distance per LHS constraint.
    pub distances: Vec<ConstraintDistance>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintDistance {
    pub constraint: String,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchDecision {
    pub pair: (NodeId, NodeId),
    pub linked: bool,
    pub reason: MatchReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// Decide one pair against a rule set (ranked internally).
pub fn confirm_match(
    pair: (&NodeId, &NodeId),
    rules: &[Gdd],
    graph: &PropertyGraph,
) -> Result<MatchDecision> {
    let ranked = rank_rules(rules.to_vec());
    confirm_with_ranked(pair, &ranked, graph)
}

fn confirm_with_ranked(
    pair: (&NodeId, &NodeId),
    ranked: &[Gdd],
    graph: &PropertyGraph,
) -> Result<MatchDecision> {
    for v in [pair.0, pair.1] {
        if graph.node(v).is_none() {
            return Err(Error::NodeNotFound(v.to_string()));
        }
    }
    let mut saw_pattern_match = false;
    for (rule_index, rule) in ranked.iter().enumerate() {
        let (x, x2) = (&rule.eid_vars.0, &rule.eid_vars.1);
        for (a, b) in [(pair.0, pair.1), (pair.1, pair.0)] {
            let mut pin = Assignment::new();
            pin.insert(x.clone(), a.clone());
            pin.insert(x2.clone(), b.clone());
            for hom in match_pattern_pinned(graph, &rule.scope, &pin) {
                saw_pattern_match = true;
                let ctx = EvalContext::Graph {
                    graph,
                    assignment: &hom,
                };
                if rule.satisfies_lhs(ctx)? {
                    let distances = rule
                        .lhs
                        .iter()
                        .map(|c| {
                            Ok(ConstraintDistance {
                                constraint: c.to_string(),
                                distance: measure_constraint(c, ctx)?,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    return Ok(MatchDecision {
                        pair: order_pair(pair.0, pair.1),
                        linked: true,
                        reason: MatchReason::SatisfiedRule,
                        witness: Some(Witness {
                            rule_index,
                            rule: rule.display_string(),
                            assignment: hom
                                .iter()
                                .map(|(k, v)| (k.clone(), v.to_string()))
                                .collect(),
                            distances,
                        }),
                    });
                }
            }
        }
    }
    Ok(MatchDecision {
        pair: order_pair(pair.0, pair.1),
        linked: false,
        reason: if saw_pattern_match {
            MatchReason::ConstraintsViolated
        } else {
            MatchReason::NoPatternMatch
        },
        witness: None,
    })
}

fn order_pair(a: &NodeId, b: &NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Decide every candidate pair in parallel; output in candidate order.
pub fn confirm_all(
    cands: &[(NodeId, NodeId)],
    rules: &[Gdd],
    graph: &PropertyGraph,
) -> Result<Vec<MatchDecision>> {
    let ranked = rank_rules(rules.to_vec());
    cands
        .par_iter()
        .map(|(a, b)| confirm_with_ranked((a, b), &ranked, graph))
        .collect()
}

/// Confirmed pairs plus their transitive closure into clusters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkedEntityGraph {
    pub pairs: Vec<(NodeId, NodeId)>,
    pub components: Vec<Vec<NodeId>>,
}

impl LinkedEntityGraph {
    pub fn from_pairs(pairs: Vec<(NodeId, NodeId)>) -> Self {
        let mut nodes: Vec<NodeId> = pairs
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect();
        nodes.sort();
        nodes.dedup();
        let index: BTreeMap<&NodeId, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let mut uf = UnionFind::new(nodes.len());
        for (a, b) in &pairs {
            uf.union(index[a], index[b]);
        }
        let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().push(node.clone());
        }
        let mut components: Vec<Vec<NodeId>> = groups.into_values().collect();
        components.sort();
        LinkedEntityGraph { pairs, components }
    }

    pub fn write_json<W: Write>(&self, sink: W) -> Result<()> {
        serde_json::to_writer_pretty(sink, self)?;
        Ok(())
    }

    pub fn read_json<R: std::io::Read>(reader: R) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }
}

/// Confirm candidates against the rules and close the confirmed pairs
/// transitively. Rules must be nonempty.
pub fn link_entities(
    cands: &[(NodeId, NodeId)],
    rules: &[Gdd],
    graph: &PropertyGraph,
) -> Result<(LinkedEntityGraph, Vec<MatchDecision>)> {
    if rules.is_empty() {
        return Err(Error::Config(
            "cannot link entities with an empty rule set".into(),
        ));
    }
    let decisions = confirm_all(cands, rules, graph)?;
    let mut pairs: Vec<(NodeId, NodeId)> = decisions
        .iter()
        .filter(|d| d.linked)
        .map(|d| d.pair.clone())
        .collect();
    pairs.sort();
    pairs.dedup();
    Ok((LinkedEntityGraph::from_pairs(pairs), decisions))
}

/// Plain union-find with path compression and union by rank.
struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            self.parent[x] = self.find(self.parent[x]);
        }
        self.parent[x]
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
    }
}

/// For every node, its `k` nearest same-label neighbors by cosine,
/// symmetrized to a sorted unordered pair list. Ties break by key order.
pub fn knn_match<S: Real>(
    emb: &EmbeddingTable<S>,
    k: usize,
    labels: &BTreeMap<NodeId, String>,
) -> Result<Vec<(NodeId, NodeId)>> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let keys: Vec<NodeId> = emb.keys().map(NodeId::from).collect();
    let mut pairs: Vec<(NodeId, NodeId)> = keys
        .par_iter()
        .flat_map_iter(|a| {
            let av = emb.get(a.as_str()).expect("key from table");
            let al = labels.get(a);
            let mut scored: Vec<(f64, &NodeId)> = keys
                .iter()
                .filter(|b| *b != a && labels.get(b) == al)
                .map(|b| {
                    let bv = emb.get(b.as_str()).expect("key from table");
                    (cosine(av, bv).to_f64_lossy(), b)
                })
                .collect();
            scored.sort_by(|x, y| {
                y.0.partial_cmp(&x.0)
                    .expect("finite cosines")
                    .then_with(|| x.1.cmp(y.1))
            });
            scored
                .into_iter()
                .take(k)
                .map(|(_, b)| order_pair(a, b))
                .collect::<Vec<_>>()
        })
        .collect();
    pairs.sort();
    pairs.dedup();
    Ok(pairs)
}

/// JSON-lines match report, one decision per line.
pub fn write_match_report<W: Write>(decisions: &[MatchDecision], mut sink: W) -> Result<()> {
    for d in decisions {
        let line = serde_json::to_string(d)?;
        writeln!(sink, "{line}").map_err(|e| Error::io("match report", e))?;
    }
    Ok(())
}

pub fn read_match_report<R: BufRead>(reader: R) -> Result<Vec<MatchDecision>> {
    reader
        .lines()
        .filter_map(|line| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(serde_json::from_str(&l).map_err(Error::from)),
            Err(e) => Some(Err(Error::io("match report", e))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn id(s: &str) -> NodeId {
        NodeId::from(s)
    }

    #[test]
    fn name_rule_links_shared_lastname_pair() {
        let g = fixtures::toy_graph();
        let rules = fixtures::toy_rules();
        let d = confirm_match((&id("v3"), &id("v4")), &rules, &g).unwrap();
        assert!(d.linked);
        let w = d.witness.unwrap();
        assert!(w.rule.contains("LASTNAME"), "expected name rule, got {}", w.rule);
        assert_eq!(w.assignment["y"], "v7");
    }

    #[test]
    fn phone_rule_links_shared_phone_pair() {
        let g = fixtures::toy_graph();
        let rules = fixtures::toy_rules();
        let d = confirm_match((&id("v10"), &id("v11")), &rules, &g).unwrap();
        assert!(d.linked);
        assert!(d.witness.unwrap().rule.contains("PHONE"));
    }

    #[test]
    fn cross_group_pairs_violate_constraints() {
        let g = fixtures::toy_graph();
        let rules = fixtures::toy_rules();
        for pair in [("v3", "v10"), ("v3", "v11"), ("v4", "v10"), ("v4", "v11")] {
            let d = confirm_match((&id(pair.0), &id(pair.1)), &rules, &g).unwrap();
            assert!(!d.linked);
            assert_eq!(d.reason, MatchReason::ConstraintsViolated);
        }
    }

    #[test]
    fn pair_outside_any_scope_match_is_no_pattern_match() {
        let g = fixtures::toy_graph();
        let rules = fixtures::toy_rules();
        // v2 and v3 use different ips: no shared-ip homomorphism
        let d = confirm_match((&id("v2"), &id("v3")), &rules, &g).unwrap();
        assert!(!d.linked);
        assert_eq!(d.reason, MatchReason::NoPatternMatch);
    }

    #[test]
    fn witness_replays_cleanly() {
        let g = fixtures::toy_graph();
        let rules = rank_rules(fixtures::toy_rules());
        let d = confirm_match((&id("v3"), &id("v4")), &rules, &g).unwrap();
        let w = d.witness.unwrap();
        let rule = &rules[w.rule_index];
        let assignment: Assignment = w
            .assignment
            .iter()
            .map(|(k, v)| (k.clone(), NodeId::from(v.as_str())))
            .collect();
        let ctx = EvalContext::Graph {
            graph: &g,
            assignment: &assignment,
        };
        assert!(rule.satisfies_lhs(ctx).unwrap());
    }

    #[test]
    fn linking_builds_components() {
        let g = fixtures::toy_graph();
        let rules = fixtures::toy_rules();
        let cands = vec![
            (id("v3"), id("v4")),
            (id("v3"), id("v10")),
            (id("v10"), id("v11")),
            (id("v2"), id("v5")),
        ];
        let (linked, decisions) = link_entities(&cands, &rules, &g).unwrap();
        assert_eq!(
            linked.pairs,
            vec![(id("v3"), id("v4")), (id("v10"), id("v11"))]
        );
        assert_eq!(linked.components.len(), 2);
        assert_eq!(decisions.len(), 4);
    }

    #[test]
    fn empty_candidates_empty_graph() {
        let g = fixtures::toy_graph();
        let (linked, _) = link_entities(&[], &fixtures::toy_rules(), &g).unwrap();
        assert!(linked.pairs.is_empty());
        assert!(linked.components.is_empty());
    }

    #[test]
    fn empty_rules_are_a_config_error() {
        let g = fixtures::toy_graph();
        assert!(matches!(
            link_entities(&[], &[], &g),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn transitive_pairs_make_one_component() {
        let pairs = vec![(id("a"), id("b")), (id("b"), id("c"))];
        let linked = LinkedEntityGraph::from_pairs(pairs);
        assert_eq!(linked.components.len(), 1);
        assert_eq!(linked.components[0].len(), 3);
    }

    #[test]
    fn adding_a_rule_never_unlinks(){
        let g = fixtures::toy_graph();
        let rules = fixtures::toy_rules();
        let one_rule = vec![rules[0].clone()];
        let cands = vec![
            (id("v3"), id("v4")),
            (id("v10"), id("v11")),
            (id("v4"), id("v11")),
        ];
        let (small, _) = link_entities(&cands, &one_rule, &g).unwrap();
        let (full, _) = link_entities(&cands, &rules, &g).unwrap();
        for pair in &small.pairs {
            assert!(full.pairs.contains(pair));
        }
    }

    #[test]
    fn knn_pairs_duplicates_and_ties() {
        let mut emb = EmbeddingTable::<f64>::new(2);
        emb.insert("a", vec![1.0, 0.0]).unwrap();
        emb.insert("b", vec![1.0, 0.0]).unwrap();
        emb.insert("c", vec![0.0, 1.0]).unwrap();
        let labels: BTreeMap<NodeId, String> = ["a", "b", "c"]
            .iter()
            .map(|k| (id(k), "x".to_string()))
            .collect();
        assert!(knn_match(&emb, 0, &labels).is_err());
        let pairs = knn_match(&emb, 1, &labels).unwrap();
        assert!(pairs.contains(&(id("a"), id("b"))));
        // c's nearest among equidistant candidates breaks ties by key order
        assert!(pairs.contains(&(id("a"), id("c"))));
    }

    #[test]
    fn knn_matches_independent_exhaustive_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let mut emb = EmbeddingTable::<f64>::new(4);
        for i in 0..60 {
            let v: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            emb.insert(format!("n{i:03}"), v).unwrap();
        }
        let labels: BTreeMap<NodeId, String> =
            emb.keys().map(|k| (NodeId::from(k), "x".to_string())).collect();
        let k = 3;
        let fast = knn_match(&emb, k, &labels).unwrap();
        // independent scan: full similarity matrix, top-k per row
        let keys: Vec<&str> = emb.keys().collect();
        let mut expected: Vec<(NodeId, NodeId)> = Vec::new();
        for a in &keys {
            let mut sims: Vec<(f64, &str)> = keys
                .iter()
                .filter(|b| *b != a)
                .map(|b| {
                    let va = emb.get(a).unwrap();
                    let vb = emb.get(b).unwrap();
                    let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                    let na: f64 = va.iter().map(|x| x * x).sum::<f64>().sqrt();
                    let nb: f64 = vb.iter().map(|x| x * x).sum::<f64>().sqrt();
                    (dot / (na * nb), *b)
                })
                .collect();
            sims.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(y.1)));
            for (_, b) in sims.into_iter().take(k) {
                let (lo, hi) = if *a < b { (*a, b) } else { (b, *a) };
                expected.push((NodeId::from(lo), NodeId::from(hi)));
            }
        }
        expected.sort();
        expected.dedup();
        assert_eq!(fast, expected);
    }

    #[test]
    fn match_report_round_trip() {
        let g = fixtures::toy_graph();
        let rules = fixtures::toy_rules();
        let cands = vec![(id("v3"), id("v4")), (id("v2"), id("v5"))];
        let (_, decisions) = link_entities(&cands, &rules, &g).unwrap();
        let mut buf = Vec::new();
        write_match_report(&decisions, &mut buf).unwrap();
        let back = read_match_report(&buf[..]).unwrap();
        assert_eq!(back.len(), decisions.len());
        assert_eq!(back[0].linked, decisions[0].linked);
    }
}
