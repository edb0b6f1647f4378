//! Graph patterns and their matches.
//!
//! A [`GraphPattern`] is a small connected directed graph over named
//! variables, with `*` as a wildcard label. Matching is homomorphism-based:
//! distinct variables may map to the same node, except that structurally
//! interchangeable same-label variable pairs are canonicalized to one
//! orientation and never map to a single node (a node is not a duplicate of
//! itself).

pub mod matching;
pub mod mining;
pub mod pseudo;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Pattern over variables: labels per variable plus labeled directed edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphPattern {
    vars: Vec<String>,
    var_labels: BTreeMap<String, String>,
    edges: Vec<(String, String, String)>,
}

impl GraphPattern {
    /// Build and validate a pattern from (var, label) pairs and
    /// (src, edge label, dst) triples.
    pub fn new<V, E>(vars: V, edges: E) -> Result<Self>
    where
        V: IntoIterator<Item = (&'static str, &'static str)>,
        E: IntoIterator<Item = (&'static str, &'static str, &'static str)>,
    {
        let vars: Vec<(String, String)> = vars
            .into_iter()
            .map(|(v, l)| (v.to_string(), l.to_string()))
            .collect();
        let edges = edges
            .into_iter()
            .map(|(s, l, d)| (s.to_string(), l.to_string(), d.to_string()))
            .collect();
        Self::from_owned(vars, edges)
    }

    pub fn from_owned(
        vars: Vec<(String, String)>,
        edges: Vec<(String, String, String)>,
    ) -> Result<Self> {
        let mut ordered = Vec::new();
        let mut var_labels = BTreeMap::new();
        for (v, l) in vars {
            if var_labels.insert(v.clone(), l).is_some() {
                return Err(Error::InvalidPattern(format!("variable {v} declared twice")));
            }
            ordered.push(v);
        }
        let pattern = GraphPattern {
            vars: ordered,
            var_labels,
            edges,
        };
        pattern.validate()?;
        Ok(pattern)
    }

    fn validate(&self) -> Result<()> {
        if self.vars.is_empty() {
            return Err(Error::InvalidPattern("pattern has no variables".into()));
        }
        for (src, _, dst) in &self.edges {
            for v in [src, dst] {
                if !self.var_labels.contains_key(v) {
                    return Err(Error::InvalidPattern(format!(
                        "edge endpoint {v} is not a declared variable"
                    )));
                }
            }
        }
        if !self.is_connected() {
            return Err(Error::InvalidPattern("pattern is not connected".into()));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        if self.vars.len() <= 1 {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![self.vars[0].clone()];
        while let Some(v) = stack.pop() {
            if !seen.insert(v.clone()) {
                continue;
            }
            for (s, _, d) in &self.edges {
                if *s == v && !seen.contains(d) {
                    stack.push(d.clone());
                }
                if *d == v && !seen.contains(s) {
                    stack.push(s.clone());
                }
            }
        }
        seen.len() == self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_label(&self, v: &str) -> Option<&str> {
        self.var_labels.get(v).map(|s| s.as_str())
    }

    pub fn edges(&self) -> &[(String, String, String)] {
        &self.edges
    }

    pub fn var_index(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|x| x == v)
    }

    /// Undirected pattern neighbors of `v` with the connecting edge labels.
    pub fn pattern_neighbors(&self, v: &str) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (s, l, d) in &self.edges {
            if s == v {
                out.push((l.clone(), d.clone()));
            } else if d == v {
                out.push((l.clone(), s.clone()));
            }
        }
        out
    }

    /// All label-preserving, edge-preserving permutations of the variables.
    /// Patterns are tiny, so plain permutation search is fine.
    pub fn automorphisms(&self) -> Vec<BTreeMap<String, String>> {
        let n = self.vars.len();
        let edge_set: BTreeSet<&(String, String, String)> = self.edges.iter().collect();
        let mut result = Vec::new();
        let mut perm: Vec<usize> = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.search_automorphisms(&mut perm, &mut used, &edge_set, &mut result);
        result
    }

    fn search_automorphisms(
        &self,
        perm: &mut Vec<usize>,
        used: &mut [bool],
        edge_set: &BTreeSet<&(String, String, String)>,
        result: &mut Vec<BTreeMap<String, String>>,
    ) {
        let n = self.vars.len();
        if perm.len() == n {
            let map: BTreeMap<String, String> = (0..n)
                .map(|i| (self.vars[i].clone(), self.vars[perm[i]].clone()))
                .collect();
            let ok = self.edges.iter().all(|(s, l, d)| {
                edge_set.contains(&(map[s].clone(), l.clone(), map[d].clone()))
            });
            if ok {
                result.push(map);
            }
            return;
        }
        let i = perm.len();
        for j in 0..n {
            if used[j] || self.var_labels[&self.vars[i]] != self.var_labels[&self.vars[j]] {
                continue;
            }
            used[j] = true;
            perm.push(j);
            self.search_automorphisms(perm, used, edge_set, result);
            perm.pop();
            used[j] = false;
        }
    }

    /// Orbits of the automorphism group: variables that can be swapped by
    /// some automorphism end up in the same orbit.
    pub fn orbits(&self) -> Vec<BTreeSet<String>> {
        let autos = self.automorphisms();
        let mut orbit_of: BTreeMap<String, usize> = self
            .vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        // union orbits under every automorphism image
        for auto in &autos {
            for (v, w) in auto {
                let (a, b) = (orbit_of[v], orbit_of[w]);
                if a != b {
                    let target = a.min(b);
                    let source = a.max(b);
                    for slot in orbit_of.values_mut() {
                        if *slot == source {
                            *slot = target;
                        }
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for (v, slot) in orbit_of {
            groups.entry(slot).or_default().insert(v);
        }
        groups.into_values().collect()
    }

    /// Mirror the pattern through its variable farthest from `anchor`,
    /// producing a two-`anchor` pattern. Used to turn a single-entity scope
    /// like user-video-genre into a linking shape user-video-genre-video-user.
    pub fn lift_to_pair(&self, anchor: &str) -> Result<GraphPattern> {
        if self.var_label(anchor).is_none() {
            return Err(Error::InvalidPattern(format!(
                "anchor {anchor} is not a pattern variable"
            )));
        }
        // BFS distances from the anchor over undirected pattern edges.
        let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
        dist.insert(anchor, 0);
        let mut queue = std::collections::VecDeque::from([anchor]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v];
            for (s, _, t) in &self.edges {
                for (a, b) in [(s, t), (t, s)] {
                    if a == v && !dist.contains_key(b.as_str()) {
                        dist.insert(b, d + 1);
                        queue.push_back(b);
                    }
                }
            }
        }
        let (&far, _) = dist
            .iter()
            .max_by_key(|(v, d)| (**d, std::cmp::Reverse(**v)))
            .expect("pattern nonempty");
        // Copy every variable except the far pivot; edges touching the pivot
        // connect to the shared original.
        let mirror = |v: &str| -> String {
            if v == far {
                v.to_string()
            } else {
                format!("{v}__m")
            }
        };
        let mut vars: Vec<(String, String)> = self
            .vars
            .iter()
            .map(|v| (v.clone(), self.var_labels[v].clone()))
            .collect();
        for v in &self.vars {
            if v != far {
                vars.push((mirror(v), self.var_labels[v].clone()));
            }
        }
        let mut edges = self.edges.clone();
        for (s, l, d) in &self.edges {
            let m = (mirror(s), l.clone(), mirror(d));
            if !edges.contains(&m) {
                edges.push(m);
            }
        }
        GraphPattern::from_owned(vars, edges)
    }
}

#[derive(Serialize, Deserialize)]
struct PatternFileVar {
    name: String,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct PatternFileEdge {
    src: String,
    label: String,
    dst: String,
}

#[derive(Serialize, Deserialize)]
struct PatternFile {
    vars: Vec<PatternFileVar>,
    edges: Vec<PatternFileEdge>,
}

impl GraphPattern {
    /// Read the JSON pattern format
    /// `{vars:[{name,label}], edges:[{src,label,dst}]}`.
    pub fn from_json_reader<R: Read>(reader: R) -> Result<Self> {
        let file: PatternFile = serde_json::from_reader(reader)?;
        Self::from_owned(
            file.vars.into_iter().map(|v| (v.name, v.label)).collect(),
            file.edges
                .into_iter()
                .map(|e| (e.src, e.label, e.dst))
                .collect(),
        )
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "vars": self
                .vars
                .iter()
                .map(|v| serde_json::json!({"name": v, "label": self.var_labels[v]}))
                .collect::<Vec<_>>(),
            "edges": self
                .edges
                .iter()
                .map(|(s, l, d)| serde_json::json!({"src": s, "label": l, "dst": d}))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json_value(value: &serde_json::Value) -> Result<Self> {
        let file: PatternFile = serde_json::from_value(value.clone())?;
        Self::from_owned(
            file.vars.into_iter().map(|v| (v.name, v.label)).collect(),
            file.edges
                .into_iter()
                .map(|e| (e.src, e.label, e.dst))
                .collect(),
        )
    }
}

/// One homomorphism: variable -> node assignment, in pattern var order.
pub type Assignment = BTreeMap<String, NodeId>;

/// All matches of a pattern in a graph.
#[derive(Debug, Clone)]
pub struct MatchList {
    pub pattern: GraphPattern,
    pub rows: Vec<Assignment>,
}

impl MatchList {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Export as CSV, one column per variable, rows in stored order.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(self.pattern.vars())?;
        for row in &self.rows {
            let record: Vec<&str> = self
                .pattern
                .vars()
                .iter()
                .map(|v| row[v].as_str())
                .collect();
            writer.write_record(&record)?;
        }
        writer.flush().map_err(|e| Error::io("match csv", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn disconnected_pattern_is_rejected() {
        let err = GraphPattern::new([("x", "user"), ("y", "video")], []).unwrap_err();
        assert!(matches!(err, Error::InvalidPattern(_)));
    }

    #[test]
    fn edge_with_undeclared_var_is_rejected() {
        let err = GraphPattern::new([("x", "user")], [("x", "uses", "y")]).unwrap_err();
        assert!(matches!(err, Error::InvalidPattern(_)));
    }

    #[test]
    fn shared_ip_pattern_has_swappable_users() {
        let p = fixtures::shared_ip_pattern();
        let orbits = p.orbits();
        let user_orbit = orbits
            .iter()
            .find(|o| o.contains("x"))
            .expect("x is in some orbit");
        assert!(user_orbit.contains("x2"));
        assert_eq!(p.automorphisms().len(), 2);
    }

    #[test]
    fn asymmetric_same_label_vars_stay_in_separate_orbits() {
        // x follows y: same label but not interchangeable.
        let p = GraphPattern::new([("x", "user"), ("y", "user")], [("x", "follows", "y")]).unwrap();
        assert_eq!(p.automorphisms().len(), 1);
        assert_eq!(p.orbits().len(), 2);
    }

    #[test]
    fn lift_mirrors_through_farthest_var() {
        let q4 = GraphPattern::new(
            [("x", "user"), ("y", "video"), ("z", "genre")],
            [("x", "watched", "y"), ("y", "has", "z")],
        )
        .unwrap();
        let lifted = q4.lift_to_pair("x").unwrap();
        assert_eq!(lifted.vars().len(), 5); // x, y, z, x__m, y__m
        assert_eq!(lifted.edges().len(), 4);
        assert_eq!(lifted.var_label("x__m"), Some("user"));
        assert_eq!(lifted.var_label("y__m"), Some("video"));
    }

    #[test]
    fn pattern_json_round_trip() {
        let p = fixtures::shared_ip_pattern();
        let value = p.to_json_value();
        let back = GraphPattern::from_json_value(&value).unwrap();
        assert_eq!(p, back);
    }
}
