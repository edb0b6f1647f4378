//! Pseudo-relation: matches of a pattern as a table.
//!
//! One row per match, one column per (variable, attribute) plus an eid column
//! per variable. Missing values become the wildcard `*`, which every distance
//! function treats as distance 0. Rows keep their source assignment (when
//! built from a graph) so relation constraints can still be evaluated.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::{NodeId, PropertyGraph};
use crate::pattern::{Assignment, GraphPattern, MatchList};

pub const WILDCARD: &str = "*";

/// Column key: variable and attribute name ("eid" for the entity-id column).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Column {
    pub var: String,
    pub attr: String,
}

#[derive(Debug, Clone, Default)]
pub struct PseudoRow {
    cells: BTreeMap<(String, String), String>,
    /// var -> (relation label -> endpoint ids), for relation constraints.
    relations: BTreeMap<String, BTreeMap<String, Vec<NodeId>>>,
    /// Source match, when the row came from a graph.
    pub assignment: Option<Assignment>,
}

impl PseudoRow {
    pub fn cell(&self, var: &str, attr: &str) -> Option<&str> {
        self.cells
            .get(&(var.to_string(), attr.to_string()))
            .map(|s| s.as_str())
    }

    pub fn set_cell(&mut self, var: &str, attr: &str, value: impl Into<String>) {
        self.cells
            .insert((var.to_string(), attr.to_string()), value.into());
    }

    pub fn relation_targets(&self, var: &str, rela: &str) -> Option<&[NodeId]> {
        self.relations
            .get(var)
            .and_then(|m| m.get(rela))
            .map(|v| v.as_slice())
    }

    /// eid cell for a variable; `None` when it is the wildcard.
    pub fn eid(&self, var: &str) -> Option<&str> {
        self.cell(var, "eid").filter(|v| *v != WILDCARD)
    }
}

/// Tabular projection of a match list.
#[derive(Debug, Clone)]
pub struct PseudoRelation {
    pub columns: Vec<Column>,
    pub rows: Vec<PseudoRow>,
}

impl PseudoRelation {
    /// Build a synthetic relation (tests, discovery oracles) from explicit
    /// columns and row cell maps. Missing cells become wildcards.
    pub fn synthetic(
        vars: &[&str],
        attrs: &[&str],
        rows: Vec<BTreeMap<(String, String), String>>,
    ) -> Self {
        let columns = column_set(
            &vars.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
            &attrs.iter().map(|a| a.to_string()).collect::<BTreeSet<_>>(),
        );
        let rows = rows
            .into_iter()
            .map(|cells| {
                let mut row = PseudoRow::default();
                for col in &columns {
                    let value = cells
                        .get(&(col.var.clone(), col.attr.clone()))
                        .cloned()
                        .unwrap_or_else(|| WILDCARD.to_string());
                    row.set_cell(&col.var, &col.attr, value);
                }
                row
            })
            .collect();
        PseudoRelation { columns, rows }
    }

    pub fn has_column(&self, var: &str, attr: &str) -> bool {
        self.columns.iter().any(|c| c.var == var && c.attr == attr)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Write the table as CSV with `var.attr` headers.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}.{}", c.var, c.attr))
            .collect();
        writer.write_record(&header)?;
        for row in &self.rows {
            let record: Vec<&str> = self
                .columns
                .iter()
                .map(|c| row.cell(&c.var, &c.attr).unwrap_or(WILDCARD))
                .collect();
            writer.write_record(&record)?;
        }
        writer.flush().map_err(|e| Error::io("pseudo relation csv", e))?;
        Ok(())
    }
}

fn column_set(vars: &[String], attrs: &BTreeSet<String>) -> Vec<Column> {
    let mut columns = Vec::new();
    for var in vars {
        for attr in attrs {
            columns.push(Column {
                var: var.clone(),
                attr: attr.clone(),
            });
        }
        columns.push(Column {
            var: var.clone(),
            attr: "eid".to_string(),
        });
    }
    columns
}

/// Project matches onto a table over the given attributes.
pub fn to_pseudo_relation(
    graph: &PropertyGraph,
    matches: &MatchList,
    attrs: &BTreeSet<String>,
) -> PseudoRelation {
    let pattern: &GraphPattern = &matches.pattern;
    let columns = column_set(pattern.vars(), attrs);
    let mut rows = Vec::with_capacity(matches.len());
    for assignment in &matches.rows {
        let mut row = PseudoRow {
            assignment: Some(assignment.clone()),
            ..Default::default()
        };
        for var in pattern.vars() {
            let node = graph.node(&assignment[var]).expect("match endpoint exists");
            for attr in attrs {
                let value = node
                    .attr(attr)
                    .map(|v| v.raw.clone())
                    .unwrap_or_else(|| WILDCARD.to_string());
                row.set_cell(var, attr, value);
            }
            row.set_cell(
                var,
                "eid",
                node.eid.clone().unwrap_or_else(|| WILDCARD.to_string()),
            );
            let mut rels: BTreeMap<String, Vec<NodeId>> = BTreeMap::new();
            for (label, other, outgoing) in graph.incident(&node.id) {
                if *outgoing {
                    rels.entry(label.clone()).or_default().push(other.clone());
                }
            }
            for targets in rels.values_mut() {
                targets.sort();
                targets.dedup();
            }
            row.relations.insert(var.clone(), rels);
        }
        rows.push(row);
    }
    PseudoRelation { columns, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pattern::matching::match_pattern;

    #[test]
    fn shared_ip_relation_has_seven_rows_with_eids() {
        let g = fixtures::toy_graph();
        let matches = match_pattern(&g, &fixtures::shared_ip_pattern());
        let attrs: BTreeSet<String> =
            ["FIRSTNAME", "LASTNAME"].iter().map(|s| s.to_string()).collect();
        let pr = to_pseudo_relation(&g, &matches, &attrs);
        assert_eq!(pr.len(), 7);
        assert!(pr.has_column("x", "eid"));
        assert!(pr.has_column("x2", "eid"));
        // the (v3, v4) row carries equal eids
        let row = pr
            .rows
            .iter()
            .find(|r| r.cell("x", "FIRSTNAME") == Some("Leese"))
            .expect("v3 row present");
        assert_eq!(row.eid("x"), row.eid("x2"));
    }

    #[test]
    fn missing_attribute_becomes_wildcard() {
        let g = fixtures::toy_graph();
        let matches = match_pattern(&g, &fixtures::shared_ip_pattern());
        let attrs: BTreeSet<String> = ["LASTNAME"].iter().map(|s| s.to_string()).collect();
        let pr = to_pseudo_relation(&g, &matches, &attrs);
        // ipaddress var y has no LASTNAME anywhere
        assert!(pr.rows.iter().all(|r| r.cell("y", "LASTNAME") == Some(WILDCARD)));
    }

    #[test]
    fn empty_match_list_keeps_full_header() {
        let g = fixtures::toy_graph();
        let p = GraphPattern::new(
            [("a", "genre"), ("b", "genre")],
            [("a", "likes", "b")],
        )
        .unwrap();
        let matches = match_pattern(&g, &p);
        assert!(matches.is_empty());
        let attrs: BTreeSet<String> = ["NAME"].iter().map(|s| s.to_string()).collect();
        let pr = to_pseudo_relation(&g, &matches, &attrs);
        assert_eq!(pr.len(), 0);
        assert_eq!(pr.columns.len(), 4); // 2 vars x (NAME + eid)
    }

    #[test]
    fn row_count_equals_match_count() {
        let g = fixtures::toy_graph();
        let matches = match_pattern(&g, &fixtures::shared_ip_pattern());
        let attrs: BTreeSet<String> = ["PHONE"].iter().map(|s| s.to_string()).collect();
        let pr = to_pseudo_relation(&g, &matches, &attrs);
        assert_eq!(pr.len(), matches.len());
    }
}
