//! Relational CSV tables to property graph conversion.
//!
//! One node per row, labeled by table; one edge per non-empty foreign-key
//! cell. Node ids are namespaced as `<table>/<row id>` so id columns from
//! different tables cannot collide.

use std::collections::BTreeMap;
use std::io::Read;

use crate::error::{Error, Result};
use crate::graph::{Edge, Node, NodeId, PropertyGraph};

/// Per-table schema: how rows become nodes.
#[derive(Debug, Clone)]
pub struct TableSchema {
    pub label: String,
    pub id_column: String,
    /// Attribute columns; empty means "every column except id, eid, and FKs".
    pub attribute_columns: Vec<String>,
    pub eid_column: Option<String>,
}

/// Foreign key: (table, column) -> target table, with an edge label.
#[derive(Debug, Clone)]
pub struct ForeignKey {
    pub table: String,
    pub column: String,
    pub target_table: String,
    pub edge_label: String,
}

/// Declarative mapping from a set of CSV tables to a property graph.
#[derive(Debug, Clone, Default)]
pub struct RelationalSchemaConfig {
    pub tables: BTreeMap<String, TableSchema>,
    pub foreign_keys: Vec<ForeignKey>,
}

impl RelationalSchemaConfig {
    /// Validate structural invariants: FK targets declared, labels non-empty.
    pub fn validate(&self) -> Result<()> {
        for fk in &self.foreign_keys {
            if !self.tables.contains_key(&fk.table) {
                return Err(Error::Config(format!(
                    "foreign key on undeclared table {}",
                    fk.table
                )));
            }
            if !self.tables.contains_key(&fk.target_table) {
                return Err(Error::Config(format!(
                    "foreign key {}.{} targets undeclared table {}",
                    fk.table, fk.column, fk.target_table
                )));
            }
            if fk.edge_label.is_empty() {
                return Err(Error::Config(format!(
                    "foreign key {}.{} has an empty edge label",
                    fk.table, fk.column
                )));
            }
        }
        Ok(())
    }

    /// Parse the flat `key = value` config format:
    ///
    /// ```text
    /// table.paper.id_column = pid
    /// table.paper.label = paper          # optional, defaults to table name
    /// table.paper.attributes = title,year
    /// table.paper.eid_column = truth     # optional
    /// fk.paper.venue_id.target = venue
    /// fk.paper.venue_id.label = published_in
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut tables: BTreeMap<String, TableSchema> = BTreeMap::new();
        let mut fk_parts: BTreeMap<(String, String), (Option<String>, Option<String>)> =
            BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config(format!(
                "line {}: expected `key = value`, got {raw:?}",
                lineno + 1
            )))?;
            let key = key.trim();
            let value = value.trim().to_string();
            let parts: Vec<&str> = key.split('.').collect();
            match parts.as_slice() {
                ["table", table, field] => {
                    let entry = tables.entry(table.to_string()).or_insert_with(|| TableSchema {
                        label: table.to_string(),
                        id_column: String::new(),
                        attribute_columns: Vec::new(),
                        eid_column: None,
                    });
                    match *field {
                        "id_column" => entry.id_column = value,
                        "label" => entry.label = value,
                        "attributes" => {
                            entry.attribute_columns = value
                                .split(',')
                                .map(|s| s.trim().to_string())
                                .filter(|s| !s.is_empty())
                                .collect()
                        }
                        "eid_column" => entry.eid_column = Some(value),
                        other => {
                            return Err(Error::Config(format!(
                                "line {}: unknown table field {other}",
                                lineno + 1
                            )))
                        }
                    }
                }
                ["fk", table, column, field] => {
                    let entry = fk_parts
                        .entry((table.to_string(), column.to_string()))
                        .or_default();
                    match *field {
                        "target" => entry.0 = Some(value),
                        "label" => entry.1 = Some(value),
                        other => {
                            return Err(Error::Config(format!(
                                "line {}: unknown fk field {other}",
                                lineno + 1
                            )))
                        }
                    }
                }
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {key}",
                        lineno + 1
                    )))
                }
            }
        }
        for (table, schema) in &tables {
            if schema.id_column.is_empty() {
                return Err(Error::Config(format!(
                    "table {table} is missing id_column"
                )));
            }
        }
        let mut foreign_keys = Vec::new();
        for ((table, column), (target, label)) in fk_parts {
            let target_table = target.ok_or_else(|| {
                Error::Config(format!("fk {table}.{column} is missing target"))
            })?;
            let edge_label = label.ok_or_else(|| {
                Error::Config(format!("fk {table}.{column} is missing label"))
            })?;
            foreign_keys.push(ForeignKey {
                table,
                column,
                target_table,
                edge_label,
            });
        }
        let cfg = RelationalSchemaConfig {
            tables,
            foreign_keys,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Convert named CSV streams to a property graph under `config`.
pub fn convert_relational<R: Read>(
    tables: BTreeMap<String, R>,
    config: &RelationalSchemaConfig,
) -> Result<PropertyGraph> {
    config.validate()?;
    let mut graph = PropertyGraph::new();
    // FK cells are resolved after all nodes exist.
    let mut pending_edges: Vec<(String, usize, String, String, String, String)> = Vec::new();

    for (table_name, reader) in tables {
        let schema = config.tables.get(&table_name).ok_or_else(|| {
            Error::Config(format!("table {table_name} has no schema entry"))
        })?;
        let fks: Vec<&ForeignKey> = config
            .foreign_keys
            .iter()
            .filter(|fk| fk.table == table_name)
            .collect();
        let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = csv_reader
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingColumn {
                    table: table_name.clone(),
                    column: name.to_string(),
                })
        };
        let id_idx = col(&schema.id_column)?;
        let eid_idx = schema.eid_column.as_deref().map(col).transpose()?;
        let attr_cols: Vec<(String, usize)> = if schema.attribute_columns.is_empty() {
            let skip: Vec<&str> = std::iter::once(schema.id_column.as_str())
                .chain(schema.eid_column.as_deref())
                .chain(fks.iter().map(|fk| fk.column.as_str()))
                .collect();
            headers
                .iter()
                .enumerate()
                .filter(|(_, h)| !skip.contains(&h.as_str()))
                .map(|(i, h)| (h.clone(), i))
                .collect()
        } else {
            schema
                .attribute_columns
                .iter()
                .map(|c| Ok((c.clone(), col(c)?)))
                .collect::<Result<Vec<_>>>()?
        };
        let fk_cols: Vec<(&ForeignKey, usize)> = fks
            .iter()
            .map(|fk| Ok((*fk, col(&fk.column)?)))
            .collect::<Result<Vec<_>>>()?;

        for (rowno, record) in csv_reader.records().enumerate() {
            let record = record?;
            let row_id = record.get(id_idx).unwrap_or("").trim();
            if row_id.is_empty() {
                return Err(Error::MalformedRecord {
                    line: rowno + 2,
                    message: format!("table {table_name}: empty id cell"),
                });
            }
            let node_id = format!("{}/{}", schema.label, row_id);
            let mut node = Node::new(node_id.clone(), schema.label.clone());
            if let Some(idx) = eid_idx {
                let eid = record.get(idx).unwrap_or("").trim();
                if !eid.is_empty() {
                    node.eid = Some(eid.to_string());
                }
            }
            for (name, idx) in &attr_cols {
                let cell = record.get(*idx).unwrap_or("").trim();
                if !cell.is_empty() {
                    node = node.with_attr(name.clone(), cell);
                }
            }
            graph.insert_node(node)?;
            for (fk, idx) in &fk_cols {
                let cell = record.get(*idx).unwrap_or("").trim();
                if !cell.is_empty() {
                    let target_label = &config.tables[&fk.target_table].label;
                    pending_edges.push((
                        table_name.clone(),
                        rowno + 2,
                        fk.column.clone(),
                        node_id.clone(),
                        fk.edge_label.clone(),
                        format!("{target_label}/{cell}"),
                    ));
                }
            }
        }
    }

    for (table, row, column, src, label, dst) in pending_edges {
        let dst_id = NodeId::from(dst.clone());
        if graph.node(&dst_id).is_none() {
            return Err(Error::UnresolvedForeignKey {
                table,
                row,
                column,
                value: dst,
            });
        }
        graph.insert_edge(Edge {
            src: NodeId::from(src),
            label,
            dst: dst_id,
        })?;
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_table_config() -> RelationalSchemaConfig {
        RelationalSchemaConfig::parse(
            "table.paper.id_column = pid\n\
             table.paper.attributes = title\n\
             table.venue.id_column = vid\n\
             table.venue.attributes = name\n\
             fk.paper.venue_id.target = venue\n\
             fk.paper.venue_id.label = published_in\n",
        )
        .unwrap()
    }

    #[test]
    fn single_table_no_fks() {
        let cfg = RelationalSchemaConfig::parse(
            "table.person.id_column = id\ntable.person.attributes = name\n",
        )
        .unwrap();
        let mut tables = BTreeMap::new();
        tables.insert("person".to_string(), &b"id,name\np1,Ann\np2,Bob\n"[..]);
        let g = convert_relational(tables, &cfg).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn fk_cells_become_edges() {
        let cfg = two_table_config();
        let mut tables = BTreeMap::new();
        tables.insert(
            "paper".to_string(),
            &b"pid,title,venue_id\np1,On Things,v7\np2,More Things,v7\n"[..],
        );
        tables.insert("venue".to_string(), &b"vid,name\nv7,VLDB\n"[..]);
        let g = convert_relational(tables, &cfg).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        let targets = g.relation_targets(&NodeId::from("paper/p1"), "published_in");
        assert_eq!(targets, vec![NodeId::from("venue/v7")]);
    }

    #[test]
    fn unresolved_fk_names_table_row_column() {
        let cfg = two_table_config();
        let mut tables = BTreeMap::new();
        tables.insert(
            "paper".to_string(),
            &b"pid,title,venue_id\np1,On Things,v9\n"[..],
        );
        tables.insert("venue".to_string(), &b"vid,name\nv7,VLDB\n"[..]);
        let err = convert_relational(tables, &cfg).unwrap_err();
        match err {
            Error::UnresolvedForeignKey { table, row, column, .. } => {
                assert_eq!(table, "paper");
                assert_eq!(row, 2);
                assert_eq!(column, "venue_id");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_declared_column_is_config_error() {
        let cfg = RelationalSchemaConfig::parse(
            "table.person.id_column = id\ntable.person.attributes = name\n",
        )
        .unwrap();
        let mut tables = BTreeMap::new();
        tables.insert("person".to_string(), &b"id,fullname\np1,Ann\n"[..]);
        let err = convert_relational(tables, &cfg).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { .. }));
    }

    #[test]
    fn fk_target_must_be_declared() {
        let err = RelationalSchemaConfig::parse(
            "table.paper.id_column = pid\n\
             fk.paper.venue_id.target = venue\n\
             fk.paper.venue_id.label = published_in\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn node_count_matches_row_sum_and_edges_match_fk_cells() {
        let cfg = two_table_config();
        let mut tables = BTreeMap::new();
        tables.insert(
            "paper".to_string(),
            &b"pid,title,venue_id\np1,A,v7\np2,B,\np3,C,v7\n"[..],
        );
        tables.insert("venue".to_string(), &b"vid,name\nv7,VLDB\n"[..]);
        let g = convert_relational(tables, &cfg).unwrap();
        assert_eq!(g.node_count(), 4); // 3 papers + 1 venue
        assert_eq!(g.edge_count(), 2); // two non-empty FK cells
    }
}
