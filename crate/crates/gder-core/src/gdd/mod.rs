//! Differential dependencies over graph patterns.
//!
//! A rule pairs a pattern scope with a set of distance constraints on the
//! pattern variables (the LHS) and an entity-id equality on a designated
//! variable pair (the RHS). A candidate node pair is linked when some rule's
//! scope matches around it and every LHS constraint holds.

pub mod discover;
pub mod distance;

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use discover::{discover_gdds, AttributeSpec, DiscoveryConfig};
pub use distance::{levenshtein, normalized_edit, DistanceFn};

use crate::error::{Error, Result};
use crate::graph::PropertyGraph;
use crate::pattern::pseudo::{PseudoRow, WILDCARD};
use crate::pattern::{Assignment, GraphPattern};

/// One distance constraint on pattern variables.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub enum DistanceConstraint {
    /// `δ_A(x.A, c) <= t` — compare an attribute against a constant.
    ConstCmp {
        var: String,
        attr: String,
        constant: String,
        func: DistanceFn,
        threshold: f64,
    },
    /// `δ_{A1 A2}(x.A1, x2.A2) <= t` — compare attributes of two variables.
    VarCmp {
        var1: String,
        attr1: String,
        var2: String,
        attr2: String,
        func: DistanceFn,
        threshold: f64,
    },
    /// `δ_eid(x.eid, c) = 0` — the variable's entity id is the constant.
    EidConst { var: String, constant: String },
    /// `δ_eid(x.eid, x2.eid) = 0` — both entity ids present and equal.
    EidVars { var1: String, var2: String },
    /// `δ_≡(x.rela, c) = 0` — x has relation `rela` ending at node `c`.
    RelConst {
        var: String,
        rela: String,
        target: String,
    },
    /// `δ_≡(x.rela, x2.rela) = 0` — both have `rela` ending at a shared node.
    RelVars {
        var1: String,
        var2: String,
        rela: String,
    },
}

impl DistanceConstraint {
    /// Same-attribute variable comparison, the common rule shape.
    pub fn same_attr_vc(
        var1: impl Into<String>,
        var2: impl Into<String>,
        attr: impl Into<String>,
        func: DistanceFn,
        threshold: f64,
    ) -> Self {
        let attr = attr.into();
        DistanceConstraint::VarCmp {
            var1: var1.into(),
            attr1: attr.clone(),
            var2: var2.into(),
            attr2: attr,
            func,
            threshold,
        }
    }
}

impl fmt::Display for DistanceConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceConstraint::ConstCmp {
                var,
                attr,
                constant,
                threshold,
                ..
            } => write!(f, "δ_{attr}({var}, {constant:?}) ≤ {threshold}"),
            DistanceConstraint::VarCmp {
                var1,
                attr1,
                var2,
                attr2,
                threshold,
                ..
            } => {
                if attr1 == attr2 {
                    write!(f, "δ_{attr1}({var1}, {var2}) ≤ {threshold}")
                } else {
                    write!(f, "δ_{attr1}:{attr2}({var1}.{attr1}, {var2}.{attr2}) ≤ {threshold}")
                }
            }
            DistanceConstraint::EidConst { var, constant } => {
                write!(f, "δ_eid({var}, {constant:?}) = 0")
            }
            DistanceConstraint::EidVars { var1, var2 } => {
                write!(f, "δ_eid({var1}, {var2}) = 0")
            }
            DistanceConstraint::RelConst { var, rela, target } => {
                write!(f, "δ_≡({var}.{rela}, {target}) = 0")
            }
            DistanceConstraint::RelVars { var1, var2, rela } => {
                write!(f, "δ_≡({var1}.{rela}, {var2}.{rela}) = 0")
            }
        }
    }
}

/// Where constraint operands are resolved: a pseudo-relation row, or a graph
/// with a concrete variable assignment.
#[derive(Clone, Copy)]
pub enum EvalContext<'a> {
    Row(&'a PseudoRow),
    Graph {
        graph: &'a PropertyGraph,
        assignment: &'a Assignment,
    },
}

impl<'a> EvalContext<'a> {
    /// Attribute value as a string; missing graph attributes read as the
    /// wildcard, missing relation columns are an error.
    fn value(&self, var: &str, attr: &str) -> Result<String> {
        match self {
            EvalContext::Row(row) => row
                .cell(var, attr)
                .map(|s| s.to_string())
                .ok_or_else(|| Error::UnknownAttribute(format!("{var}.{attr}"))),
            EvalContext::Graph { graph, assignment } => {
                let id = assignment
                    .get(var)
                    .ok_or_else(|| Error::Eval(format!("variable {var} unassigned")))?;
                let node = graph
                    .node(id)
                    .ok_or_else(|| Error::NodeNotFound(id.to_string()))?;
                Ok(node
                    .attr(attr)
                    .map(|v| v.raw.clone())
                    .unwrap_or_else(|| WILDCARD.to_string()))
            }
        }
    }

    fn eid(&self, var: &str) -> Result<Option<String>> {
        match self {
            EvalContext::Row(row) => Ok(row.eid(var).map(|s| s.to_string())),
            EvalContext::Graph { graph, assignment } => {
                let id = assignment
                    .get(var)
                    .ok_or_else(|| Error::Eval(format!("variable {var} unassigned")))?;
                let node = graph
                    .node(id)
                    .ok_or_else(|| Error::NodeNotFound(id.to_string()))?;
                Ok(node.eid.clone())
            }
        }
    }

    fn relation_targets(&self, var: &str, rela: &str) -> Result<Vec<String>> {
        match self {
            EvalContext::Row(row) => {
                if let Some(ids) = row.relation_targets(var, rela) {
                    Ok(ids.iter().map(|i| i.to_string()).collect())
                } else if row.assignment.is_some() {
                    // rows built from a graph carry full relation maps; a
                    // missing entry just means no such relation
                    Ok(Vec::new())
                } else {
                    Err(Error::Eval(format!(
                        "row carries no relation data for {var}.{rela}"
                    )))
                }
            }
            EvalContext::Graph { graph, assignment } => {
                let id = assignment
                    .get(var)
                    .ok_or_else(|| Error::Eval(format!("variable {var} unassigned")))?;
                Ok(graph
                    .relation_targets(id, rela)
                    .into_iter()
                    .map(|i| i.to_string())
                    .collect())
            }
        }
    }
}

/// Measured distance for a constraint: the raw function value for attribute
/// comparisons, 0/1 for eid and relation forms.
pub fn measure_constraint(c: &DistanceConstraint, ctx: EvalContext<'_>) -> Result<f64> {
    match c {
        DistanceConstraint::ConstCmp {
            var,
            attr,
            constant,
            func,
            ..
        } => func.apply(&ctx.value(var, attr)?, constant),
        DistanceConstraint::VarCmp {
            var1,
            attr1,
            var2,
            attr2,
            func,
            ..
        } => func.apply(&ctx.value(var1, attr1)?, &ctx.value(var2, attr2)?),
        DistanceConstraint::EidConst { var, constant } => {
            Ok(if ctx.eid(var)?.as_deref() == Some(constant.as_str()) {
                0.0
            } else {
                1.0
            })
        }
        DistanceConstraint::EidVars { var1, var2 } => {
            let a = ctx.eid(var1)?;
            let b = ctx.eid(var2)?;
            Ok(match (a, b) {
                (Some(x), Some(y)) if x == y => 0.0,
                _ => 1.0,
            })
        }
        DistanceConstraint::RelConst { var, rela, target } => {
            Ok(if ctx.relation_targets(var, rela)?.contains(target) {
                0.0
            } else {
                1.0
            })
        }
        DistanceConstraint::RelVars { var1, var2, rela } => {
            let a = ctx.relation_targets(var1, rela)?;
            let b = ctx.relation_targets(var2, rela)?;
            Ok(if a.iter().any(|t| b.contains(t)) { 0.0 } else { 1.0 })
        }
    }
}

/// True iff the measured distance is within the constraint's threshold.
pub fn eval_constraint(c: &DistanceConstraint, ctx: EvalContext<'_>) -> Result<bool> {
    let threshold = match c {
        DistanceConstraint::ConstCmp { threshold, .. }
        | DistanceConstraint::VarCmp { threshold, .. } => *threshold,
        _ => 0.0,
    };
    Ok(measure_constraint(c, ctx)? <= threshold)
}

/// Linking rule: scope pattern, LHS constraints, designated eid pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Gdd {
    pub scope: GraphPattern,
    pub lhs: Vec<DistanceConstraint>,
    /// Ordered variable pair named by the RHS eid-equality.
    pub eid_vars: (String, String),
    pub support: u64,
}

impl Gdd {
    /// The implied RHS constraint `δ_eid(x, x2) = 0`.
    pub fn rhs(&self) -> DistanceConstraint {
        DistanceConstraint::EidVars {
            var1: self.eid_vars.0.clone(),
            var2: self.eid_vars.1.clone(),
        }
    }

    /// Conjunction of the LHS over a row or assignment; empty LHS is true.
    pub fn satisfies_lhs(&self, ctx: EvalContext<'_>) -> Result<bool> {
        for c in &self.lhs {
            if !eval_constraint(c, ctx)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Stable serialization used for deterministic tie-breaks and reports.
    pub fn display_string(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for Gdd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = self.scope.vars().join(", ");
        let lhs = if self.lhs.is_empty() {
            "⊤".to_string()
        } else {
            self.lhs
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join(" ∧ ")
        };
        write!(
            f,
            "(Q[{vars}], {lhs} → δ_eid({}, {}) = 0)",
            self.eid_vars.0, self.eid_vars.1
        )
    }
}

/// Sort by support descending, then fewer LHS constraints, then display
/// string, so the order is total and deterministic.
pub fn rank_rules(mut rules: Vec<Gdd>) -> Vec<Gdd> {
    rules.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then(a.lhs.len().cmp(&b.lhs.len()))
            .then_with(|| a.display_string().cmp(&b.display_string()))
    });
    rules
}

// --- rule file format ---------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ConstraintRecord {
    form: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    var: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vars: Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attrs: Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    #[serde(rename = "fn", skip_serializing_if = "Option::is_none")]
    func: Option<DistanceFn>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RhsRecord {
    eid_vars: [String; 2],
}

#[derive(Serialize, Deserialize)]
struct RuleRecord {
    scope: serde_json::Value,
    lhs: Vec<ConstraintRecord>,
    rhs: RhsRecord,
    support: u64,
}

fn constraint_to_record(c: &DistanceConstraint) -> ConstraintRecord {
    let mut rec = ConstraintRecord {
        form: String::new(),
        var: None,
        vars: None,
        attr: None,
        attrs: None,
        rel: None,
        value: None,
        func: None,
        t: None,
    };
    match c {
        DistanceConstraint::ConstCmp {
            var,
            attr,
            constant,
            func,
            threshold,
        } => {
            rec.form = "cc".into();
            rec.var = Some(var.clone());
            rec.attr = Some(attr.clone());
            rec.value = Some(constant.clone());
            rec.func = Some(*func);
            rec.t = Some(*threshold);
        }
        DistanceConstraint::VarCmp {
            var1,
            attr1,
            var2,
            attr2,
            func,
            threshold,
        } => {
            rec.form = "vc".into();
            rec.vars = Some([var1.clone(), var2.clone()]);
            if attr1 == attr2 {
                rec.attr = Some(attr1.clone());
            } else {
                rec.attrs = Some([attr1.clone(), attr2.clone()]);
            }
            rec.func = Some(*func);
            rec.t = Some(*threshold);
        }
        DistanceConstraint::EidConst { var, constant } => {
            rec.form = "eid_cc".into();
            rec.var = Some(var.clone());
            rec.value = Some(constant.clone());
        }
        DistanceConstraint::EidVars { var1, var2 } => {
            rec.form = "eid_vc".into();
            rec.vars = Some([var1.clone(), var2.clone()]);
        }
        DistanceConstraint::RelConst { var, rela, target } => {
            rec.form = "rel_cc".into();
            rec.var = Some(var.clone());
            rec.rel = Some(rela.clone());
            rec.value = Some(target.clone());
        }
        DistanceConstraint::RelVars { var1, var2, rela } => {
            rec.form = "rel_vc".into();
            rec.vars = Some([var1.clone(), var2.clone()]);
            rec.rel = Some(rela.clone());
        }
    }
    rec
}

fn record_to_constraint(rec: ConstraintRecord) -> Result<DistanceConstraint> {
    let need = |opt: Option<String>, what: &str| {
        opt.ok_or_else(|| Error::Config(format!("rule constraint missing {what}")))
    };
    let need_vars = |opt: Option<[String; 2]>| {
        opt.ok_or_else(|| Error::Config("rule constraint missing vars".into()))
    };
    match rec.form.as_str() {
        "cc" => Ok(DistanceConstraint::ConstCmp {
            var: need(rec.var, "var")?,
            attr: need(rec.attr, "attr")?,
            constant: need(rec.value, "value")?,
            func: rec.func.unwrap_or(DistanceFn::NormalizedEdit),
            threshold: rec.t.unwrap_or(0.0),
        }),
        "vc" => {
            let [var1, var2] = need_vars(rec.vars)?;
            let (attr1, attr2) = match (rec.attr, rec.attrs) {
                (Some(a), None) => (a.clone(), a),
                (None, Some([a1, a2])) => (a1, a2),
                _ => return Err(Error::Config("vc constraint needs attr or attrs".into())),
            };
            Ok(DistanceConstraint::VarCmp {
                var1,
                attr1,
                var2,
                attr2,
                func: rec.func.unwrap_or(DistanceFn::NormalizedEdit),
                threshold: rec.t.unwrap_or(0.0),
            })
        }
        "eid_cc" => Ok(DistanceConstraint::EidConst {
            var: need(rec.var, "var")?,
            constant: need(rec.value, "value")?,
        }),
        "eid_vc" => {
            let [var1, var2] = need_vars(rec.vars)?;
            Ok(DistanceConstraint::EidVars { var1, var2 })
        }
        "rel_cc" => Ok(DistanceConstraint::RelConst {
            var: need(rec.var, "var")?,
            rela: need(rec.rel, "rel")?,
            target: need(rec.value, "value")?,
        }),
        "rel_vc" => {
            let [var1, var2] = need_vars(rec.vars)?;
            Ok(DistanceConstraint::RelVars {
                var1,
                var2,
                rela: need(rec.rel, "rel")?,
            })
        }
        other => Err(Error::Config(format!("unknown constraint form {other}"))),
    }
}

/// Write rules as the JSON array format.
pub fn save_rules<W: Write>(rules: &[Gdd], sink: W) -> Result<()> {
    let records: Vec<RuleRecord> = rules
        .iter()
        .map(|r| RuleRecord {
            scope: r.scope.to_json_value(),
            lhs: r.lhs.iter().map(constraint_to_record).collect(),
            rhs: RhsRecord {
                eid_vars: [r.eid_vars.0.clone(), r.eid_vars.1.clone()],
            },
            support: r.support,
        })
        .collect();
    serde_json::to_writer_pretty(sink, &records)?;
    Ok(())
}

/// Read rules from the JSON array format, validating scopes and eid vars.
pub fn load_rules<R: Read>(reader: R) -> Result<Vec<Gdd>> {
    let records: Vec<RuleRecord> = serde_json::from_reader(reader)?;
    let mut rules = Vec::with_capacity(records.len());
    for rec in records {
        let scope = GraphPattern::from_json_value(&rec.scope)?;
        let [v1, v2] = rec.rhs.eid_vars;
        for v in [&v1, &v2] {
            if scope.var_label(v).is_none() {
                return Err(Error::Config(format!(
                    "rhs eid var {v} is not a scope variable"
                )));
            }
        }
        let lhs = rec
            .lhs
            .into_iter()
            .map(record_to_constraint)
            .collect::<Result<Vec<_>>>()?;
        rules.push(Gdd {
            scope,
            lhs,
            eid_vars: (v1, v2),
            support: rec.support,
        });
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pattern::matching::match_pattern;
    use crate::pattern::pseudo::to_pseudo_relation;
    use std::collections::BTreeSet;

    fn toy_relation() -> crate::pattern::pseudo::PseudoRelation {
        let g = fixtures::toy_graph();
        let matches = match_pattern(&g, &fixtures::shared_ip_pattern());
        let attrs: BTreeSet<String> = ["FIRSTNAME", "LASTNAME", "PHONE"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        to_pseudo_relation(&g, &matches, &attrs)
    }

    fn row_for<'a>(
        pr: &'a crate::pattern::pseudo::PseudoRelation,
        first: &str,
    ) -> &'a PseudoRow {
        pr.rows
            .iter()
            .find(|r| r.cell("x", "FIRSTNAME") == Some(first))
            .expect("row present")
    }

    #[test]
    fn exact_lastname_match_within_zero_threshold() {
        let pr = toy_relation();
        let row = row_for(&pr, "Leese");
        let c = DistanceConstraint::same_attr_vc("x", "x2", "LASTNAME", DistanceFn::NormalizedEdit, 0.0);
        assert!(eval_constraint(&c, EvalContext::Row(row)).unwrap());
    }

    #[test]
    fn edit_ratio_respects_threshold_boundaries() {
        let pr = toy_relation();
        let row = row_for(&pr, "Leese"); // FIRSTNAME pair Leese/Liese = 0.2
        let loose = DistanceConstraint::same_attr_vc("x", "x2", "FIRSTNAME", DistanceFn::NormalizedEdit, 0.24);
        let tight = DistanceConstraint::same_attr_vc("x", "x2", "FIRSTNAME", DistanceFn::NormalizedEdit, 0.1);
        assert!(eval_constraint(&loose, EvalContext::Row(row)).unwrap());
        assert!(!eval_constraint(&tight, EvalContext::Row(row)).unwrap());
    }

    #[test]
    fn wildcard_operand_always_satisfies() {
        let pr = toy_relation();
        // the ip var y has no FIRSTNAME: wildcard cell
        let c = DistanceConstraint::same_attr_vc("x", "y", "FIRSTNAME", DistanceFn::NormalizedEdit, 0.0);
        for row in &pr.rows {
            assert!(eval_constraint(&c, EvalContext::Row(row)).unwrap());
        }
    }

    #[test]
    fn unknown_attribute_errors_by_name() {
        let pr = toy_relation();
        let c = DistanceConstraint::same_attr_vc("x", "x2", "NICKNAME", DistanceFn::Exact, 0.0);
        let err = eval_constraint(&c, EvalContext::Row(&pr.rows[0])).unwrap_err();
        match err {
            Error::UnknownAttribute(name) => assert!(name.contains("NICKNAME")),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn eid_constraint_needs_presence_and_equality() {
        let pr = toy_relation();
        let c = DistanceConstraint::EidVars {
            var1: "x".into(),
            var2: "x2".into(),
        };
        let dup_row = row_for(&pr, "Leese");
        assert!(eval_constraint(&c, EvalContext::Row(dup_row)).unwrap());
        let distinct = row_for(&pr, "Tarrant"); // v2/v5, different eids
        assert!(!eval_constraint(&c, EvalContext::Row(distinct)).unwrap());
    }

    #[test]
    fn rel_constraint_shares_endpoint() {
        let pr = toy_relation();
        let c = DistanceConstraint::RelVars {
            var1: "x".into(),
            var2: "x2".into(),
            rela: "uses".into(),
        };
        // every row shares the ip by construction of the scope
        for row in &pr.rows {
            assert!(eval_constraint(&c, EvalContext::Row(row)).unwrap());
        }
        let watched = DistanceConstraint::RelVars {
            var1: "x".into(),
            var2: "x2".into(),
            rela: "watched".into(),
        };
        // v10/v11 watched nothing
        let row = row_for(&pr, "Mally");
        assert!(!eval_constraint(&watched, EvalContext::Row(row)).unwrap());
    }

    #[test]
    fn lhs_conjunction_and_empty_lhs() {
        let pr = toy_relation();
        let rules = fixtures::toy_rules();
        let name_rule = &rules[1];
        assert!(name_rule.satisfies_lhs(EvalContext::Row(row_for(&pr, "Leese"))).unwrap());
        assert!(!name_rule.satisfies_lhs(EvalContext::Row(row_for(&pr, "Mally"))).unwrap());
        let empty = Gdd {
            scope: fixtures::shared_ip_pattern(),
            lhs: vec![],
            eid_vars: ("x".into(), "x2".into()),
            support: 0,
        };
        for row in &pr.rows {
            assert!(empty.satisfies_lhs(EvalContext::Row(row)).unwrap());
        }
    }

    #[test]
    fn vc_same_attribute_eval_is_symmetric() {
        let pr = toy_relation();
        for row in &pr.rows {
            for t in [0.0, 0.2, 0.5] {
                let ab = DistanceConstraint::same_attr_vc("x", "x2", "FIRSTNAME", DistanceFn::NormalizedEdit, t);
                let ba = DistanceConstraint::same_attr_vc("x2", "x", "FIRSTNAME", DistanceFn::NormalizedEdit, t);
                assert_eq!(
                    eval_constraint(&ab, EvalContext::Row(row)).unwrap(),
                    eval_constraint(&ba, EvalContext::Row(row)).unwrap()
                );
            }
        }
    }

    #[test]
    fn ranking_orders_by_support_then_size() {
        let scope = fixtures::shared_ip_pattern();
        let mk = |support: u64, n: usize| Gdd {
            scope: scope.clone(),
            lhs: (0..n)
                .map(|i| {
                    DistanceConstraint::same_attr_vc(
                        "x",
                        "x2",
                        format!("A{i}"),
                        DistanceFn::Exact,
                        0.0,
                    )
                })
                .collect(),
            eid_vars: ("x".into(), "x2".into()),
            support,
        };
        let ranked = rank_rules(vec![mk(5, 1), mk(9, 3), mk(9, 2)]);
        let key: Vec<(u64, usize)> = ranked.iter().map(|r| (r.support, r.lhs.len())).collect();
        assert_eq!(key, vec![(9, 2), (9, 3), (5, 1)]);
    }

    #[test]
    fn rank_single_rule_is_identity() {
        let rules = vec![fixtures::toy_rules().remove(0)];
        let ranked = rank_rules(rules.clone());
        assert_eq!(ranked, rules);
    }

    #[test]
    fn rule_file_round_trip() {
        let rules = fixtures::toy_rules();
        let mut buf = Vec::new();
        save_rules(&rules, &mut buf).unwrap();
        let back = load_rules(&buf[..]).unwrap();
        assert_eq!(rules, back);
    }

    #[test]
    fn rule_display_uses_delta_notation() {
        let rules = fixtures::toy_rules();
        let text = rules[1].to_string();
        assert!(text.contains("δ_LASTNAME(x, x2) ≤ 0.25"));
        assert!(text.contains("→ δ_eid(x, x2) = 0"));
    }
}
