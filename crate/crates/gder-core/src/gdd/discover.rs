//! Level-wise discovery of linking rules over a pseudo-relation.
//!
//! The candidate space is a lattice: per constraint family (an attribute
//! compared between a variable pair, an optional constant comparison, or a
//! shared-relation check) either no constraint or one threshold from a finite
//! descending grid. A candidate is valid when every counting row it selects
//! is eid-equal and at least `min_support` rows remain. Search strengthens
//! candidates one step at a time, prunes when support dies (anti-monotone) or
//! validity is reached, and finally keeps only the weakest valid frontier, so
//! the result is a non-redundant antichain.
//!
//! Rows missing an eid on either designated variable never count: the
//! wildcard rule would otherwise turn every unlabeled row into evidence.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::gdd::distance::DistanceFn;
use crate::gdd::{measure_constraint, DistanceConstraint, EvalContext, Gdd};
use crate::pattern::pseudo::PseudoRelation;
use crate::pattern::GraphPattern;

/// Per-attribute discovery settings.
#[derive(Debug, Clone)]
pub struct AttributeSpec {
    pub name: String,
    pub func: DistanceFn,
    /// Thresholds, loosest first. Out-of-order input is sorted.
    pub grid: Vec<f64>,
    /// Constants to try as constant-constraints; empty disables CCs.
    pub cc_constants: Vec<String>,
}

impl AttributeSpec {
    pub fn normalized_edit(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            func: DistanceFn::NormalizedEdit,
            grid: vec![0.5, 0.4, 0.3, 0.2, 0.1, 0.0],
            cc_constants: Vec::new(),
        }
    }
}

/// Candidate space and designated eid pair for one scope.
#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    pub attributes: Vec<AttributeSpec>,
    /// Variable pairs to compare; defaults to just the eid pair.
    pub var_pairs: Vec<(String, String)>,
    pub eid_vars: (String, String),
    /// Relation labels to offer as shared-relation constraints.
    pub relation_labels: Vec<String>,
}

impl DiscoveryConfig {
    pub fn new(eid_vars: (impl Into<String>, impl Into<String>)) -> Self {
        DiscoveryConfig {
            attributes: Vec::new(),
            var_pairs: Vec::new(),
            eid_vars: (eid_vars.0.into(), eid_vars.1.into()),
            relation_labels: Vec::new(),
        }
    }

    pub fn with_attribute(mut self, spec: AttributeSpec) -> Self {
        self.attributes.push(spec);
        self
    }

    fn pairs(&self) -> Vec<(String, String)> {
        if self.var_pairs.is_empty() {
            vec![self.eid_vars.clone()]
        } else {
            self.var_pairs.clone()
        }
    }
}

struct Family {
    /// Grid thresholds, strictly loosest-to-tightest.
    grid: Vec<f64>,
    /// Measured distance per counting row.
    distances: Vec<f64>,
    /// Constraint builder for a chosen threshold.
    template: DistanceConstraint,
}

impl Family {
    fn constraint_at(&self, grid_idx: usize) -> DistanceConstraint {
        let mut c = self.template.clone();
        match &mut c {
            DistanceConstraint::ConstCmp { threshold, .. }
            | DistanceConstraint::VarCmp { threshold, .. } => *threshold = self.grid[grid_idx],
            _ => {}
        }
        c
    }
}

type State = Vec<Option<usize>>;

/// `a` is weaker than or equal to `b`: every constraint in `a` is present in
/// `b` with an equal or tighter threshold.
fn weaker_eq(a: &State, b: &State, families: &[Family]) -> bool {
    a.iter().zip(b).enumerate().all(|(f, (x, y))| match (x, y) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(i), Some(j)) => families[f].grid[*i] >= families[f].grid[*j],
    })
}

/// Discover all minimal valid LHS constraint sets with their supports.
pub fn discover_lhs_sets(
    pr: &PseudoRelation,
    config: &DiscoveryConfig,
    min_support: usize,
) -> Result<Vec<(Vec<DistanceConstraint>, u64)>> {
    let (ev1, ev2) = &config.eid_vars;
    for v in [ev1, ev2] {
        if !pr.has_column(v, "eid") {
            return Err(Error::Config(format!(
                "pseudo-relation has no eid column for designated variable {v}"
            )));
        }
    }

    // Counting rows: eid present on both designated variables.
    let counting: Vec<usize> = (0..pr.rows.len())
        .filter(|&i| pr.rows[i].eid(ev1).is_some() && pr.rows[i].eid(ev2).is_some())
        .collect();
    let eid_equal: Vec<bool> = counting
        .iter()
        .map(|&i| pr.rows[i].eid(ev1) == pr.rows[i].eid(ev2))
        .collect();

    let families = build_families(pr, config, &counting)?;
    if families.is_empty() || counting.is_empty() {
        return Ok(Vec::new());
    }

    let start: State = vec![None; families.len()];
    let mut queue: VecDeque<State> = VecDeque::from([start.clone()]);
    let mut visited: BTreeSet<State> = BTreeSet::from([start]);
    let mut emitted: Vec<(State, u64)> = Vec::new();

    while let Some(state) = queue.pop_front() {
        let selected: Vec<usize> = (0..counting.len())
            .filter(|&r| {
                state.iter().enumerate().all(|(f, slot)| match slot {
                    None => true,
                    Some(g) => families[f].distances[r] <= families[f].grid[*g],
                })
            })
            .collect();
        let support = selected.iter().filter(|&&r| eid_equal[r]).count();
        if support < min_support {
            continue; // strengthening only shrinks support
        }
        if selected.iter().all(|&r| eid_equal[r]) {
            emitted.push((state, support as u64));
            continue; // anything stronger is redundant
        }
        for f in 0..families.len() {
            let next_slot = match state[f] {
                None => Some(0),
                Some(g) if g + 1 < families[f].grid.len() => Some(g + 1),
                Some(_) => None,
            };
            if let Some(slot) = next_slot {
                let mut next = state.clone();
                next[f] = Some(slot);
                if visited.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }

    // Keep the weakest frontier only.
    let minimal: Vec<(State, u64)> = emitted
        .iter()
        .filter(|(s, _)| {
            !emitted
                .iter()
                .any(|(other, _)| other != s && weaker_eq(other, s, &families))
        })
        .cloned()
        .collect();

    let mut result: Vec<(Vec<DistanceConstraint>, u64)> = minimal
        .into_iter()
        .map(|(state, support)| {
            let lhs: Vec<DistanceConstraint> = state
                .iter()
                .enumerate()
                .filter_map(|(f, slot)| slot.map(|g| families[f].constraint_at(g)))
                .collect();
            (lhs, support)
        })
        .collect();
    result.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(a.0.len().cmp(&b.0.len()))
            .then_with(|| format!("{:?}", a.0).cmp(&format!("{:?}", b.0)))
    });
    result.dedup();
    Ok(result)
}

/// Discover full rules for a known scope.
pub fn discover_gdds(
    pr: &PseudoRelation,
    scope: &GraphPattern,
    config: &DiscoveryConfig,
    min_support: usize,
) -> Result<Vec<Gdd>> {
    let sets = discover_lhs_sets(pr, config, min_support)?;
    Ok(sets
        .into_iter()
        .map(|(lhs, support)| Gdd {
            scope: scope.clone(),
            lhs,
            eid_vars: config.eid_vars.clone(),
            support,
        })
        .collect())
}

fn build_families(
    pr: &PseudoRelation,
    config: &DiscoveryConfig,
    counting: &[usize],
) -> Result<Vec<Family>> {
    let mut families = Vec::new();
    let mut push = |template: DistanceConstraint, grid: Vec<f64>| -> Result<()> {
        let distances = counting
            .iter()
            .map(|&i| measure_constraint(&template, EvalContext::Row(&pr.rows[i])))
            .collect::<Result<Vec<f64>>>()?;
        families.push(Family {
            grid,
            distances,
            template,
        });
        Ok(())
    };

    for (v1, v2) in config.pairs() {
        for spec in &config.attributes {
            if !pr.has_column(&v1, &spec.name) || !pr.has_column(&v2, &spec.name) {
                continue;
            }
            let mut grid = spec.grid.clone();
            grid.sort_by(|a, b| b.partial_cmp(a).expect("finite thresholds"));
            grid.dedup();
            if grid.is_empty() {
                continue;
            }
            push(
                DistanceConstraint::same_attr_vc(
                    v1.clone(),
                    v2.clone(),
                    spec.name.clone(),
                    spec.func,
                    grid[0],
                ),
                grid.clone(),
            )?;
            for constant in &spec.cc_constants {
                for var in [&v1, &v2] {
                    push(
                        DistanceConstraint::ConstCmp {
                            var: var.clone(),
                            attr: spec.name.clone(),
                            constant: constant.clone(),
                            func: spec.func,
                            threshold: grid[0],
                        },
                        grid.clone(),
                    )?;
                }
            }
        }
        for rela in &config.relation_labels {
            push(
                DistanceConstraint::RelVars {
                    var1: v1.clone(),
                    var2: v2.clone(),
                    rela: rela.clone(),
                },
                vec![0.0],
            )?;
        }
    }
    Ok(families)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pattern::matching::match_pattern;
    use crate::pattern::pseudo::to_pseudo_relation;
    use std::collections::BTreeMap;

    fn names_config() -> DiscoveryConfig {
        DiscoveryConfig::new(("x", "x2"))
            .with_attribute(AttributeSpec::normalized_edit("FIRSTNAME"))
            .with_attribute(AttributeSpec::normalized_edit("LASTNAME"))
            .with_attribute(AttributeSpec::normalized_edit("PHONE"))
    }

    fn toy_relation() -> PseudoRelation {
        let g = fixtures::toy_graph();
        let matches = match_pattern(&g, &fixtures::shared_ip_pattern());
        let attrs: std::collections::BTreeSet<String> = ["FIRSTNAME", "LASTNAME", "PHONE"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        to_pseudo_relation(&g, &matches, &attrs)
    }

    #[test]
    fn toy_discovery_emits_valid_minimal_rules() {
        let pr = toy_relation();
        let rules = discover_gdds(&pr, &fixtures::shared_ip_pattern(), &names_config(), 1).unwrap();
        assert!(!rules.is_empty());
        // every emitted rule: zero counterexamples among eid-complete rows
        for rule in &rules {
            for row in &pr.rows {
                if row.eid("x").is_none() || row.eid("x2").is_none() {
                    continue;
                }
                if rule.satisfies_lhs(EvalContext::Row(row)).unwrap() {
                    assert_eq!(row.eid("x"), row.eid("x2"), "counterexample for {rule}");
                }
            }
        }
        // a single-constraint phone rule comes out at the weakest valid grid
        // step (0.1: the distinct-person phones sit at distance 0.125)
        assert!(rules.iter().any(|r| {
            r.lhs.len() == 1
                && matches!(
                    &r.lhs[0],
                    DistanceConstraint::VarCmp { attr1, threshold, .. }
                        if attr1 == "PHONE" && (*threshold - 0.1).abs() < 1e-9
                )
        }));
    }

    #[test]
    fn min_support_above_rows_discovers_nothing() {
        let pr = toy_relation();
        let rules =
            discover_gdds(&pr, &fixtures::shared_ip_pattern(), &names_config(), pr.len() + 1)
                .unwrap();
        assert!(rules.is_empty());
    }

    #[test]
    fn missing_eid_column_is_config_error() {
        let pr = PseudoRelation::synthetic(&["a", "b"], &["N"], vec![]);
        let cfg = DiscoveryConfig::new(("x", "x2"))
            .with_attribute(AttributeSpec::normalized_edit("N"));
        assert!(matches!(
            discover_lhs_sets(&pr, &cfg, 1).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn inconsistent_table_discovers_nothing() {
        // same values everywhere but different eids: no LHS reaches validity
        let mk_row = |eid1: &str, eid2: &str| {
            let mut cells = BTreeMap::new();
            cells.insert(("x".to_string(), "N".to_string()), "same".to_string());
            cells.insert(("x2".to_string(), "N".to_string()), "same".to_string());
            cells.insert(("x".to_string(), "eid".to_string()), eid1.to_string());
            cells.insert(("x2".to_string(), "eid".to_string()), eid2.to_string());
            cells
        };
        let pr = PseudoRelation::synthetic(
            &["x", "x2"],
            &["N"],
            vec![mk_row("e1", "e1"), mk_row("e2", "e3")],
        );
        let cfg = DiscoveryConfig::new(("x", "x2"))
            .with_attribute(AttributeSpec::normalized_edit("N"));
        assert!(discover_lhs_sets(&pr, &cfg, 1).unwrap().is_empty());
    }

    #[test]
    fn wildcard_eid_rows_do_not_poison_validity() {
        // one labelled matching row, one unlabeled row with identical values:
        // the unlabeled row must not count as a counterexample or as support
        let mut matching = BTreeMap::new();
        matching.insert(("x".to_string(), "N".to_string()), "ann".to_string());
        matching.insert(("x2".to_string(), "N".to_string()), "ann".to_string());
        matching.insert(("x".to_string(), "eid".to_string()), "e1".to_string());
        matching.insert(("x2".to_string(), "eid".to_string()), "e1".to_string());
        let mut unlabeled = BTreeMap::new();
        unlabeled.insert(("x".to_string(), "N".to_string()), "ann".to_string());
        unlabeled.insert(("x2".to_string(), "N".to_string()), "ann".to_string());
        let pr = PseudoRelation::synthetic(&["x", "x2"], &["N"], vec![matching, unlabeled]);
        let cfg = DiscoveryConfig::new(("x", "x2"))
            .with_attribute(AttributeSpec::normalized_edit("N"));
        let sets = discover_lhs_sets(&pr, &cfg, 1).unwrap();
        assert!(!sets.is_empty());
        assert!(sets.iter().all(|(_, support)| *support == 1));
    }
}
