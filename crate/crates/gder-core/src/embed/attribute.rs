//! Attribute-space embedding: tripartite graph, token walks, SIF averaging,
//! and auto-encoder compression.
//!
//! Attribute values of the rule-relevant attribute set are tokenized
//! (case-folded, split on non-alphanumeric runs) into a node-token-attribute
//! tripartite graph. Walks alternate classes entity-token-attribute-token-...
//! and feed the skip-gram trainer with tokens as the only centers. Token
//! vectors are averaged per node with smoothed-inverse-frequency weights, and
//! a small auto-encoder compresses the averages into the final node vectors.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::autoencoder::{train_autoencoder, AutoEncoder};
use crate::embed::corpus::{TrainConfig, WalkCorpus};
use crate::embed::skipgram::train_skipgram;
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::gdd::{DistanceConstraint, Gdd};
use crate::graph::{Node, NodeId, PropertyGraph};
use crate::scalar::Real;

/// Node-token-attribute tripartite graph with edge multiplicities.
#[derive(Debug, Clone)]
pub struct TripartiteGraph {
    /// The attribute set the tokens were drawn from.
    pub attrs: Vec<String>,
    entities: Vec<NodeId>,
    tokens: Vec<String>,
    // weighted adjacency, both directions
    ent_tok: Vec<Vec<(usize, u32)>>,
    tok_ent: Vec<Vec<(usize, u32)>>,
    tok_attr: Vec<Vec<(usize, u32)>>,
    attr_tok: Vec<Vec<(usize, u32)>>,
}

/// Case-folded alphanumeric token runs of a value.
pub fn tokenize(value: &str) -> Vec<String> {
    value
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Attributes named anywhere in the rules' LHS constraints.
pub fn rule_attribute_set(rules: &[Gdd]) -> BTreeSet<String> {
    let mut attrs = BTreeSet::new();
    for rule in rules {
        for c in &rule.lhs {
            match c {
                DistanceConstraint::ConstCmp { attr, .. } => {
                    attrs.insert(attr.clone());
                }
                DistanceConstraint::VarCmp { attr1, attr2, .. } => {
                    attrs.insert(attr1.clone());
                    attrs.insert(attr2.clone());
                }
                _ => {}
            }
        }
    }
    attrs
}

/// Build the tripartite graph over the rules' attribute set; with no rules
/// (or rules naming no attributes) every attribute in the graph is used.
pub fn build_tripartite(graph: &PropertyGraph, rules: &[Gdd]) -> TripartiteGraph {
    let mut attrs: Vec<String> = rule_attribute_set(rules).into_iter().collect();
    if attrs.is_empty() {
        let all: BTreeSet<String> = graph
            .nodes()
            .flat_map(|n| n.attr_names().map(str::to_string))
            .collect();
        attrs = all.into_iter().collect();
    }
    let attr_index: BTreeMap<&str, usize> = attrs
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();

    let entities: Vec<NodeId> = graph.nodes().map(|n| n.id.clone()).collect();
    let mut tokens: Vec<String> = Vec::new();
    let mut token_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut ent_tok_counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    let mut tok_attr_counts: BTreeMap<(usize, usize), u32> = BTreeMap::new();

    for (e, id) in entities.iter().enumerate() {
        let node = graph.node(id).expect("listed node exists");
        for (name, value) in node.attrs() {
            let Some(&a) = attr_index.get(name.as_str()) else {
                continue;
            };
            for token in tokenize(&value.raw) {
                let t = *token_index.entry(token.clone()).or_insert_with(|| {
                    tokens.push(token.clone());
                    tokens.len() - 1
                });
                *ent_tok_counts.entry((e, t)).or_default() += 1;
                *tok_attr_counts.entry((t, a)).or_default() += 1;
            }
        }
    }

    let mut ent_tok = vec![Vec::new(); entities.len()];
    let mut tok_ent = vec![Vec::new(); tokens.len()];
    for ((e, t), c) in ent_tok_counts {
        ent_tok[e].push((t, c));
        tok_ent[t].push((e, c));
    }
    let mut tok_attr = vec![Vec::new(); tokens.len()];
    let mut attr_tok = vec![Vec::new(); attrs.len()];
    for ((t, a), c) in tok_attr_counts {
        tok_attr[t].push((a, c));
        attr_tok[a].push((t, c));
    }

    TripartiteGraph {
        attrs,
        entities,
        tokens,
        ent_tok,
        tok_ent,
        tok_attr,
        attr_tok,
    }
}

impl TripartiteGraph {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Tokens of one node's relevant attribute values, with repeats.
    pub fn node_tokens(&self, node: &Node) -> Vec<String> {
        let mut out = Vec::new();
        for (name, value) in node.attrs() {
            if self.attrs.iter().any(|a| a == name) {
                out.extend(tokenize(&value.raw));
            }
        }
        out
    }

    /// Relative token occurrence frequencies (they sum to 1).
    pub fn token_frequencies(&self) -> BTreeMap<String, f64> {
        let totals: Vec<u64> = self
            .tok_ent
            .iter()
            .map(|edges| edges.iter().map(|(_, c)| u64::from(*c)).sum())
            .collect();
        let grand: u64 = totals.iter().sum();
        if grand == 0 {
            return BTreeMap::new();
        }
        self.tokens
            .iter()
            .zip(&totals)
            .map(|(t, c)| (t.clone(), *c as f64 / grand as f64))
            .collect()
    }

    fn weighted_pick<'a>(
        edges: &'a [(usize, u32)],
        rng: &mut ChaCha8Rng,
    ) -> Option<&'a (usize, u32)> {
        if edges.is_empty() {
            return None;
        }
        let total: u64 = edges.iter().map(|(_, c)| u64::from(*c)).sum();
        let mut x = rng.random_range(0..total);
        for edge in edges {
            let c = u64::from(edge.1);
            if x < c {
                return Some(edge);
            }
            x -= c;
        }
        edges.last()
    }

    /// Class-alternating walks (entity, token, attribute, token, entity, ...)
    /// from every entity, weighted by edge multiplicity.
    pub fn walks(&self, cfg: &TrainConfig) -> WalkCorpus {
        let mut corpus = WalkCorpus::new();
        for (e, id) in self.entities.iter().enumerate() {
            for rep in 0..cfg.walks_per_node {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    cfg.seed
                        .wrapping_mul(0x9e3779b97f4a7c15)
                        .wrapping_add((e as u64) << 20)
                        .wrapping_add(rep as u64),
                );
                // positions cycle entity(0) token(1) attr(2) token(3)
                let mut seq: Vec<(String, String, bool)> =
                    vec![(format!("ent::{id}"), "entity".to_string(), false)];
                let mut cur_entity = e;
                let mut cur_token = usize::MAX;
                let mut cur_attr = usize::MAX;
                'walk: for pos in 1..cfg.walk_length {
                    match pos % 4 {
                        1 | 3 => {
                            // into a token, from an entity (1) or attribute (3)
                            let edges = if pos % 4 == 1 {
                                &self.ent_tok[cur_entity]
                            } else {
                                &self.attr_tok[cur_attr]
                            };
                            match Self::weighted_pick(edges, &mut rng) {
                                Some(&(t, _)) => {
                                    cur_token = t;
                                    seq.push((
                                        self.tokens[t].clone(),
                                        "token".to_string(),
                                        true,
                                    ));
                                }
                                None => break 'walk,
                            }
                        }
                        2 => match Self::weighted_pick(&self.tok_attr[cur_token], &mut rng) {
                            Some(&(a, _)) => {
                                cur_attr = a;
                                seq.push((
                                    format!("attr::{}", self.attrs[a]),
                                    "attribute".to_string(),
                                    false,
                                ));
                            }
                            None => break 'walk,
                        },
                        _ => match Self::weighted_pick(&self.tok_ent[cur_token], &mut rng) {
                            Some(&(next_e, _)) => {
                                cur_entity = next_e;
                                seq.push((
                                    format!("ent::{}", self.entities[next_e]),
                                    "entity".to_string(),
                                    false,
                                ));
                            }
                            None => break 'walk,
                        },
                    }
                }
                corpus.push_sequence(
                    seq.iter().map(|(k, g, c)| (k.as_str(), g.as_str(), *c)),
                    "tripartite",
                );
            }
        }
        corpus
    }
}

/// Token vectors learnt from tripartite walks.
pub fn token_embeddings<S: Real>(
    tg: &TripartiteGraph,
    cfg: &TrainConfig,
) -> Result<EmbeddingTable<S>> {
    if tg.token_count() == 0 {
        return Err(Error::Embedding(
            "tripartite graph has no tokens to embed".into(),
        ));
    }
    let corpus = tg.walks(cfg);
    train_skipgram(&corpus, cfg)
}

/// Smoothed-inverse-frequency weighting configuration.
#[derive(Debug, Clone)]
pub struct SifConfig {
    pub smoothing: f64,
    pub frequencies: BTreeMap<String, f64>,
}

impl SifConfig {
    pub fn from_tripartite(tg: &TripartiteGraph) -> Self {
        SifConfig {
            smoothing: 1e-3,
            frequencies: tg.token_frequencies(),
        }
    }

    fn weight(&self, token: &str) -> f64 {
        let p = self.frequencies.get(token).copied().unwrap_or(0.0);
        self.smoothing / (self.smoothing + p)
    }
}

/// Weighted token average `Σ (a/(a+p(w))) F(w) / count`; no tokens gives the
/// zero vector, unseen tokens contribute the vocabulary mean.
pub fn sif_aggregate<S: Real>(
    node_tokens: &[String],
    tokens: &EmbeddingTable<S>,
    cfg: &SifConfig,
) -> Vec<S> {
    let mut acc = vec![S::zero(); tokens.dim()];
    if node_tokens.is_empty() {
        return acc;
    }
    let mean = tokens.mean_vector();
    for token in node_tokens {
        let w = S::from_f64_lossy(cfg.weight(token));
        let vector = tokens.get(token).unwrap_or(&mean);
        for (a, x) in acc.iter_mut().zip(vector) {
            *a += w * *x;
        }
    }
    let n = S::from_f64_lossy(node_tokens.len() as f64);
    for a in acc.iter_mut() {
        *a /= n;
    }
    acc
}

/// Knobs for the whole attribute-space pipeline.
#[derive(Debug, Clone)]
pub struct AttributeEmbedConfig {
    pub train: TrainConfig,
    pub sif_smoothing: f64,
    pub latent_dim: usize,
    pub ae_epochs: usize,
    pub ae_hidden: Option<usize>,
    pub ae_learning_rate: f64,
}

impl Default for AttributeEmbedConfig {
    fn default() -> Self {
        AttributeEmbedConfig {
            train: TrainConfig::attribute_default(),
            sif_smoothing: 1e-3,
            latent_dim: 32,
            ae_epochs: 60,
            ae_hidden: None,
            ae_learning_rate: 0.05,
        }
    }
}

/// End-to-end attribute embedding: tripartite walks, SIF averages, latent
/// compression. Returns one vector per graph node.
pub fn attribute_embeddings<S: Real>(
    graph: &PropertyGraph,
    rules: &[Gdd],
    cfg: &AttributeEmbedConfig,
) -> Result<(EmbeddingTable<S>, AutoEncoder<S>)> {
    let tg = build_tripartite(graph, rules);
    let tokens = token_embeddings::<S>(&tg, &cfg.train)?;
    let mut sif_cfg = SifConfig::from_tripartite(&tg);
    sif_cfg.smoothing = cfg.sif_smoothing;
    let keyed: Vec<(String, Vec<S>)> = graph
        .nodes()
        .map(|node| {
            let toks = tg.node_tokens(node);
            (node.id.to_string(), sif_aggregate(&toks, &tokens, &sif_cfg))
        })
        .collect();
    let (ae, table) = train_autoencoder(
        &keyed,
        cfg.latent_dim,
        cfg.ae_epochs,
        cfg.ae_hidden,
        cfg.ae_learning_rate,
        cfg.train.seed,
    )?;
    Ok((table, ae))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn toy_tripartite() -> TripartiteGraph {
        build_tripartite(&fixtures::toy_graph(), &fixtures::toy_rules())
    }

    #[test]
    fn shared_lastname_token_links_both_users() {
        let g = fixtures::toy_graph();
        let tg = toy_tripartite();
        // A_Σ from the toy rules: FIRSTNAME, LASTNAME, PHONE
        assert_eq!(tg.attrs, vec!["FIRSTNAME", "LASTNAME", "PHONE"]);
        let v3 = tg.node_tokens(g.node(&NodeId::from("v3")).unwrap());
        let v4 = tg.node_tokens(g.node(&NodeId::from("v4")).unwrap());
        assert!(v3.contains(&"absolem".to_string()));
        assert!(v4.contains(&"absolem".to_string()));
    }

    #[test]
    fn no_rules_falls_back_to_all_attributes() {
        let tg = build_tripartite(&fixtures::toy_graph(), &[]);
        assert!(tg.attrs.contains(&"TITLE".to_string()));
        assert!(tg.attrs.contains(&"IP".to_string()));
    }

    #[test]
    fn node_without_relevant_attrs_has_no_tokens() {
        let g = fixtures::toy_graph();
        let tg = toy_tripartite();
        // videos carry only TITLE, which is outside the rule attribute set
        let v0 = tg.node_tokens(g.node(&NodeId::from("v0")).unwrap());
        assert!(v0.is_empty());
    }

    #[test]
    fn walks_alternate_classes() {
        let tg = toy_tripartite();
        let cfg = TrainConfig {
            walks_per_node: 2,
            walk_length: 9,
            ..TrainConfig::toy()
        };
        let corpus = tg.walks(&cfg);
        for seq in &corpus.sequences {
            for (pos, &id) in seq.iter().enumerate() {
                let entry = &corpus.vocab()[id as usize];
                let expected = match pos % 4 {
                    0 => "entity",
                    2 => "attribute",
                    _ => "token",
                };
                assert_eq!(entry.group, expected, "position {pos} in {seq:?}");
            }
        }
    }

    #[test]
    fn token_frequencies_sum_to_one() {
        let tg = toy_tripartite();
        let total: f64 = tg.token_frequencies().values().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sif_weights_shrink_with_frequency() {
        let cfg = SifConfig {
            smoothing: 1e-3,
            frequencies: [("common".to_string(), 0.009), ("rare".to_string(), 0.001)]
                .into_iter()
                .collect(),
        };
        assert!((cfg.weight("rare") - 0.5).abs() < 1e-9);
        assert!((cfg.weight("common") - 0.1).abs() < 1e-9);
    }

    #[test]
    fn sif_single_token_and_opposite_pairs() {
        let mut table = EmbeddingTable::<f64>::new(2);
        table.insert("up", vec![1.0, 0.0]).unwrap();
        table.insert("down", vec![-1.0, 0.0]).unwrap();
        let cfg = SifConfig {
            smoothing: 1e-3,
            frequencies: [("up".to_string(), 0.001), ("down".to_string(), 0.001)]
                .into_iter()
                .collect(),
        };
        let single = sif_aggregate(&["up".to_string()], &table, &cfg);
        assert!((single[0] - 0.5).abs() < 1e-9); // weight 0.5 times 1.0
        let opposite = sif_aggregate(&["up".to_string(), "down".to_string()], &table, &cfg);
        assert!(opposite.iter().all(|x| x.abs() < 1e-12));
        let none: Vec<f64> = sif_aggregate(&[], &table, &cfg);
        assert_eq!(none, vec![0.0, 0.0]);
    }

    #[test]
    fn sif_is_permutation_invariant() {
        let mut table = EmbeddingTable::<f64>::new(3);
        table.insert("a", vec![0.5, 0.1, -0.2]).unwrap();
        table.insert("b", vec![-0.3, 0.9, 0.4]).unwrap();
        table.insert("c", vec![0.0, -0.5, 0.7]).unwrap();
        let cfg = SifConfig {
            smoothing: 1e-3,
            frequencies: [
                ("a".to_string(), 0.2),
                ("b".to_string(), 0.3),
                ("c".to_string(), 0.5),
            ]
            .into_iter()
            .collect(),
        };
        let fwd = sif_aggregate(
            &["a".to_string(), "b".to_string(), "c".to_string()],
            &table,
            &cfg,
        );
        let rev = sif_aggregate(
            &["c".to_string(), "b".to_string(), "a".to_string()],
            &table,
            &cfg,
        );
        for (x, y) in fwd.iter().zip(&rev) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn attribute_pipeline_separates_shared_lastname() {
        let g = fixtures::toy_graph();
        let cfg = AttributeEmbedConfig {
            train: TrainConfig {
                dim: 16,
                epochs: 10,
                ..TrainConfig::attribute_default()
            },
            latent_dim: 8,
            ae_epochs: 40,
            ..Default::default()
        };
        let (table, _) =
            attribute_embeddings::<f64>(&g, &fixtures::toy_rules(), &cfg).unwrap();
        let close = table.cosine("v3", "v4").unwrap();
        let far = table.cosine("v3", "v2").unwrap();
        assert!(
            close > far,
            "cos(v3,v4)={close} should beat cos(v3,v2)={far}"
        );
    }
}
