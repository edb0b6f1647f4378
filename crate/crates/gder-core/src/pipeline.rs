//! End-to-end orchestration: embed, block, prune, match, evaluate.
//!
//! The full mode follows the main algorithm: generate blocks from both
//! embedding spaces, compute the global average edge weight and learn the
//! dice threshold up front, prune each block graph by weight then by dice,
//! and confirm the surviving pairs against the rules. Ablation modes embed a
//! single space and replace rule confirmation with a cosine kNN check over
//! the pruned candidates.
//!
//! Every stage artifact can be written to an output directory together with
//! a MANIFEST of artifact hashes; runs with the same seed (single worker)
//! are byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embed::attribute::{attribute_embeddings, AttributeEmbedConfig};
use crate::embed::structural::{metapath_schemes, random_walks, MetaPathScheme};
use crate::embed::skipgram::train_skipgram;
use crate::embed::{EmbeddingTable, TrainConfig};
use crate::error::{Error, Result};
use crate::gdd::Gdd;
use crate::graph::{NodeId, PropertyGraph};
use crate::lsh::{generate_blocks, write_blocks, Block, BlockParams};
use crate::matcher::{knn_match, link_entities, write_match_report, LinkedEntityGraph, MatchDecision};
use crate::metrics::{cssr_g, pair_metrics, purity, GroundTruth, MetricsReport};
use crate::prune::{
    average_weight, build_block_graphs, compute_weights, default_dice_grid, learn_dice_threshold,
    prune_by_dice, prune_by_weight, surviving_pairs, write_pair_audit, BlockGraph, PairAudit,
    PairStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Full,
    /// Structural embedding only, kNN matcher (ablation).
    StructuralOnly,
    /// Attribute embedding only, kNN matcher (ablation).
    AttributeOnly,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "structural-only" | "structural" => Ok(Mode::StructuralOnly),
            "attribute-only" | "attribute" => Ok(Mode::AttributeOnly),
            other => Err(Error::Config(format!("unknown mode {other}"))),
        }
    }
}

/// How the dice threshold is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum DiceThreshold {
    /// Learn from a labelled validation slice of eid-labelled nodes.
    Learn,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct PruneSettings {
    pub threshold: DiceThreshold,
    /// Tolerated recall loss when learning the threshold.
    pub epsilon: f64,
    pub grid: Vec<f64>,
    /// Fraction of eid-labelled nodes used as the validation slice.
    pub validation_fraction: f64,
}

impl Default for PruneSettings {
    fn default() -> Self {
        PruneSettings {
            threshold: DiceThreshold::Learn,
            epsilon: 0.01,
            grid: default_dice_grid(),
            validation_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub seed: u64,
    pub struct_train: TrainConfig,
    pub attr_embed: AttributeEmbedConfig,
    pub block: BlockParams,
    pub prune: PruneSettings,
    /// Neighbors per node for the ablation kNN matcher.
    pub knn_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Full,
            seed: 42,
            struct_train: TrainConfig::default(),
            attr_embed: AttributeEmbedConfig::default(),
            block: BlockParams::default(),
            prune: PruneSettings::default(),
            knn_k: 1,
        }
    }
}

impl PipelineConfig {
    /// Defaults sized for graphs of a few dozen nodes.
    pub fn toy() -> Self {
        PipelineConfig {
            struct_train: TrainConfig::toy(),
            attr_embed: AttributeEmbedConfig {
                train: TrainConfig {
                    dim: 16,
                    ..TrainConfig::attribute_default()
                },
                latent_dim: 8,
                ..AttributeEmbedConfig::default()
            },
            block: BlockParams {
                max_dist: 0.5,
                cap: 16,
                ..BlockParams::default()
            },
            prune: PruneSettings {
                validation_fraction: 1.0,
                ..PruneSettings::default()
            },
            ..Default::default()
        }
    }

    /// Derive stage seeds from the master seed.
    fn normalized(&self) -> PipelineConfig {
        let mut cfg = self.clone();
        cfg.struct_train.seed = cfg.seed;
        cfg.attr_embed.train.seed = cfg.seed.wrapping_add(1);
        cfg.block.seed = cfg.seed.wrapping_add(2);
        cfg
    }

    /// Apply one `key = value` setting from the flat config format.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("{key}: expected integer, got {v:?}")))
        };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: expected number, got {v:?}")))
        };
        match key {
            "mode" => self.mode = value.parse()?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("seed: expected integer, got {value:?}")))?
            }
            "knn.k" => self.knn_k = parse_usize(value)?,
            "embed.struct.dim" => self.struct_train.dim = parse_usize(value)?,
            "embed.struct.window" => self.struct_train.window = parse_usize(value)?,
            "embed.struct.negatives" => self.struct_train.negatives = parse_usize(value)?,
            "embed.struct.epochs" => self.struct_train.epochs = parse_usize(value)?,
            "embed.struct.learning_rate" => self.struct_train.learning_rate = parse_f64(value)?,
            "embed.struct.walks_per_node" => self.struct_train.walks_per_node = parse_usize(value)?,
            "embed.struct.walk_length" => self.struct_train.walk_length = parse_usize(value)?,
            "embed.attr.dim" => self.attr_embed.train.dim = parse_usize(value)?,
            "embed.attr.epochs" => self.attr_embed.train.epochs = parse_usize(value)?,
            "embed.attr.walks_per_node" => self.attr_embed.train.walks_per_node = parse_usize(value)?,
            "embed.attr.walk_length" => self.attr_embed.train.walk_length = parse_usize(value)?,
            "embed.attr.latent_dim" => self.attr_embed.latent_dim = parse_usize(value)?,
            "embed.attr.ae_epochs" => self.attr_embed.ae_epochs = parse_usize(value)?,
            "block.tables" => self.block.tables = parse_usize(value)?,
            "block.bits" => self.block.bits = parse_usize(value)?,
            "block.max_dist" => self.block.max_dist = parse_f64(value)?,
            "block.cap" => self.block.cap = parse_usize(value)?,
            "prune.epsilon" => self.prune.epsilon = parse_f64(value)?,
            "prune.validation_fraction" => self.prune.validation_fraction = parse_f64(value)?,
            "prune.dice_threshold" => {
                self.prune.threshold = if value == "learn" {
                    DiceThreshold::Learn
                } else {
                    DiceThreshold::Fixed(parse_f64(value)?)
                }
            }
            other => return Err(Error::Config(format!("unknown config key {other}"))),
        }
        Ok(())
    }

    /// Parse a whole flat config file.
    pub fn apply_kv_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }
}

/// Pipeline counters matching the intermediate candidate sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counts {
    pub blocks: usize,
    /// Sum of per-block pair counts.
    pub cb: usize,
    /// Surviving pairs after both pruning passes.
    pub cp: usize,
    /// Confirmed pairs.
    pub cm: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub seed: u64,
    pub schemes: Vec<String>,
    pub average_weight: f64,
    pub dice_threshold: f64,
    pub counts: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    pub linked: LinkedEntityGraph,
    #[serde(skip)]
    pub timings_ms: Vec<(String, u128)>,
}

/// Discover and rank linking rules over the given scopes: every same-label
/// variable pair of a scope is tried as the entity pair, comparing the given
/// attributes under the default normalized-edit grid. With an empty `attrs`
/// list, all attributes on nodes of the pair's label are compared.
pub fn discover_rules(
    graph: &PropertyGraph,
    scopes: &[crate::pattern::GraphPattern],
    attrs: &[String],
    min_support: usize,
) -> Result<Vec<Gdd>> {
    use crate::gdd::{discover_gdds, rank_rules, AttributeSpec, DiscoveryConfig};
    use crate::pattern::matching::match_pattern;
    use crate::pattern::pseudo::to_pseudo_relation;

    let mut rules = Vec::new();
    for scope in scopes {
        let vars = scope.vars();
        let mut pairs = Vec::new();
        for (i, a) in vars.iter().enumerate() {
            for b in vars.iter().skip(i + 1) {
                if scope.var_label(a) == scope.var_label(b) && scope.var_label(a) != Some("*") {
                    pairs.push((a.clone(), b.clone(), scope.var_label(a).unwrap().to_string()));
                }
            }
        }
        if pairs.is_empty() {
            continue;
        }
        let matches = match_pattern(graph, scope);
        for (x, x2, label) in pairs {
            let attr_names: Vec<String> = if attrs.is_empty() {
                let mut names: BTreeSet<String> = BTreeSet::new();
                for id in graph.nodes_with_label(&label) {
                    let node = graph.node(id).expect("listed node");
                    names.extend(node.attr_names().map(str::to_string));
                }
                names.into_iter().collect()
            } else {
                attrs.to_vec()
            };
            if attr_names.is_empty() {
                continue;
            }
            let attr_set: BTreeSet<String> = attr_names.iter().cloned().collect();
            let pr = to_pseudo_relation(graph, &matches, &attr_set);
            let mut dcfg = DiscoveryConfig::new((x, x2));
            for name in attr_names {
                dcfg = dcfg.with_attribute(AttributeSpec::normalized_edit(name));
            }
            rules.extend(discover_gdds(&pr, scope, &dcfg, min_support)?);
        }
    }
    let mut ranked = rank_rules(rules);
    ranked.dedup();
    Ok(ranked)
}

/// Derive the deduplicated meta-path schemes of a rule set.
pub fn schemes_from_rules(rules: &[Gdd]) -> Vec<MetaPathScheme> {
    let mut all = BTreeSet::new();
    for rule in rules {
        for scheme in metapath_schemes(&rule.scope) {
            all.insert(scheme);
        }
    }
    all.into_iter().collect()
}

/// Structural embedding stage: scheme-guided walks + skip-gram.
pub fn embed_structural(
    graph: &PropertyGraph,
    rules: &[Gdd],
    cfg: &TrainConfig,
) -> Result<(EmbeddingTable<f64>, Vec<MetaPathScheme>)> {
    let schemes = schemes_from_rules(rules);
    if schemes.is_empty() {
        return Err(Error::Config(
            "no meta-path schemes derivable: rules lack same-label variable pairs".into(),
        ));
    }
    let corpus = random_walks(graph, &schemes, cfg);
    let table = train_skipgram(&corpus, cfg)?;
    Ok((table, schemes))
}

fn node_labels(graph: &PropertyGraph) -> BTreeMap<NodeId, String> {
    graph
        .nodes()
        .map(|n| (n.id.clone(), n.label.clone()))
        .collect()
}

/// Labelled validation pairs for threshold learning: block-graph edges whose
/// endpoints both fall in a seeded sample of the eid-labelled nodes.
fn threshold_sample(
    graphs: &[BlockGraph],
    graph: &PropertyGraph,
    fraction: f64,
    seed: u64,
) -> Vec<(Option<f64>, bool)> {
    let mut labelled_nodes: Vec<NodeId> = graph
        .nodes()
        .filter(|n| n.eid.is_some())
        .map(|n| n.id.clone())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labelled_nodes.shuffle(&mut rng);
    let keep = ((labelled_nodes.len() as f64) * fraction).ceil() as usize;
    let sample: BTreeSet<NodeId> = labelled_nodes.into_iter().take(keep).collect();
    let truth = GroundTruth::from_graph(graph);
    let mut out = Vec::new();
    for g in graphs {
        for ((a, b), data) in &g.edges {
            if sample.contains(a) && sample.contains(b) {
                out.push((data.dice, truth.contains(a, b)));
            }
        }
    }
    out
}

/// Result of the pruning stage.
pub struct PruneOutcome {
    pub graphs: Vec<BlockGraph>,
    pub audit: Vec<PairAudit>,
    pub average_weight: f64,
    pub dice_threshold: f64,
}

/// Weight pruning and dice pruning with the average weight and threshold
/// computed up front over all blocks.
pub fn prune_stage(
    blocks: &[Block],
    graph: &PropertyGraph,
    settings: &PruneSettings,
    seed: u64,
) -> Result<PruneOutcome> {
    let mut graphs = build_block_graphs(blocks, graph)?;
    compute_weights(&mut graphs);
    let avw = average_weight(&graphs);
    let theta = match settings.threshold {
        DiceThreshold::Fixed(t) => t,
        DiceThreshold::Learn => {
            let sample = threshold_sample(&graphs, graph, settings.validation_fraction, seed);
            learn_dice_threshold(&sample, &settings.grid, settings.epsilon)?
        }
    };
    let mut audit = Vec::new();
    for (a, b, data) in prune_by_weight(&mut graphs) {
        audit.push(PairAudit {
            a,
            b,
            weight: data.weight,
            dice: data.dice,
            status: PairStatus::WeightPruned,
        });
    }
    for g in graphs.iter_mut() {
        for (a, b, data) in prune_by_dice(g, theta) {
            audit.push(PairAudit {
                a,
                b,
                weight: data.weight,
                dice: data.dice,
                status: if data.dice.is_none() {
                    PairStatus::CrossTypePruned
                } else {
                    PairStatus::DicePruned
                },
            });
        }
    }
    for g in &graphs {
        for ((a, b), data) in &g.edges {
            audit.push(PairAudit {
                a: a.clone(),
                b: b.clone(),
                weight: data.weight,
                dice: data.dice,
                status: PairStatus::Kept,
            });
        }
    }
    audit.sort_by(|x, y| (&x.a, &x.b).cmp(&(&y.a, &y.b)));
    Ok(PruneOutcome {
        graphs,
        audit,
        average_weight: avw,
        dice_threshold: theta,
    })
}

/// Artifacts retained from a run for writing and inspection.
pub struct RunArtifacts {
    pub struct_emb: Option<EmbeddingTable<f64>>,
    pub attr_emb: Option<EmbeddingTable<f64>>,
    pub blocks: Vec<Block>,
    pub audit: Vec<PairAudit>,
    pub decisions: Vec<MatchDecision>,
    pub report: RunReport,
}

/// Run the whole pipeline. Artifacts are written under `out_dir` when given,
/// including a MANIFEST; on a stage failure the partial artifacts stay on
/// disk and the MANIFEST records the failed stage.
pub fn run_pipeline(
    graph: &PropertyGraph,
    rules: &[Gdd],
    cfg: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<RunArtifacts> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    match run_pipeline_inner(graph, rules, cfg, out_dir) {
        Ok(artifacts) => Ok(artifacts),
        Err(err) => {
            if let Some(dir) = out_dir {
                let stage = match &err {
                    Error::Stage { stage, .. } => stage.clone(),
                    _ => "setup".to_string(),
                };
                let _ = write_manifest(dir, cfg, Some(&stage));
            }
            Err(err)
        }
    }
}

fn run_pipeline_inner(
    graph: &PropertyGraph,
    rules: &[Gdd],
    cfg: &PipelineConfig,
    out_dir: Option<&Path>,
) -> Result<RunArtifacts> {
    let cfg = cfg.normalized();
    if rules.is_empty() && cfg.mode != Mode::AttributeOnly {
        return Err(Error::Config(
            "rule set is empty; full and structural modes need rules".into(),
        ));
    }
    let mut timings: Vec<(String, u128)> = Vec::new();
    let stage_timer = |name: &str, start: Instant, timings: &mut Vec<(String, u128)>| {
        timings.push((name.to_string(), start.elapsed().as_millis()));
    };
    let staged = |name: &str, e: Error| Error::stage(name, e);

    // --- embedding ---
    let mut schemes_tags = Vec::new();
    let struct_emb = if cfg.mode != Mode::AttributeOnly {
        let t = Instant::now();
        let (table, schemes) =
            embed_structural(graph, rules, &cfg.struct_train).map_err(|e| staged("embed-structural", e))?;
        schemes_tags = schemes.iter().map(|s| s.tag()).collect();
        stage_timer("embed-structural", t, &mut timings);
        Some(table)
    } else {
        None
    };
    let attr_emb = if cfg.mode != Mode::StructuralOnly {
        let t = Instant::now();
        let (table, _) = attribute_embeddings::<f64>(graph, rules, &cfg.attr_embed)
            .map_err(|e| staged("embed-attribute", e))?;
        stage_timer("embed-attribute", t, &mut timings);
        Some(table)
    } else {
        None
    };

    // --- blocking ---
    let t = Instant::now();
    let labels = node_labels(graph);
    let blocks = generate_blocks(
        struct_emb.as_ref(),
        attr_emb.as_ref(),
        &labels,
        &cfg.block,
    )
    .map_err(|e| staged("block", e))?;
    let cb: usize = blocks.iter().map(Block::pair_count).sum();
    stage_timer("block", t, &mut timings);

    // --- pruning ---
    let t = Instant::now();
    let outcome = prune_stage(&blocks, graph, &cfg.prune, cfg.seed.wrapping_add(3))
        .map_err(|e| staged("prune", e))?;
    let candidates = surviving_pairs(&outcome.graphs);
    stage_timer("prune", t, &mut timings);

    // --- matching ---
    let t = Instant::now();
    let (linked, decisions) = match cfg.mode {
        Mode::Full => link_entities(&candidates, rules, graph).map_err(|e| staged("match", e))?,
        Mode::StructuralOnly | Mode::AttributeOnly => {
            let emb = if cfg.mode == Mode::StructuralOnly {
                struct_emb.as_ref()
            } else {
                attr_emb.as_ref()
            }
            .expect("mode embeds its own space");
            let knn: BTreeSet<(NodeId, NodeId)> = knn_match(emb, cfg.knn_k, &labels)
                .map_err(|e| staged("match", e))?
                .into_iter()
                .collect();
            let pairs: Vec<(NodeId, NodeId)> = candidates
                .iter()
                .filter(|p| knn.contains(*p))
                .cloned()
                .collect();
            (LinkedEntityGraph::from_pairs(pairs), Vec::new())
        }
    };
    stage_timer("match", t, &mut timings);

    // --- metrics ---
    let t = Instant::now();
    let truth = GroundTruth::from_graph(graph);
    let metrics = if truth.is_empty() {
        None
    } else {
        let pred: BTreeSet<(NodeId, NodeId)> = linked.pairs.iter().cloned().collect();
        let (precision, recall, f1) = pair_metrics(&pred, &truth).map_err(|e| staged("eval", e))?;
        let cand_set: BTreeSet<(NodeId, NodeId)> = candidates.iter().cloned().collect();
        let cssr = cssr_g(&cand_set, graph).ok();
        Some(MetricsReport {
            precision,
            recall,
            f1,
            cssr_g: cssr,
            purity: Some(purity(&blocks, &truth)),
            truth_pairs: truth.len(),
            predicted_pairs: pred.len(),
            candidate_pairs_blocking: cb,
            candidate_pairs_pruned: candidates.len(),
            matched_pairs: linked.pairs.len(),
            empty_prediction: pred.is_empty(),
        })
    };
    stage_timer("eval", t, &mut timings);

    let report = RunReport {
        mode: cfg.mode,
        seed: cfg.seed,
        schemes: schemes_tags,
        average_weight: outcome.average_weight,
        dice_threshold: outcome.dice_threshold,
        counts: Counts {
            blocks: blocks.len(),
            cb,
            cp: candidates.len(),
            cm: linked.pairs.len(),
        },
        metrics,
        linked,
        timings_ms: timings,
    };
    let artifacts = RunArtifacts {
        struct_emb,
        attr_emb,
        blocks,
        audit: outcome.audit,
        decisions,
        report,
    };
    if let Some(dir) = out_dir {
        write_artifacts(&artifacts, &cfg, dir).map_err(|e| staged("write-artifacts", e))?;
    }
    Ok(artifacts)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(path)
}

fn write_artifacts(artifacts: &RunArtifacts, cfg: &PipelineConfig, dir: &Path) -> Result<()> {
    if let Some(emb) = &artifacts.struct_emb {
        let mut buf = Vec::new();
        emb.write_text(&mut buf)?;
        write_file(dir, "struct.emb", &buf)?;
    }
    if let Some(emb) = &artifacts.attr_emb {
        let mut buf = Vec::new();
        emb.write_text(&mut buf)?;
        write_file(dir, "attr.emb", &buf)?;
    }
    let mut buf = Vec::new();
    write_blocks(&artifacts.blocks, &mut buf)?;
    write_file(dir, "blocks.tsv", &buf)?;

    let mut buf = Vec::new();
    write_pair_audit(&artifacts.audit, &mut buf)?;
    write_file(dir, "pairs.csv", &buf)?;

    let mut buf = Vec::new();
    write_match_report(&artifacts.decisions, &mut buf)?;
    write_file(dir, "matches.jsonl", &buf)?;

    let mut buf = Vec::new();
    artifacts.report.linked.write_json(&mut buf)?;
    write_file(dir, "linked.json", &buf)?;

    if let Some(metrics) = &artifacts.report.metrics {
        let mut buf = Vec::new();
        metrics.write_json(&mut buf)?;
        write_file(dir, "metrics.json", &buf)?;
    }

    let report_json = serde_json::to_vec_pretty(&artifacts.report)?;
    write_file(dir, "report.json", &report_json)?;

    // timings are wall-clock and excluded from the hashed artifact set
    let timings: BTreeMap<String, u128> = artifacts.report.timings_ms.iter().cloned().collect();
    write_file(dir, "timings.json", &serde_json::to_vec_pretty(&timings)?)?;

    write_manifest(dir, cfg, None)?;
    Ok(())
}

/// Artifact names hashed into the MANIFEST, in fixed order.
const MANIFEST_FILES: [&str; 8] = [
    "attr.emb",
    "blocks.tsv",
    "linked.json",
    "matches.jsonl",
    "metrics.json",
    "pairs.csv",
    "report.json",
    "struct.emb",
];

/// Write the MANIFEST: run status, seed, and a sha256 per artifact.
pub fn write_manifest(dir: &Path, cfg: &PipelineConfig, failed_stage: Option<&str>) -> Result<()> {
    let mut out = String::new();
    match failed_stage {
        None => out.push_str("status = complete\n"),
        Some(stage) => out.push_str(&format!("status = incomplete: failed at {stage}\n")),
    }
    out.push_str(&format!("seed = {}\n", cfg.seed));
    out.push_str(&format!(
        "mode = {}\n",
        serde_json::to_value(cfg.mode)?.as_str().expect("plain enum")
    ));
    for name in MANIFEST_FILES {
        let path = dir.join(name);
        if let Ok(bytes) = std::fs::read(&path) {
            let digest = Sha256::digest(&bytes);
            let mut hex = String::with_capacity(64);
            for byte in digest {
                hex.push_str(&format!("{byte:02x}"));
            }
            out.push_str(&format!("sha256 {hex}  {name}\n"));
        }
    }
    let path = dir.join("MANIFEST");
    let mut file =
        std::fs::File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}
