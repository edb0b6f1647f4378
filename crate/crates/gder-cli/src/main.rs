//! `gder`: entity resolution for property graphs from the command line.
//!
//! Stages are exposed as subcommands that read and write the documented file
//! formats, so a full run and a sequence of stage runs produce the same
//! result. Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 stage failure.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gder_core::embed::attribute::attribute_embeddings;
use gder_core::embed::EmbeddingTable;
use gder_core::error::{Error, ErrorKind};
use gder_core::gdd::{load_rules, save_rules, Gdd};
use gder_core::graph::convert::{convert_relational, RelationalSchemaConfig};
use gder_core::graph::{load_graph_files, save_graph_files, NodeId, PropertyGraph};
use gder_core::lsh::{generate_blocks, read_blocks, write_blocks};
use gder_core::matcher::{link_entities, write_match_report, LinkedEntityGraph};
use gder_core::metrics::{cssr_g, pair_metrics, purity, GroundTruth, MetricsReport};
use gder_core::pattern::mining::mine_frequent_patterns;
use gder_core::pattern::GraphPattern;
use gder_core::pipeline::{embed_structural, run_pipeline, Mode, PipelineConfig};
use gder_core::prune::read_kept_pairs;
use gder_core::synth::{generate_noisy, NoiseSpec};

#[derive(Parser)]
#[command(name = "gder", version, about = "Rule-driven entity resolution for property graphs")]
struct Cli {
    /// Worker threads; 1 guarantees byte-identical reruns.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArgs {
    /// Node file (JSON lines).
    #[arg(long)]
    nodes: PathBuf,
    /// Edge file (JSON lines).
    #[arg(long)]
    edges: PathBuf,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline overrides, e.g. `--set block.cap=16` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Pipeline mode: full, structural-only, attribute-only.
    #[arg(long)]
    mode: Option<String>,
    /// Master seed for all stages.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn build(&self) -> Result<PipelineConfig, Error> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            cfg.apply_kv_text(&text)?;
        }
        for setting in &self.sets {
            let (key, value) = setting
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {setting}")))?;
            cfg.apply_kv(key.trim(), value.trim())?;
        }
        if let Some(mode) = &self.mode {
            cfg.mode = mode.parse()?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert relational CSV tables to graph files.
    Convert {
        /// Table as name=path (repeatable).
        #[arg(long = "table", value_name = "NAME=PATH", required = true)]
        tables: Vec<String>,
        /// Schema mapping file (key = value format).
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Mine patterns and discover linking rules from an eid-labelled graph.
    Discover {
        #[command(flatten)]
        graph: GraphArgs,
        /// Scope pattern files; skips mining when given.
        #[arg(long = "pattern")]
        patterns: Vec<PathBuf>,
        /// Attributes to compare (defaults to all on the scoped label).
        #[arg(long, value_delimiter = ',')]
        attrs: Vec<String>,
        #[arg(long, default_value_t = 2)]
        min_support: usize,
        #[arg(long, default_value_t = 2)]
        max_edges: usize,
        /// Keep only the top N ranked rules.
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train embeddings and write them as text tables.
    Embed {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        rules: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build LSH blocks from embedding tables.
    Block {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        struct_emb: Option<PathBuf>,
        #[arg(long)]
        attr_emb: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prune blocks by edge weight and dice similarity.
    Prune {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        blocks: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Confirm candidate pairs against rules.
    Match {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run the whole pipeline.
    Run {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        rules: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score linked pairs against the graph's eid ground truth.
    Eval {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        linked: PathBuf,
        /// Optional blocks dump for the purity metric.
        #[arg(long)]
        blocks: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inject synthetic duplicates with attribute/structural noise.
    Synth {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        label: String,
        #[arg(long, default_value_t = 0.1)]
        rate: f64,
        #[arg(long, default_value_t = false)]
        attr_noise: bool,
        #[arg(long, default_value_t = false)]
        struct_noise: bool,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        Error::io(path.display().to_string(), e)
    })?))
}

fn create(path: &Path) -> Result<File, Error> {
    File::create(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_graph_args(args: &GraphArgs) -> Result<PropertyGraph, Error> {
    load_graph_files(&args.nodes, &args.edges)
}

fn load_rules_file(path: &Path) -> Result<Vec<Gdd>, Error> {
    load_rules(open(path)?)
}

fn read_pairs_file(path: &Path) -> Result<Vec<(NodeId, NodeId)>, Error> {
    read_kept_pairs(open(path)?)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Convert { tables, schema, out_dir } => {
            let text = std::fs::read_to_string(&schema)
                .map_err(|e| Error::io(schema.display().to_string(), e))?;
            let config = RelationalSchemaConfig::parse(&text)?;
            let mut readers = BTreeMap::new();
            for entry in &tables {
                let (name, path) = entry.split_once('=').ok_or_else(|| {
                    Error::Config(format!("--table expects NAME=PATH, got {entry}"))
                })?;
                readers.insert(name.to_string(), open(Path::new(path))?);
            }
            let graph = convert_relational(readers, &config)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
            save_graph_files(&graph, &out_dir.join("nodes.jsonl"), &out_dir.join("edges.jsonl"))?;
            println!(
                "converted {} nodes, {} edges -> {}",
                graph.node_count(),
                graph.edge_count(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Discover {
            graph,
            patterns,
            attrs,
            min_support,
            max_edges,
            top,
            out,
        } => {
            let g = load_graph_args(&graph)?;
            if !g.nodes().any(|n| n.eid.is_some()) {
                return Err(Error::Config(
                    "discovery needs an eid-labelled sample graph; no node carries an eid".into(),
                ));
            }
            let scopes: Vec<GraphPattern> = if patterns.is_empty() {
                mine_frequent_patterns(&g, min_support, max_edges)
            } else {
                patterns
                    .iter()
                    .map(|p| GraphPattern::from_json_reader(open(p)?))
                    .collect::<Result<_, _>>()?
            };
            let mut ranked = gder_core::pipeline::discover_rules(&g, &scopes, &attrs, min_support)?;
            if let Some(top) = top {
                ranked.truncate(top);
            }
            if ranked.is_empty() {
                eprintln!("warning: no valid rules found; writing an empty rule file");
            }
            save_rules(&ranked, create(&out)?)?;
            println!("wrote {} rules -> {}", ranked.len(), out.display());
            for rule in &ranked {
                println!("  [support {}] {}", rule.support, rule);
            }
            Ok(())
        }
        Command::Embed {
            graph,
            rules,
            config,
            out_dir,
        } => {
            let g = load_graph_args(&graph)?;
            let rules = load_rules_file(&rules)?;
            let cfg = config.build()?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
            if cfg.mode != Mode::AttributeOnly {
                let mut train = cfg.struct_train.clone();
                train.seed = cfg.seed;
                let (table, schemes) = embed_structural(&g, &rules, &train)?;
                table.write_text(create(&out_dir.join("struct.emb"))?)?;
                println!(
                    "structural: {} vectors (schemes: {})",
                    table.len(),
                    schemes.iter().map(|s| s.tag()).collect::<Vec<_>>().join(", ")
                );
            }
            if cfg.mode != Mode::StructuralOnly {
                let mut attr_cfg = cfg.attr_embed.clone();
                attr_cfg.train.seed = cfg.seed.wrapping_add(1);
                let (table, _) = attribute_embeddings::<f64>(&g, &rules, &attr_cfg)?;
                table.write_text(create(&out_dir.join("attr.emb"))?)?;
                println!("attribute: {} vectors", table.len());
            }
            Ok(())
        }
        Command::Block {
            graph,
            struct_emb,
            attr_emb,
            config,
            out,
        } => {
            let g = load_graph_args(&graph)?;
            let cfg = config.build()?;
            let mut params = cfg.block.clone();
            params.seed = cfg.seed.wrapping_add(2);
            let s: Option<EmbeddingTable<f64>> = struct_emb
                .map(|p| EmbeddingTable::read_text(open(&p)?))
                .transpose()?;
            let a: Option<EmbeddingTable<f64>> = attr_emb
                .map(|p| EmbeddingTable::read_text(open(&p)?))
                .transpose()?;
            let labels: BTreeMap<NodeId, String> = g
                .nodes()
                .map(|n| (n.id.clone(), n.label.clone()))
                .collect();
            let blocks = generate_blocks(s.as_ref(), a.as_ref(), &labels, &params)?;
            write_blocks(&blocks, create(&out)?)?;
            let pairs: usize = blocks.iter().map(|b| b.pair_count()).sum();
            println!("{} blocks, {} candidate pairs -> {}", blocks.len(), pairs, out.display());
            Ok(())
        }
        Command::Prune {
            graph,
            blocks,
            config,
            out,
        } => {
            let g = load_graph_args(&graph)?;
            let cfg = config.build()?;
            let blocks = read_blocks(open(&blocks)?)?;
            let outcome = gder_core::pipeline::prune_stage(
                &blocks,
                &g,
                &cfg.prune,
                cfg.seed.wrapping_add(3),
            )?;
            gder_core::prune::write_pair_audit(&outcome.audit, create(&out)?)?;
            println!(
                "avW {:.4}, dice threshold {:.2}; kept {} pairs -> {}",
                outcome.average_weight,
                outcome.dice_threshold,
                gder_core::prune::surviving_pairs(&outcome.graphs).len(),
                out.display()
            );
            Ok(())
        }
        Command::Match {
            graph,
            pairs,
            rules,
            out_dir,
        } => {
            let g = load_graph_args(&graph)?;
            let rules = load_rules_file(&rules)?;
            let cands = read_pairs_file(&pairs)?;
            let (linked, decisions) = link_entities(&cands, &rules, &g)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
            write_match_report(&decisions, create(&out_dir.join("matches.jsonl"))?)?;
            linked.write_json(create(&out_dir.join("linked.json"))?)?;
            println!(
                "linked {} pairs in {} clusters -> {}",
                linked.pairs.len(),
                linked.components.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::Run {
            graph,
            rules,
            config,
            out_dir,
        } => {
            let g = load_graph_args(&graph)?;
            let rules = load_rules_file(&rules)?;
            let cfg = config.build()?;
            let artifacts = run_pipeline(&g, &rules, &cfg, Some(&out_dir))?;
            let report = &artifacts.report;
            println!(
                "blocks {} | C_b {} | C_p {} | C_m {}",
                report.counts.blocks, report.counts.cb, report.counts.cp, report.counts.cm
            );
            if let Some(metrics) = &report.metrics {
                print!("{}", metrics.to_table());
            }
            println!("artifacts -> {}", out_dir.display());
            Ok(())
        }
        Command::Eval {
            graph,
            linked,
            blocks,
            out,
        } => {
            let g = load_graph_args(&graph)?;
            let linked = LinkedEntityGraph::read_json(open(&linked)?)?;
            let truth = GroundTruth::from_graph(&g);
            let pred: BTreeSet<(NodeId, NodeId)> = linked.pairs.iter().cloned().collect();
            let (precision, recall, f1) = pair_metrics(&pred, &truth)?;
            let block_purity = blocks
                .map(|p| -> Result<f64, Error> {
                    Ok(purity(&read_blocks(open(&p)?)?, &truth))
                })
                .transpose()?;
            let report = MetricsReport {
                precision,
                recall,
                f1,
                cssr_g: cssr_g(&pred, &g).ok(),
                purity: block_purity,
                truth_pairs: truth.len(),
                predicted_pairs: pred.len(),
                candidate_pairs_blocking: 0,
                candidate_pairs_pruned: 0,
                matched_pairs: pred.len(),
                empty_prediction: pred.is_empty(),
            };
            print!("{}", report.to_table());
            if let Some(path) = out {
                report.write_json(create(&path)?)?;
            }
            Ok(())
        }
        Command::Synth {
            graph,
            label,
            rate,
            attr_noise,
            struct_noise,
            seed,
            out_dir,
        } => {
            let g = load_graph_args(&graph)?;
            let spec = NoiseSpec {
                target_label: label,
                duplicate_rate: rate,
                attribute_noise: attr_noise,
                structural_noise: struct_noise,
                seed,
            };
            let (noisy, truth) = generate_noisy(&g, &spec)?;
            std::fs::create_dir_all(&out_dir)
                .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
            save_graph_files(&noisy, &out_dir.join("nodes.jsonl"), &out_dir.join("edges.jsonl"))?;
            let mut truth_file = create(&out_dir.join("truth.tsv"))?;
            for (a, b) in &truth.pairs {
                writeln!(truth_file, "{a}\t{b}").map_err(|e| Error::io("truth.tsv", e))?;
            }
            println!(
                "{} nodes, {} edges, {} true pairs -> {}",
                noisy.node_count(),
                noisy.edge_count(),
                truth.len(),
                out_dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global()
        {
            eprintln!("error: could not configure {workers} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2u8,
                ErrorKind::Data => 3u8,
                ErrorKind::Stage => 4u8,
            })
        }
    }
}
