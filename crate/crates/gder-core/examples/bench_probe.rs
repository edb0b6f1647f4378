//! Scratch probe for the synthetic benchmark (not part of the test suite).

use gder_core::fixtures::{synth_graph, SynthConfig};
use gder_core::pattern::mining::mine_frequent_patterns;
use gder_core::pipeline::*;
use gder_core::synth::{generate_noisy, NoiseSpec};
use std::time::Instant;

fn pipeline_cfg(mode: Mode) -> PipelineConfig {
    PipelineConfig {
        mode,
        seed: 42,
        struct_train: gder_core::embed::TrainConfig {
            dim: 64, epochs: 2, walks_per_node: 6, walk_length: 12, ..Default::default()
        },
        attr_embed: gder_core::embed::attribute::AttributeEmbedConfig {
            train: gder_core::embed::TrainConfig {
                dim: 64, epochs: 2, walks_per_node: 6, walk_length: 12, ..Default::default()
            },
            latent_dim: 24,
            ae_epochs: 40,
            ..Default::default()
        },
        block: gder_core::lsh::BlockParams {
            cap: 16,
            ..Default::default()
        },
        prune: PruneSettings {
            validation_fraction: 1.0,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let train_seed: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(101);
    let eval_seed: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(11);

    let t0 = Instant::now();
    let base = synth_graph(&SynthConfig::default());
    println!("base: {} nodes {} edges", base.node_count(), base.edge_count());

    // training slice: clean duplicates, separate seed
    let train_spec = NoiseSpec {
        target_label: "person".into(),
        duplicate_rate: 0.10,
        attribute_noise: false,
        structural_noise: false,
        seed: train_seed,
    };
    let (train, _) = generate_noisy(&base, &train_spec).unwrap();
    let t = Instant::now();
    let mined = mine_frequent_patterns(&train, 50, 2);
    // expert-chosen linking scope: two persons on the same team
    let team_scope = gder_core::pattern::GraphPattern::new(
        [("x", "person"), ("x2", "person"), ("y", "team")],
        [("x", "plays_for", "y"), ("x2", "plays_for", "y")],
    ).unwrap();
    let team_code = gder_core::pattern::mining::canonical_code(&team_scope);
    assert!(mined.iter().any(|p| gder_core::pattern::mining::canonical_code(p) == team_code),
        "mined patterns must include the shared-team shape");
    let scopes = vec![team_scope];
    let rules = discover_rules(&train, &scopes, &[], 20).unwrap();
    println!("mined {} patterns, discovered {} rules in {:?}", mined.len(), rules.len(), t.elapsed());
    for r in rules.iter().take(8) {
        println!("  [support {}] {}", r.support, r);
    }
    if rules.is_empty() { println!("NO RULES"); return; }

    for (name, attr, structural) in [("attr-noise", true, false), ("struct-noise", false, true)] {
        let spec = NoiseSpec {
            target_label: "person".into(),
            duplicate_rate: 0.10,
            attribute_noise: attr,
            structural_noise: structural,
            seed: eval_seed,
        };
        let (noisy, truth) = generate_noisy(&base, &spec).unwrap();
        println!("--- {name}: {} nodes, {} true pairs", noisy.node_count(), truth.len());
        for mode in [Mode::Full, Mode::StructuralOnly, Mode::AttributeOnly] {
            let t = Instant::now();
            let artifacts = run_pipeline(&noisy, &rules, &pipeline_cfg(mode), None).unwrap();
            let r = &artifacts.report;
            let m = r.metrics.as_ref().unwrap();
            println!(
                "{name} {:?}: P {:.4} R {:.4} F1 {:.4} | cb {} cp {} cm {} | theta {:.2} | {:?}",
                mode, m.precision, m.recall, m.f1, r.counts.cb, r.counts.cp, r.counts.cm,
                r.dice_threshold, t.elapsed()
            );
        }
    }
    println!("total {:?}", t0.elapsed());
}
