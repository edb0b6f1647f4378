//! Regenerates the demo data files under data/ from the built-in fixtures.

use gder_core::fixtures;
use gder_core::gdd::save_rules;
use gder_core::graph::save_graph_files;
use std::path::Path;

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/video-toy");
    std::fs::create_dir_all(&root).unwrap();
    let g = fixtures::toy_graph();
    save_graph_files(&g, &root.join("nodes.jsonl"), &root.join("edges.jsonl")).unwrap();
    let rules = fixtures::toy_rules();
    save_rules(&rules, std::fs::File::create(root.join("rules.json")).unwrap()).unwrap();
    println!("wrote {}", root.display());
}
