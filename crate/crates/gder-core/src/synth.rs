//! Synthetic duplicate injection with attribute and structural noise.
//!
//! Sampled nodes of a target label get a duplicate with a fresh id and the
//! same eid. With attribute noise on, each attribute value independently
//! stays, is rewritten at edit distance exactly 2, or is deleted (uniform
//! choice). With structural noise on, a uniform fraction up to half of the
//! duplicate's copied edges is deleted.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gdd::levenshtein;
use crate::graph::{AttrValue, Edge, Node, NodeId, PropertyGraph};
use crate::metrics::GroundTruth;

#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub target_label: String,
    /// Fraction of target-label nodes to duplicate, in [0, 1].
    pub duplicate_rate: f64,
    pub attribute_noise: bool,
    pub structural_noise: bool,
    pub seed: u64,
}

const EDIT_ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";

fn one_edit(value: &str, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = value.chars().collect();
    let letter = char::from(EDIT_ALPHABET[rng.random_range(0..EDIT_ALPHABET.len())]);
    let op = if chars.is_empty() { 1 } else { rng.random_range(0..3) };
    let mut out = chars.clone();
    match op {
        0 => {
            let i = rng.random_range(0..out.len());
            out[i] = letter;
        }
        1 => {
            let i = rng.random_range(0..=out.len());
            out.insert(i, letter);
        }
        _ => {
            let i = rng.random_range(0..out.len());
            out.remove(i);
        }
    }
    out.into_iter().collect()
}

/// Two independent single-character edits, re-validated to land at distance
/// exactly 2 from the original (resampled otherwise).
fn edit_distance_two(value: &str, rng: &mut ChaCha8Rng) -> String {
    loop {
        let once = one_edit(value, rng);
        let twice = one_edit(&once, rng);
        if levenshtein(value, &twice) == 2 {
            return twice;
        }
    }
}

/// Inject duplicates per the spec; returns the noisy graph and its ground
/// truth (all shared-eid pairs of the output graph).
pub fn generate_noisy(graph: &PropertyGraph, spec: &NoiseSpec) -> Result<(PropertyGraph, GroundTruth)> {
    let targets: Vec<NodeId> = graph.nodes_with_label(&spec.target_label).cloned().collect();
    if targets.is_empty() && spec.duplicate_rate > 0.0 {
        return Err(Error::EmptyNoiseTarget(spec.target_label.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = ((targets.len() as f64) * spec.duplicate_rate).round() as usize;
    let mut pool = targets;
    pool.shuffle(&mut rng);
    let sampled: Vec<NodeId> = pool.into_iter().take(count).collect();

    // Rebuild with eids guaranteed on sampled originals.
    let mut nodes: Vec<Node> = graph.nodes().cloned().collect();
    for node in nodes.iter_mut() {
        if sampled.contains(&node.id) && node.eid.is_none() {
            node.eid = Some(node.id.to_string());
        }
    }
    let mut edges: Vec<Edge> = graph.edges().to_vec();

    for orig_id in &sampled {
        let original = nodes
            .iter()
            .find(|n| n.id == *orig_id)
            .expect("sampled from graph")
            .clone();
        let mut dup_id = NodeId::from(format!("{orig_id}_dup").as_str());
        let mut k = 1;
        while graph.node(&dup_id).is_some() {
            dup_id = NodeId::from(format!("{orig_id}_dup{k}").as_str());
            k += 1;
        }
        let mut dup = original.clone();
        dup.id = dup_id.clone();
        if spec.attribute_noise {
            let names: Vec<String> = dup.attr_names().map(str::to_string).collect();
            for name in names {
                match rng.random_range(0..3) {
                    0 => {}
                    1 => {
                        let old = dup.attr(&name).expect("listed attr").raw.clone();
                        dup.set_attr(&name, AttrValue::new(edit_distance_two(&old, &mut rng)));
                    }
                    _ => dup.remove_attr(&name),
                }
            }
        }

        // copy incident edges onto the duplicate
        let mut dup_edges: Vec<Edge> = Vec::new();
        for edge in graph.edges() {
            if edge.src == *orig_id && edge.dst == *orig_id {
                dup_edges.push(Edge {
                    src: dup_id.clone(),
                    label: edge.label.clone(),
                    dst: dup_id.clone(),
                });
            } else if edge.src == *orig_id {
                dup_edges.push(Edge {
                    src: dup_id.clone(),
                    label: edge.label.clone(),
                    dst: edge.dst.clone(),
                });
            } else if edge.dst == *orig_id {
                dup_edges.push(Edge {
                    src: edge.src.clone(),
                    label: edge.label.clone(),
                    dst: dup_id.clone(),
                });
            }
        }
        if spec.structural_noise && !dup_edges.is_empty() {
            let fraction = rng.random_range(0.0..=0.5);
            // nearest count to the drawn fraction, never past the half kept
            let delete = (((dup_edges.len() as f64) * fraction).round() as usize)
                .min(dup_edges.len() / 2);
            let mut order: Vec<usize> = (0..dup_edges.len()).collect();
            order.shuffle(&mut rng);
            let doomed: std::collections::BTreeSet<usize> =
                order.into_iter().take(delete).collect();
            dup_edges = dup_edges
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !doomed.contains(i))
                .map(|(_, e)| e)
                .collect();
        }
        nodes.push(dup);
        edges.extend(dup_edges);
    }

    let noisy = PropertyGraph::from_parts(nodes, edges)?;
    let truth = GroundTruth::from_graph(&noisy);
    Ok((noisy, truth))
}
