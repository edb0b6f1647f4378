//! Random-hyperplane LSH over embedding spaces and block generation.
//!
//! Each of the `L` tables hashes a vector to `b` sign bits against unit-norm
//! Gaussian hyperplanes; a query's block is the union of its buckets across
//! tables, restricted to nodes of the query's label, filtered by cosine
//! distance, and truncated to the nearest `cap`. Structural and attribute
//! blocks for the same query are merged. Two vectors at angle θ collide in
//! one table with probability `(1 - θ/π)^b`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::scalar::{cosine_distance, dot, normalize, Real};

/// Which embedding space a block or index came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    Structural,
    Attribute,
    Merged,
}

struct HashTable<S: Real> {
    planes: Vec<Vec<S>>,
    buckets: HashMap<u64, Vec<String>>,
}

/// LSH index over one embedding table.
pub struct LshIndex<S: Real> {
    pub space: Space,
    dim: usize,
    tables: Vec<HashTable<S>>,
}

impl<S: Real> LshIndex<S> {
    fn key(&self, table: usize, vector: &[S]) -> u64 {
        let mut key = 0u64;
        for (bit, plane) in self.tables[table].planes.iter().enumerate() {
            if dot(plane, vector) > S::zero() {
                key |= 1 << bit;
            }
        }
        key
    }

    /// Bucket keys of a vector in every table.
    pub fn keys(&self, vector: &[S]) -> Vec<u64> {
        (0..self.tables.len()).map(|t| self.key(t, vector)).collect()
    }

    /// Union of the query vector's buckets across all tables.
    pub fn bucket_union(&self, vector: &[S]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in 0..self.tables.len() {
            let key = self.key(t, vector);
            if let Some(members) = self.tables[t].buckets.get(&key) {
                out.extend(members.iter().cloned());
            }
        }
        out
    }
}

/// Build an index with `tables` hash tables of `bits` hyperplanes each.
pub fn build_lsh_index<S: Real>(
    emb: &EmbeddingTable<S>,
    tables: usize,
    bits: usize,
    seed: u64,
    space: Space,
) -> Result<LshIndex<S>> {
    if emb.is_empty() {
        return Err(Error::Lsh("cannot index an empty embedding table".into()));
    }
    if tables == 0 || bits == 0 {
        return Err(Error::Config("lsh needs at least one table and one bit".into()));
    }
    if bits > 64 {
        return Err(Error::Config(format!("at most 64 bits per table, got {bits}")));
    }
    let dim = emb.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut index = LshIndex {
        space,
        dim,
        tables: Vec::with_capacity(tables),
    };
    for _ in 0..tables {
        let planes: Vec<Vec<S>> = (0..bits)
            .map(|_| {
                let mut plane: Vec<S> = (0..dim)
                    .map(|_| {
                        let x: f64 = StandardNormal.sample(&mut rng);
                        S::from_f64_lossy(x)
                    })
                    .collect();
                normalize(&mut plane);
                plane
            })
            .collect();
        index.tables.push(HashTable {
            planes,
            buckets: HashMap::new(),
        });
    }
    for (key, vector) in emb.iter() {
        if vector.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: vector.len(),
            });
        }
        for t in 0..index.tables.len() {
            let bucket = index.key(t, vector);
            index.tables[t]
                .buckets
                .entry(bucket)
                .or_default()
                .push(key.to_string());
        }
    }
    Ok(index)
}

/// Query-centered candidate set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub query: NodeId,
    pub members: BTreeSet<NodeId>,
    pub source: Space,
}

impl Block {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of candidate pairs the block induces: |B|(|B|-1)/2.
    pub fn pair_count(&self) -> usize {
        self.members.len() * (self.members.len().saturating_sub(1)) / 2
    }

    /// All unordered member pairs, smaller id first.
    pub fn pairs(&self) -> Vec<(NodeId, NodeId)> {
        let members: Vec<&NodeId> = self.members.iter().collect();
        let mut out = Vec::with_capacity(self.pair_count());
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                out.push(((*a).clone(), (*b).clone()));
            }
        }
        out
    }
}

/// Retrieve the block of `q`: same-label bucket mates within `max_dist`
/// cosine distance, the nearest `cap` of them, always including `q` itself.
pub fn query_block<S: Real>(
    index: &LshIndex<S>,
    q: &NodeId,
    emb: &EmbeddingTable<S>,
    labels: &BTreeMap<NodeId, String>,
    max_dist: f64,
    cap: usize,
) -> Result<Block> {
    let q_vec = emb
        .get(q.as_str())
        .ok_or_else(|| Error::NodeNotFound(q.to_string()))?;
    if q_vec.len() != index.dim {
        return Err(Error::DimensionMismatch {
            expected: index.dim,
            got: q_vec.len(),
        });
    }
    if cap == 0 {
        return Err(Error::Config("block cap must be at least 1".into()));
    }
    let q_label = labels.get(q);
    let mut scored: Vec<(bool, f64, NodeId)> = Vec::new();
    for key in index.bucket_union(q_vec) {
        let id = NodeId::from(key);
        if labels.get(&id) != q_label {
            continue;
        }
        let Some(v) = emb.get(id.as_str()) else {
            continue;
        };
        let d = cosine_distance(q_vec, v).to_f64_lossy();
        if d <= max_dist {
            scored.push((id != *q, d, id));
        }
    }
    if !scored.iter().any(|(is_other, _, _)| !is_other) {
        scored.push((false, 0.0, q.clone()));
    }
    scored.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).expect("finite distances"))
            .then_with(|| a.2.cmp(&b.2))
    });
    scored.truncate(cap);
    Ok(Block {
        query: q.clone(),
        members: scored.into_iter().map(|(_, _, id)| id).collect(),
        source: index.space,
    })
}

/// Blocking parameters.
#[derive(Debug, Clone)]
pub struct BlockParams {
    pub tables: usize,
    pub bits: usize,
    pub max_dist: f64,
    pub cap: usize,
    pub seed: u64,
}

impl Default for BlockParams {
    fn default() -> Self {
        BlockParams {
            tables: 16,
            bits: 12,
            max_dist: 0.4,
            cap: 32,
            seed: 42,
        }
    }
}

/// Per query node, the union of its structural and attribute blocks. Either
/// space may be absent (ablation modes).
pub fn generate_blocks<S: Real>(
    struct_emb: Option<&EmbeddingTable<S>>,
    attr_emb: Option<&EmbeddingTable<S>>,
    labels: &BTreeMap<NodeId, String>,
    params: &BlockParams,
) -> Result<Vec<Block>> {
    let mut spaces: Vec<(&EmbeddingTable<S>, LshIndex<S>)> = Vec::new();
    if let Some(emb) = struct_emb {
        spaces.push((
            emb,
            build_lsh_index(emb, params.tables, params.bits, params.seed, Space::Structural)?,
        ));
    }
    if let Some(emb) = attr_emb {
        spaces.push((
            emb,
            build_lsh_index(
                emb,
                params.tables,
                params.bits,
                params.seed.wrapping_add(1),
                Space::Attribute,
            )?,
        ));
    }
    if spaces.is_empty() {
        return Err(Error::Config("no embedding space to block on".into()));
    }
    let queries: BTreeSet<NodeId> = spaces
        .iter()
        .flat_map(|(emb, _)| emb.keys().map(NodeId::from))
        .collect();
    let queries: Vec<NodeId> = queries.into_iter().collect();
    let blocks: Result<Vec<Block>> = queries
        .par_iter()
        .map(|q| {
            let mut merged: Option<Block> = None;
            for (emb, index) in &spaces {
                if emb.get(q.as_str()).is_none() {
                    continue;
                }
                let block = query_block(index, q, emb, labels, params.max_dist, params.cap)?;
                merged = Some(match merged {
                    None => block,
                    Some(mut m) => {
                        m.members.extend(block.members);
                        m.source = Space::Merged;
                        m
                    }
                });
            }
            Ok(merged.expect("q taken from some table"))
        })
        .collect();
    blocks
}

/// One line per block: query id, tab, comma-separated members.
pub fn write_blocks<W: Write>(blocks: &[Block], mut sink: W) -> Result<()> {
    for block in blocks {
        let members: Vec<&str> = block.members.iter().map(|m| m.as_str()).collect();
        writeln!(sink, "{}\t{}", block.query, members.join(","))
            .map_err(|e| Error::io("blocks dump", e))?;
    }
    Ok(())
}

pub fn read_blocks<R: BufRead>(reader: R) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("blocks dump", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (query, members) = line.split_once('\t').ok_or_else(|| Error::MalformedRecord {
            line: lineno + 1,
            message: "expected `query<TAB>members`".into(),
        })?;
        blocks.push(Block {
            query: NodeId::from(query),
            members: members.split(',').filter(|m| !m.is_empty()).map(NodeId::from).collect(),
            source: Space::Merged,
        });
    }
    Ok(blocks)
}
