//! Walk corpus: interned token sequences with group tags and counts.

use std::collections::BTreeMap;

/// Training hyperparameters shared by both embedding spaces.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Negative-sampling unigram exponent.
    pub neg_exponent: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            walks_per_node: 10,
            walk_length: 20,
            neg_exponent: 0.75,
            seed: 42,
        }
    }
}

impl TrainConfig {
    /// Small dimensions for graphs of a few dozen nodes.
    pub fn toy() -> Self {
        TrainConfig {
            dim: 16,
            ..Default::default()
        }
    }

    /// Defaults for tripartite attribute walks.
    pub fn attribute_default() -> Self {
        TrainConfig {
            walk_length: 12,
            walks_per_node: 8,
            ..Default::default()
        }
    }
}

/// One vocabulary entry: the key, its negative-sampling group, how often it
/// occurs, and whether it may act as a center during training.
#[derive(Debug, Clone)]
pub struct VocabEntry {
    pub key: String,
    pub group: String,
    pub count: u64,
    pub center: bool,
}

/// Sequences of interned keys plus per-sequence provenance (which walk scheme
/// produced them).
#[derive(Debug, Clone, Default)]
pub struct WalkCorpus {
    entries: Vec<VocabEntry>,
    index: BTreeMap<String, u32>,
    pub sequences: Vec<Vec<u32>>,
    pub provenance: Vec<String>,
}

impl WalkCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, key: &str, group: &str, center: bool) -> u32 {
        if let Some(&id) = self.index.get(key) {
            self.entries[id as usize].count += 1;
            return id;
        }
        let id = self.entries.len() as u32;
        self.entries.push(VocabEntry {
            key: key.to_string(),
            group: group.to_string(),
            count: 1,
            center,
        });
        self.index.insert(key.to_string(), id);
        id
    }

    /// Append a sequence of (key, group, center-eligible) tokens.
    pub fn push_sequence<'a>(
        &mut self,
        tokens: impl IntoIterator<Item = (&'a str, &'a str, bool)>,
        provenance: &str,
    ) {
        let seq: Vec<u32> = tokens
            .into_iter()
            .map(|(key, group, center)| self.intern(key, group, center))
            .collect();
        self.sequences.push(seq);
        self.provenance.push(provenance.to_string());
    }

    pub fn vocab(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn vocab_size(&self) -> usize {
        self.entries.len()
    }

    pub fn key_of(&self, id: u32) -> &str {
        &self.entries[id as usize].key
    }

    pub fn id_of(&self, key: &str) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }
}
