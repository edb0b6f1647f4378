//! Skip-gram with negative sampling over walk corpora.
//!
//! For each (center, context) pair within the window the trainer ascends
//! `log σ(C(u)·F(v)) + Σ_{i<=k} log σ(-C(w_i)·F(v))`, drawing the k negatives
//! from the context's own group with probability proportional to
//! `count^exponent`. Center vectors start uniform in ±0.5/d, context vectors
//! at zero, and the learning rate decays linearly to 1e-4 of its initial
//! value. Single-threaded and fully deterministic under the config seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::corpus::{TrainConfig, WalkCorpus};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::{dot, sigmoid, Real};

/// Train and return center vectors for every center-eligible vocab entry.
pub fn train_skipgram<S: Real>(corpus: &WalkCorpus, cfg: &TrainConfig) -> Result<EmbeddingTable<S>> {
    let (table, _) = train_skipgram_probed(corpus, cfg, 0)?;
    Ok(table)
}

/// Like [`train_skipgram`], but also evaluates the objective on a fixed probe
/// set (first `probe_pairs` pairs with frozen negatives) after every epoch.
pub fn train_skipgram_probed<S: Real>(
    corpus: &WalkCorpus,
    cfg: &TrainConfig,
    probe_pairs: usize,
) -> Result<(EmbeddingTable<S>, Vec<f64>)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = corpus.vocab();
    let n = vocab.len();
    let d = cfg.dim;
    // d must stay well below the vocabulary on non-toy inputs
    if n >= 64 && d > n / 2 {
        return Err(Error::Embedding(format!(
            "dim {d} too large for vocabulary of {n}; want dim <= {}",
            n / 2
        )));
    }

    let sampler = GroupSampler::new(corpus, cfg.neg_exponent);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // center vectors uniform in +-0.5/d, context vectors zero
    let mut centers: Vec<S> = (0..n * d)
        .map(|_| S::from_f64_lossy((rng.random::<f64>() - 0.5) / d as f64))
        .collect();
    let mut contexts: Vec<S> = vec![S::zero(); n * d];

    let pairs: Vec<(u32, u32)> = extract_pairs(corpus, cfg.window);
    if pairs.is_empty() {
        // nothing to update; still emit the initialized center vectors
        return Ok((export(corpus, &centers, d), Vec::new()));
    }

    // probe set with frozen negatives for objective tracking
    let probe: Vec<(u32, u32, Vec<u32>)> = pairs
        .iter()
        .take(probe_pairs)
        .map(|&(center, context)| {
            let negs = sampler.draw(&vocab[context as usize].group, cfg.negatives, &mut rng);
            (center, context, negs)
        })
        .collect();

    let total_updates = (pairs.len() * cfg.epochs).max(1) as f64;
    let lr0 = cfg.learning_rate;
    let lr_floor = lr0 * 1e-4;
    let mut seen = 0usize;
    let mut objective_by_epoch = Vec::with_capacity(cfg.epochs);
    let mut grad = vec![S::zero(); d];

    for _epoch in 0..cfg.epochs {
        for &(center, context) in &pairs {
            let lr = lr_floor.max(lr0 * (1.0 - seen as f64 / total_updates));
            let lr_s = S::from_f64_lossy(lr);
            seen += 1;

            let c_off = center as usize * d;
            for g in grad.iter_mut() {
                *g = S::zero();
            }
            {
                // positive update
                let u_off = context as usize * d;
                let x = dot(&centers[c_off..c_off + d], &contexts[u_off..u_off + d]);
                let g = lr_s * (S::one() - sigmoid(x));
                for i in 0..d {
                    grad[i] += g * contexts[u_off + i];
                    contexts[u_off + i] += g * centers[c_off + i];
                }
            }
            for _ in 0..cfg.negatives {
                let w = sampler.draw_one(&vocab[context as usize].group, &mut rng);
                if w == context {
                    continue;
                }
                let w_off = w as usize * d;
                let x = dot(&centers[c_off..c_off + d], &contexts[w_off..w_off + d]);
                let g = lr_s * (S::zero() - sigmoid(x));
                for i in 0..d {
                    grad[i] += g * contexts[w_off + i];
                    contexts[w_off + i] += g * centers[c_off + i];
                }
            }
            for i in 0..d {
                centers[c_off + i] += grad[i];
            }
        }
        if !probe.is_empty() {
            objective_by_epoch.push(probe_objective(&probe, &centers, &contexts, d));
        }
    }

    Ok((export(corpus, &centers, d), objective_by_epoch))
}

fn extract_pairs(corpus: &WalkCorpus, window: usize) -> Vec<(u32, u32)> {
    let vocab = corpus.vocab();
    let mut pairs = Vec::new();
    for seq in &corpus.sequences {
        for (i, &center) in seq.iter().enumerate() {
            if !vocab[center as usize].center {
                continue;
            }
            let lo = i.saturating_sub(window);
            let hi = (i + window + 1).min(seq.len());
            for (j, &context) in seq.iter().enumerate().take(hi).skip(lo) {
                if i != j {
                    pairs.push((center, context));
                }
            }
        }
    }
    pairs
}

fn probe_objective<S: Real>(
    probe: &[(u32, u32, Vec<u32>)],
    centers: &[S],
    contexts: &[S],
    d: usize,
) -> f64 {
    let mut total = 0.0;
    for (center, context, negs) in probe {
        let c_off = *center as usize * d;
        let u_off = *context as usize * d;
        let x = dot(&centers[c_off..c_off + d], &contexts[u_off..u_off + d]).to_f64_lossy();
        total += sigmoid(x).max(1e-12).ln();
        for w in negs {
            let w_off = *w as usize * d;
            let x = dot(&centers[c_off..c_off + d], &contexts[w_off..w_off + d]).to_f64_lossy();
            total += sigmoid(-x).max(1e-12).ln();
        }
    }
    total / probe.len() as f64
}

fn export<S: Real>(corpus: &WalkCorpus, centers: &[S], d: usize) -> EmbeddingTable<S> {
    let mut table = EmbeddingTable::new(d);
    for (id, entry) in corpus.vocab().iter().enumerate() {
        if entry.center {
            table
                .insert(entry.key.clone(), centers[id * d..(id + 1) * d].to_vec())
                .expect("dims agree by construction");
        }
    }
    table
}

/// Per-group negative sampler over cumulative `count^exponent` weights.
struct GroupSampler {
    groups: std::collections::BTreeMap<String, (Vec<u32>, Vec<f64>)>,
}

impl GroupSampler {
    fn new(corpus: &WalkCorpus, exponent: f64) -> Self {
        let mut groups: std::collections::BTreeMap<String, (Vec<u32>, Vec<f64>)> =
            std::collections::BTreeMap::new();
        for (id, entry) in corpus.vocab().iter().enumerate() {
            let slot = groups.entry(entry.group.clone()).or_default();
            slot.0.push(id as u32);
            let w = (entry.count as f64).powf(exponent);
            let prev = slot.1.last().copied().unwrap_or(0.0);
            slot.1.push(prev + w);
        }
        GroupSampler { groups }
    }

    fn draw_one(&self, group: &str, rng: &mut ChaCha8Rng) -> u32 {
        let (ids, cdf) = &self.groups[group];
        let total = *cdf.last().expect("group nonempty");
        let x = rng.random::<f64>() * total;
        let idx = cdf.partition_point(|&c| c < x).min(ids.len() - 1);
        ids[idx]
    }

    fn draw(&self, group: &str, k: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
        (0..k).map(|_| self.draw_one(group, rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn co_occurrence_corpus() -> WalkCorpus {
        // A and B always together; C and D always together. Sequences are
        // walk-length-like so tokens share contexts, not just neighbors.
        let mut corpus = WalkCorpus::new();
        for _ in 0..40 {
            corpus.push_sequence(
                [("A", "g", true), ("B", "g", true)].repeat(4).into_iter(),
                "s",
            );
            corpus.push_sequence(
                [("C", "g", true), ("D", "g", true)].repeat(4).into_iter(),
                "s",
            );
        }
        corpus
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let corpus = WalkCorpus::new();
        assert!(matches!(
            train_skipgram::<f64>(&corpus, &TrainConfig::toy()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn one_vector_per_distinct_center_token() {
        let corpus = co_occurrence_corpus();
        let cfg = TrainConfig {
            dim: 8,
            epochs: 1,
            ..TrainConfig::toy()
        };
        let table = train_skipgram::<f64>(&corpus, &cfg).unwrap();
        assert_eq!(table.len(), 4);
        assert_eq!(table.dim(), 8);
    }

    #[test]
    fn co_occurring_tokens_end_up_closer() {
        let corpus = co_occurrence_corpus();
        let cfg = TrainConfig {
            dim: 8,
            epochs: 20,
            ..TrainConfig::toy()
        };
        let table = train_skipgram::<f64>(&corpus, &cfg).unwrap();
        let ab = table.cosine("A", "B").unwrap();
        let ac = table.cosine("A", "C").unwrap();
        assert!(ab > ac, "cos(A,B)={ab} should beat cos(A,C)={ac}");
    }

    #[test]
    fn probe_objective_increases_during_training() {
        // sixteen tokens in eight fixed couples: negatives are mostly true
        // negatives, so the objective has room to climb
        let mut corpus = WalkCorpus::new();
        for round in 0..10 {
            for i in 0..8 {
                let p = format!("P{i}");
                let q = format!("Q{i}");
                let seq: Vec<(&str, &str, bool)> = (0..8)
                    .map(|j| {
                        if (j + round) % 2 == 0 {
                            (p.as_str(), "g", true)
                        } else {
                            (q.as_str(), "g", true)
                        }
                    })
                    .collect();
                corpus.push_sequence(seq, "s");
            }
        }
        let cfg = TrainConfig {
            dim: 8,
            epochs: 5,
            ..TrainConfig::toy()
        };
        let (_, objectives) = train_skipgram_probed::<f64>(&corpus, &cfg, 64).unwrap();
        assert_eq!(objectives.len(), 5);
        // net increase over the first five epochs, never dipping below start
        assert!(
            objectives[4] > objectives[0],
            "no net progress: {objectives:?}"
        );
        for o in &objectives[1..] {
            assert!(*o >= objectives[0], "fell below start: {objectives:?}");
        }
    }

    #[test]
    fn training_is_deterministic_under_seed() {
        let corpus = co_occurrence_corpus();
        let cfg = TrainConfig {
            dim: 8,
            epochs: 3,
            ..TrainConfig::toy()
        };
        let a = train_skipgram::<f64>(&corpus, &cfg).unwrap();
        let b = train_skipgram::<f64>(&corpus, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_dim_is_rejected_on_big_vocab() {
        let mut corpus = WalkCorpus::new();
        for i in 0..100 {
            let key = format!("t{i}");
            corpus.push_sequence([(key.as_str(), "g", true)], "s");
        }
        let cfg = TrainConfig {
            dim: 80,
            ..TrainConfig::default()
        };
        assert!(train_skipgram::<f64>(&corpus, &cfg).is_err());
    }
}
