//! Embedding tables and their on-disk formats.
//!
//! Both embedding spaces (structural over node ids, attribute over tokens or
//! node ids) share one table type, generic over the scalar. The text format
//! is `<count> <dim>` followed by one `<key> <floats...>` line per key; the
//! binary format is little-endian with length-prefixed keys.

pub mod attribute;
pub mod autoencoder;
pub mod corpus;
pub mod skipgram;
pub mod structural;

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::scalar::{cosine, Real};

pub use corpus::{TrainConfig, VocabEntry, WalkCorpus};

/// Dense vectors keyed by node id or token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<S: Real> {
    dim: usize,
    vectors: BTreeMap<String, Vec<S>>,
}

impl<S: Real> EmbeddingTable<S> {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, key: impl Into<String>, vector: Vec<S>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        self.vectors.insert(key.into(), vector);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&[S]> {
        self.vectors.get(key).map(|v| v.as_slice())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.vectors.contains_key(key)
    }

    /// Keys in deterministic (sorted) order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(|k| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[S])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Mean vector over all entries; zero vector for an empty table.
    pub fn mean_vector(&self) -> Vec<S> {
        let mut acc = vec![S::zero(); self.dim];
        if self.vectors.is_empty() {
            return acc;
        }
        for v in self.vectors.values() {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += *x;
            }
        }
        let n = S::from_f64_lossy(self.vectors.len() as f64);
        for a in acc.iter_mut() {
            *a /= n;
        }
        acc
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<S> {
        Some(cosine(self.get(a)?, self.get(b)?))
    }

    /// Text export. Keys with whitespace cannot round-trip and are rejected.
    pub fn write_text<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "{} {}", self.vectors.len(), self.dim)
            .map_err(|e| Error::io("embedding text", e))?;
        for (key, vector) in &self.vectors {
            if key.chars().any(char::is_whitespace) {
                return Err(Error::Embedding(format!(
                    "key {key:?} contains whitespace; use the binary format"
                )));
            }
            let floats: Vec<String> = vector
                .iter()
                .map(|x| format!("{}", x.to_f64_lossy()))
                .collect();
            writeln!(sink, "{key} {}", floats.join(" "))
                .map_err(|e| Error::io("embedding text", e))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::MalformedRecord {
            line: 1,
            message: "empty embedding file".into(),
        })?;
        let header = header.map_err(|e| Error::io("embedding text", e))?;
        let mut parts = header.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedRecord {
                line: 1,
                message: "bad header".into(),
            })?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedRecord {
                line: 1,
                message: "bad header".into(),
            })?;
        let mut table = EmbeddingTable::new(dim);
        for (lineno, line) in lines {
            let line = line.map_err(|e| Error::io("embedding text", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().expect("nonempty line").to_string();
            let vector: Vec<S> = parts
                .map(|s| {
                    s.parse::<f64>()
                        .map(S::from_f64_lossy)
                        .map_err(|_| Error::MalformedRecord {
                            line: lineno + 1,
                            message: format!("bad float {s:?}"),
                        })
                })
                .collect::<Result<_>>()?;
            table.insert(key, vector)?;
        }
        if table.len() != count {
            return Err(Error::MalformedRecord {
                line: 1,
                message: format!("header says {count} entries, file has {}", table.len()),
            });
        }
        Ok(table)
    }

    /// Little-endian binary export: u64 count, u64 dim, then per entry a
    /// u32 key length, the key bytes, and `dim` f64 values.
    pub fn write_binary<W: Write>(&self, mut sink: W) -> Result<()> {
        let io = |e| Error::io("embedding binary", e);
        sink.write_all(&(self.vectors.len() as u64).to_le_bytes()).map_err(io)?;
        sink.write_all(&(self.dim as u64).to_le_bytes()).map_err(io)?;
        for (key, vector) in &self.vectors {
            sink.write_all(&(key.len() as u32).to_le_bytes()).map_err(io)?;
            sink.write_all(key.as_bytes()).map_err(io)?;
            for x in vector {
                sink.write_all(&x.to_f64_lossy().to_le_bytes()).map_err(io)?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let io = |e| Error::io("embedding binary", e);
        let mut u64buf = [0u8; 8];
        reader.read_exact(&mut u64buf).map_err(io)?;
        let count = u64::from_le_bytes(u64buf) as usize;
        reader.read_exact(&mut u64buf).map_err(io)?;
        let dim = u64::from_le_bytes(u64buf) as usize;
        let mut table = EmbeddingTable::new(dim);
        for _ in 0..count {
            let mut u32buf = [0u8; 4];
            reader.read_exact(&mut u32buf).map_err(io)?;
            let key_len = u32::from_le_bytes(u32buf) as usize;
            let mut key = vec![0u8; key_len];
            reader.read_exact(&mut key).map_err(io)?;
            let key = String::from_utf8(key).map_err(|e| Error::Embedding(e.to_string()))?;
            let mut vector = Vec::with_capacity(dim);
            for _ in 0..dim {
                reader.read_exact(&mut u64buf).map_err(io)?;
                vector.push(S::from_f64_lossy(f64::from_le_bytes(u64buf)));
            }
            table.insert(key, vector)?;
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingTable<f64> {
        let mut t = EmbeddingTable::new(3);
        t.insert("v1", vec![1.0, -0.5, 0.25]).unwrap();
        t.insert("v2", vec![0.1, 0.2, 0.3]).unwrap();
        t
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut t = EmbeddingTable::<f64>::new(3);
        assert!(matches!(
            t.insert("v", vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn text_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_text(&mut buf).unwrap();
        let back: EmbeddingTable<f64> = EmbeddingTable::read_text(&buf[..]).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn binary_round_trip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        let back: EmbeddingTable<f64> = EmbeddingTable::read_binary(&buf[..]).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn binary_f32_to_f64_widening_reads_back() {
        let mut t = EmbeddingTable::<f32>::new(2);
        t.insert("a", vec![0.5f32, -1.25]).unwrap();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        let wide: EmbeddingTable<f64> = EmbeddingTable::read_binary(&buf[..]).unwrap();
        assert_eq!(wide.get("a"), Some(&[0.5f64, -1.25][..]));
    }
}
