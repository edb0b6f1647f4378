//! Feed-forward auto-encoder for compressing aggregated attribute vectors.
//!
//! Encoder and decoder are two-layer networks (ReLU hidden, identity output);
//! training minimizes the mean squared reconstruction error by gradient
//! descent. Parameters live in one flat vector so analytic gradients can be
//! checked against finite differences directly.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct AutoEncoder<S: Real> {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    params: Vec<S>,
}

/// Parameter block offsets inside the flat vector.
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    w4: usize,
    b4: usize,
    total: usize,
}

fn layout(input: usize, hidden: usize, latent: usize) -> Layout {
    let w1 = 0;
    let b1 = w1 + hidden * input;
    let w2 = b1 + hidden;
    let b2 = w2 + latent * hidden;
    let w3 = b2 + latent;
    let b3 = w3 + hidden * latent;
    let w4 = b3 + hidden;
    let b4 = w4 + input * hidden;
    Layout {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        w4,
        b4,
        total: b4 + input,
    }
}

impl<S: Real> AutoEncoder<S> {
    /// Fresh network with Glorot-uniform weights and zero biases.
    pub fn new(input_dim: usize, hidden_dim: usize, latent_dim: usize, seed: u64) -> Result<Self> {
        if latent_dim >= input_dim {
            return Err(Error::Config(format!(
                "latent dim {latent_dim} must be smaller than input dim {input_dim}"
            )));
        }
        if hidden_dim == 0 || latent_dim == 0 {
            return Err(Error::Config("zero-sized auto-encoder layer".into()));
        }
        let lay = layout(input_dim, hidden_dim, latent_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![S::zero(); lay.total];
        let mut init = |from: usize, count: usize, fan_in: usize, fan_out: usize| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for slot in &mut params[from..from + count] {
                *slot = S::from_f64_lossy((rng.random::<f64>() * 2.0 - 1.0) * bound);
            }
        };
        init(lay.w1, hidden_dim * input_dim, input_dim, hidden_dim);
        init(lay.w2, latent_dim * hidden_dim, hidden_dim, latent_dim);
        init(lay.w3, hidden_dim * latent_dim, latent_dim, hidden_dim);
        init(lay.w4, input_dim * hidden_dim, hidden_dim, input_dim);
        Ok(AutoEncoder {
            input_dim,
            hidden_dim,
            latent_dim,
            params,
        })
    }

    fn lay(&self) -> Layout {
        layout(self.input_dim, self.hidden_dim, self.latent_dim)
    }

    pub fn params(&self) -> &[S] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[S]) {
        assert_eq!(params.len(), self.params.len());
        self.params.copy_from_slice(params);
    }

    fn affine(&self, w: usize, b: usize, rows: usize, cols: usize, x: &[S]) -> Vec<S> {
        let p = &self.params;
        (0..rows)
            .map(|r| {
                let mut acc = p[b + r];
                let row = &p[w + r * cols..w + (r + 1) * cols];
                for (wi, xi) in row.iter().zip(x) {
                    acc += *wi * *xi;
                }
                acc
            })
            .collect()
    }

    #[allow(clippy::type_complexity)]
    fn forward_full(&self, x: &[S]) -> (Vec<S>, Vec<S>, Vec<S>, Vec<S>, Vec<S>, Vec<S>) {
        let lay = self.lay();
        let z1 = self.affine(lay.w1, lay.b1, self.hidden_dim, self.input_dim, x);
        let h1: Vec<S> = z1.iter().map(|v| v.max(S::zero())).collect();
        let l = self.affine(lay.w2, lay.b2, self.latent_dim, self.hidden_dim, &h1);
        let z3 = self.affine(lay.w3, lay.b3, self.hidden_dim, self.latent_dim, &l);
        let h2: Vec<S> = z3.iter().map(|v| v.max(S::zero())).collect();
        let o = self.affine(lay.w4, lay.b4, self.input_dim, self.hidden_dim, &h2);
        (z1, h1, l, z3, h2, o)
    }

    pub fn encode(&self, x: &[S]) -> Vec<S> {
        let (_, _, l, _, _, _) = self.forward_full(x);
        l
    }

    /// Smallest |pre-activation| over both hidden layers and a whole batch.
    /// Finite-difference gradient checks are only meaningful when this is
    /// comfortably larger than the probe step (no ReLU kink is crossed).
    pub fn kink_distance(&self, batch: &[Vec<S>]) -> f64 {
        let mut min = f64::INFINITY;
        for x in batch {
            let (z1, _, _, z3, _, _) = self.forward_full(x);
            for z in z1.iter().chain(&z3) {
                min = min.min(z.to_f64_lossy().abs());
            }
        }
        min
    }

    pub fn reconstruct(&self, x: &[S]) -> Vec<S> {
        let (_, _, _, _, _, o) = self.forward_full(x);
        o
    }

    /// Mean squared reconstruction loss over a batch.
    pub fn loss(&self, batch: &[Vec<S>]) -> f64 {
        let mut total = 0.0;
        for x in batch {
            let o = self.reconstruct(x);
            total += o
                .iter()
                .zip(x)
                .map(|(a, b)| {
                    let d = (*a - *b).to_f64_lossy();
                    d * d
                })
                .sum::<f64>();
        }
        total / batch.len().max(1) as f64
    }

    /// Loss and its analytic gradient with respect to the flat parameters.
    pub fn loss_and_grad(&self, batch: &[Vec<S>]) -> (f64, Vec<S>) {
        let lay = self.lay();
        let p = &self.params;
        let mut grad = vec![S::zero(); lay.total];
        let mut total_loss = 0.0;
        let n = S::from_f64_lossy(batch.len().max(1) as f64);

        for x in batch {
            let (z1, h1, l, z3, h2, o) = self.forward_full(x);
            let d_o: Vec<S> = o
                .iter()
                .zip(x)
                .map(|(a, b)| (S::from_f64_lossy(2.0) * (*a - *b)) / n)
                .collect();
            total_loss += o
                .iter()
                .zip(x)
                .map(|(a, b)| {
                    let d = (*a - *b).to_f64_lossy();
                    d * d
                })
                .sum::<f64>();

            // output layer: o = w4 h2 + b4
            let mut d_h2 = vec![S::zero(); self.hidden_dim];
            for r in 0..self.input_dim {
                grad[lay.b4 + r] += d_o[r];
                for c in 0..self.hidden_dim {
                    grad[lay.w4 + r * self.hidden_dim + c] += d_o[r] * h2[c];
                    d_h2[c] += d_o[r] * p[lay.w4 + r * self.hidden_dim + c];
                }
            }
            // ReLU at decoder hidden
            let d_z3: Vec<S> = d_h2
                .iter()
                .zip(&z3)
                .map(|(g, z)| if *z > S::zero() { *g } else { S::zero() })
                .collect();
            // z3 = w3 l + b3
            let mut d_l = vec![S::zero(); self.latent_dim];
            for r in 0..self.hidden_dim {
                grad[lay.b3 + r] += d_z3[r];
                for c in 0..self.latent_dim {
                    grad[lay.w3 + r * self.latent_dim + c] += d_z3[r] * l[c];
                    d_l[c] += d_z3[r] * p[lay.w3 + r * self.latent_dim + c];
                }
            }
            // l = w2 h1 + b2
            let mut d_h1 = vec![S::zero(); self.hidden_dim];
            for r in 0..self.latent_dim {
                grad[lay.b2 + r] += d_l[r];
                for c in 0..self.hidden_dim {
                    grad[lay.w2 + r * self.hidden_dim + c] += d_l[r] * h1[c];
                    d_h1[c] += d_l[r] * p[lay.w2 + r * self.hidden_dim + c];
                }
            }
            // ReLU at encoder hidden
            let d_z1: Vec<S> = d_h1
                .iter()
                .zip(&z1)
                .map(|(g, z)| if *z > S::zero() { *g } else { S::zero() })
                .collect();
            // z1 = w1 x + b1
            for r in 0..self.hidden_dim {
                grad[lay.b1 + r] += d_z1[r];
                for c in 0..self.input_dim {
                    grad[lay.w1 + r * self.input_dim + c] += d_z1[r] * x[c];
                }
            }
        }
        (total_loss / batch.len().max(1) as f64, grad)
    }

    /// Full-batch gradient descent; returns the loss after each epoch.
    pub fn train(&mut self, batch: &[Vec<S>], epochs: usize, learning_rate: f64) -> Vec<f64> {
        let lr = S::from_f64_lossy(learning_rate);
        let mut losses = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            let (loss, grad) = self.loss_and_grad(batch);
            for (p, g) in self.params.iter_mut().zip(&grad) {
                *p -= lr * *g;
            }
            losses.push(loss);
        }
        losses
    }

    /// Dimension-annotated flat text format.
    pub fn write_text<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(
            sink,
            "{} {} {}",
            self.input_dim, self.hidden_dim, self.latent_dim
        )
        .map_err(|e| Error::io("autoencoder file", e))?;
        for p in &self.params {
            writeln!(sink, "{}", p.to_f64_lossy()).map_err(|e| Error::io("autoencoder file", e))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedRecord {
                line: 1,
                message: "empty autoencoder file".into(),
            })?
            .map_err(|e| Error::io("autoencoder file", e))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::MalformedRecord {
                line: 1,
                message: "bad dimension header".into(),
            })?;
        let [input, hidden, latent] = dims.as_slice() else {
            return Err(Error::MalformedRecord {
                line: 1,
                message: "expected three dimensions".into(),
            });
        };
        let mut ae = AutoEncoder::new(*input, *hidden, *latent, 0)?;
        let lay = ae.lay();
        let mut params = Vec::with_capacity(lay.total);
        for (lineno, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("autoencoder file", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let value: f64 = line.trim().parse().map_err(|_| Error::MalformedRecord {
                line: lineno + 2,
                message: format!("bad float {line:?}"),
            })?;
            params.push(S::from_f64_lossy(value));
        }
        if params.len() != lay.total {
            return Err(Error::MalformedRecord {
                line: 1,
                message: format!("expected {} parameters, found {}", lay.total, params.len()),
            });
        }
        ae.params = params;
        Ok(ae)
    }
}

/// Train an auto-encoder over keyed vectors and return the latent encodings
/// as an embedding table.
pub fn train_autoencoder<S: Real>(
    keyed_vectors: &[(String, Vec<S>)],
    latent_dim: usize,
    epochs: usize,
    hidden_dim: Option<usize>,
    learning_rate: f64,
    seed: u64,
) -> Result<(AutoEncoder<S>, EmbeddingTable<S>)> {
    let Some(first) = keyed_vectors.first() else {
        return Err(Error::Embedding("no vectors to train on".into()));
    };
    let input_dim = first.1.len();
    for (key, v) in keyed_vectors {
        if v.len() != input_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                got: v.len(),
            })
            .map_err(|e| Error::stage(format!("autoencoder input {key}"), e));
        }
    }
    let hidden = hidden_dim.unwrap_or_else(|| ((input_dim + latent_dim) / 2).max(latent_dim + 1));
    let mut ae = AutoEncoder::new(input_dim, hidden, latent_dim, seed)?;
    let batch: Vec<Vec<S>> = keyed_vectors.iter().map(|(_, v)| v.clone()).collect();
    ae.train(&batch, epochs, learning_rate);
    let mut table = EmbeddingTable::new(latent_dim);
    for (key, v) in keyed_vectors {
        table.insert(key.clone(), ae.encode(v))?;
    }
    Ok((ae, table))
}
