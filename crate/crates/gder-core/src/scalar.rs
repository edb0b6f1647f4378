//! Scalar abstraction for the numeric side of the engine.
//!
//! Embeddings, hashing, and the auto-encoder are generic over [`Real`] so the
//! same code runs in `f32` or `f64`. Concrete aliases live at the crate root.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable in vectors, training loops, and hashes.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` literals and RNG output.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Widen to `f64` for reporting and file formats.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

/// Dot product of two equal-length slices.
pub fn dot<S: Real>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Euclidean norm.
pub fn norm<S: Real>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// Scale `a` in place to unit norm; zero vectors are left untouched.
pub fn normalize<S: Real>(a: &mut [S]) {
    let n = norm(a);
    if n > S::zero() {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
}

/// Cosine similarity in [-1, 1]; zero vectors compare as 0.
pub fn cosine<S: Real>(a: &[S], b: &[S]) -> S {
    let na = norm(a);
    let nb = norm(b);
    if na == S::zero() || nb == S::zero() {
        return S::zero();
    }
    dot(a, b) / (na * nb)
}

/// Cosine distance `1 - cos`, clamped to [0, 2].
pub fn cosine_distance<S: Real>(a: &[S], b: &[S]) -> S {
    let d = S::one() - cosine(a, b);
    d.max(S::zero()).min(S::from_f64_lossy(2.0))
}

/// Numerically stable logistic function.
pub fn sigmoid<S: Real>(y: S) -> S {
    if y >= S::zero() {
        S::one() / (S::one() + (-y).exp())
    } else {
        let e = y.exp();
        e / (S::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert_eq!(sigmoid(0.0f32), 0.5);
    }

    #[test]
    fn cosine_of_parallel_vectors() {
        let a = [1.0f64, 2.0, 3.0];
        let b = [2.0f64, 4.0, 6.0];
        assert!((cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_zero_vector_is_noop() {
        let mut v = [0.0f32; 4];
        normalize(&mut v);
        assert_eq!(v, [0.0f32; 4]);
    }
}
