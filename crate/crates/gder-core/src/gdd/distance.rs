//! Distance functions over attribute values.
//!
//! Every function returns 0 when either argument is the wildcard `*`, so a
//! missing value never violates a constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::pseudo::WILDCARD;

/// Supported distance function kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceFn {
    /// Levenshtein distance divided by the longer length; in [0, 1].
    NormalizedEdit,
    /// 0 when equal, 1 otherwise.
    Exact,
    /// Absolute difference of numeric interpretations; unbounded above.
    NumericAbs,
    /// 1 - Jaccard overlap of whitespace token sets; in [0, 1].
    JaccardToken,
}

impl DistanceFn {
    pub fn apply(&self, a: &str, b: &str) -> Result<f64> {
        if a == WILDCARD || b == WILDCARD {
            return Ok(0.0);
        }
        match self {
            DistanceFn::NormalizedEdit => Ok(normalized_edit(a, b)),
            DistanceFn::Exact => Ok(if a == b { 0.0 } else { 1.0 }),
            DistanceFn::NumericAbs => {
                let x: f64 = a.trim().parse().map_err(|_| {
                    Error::Eval(format!("numeric distance on non-numeric value {a:?}"))
                })?;
                let y: f64 = b.trim().parse().map_err(|_| {
                    Error::Eval(format!("numeric distance on non-numeric value {b:?}"))
                })?;
                Ok((x - y).abs())
            }
            DistanceFn::JaccardToken => Ok(jaccard_token(a, b)),
        }
    }
}

/// Plain dynamic-programming Levenshtein over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j + 1] + 1).min(cur[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn normalized_edit(a: &str, b: &str) -> f64 {
    let max_len = a.chars().count().max(b.chars().count());
    if max_len == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / max_len as f64
}

fn jaccard_token(a: &str, b: &str) -> f64 {
    let ta: std::collections::BTreeSet<&str> = a.split_whitespace().collect();
    let tb: std::collections::BTreeSet<&str> = b.split_whitespace().collect();
    if ta.is_empty() && tb.is_empty() {
        return 0.0;
    }
    let inter = ta.intersection(&tb).count() as f64;
    let union = ta.union(&tb).count() as f64;
    1.0 - inter / union
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edit_distance_on_similar_names() {
        assert_eq!(levenshtein("Leese", "Liese"), 1);
        assert!((normalized_edit("Leese", "Liese") - 0.2).abs() < 1e-12);
    }

    #[test]
    fn wildcard_short_circuits_to_zero() {
        for f in [
            DistanceFn::NormalizedEdit,
            DistanceFn::Exact,
            DistanceFn::NumericAbs,
            DistanceFn::JaccardToken,
        ] {
            assert_eq!(f.apply("Leese", WILDCARD).unwrap(), 0.0);
            assert_eq!(f.apply(WILDCARD, "anything").unwrap(), 0.0);
        }
    }

    #[test]
    fn exact_is_binary() {
        assert_eq!(DistanceFn::Exact.apply("Absolem", "Absolem").unwrap(), 0.0);
        assert_eq!(DistanceFn::Exact.apply("Absolem", "Dormouse").unwrap(), 1.0);
    }

    #[test]
    fn numeric_abs_rejects_garbage() {
        assert!(DistanceFn::NumericAbs.apply("12", "ten").is_err());
        assert_eq!(DistanceFn::NumericAbs.apply("12", "9.5").unwrap(), 2.5);
    }

    #[test]
    fn normalized_edit_bounds() {
        for (a, b) in [("", ""), ("a", ""), ("kitten", "sitting"), ("abc", "xyz")] {
            let d = normalized_edit(a, b);
            assert!((0.0..=1.0).contains(&d), "{a:?} vs {b:?} gave {d}");
        }
    }

    #[test]
    fn jaccard_token_overlap() {
        let d = DistanceFn::JaccardToken
            .apply("summer session ale", "summer ale")
            .unwrap();
        assert!((d - (1.0 - 2.0 / 3.0)).abs() < 1e-12);
    }
}
