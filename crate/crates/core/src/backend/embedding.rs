use serde::{Deserialize, Serialize};

use crate::rng::hash_str;

pub const DEFAULT_STUB_DIM: usize = 64;

/// Unit-norm embedding vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f32>);

impl Embedding {
    /// Normalises `raw`; `None` when it has zero norm or non-finite entries.
    pub fn from_raw(mut raw: Vec<f32>) -> Option<Self> {
        if raw.iter().any(|v| !v.is_finite()) {
            return None;
        }
        normalize(&mut raw).then_some(Embedding(raw))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn cosine(&self, other: &Embedding) -> f64 {
        cosine(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }
}

/// Scales `v` to unit L2 norm in place. Returns false for a zero vector.
pub fn normalize(v: &mut [f32]) -> bool {
    let norm = v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt();
    if norm == 0.0 {
        return false;
    }
    for x in v.iter_mut() {
        *x = (f64::from(*x) / norm) as f32;
    }
    true
}

/// Cosine similarity accumulated in f64. Vectors of different length compare
/// over their common prefix.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

pub(crate) fn word_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

pub(crate) fn bucket_of(token: &str, dim: usize) -> usize {
    (hash_str(token) % dim as u64) as usize
}

/// Token-hash embedding: lowercase word tokens counted into `dim` buckets.
/// Text without word tokens hashes as a single token.
pub fn hash_embedding(text: &str, dim: usize) -> Vec<f32> {
    let mut v = vec![0.0f32; dim];
    let mut any = false;
    for tok in word_tokens(text) {
        v[bucket_of(&tok, dim)] += 1.0;
        any = true;
    }
    if !any {
        v[bucket_of(text, dim)] = 1.0;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn embed(s: &str) -> Embedding {
        Embedding::from_raw(hash_embedding(s, DEFAULT_STUB_DIM)).unwrap()
    }

    #[test]
    fn self_similarity_is_one() {
        let e = embed("red sneakers");
        assert!((e.cosine(&e) - 1.0).abs() < 1e-6);
        assert!((e.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shared_tokens_give_positive_similarity() {
        assert!(embed("red sneakers").cosine(&embed("red sneakers shoes")) > 0.0);
    }

    #[test]
    fn disjoint_buckets_give_zero_similarity() {
        // Search a word list for two texts whose bucket sets do not overlap.
        let words = ["apple", "river", "guitar", "violet", "marble", "tunnel", "quartz", "meadow"];
        let buckets = |ws: &[&str]| -> BTreeSet<usize> { ws.iter().map(|w| bucket_of(w, DEFAULT_STUB_DIM)).collect() };
        let mut found = None;
        'outer: for i in 0..words.len() {
            for j in 0..words.len() {
                for k in (j + 1)..words.len() {
                    if i == j || i == k {
                        continue;
                    }
                    let a = buckets(&[words[i]]);
                    let b = buckets(&[words[j], words[k]]);
                    if a.is_disjoint(&b) {
                        found = Some((words[i].to_string(), format!("{} {}", words[j], words[k])));
                        break 'outer;
                    }
                }
            }
        }
        let (a, b) = found.expect("some pair with disjoint buckets");
        assert_eq!(embed(&a).cosine(&embed(&b)), 0.0);
    }

    #[test]
    fn zero_vector_is_rejected() {
        assert!(Embedding::from_raw(vec![0.0; 4]).is_none());
        assert!(Embedding::from_raw(vec![f32::NAN, 1.0]).is_none());
    }

    #[test]
    fn punctuation_only_text_still_embeds() {
        assert!(Embedding::from_raw(hash_embedding("...", 16)).is_some());
    }
}
