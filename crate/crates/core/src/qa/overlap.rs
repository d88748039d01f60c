//! Answer-overlap scoring between a gold answer and a predicted span.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendError, EmbeddingBackend};
use crate::text::squad_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapBackendKind {
    /// Cosine similarity of sentence embeddings, clamped to [0, 1].
    #[default]
    SemanticEmbedding,
    /// SQuAD token F1.
    LexicalF1,
}

impl std::fmt::Display for OverlapBackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OverlapBackendKind::SemanticEmbedding => "semantic_embedding",
            OverlapBackendKind::LexicalF1 => "lexical_f1",
        })
    }
}

/// SQuAD token F1 after answer normalization. Two answers that both
/// normalize to nothing agree fully; one empty side scores 0.
pub fn lexical_f1(gold: &str, predicted: &str) -> f64 {
    let g = squad_tokens(gold);
    let p = squad_tokens(predicted);
    if g.is_empty() || p.is_empty() {
        return if g.is_empty() && p.is_empty() { 1.0 } else { 0.0 };
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Cosine similarity clamped to [0, 1]; 0 if either vector has zero norm.
pub fn clamped_cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
}

/// Overlap in [0, 1] between a gold answer and a predicted span. Identical
/// strings (after SQuAD normalization) score 1 under both backends.
pub fn score_overlap(
    gold: &str,
    predicted: &str,
    kind: OverlapBackendKind,
    embedder: &dyn EmbeddingBackend,
) -> Result<f64, BackendError> {
    match kind {
        OverlapBackendKind::LexicalF1 => Ok(lexical_f1(gold, predicted)),
        OverlapBackendKind::SemanticEmbedding => {
            if squad_tokens(gold) == squad_tokens(predicted) {
                return Ok(1.0);
            }
            let v = embedder.embed(&[gold.to_owned(), predicted.to_owned()])?;
            Ok(clamped_cosine(&v[0], &v[1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MockBackend;
    use proptest::prelude::*;

    /// Counts shared tokens with a quadratic scan instead of a multiset map.
    fn f1_oracle(gold: &str, pred: &str) -> f64 {
        let g = squad_tokens(gold);
        let mut p = squad_tokens(pred);
        if g.is_empty() && p.is_empty() {
            return 1.0;
        }
        let (gl, pl) = (g.len() as f64, p.len() as f64);
        let mut common = 0.0;
        for t in &g {
            if let Some(k) = p.iter().position(|x| x == t) {
                p.remove(k);
                common += 1.0;
            }
        }
        if common == 0.0 {
            0.0
        } else {
            2.0 * common / (gl + pl)
        }
    }

    #[test]
    fn f1_examples() {
        assert_eq!(lexical_f1("the cat sat", "cat sat"), 1.0);
        assert_eq!(lexical_f1("a", "the"), 1.0);
        assert_eq!(lexical_f1("cat", ""), 0.0);
        assert!((lexical_f1("64 adults received", "42 adults received") - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn semantic_identity_and_disjoint() {
        let m = MockBackend::default();
        let k = OverlapBackendKind::SemanticEmbedding;
        assert_eq!(score_overlap("Blood glucose", "blood glucose.", k, &m).unwrap(), 1.0);
        let far = score_overlap("insulin", "cholesterol", k, &m).unwrap();
        assert!(far < 0.2, "{far}");
        assert_eq!(clamped_cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(clamped_cosine(&[1.0, 0.0], &[-1.0, 0.0]), 0.0);
    }

    proptest! {
        #[test]
        fn f1_matches_oracle(gold in "[a-d ]{0,20}", pred in "[a-d ]{0,20}") {
            let got = lexical_f1(&gold, &pred);
            prop_assert!((got - f1_oracle(&gold, &pred)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&got));
        }

        #[test]
        fn overlap_in_unit_interval(gold in "[a-z ]{0,30}", pred in "[a-z ]{0,30}") {
            let m = MockBackend::new(3, 64);
            for k in [OverlapBackendKind::SemanticEmbedding, OverlapBackendKind::LexicalF1] {
                let v = score_overlap(&gold, &pred, k, &m).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert_eq!(score_overlap(&gold, &gold, OverlapBackendKind::LexicalF1, &m).unwrap(), 1.0);
            prop_assert_eq!(score_overlap(&gold, &gold, OverlapBackendKind::SemanticEmbedding, &m).unwrap(), 1.0);
        }
    }
}
