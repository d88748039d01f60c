use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::prompt::{self, NO_ANSWER};
use super::{BackendError, ChatBackend, EmbeddingBackend};
use crate::eval::perturb::mock_perturb_sentence;
use crate::pipeline::classify::{heuristic_overlap, DEFAULT_THETA};
use crate::qa::answering::cloze_answer;
use crate::qa::answers::KeywordExtractor;
use crate::qa::questions::cloze_question;
use crate::text::{is_content, tokenize};

/// Frozen seed of the mock embedder. With it, 100 random token-disjoint
/// text pairs at dimension 768 have |cosine| well inside 0.2.
pub const DEFAULT_MOCK_SEED: u64 = 0x5E_ED0F_FAC7;

/// Deterministic offline backend.
///
/// Chat prompts are recognized by their system text, the user text is
/// parsed back into bindings, and a rule answers per template:
///
/// | template | reply |
/// |---|---|
/// | classifier | `No` when heuristic overlap ≥ θ, else `Yes` |
/// | answer_extraction | keyword-mode phrases joined by `, ` |
/// | judge | `round(100 · overlap)` |
/// | perturbation | first numeral + 5, else a negation |
/// | question_generation | answer replaced by "what", ending in `?` |
/// | question_answering | best cloze span, else `NoAnswer` |
///
/// Embeddings sum one seeded pseudo-random vector per content-token
/// occurrence and L2-normalize.
#[derive(Debug, Clone)]
pub struct MockBackend {
    seed: u64,
    dimension: usize,
    theta: f64,
}

impl Default for MockBackend {
    fn default() -> Self {
        MockBackend::new(DEFAULT_MOCK_SEED, 768)
    }
}

impl MockBackend {
    pub fn new(seed: u64, dimension: usize) -> Self {
        MockBackend {
            seed,
            dimension,
            theta: DEFAULT_THETA,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(token.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        let mut rng = ChaCha8Rng::from_seed(key);
        (0..self.dimension).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    pub fn embed_one(&self, text: &str) -> Vec<f32> {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokenize(text) {
            if is_content(&t.lower) {
                *counts.entry(t.lower).or_default() += 1;
            }
        }
        let mut acc = vec![0.0f64; self.dimension];
        for (token, count) in &counts {
            for (a, v) in acc.iter_mut().zip(self.token_vector(token)) {
                *a += f64::from(*count) * v;
            }
        }
        let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            acc.iter_mut().for_each(|x| *x /= norm);
        }
        acc.into_iter().map(|x| x as f32).collect()
    }

    fn answer(&self, template_id: &str, b: &BTreeMap<String, String>) -> Result<String, BackendError> {
        let get = |k: &str| b.get(k).map(String::as_str).unwrap_or("");
        let reply = match template_id {
            prompt::CLASSIFIER => {
                if heuristic_overlap(get("input"), get("abstract")) >= self.theta {
                    "No".to_owned()
                } else {
                    "Yes".to_owned()
                }
            }
            prompt::ANSWER_EXTRACTION => KeywordExtractor::default().extract(get("input")).join(", "),
            prompt::JUDGE => {
                let overlap = heuristic_overlap(get("input"), get("abstract"));
                format!("{}", (overlap * 100.0).round() as u32)
            }
            prompt::PERTURBATION => mock_perturb_sentence(get("input")),
            prompt::QUESTION_GENERATION => {
                cloze_question(get("input"), get("answer")).ok_or(BackendError::UnknownTemplate)?
            }
            prompt::QUESTION_ANSWERING => cloze_answer(get("question"), get("context"))
                .map(|(s, e)| get("context")[s..e].to_owned())
                .unwrap_or_else(|| NO_ANSWER.to_owned()),
            _ => return Err(BackendError::UnknownTemplate),
        };
        Ok(reply)
    }
}

impl ChatBackend for MockBackend {
    fn complete(&self, system_text: &str, user_text: &str) -> Result<String, BackendError> {
        let tpl = prompt::recognize(system_text).ok_or(BackendError::UnknownTemplate)?;
        let bindings = tpl.parse_user(user_text).ok_or(BackendError::UnknownTemplate)?;
        self.answer(&tpl.template_id, &bindings)
    }
}

impl EmbeddingBackend for MockBackend {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, BackendError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::prompt::{template, CLASSIFIER};

    fn cosine(a: &[f32], b: &[f32]) -> f64 {
        a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
    }

    #[test]
    fn empty_batch() {
        assert!(MockBackend::default().embed(&[]).unwrap().is_empty());
    }

    #[test]
    fn same_text_same_vector() {
        let m = MockBackend::default();
        let v = m.embed(&["asthma inhaler".into(), "asthma inhaler".into()]).unwrap();
        assert_eq!(v[0], v[1]);
        assert_eq!(v[0].len(), 768);
        assert!((cosine(&v[0], &v[0]) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn disjoint_texts_are_nearly_orthogonal() {
        // 100 random token-disjoint pairs drawn from a synthetic vocabulary.
        let m = MockBackend::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let words = |rng: &mut ChaCha8Rng, tag: &str| {
                (0..rng.random_range(1..12))
                    .map(|_| format!("{tag}{}", rng.random_range(0..5000)))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let a = words(&mut rng, "left");
            let b = words(&mut rng, "right");
            let v = m.embed(&[a, b]).unwrap();
            worst = worst.max(cosine(&v[0], &v[1]).abs());
        }
        assert!(worst <= 0.2, "worst cosine {worst}");
    }

    #[test]
    fn classifier_rule_restates_heuristic() {
        let m = MockBackend::default();
        let tpl = template(CLASSIFIER);
        let abstract_text = "Gout causes joint pain. Uric acid crystals form in joints.";
        let near: BTreeMap<&str, &str> = [("input", "Gout causes joint pain."), ("abstract", abstract_text)].into();
        let far: BTreeMap<&str, &str> = [
            ("input", "Inhalers open narrowed airways quickly."),
            ("abstract", abstract_text),
        ]
        .into();
        assert_eq!(m.complete_prompt(&tpl.render(&near).unwrap()).unwrap(), "No");
        assert_eq!(m.complete_prompt(&tpl.render(&far).unwrap()).unwrap(), "Yes");
    }

    #[test]
    fn unknown_prompt_is_an_error() {
        let m = MockBackend::default();
        assert!(matches!(
            m.complete("hello", "world"),
            Err(BackendError::UnknownTemplate)
        ));
    }
}
