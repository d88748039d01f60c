//! Seeded synthetic corpora and datasets for tests and offline demos.
//!
//! Vocabulary is made of generated pseudo-words, so every document and
//! every abstract owns words no other one uses.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::MockBackend;
use crate::eval::perturb_summary;
use crate::pipeline::{write_jsonl, GoldLabel, SummaryPair};
use crate::retrieval::{CorpusDocument, CorpusTag};

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "kl", "st",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ai", "eo"];
const CODAS: &[&str] = &["", "n", "r", "s", "x", "l"];

/// Generator of never-repeating pseudo-words.
pub struct WordForge {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl WordForge {
    pub fn new(seed: u64) -> Self {
        WordForge {
            rng: ChaCha8Rng::seed_from_u64(seed),
            used: HashSet::new(),
        }
    }

    pub fn word(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(&mut self.rng).expect("non-empty"));
                w.push_str(VOWELS.choose(&mut self.rng).expect("non-empty"));
            }
            w.push_str(CODAS.choose(&mut self.rng).expect("non-empty"));
            if w.len() >= 4 && self.used.insert(w.clone()) {
                return w;
            }
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Abstract-style sentences. Slots: a, b, c pseudo-words, n numeral.
const ABSTRACT_TEMPLATES: &[&str] = &[
    "Researchers measured {a} {b} levels in {n} adults with {c}.",
    "The {a} group showed a {n} percent drop in {b} {c}.",
    "After {n} weeks, {a} reduced {b} {c} in most participants.",
    "{A} {b} was detected in {n} of the {c} samples.",
    "Treatment with {a} improved {b} scores by {n} points in {c} cohorts.",
];

/// Reference-text sentences, sharing no content words with the abstract
/// templates.
const SNIPPET_TEMPLATES: &[&str] = &[
    "{A} is a {b} compound found in {n} coastal {c} habitats.",
    "Clinicians classify {a} into {n} distinct {b} {c} subtypes.",
    "The {a} {b} pathway involves roughly {n} enzymatic {c} steps.",
];

fn fill(template: &str, forge: &mut WordForge) -> String {
    let (a, b, c) = (forge.word(), forge.word(), forge.word());
    let n = forge.rng().random_range(3..90).to_string();
    template
        .replace("{A}", &capitalize(&a))
        .replace("{a}", &a)
        .replace("{b}", &b)
        .replace("{c}", &c)
        .replace("{n}", &n)
}

/// Factual pairs, their perturbed twins and the reference corpus.
#[derive(Debug, Clone)]
pub struct SeparationFixture {
    pub corpus: Vec<CorpusDocument>,
    pub factual: Vec<SummaryPair>,
    pub perturbed: Vec<SummaryPair>,
}

impl SeparationFixture {
    /// Factual pairs followed by their twins.
    pub fn pairs(&self) -> Vec<SummaryPair> {
        self.factual.iter().chain(&self.perturbed).cloned().collect()
    }

    /// Writes `corpus.jsonl` and `dataset.jsonl` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        let corpus = dir.join("corpus.jsonl");
        let dataset = dir.join("dataset.jsonl");
        write_jsonl(&corpus, &self.corpus)?;
        write_jsonl(&dataset, &self.pairs())?;
        Ok((corpus, dataset))
    }
}

/// Builds `n_pairs` factual summaries, each made of two sentences copied
/// from its abstract and one sentence copied from its own reference
/// document, plus a twin per summary perturbed by the mock perturber.
pub fn separation_fixture(seed: u64, n_pairs: usize) -> SeparationFixture {
    let mut forge = WordForge::new(seed);
    let perturber = MockBackend::default();
    let mut corpus = Vec::with_capacity(n_pairs);
    let mut factual = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let abstract_sentences: Vec<String> = ABSTRACT_TEMPLATES.iter().map(|t| fill(t, &mut forge)).collect();
        let snippet_sentences: Vec<String> = SNIPPET_TEMPLATES.iter().map(|t| fill(t, &mut forge)).collect();
        let title = format!("{} overview", capitalize(&forge.word()));
        corpus.push(CorpusDocument {
            doc_id: format!("ref{i:03}"),
            title,
            headings: Vec::new(),
            body: snippet_sentences.join(" "),
            corpus_tag: CorpusTag::Textbook,
        });

        let rng = forge.rng();
        let picked: Vec<&String> = abstract_sentences.choose_multiple(rng, 2).collect();
        let snippet = snippet_sentences.choose(rng).expect("non-empty");
        let mut summary = vec![picked[0].as_str(), picked[1].as_str()];
        let at = rng.random_range(0..=summary.len());
        summary.insert(at, snippet);
        factual.push(
            SummaryPair::new(format!("pair{i:03}"), summary.join(" "), abstract_sentences.join(" "))
                .with_label(GoldLabel::Factual),
        );
    }
    let perturbed = factual
        .iter()
        .map(|p| perturb_summary(p, &perturber).expect("mock perturber always changes sentences"))
        .collect();
    SeparationFixture {
        corpus,
        factual,
        perturbed,
    }
}

/// Uniform random scores, one per id, from `seed`.
pub fn random_scores(ids: &[String], seed: u64) -> Vec<(String, Option<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.iter().map(|id| (id.clone(), Some(rng.random::<f64>()))).collect()
}

/// Textbook-style documents with the awkward shapes a splitter has to
/// cope with: long paragraphs, runs of blank lines, long single lines,
/// unbroken tokens longer than a chunk, and non-ASCII text.
pub fn chunker_fixture(seed: u64, n_docs: usize) -> Vec<CorpusDocument> {
    let mut forge = WordForge::new(seed);
    (0..n_docs)
        .map(|i| {
            let mut body = String::new();
            let paragraphs = forge.rng().random_range(1..8);
            for p in 0..paragraphs {
                if p > 0 {
                    let gap = ["\n\n", "\n", "\n\n\n", "\n \n"][forge.rng().random_range(0..4)];
                    body.push_str(gap);
                }
                let sentences = forge.rng().random_range(1..30);
                for s in 0..sentences {
                    if s > 0 {
                        body.push(' ');
                    }
                    let words = forge.rng().random_range(3..25);
                    let mut sentence: Vec<String> = (0..words).map(|_| forge.word()).collect();
                    sentence[0] = capitalize(&sentence[0]);
                    body.push_str(&sentence.join(" "));
                    body.push_str([".", "!", "?", "; é", "."][forge.rng().random_range(0..5)]);
                }
                match forge.rng().random_range(0..10) {
                    0 => body.push_str(&format!(" {}", "x".repeat(forge.rng().random_range(1000..2600)))),
                    1 => body.push_str(" μ-receptor ☃ naïve café"),
                    _ => {}
                }
            }
            CorpusDocument {
                doc_id: format!("doc{i:03}"),
                title: capitalize(&forge.word()),
                headings: Vec::new(),
                body,
                corpus_tag: CorpusTag::Textbook,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::split_sentences;
    use crate::text::tokenize;

    #[test]
    fn fixture_is_deterministic_and_shaped() {
        let a = separation_fixture(11, 5);
        let b = separation_fixture(11, 5);
        assert_eq!(a.pairs(), b.pairs());
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.pairs().len(), 10);
        for (f, t) in a.factual.iter().zip(&a.perturbed) {
            assert_eq!(split_sentences(&f.summary_text).len(), 3);
            assert_eq!(t.id, format!("{}-perturbed", f.id));
            assert_ne!(f.summary_text, t.summary_text);
        }
    }

    #[test]
    fn snippet_vocabulary_is_disjoint_from_abstracts() {
        let fx = separation_fixture(3, 4);
        let words = |s: &str| -> HashSet<String> {
            tokenize(s)
                .into_iter()
                .filter(|t| crate::text::is_content(&t.lower) && !t.lower.chars().all(|c| c.is_ascii_digit()))
                .map(|t| t.lower)
                .collect()
        };
        for (doc, pair) in fx.corpus.iter().zip(&fx.factual) {
            assert!(words(&doc.body).is_disjoint(&words(&pair.abstract_text)));
        }
    }

    #[test]
    fn chunker_fixture_has_long_documents() {
        let docs = chunker_fixture(1, 50);
        assert_eq!(docs.len(), 50);
        assert!(docs.iter().any(|d| d.body.len() > 5000));
        assert!(docs.iter().all(|d| !d.body.trim().is_empty()));
    }
}
