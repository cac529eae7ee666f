//! Document representation: PDDP clustering of a bootstrap corpus, a
//! PrTFIDF classifier over the clusters, and the tanh-squashed state vectors
//! the foragers learn on.

pub mod pddp;
pub mod prtfidf;

use crate::environment::{Document, Environment, TopicModel, UrlId};
use crate::rng::SimRng;
use crate::{Error, Result};
use rand::Rng;

pub use pddp::{pddp_cluster, principal_direction, Clustering};
pub use prtfidf::{train_prtfidf, Classifier};

/// `(index, value)` pairs sorted by index.
pub type SparseVec = Vec<(u32, f64)>;

/// Largest representable magnitude strictly below 1.
pub const MAX_COMPONENT: f64 = 1.0 - f64::EPSILON / 2.0;

/// Smoothed inverse document frequencies over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Idf {
    weights: Vec<f64>,
}

impl Idf {
    /// `ln((1 + N) / (1 + df)) + 1` per term.
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a Document>, vocabulary: usize) -> Self {
        let mut df = vec![0usize; vocabulary];
        let mut n = 0usize;
        for d in docs {
            n += 1;
            for &(t, _) in &d.terms {
                if let Some(x) = df.get_mut(t as usize) {
                    *x += 1;
                }
            }
        }
        let weights = df
            .iter()
            .map(|&f| ((1.0 + n as f64) / (1.0 + f as f64)).ln() + 1.0)
            .collect();
        Idf { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, term: u32) -> Option<f64> {
        self.weights.get(term as usize).copied()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unit-length TFIDF vector of `d`; empty documents map to the zero vector.
    pub fn tfidf(&self, d: &Document) -> SparseVec {
        let mut v: SparseVec = d
            .terms
            .iter()
            .filter_map(|&(t, c)| self.weight(t).map(|w| (t, f64::from(c) * w)))
            .collect();
        let norm = v.iter().map(|&(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|p| p.1 /= norm);
        }
        v
    }
}

/// Classifier output for one document, every component in (−1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<f64>);

impl StateVector {
    pub fn new(components: Vec<f64>) -> Self {
        debug_assert!(components.iter().all(|x| x.abs() < 1.0));
        StateVector(components)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
            .0
    }
}

/// Classifier outputs for every node of an environment, indexed by `UrlId`.
/// Documents never change, so each node is classified once.
#[derive(Debug, Clone, Default)]
pub struct StateTable {
    states: Vec<StateVector>,
}

impl StateTable {
    pub fn build(env: &Environment, classifier: &Classifier) -> Self {
        let mut table = StateTable::default();
        table.extend(env, classifier);
        table
    }

    /// Classifies nodes added since the last call.
    pub fn extend(&mut self, env: &Environment, classifier: &Classifier) {
        for doc in &env.documents()[self.states.len()..] {
            self.states.push(classifier.classify(doc));
        }
    }

    pub fn get(&self, u: UrlId) -> Result<&StateVector> {
        self.states.get(u.index()).ok_or(Error::UnknownUrl(u))
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Everything the bootstrap produces.
#[derive(Debug, Clone)]
pub struct TextModel {
    pub corpus: Vec<Document>,
    pub clustering: Clustering,
    pub classifier: Classifier,
}

/// Samples `n` documents with topics drawn uniformly.
pub fn sample_corpus(topics: &TopicModel, n: usize, rng: &mut SimRng) -> Vec<Document> {
    (0..n)
        .map(|_| {
            let topic = rng.random_range(0..topics.topics());
            topics.sample_document(topic, 0, rng)
        })
        .collect()
}

/// Clusters a bootstrap corpus into `k` classes and trains the classifier,
/// with a separate uniformly mixed corpus as the background class.
pub fn build_text_model(corpus: Vec<Document>, background: &[Document], k: usize, vocabulary: usize) -> Result<TextModel> {
    let idf = Idf::fit(corpus.iter(), vocabulary);
    let vectors: Vec<SparseVec> = corpus.iter().map(|d| idf.tfidf(d)).collect();
    let clustering = pddp_cluster(&vectors, vocabulary, k)?;
    let classifier = train_prtfidf(&corpus, &clustering, background, &idf)?;
    Ok(TextModel {
        corpus,
        clustering,
        classifier,
    })
}

/// Bootstrap from the environment's topic model.
pub fn bootstrap(
    topics: &TopicModel,
    bootstrap_docs: usize,
    background_docs: usize,
    k: usize,
    rng: &mut SimRng,
) -> Result<TextModel> {
    let corpus = sample_corpus(topics, bootstrap_docs, rng);
    let background = sample_corpus(topics, background_docs, rng);
    build_text_model(corpus, &background, k, topics.vocabulary())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tfidf_is_unit_length() {
        let docs = vec![
            Document::from_counts(vec![(0, 2), (3, 1)], 0, 0),
            Document::from_counts(vec![(3, 5)], 0, 0),
        ];
        let idf = Idf::fit(docs.iter(), 4);
        for d in &docs {
            let v = idf.tfidf(d);
            let n: f64 = v.iter().map(|p| p.1 * p.1).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert!(idf.tfidf(&Document::from_counts(vec![], 0, 0)).is_empty());
        // rarer term weighs more
        assert!(idf.weight(0).unwrap() > idf.weight(3).unwrap());
    }

    #[test]
    fn argmax_picks_first_maximum() {
        assert_eq!(StateVector::new(vec![0.1, 0.5, 0.5, -0.2]).argmax(), 1);
    }
}
