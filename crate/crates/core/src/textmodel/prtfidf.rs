//! Probabilistic TFIDF classifier.
//!
//! Class term distributions come from idf-weighted term counts with an
//! additive `1/V` smoothing. A document is scored by naive Bayes on its
//! length-normalized term frequencies scaled to the mean training length, so
//! repeating a document's words does not change its classification. The
//! last class models general text and is dropped from the state vector.

use std::io::{BufRead, Write};

use super::{Idf, StateVector, MAX_COMPONENT};
use crate::environment::{Document, SnapshotLines};
use crate::textmodel::pddp::Clustering;
use crate::{Error, Result};

const SNAPSHOT_MAGIC: &str = "forage-classifier 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    k: usize,
    vocabulary: usize,
    /// `(k + 1) × V` natural-log term probabilities; row `k` is the background.
    log_probs: Vec<Vec<f64>>,
    log_priors: Vec<f64>,
    idf: Vec<f64>,
    /// Token count a document's normalized frequencies are scaled to.
    reference_length: f64,
    lambda: f64,
}

/// Trains on `docs` partitioned by `clustering`, plus a background class.
pub fn train_prtfidf(
    docs: &[Document],
    clustering: &Clustering,
    background: &[Document],
    idf: &Idf,
) -> Result<Classifier> {
    if background.is_empty() {
        return Err(Error::EmptyCorpus("background corpus"));
    }
    if clustering.assignments.len() != docs.len() {
        return Err(Error::DimensionMismatch {
            expected: docs.len(),
            found: clustering.assignments.len(),
        });
    }
    let k = clustering.k;
    let v = idf.len();
    let mut mass = vec![vec![0.0; v]; k + 1];
    let mut counts = vec![0usize; k + 1];
    let mut add = |class: usize, doc: &Document| {
        counts[class] += 1;
        for &(t, c) in &doc.terms {
            if let Some(w) = idf.weight(t) {
                mass[class][t as usize] += f64::from(c) * w;
            }
        }
    };
    for (doc, &c) in docs.iter().zip(&clustering.assignments) {
        add(c, doc);
    }
    for doc in background {
        add(k, doc);
    }
    if let Some(empty) = counts[..k].iter().position(|&n| n == 0) {
        return Err(Error::EmptyCluster(empty));
    }

    let smoothing = 1.0 / v as f64;
    let log_probs: Vec<Vec<f64>> = mass
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + 1.0;
            row.iter().map(|m| ((m + smoothing) / total).ln()).collect()
        })
        .collect();
    let n_total: usize = counts.iter().sum();
    let log_priors = counts.iter().map(|&n| (n as f64 / n_total as f64).ln()).collect();

    let known_len = |d: &Document| -> f64 {
        d.terms
            .iter()
            .filter(|&&(t, _)| (t as usize) < v)
            .map(|&(_, c)| f64::from(c))
            .sum()
    };
    let reference_length = docs.iter().map(known_len).sum::<f64>() / docs.len().max(1) as f64;

    let mut classifier = Classifier {
        k,
        vocabulary: v,
        log_probs,
        log_priors,
        idf: idf.weights().to_vec(),
        reference_length: reference_length.max(1.0),
        lambda: 1.0,
    };
    classifier.lambda = classifier.calibrate(docs);
    Ok(classifier)
}

impl Classifier {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vocabulary(&self) -> usize {
        self.vocabulary
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    /// Unnormalized log posteriors over all `k + 1` classes.
    pub fn log_scores(&self, d: &Document) -> Vec<f64> {
        let known: Vec<(usize, f64)> = d
            .terms
            .iter()
            .filter(|&&(t, _)| (t as usize) < self.vocabulary)
            .map(|&(t, c)| (t as usize, f64::from(c)))
            .collect();
        let len: f64 = known.iter().map(|p| p.1).sum();
        let scale = if len > 0.0 { self.reference_length / len } else { 0.0 };
        self.log_priors
            .iter()
            .zip(&self.log_probs)
            .map(|(prior, row)| prior + scale * known.iter().map(|&(t, c)| c * row[t]).sum::<f64>())
            .collect()
    }

    /// Normalized posteriors over all `k + 1` classes.
    pub fn posteriors(&self, d: &Document) -> Vec<f64> {
        let scores = self.log_scores(d);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / total).collect()
    }

    /// Log posteriors of the `k` clusters centered to zero mean.
    pub fn centered_scores(&self, d: &Document) -> Vec<f64> {
        let mut z = self.log_scores(d);
        z.truncate(self.k);
        let mean = z.iter().sum::<f64>() / self.k as f64;
        z.iter_mut().for_each(|x| *x -= mean);
        z
    }

    pub fn classify(&self, d: &Document) -> StateVector {
        let s = self
            .centered_scores(d)
            .into_iter()
            .map(|z| (self.lambda * z).tanh().clamp(-MAX_COMPONENT, MAX_COMPONENT))
            .collect();
        StateVector::new(s)
    }

    /// λ such that the median `|λ z|` over the training documents is 1.
    fn calibrate(&self, docs: &[Document]) -> f64 {
        let mut all: Vec<f64> = docs
            .iter()
            .flat_map(|d| self.centered_scores(d))
            .map(f64::abs)
            .collect();
        if all.is_empty() {
            return 1.0;
        }
        let mid = all.len() / 2;
        let (_, median, _) = all.select_nth_unstable_by(mid, f64::total_cmp);
        if *median > 0.0 && median.is_finite() {
            1.0 / *median
        } else {
            1.0
        }
    }

    pub fn write_snapshot(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{SNAPSHOT_MAGIC}")?;
        writeln!(
            w,
            "shape {} {} {:?} {:?}",
            self.k, self.vocabulary, self.reference_length, self.lambda
        )?;
        write_row(&mut w, &self.log_priors)?;
        write_row(&mut w, &self.idf)?;
        for row in &self.log_probs {
            write_row(&mut w, row)?;
        }
        Ok(())
    }

    pub fn read_snapshot(r: impl BufRead) -> Result<Self> {
        let mut lines = SnapshotLines::new(r, "classifier snapshot");
        let magic = lines.next_line()?;
        if magic != SNAPSHOT_MAGIC {
            return Err(lines.error(format!("bad header `{magic}`")));
        }
        let shape = lines.tagged("shape", 4)?;
        let k: usize = lines.parse(&shape[0])?;
        let vocabulary: usize = lines.parse(&shape[1])?;
        let reference_length: f64 = lines.parse(&shape[2])?;
        let lambda: f64 = lines.parse(&shape[3])?;
        let mut row = |len: usize| -> Result<Vec<f64>> {
            let r = lines.floats()?;
            if r.len() != len {
                return Err(lines.error(format!("expected {len} values, found {}", r.len())));
            }
            Ok(r)
        };
        let log_priors = row(k + 1)?;
        let idf = row(vocabulary)?;
        let log_probs = (0..=k).map(|_| row(vocabulary)).collect::<Result<_>>()?;
        Ok(Classifier {
            k,
            vocabulary,
            log_probs,
            log_priors,
            idf,
            reference_length,
            lambda,
        })
    }

    /// Term probabilities of one class (for inspection and tests).
    pub fn term_probabilities(&self, class: usize) -> Vec<f64> {
        self.log_probs[class].iter().map(|l| l.exp()).collect()
    }

    pub fn priors(&self) -> Vec<f64> {
        self.log_priors.iter().map(|l| l.exp()).collect()
    }
}

fn write_row(w: &mut impl Write, row: &[f64]) -> Result<()> {
    let text: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
    writeln!(w, "{}", text.join(" "))?;
    Ok(())
}
