//! Seeded discovery: content and link similarity, threshold ranking,
//! inlink-vote ideology labels and a multinomial naive Bayes framing classifier.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{CountVector, DocTermMatrix};
use crate::error::{Error, Result};
use crate::par;

/// Cosine of the angle between two count vectors; 0 when either is all-zero.
pub fn cosine_similarity(x: &CountVector, y: &CountVector) -> Result<f64> {
    let dot = x.dot(y)?;
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nx * ny)).clamp(0.0, 1.0))
}

/// |A ∩ B| / |A ∪ B|, with two empty sets defined as identical.
pub fn jaccard_similarity<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkDirection {
    In,
    Out,
}

/// Directed hyperlink graph between sites.
#[derive(Debug, Clone, Default)]
pub struct WebGraph {
    out_links: BTreeMap<String, BTreeSet<String>>,
    in_links: BTreeMap<String, BTreeSet<String>>,
}

impl WebGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: &str) {
        self.out_links.entry(v.to_string()).or_default();
        self.in_links.entry(v.to_string()).or_default();
    }

    /// Adds `from -> to`. Self-loops are dropped and repeated edges collapse;
    /// returns whether a new edge was inserted.
    pub fn add_edge(&mut self, from: &str, to: &str) -> bool {
        self.add_vertex(from);
        self.add_vertex(to);
        if from == to {
            return false;
        }
        self.in_links.get_mut(to).unwrap().insert(from.to_string());
        self.out_links.get_mut(from).unwrap().insert(to.to_string())
    }

    pub fn from_edges<'a, I>(edges: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut g = WebGraph::new();
        for (a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn contains(&self, v: &str) -> bool {
        self.out_links.contains_key(v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &str> {
        self.out_links.keys().map(String::as_str)
    }

    pub fn edge_count(&self) -> usize {
        self.out_links.values().map(BTreeSet::len).sum()
    }

    pub fn neighbors(&self, v: &str, direction: LinkDirection) -> Result<&BTreeSet<String>> {
        let map = match direction {
            LinkDirection::In => &self.in_links,
            LinkDirection::Out => &self.out_links,
        };
        map.get(v)
            .ok_or_else(|| Error::UnknownVertex(v.to_string()))
    }
}

/// Jaccard similarity of the in- or out-link neighborhoods of two sites.
pub fn neighborhood_similarity(
    g: &WebGraph,
    s1: &str,
    s2: &str,
    direction: LinkDirection,
) -> Result<f64> {
    let a = g.neighbors(s1, direction)?;
    let b = g.neighbors(s2, direction)?;
    Ok(jaccard_similarity(a, b))
}

/// Scores each candidate by its best cosine against any seed and keeps those
/// at or above `threshold`, best first, ties by id.
pub fn rank_candidates(
    seeds: &[CountVector],
    candidates: &[(String, CountVector)],
    threshold: f64,
) -> Result<Vec<(String, f64)>> {
    if seeds.is_empty() {
        return Err(Error::EmptyInput("seed list".into()));
    }
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::param("threshold", "must be nonnegative"));
    }
    let scored = par::map_slice(candidates, |(id, x)| -> Result<(String, f64)> {
        let mut best = 0.0f64;
        for seed in seeds {
            best = best.max(cosine_similarity(seed, x)?);
        }
        Ok((id.clone(), best))
    });
    let mut kept = Vec::new();
    for item in scored {
        let (id, score) = item?;
        if score >= threshold {
            kept.push((id, score));
        }
    }
    kept.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ideology {
    A,
    B,
    Undetermined,
}

impl Ideology {
    pub fn swapped(self) -> Ideology {
        match self {
            Ideology::A => Ideology::B,
            Ideology::B => Ideology::A,
            Ideology::Undetermined => Ideology::Undetermined,
        }
    }
}

/// Tally of inlinker votes behind an ideology label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdeologyVote {
    pub label: Ideology,
    pub votes_a: usize,
    pub votes_b: usize,
    pub abstained: usize,
}

/// Each site linking to `target` votes for whichever set it links into more;
/// the majority of votes decides.
pub fn classify_ideology(
    g: &WebGraph,
    set_a: &BTreeSet<String>,
    set_b: &BTreeSet<String>,
    target: &str,
) -> Result<IdeologyVote> {
    if let Some(shared) = set_a.intersection(set_b).next() {
        return Err(Error::param(
            "sets",
            format!("`{shared}` is in both A and B"),
        ));
    }
    if set_a.contains(target) || set_b.contains(target) {
        return Err(Error::param(
            "target",
            "target must not be a member of A or B",
        ));
    }
    let inlinkers = g.neighbors(target, LinkDirection::In)?;
    let (mut votes_a, mut votes_b, mut abstained) = (0, 0, 0);
    for site in inlinkers {
        let outs = g.neighbors(site, LinkDirection::Out)?;
        let into_a = outs.intersection(set_a).count();
        let into_b = outs.intersection(set_b).count();
        match into_a.cmp(&into_b) {
            std::cmp::Ordering::Greater => votes_a += 1,
            std::cmp::Ordering::Less => votes_b += 1,
            std::cmp::Ordering::Equal => abstained += 1,
        }
    }
    let label = match votes_a.cmp(&votes_b) {
        std::cmp::Ordering::Greater => Ideology::A,
        std::cmp::Ordering::Less => Ideology::B,
        std::cmp::Ordering::Equal => Ideology::Undetermined,
    };
    Ok(IdeologyVote {
        label,
        votes_a,
        votes_b,
        abstained,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FramingLabel {
    Framing,
    NonFraming,
}

impl FramingLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FramingLabel::Framing => "framing",
            FramingLabel::NonFraming => "non-framing",
        }
    }
}

/// Multinomial naive Bayes over a fixed vocabulary, stored in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    log_prior_framing: f64,
    log_prior_non_framing: f64,
    log_lik_framing: Vec<f64>,
    log_lik_non_framing: Vec<f64>,
    alpha: f64,
}

pub const DEFAULT_ALPHA: f64 = 1.0;

impl NaiveBayesModel {
    pub fn n_terms(&self) -> usize {
        self.log_lik_framing.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn log_prior(&self, label: FramingLabel) -> f64 {
        match label {
            FramingLabel::Framing => self.log_prior_framing,
            FramingLabel::NonFraming => self.log_prior_non_framing,
        }
    }

    pub fn log_likelihoods(&self, label: FramingLabel) -> &[f64] {
        match label {
            FramingLabel::Framing => &self.log_lik_framing,
            FramingLabel::NonFraming => &self.log_lik_non_framing,
        }
    }

    /// Joint log score `log P(c) + Σ_i doc_i log P(term_i | c)`.
    pub fn log_score(&self, doc: &CountVector, label: FramingLabel) -> Result<f64> {
        Ok(self.log_prior(label) + doc.dot_dense(self.log_likelihoods(label))?)
    }

    /// Posterior probability of the framing class.
    pub fn posterior_framing(&self, doc: &CountVector) -> Result<f64> {
        let (_, log_odds) = nb_classify(self, doc)?;
        Ok(1.0 / (1.0 + (-log_odds).exp()))
    }
}

/// Trains with add-`alpha` smoothing and priors from label frequencies.
pub fn nb_train(
    docs: &DocTermMatrix,
    labels: &[FramingLabel],
    alpha: f64,
) -> Result<NaiveBayesModel> {
    if labels.len() != docs.n_docs() {
        return Err(Error::DimensionMismatch {
            expected: docs.n_docs(),
            found: labels.len(),
        });
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", "smoothing must be positive"));
    }
    let n_framing = labels
        .iter()
        .filter(|&&l| l == FramingLabel::Framing)
        .count();
    let n_non = labels.len() - n_framing;
    if n_framing == 0 || n_non == 0 {
        return Err(Error::SingleClass);
    }
    let v = docs.n_terms();
    let mut counts_f = vec![0.0; v];
    let mut counts_n = vec![0.0; v];
    for (row, &label) in docs.rows().iter().zip(labels) {
        let target = match label {
            FramingLabel::Framing => &mut counts_f,
            FramingLabel::NonFraming => &mut counts_n,
        };
        for &(i, c) in row.entries() {
            target[i] += c;
        }
    }
    let log_lik = |counts: &[f64]| -> Vec<f64> {
        let denom = counts.iter().sum::<f64>() + alpha * v as f64;
        counts.iter().map(|&c| ((c + alpha) / denom).ln()).collect()
    };
    let total = labels.len() as f64;
    Ok(NaiveBayesModel {
        log_prior_framing: (n_framing as f64 / total).ln(),
        log_prior_non_framing: (n_non as f64 / total).ln(),
        log_lik_framing: log_lik(&counts_f),
        log_lik_non_framing: log_lik(&counts_n),
        alpha,
    })
}

/// Returns the label and the framing-minus-non-framing log-odds. An exact tie
/// goes to non-framing.
pub fn nb_classify(model: &NaiveBayesModel, doc: &CountVector) -> Result<(FramingLabel, f64)> {
    if doc.dim() != model.n_terms() {
        return Err(Error::DimensionMismatch {
            expected: model.n_terms(),
            found: doc.dim(),
        });
    }
    let framing = model.log_score(doc, FramingLabel::Framing)?;
    let non = model.log_score(doc, FramingLabel::NonFraming)?;
    let log_odds = framing - non;
    let label = if log_odds > 0.0 {
        FramingLabel::Framing
    } else {
        FramingLabel::NonFraming
    };
    Ok((label, log_odds))
}
