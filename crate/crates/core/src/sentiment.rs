//! Sentiment orientation on the document-word bipartite graph.
//!
//! Documents and words are vertices of one graph with adjacency
//! `A = [[0, X], [X^T, 0]]`, so `c^T L c = Σ_ij X_ij (d_i - c_j)^2` for the
//! Laplacian `L = D - A`. Both fitting modes minimize
//!
//! `c^T L c + Σ_p B_pp (c_p - y_p)^2 + ε ||c||^2`
//!
//! over the augmented vector `c = [d_est; c_words]`, where the diagonal `B`
//! carries the label weights and `y` the (scaled) labels. Setting the
//! gradient to zero gives the sparse symmetric system `(L + B + εI) c = B y`,
//! solved by conjugate gradient.

use std::collections::BTreeMap;

use crate::corpus::{CountVector, DocTermMatrix};
use crate::error::{Error, Result};
use crate::numerics::{conjugate_gradient, dot, CgOptions, CsrMatrix, LinearOperator};

/// Ridge added to the system diagonal so unanchored components stay solvable.
pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Document-word graph of a corpus, documents first then words.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteSentimentGraph {
    n_docs: usize,
    n_words: usize,
    /// Size of the leading source-domain block of documents.
    n_source: usize,
    laplacian: CsrMatrix,
    degrees: Vec<f64>,
    isolated_words: Vec<usize>,
}

impl BipartiteSentimentGraph {
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn n_source(&self) -> usize {
        self.n_source
    }

    pub fn n_target(&self) -> usize {
        self.n_docs - self.n_source
    }

    pub fn dim(&self) -> usize {
        self.n_docs + self.n_words
    }

    pub fn laplacian(&self) -> &CsrMatrix {
        &self.laplacian
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Words that occur in no document.
    pub fn isolated_words(&self) -> &[usize] {
        &self.isolated_words
    }

    /// Marks the first `n_source` documents as the source domain; the rest
    /// are the target domain.
    pub fn with_source_block(mut self, n_source: usize) -> Result<Self> {
        if n_source >= self.n_docs {
            return Err(Error::param(
                "n_source",
                "at least one target document is required",
            ));
        }
        self.n_source = n_source;
        Ok(self)
    }
}

/// Graph and Laplacian for the corpus `x`.
pub fn build_bipartite(x: &DocTermMatrix) -> Result<BipartiteSentimentGraph> {
    let n = x.n_docs();
    let v = x.n_terms();
    if n == 0 {
        return Err(Error::EmptyInput("corpus has no documents".into()));
    }
    let dim = n + v;
    let mut degrees = vec![0.0; dim];
    let mut triplets = Vec::new();
    for (i, row) in x.rows().iter().enumerate() {
        for &(j, w) in row.entries() {
            triplets.push((i, n + j, -w));
            triplets.push((n + j, i, -w));
            degrees[i] += w;
            degrees[n + j] += w;
        }
    }
    for (p, &d) in degrees.iter().enumerate() {
        triplets.push((p, p, d));
    }
    let isolated_words = (0..v).filter(|&j| degrees[n + j] == 0.0).collect();
    Ok(BipartiteSentimentGraph {
        n_docs: n,
        n_words: v,
        n_source: 0,
        laplacian: CsrMatrix::from_triplets(dim, triplets)?,
        degrees,
        isolated_words,
    })
}

/// Sparse document labels and lexicon polarities, each `+1` or `-1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelData {
    pub doc_labels: BTreeMap<usize, f64>,
    pub lexicon: BTreeMap<usize, f64>,
}

impl LabelData {
    fn validate(&self, g: &BipartiteSentimentGraph) -> Result<()> {
        for (&i, &l) in &self.doc_labels {
            if i >= g.n_docs {
                return Err(Error::DimensionMismatch {
                    expected: g.n_docs,
                    found: i + 1,
                });
            }
            if l != 1.0 && l != -1.0 {
                return Err(Error::param("doc_labels", "labels must be +1 or -1"));
            }
        }
        for (&j, &l) in &self.lexicon {
            if j >= g.n_words {
                return Err(Error::DimensionMismatch {
                    expected: g.n_words,
                    found: j + 1,
                });
            }
            if l != 1.0 && l != -1.0 {
                return Err(Error::param("lexicon", "polarities must be +1 or -1"));
            }
        }
        Ok(())
    }

    /// Flips every label and lexicon polarity.
    pub fn negated(&self) -> LabelData {
        LabelData {
            doc_labels: self.doc_labels.iter().map(|(&k, &v)| (k, -v)).collect(),
            lexicon: self.lexicon.iter().map(|(&k, &v)| (k, -v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiSupervisedParams {
    /// Weight on labeled-document agreement.
    pub beta1: f64,
    /// Weight on lexicon agreement.
    pub beta2: f64,
    pub ridge: f64,
    pub cg: CgOptions,
}

impl Default for SemiSupervisedParams {
    fn default() -> Self {
        SemiSupervisedParams {
            beta1: 1.0,
            beta2: 1.0,
            ridge: DEFAULT_RIDGE,
            cg: CgOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferParams {
    /// Weight on source-document labels.
    pub beta1: f64,
    /// Weight on target-document labels.
    pub beta2: f64,
    /// Weight on lexicon agreement.
    pub beta3: f64,
    pub k_source: f64,
    pub k_target: f64,
    pub ridge: f64,
    pub cg: CgOptions,
}

impl Default for TransferParams {
    fn default() -> Self {
        TransferParams {
            beta1: 1.0,
            beta2: 10.0,
            beta3: 1.0,
            k_source: 1.0,
            k_target: 1.0,
            ridge: DEFAULT_RIDGE,
            cg: CgOptions::default(),
        }
    }
}

/// The assembled quadratic problem `(L + B + εI) c = B y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentSystem {
    pub matrix: CsrMatrix,
    /// Diagonal of `B`.
    pub penalty: Vec<f64>,
    /// `y`, meaningful where `penalty > 0`.
    pub targets: Vec<f64>,
    pub ridge: f64,
}

impl SentimentSystem {
    fn assemble(
        g: &BipartiteSentimentGraph,
        penalty: Vec<f64>,
        targets: Vec<f64>,
        ridge: f64,
    ) -> Result<Self> {
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(Error::param("ridge", "must be finite and nonnegative"));
        }
        if !penalty.iter().any(|&b| b > 0.0) {
            return Err(Error::Unanchored);
        }
        let mut triplets = Vec::with_capacity(g.laplacian.nnz() + g.dim());
        for r in 0..g.dim() {
            for (c, v) in g.laplacian.row(r) {
                triplets.push((r, c, v));
            }
            triplets.push((r, r, penalty[r] + ridge));
        }
        Ok(SentimentSystem {
            matrix: CsrMatrix::from_triplets(g.dim(), triplets)?,
            penalty,
            targets,
            ridge,
        })
    }

    /// `B y`.
    pub fn rhs(&self) -> Vec<f64> {
        self.penalty
            .iter()
            .zip(&self.targets)
            .map(|(b, y)| b * y)
            .collect()
    }

    /// Objective value `c^T L c + Σ B_pp (c_p - y_p)^2 + ε ||c||^2`.
    pub fn objective(&self, graph: &BipartiteSentimentGraph, c: &[f64]) -> f64 {
        let lc = graph.laplacian.matvec(c);
        let mut value = dot(c, &lc);
        for p in 0..c.len() {
            let d = c[p] - self.targets[p];
            value += self.penalty[p] * d * d + self.ridge * c[p] * c[p];
        }
        value
    }

    pub fn solve(&self, opts: &CgOptions) -> Result<(Vec<f64>, usize, f64)> {
        let sol = conjugate_gradient(&self.matrix, &self.rhs(), opts)?;
        Ok((sol.x, sol.iterations, sol.residual))
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

fn check_beta(name: &'static str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::param(name, "must be finite and nonnegative"));
    }
    Ok(())
}

/// System for the semi-supervised objective.
pub fn semi_supervised_system(
    g: &BipartiteSentimentGraph,
    labels: &LabelData,
    params: &SemiSupervisedParams,
) -> Result<SentimentSystem> {
    check_beta("beta1", params.beta1)?;
    check_beta("beta2", params.beta2)?;
    if params.beta1 == 0.0 && params.beta2 == 0.0 {
        return Err(Error::param("beta", "beta1 and beta2 cannot both be zero"));
    }
    labels.validate(g)?;
    if labels.doc_labels.is_empty() && labels.lexicon.is_empty() {
        return Err(Error::Unanchored);
    }
    let mut penalty = vec![0.0; g.dim()];
    let mut targets = vec![0.0; g.dim()];
    for (&i, &l) in &labels.doc_labels {
        penalty[i] = params.beta1;
        targets[i] = l;
    }
    for (&j, &l) in &labels.lexicon {
        penalty[g.n_docs + j] = params.beta2;
        targets[g.n_docs + j] = l;
    }
    SentimentSystem::assemble(g, penalty, targets, params.ridge)
}

/// System for the transfer objective; documents below `g.n_source()` are
/// the source domain.
pub fn transfer_system(
    g: &BipartiteSentimentGraph,
    labels: &LabelData,
    params: &TransferParams,
) -> Result<SentimentSystem> {
    for (name, v) in [
        ("beta1", params.beta1),
        ("beta2", params.beta2),
        ("beta3", params.beta3),
    ] {
        check_beta(name, v)?;
    }
    for (name, v) in [("k_s", params.k_source), ("k_t", params.k_target)] {
        if !v.is_finite() {
            return Err(Error::param(name, "must be finite"));
        }
    }
    if g.n_target() == 0 {
        return Err(Error::param(
            "n_target",
            "at least one target document is required",
        ));
    }
    labels.validate(g)?;
    if labels.doc_labels.is_empty() && labels.lexicon.is_empty() {
        return Err(Error::Unanchored);
    }
    let mut penalty = vec![0.0; g.dim()];
    let mut targets = vec![0.0; g.dim()];
    for (&i, &l) in &labels.doc_labels {
        if i < g.n_source {
            penalty[i] = params.beta1;
            targets[i] = params.k_source * l;
        } else {
            penalty[i] = params.beta2;
            targets[i] = params.k_target * l;
        }
    }
    for (&j, &l) in &labels.lexicon {
        penalty[g.n_docs + j] = params.beta3;
        targets[g.n_docs + j] = l;
    }
    SentimentSystem::assemble(g, penalty, targets, params.ridge)
}

/// Estimated document and word polarities.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedClassifier {
    pub d_est: Vec<f64>,
    /// Word polarity weights used by [`classify_orientation`].
    pub c: Vec<f64>,
    pub n_source: usize,
    pub iterations: usize,
    pub residual: f64,
}

impl AugmentedClassifier {
    fn from_solution(
        g: &BipartiteSentimentGraph,
        x: Vec<f64>,
        iterations: usize,
        residual: f64,
    ) -> Self {
        let (d, c) = x.split_at(g.n_docs);
        AugmentedClassifier {
            d_est: d.to_vec(),
            c: c.to_vec(),
            n_source: g.n_source,
            iterations,
            residual,
        }
    }

    pub fn source_estimates(&self) -> &[f64] {
        &self.d_est[..self.n_source]
    }

    pub fn target_estimates(&self) -> &[f64] {
        &self.d_est[self.n_source..]
    }

    /// `[d_est; c]`.
    pub fn augmented(&self) -> Vec<f64> {
        self.d_est.iter().chain(&self.c).copied().collect()
    }
}

/// Semi-supervised fit from a few document labels and a lexicon.
pub fn semi_supervised_fit(
    g: &BipartiteSentimentGraph,
    labels: &LabelData,
    params: &SemiSupervisedParams,
) -> Result<AugmentedClassifier> {
    let system = semi_supervised_system(g, labels, params)?;
    let (x, iterations, residual) = system.solve(&params.cg)?;
    Ok(AugmentedClassifier::from_solution(
        g, x, iterations, residual,
    ))
}

/// Transfer fit that weighs source and target labels separately.
pub fn transfer_fit(
    g: &BipartiteSentimentGraph,
    labels: &LabelData,
    params: &TransferParams,
) -> Result<AugmentedClassifier> {
    let system = transfer_system(g, labels, params)?;
    let (x, iterations, residual) = system.solve(&params.cg)?;
    Ok(AugmentedClassifier::from_solution(
        g, x, iterations, residual,
    ))
}

/// `sign(c^T x)` as `+1`, `-1`, or `0` when the score is exactly zero.
pub fn classify_orientation(c: &[f64], x: &CountVector) -> Result<i8> {
    let score = x.dot_dense(c)?;
    Ok(if score > 0.0 {
        1
    } else if score < 0.0 {
        -1
    } else {
        0
    })
}
