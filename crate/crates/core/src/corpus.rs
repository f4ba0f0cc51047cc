//! Tokenization, vocabularies and bag-of-words count vectors.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Lowercased tokens from splitting on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|frag| !frag.is_empty())
        .map(|frag| frag.to_lowercase())
        .collect()
}

/// An ordered set of distinct terms with a reverse index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from terms in the given order. Duplicates are an error.
    pub fn from_terms<I, S>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary::default();
        for term in terms {
            let term = term.into();
            if vocab.index.contains_key(&term) {
                return Err(Error::param("terms", format!("duplicate term `{term}`")));
            }
            vocab.push(term);
        }
        Ok(vocab)
    }

    fn push(&mut self, term: String) {
        self.index.insert(term.clone(), self.terms.len());
        self.terms.push(term);
    }

    /// Appends terms not already present, keeping existing positions.
    pub fn extend_with<I, S>(&mut self, terms: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for term in terms {
            let term = term.into();
            if !self.index.contains_key(&term) {
                self.push(term);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> Option<&str> {
        self.terms.get(i).map(String::as_str)
    }

    pub fn position(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// Keeps terms whose document frequency `df` satisfies `df >= min_df` and
/// `df / n <= max_df_ratio`, sorted lexicographically.
pub fn build_vocabulary<D, S>(docs: &[D], min_df: usize, max_df_ratio: f64) -> Result<Vocabulary>
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    if min_df < 1 {
        return Err(Error::param("min_df", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&max_df_ratio) {
        return Err(Error::param("max_df_ratio", "must lie in [0, 1]"));
    }
    let n = docs.len();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let distinct: BTreeSet<&str> = doc.as_ref().iter().map(AsRef::as_ref).collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<&str> = df
        .into_iter()
        .filter(|&(_, count)| count >= min_df && count as f64 / n as f64 <= max_df_ratio)
        .map(|(term, _)| term)
        .collect();
    kept.sort_unstable();
    Vocabulary::from_terms(kept)
}

/// Sparse vector with entries sorted by index and no explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CountVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl CountVector {
    pub fn zeros(dim: usize) -> Self {
        CountVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        CountVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0.0)
                .map(|(i, &v)| (i, v))
                .collect(),
        }
    }

    /// Builds from unsorted `(index, value)` pairs, summing duplicates.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(i, _)) = pairs.iter().find(|(i, _)| *i >= dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: i + 1,
            });
        }
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Ok(CountVector { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries
            .binary_search_by_key(&i, |&(j, _)| j)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, k: f64) -> CountVector {
        CountVector {
            dim: self.dim,
            entries: if k == 0.0 {
                Vec::new()
            } else {
                self.entries.iter().map(|&(i, v)| (i, v * k)).collect()
            },
        }
    }

    /// Sparse dot product; dimensions must agree.
    pub fn dot(&self, other: &CountVector) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let (mut a, mut b) = (
            self.entries.iter().peekable(),
            other.entries.iter().peekable(),
        );
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        Ok(acc)
    }

    /// Dot product with a dense weight vector.
    pub fn dot_dense(&self, weights: &[f64]) -> Result<f64> {
        if self.dim != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                found: self.dim,
            });
        }
        Ok(self.entries.iter().map(|&(i, v)| v * weights[i]).sum())
    }
}

/// Term counts of `tokens` over `vocab`; out-of-vocabulary tokens are ignored.
pub fn vectorize<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> CountVector {
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for tok in tokens {
        if let Some(i) = vocab.position(tok.as_ref()) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts.into_iter().collect();
    entries.sort_by_key(|&(i, _)| i);
    CountVector {
        dim: vocab.len(),
        entries,
    }
}

/// Documents stacked as rows of term counts over a shared vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    vocab: Vocabulary,
    rows: Vec<CountVector>,
    doc_ids: Vec<String>,
}

impl DocTermMatrix {
    pub fn new(vocab: Vocabulary, rows: Vec<CountVector>, doc_ids: Vec<String>) -> Result<Self> {
        if rows.len() != doc_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: doc_ids.len(),
                found: rows.len(),
            });
        }
        for row in &rows {
            if row.dim() != vocab.len() {
                return Err(Error::DimensionMismatch {
                    expected: vocab.len(),
                    found: row.dim(),
                });
            }
            if row
                .entries()
                .iter()
                .any(|&(_, v)| !(v >= 0.0) || !v.is_finite())
            {
                return Err(Error::param(
                    "rows",
                    "entries must be finite and nonnegative",
                ));
            }
        }
        Ok(DocTermMatrix {
            vocab,
            rows,
            doc_ids,
        })
    }

    /// Vectorizes tokenized documents against `vocab`.
    pub fn from_tokens<S: AsRef<str>>(
        vocab: Vocabulary,
        doc_ids: Vec<String>,
        docs: &[Vec<S>],
    ) -> Result<Self> {
        let rows = docs.iter().map(|d| vectorize(d, &vocab)).collect();
        DocTermMatrix::new(vocab, rows, doc_ids)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn rows(&self) -> &[CountVector] {
        &self.rows
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_terms(&self) -> usize {
        self.vocab.len()
    }

    /// Copy with every nonzero row scaled to unit Euclidean norm.
    pub fn l2_normalized(&self) -> DocTermMatrix {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let n = r.norm();
                if n > 0.0 {
                    r.scaled(1.0 / n)
                } else {
                    r.clone()
                }
            })
            .collect();
        DocTermMatrix {
            vocab: self.vocab.clone(),
            rows,
            doc_ids: self.doc_ids.clone(),
        }
    }
}
