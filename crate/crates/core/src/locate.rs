//! Localization of an event on the AS graph by betweenness restricted to
//! (event AS, vantage-point home AS) pairs.
//!
//! For each source `s` a breadth-first search counts shortest paths `σ_sv`,
//! then dependencies are accumulated backwards as in Brandes' algorithm,
//! except that a vertex `w` only injects credit when it is one of the
//! targets:
//!
//! `δ_s(v) = Σ_{w : v ∈ pred(w)} σ_sv / σ_sw · (1[w ∈ targets] + δ_s(w))`
//!
//! so `δ_s(v) = Σ_{t ∈ targets} σ_st(v) / σ_st`, the restricted dependency.
//! Sources are processed in parallel and summed in source order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::events::Event;
use crate::par;

/// Undirected, unweighted AS adjacency graph.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AsGraph {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    adj: Vec<Vec<usize>>,
}

impl AsGraph {
    /// Builds from an edge list. Self-loops are dropped and parallel edges
    /// merged; vertex indices follow identifier order.
    pub fn from_edges<I, S>(edges: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let pairs: Vec<(String, String)> = edges
            .into_iter()
            .map(|(a, b)| (a.as_ref().to_string(), b.as_ref().to_string()))
            .collect();
        Self::build(pairs, BTreeSet::new())
    }

    /// Adds isolated vertices that are not yet present.
    pub fn with_vertices<I, S>(self, vertices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let extra = vertices
            .into_iter()
            .map(|v| v.as_ref().to_string())
            .collect();
        Self::build(self.edges(), extra)
    }

    fn build(pairs: Vec<(String, String)>, mut names: BTreeSet<String>) -> Self {
        names.extend(pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]));
        let names: Vec<String> = names.into_iter().collect();
        let index: BTreeMap<String, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut sets = vec![BTreeSet::new(); names.len()];
        for (a, b) in &pairs {
            let (i, j) = (index[a], index[b]);
            if i != j {
                sets[i].insert(j);
                sets[j].insert(i);
            }
        }
        AsGraph {
            names,
            index,
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    /// Each undirected edge once, as `(lower id, higher id)`.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, nbrs) in self.adj.iter().enumerate() {
            for &j in nbrs.iter().filter(|&&j| j > i) {
                out.push((self.names[i].clone(), self.names[j].clone()));
            }
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    fn resolve<'a, I>(&self, ids: I) -> Result<Vec<usize>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let set: BTreeSet<usize> = ids
            .into_iter()
            .map(|id| {
                self.position(id)
                    .ok_or_else(|| Error::UnknownVertex(id.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(set.into_iter().collect())
    }
}

/// Restricted dependency `δ_s(·)` of one source over the target mask.
fn source_dependency(g: &AsGraph, s: usize, is_target: &[bool]) -> Vec<f64> {
    let n = g.vertex_count();
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    sigma[s] = 1.0;
    dist[s] = 0;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &w in g.neighbors(v) {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1 {
                sigma[w] += sigma[v];
            }
        }
    }
    let mut delta = vec![0.0f64; n];
    for &w in order.iter().rev() {
        let credit = if is_target[w] && w != s { 1.0 } else { 0.0 } + delta[w];
        if credit == 0.0 {
            continue;
        }
        for &v in g.neighbors(w) {
            if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                delta[v] += sigma[v] / sigma[w] * credit;
            }
        }
    }
    delta[s] = 0.0;
    delta
}

/// Betweenness over ordered pairs `sources × targets` by vertex index.
pub fn restricted_betweenness_indexed(
    g: &AsGraph,
    sources: &[usize],
    targets: &[usize],
) -> Vec<f64> {
    let n = g.vertex_count();
    let mut is_target = vec![false; n];
    for &t in targets {
        is_target[t] = true;
    }
    let mut score = vec![0.0f64; n];
    const CHUNK: usize = 64;
    for chunk in sources.chunks(CHUNK) {
        let deltas = par::map_slice(chunk, |&s| source_dependency(g, s, &is_target));
        for delta in deltas {
            for (acc, d) in score.iter_mut().zip(delta) {
                *acc += d;
            }
        }
    }
    // endpoints of a pair are never interior, so `score[t]` only holds
    // credit for paths running through `t` to other targets
    score
}

/// `score(v) = Σ_{s ∈ sources, t ∈ targets, s ≠ t} σ_st(v) / σ_st` for every
/// vertex, counting `v` only as an interior vertex.
pub fn restricted_betweenness<'a, S, T>(
    g: &AsGraph,
    sources: S,
    targets: T,
) -> Result<BTreeMap<String, f64>>
where
    S: IntoIterator<Item = &'a str>,
    T: IntoIterator<Item = &'a str>,
{
    let src = g.resolve(sources)?;
    let tgt = g.resolve(targets)?;
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::EmptyInput(
            "source and target sets must be nonempty".into(),
        ));
    }
    let scores = restricted_betweenness_indexed(g, &src, &tgt);
    Ok(g.names.iter().cloned().zip(scores).collect())
}

/// Candidate cause AS for an event, most central first (ties by id).
/// Includes every vertex with positive score plus all event endpoints.
pub fn rank_candidate_causes(
    g: &AsGraph,
    event: &Event,
    vp_home: &BTreeMap<String, String>,
) -> Result<Vec<(String, f64)>> {
    let mut homes: BTreeSet<&str> = BTreeSet::new();
    for vp in &event.vp_set {
        let home = vp_home
            .get(vp)
            .ok_or_else(|| Error::MissingVpHome(vp.clone()))?;
        homes.insert(home.as_str());
    }
    let src = g.resolve(event.as_set.iter().map(String::as_str))?;
    let tgt = g.resolve(homes.iter().copied())?;
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::EmptyInput(
            "event has no AS or no vantage points".into(),
        ));
    }
    let scores = restricted_betweenness_indexed(g, &src, &tgt);
    let endpoints: BTreeSet<usize> = src.iter().chain(&tgt).copied().collect();
    let mut ranked: Vec<(String, f64)> = scores
        .iter()
        .enumerate()
        .filter(|&(v, &s)| s > 0.0 || endpoints.contains(&v))
        .map(|(v, &s)| (g.names[v].clone(), s))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}
