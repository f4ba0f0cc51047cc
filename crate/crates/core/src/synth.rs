//! Seeded synthetic inputs with known ground truth: low-rank tensors built
//! from planted factors, update logs with an injected block event, and the
//! matching two-clique AS topology.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::events::{TimeWindow, UpdateRecord};
use crate::tensor::{CpModel, Shape3, SparseTensor3};

/// Dense tensor `Σ_r λ_r a_r ∘ b_r ∘ c_r` from random unit factors with
/// entries drawn from `uniform(-1, 1)` and weights from `uniform(1, 10)`.
/// Returns the tensor and the planted (un-normalized order) model.
pub fn random_low_rank(shape: Shape3, rank: usize, rng: &mut impl Rng) -> (SparseTensor3, CpModel) {
    let mut factor = |rows: usize| {
        let mut f = DMatrix::from_fn(rows, rank, |_, _| rng.random_range(-1.0..1.0));
        for mut col in f.column_iter_mut() {
            let n = col.norm();
            col /= n;
        }
        f
    };
    let a = factor(shape.0);
    let b = factor(shape.1);
    let c = factor(shape.2);
    let weights = (0..rank).map(|_| rng.random_range(1.0..10.0)).collect();
    let model = CpModel::new(weights, a, b, c).expect("factor ranks agree");
    (dense_from_model(&model), model)
}

/// Every cell of the model's reconstruction as a tensor entry.
pub fn dense_from_model(model: &CpModel) -> SparseTensor3 {
    let (m, t, o) = model.shape();
    let mut entries = Vec::with_capacity(m * t * o);
    for i in 0..m {
        for j in 0..t {
            for k in 0..o {
                entries.push((i, j, k, model.value_at(i, j, k)));
            }
        }
    }
    SparseTensor3::new((m, t, o), entries).expect("indices within shape")
}

/// Layout of a planted-event update log.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedEventConfig {
    pub n_as: usize,
    pub n_bins: usize,
    pub n_vps: usize,
    pub background_rate: f64,
    pub event_as: usize,
    pub event_bins: usize,
    pub event_vps: usize,
    pub event_rate: f64,
    pub start: f64,
    pub bin_seconds: f64,
}

impl Default for PlantedEventConfig {
    fn default() -> Self {
        PlantedEventConfig {
            n_as: 40,
            n_bins: 288,
            n_vps: 5,
            background_rate: 0.2,
            event_as: 5,
            event_bins: 20,
            event_vps: 3,
            event_rate: 20.0,
            start: 1_165_968_000.0,
            bin_seconds: 300.0,
        }
    }
}

/// A generated log plus the sets that should be recovered from it.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedScenario {
    pub records: Vec<UpdateRecord>,
    pub window: TimeWindow,
    pub planted_as: BTreeSet<String>,
    pub planted_bins: BTreeSet<usize>,
    pub planted_vps: BTreeSet<String>,
    /// Undirected AS adjacencies: event AS form one clique, all other AS
    /// another, and [`PlantedScenario::cut_vertex`] joins them.
    pub as_edges: Vec<(String, String)>,
    pub cut_vertex: String,
    /// Every VP lives in an AS of the non-event clique.
    pub vp_home: BTreeMap<String, String>,
}

pub fn as_name(i: usize) -> String {
    format!("AS{}", 64_512 + i)
}

pub fn vp_name(k: usize) -> String {
    format!("rrc{k:02}")
}

/// Poisson background on every (AS, bin, VP) cell plus one high-rate block.
/// The event block sits at randomly chosen AS, a contiguous run of bins and
/// randomly chosen VPs; each count becomes that many update records with
/// timestamps spread uniformly inside the bin.
pub fn planted_event_scenario(cfg: &PlantedEventConfig, seed: u64) -> PlantedScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = TimeWindow::new(cfg.start, cfg.bin_seconds, cfg.n_bins).expect("valid window");

    let mut as_pool: Vec<usize> = (0..cfg.n_as).collect();
    shuffle(&mut as_pool, &mut rng);
    let event_as: BTreeSet<usize> = as_pool[..cfg.event_as].iter().copied().collect();
    let mut vp_pool: Vec<usize> = (0..cfg.n_vps).collect();
    shuffle(&mut vp_pool, &mut rng);
    let event_vps: BTreeSet<usize> = vp_pool[..cfg.event_vps].iter().copied().collect();
    let first_bin = rng.random_range(0..=cfg.n_bins - cfg.event_bins);
    let event_bins: BTreeSet<usize> = (first_bin..first_bin + cfg.event_bins).collect();

    let background = Poisson::new(cfg.background_rate).expect("positive rate");
    let burst = Poisson::new(cfg.event_rate).expect("positive rate");
    let mut records = Vec::new();
    for i in 0..cfg.n_as {
        for j in 0..cfg.n_bins {
            for k in 0..cfg.n_vps {
                let mut count = background.sample(&mut rng) as usize;
                if event_as.contains(&i) && event_bins.contains(&j) && event_vps.contains(&k) {
                    count += burst.sample(&mut rng) as usize;
                }
                let (lo, _) = window.bin_bounds(j);
                for _ in 0..count {
                    let offset = rng.random_range(0.0..cfg.bin_seconds);
                    // whole milliseconds keep the text log exact
                    let t = lo + (offset * 1000.0).floor() / 1000.0;
                    records.push(UpdateRecord {
                        timestamp: t,
                        prefix: format!("10.{}.{}.0/24", i, rng.random_range(0..4)),
                        origin_as: as_name(i),
                        vp: vp_name(k),
                    });
                }
            }
        }
    }
    shuffle(&mut records, &mut rng);

    let cut_vertex = as_name(cfg.n_as);
    let left: Vec<String> = event_as.iter().map(|&i| as_name(i)).collect();
    let right: Vec<String> = (0..cfg.n_as)
        .filter(|i| !event_as.contains(i))
        .map(as_name)
        .collect();
    let as_edges = two_clique_edges(&left, &right, &cut_vertex);
    let vp_home = (0..cfg.n_vps)
        .map(|k| (vp_name(k), right[k % right.len()].clone()))
        .collect();

    PlantedScenario {
        records,
        window,
        planted_as: left.into_iter().collect(),
        planted_bins: event_bins,
        planted_vps: event_vps.iter().map(|&k| vp_name(k)).collect(),
        as_edges,
        cut_vertex,
        vp_home,
    }
}

/// Two cliques whose only connection is through `cut`.
pub fn two_clique_edges(left: &[String], right: &[String], cut: &str) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    for side in [left, right] {
        for (i, a) in side.iter().enumerate() {
            for b in &side[i + 1..] {
                edges.push((a.clone(), b.clone()));
            }
            edges.push((a.clone(), cut.to_string()));
        }
    }
    edges
}

/// Erdős–Rényi edge list on vertices `v0..v{n-1}`.
pub fn random_graph_edges(n: usize, p: f64, rng: &mut impl Rng) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((format!("v{a}"), format!("v{b}")));
            }
        }
    }
    edges
}

fn shuffle<T>(items: &mut [T], rng: &mut impl Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_is_reproducible_and_shaped() {
        let cfg = PlantedEventConfig::default();
        let a = planted_event_scenario(&cfg, 1);
        let b = planted_event_scenario(&cfg, 1);
        assert_eq!(a, b);
        assert_eq!(a.planted_as.len(), 5);
        assert_eq!(a.planted_bins.len(), 20);
        assert_eq!(a.planted_vps.len(), 3);
        assert!(a
            .records
            .iter()
            .all(|r| a.window.bin_of(r.timestamp).is_some()));
        assert!(a.vp_home.values().all(|h| !a.planted_as.contains(h)));
        // background ~ 0.2 * 57600, event ~ 20 * 300
        let n = a.records.len() as f64;
        assert!((14_000.0..20_000.0).contains(&n), "{n} records");
    }

    #[test]
    fn low_rank_tensor_matches_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, model) = random_low_rank((4, 5, 3), 2, &mut rng);
        assert_eq!(x.nnz(), 60);
        assert!((x.get(1, 2, 0) - model.value_at(1, 2, 0)).abs() < 1e-15);
    }
}
