//! Update-tensor assembly from routing update records and event extraction
//! from the dominant CP components.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::tensor::{CpModel, SparseTensor3};

/// One routing update as seen by a vantage point.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    pub prefix: String,
    pub origin_as: String,
    pub vp: String,
}

/// Half-open observation window `[start, start + bins * bin_seconds)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: f64,
    pub bin_seconds: f64,
    pub bins: usize,
}

impl TimeWindow {
    pub fn new(start: f64, bin_seconds: f64, bins: usize) -> Result<Self> {
        if !start.is_finite() {
            return Err(Error::param("start", "must be finite"));
        }
        if !(bin_seconds > 0.0) || !bin_seconds.is_finite() {
            return Err(Error::param("dt", "sampling period must be positive"));
        }
        if bins < 1 {
            return Err(Error::param("bins", "need at least one time bin"));
        }
        Ok(TimeWindow {
            start,
            bin_seconds,
            bins,
        })
    }

    pub fn end(&self) -> f64 {
        self.start + self.bins as f64 * self.bin_seconds
    }

    pub fn span_seconds(&self) -> f64 {
        self.bins as f64 * self.bin_seconds
    }

    /// Bin index of `t`, or `None` outside the window.
    pub fn bin_of(&self, t: f64) -> Option<usize> {
        if !(t >= self.start && t < self.end()) {
            return None;
        }
        let bin = ((t - self.start) / self.bin_seconds).floor() as usize;
        Some(bin.min(self.bins - 1))
    }

    /// `[start, end)` of bin `j` in epoch seconds.
    pub fn bin_bounds(&self, j: usize) -> (f64, f64) {
        let lo = self.start + j as f64 * self.bin_seconds;
        (lo, lo + self.bin_seconds)
    }
}

/// Labels for the tensor axes: position `i` of `as_ids` is mode-1 index `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorIndexMaps {
    pub as_ids: Vec<String>,
    pub vp_ids: Vec<String>,
    pub window: TimeWindow,
}

/// Counts retained updates per (AS, time bin, VP). Axes hold exactly the AS
/// and VPs seen inside the window, sorted by identifier.
pub fn assemble_update_tensor(
    updates: &[UpdateRecord],
    window: TimeWindow,
    vp_filter: Option<&BTreeSet<String>>,
) -> Result<(SparseTensor3, TensorIndexMaps)> {
    let mut counts: BTreeMap<(&str, usize, &str), f64> = BTreeMap::new();
    for rec in updates {
        if vp_filter.is_some_and(|f| !f.contains(&rec.vp)) {
            continue;
        }
        if let Some(bin) = window.bin_of(rec.timestamp) {
            *counts
                .entry((rec.origin_as.as_str(), bin, rec.vp.as_str()))
                .or_insert(0.0) += 1.0;
        }
    }
    if counts.is_empty() {
        return Err(Error::EmptyInput(
            "no update records fall inside the observation window".into(),
        ));
    }
    let as_ids: BTreeSet<&str> = counts.keys().map(|k| k.0).collect();
    let vp_ids: BTreeSet<&str> = counts.keys().map(|k| k.2).collect();
    let as_pos: BTreeMap<&str, usize> = as_ids.iter().enumerate().map(|(i, &a)| (a, i)).collect();
    let vp_pos: BTreeMap<&str, usize> = vp_ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let entries = counts
        .iter()
        .map(|(&(a, j, v), &n)| (as_pos[a], j, vp_pos[v], n))
        .collect();
    let tensor = SparseTensor3::new((as_ids.len(), window.bins, vp_ids.len()), entries)?;
    let maps = TensorIndexMaps {
        as_ids: as_ids.into_iter().map(String::from).collect(),
        vp_ids: vp_ids.into_iter().map(String::from).collect(),
        window,
    };
    Ok((tensor, maps))
}

/// Fractions of each column's peak magnitude an entry must reach to count
/// as participating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub as_frac: f64,
    pub time_frac: f64,
    pub vp_frac: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            as_frac: 0.5,
            time_frac: 0.5,
            vp_frac: 0.5,
        }
    }
}

impl Thresholds {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("theta_as", self.as_frac),
            ("theta_time", self.time_frac),
            ("theta_vp", self.vp_frac),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::param(name, "must lie in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// A detected disruption: who, when, and where it was observed.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub as_set: Vec<String>,
    pub time_bins: Vec<usize>,
    pub vp_set: Vec<String>,
    pub weight: f64,
    pub component_index: usize,
}

/// Indices whose magnitude reaches `frac` of the column's largest magnitude.
pub fn participating(column: &[f64], frac: f64) -> Vec<usize> {
    let peak = column.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Vec::new();
    }
    column
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() >= frac * peak)
        .map(|(i, _)| i)
        .collect()
}

/// Turns the `k` heaviest components of a normalized model into events.
/// Components with zero weight produce no event.
pub fn extract_events(
    model: &CpModel,
    maps: &TensorIndexMaps,
    k: usize,
    thresholds: &Thresholds,
) -> Result<Vec<Event>> {
    thresholds.validate()?;
    if k > model.rank() {
        return Err(Error::param(
            "components",
            format!("asked for {k} components of a rank-{} model", model.rank()),
        ));
    }
    let expected = (maps.as_ids.len(), maps.window.bins, maps.vp_ids.len());
    if model.shape() != expected {
        return Err(Error::ShapeMismatch(expected, model.shape()));
    }
    let mut order: Vec<usize> = (0..model.rank()).collect();
    order.sort_by(|&p, &q| {
        model.weights[q]
            .total_cmp(&model.weights[p])
            .then(p.cmp(&q))
    });

    let mut events = Vec::new();
    for &r in order.iter().take(k) {
        if !(model.weights[r] > 0.0) {
            continue;
        }
        let as_set = participating(model.a.column(r).as_slice(), thresholds.as_frac)
            .into_iter()
            .map(|i| maps.as_ids[i].clone())
            .collect();
        let time_bins = participating(model.b.column(r).as_slice(), thresholds.time_frac);
        let vp_set = participating(model.c.column(r).as_slice(), thresholds.vp_frac)
            .into_iter()
            .map(|i| maps.vp_ids[i].clone())
            .collect();
        events.push(Event {
            as_set,
            time_bins,
            vp_set,
            weight: model.weights[r],
            component_index: r,
        });
    }
    Ok(events)
}
