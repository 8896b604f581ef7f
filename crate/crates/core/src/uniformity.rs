//! Available-color statistics: frozen and nearly frozen vertices, the
//! uniformity event and the sequential recoloring experiment.

use serde::Serialize;
use serde_json::Value;

use crate::dynamics::{is_proper, set_dynamics_round, ChainState, Coloring, RoundMode, Scratch};
use crate::error::{Error, Result};
use crate::graph::{codegree, Graph, Vertex};
use crate::rng::{self, ChaCha8Rng};
use crate::sampler::Sampler;
use crate::spectral::LevelPartition;

fn require_proper(graph: &Graph, coloring: &Coloring) -> Result<()> {
    if is_proper(graph, coloring)? {
        Ok(())
    } else {
        Err(Error::ImproperColoring)
    }
}

/// Summary of `a_Y(v)` over a batch of sampled colorings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityReport {
    pub samples: usize,
    pub n: usize,
    pub k: u32,
    /// `histogram[a]` counts (vertex, sample) pairs with `a_Y(v) = a`.
    pub histogram: Vec<u64>,
    pub min_available: usize,
    pub mean_available: f64,
    pub frozen: u64,
    pub nearly_frozen: u64,
    pub threshold: f64,
    pub exact_sampler: bool,
}

impl UniformityReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Collects `a_Y(v)` for every vertex over `samples` colorings; a vertex is
/// nearly frozen when `a_Y(v) < threshold`.
pub fn uniformity_report(graph: &Graph, samples: usize, sampler: &mut Sampler, threshold: f64) -> Result<UniformityReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = graph.n();
    let mut histogram: Vec<u64> = Vec::new();
    let mut scratch: Option<Scratch> = None;
    let (mut min, mut sum, mut frozen, mut nearly) = (usize::MAX, 0u64, 0, 0);
    let mut k = 0;
    for _ in 0..samples {
        let y = sampler.next_coloring()?;
        k = y.k();
        if histogram.is_empty() {
            histogram = vec![0; k as usize + 1];
        }
        let s = scratch.get_or_insert_with(|| Scratch::new(k));
        for v in 0..n {
            let a = s.available_count(graph, y.colors(), v);
            histogram[a] += 1;
            min = min.min(a);
            sum += a as u64;
            frozen += (a == 1) as u64;
            nearly += ((a as f64) < threshold) as u64;
        }
    }
    let mean = if n == 0 { 0.0 } else { sum as f64 / (n * samples) as f64 };
    Ok(UniformityReport {
        samples,
        n,
        k,
        histogram,
        min_available: if n == 0 { 0 } else { min },
        mean_available: mean,
        frozen,
        nearly_frozen: nearly,
        threshold,
        exact_sampler: sampler.is_exact(),
    })
}

/// `ε` of a partition, or 0 for a partition carrying no spectral data.
fn partition_epsilon(partition: &LevelPartition) -> f64 {
    if partition.epsilon.is_finite() {
        partition.epsilon
    } else {
        0.0
    }
}

/// `2 Δ^{1 − e}` with `e = ε/4` unless overridden.
pub fn nearly_frozen_threshold(graph: &Graph, partition: &LevelPartition, threshold_exponent: Option<f64>) -> f64 {
    let e = threshold_exponent.unwrap_or(partition_epsilon(partition) / 4.0);
    2.0 * (graph.max_degree() as f64).powf(1.0 - e)
}

/// `F_i = {v ∈ L_i : a(v) < 2Δ^{1−e}}`.
pub fn frozen_sets(
    graph: &Graph,
    coloring: &Coloring,
    partition: &LevelPartition,
    level: usize,
    threshold_exponent: Option<f64>,
) -> Result<Vec<Vertex>> {
    require_proper(graph, coloring)?;
    let members = partition
        .levels
        .get(level)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} out of range")))?;
    let threshold = nearly_frozen_threshold(graph, partition, threshold_exponent);
    let mut scratch = Scratch::new(coloring.k());
    Ok(members
        .iter()
        .copied()
        .filter(|&v| (scratch.available_count(graph, coloring.colors(), v) as f64) < threshold)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma31Report {
    pub samples: usize,
    pub epsilon: f64,
    /// `Δ^{1−ε/2}`.
    pub threshold: f64,
    /// Fraction of samples with some `a_Y(v) < Δ^{1−ε/2}`.
    pub violation_frequency: f64,
    /// `k e^{−Δ/k}`; the three factors below scale it.
    pub base: f64,
    /// Fractions of samples with some `a_Y(v)` below `½`, `9/10` and `8/10`
    /// of `base`.
    pub below_half: f64,
    pub below_nine_tenths: f64,
    pub below_eight_tenths: f64,
    /// `n^{−4}`.
    pub target: f64,
    pub exact_sampler: bool,
}

pub fn lemma31_check(graph: &Graph, k: u32, samples: usize, sampler: &mut Sampler, epsilon: f64) -> Result<Lemma31Report> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = graph.n();
    let delta = graph.max_degree() as f64;
    let threshold = delta.powf(1.0 - epsilon / 2.0);
    let base = k as f64 * (-delta / k as f64).exp();
    let mut scratch = Scratch::new(k);
    let mut hits = [0usize; 4];
    for _ in 0..samples {
        let y = sampler.next_coloring()?;
        if y.k() != k {
            return Err(Error::InvalidArgument("sampler palette differs from k".into()));
        }
        let min = (0..n).map(|v| scratch.available_count(graph, y.colors(), v)).min().unwrap_or(usize::MAX) as f64;
        for (h, t) in hits.iter_mut().zip([threshold, 0.5 * base, 0.9 * base, 0.8 * base]) {
            *h += (min < t) as usize;
        }
    }
    let f = |c: usize| c as f64 / samples as f64;
    Ok(Lemma31Report {
        samples,
        epsilon,
        threshold,
        violation_frequency: f(hits[0]),
        base,
        below_half: f(hits[1]),
        below_nine_tenths: f(hits[2]),
        below_eight_tenths: f(hits[3]),
        target: (n as f64).powi(-4),
        exact_sampler: sampler.is_exact(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecolorTrace {
    pub coloring: Coloring,
    /// `a(s_j)` just before `s_j` is redrawn.
    pub available: Vec<usize>,
}

/// Redraws `s_1, ..., s_q` in order, each uniformly from its current
/// available colors.
pub fn recolor_experiment(graph: &Graph, y: &Coloring, sequence: &[Vertex], rng: &mut ChaCha8Rng) -> Result<RecolorTrace> {
    require_proper(graph, y)?;
    let mut seen = vec![false; graph.n()];
    for &s in sequence {
        if s >= graph.n() {
            return Err(Error::VertexOutOfRange { vertex: s, n: graph.n() });
        }
        if std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidArgument(format!("vertex {s} repeated in sequence")));
        }
    }
    let mut cur = y.clone();
    let mut scratch = Scratch::new(y.k());
    let mut available = Vec::with_capacity(sequence.len());
    for &s in sequence {
        let avail = scratch.available(graph, cur.colors(), s);
        available.push(avail.len());
        let c = avail[rng::index(rng, avail.len())];
        cur.set(s, c);
    }
    Ok(RecolorTrace { coloring: cur, available })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodegreeSplit {
    /// Neighbors of `v` in `L_{≤i}` sharing at most `ρ Δ^{ε/2}` neighbors with `v`.
    pub low: Vec<Vertex>,
    pub rest: Vec<Vertex>,
    pub codegree_cap: f64,
    /// `2 Δ^{1−ε/2}`.
    pub bound: f64,
}

/// Splits `N(v)` for `v ∈ L_{i+1}` by level and co-degree, failing when the
/// remainder exceeds `2Δ^{1−ε/2}`.
pub fn select_low_codegree_set(
    graph: &Graph,
    v: Vertex,
    partition: &LevelPartition,
    level: usize,
    rho: f64,
) -> Result<CodegreeSplit> {
    if v >= graph.n() {
        return Err(Error::VertexOutOfRange { vertex: v, n: graph.n() });
    }
    if partition.level_of[v] != level + 1 {
        return Err(Error::InvalidArgument(format!("vertex {v} is not in level {}", level + 1)));
    }
    let eps = partition_epsilon(partition);
    let delta = graph.max_degree() as f64;
    let cap = rho * delta.powf(eps / 2.0);
    let bound = 2.0 * delta.powf(1.0 - eps / 2.0);
    let (mut low, mut rest) = (Vec::new(), Vec::new());
    for &u in graph.neighbors(v) {
        if partition.level_of[u] <= level && codegree(graph, u, v)? as f64 <= cap {
            low.push(u);
        } else {
            rest.push(u);
        }
    }
    if rest.len() as f64 > bound {
        return Err(Error::Postcondition {
            vertex: v,
            message: format!("{} neighbors outside the low co-degree set, bound {bound:.6}", rest.len()),
        });
    }
    Ok(CodegreeSplit { low, rest, codegree_cap: cap, bound })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelFrozenRate {
    pub level: usize,
    pub rounds: u64,
    /// Σ over rounds of `|F_i|` at round start.
    pub frozen_at_start: u64,
    /// Σ over rounds of `|F_i|` recomputed at round end.
    pub frozen_at_end: u64,
    pub vertex_rounds: u64,
    /// `frozen_at_start / vertex_rounds`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrozenRateReport {
    pub threshold: f64,
    /// `exp(−Δ^{1−ε/3})`.
    pub target: f64,
    pub levels: Vec<LevelFrozenRate>,
}

impl FrozenRateReport {
    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Runs set dynamics for `rounds` rounds from `start`, snapshotting the
/// nearly frozen set of the active level at the start and end of each round.
pub fn nearly_frozen_rate(
    graph: &Graph,
    partition: &LevelPartition,
    start: Coloring,
    rounds: u64,
    seed: u64,
    threshold_exponent: Option<f64>,
) -> Result<FrozenRateReport> {
    let mut state = ChainState::seeded(graph, start, seed)?;
    let m = partition.m();
    let mut levels: Vec<LevelFrozenRate> = (0..m)
        .map(|level| LevelFrozenRate { level, rounds: 0, frozen_at_start: 0, frozen_at_end: 0, vertex_rounds: 0, rate: 0.0 })
        .collect();
    for round in 0..rounds {
        let j = (round % m as u64) as usize;
        if partition.levels[j].is_empty() {
            continue;
        }
        let before = frozen_sets(graph, state.coloring(), partition, j, threshold_exponent)?.len();
        set_dynamics_round(&mut state, graph, partition, j, RoundMode::Random)?;
        let after = frozen_sets(graph, state.coloring(), partition, j, threshold_exponent)?.len();
        let l = &mut levels[j];
        l.rounds += 1;
        l.frozen_at_start += before as u64;
        l.frozen_at_end += after as u64;
        l.vertex_rounds += partition.levels[j].len() as u64;
    }
    for l in &mut levels {
        l.rate = if l.vertex_rounds == 0 { 0.0 } else { l.frozen_at_start as f64 / l.vertex_rounds as f64 };
    }
    let delta = graph.max_degree() as f64;
    let eps = partition_epsilon(partition);
    Ok(FrozenRateReport {
        threshold: nearly_frozen_threshold(graph, partition, threshold_exponent),
        target: (-delta.powf(1.0 - eps / 3.0)).exp(),
        levels,
    })
}
