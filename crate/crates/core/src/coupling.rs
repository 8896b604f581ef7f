//! Jerrum's one-site maximal coupling of two Glauber chains and the
//! weighted-disagreement measurements built on it.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::dynamics::{is_proper, resolve_mode, round_budget, Color, Coloring, RoundMode, Scratch};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::rng::{self, ChaCha8Rng};
use crate::sampler::Sampler;
use crate::spectral::LevelPartition;

/// Joint draw from the maximal coupling of `Uniform(ax)` and `Uniform(ay)`
/// using a single integer `r ∈ [0, |ax|·|ay|)`.
///
/// Mass `1/max(|ax|,|ay|)` sits on each common color. The residual mass of
/// each side is laid out over its sorted colors and both sides read the same
/// quantile, so residual colors are paired by rank.
pub fn maximal_coupling(ax: &[Color], ay: &[Color], r: u64) -> (Color, Color) {
    let (nx, ny) = (ax.len() as u64, ay.len() as u64);
    debug_assert!(r < nx * ny);
    let mn = nx.min(ny);
    let common: Vec<Color> = ax.iter().copied().filter(|c| ay.binary_search(c).is_ok()).collect();
    let matched = common.len() as u64 * mn;
    if r < matched {
        let c = common[(r / mn) as usize];
        return (c, c);
    }
    let q = r - matched;
    let pick = |own: &[Color], other_len: u64, other: &[Color]| -> Color {
        let mut acc = 0;
        for &c in own {
            let w = other_len - if other.binary_search(&c).is_ok() { mn } else { 0 };
            acc += w;
            if q < acc {
                return c;
            }
        }
        unreachable!("residual masses are equal on both sides")
    };
    (pick(ax, ny, ay), pick(ay, nx, ax))
}

/// Probability that the maximal coupling draws different colors:
/// `1 − |A_X ∩ A_Y| / max(a_X, a_Y)`.
pub fn disagreement_probability(ax: &[Color], ay: &[Color]) -> f64 {
    let common = ax.iter().filter(|c| ay.binary_search(c).is_ok()).count();
    1.0 - common as f64 / ax.len().max(ay.len()) as f64
}

/// Two chains driven by shared randomness.
#[derive(Debug, Clone)]
pub struct CoupledState {
    x: Coloring,
    y: Coloring,
    weights: Vec<f64>,
    in_d: Vec<bool>,
    d_count: usize,
    w_d: f64,
    pub steps: u64,
    rng: ChaCha8Rng,
    sx: Scratch,
    sy: Scratch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRecord {
    pub t: u64,
    pub wd_before: f64,
    pub wd_after: f64,
    pub vertex: Vertex,
    pub created: bool,
    pub destroyed: bool,
}

impl CoupledState {
    /// `weights` defaults to all ones.
    pub fn new(graph: &Graph, x: Coloring, y: Coloring, weights: Option<&[f64]>, rng: ChaCha8Rng) -> Result<CoupledState> {
        if x.k() != y.k() {
            return Err(Error::InvalidArgument("chains use different palettes".into()));
        }
        for c in [&x, &y] {
            if !is_proper(graph, c)? {
                return Err(Error::ImproperColoring);
            }
        }
        let n = graph.n();
        let weights = match weights {
            Some(w) if w.len() != n => return Err(Error::LengthMismatch { expected: n, got: w.len() }),
            Some(w) => w.to_vec(),
            None => vec![1.0; n],
        };
        let in_d: Vec<bool> = (0..n).map(|v| x.get(v) != y.get(v)).collect();
        let d_count = in_d.iter().filter(|&&b| b).count();
        let w_d = (0..n).filter(|&v| in_d[v]).map(|v| weights[v]).sum();
        let k = x.k();
        Ok(CoupledState { x, y, weights, in_d, d_count, w_d, steps: 0, rng, sx: Scratch::new(k), sy: Scratch::new(k) })
    }

    pub fn x(&self) -> &Coloring {
        &self.x
    }

    pub fn y(&self) -> &Coloring {
        &self.y
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weighted_disagreement(&self) -> f64 {
        self.w_d
    }

    pub fn disagreement_count(&self) -> usize {
        self.d_count
    }

    pub fn is_coalesced(&self) -> bool {
        self.d_count == 0
    }

    pub fn in_disagreement(&self, v: Vertex) -> bool {
        self.in_d[v]
    }

    pub fn disagreements(&self) -> Vec<Vertex> {
        (0..self.in_d.len()).filter(|&v| self.in_d[v]).collect()
    }

    /// Recomputes D and w(D) from scratch and compares.
    pub fn check_invariants(&self) -> Result<()> {
        let scan = self.x.disagreements(&self.y);
        if scan != self.disagreements() || scan.len() != self.d_count {
            return Err(Error::Invariant("disagreement set out of sync".into()));
        }
        let w: f64 = scan.iter().map(|&v| self.weights[v]).sum();
        if (w - self.w_d).abs() > 1e-12 * w.abs().max(1.0) {
            return Err(Error::Invariant(format!("w(D) drifted: {} vs {w}", self.w_d)));
        }
        Ok(())
    }

    /// Coupled update of a given vertex.
    pub fn update_at(&mut self, graph: &Graph, v: Vertex) -> DriftRecord {
        let before = self.w_d;
        let ax = self.sx.available(graph, self.x.colors(), v);
        let ay = self.sy.available(graph, self.y.colors(), v);
        let total = ax.len() as u64 * ay.len() as u64;
        let r = rng::index(&mut self.rng, total as usize) as u64;
        let (cx, cy) = maximal_coupling(ax, ay, r);
        self.x.set(v, cx);
        self.y.set(v, cy);
        let was = self.in_d[v];
        let now = cx != cy;
        if was != now {
            self.in_d[v] = now;
            if now {
                self.d_count += 1;
                self.w_d += self.weights[v];
            } else {
                self.d_count -= 1;
                self.w_d -= self.weights[v];
                if self.d_count == 0 {
                    self.w_d = 0.0;
                }
            }
        }
        self.steps += 1;
        DriftRecord {
            t: self.steps,
            wd_before: before,
            wd_after: self.w_d,
            vertex: v,
            created: !was && now,
            destroyed: was && !now,
        }
    }
}

/// Picks one vertex (uniform over `restrict_to`, default `V`) for both chains
/// and recolors it through the maximal coupling.
pub fn jerrum_coupled_step(cs: &mut CoupledState, graph: &Graph, restrict_to: Option<&[Vertex]>) -> Result<DriftRecord> {
    let v = match restrict_to {
        Some([]) => return Err(Error::InvalidArgument("restrict_to is empty".into())),
        Some(set) => set[rng::index(&mut cs.rng, set.len())],
        None if graph.n() == 0 => return Err(Error::InvalidArgument("graph has no vertices".into())),
        None => rng::index(&mut cs.rng, graph.n()),
    };
    Ok(cs.update_at(graph, v))
}

#[derive(Debug, Clone)]
pub enum Schedule<'a> {
    Glauber { steps: u64 },
    SetDynamics { partition: &'a LevelPartition, rounds: u64, mode: RoundMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundDrift {
    pub round: u64,
    pub level: usize,
    pub wd_before: f64,
    pub wd_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingRun {
    /// `(t, w(D_t))`, starting at `t = 0`.
    pub trajectory: Vec<(u64, f64)>,
    pub records: Vec<DriftRecord>,
    pub rounds: Vec<RoundDrift>,
    pub coalesced_at: Option<u64>,
    pub initial_disagreements: Vec<Vertex>,
    pub total_steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Stop as soon as the chains agree (all later states are equal anyway).
    pub stop_on_coalescence: bool,
    pub record: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { stop_on_coalescence: false, record: true }
    }
}

/// Runs the coupled chains under `schedule`, recording `w(D_t)`.
pub fn run_coupling(
    graph: &Graph,
    x0: Coloring,
    y0: Coloring,
    schedule: &Schedule,
    weights: Option<&[f64]>,
    seed: u64,
    options: RunOptions,
) -> Result<CouplingRun> {
    let mut cs = CoupledState::new(graph, x0, y0, weights, rng::seeded(seed))?;
    let mut run = CouplingRun {
        trajectory: vec![(0, cs.w_d)],
        records: Vec::new(),
        rounds: Vec::new(),
        coalesced_at: cs.is_coalesced().then_some(0),
        initial_disagreements: cs.disagreements(),
        total_steps: 0,
    };
    let log = |cs: &CoupledState, rec: DriftRecord, run: &mut CouplingRun| {
        if options.record {
            run.trajectory.push((rec.t, rec.wd_after));
            run.records.push(rec);
        }
        if run.coalesced_at.is_none() && cs.is_coalesced() {
            run.coalesced_at = Some(rec.t);
        }
    };
    if run.coalesced_at.is_some() && options.stop_on_coalescence {
        return Ok(run);
    }
    match schedule {
        Schedule::Glauber { steps } => {
            for _ in 0..*steps {
                let rec = jerrum_coupled_step(&mut cs, graph, None)?;
                log(&cs, rec, &mut run);
                if options.stop_on_coalescence && cs.is_coalesced() {
                    break;
                }
            }
        }
        Schedule::SetDynamics { partition, rounds, mode } => {
            if partition.level_of.len() != graph.n() {
                return Err(Error::LengthMismatch { expected: graph.n(), got: partition.level_of.len() });
            }
            let m = partition.m() as u64;
            'rounds: for round in 0..*rounds {
                let j = (round % m) as usize;
                let level = &partition.levels[j];
                let before = cs.w_d;
                if !level.is_empty() {
                    if resolve_mode(graph, level, j, *mode)? {
                        for &v in level {
                            let rec = cs.update_at(graph, v);
                            log(&cs, rec, &mut run);
                        }
                    } else {
                        for _ in 0..round_budget(level.len(), graph.max_degree()) {
                            let rec = jerrum_coupled_step(&mut cs, graph, Some(level))?;
                            log(&cs, rec, &mut run);
                            if options.stop_on_coalescence && cs.is_coalesced() {
                                run.rounds.push(RoundDrift { round, level: j, wd_before: before, wd_after: cs.w_d });
                                break 'rounds;
                            }
                        }
                    }
                }
                run.rounds.push(RoundDrift { round, level: j, wd_before: before, wd_after: cs.w_d });
                if options.stop_on_coalescence && cs.is_coalesced() {
                    break;
                }
            }
        }
    }
    run.total_steps = cs.steps;
    Ok(run)
}

/// `E[w(D_{t+1}) − w(D_t) | X, Y]` computed exactly: each vertex is chosen
/// with probability `1/n` and then ends in D with the coupling's
/// disagreement probability.
pub fn exact_one_step_drift(graph: &Graph, x: &Coloring, y: &Coloring, weights: &[f64]) -> f64 {
    let n = graph.n();
    let mut sx = Scratch::new(x.k());
    let mut sy = Scratch::new(y.k());
    let mut total = 0.0;
    for v in 0..n {
        let ax = sx.available(graph, x.colors(), v);
        let ay = sy.available(graph, y.colors(), v);
        let p = disagreement_probability(ax, ay);
        let was = (x.get(v) != y.get(v)) as u8 as f64;
        total += weights[v] * (p - was);
    }
    total / n as f64
}

/// The drift bound `(1/n) Σ_v w(v) |N(v) ∩ D| / a(v) − w(D)/n`, with
/// `a(v) = min(a_X(v), a_Y(v))`.
pub fn analytic_drift_bound(graph: &Graph, x: &Coloring, y: &Coloring, weights: &[f64]) -> f64 {
    let n = graph.n();
    let mut sx = Scratch::new(x.k());
    let mut sy = Scratch::new(y.k());
    let in_d = |v: Vertex| x.get(v) != y.get(v);
    let mut total = 0.0;
    for v in 0..n {
        let hits = graph.neighbors(v).iter().filter(|&&u| in_d(u)).count();
        if hits > 0 {
            let a = sx.available_count(graph, x.colors(), v).min(sy.available_count(graph, y.colors(), v));
            total += weights[v] * hits as f64 / a as f64;
        }
        if in_d(v) {
            total -= weights[v];
        }
    }
    total / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftEstimate {
    pub samples: usize,
    /// Monte-Carlo mean of `w(D_{t+1}) − w(D_t)`.
    pub mean: f64,
    pub std_err: f64,
    /// Mean of the exact conditional drift over the same starts.
    pub exact_mean: f64,
    pub exact_std_err: f64,
    /// Mean of the analytic bound over the same starts.
    pub bound_mean: f64,
    /// Starts where no vertex could host a disagreement.
    pub frozen_starts: usize,
}

impl DriftEstimate {
    /// `mean + 3σ < 0`.
    pub fn contracts(&self) -> bool {
        self.mean + 3.0 * self.std_err < 0.0
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Single-disagreement starts: `Y` from `source`, and `X` equal to `Y` except
/// at one vertex `z` (the given `at`, or uniform among vertices with two or
/// more available colors) which takes a uniform other available color. One
/// coupled step is then taken from `(X, Y)`.
pub fn contraction_estimate(
    graph: &Graph,
    weights: Option<&[f64]>,
    k: u32,
    samples: usize,
    source: &mut Sampler,
    at: Option<Vertex>,
    seed: u64,
) -> Result<DriftEstimate> {
    if samples < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 samples, got {samples}")));
    }
    let n = graph.n();
    if let Some(z) = at {
        if z >= n {
            return Err(Error::VertexOutOfRange { vertex: z, n });
        }
    }
    let unit = vec![1.0; n];
    let w = weights.unwrap_or(&unit);
    if w.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: w.len() });
    }
    let mut rng = rng::seeded(seed);
    let mut scratch = Scratch::new(k);
    let mut mc = Vec::with_capacity(samples);
    let mut exact = Vec::with_capacity(samples);
    let mut bound = Vec::with_capacity(samples);
    let mut frozen = 0;
    for i in 0..samples {
        let y = source.next_coloring()?;
        if y.k() != k {
            return Err(Error::InvalidArgument("source palette differs from k".into()));
        }
        let z = match at {
            Some(z) => (scratch.available_count(graph, y.colors(), z) >= 2).then_some(z),
            None => {
                let eligible: Vec<Vertex> =
                    (0..n).filter(|&v| scratch.available_count(graph, y.colors(), v) >= 2).collect();
                (!eligible.is_empty()).then(|| eligible[rng::index(&mut rng, eligible.len())])
            }
        };
        let Some(z) = z else {
            frozen += 1;
            mc.push(0.0);
            exact.push(0.0);
            bound.push(0.0);
            continue;
        };
        let others: Vec<Color> =
            scratch.available(graph, y.colors(), z).iter().copied().filter(|&c| c != y.get(z)).collect();
        let mut x = y.clone();
        x.set(z, others[rng::index(&mut rng, others.len())]);
        exact.push(exact_one_step_drift(graph, &x, &y, w));
        bound.push(analytic_drift_bound(graph, &x, &y, w));
        let mut cs = CoupledState::new(graph, x, y, Some(w), rng::replica(seed, i as u64 + 1))?;
        let rec = jerrum_coupled_step(&mut cs, graph, None)?;
        mc.push(rec.wd_after - rec.wd_before);
    }
    let (mean, std_err) = mean_and_se(&mc);
    let (exact_mean, exact_std_err) = mean_and_se(&exact);
    let (bound_mean, _) = mean_and_se(&bound);
    Ok(DriftEstimate { samples, mean, std_err, exact_mean, exact_std_err, bound_mean, frozen_starts: frozen })
}

/// Attribution of disagreements to the initial disagreement they descend
/// from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OriginAttribution {
    /// Final origin of every vertex still in D.
    pub origin: Vec<Option<Vertex>>,
    /// Origin -> (final disagreeing vertices, their total weight).
    pub by_source: BTreeMap<Vertex, (Vec<Vertex>, f64)>,
}

impl OriginAttribution {
    /// Restriction to a vertex subset such as one level set.
    pub fn within(&self, subset: &[Vertex], weights: &[f64]) -> BTreeMap<Vertex, (Vec<Vertex>, f64)> {
        let mut out: BTreeMap<Vertex, (Vec<Vertex>, f64)> = BTreeMap::new();
        for &v in subset {
            if let Some(z) = self.origin[v] {
                let e = out.entry(z).or_default();
                e.0.push(v);
                e.1 += weights[v];
            }
        }
        out
    }
}

/// Replays a recorded run: an initial disagreement is its own origin, a
/// newly created disagreement inherits the lowest origin among its
/// disagreeing neighbors, a vertex that stays in D keeps its origin and one
/// that leaves D loses it. Only origins in `sources` are reported in
/// `by_source` (all initial disagreements when `sources` is `None`).
pub fn track_disagreement_origins(
    graph: &Graph,
    run: &CouplingRun,
    weights: &[f64],
    sources: Option<&[Vertex]>,
) -> Result<OriginAttribution> {
    let n = graph.n();
    let mut origin: Vec<Option<Vertex>> = vec![None; n];
    for &z in &run.initial_disagreements {
        origin[z] = Some(z);
    }
    if run.records.len() as u64 != run.total_steps {
        return Err(Error::InvalidArgument("run was not recorded step by step".into()));
    }
    for rec in &run.records {
        let v = rec.vertex;
        if rec.destroyed {
            origin[v] = None;
        } else if rec.created {
            let inherited = graph.neighbors(v).iter().filter_map(|&u| origin[u]).min();
            origin[v] = Some(inherited.ok_or_else(|| {
                Error::Invariant(format!("disagreement born at {v} without a disagreeing neighbor"))
            })?);
        }
    }
    let mut by_source: BTreeMap<Vertex, (Vec<Vertex>, f64)> = BTreeMap::new();
    let keep = |z: Vertex| sources.is_none_or(|s| s.contains(&z));
    for &z in &run.initial_disagreements {
        if keep(z) {
            by_source.entry(z).or_default();
        }
    }
    for v in 0..n {
        if let Some(z) = origin[v] {
            if keep(z) {
                let e = by_source.entry(z).or_default();
                e.0.push(v);
                e.1 += weights[v];
            }
        }
    }
    Ok(OriginAttribution { origin, by_source })
}

/// One coupled round on level `i` from a single disagreement at a vertex
/// `z ∉ L_i` adjacent to `L_i`, measuring `w(D ∩ L_i) / w(z)` at the end of
/// the round against `Δ^{−ε/4}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundContraction {
    pub level: usize,
    pub source: Vertex,
    pub samples: usize,
    pub mean_ratio: f64,
    pub std_err: f64,
    pub target: f64,
    /// `mean_ratio / target − 1`; nonpositive means the target was met.
    pub slack: f64,
}

pub fn round_contraction(
    graph: &Graph,
    partition: &LevelPartition,
    level: usize,
    samples: usize,
    source: &mut Sampler,
    seed: u64,
) -> Result<Option<RoundContraction>> {
    let members = partition
        .levels
        .get(level)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} out of range")))?;
    let boundary = (0..graph.n())
        .filter(|&z| partition.level_of[z] != level)
        .find(|&z| graph.neighbors(z).iter().any(|&u| partition.level_of[u] == level));
    let Some(z) = boundary else { return Ok(None) };
    let w = &partition.weights;
    let mut rng = rng::seeded(seed);
    let mut scratch: Option<Scratch> = None;
    let mut ratios = Vec::with_capacity(samples);
    for i in 0..samples {
        let y = source.next_coloring()?;
        let scratch = scratch.get_or_insert_with(|| Scratch::new(y.k()));
        let others: Vec<Color> =
            scratch.available(graph, y.colors(), z).iter().copied().filter(|&c| c != y.get(z)).collect();
        if others.is_empty() {
            continue;
        }
        let mut x = y.clone();
        x.set(z, others[rng::index(&mut rng, others.len())]);
        let mut cs = CoupledState::new(graph, x, y, Some(w), rng::replica(seed, i as u64 + 1))?;
        for _ in 0..round_budget(members.len(), graph.max_degree()) {
            jerrum_coupled_step(&mut cs, graph, Some(members))?;
        }
        let inside: f64 = members.iter().filter(|&&v| cs.in_disagreement(v)).map(|&v| w[v]).sum();
        ratios.push(inside / w[z]);
    }
    if ratios.is_empty() {
        return Ok(None);
    }
    let (mean_ratio, std_err) = mean_and_se(&ratios);
    let target = (graph.max_degree() as f64).powf(-partition.epsilon / 4.0);
    Ok(Some(RoundContraction {
        level,
        source: z,
        samples: ratios.len(),
        mean_ratio,
        std_err,
        target,
        slack: mean_ratio / target - 1.0,
    }))
}

/// `seed,t,wD,coalesced` rows for each `(seed, run)`, under one header.
pub fn write_trajectory_csv<'a, W, I>(out: W, runs: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a CouplingRun)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "t", "wD", "coalesced"]).map_err(csv_err)?;
    for (seed, run) in runs {
        for &(t, wd) in &run.trajectory {
            let coalesced = run.coalesced_at.is_some_and(|c| t >= c);
            w.write_record([seed.to_string(), t.to_string(), format!("{wd:.17e}"), (coalesced as u8).to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `seed,t,v,delta_wD` rows for each `(seed, run)`, under one header.
pub fn write_drift_csv<'a, W, I>(out: W, runs: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a CouplingRun)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "t", "v", "delta_wD"]).map_err(csv_err)?;
    for (seed, run) in runs {
        for r in &run.records {
            w.write_record([
                seed.to_string(),
                r.t.to_string(),
                r.vertex.to_string(),
                format!("{:.17e}", r.wd_after - r.wd_before),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{enumerate_colorings, DEFAULT_BUDGET};

    fn col(c: &[u32], k: u32) -> Coloring {
        Coloring::new(c.to_vec(), k).unwrap()
    }

    #[test]
    fn coupling_marginals_are_exact() {
        let cases: [(&[Color], &[Color]); 4] =
            [(&[1, 2, 3], &[2, 3, 4, 5]), (&[1], &[1, 2]), (&[1, 2], &[3, 4]), (&[2, 4, 6], &[2, 4, 6])];
        for (ax, ay) in cases {
            let total = (ax.len() * ay.len()) as u64;
            let mut fx = BTreeMap::new();
            let mut fy = BTreeMap::new();
            let mut differ = 0;
            for r in 0..total {
                let (cx, cy) = maximal_coupling(ax, ay, r);
                *fx.entry(cx).or_insert(0u64) += 1;
                *fy.entry(cy).or_insert(0u64) += 1;
                differ += (cx != cy) as u64;
            }
            assert!(fx.keys().copied().eq(ax.iter().copied()));
            assert!(fx.values().all(|&c| c == ay.len() as u64));
            assert!(fy.keys().copied().eq(ay.iter().copied()));
            assert!(fy.values().all(|&c| c == ax.len() as u64));
            let p = differ as f64 / total as f64;
            assert!((p - disagreement_probability(ax, ay)).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_states_stay_equal() {
        let g = Graph::grid(3, 3).unwrap();
        let m = enumerate_colorings(&g, 5, DEFAULT_BUDGET).unwrap();
        let x = m.coloring(17);
        let run = run_coupling(&g, x.clone(), x, &Schedule::Glauber { steps: 500 }, None, 3, RunOptions::default())
            .unwrap();
        assert_eq!(run.coalesced_at, Some(0));
        assert!(run.trajectory.iter().all(|&(_, w)| w == 0.0));
    }

    #[test]
    fn single_vertex_coalesces_in_one_step() {
        let g = Graph::from_edges(1, []).unwrap();
        for seed in 0..20 {
            let run = run_coupling(&g, col(&[1], 2), col(&[2], 2), &Schedule::Glauber { steps: 3 }, None, seed, RunOptions::default())
                .unwrap();
            assert_eq!(run.coalesced_at, Some(1));
        }
    }

    #[test]
    fn incremental_disagreement_matches_scan() {
        let g = Graph::planar_triangulation(40, 3).unwrap();
        let w: Vec<f64> = (0..40).map(|v| 1.0 + v as f64 / 7.0).collect();
        let mut r = rng::seeded(1);
        let x = crate::dynamics::random_greedy_coloring(&g, 16, &mut r).unwrap();
        let y = crate::dynamics::random_greedy_coloring(&g, 16, &mut r).unwrap();
        let mut cs = CoupledState::new(&g, x, y, Some(&w), rng::seeded(2)).unwrap();
        let wmax = w.iter().cloned().fold(0.0, f64::max);
        for _ in 0..2000 {
            let rec = jerrum_coupled_step(&mut cs, &g, None).unwrap();
            let delta = rec.wd_after - rec.wd_before;
            assert!(delta.abs() <= wmax + 1e-12);
            let dv = w[rec.vertex];
            assert!(delta.abs() < 1e-9 || (delta.abs() - dv).abs() < 1e-9);
            cs.check_invariants().unwrap();
        }
    }

    #[test]
    fn path_neighbor_join_frequency() {
        // P4 with a disagreement at endpoint 0; update vertex 1 only
        let g = Graph::path(4).unwrap();
        let x = col(&[1, 2, 3, 1], 5);
        let y = col(&[4, 2, 3, 1], 5);
        // A_X(1) = {2,4,5}, A_Y(1) = {1,2,5}: symmetric difference 2, max size 3
        let exact = 2.0 / (2.0 * 3.0);
        let trials = 100_000;
        let mut joined = 0u32;
        for seed in 0..trials {
            let mut cs = CoupledState::new(&g, x.clone(), y.clone(), None, rng::seeded(seed)).unwrap();
            cs.update_at(&g, 1);
            joined += cs.in_disagreement(1) as u32;
        }
        let p = joined as f64 / trials as f64;
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((p - exact).abs() < 3.0 * sigma, "{p}");
    }

    #[test]
    fn frozen_triangle_has_zero_drift() {
        let g = Graph::complete(3).unwrap();
        let mut s = Sampler::auto(&g, 3, 4).unwrap();
        let est = contraction_estimate(&g, None, 3, 50, &mut s, None, 5).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.std_err, 0.0);
        assert_eq!(est.frozen_starts, 50);
        assert!(contraction_estimate(&g, None, 3, 9, &mut s, None, 5).is_err());
    }

    #[test]
    fn grid_coupling_coalesces() {
        let g = Graph::grid(5, 5).unwrap();
        let mut times = Vec::new();
        for seed in 0..100 {
            let mut r = rng::replica(seed, 0);
            let x = crate::dynamics::random_greedy_coloring(&g, 11, &mut r).unwrap();
            let y = crate::dynamics::random_greedy_coloring(&g, 11, &mut r).unwrap();
            let options = RunOptions { stop_on_coalescence: true, record: false };
            let run = run_coupling(&g, x, y, &Schedule::Glauber { steps: 100_000 }, None, seed, options).unwrap();
            times.push(run.coalesced_at.expect("coalesces"));
        }
        times.sort();
        assert!(times[50] < 100_000);
    }

    #[test]
    fn origins_partition_final_disagreements() {
        let g = Graph::grid(6, 6).unwrap();
        let mut r = rng::seeded(9);
        let y = crate::dynamics::random_greedy_coloring(&g, 7, &mut r).unwrap();
        let mut x = y.clone();
        for z in [0, 35] {
            let alt = crate::dynamics::available_colors(&g, &y, z).into_iter().find(|&c| c != y.get(z)).unwrap();
            x.set(z, alt);
        }
        let run = run_coupling(&g, x, y, &Schedule::Glauber { steps: 60 }, None, 4, RunOptions::default()).unwrap();
        let w = vec![1.0; 36];
        let att = track_disagreement_origins(&g, &run, &w, None).unwrap();
        let final_d: Vec<Vertex> = (0..36).filter(|&v| att.origin[v].is_some()).collect();
        let mut union: Vec<Vertex> = att.by_source.values().flat_map(|(s, _)| s.clone()).collect();
        union.sort();
        assert_eq!(union, final_d);
        let a = &att.by_source[&0].0;
        let b = &att.by_source[&35].0;
        assert!(a.iter().all(|v| !b.contains(v)));

        let last = run.trajectory.last().unwrap().1;
        assert_eq!(final_d.len() as f64, last);
    }

    #[test]
    fn empty_and_single_source_attribution() {
        let g = Graph::path(5).unwrap();
        let x = col(&[1, 2, 1, 2, 1], 3);
        let run = run_coupling(&g, x.clone(), x.clone(), &Schedule::Glauber { steps: 10 }, None, 1, RunOptions::default()).unwrap();
        let att = track_disagreement_origins(&g, &run, &[1.0; 5], None).unwrap();
        assert!(att.by_source.is_empty());

        let y = col(&[3, 2, 1, 2, 1], 3);
        let run = run_coupling(&g, x, y, &Schedule::Glauber { steps: 40 }, None, 2, RunOptions::default()).unwrap();
        let att = track_disagreement_origins(&g, &run, &[1.0; 5], None).unwrap();
        let finals: Vec<Vertex> = (0..5).filter(|&v| run_final_differs(&run, v)).collect();
        assert_eq!(att.by_source.get(&0).map(|e| e.0.clone()).unwrap_or_default(), finals);
    }

    fn run_final_differs(run: &CouplingRun, v: Vertex) -> bool {
        let mut d: Vec<bool> = vec![false; 5];
        for &z in &run.initial_disagreements {
            d[z] = true;
        }
        for r in &run.records {
            if r.created {
                d[r.vertex] = true;
            }
            if r.destroyed {
                d[r.vertex] = false;
            }
        }
        d[v]
    }

    #[test]
    fn trajectory_csv_shape() {
        let g = Graph::from_edges(1, []).unwrap();
        let run =
            run_coupling(&g, col(&[1], 2), col(&[2], 2), &Schedule::Glauber { steps: 2 }, None, 0, RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, [(0, &run), (5, &run)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "seed,t,wD,coalesced");
        assert_eq!(lines.len(), 7);
        assert!(lines[2].ends_with(",1"));
        assert!(lines[4].starts_with("5,0,"));
        let mut buf = Vec::new();
        write_drift_csv(&mut buf, [(3, &run)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("seed,t,v,delta_wD"));
        assert_eq!(text.lines().count(), 3);
    }
}
