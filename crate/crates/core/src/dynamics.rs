//! Proper colorings, single-site Glauber updates, level-set dynamics and the
//! constructive recoloring walks that bound the diameter of the state space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DegeneracyData, Graph, Vertex};
use crate::rng::{self, ChaCha8Rng};
use crate::spectral::LevelPartition;

pub type Color = u32;

/// Assignment of colors `1..=k` to vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coloring {
    colors: Vec<Color>,
    k: u32,
}

impl Coloring {
    pub fn new(colors: Vec<Color>, k: u32) -> Result<Coloring> {
        if let Some((v, &c)) = colors.iter().enumerate().find(|(_, &c)| c == 0 || c > k) {
            return Err(Error::ColorOutOfRange { vertex: v, color: c, k });
        }
        Ok(Coloring { colors, k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn get(&self, v: Vertex) -> Color {
        self.colors[v]
    }

    /// Sets one color. Callers are responsible for properness; the palette
    /// range is still enforced.
    pub fn set(&mut self, v: Vertex, c: Color) {
        assert!(c >= 1 && c <= self.k, "color {c} outside 1..={}", self.k);
        self.colors[v] = c;
    }

    /// Positions where `self` and `other` differ.
    pub fn disagreements(&self, other: &Coloring) -> Vec<Vertex> {
        (0..self.len()).filter(|&v| self.colors[v] != other.colors[v]).collect()
    }

    /// JSON array of colors indexed by vertex id.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.colors).expect("colors serialize")
    }

    pub fn from_json(text: &str, k: u32) -> Result<Coloring> {
        let colors: Vec<Color> =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        Coloring::new(colors, k)
    }
}

/// True iff no edge is monochromatic.
pub fn is_proper(graph: &Graph, coloring: &Coloring) -> Result<bool> {
    if coloring.len() != graph.n() {
        return Err(Error::LengthMismatch { expected: graph.n(), got: coloring.len() });
    }
    if let Some((v, &c)) = coloring.colors.iter().enumerate().find(|(_, &c)| c == 0 || c > coloring.k) {
        return Err(Error::ColorOutOfRange { vertex: v, color: c, k: coloring.k });
    }
    Ok(graph.edges().iter().all(|&(u, v)| coloring.colors[u] != coloring.colors[v]))
}

fn require_proper(graph: &Graph, coloring: &Coloring) -> Result<()> {
    if is_proper(graph, coloring)? {
        Ok(())
    } else {
        Err(Error::ImproperColoring)
    }
}

/// Colors of the palette absent from `N(v)`, ascending.
pub fn available_colors(graph: &Graph, coloring: &Coloring, v: Vertex) -> Vec<Color> {
    let mut scratch = Scratch::new(coloring.k);
    scratch.available(graph, &coloring.colors, v).to_vec()
}

/// Reusable buffers for availability queries in hot loops.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    seen: Vec<u32>,
    stamp: u32,
    buf: Vec<Color>,
}

impl Scratch {
    pub(crate) fn new(k: u32) -> Scratch {
        Scratch { seen: vec![0; k as usize + 1], stamp: 0, buf: Vec::with_capacity(k as usize) }
    }

    fn mark_neighbors(&mut self, graph: &Graph, colors: &[Color], v: Vertex) {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.stamp = 1;
        }
        for &u in graph.neighbors(v) {
            self.seen[colors[u] as usize] = self.stamp;
        }
    }

    pub(crate) fn available(&mut self, graph: &Graph, colors: &[Color], v: Vertex) -> &[Color] {
        self.mark_neighbors(graph, colors, v);
        self.buf.clear();
        for c in 1..self.seen.len() {
            if self.seen[c] != self.stamp {
                self.buf.push(c as Color);
            }
        }
        &self.buf
    }

    pub(crate) fn available_count(&mut self, graph: &Graph, colors: &[Color], v: Vertex) -> usize {
        self.available(graph, colors, v).len()
    }

    /// Lowest color of `bank` unused by `N(v)`, preferring `keep` when it is
    /// in the bank and unused.
    fn pick_in_bank(
        &mut self,
        graph: &Graph,
        colors: &[Color],
        v: Vertex,
        bank: std::ops::RangeInclusive<Color>,
        keep: Color,
    ) -> Option<Color> {
        self.mark_neighbors(graph, colors, v);
        if bank.contains(&keep) && self.seen[keep as usize] != self.stamp {
            return Some(keep);
        }
        bank.into_iter().find(|&c| self.seen[c as usize] != self.stamp)
    }

    fn is_free(&mut self, graph: &Graph, colors: &[Color], v: Vertex, c: Color) -> bool {
        graph.neighbors(v).iter().all(|&u| colors[u] != c)
    }
}

/// One recoloring `vertex: old -> new`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub vertex: Vertex,
    pub old_color: Color,
    pub new_color: Color,
}

impl Move {
    pub fn reversed(self) -> Move {
        Move { vertex: self.vertex, old_color: self.new_color, new_color: self.old_color }
    }
}

/// Single-owner Glauber chain state.
#[derive(Debug, Clone)]
pub struct ChainState {
    coloring: Coloring,
    pub steps: u64,
    rng: ChaCha8Rng,
    scratch: Scratch,
}

impl ChainState {
    pub fn new(graph: &Graph, coloring: Coloring, rng: ChaCha8Rng) -> Result<ChainState> {
        require_proper(graph, &coloring)?;
        let scratch = Scratch::new(coloring.k);
        Ok(ChainState { coloring, steps: 0, rng, scratch })
    }

    pub fn seeded(graph: &Graph, coloring: Coloring, seed: u64) -> Result<ChainState> {
        Self::new(graph, coloring, rng::seeded(seed))
    }

    pub fn coloring(&self) -> &Coloring {
        &self.coloring
    }

    pub fn into_coloring(self) -> Coloring {
        self.coloring
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Resamples `v` uniformly from its available colors.
    pub fn recolor(&mut self, graph: &Graph, v: Vertex) -> Move {
        let avail = self.scratch.available(graph, &self.coloring.colors, v);
        let new = avail[rng::index(&mut self.rng, avail.len())];
        let old = self.coloring.colors[v];
        self.coloring.colors[v] = new;
        self.steps += 1;
        Move { vertex: v, old_color: old, new_color: new }
    }
}

/// One Glauber update: a uniform vertex from `restrict_to` (default all of
/// `V`) takes a uniform color among those its neighbors do not use.
pub fn glauber_step(state: &mut ChainState, graph: &Graph, restrict_to: Option<&[Vertex]>) -> Result<Move> {
    let v = match restrict_to {
        Some([]) => return Err(Error::InvalidArgument("restrict_to is empty".into())),
        Some(set) => set[rng::index(&mut state.rng, set.len())],
        None => {
            if graph.n() == 0 {
                return Err(Error::InvalidArgument("graph has no vertices".into()));
            }
            rng::index(&mut state.rng, graph.n())
        }
    };
    Ok(state.recolor(graph, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundMode {
    /// `⌈|L_j| ln Δ⌉` uniform restricted updates.
    Random,
    /// Each vertex of the level once, ascending; the level must be independent.
    Sweep,
    /// Sweep on independent levels, random otherwise.
    SweepIfIndependent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundStats {
    pub round: u64,
    pub level: usize,
    pub updates: u64,
    pub total_updates: u64,
}

/// Updates per random round: `⌈size · ln Δ⌉`, at least 1.
pub fn round_budget(level_size: usize, max_degree: usize) -> u64 {
    let ln = (max_degree as f64).ln().max(0.0);
    ((level_size as f64 * ln).ceil() as u64).max(1)
}

/// Resolves a round mode against a concrete level.
pub(crate) fn resolve_mode(graph: &Graph, level: &[Vertex], j: usize, mode: RoundMode) -> Result<bool> {
    match mode {
        RoundMode::Random => Ok(false),
        RoundMode::Sweep if graph.is_independent(level) => Ok(true),
        RoundMode::Sweep => Err(Error::NotIndependent { level: j }),
        RoundMode::SweepIfIndependent => Ok(graph.is_independent(level)),
    }
}

/// One round of level-set dynamics on `L_j`; returns the number of updates.
pub fn set_dynamics_round(
    state: &mut ChainState,
    graph: &Graph,
    partition: &LevelPartition,
    j: usize,
    mode: RoundMode,
) -> Result<u64> {
    let level = partition
        .levels
        .get(j)
        .ok_or_else(|| Error::InvalidArgument(format!("level {j} out of range")))?;
    if level.is_empty() {
        return Err(Error::InvalidArgument(format!("level {j} is empty")));
    }
    if resolve_mode(graph, level, j, mode)? {
        for &v in level {
            state.recolor(graph, v);
        }
        Ok(level.len() as u64)
    } else {
        let budget = round_budget(level.len(), graph.max_degree());
        for _ in 0..budget {
            glauber_step(state, graph, Some(level))?;
        }
        Ok(budget)
    }
}

/// Runs `rounds` rounds, visiting level `i mod m` in round `i`. Empty levels
/// contribute a zero-update round.
pub fn run_set_dynamics(
    state: &mut ChainState,
    graph: &Graph,
    partition: &LevelPartition,
    rounds: u64,
    mode: RoundMode,
) -> Result<Vec<RoundStats>> {
    let m = partition.m() as u64;
    let mut stats = Vec::with_capacity(rounds as usize);
    let mut total = 0;
    for round in 0..rounds {
        let j = (round % m) as usize;
        let updates = if partition.levels[j].is_empty() {
            0
        } else {
            set_dynamics_round(state, graph, partition, j, mode)?
        };
        total += updates;
        stats.push(RoundStats { round, level: j, updates, total_updates: total });
    }
    Ok(stats)
}

/// Colors vertices in `order`, each with the lowest palette color unused by
/// already-colored neighbors.
pub fn greedy_coloring(graph: &Graph, order: &[Vertex], palette: &[Color], k: u32) -> Result<Coloring> {
    let n = graph.n();
    if order.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: order.len() });
    }
    let mut sorted = palette.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut colors = vec![0 as Color; n];
    for &v in order {
        let c = sorted
            .iter()
            .copied()
            .find(|&c| graph.neighbors(v).iter().all(|&u| colors[u] != c))
            .ok_or(Error::PaletteExhausted { vertex: v })?;
        colors[v] = c;
    }
    Coloring::new(colors, k)
}

/// The `(d+1)`-coloring obtained greedily in reverse peeling order.
pub fn degeneracy_coloring(graph: &Graph, degen: &DegeneracyData, k: u32) -> Result<Coloring> {
    let order: Vec<Vertex> = degen.order.iter().rev().copied().collect();
    let palette: Vec<Color> = (1..=degen.d as Color + 1).collect();
    greedy_coloring(graph, &order, &palette, k)
}

/// A uniformly random vertex order colored greedily with uniformly random
/// free colors. Needs `k > Δ` to be guaranteed to succeed.
pub fn random_greedy_coloring<R: Rng + ?Sized>(graph: &Graph, k: u32, rng: &mut R) -> Result<Coloring> {
    let n = graph.n();
    let mut order: Vec<Vertex> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng::index(rng, i + 1));
    }
    let mut colors = vec![0 as Color; n];
    let mut free = Vec::with_capacity(k as usize);
    for &v in &order {
        free.clear();
        free.extend((1..=k).filter(|&c| graph.neighbors(v).iter().all(|&u| colors[u] != c)));
        if free.is_empty() {
            return Err(Error::PaletteExhausted { vertex: v });
        }
        colors[v] = free[rng::index(rng, free.len())];
    }
    Coloring::new(colors, k)
}

/// Reverse peeling order colored with uniformly random free colors; succeeds
/// whenever `k > d`.
pub fn random_degeneracy_coloring<R: Rng + ?Sized>(
    graph: &Graph,
    degen: &DegeneracyData,
    k: u32,
    rng: &mut R,
) -> Result<Coloring> {
    let mut colors = vec![0 as Color; graph.n()];
    let mut free = Vec::with_capacity(k as usize);
    for &v in degen.order.iter().rev() {
        free.clear();
        free.extend((1..=k).filter(|&c| graph.neighbors(v).iter().all(|&u| colors[u] != c)));
        if free.is_empty() {
            return Err(Error::PaletteExhausted { vertex: v });
        }
        colors[v] = free[rng::index(rng, free.len())];
    }
    Coloring::new(colors, k)
}

/// Applies `moves` to `start`, checking each one keeps the coloring proper.
pub fn replay(graph: &Graph, start: &Coloring, moves: &[Move]) -> Result<Coloring> {
    require_proper(graph, start)?;
    let mut cur = start.clone();
    for (i, m) in moves.iter().enumerate() {
        if cur.colors[m.vertex] != m.old_color {
            return Err(Error::Invariant(format!("move {i} expects color {} at {}", m.old_color, m.vertex)));
        }
        if m.new_color == 0 || m.new_color > cur.k {
            return Err(Error::ColorOutOfRange { vertex: m.vertex, color: m.new_color, k: cur.k });
        }
        if graph.neighbors(m.vertex).iter().any(|&u| cur.colors[u] == m.new_color) {
            return Err(Error::Invariant(format!("move {i} creates a conflict at {}", m.vertex)));
        }
        cur.colors[m.vertex] = m.new_color;
    }
    Ok(cur)
}

/// Walks `from` to the `(d+1)`-coloring `to` in `n` rounds: round `i`
/// recolors `v_i, ..., v_1` (peeling order) inside one of the banks
/// `{1..d+1}` or `{d+2..2d+2}`, the bank chosen by the parity of `i`
/// relative to `n`; the last round writes `to`. A vertex keeps its color
/// when it is already legal in the round's bank, so no-op recolorings are
/// not emitted.
pub fn canonical_path(graph: &Graph, from: &Coloring, to: &Coloring, degen: &DegeneracyData) -> Result<Vec<Move>> {
    let n = graph.n();
    let d = degen.d as Color;
    let k = from.k;
    if to.k != k {
        return Err(Error::InvalidArgument("colorings use different palettes".into()));
    }
    if k < 2 * (d + 1) {
        return Err(Error::InvalidArgument(format!("canonical path needs k >= 2(d+1) = {}, got {k}", 2 * (d + 1))));
    }
    require_proper(graph, from)?;
    require_proper(graph, to)?;
    if let Some(v) = (0..n).find(|&v| to.colors[v] > d + 1) {
        return Err(Error::InvalidArgument(format!("target uses color {} > d+1 at vertex {v}", to.colors[v])));
    }
    if from == to {
        return Ok(Vec::new());
    }
    let mut cur = from.colors.clone();
    let mut scratch = Scratch::new(k);
    let mut moves = Vec::new();
    for round in 1..=n {
        let bank = if round % 2 == n % 2 { 1..=d + 1 } else { d + 2..=2 * d + 2 };
        for j in (0..round).rev() {
            let v = degen.order[j];
            let c = if round == n {
                let c = to.colors[v];
                if !scratch.is_free(graph, &cur, v, c) {
                    return Err(Error::Invariant(format!("target color of {v} blocked in final round")));
                }
                c
            } else {
                scratch
                    .pick_in_bank(graph, &cur, v, bank.clone(), cur[v])
                    .ok_or_else(|| Error::Invariant(format!("bank exhausted at vertex {v} in round {round}")))?
            };
            if c != cur[v] {
                moves.push(Move { vertex: v, old_color: cur[v], new_color: c });
                cur[v] = c;
            }
        }
    }
    debug_assert_eq!(cur, to.colors);
    Ok(moves)
}

/// `first` followed by `second` reversed: with `first: a -> t` and
/// `second: b -> t` this walks `a -> b`.
pub fn join_through(first: &[Move], second: &[Move]) -> Vec<Move> {
    first.iter().copied().chain(second.iter().rev().map(|m| m.reversed())).collect()
}

/// Number of `(d+1)`-colorings tried as meeting points by
/// [`composed_canonical_path`].
pub const TARGET_CANDIDATES: usize = 64;

/// Up to `limit` proper colorings using only colors `1..=d+1`, in
/// backtracking order over the reverse peeling order. The first one is
/// [`degeneracy_coloring`].
pub fn low_colorings(graph: &Graph, degen: &DegeneracyData, k: u32, limit: usize) -> Result<Vec<Coloring>> {
    let order: Vec<Vertex> = degen.order.iter().rev().copied().collect();
    bank_colorings(graph, &order, 1..=degen.d as Color + 1, limit)
        .into_iter()
        .map(|c| Coloring::new(c, k))
        .collect()
}

/// Proper colorings inside `bank` in backtracking order over `order`, the
/// greedy one first.
fn bank_colorings(
    graph: &Graph,
    order: &[Vertex],
    bank: std::ops::RangeInclusive<Color>,
    limit: usize,
) -> Vec<Vec<Color>> {
    let n = order.len();
    let (low, high) = (*bank.start(), *bank.end());
    let mut colors = vec![0 as Color; graph.n()];
    let mut out = Vec::new();
    let mut depth = 0usize;
    while out.len() < limit {
        if depth == n {
            out.push(colors.clone());
            if n == 0 {
                break;
            }
            depth -= 1;
            continue;
        }
        let v = order[depth];
        let next = (colors[v].max(low - 1) + 1..=high).find(|&c| graph.neighbors(v).iter().all(|&u| colors[u] != c));
        match next {
            Some(c) => {
                colors[v] = c;
                depth += 1;
            }
            None => {
                colors[v] = 0;
                if depth == 0 {
                    break;
                }
                depth -= 1;
            }
        }
    }
    out
}

/// Walk `x -> t -> y` (after [`shorten_path`]) through a meeting coloring
/// `t` from [`low_colorings`]: the first one whose walk has at most
/// `n^2 - n` moves, else the shortest among the first
/// [`TARGET_CANDIDATES`].
pub fn composed_canonical_path(
    graph: &Graph,
    x: &Coloring,
    y: &Coloring,
    degen: &DegeneracyData,
) -> Result<Vec<Move>> {
    composed_canonical_path_with(graph, x, y, degen, TARGET_CANDIDATES)
}

/// [`composed_canonical_path`] with an explicit number of meeting points.
pub fn composed_canonical_path_with(
    graph: &Graph,
    x: &Coloring,
    y: &Coloring,
    degen: &DegeneracyData,
    candidates: usize,
) -> Result<Vec<Move>> {
    let n = graph.n();
    let bound = n * n.saturating_sub(1);
    let mut best: Option<Vec<Move>> = None;
    for target in low_colorings(graph, degen, x.k, candidates.max(1))? {
        let a = canonical_path(graph, x, &target, degen)?;
        let b = canonical_path(graph, y, &target, degen)?;
        let walk = shorten_path(graph, &join_through(&a, &b));
        if walk.len() <= bound {
            return Ok(walk);
        }
        if best.as_ref().is_none_or(|cur| walk.len() < cur.len()) {
            best = Some(walk);
        }
    }
    best.ok_or_else(|| Error::Invariant("no meeting coloring".into()))
}

/// Removes redundant recolorings from a valid walk.
///
/// Two recolorings of the same vertex `v` merge into one when no neighbor
/// of `v` moves onto v's earlier color in between; a merged pair that
/// returns `v` to its starting color disappears. The result is a valid
/// walk between the same endpoints and is never longer.
pub fn shorten_path(graph: &Graph, moves: &[Move]) -> Vec<Move> {
    let mut path: Vec<Option<Move>> = moves.iter().copied().map(Some).collect();
    loop {
        let mut changed = false;
        for a in 0..path.len() {
            let Some(first) = path[a] else { continue };
            let v = first.vertex;
            let mut mergeable = true;
            let mut b = a + 1;
            while b < path.len() {
                match path[b] {
                    Some(m) if m.vertex == v => break,
                    Some(m) if m.new_color == first.old_color && graph.has_edge(m.vertex, v) => {
                        mergeable = false;
                        break;
                    }
                    _ => b += 1,
                }
            }
            if !mergeable || b == path.len() {
                continue;
            }
            let second = path[b].expect("found above");
            path[a] = None;
            path[b] = (second.new_color != first.old_color).then_some(Move {
                vertex: v,
                old_color: first.old_color,
                new_color: second.new_color,
            });
            changed = true;
        }
        if !changed {
            break;
        }
        path.retain(Option::is_some);
    }
    path.into_iter().flatten().collect()
}

/// Result of [`layered_path`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayeredPath {
    pub moves: Vec<Move>,
    pub sets: Vec<Vec<Vertex>>,
}

impl LayeredPath {
    pub fn rounds(&self) -> usize {
        self.sets.len()
    }
}

/// Partition `V = S_1 ∪ ... ∪ S_ℓ` where each `v ∈ S_i` has at most
/// `⌊k/2⌋ - 1` neighbors in `S_i ∪ ... ∪ S_ℓ`. `S_i` takes every remaining
/// vertex meeting the bound; the last set is made independent by splitting
/// when necessary.
pub fn layer_sets(graph: &Graph, k: u32) -> Result<Vec<Vec<Vertex>>> {
    let n = graph.n();
    if k < 2 {
        return Err(Error::InvalidArgument("layered path needs k >= 2".into()));
    }
    let cap = (k / 2) as usize - 1;
    let mut alive = vec![true; n];
    let mut deg: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    let mut remaining = n;
    let mut sets: Vec<Vec<Vertex>> = Vec::new();
    while remaining > 0 {
        let set: Vec<Vertex> = (0..n).filter(|&v| alive[v] && deg[v] <= cap).collect();
        if set.is_empty() {
            return Err(Error::LayerStalled { remaining, k });
        }
        for &v in &set {
            alive[v] = false;
        }
        for &v in &set {
            for &u in graph.neighbors(v) {
                if alive[u] {
                    deg[u] -= 1;
                }
            }
        }
        remaining -= set.len();
        sets.push(set);
    }
    if let Some(last) = sets.pop() {
        if graph.is_independent(&last) {
            sets.push(last);
        } else {
            let mut picked = vec![false; n];
            let mut top = Vec::new();
            for &v in &last {
                if graph.neighbors(v).iter().all(|&u| !picked[u]) {
                    picked[v] = true;
                    top.push(v);
                }
            }
            sets.push(last.into_iter().filter(|&v| !picked[v]).collect());
            sets.push(top);
        }
    }
    Ok(sets)
}

fn layered_half(
    graph: &Graph,
    from: &Coloring,
    sets: &[Vec<Vertex>],
    target: &[Color],
    banks: &[std::ops::RangeInclusive<Color>; 2],
) -> Result<Vec<Move>> {
    let ell = sets.len();
    let mut cur = from.colors.clone();
    let mut scratch = Scratch::new(from.k);
    let mut moves = Vec::new();
    for round in 1..=ell {
        let bank = banks[(round + 1) % 2].clone();
        for set in sets[..round].iter().rev() {
            for &v in set {
                let c = if round == ell {
                    if !scratch.is_free(graph, &cur, v, target[v]) {
                        return Err(Error::Invariant(format!("target color of {v} blocked in final round")));
                    }
                    target[v]
                } else {
                    scratch
                        .pick_in_bank(graph, &cur, v, bank.clone(), cur[v])
                        .ok_or_else(|| Error::Invariant(format!("bank exhausted at {v} in round {round}")))?
                };
                if c != cur[v] {
                    moves.push(Move { vertex: v, old_color: cur[v], new_color: c });
                    cur[v] = c;
                }
            }
        }
    }
    debug_assert_eq!(cur, target);
    Ok(moves)
}

/// Walk from `from` to `to` through half-palette rounds over the layer sets:
/// round `r` recolors `S_r, ..., S_1` with colors `1..=⌊k/2⌋` or
/// `⌊k/2⌋+1..=k` by parity. Both endpoints meet at a coloring inside the
/// last round's bank: the first of [`TARGET_CANDIDATES`] such colorings
/// (greedy over `S_ℓ, ..., S_1` first) whose shortened walk fits
/// `n ⌈log_{(k-1)/(2d)} n⌉`, else the shortest.
pub fn layered_path(graph: &Graph, from: &Coloring, to: &Coloring, k: u32) -> Result<LayeredPath> {
    if from.k != k || to.k != k {
        return Err(Error::InvalidArgument("colorings must use palette size k".into()));
    }
    require_proper(graph, from)?;
    require_proper(graph, to)?;
    let d = crate::graph::degeneracy(graph).d;
    if k < 2 * d as u32 + 2 {
        return Err(Error::InvalidArgument(format!("layered path needs k >= 2d+2 = {}, got {k}", 2 * d + 2)));
    }
    let sets = layer_sets(graph, k)?;
    if from == to {
        return Ok(LayeredPath { moves: Vec::new(), sets });
    }
    let half = k / 2;
    let banks = [1..=half, half + 1..=k];
    let order: Vec<Vertex> = sets.iter().rev().flatten().copied().collect();
    let bound = layered_round_bound(graph.n(), k, d).map_or(usize::MAX, |r| r as usize * graph.n());
    let mut best: Option<Vec<Move>> = None;
    for target in bank_colorings(graph, &order, banks[(sets.len() + 1) % 2].clone(), TARGET_CANDIDATES) {
        let a = layered_half(graph, from, &sets, &target, &banks)?;
        let b = layered_half(graph, to, &sets, &target, &banks)?;
        let walk = shorten_path(graph, &join_through(&a, &b));
        let fits = walk.len() <= bound;
        if best.as_ref().is_none_or(|cur| walk.len() < cur.len()) {
            best = Some(walk);
        }
        if fits {
            break;
        }
    }
    let moves = best.ok_or(Error::PaletteExhausted { vertex: order[0] })?;
    Ok(LayeredPath { moves, sets })
}

/// `⌈log_{(k-1)/(2d)} n⌉`, the round bound of the layered walk.
pub fn layered_round_bound(n: usize, k: u32, d: usize) -> Option<u64> {
    if d == 0 || n <= 1 {
        return Some(0);
    }
    let base = (k as f64 - 1.0) / (2.0 * d as f64);
    if base <= 1.0 {
        return None;
    }
    Some(((n as f64).ln() / base.ln() - 1e-12).ceil() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::degeneracy;

    fn col(c: &[u32], k: u32) -> Coloring {
        Coloring::new(c.to_vec(), k).unwrap()
    }

    #[test]
    fn available_examples() {
        let k3 = Graph::complete(3).unwrap();
        assert_eq!(available_colors(&k3, &col(&[1, 2, 3], 3), 1), vec![2]);
        let iso = Graph::from_edges(1, []).unwrap();
        assert_eq!(available_colors(&iso, &col(&[4], 5), 0), vec![1, 2, 3, 4, 5]);
        let p3 = Graph::path(3).unwrap();
        assert_eq!(available_colors(&p3, &col(&[1, 2, 1], 3), 1), vec![2, 3]);
    }

    #[test]
    fn is_proper_examples() {
        let k3 = Graph::complete(3).unwrap();
        assert!(is_proper(&k3, &col(&[1, 2, 3], 3)).unwrap());
        assert!(!is_proper(&k3, &col(&[1, 1, 2], 3)).unwrap());
        assert!(Coloring::new(vec![0, 1, 2], 3).is_err());
        assert!(Coloring::new(vec![4, 1, 2], 3).is_err());
        assert!(matches!(is_proper(&k3, &col(&[1, 2], 3)), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn frozen_triangle_only_counts_steps() {
        let k3 = Graph::complete(3).unwrap();
        let start = col(&[3, 1, 2], 3);
        let mut st = ChainState::seeded(&k3, start.clone(), 4).unwrap();
        for _ in 0..100 {
            glauber_step(&mut st, &k3, None).unwrap();
        }
        assert_eq!(st.coloring(), &start);
        assert_eq!(st.steps, 100);
    }

    #[test]
    fn single_vertex_step_is_fair() {
        let g = Graph::from_edges(1, []).unwrap();
        let trials = 100_000;
        let mut ones = 0u32;
        for seed in 0..trials {
            let mut st = ChainState::seeded(&g, col(&[1], 2), seed).unwrap();
            glauber_step(&mut st, &g, None).unwrap();
            ones += (st.coloring().get(0) == 1) as u32;
        }
        let p = ones as f64 / trials as f64;
        let sigma = (0.25 / trials as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * sigma, "{p}");
    }

    #[test]
    fn empty_restriction_is_rejected() {
        let g = Graph::path(2).unwrap();
        let mut st = ChainState::seeded(&g, col(&[1, 2], 3), 0).unwrap();
        assert!(glauber_step(&mut st, &g, Some(&[])).is_err());
        assert!(ChainState::seeded(&g, col(&[1, 1], 3), 0).is_err());
    }

    #[test]
    fn round_budget_uses_natural_log_ceiling() {
        assert_eq!(round_budget(1, 16), 3);
        assert_eq!(round_budget(1, 2), 1);
        assert_eq!(round_budget(10, 2), 7);
        assert_eq!(round_budget(5, 1), 1);
    }

    #[test]
    fn sweep_touches_each_vertex_once() {
        let star = Graph::star(16).unwrap();
        let levels = vec![(1..17).collect::<Vec<_>>(), vec![0]];
        let part = LevelPartition::from_levels(17, 0.5, levels, vec![1.0; 17]).unwrap();
        let mut start = vec![2; 17];
        start[0] = 1;
        let mut st = ChainState::seeded(&star, col(&start, 8), 3).unwrap();
        let updates = set_dynamics_round(&mut st, &star, &part, 0, RoundMode::Sweep).unwrap();
        assert_eq!(updates, 16);
        assert_eq!(st.steps, 16);
        let updates = set_dynamics_round(&mut st, &star, &part, 1, RoundMode::Random).unwrap();
        assert_eq!(updates, 3);
        assert!(is_proper(&star, st.coloring()).unwrap());
    }

    #[test]
    fn sweep_rejects_dependent_level() {
        let p3 = Graph::path(3).unwrap();
        let part = LevelPartition::single(3, vec![1.0; 3]);
        let mut st = ChainState::seeded(&p3, col(&[1, 2, 1], 3), 0).unwrap();
        assert!(matches!(
            set_dynamics_round(&mut st, &p3, &part, 0, RoundMode::Sweep),
            Err(Error::NotIndependent { level: 0 })
        ));
        let n = set_dynamics_round(&mut st, &p3, &part, 0, RoundMode::SweepIfIndependent).unwrap();
        assert_eq!(n, round_budget(3, 2));
    }

    #[test]
    fn zero_rounds_is_identity() {
        let p3 = Graph::path(3).unwrap();
        let part = LevelPartition::single(3, vec![1.0; 3]);
        let mut st = ChainState::seeded(&p3, col(&[1, 2, 1], 3), 0).unwrap();
        let stats = run_set_dynamics(&mut st, &p3, &part, 0, RoundMode::Random).unwrap();
        assert!(stats.is_empty());
        assert_eq!(st.coloring(), &col(&[1, 2, 1], 3));
        assert_eq!(st.steps, 0);
    }

    #[test]
    fn single_level_matches_plain_glauber() {
        let g = Graph::grid(3, 3).unwrap();
        let start = degeneracy_coloring(&g, &degeneracy(&g), 5).unwrap();
        let part = LevelPartition::single(9, vec![1.0; 9]);
        let mut a = ChainState::seeded(&g, start.clone(), 77).unwrap();
        let mut b = ChainState::seeded(&g, start, 77).unwrap();
        let stats = run_set_dynamics(&mut a, &g, &part, 4, RoundMode::Random).unwrap();
        let total = stats.last().unwrap().total_updates;
        for _ in 0..total {
            glauber_step(&mut b, &g, None).unwrap();
        }
        assert_eq!(a.coloring(), b.coloring());
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn greedy_examples() {
        let tree = Graph::complete_tree(2, 3).unwrap();
        let dd = degeneracy(&tree);
        let c = degeneracy_coloring(&tree, &dd, 2).unwrap();
        assert!(is_proper(&tree, &c).unwrap());

        let k4 = Graph::complete(4).unwrap();
        let c = greedy_coloring(&k4, &[0, 1, 2, 3], &[1, 2, 3, 4], 4).unwrap();
        let mut used = c.colors().to_vec();
        used.sort();
        assert_eq!(used, vec![1, 2, 3, 4]);
        assert_eq!(
            greedy_coloring(&k4, &[0, 1, 2, 3], &[1, 2, 3], 4),
            Err(Error::PaletteExhausted { vertex: 3 })
        );

        let tri = Graph::planar_triangulation(50, 7).unwrap();
        let c = degeneracy_coloring(&tri, &degeneracy(&tri), 6).unwrap();
        assert!(is_proper(&tri, &c).unwrap());
    }

    #[test]
    fn canonical_path_trivial_and_errors() {
        let k3 = Graph::complete(3).unwrap();
        let dd = degeneracy(&k3);
        let t = degeneracy_coloring(&k3, &dd, 6).unwrap();
        assert!(canonical_path(&k3, &t, &t, &dd).unwrap().is_empty());
        let t5 = degeneracy_coloring(&k3, &dd, 5).unwrap();
        assert!(canonical_path(&k3, &t5, &t5, &dd).is_err());
        let bad_target = col(&[4, 1, 2], 6);
        assert!(canonical_path(&k3, &t, &bad_target, &dd).is_err());
    }

    #[test]
    fn canonical_path_on_grid_is_valid() {
        let g = Graph::grid(3, 3).unwrap();
        let dd = degeneracy(&g);
        let k = 2 * (dd.d as u32 + 1);
        let mut rng = rng::seeded(5);
        let x = random_greedy_coloring(&g, 6, &mut rng).unwrap();
        let x = Coloring::new(x.colors().to_vec(), k).unwrap();
        let t = degeneracy_coloring(&g, &dd, k).unwrap();
        let path = canonical_path(&g, &x, &t, &dd).unwrap();
        assert!(path.len() <= 9 * 10 / 2);
        assert_eq!(replay(&g, &x, &path).unwrap(), t);
    }

    #[test]
    fn shorten_path_preserves_endpoints() {
        let g = Graph::path(4).unwrap();
        let dd = degeneracy(&g);
        let x = col(&[1, 2, 3, 4], 4);
        let y = col(&[4, 3, 2, 1], 4);
        let raw = join_through(
            &canonical_path(&g, &x, &degeneracy_coloring(&g, &dd, 4).unwrap(), &dd).unwrap(),
            &canonical_path(&g, &y, &degeneracy_coloring(&g, &dd, 4).unwrap(), &dd).unwrap(),
        );
        assert_eq!(replay(&g, &x, &raw).unwrap(), y);
        let short = shorten_path(&g, &raw);
        assert!(short.len() <= raw.len());
        assert_eq!(replay(&g, &x, &short).unwrap(), y);
    }

    #[test]
    fn low_colorings_start_with_greedy() {
        let g = Graph::cycle(4).unwrap();
        let dd = degeneracy(&g);
        let all = low_colorings(&g, &dd, 6, 1000).unwrap();
        assert_eq!(all[0], degeneracy_coloring(&g, &dd, 6).unwrap());
        assert_eq!(all.len(), 18);
        for c in &all {
            assert!(is_proper(&g, c).unwrap());
            assert!(c.colors().iter().all(|&x| x <= 3));
        }
        assert_eq!(low_colorings(&g, &dd, 6, 5).unwrap().len(), 5);
    }

    #[test]
    fn composed_path_is_within_quadratic_bound() {
        let g = Graph::path(3).unwrap();
        let dd = degeneracy(&g);
        let model = crate::oracle::enumerate_colorings(&g, 4, 1000).unwrap();
        for i in 0..model.len() {
            for j in 0..model.len() {
                let (x, y) = (model.coloring(i), model.coloring(j));
                let walk = composed_canonical_path(&g, &x, &y, &dd).unwrap();
                assert!(walk.len() <= 6);
                assert_eq!(replay(&g, &x, &walk).unwrap(), y);
            }
        }
    }

    #[test]
    fn layered_path_on_tree() {
        let tree = Graph::complete_tree(2, 4).unwrap();
        assert_eq!(tree.n(), 31);
        let mut rng = rng::seeded(8);
        let x = random_greedy_coloring(&tree, 4, &mut rng).unwrap();
        let y = random_greedy_coloring(&tree, 4, &mut rng).unwrap();
        let lp = layered_path(&tree, &x, &y, 4).unwrap();
        let bound = layered_round_bound(31, 4, 1).unwrap();
        assert_eq!(bound, 9);
        assert!(lp.rounds() as u64 <= bound);
        assert!(lp.moves.len() <= 279, "{}", lp.moves.len());
        assert_eq!(replay(&tree, &x, &lp.moves).unwrap(), y);
        assert!(layered_path(&tree, &x, &x, 4).unwrap().moves.is_empty());
    }

    #[test]
    fn layer_sets_respect_neighbor_cap() {
        let g = Graph::grid(4, 4).unwrap();
        let sets = layer_sets(&g, 6).unwrap();
        let mut rank = [0; 16];
        for (i, s) in sets.iter().enumerate() {
            for &v in s {
                rank[v] = i;
            }
        }
        for v in 0..16 {
            let up = g.neighbors(v).iter().filter(|&&u| rank[u] >= rank[v]).count();
            assert!(up <= 2);
        }
        assert!(g.is_independent(sets.last().unwrap()));
        let k4 = Graph::complete(4).unwrap();
        assert!(matches!(layer_sets(&k4, 4), Err(Error::LayerStalled { .. })));
    }

    #[test]
    fn coloring_json_round_trip() {
        let c = col(&[1, 3, 2], 3);
        assert_eq!(c.to_json(), "[1,3,2]");
        assert_eq!(Coloring::from_json("[1,3,2]", 3).unwrap(), c);
        assert!(Coloring::from_json("[1,4]", 3).is_err());
    }
}
