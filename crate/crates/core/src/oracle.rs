//! Brute-force ground truth for tiny instances.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::dynamics::{Color, Coloring, Scratch};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::rng;

pub const DEFAULT_BUDGET: usize = 1_000_000;
/// Largest state space handled by dense matrix powering.
pub const DENSE_LIMIT: usize = 3_000;
/// Mixing times are resolved up to `2^MAX_DOUBLINGS` steps.
pub const MAX_DOUBLINGS: u32 = 20;

/// All proper colorings of a graph, in lexicographic order, with the
/// Glauber transition law once built.
#[derive(Debug, Clone)]
pub struct ExactModel {
    graph: Graph,
    k: u32,
    states: Vec<Color>,
    count: usize,
    transitions: Option<Vec<Vec<(usize, f64)>>>,
}

/// Backtracking enumeration in vertex order, colors ascending.
pub fn enumerate_colorings(graph: &Graph, k: u32, budget: usize) -> Result<ExactModel> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let n = graph.n();
    let mut states = Vec::new();
    let mut count = 0usize;
    if n == 0 {
        return Ok(ExactModel { graph: graph.clone(), k, states, count: 1, transitions: None });
    }
    let mut cur = vec![0 as Color; n];
    let mut v = 0usize;
    loop {
        // advance cur[v] to its next legal color
        let mut c = cur[v] + 1;
        while c <= k && graph.neighbors(v).iter().any(|&u| u < v && cur[u] == c) {
            c += 1;
        }
        if c <= k {
            cur[v] = c;
            if v + 1 == n {
                if count == budget {
                    return Err(Error::BudgetExceeded { budget, partial: count });
                }
                states.extend_from_slice(&cur);
                count += 1;
            } else {
                v += 1;
                cur[v] = 0;
            }
        } else if v == 0 {
            break;
        } else {
            cur[v] = 0;
            v -= 1;
        }
    }
    Ok(ExactModel { graph: graph.clone(), k, states, count, transitions: None })
}

/// `max` over rows of `½ Σ_j |R_ij − 1/N|`.
fn worst_tv(matrix: &[f64], size: usize) -> f64 {
    let u = 1.0 / size as f64;
    matrix
        .par_chunks(size)
        .map(|row| 0.5 * row.iter().map(|&p| (p - u).abs()).sum::<f64>())
        .reduce(|| 0.0, f64::max)
}

fn matmul(a: &[f64], b: &[f64], size: usize) -> Vec<f64> {
    let mut out = vec![0.0; size * size];
    out.par_chunks_mut(size).enumerate().for_each(|(i, row)| {
        let ai = &a[i * size..(i + 1) * size];
        for (l, &x) in ai.iter().enumerate() {
            if x != 0.0 {
                let bl = &b[l * size..(l + 1) * size];
                for (o, &y) in row.iter_mut().zip(bl) {
                    *o += x * y;
                }
            }
        }
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingTime {
    Steps(u64),
    /// Not below threshold after this many steps.
    AtLeast(u64),
    Disconnected,
}

impl MixingTime {
    pub fn steps(self) -> Option<u64> {
        match self {
            MixingTime::Steps(t) => Some(t),
            _ => None,
        }
    }

    pub fn to_json(self) -> Value {
        match self {
            MixingTime::Steps(t) => json!(t),
            MixingTime::AtLeast(t) => json!({ "at_least": t }),
            MixingTime::Disconnected => json!("disconnected"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diameter {
    Value(u64),
    Disconnected,
}

impl Diameter {
    pub fn value(self) -> Option<u64> {
        match self {
            Diameter::Value(d) => Some(d),
            Diameter::Disconnected => None,
        }
    }

    pub fn to_json(self) -> Value {
        match self {
            Diameter::Value(d) => json!(d),
            Diameter::Disconnected => json!("disconnected"),
        }
    }
}

impl ExactModel {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn state(&self, i: usize) -> &[Color] {
        let n = self.graph.n();
        &self.states[i * n..(i + 1) * n]
    }

    pub fn coloring(&self, i: usize) -> Coloring {
        Coloring::new(self.state(i).to_vec(), self.k).expect("enumerated colors lie in the palette")
    }

    /// Position of a coloring in the enumeration.
    pub fn index_of(&self, colors: &[Color]) -> Option<usize> {
        let n = self.graph.n();
        if colors.len() != n {
            return None;
        }
        if n == 0 {
            return Some(0);
        }
        let (mut lo, mut hi) = (0, self.count);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            match self.state(mid).cmp(colors) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// A uniformly random proper coloring.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Coloring {
        self.coloring(rng::index(rng, self.count))
    }

    /// Normalized histogram of the given colorings over the state space.
    pub fn histogram<'a, I>(&self, samples: I) -> Result<Vec<f64>>
    where
        I: IntoIterator<Item = &'a [Color]>,
    {
        let mut counts = vec![0u64; self.count];
        let mut total = 0u64;
        for s in samples {
            let i = self.index_of(s).ok_or(Error::ImproperColoring)?;
            counts[i] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::InvalidArgument("no samples".into()));
        }
        Ok(counts.into_iter().map(|c| c as f64 / total as f64).collect())
    }

    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.count as f64; self.count]
    }

    fn single_site_neighbors(&self, s: usize, scratch: &mut Scratch, out: &mut Vec<(Vertex, Color, usize)>) {
        out.clear();
        let mut cur = self.state(s).to_vec();
        for v in 0..self.graph.n() {
            let own = cur[v];
            let avail = scratch.available(&self.graph, &cur, v).to_vec();
            for c in avail {
                cur[v] = c;
                let t = self.index_of(&cur).expect("single-site recoloring stays proper");
                out.push((v, c, t));
            }
            cur[v] = own;
        }
    }

    /// `P[s, s'] = (1/n) Σ_v [s' = s with v recolored] / a_s(v)`, stored as
    /// sorted sparse rows.
    pub fn build_transition_matrix(&mut self) {
        let n = self.graph.n();
        if n == 0 {
            self.transitions = Some(vec![vec![(0, 1.0)]]);
            return;
        }
        let rows: Vec<Vec<(usize, f64)>> = (0..self.count)
            .into_par_iter()
            .map_init(
                || (Scratch::new(self.k), Vec::new()),
                |(scratch, buf), s| {
                    self.single_site_neighbors(s, scratch, buf);
                    let mut row: Vec<(usize, f64)> = Vec::with_capacity(buf.len());
                    let mut start = 0;
                    while start < buf.len() {
                        let v = buf[start].0;
                        let end = start + buf[start..].iter().take_while(|e| e.0 == v).count();
                        let p = 1.0 / (n as f64 * (end - start) as f64);
                        row.extend(buf[start..end].iter().map(|&(_, _, t)| (t, p)));
                        start = end;
                    }
                    row.sort_by_key(|e| e.0);
                    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
                    for (t, p) in row {
                        match merged.last_mut() {
                            Some(last) if last.0 == t => last.1 += p,
                            _ => merged.push((t, p)),
                        }
                    }
                    merged
                },
            )
            .collect();
        self.transitions = Some(rows);
    }

    pub fn transitions(&self) -> Option<&[Vec<(usize, f64)>]> {
        self.transitions.as_deref()
    }

    fn rows(&self) -> Result<&[Vec<(usize, f64)>]> {
        self.transitions().ok_or_else(|| Error::InvalidArgument("transition matrix not built".into()))
    }

    pub fn probability(&self, from: usize, to: usize) -> Result<f64> {
        let row = &self.rows()?[from];
        Ok(row.binary_search_by_key(&to, |e| e.0).map(|i| row[i].1).unwrap_or(0.0))
    }

    pub fn dense_transition(&self) -> Result<Vec<f64>> {
        let rows = self.rows()?;
        let size = self.count;
        let mut dense = vec![0.0; size * size];
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                dense[i * size + j] = p;
            }
        }
        Ok(dense)
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_error(&self) -> Result<f64> {
        Ok(self.rows()?.iter().map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max))
    }

    /// Largest `|P[s,t] − P[t,s]|`.
    pub fn symmetry_error(&self) -> Result<f64> {
        let rows = self.rows()?;
        let mut worst: f64 = 0.0;
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                worst = worst.max((p - self.probability(j, i)?).abs());
            }
        }
        Ok(worst)
    }

    /// `‖uᵀP − uᵀ‖∞` for the uniform row vector `u`.
    pub fn stationary_residual(&self) -> Result<f64> {
        let rows = self.rows()?;
        let u = 1.0 / self.count as f64;
        let mut image = vec![0.0; self.count];
        for row in rows {
            for &(j, p) in row {
                image[j] += u * p;
            }
        }
        Ok(image.iter().map(|&x| (x - u).abs()).fold(0.0, f64::max))
    }

    /// Compressed adjacency of the single-site move graph (self-loops dropped).
    fn move_graph(&self) -> (Vec<usize>, Vec<usize>) {
        let lists: Vec<Vec<usize>> = (0..self.count)
            .into_par_iter()
            .map_init(
                || (Scratch::new(self.k), Vec::new()),
                |(scratch, buf), s| {
                    self.single_site_neighbors(s, scratch, buf);
                    buf.iter().map(|e| e.2).filter(|&t| t != s).collect()
                },
            )
            .collect();
        let mut offsets = Vec::with_capacity(self.count + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        for l in lists {
            targets.extend(l);
            offsets.push(targets.len());
        }
        (offsets, targets)
    }

    fn bfs(offsets: &[usize], targets: &[usize], source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) -> (usize, u32) {
        dist.iter_mut().for_each(|d| *d = u32::MAX);
        dist[source] = 0;
        queue.clear();
        queue.push_back(source);
        let mut seen = 1;
        let mut far = 0;
        while let Some(s) = queue.pop_front() {
            for &t in &targets[offsets[s]..offsets[s + 1]] {
                if dist[t] == u32::MAX {
                    dist[t] = dist[s] + 1;
                    far = far.max(dist[t]);
                    seen += 1;
                    queue.push_back(t);
                }
            }
        }
        (seen, far)
    }

    /// True iff the Glauber move graph on Ω is connected.
    pub fn is_connected(&self) -> bool {
        if self.count <= 1 {
            return true;
        }
        let (offsets, targets) = self.move_graph();
        let mut dist = vec![0; self.count];
        Self::bfs(&offsets, &targets, 0, &mut dist, &mut VecDeque::new()).0 == self.count
    }

    /// Single-site distance between two states, if connected.
    pub fn distance(&self, from: usize, to: usize) -> Option<u64> {
        let (offsets, targets) = self.move_graph();
        let mut dist = vec![0; self.count];
        Self::bfs(&offsets, &targets, from, &mut dist, &mut VecDeque::new());
        (dist[to] != u32::MAX).then_some(dist[to] as u64)
    }

    /// Maximum eccentricity over the move graph.
    pub fn diameter(&self) -> Diameter {
        if self.count <= 1 {
            return Diameter::Value(0);
        }
        let (offsets, targets) = self.move_graph();
        let result = (0..self.count)
            .into_par_iter()
            .map_init(
                || (vec![0u32; self.count], VecDeque::new()),
                |(dist, queue), s| {
                    let (seen, far) = Self::bfs(&offsets, &targets, s, dist, queue);
                    (seen == self.count).then_some(far as u64)
                },
            )
            .try_reduce(|| 0, |a, b| Some(a.max(b)));
        match result {
            Some(d) => Diameter::Value(d),
            None => Diameter::Disconnected,
        }
    }

    /// First `t` with `max_s TV(Pᵗ(s,·), uniform) ≤ threshold`.
    pub fn mixing_time(&self, threshold: f64) -> Result<MixingTime> {
        self.rows()?;
        let size = self.count;
        if worst_tv_identity(size) <= threshold {
            return Ok(MixingTime::Steps(0));
        }
        if !self.is_connected() {
            return Ok(MixingTime::Disconnected);
        }
        if size > DENSE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "dense mixing-time computation limited to {DENSE_LIMIT} states, got {size}"
            )));
        }
        let mut powers = vec![self.dense_transition()?];
        loop {
            let last = powers.last().expect("nonempty");
            if worst_tv(last, size) <= threshold {
                break;
            }
            if powers.len() as u32 > MAX_DOUBLINGS {
                return Ok(MixingTime::AtLeast(1 << MAX_DOUBLINGS));
            }
            let next = matmul(last, last, size);
            powers.push(next);
        }
        // largest t with d(t) > threshold, by binary lifting
        let mut acc: Option<Vec<f64>> = None;
        let mut t = 0u64;
        for j in (0..powers.len() - 1).rev() {
            let candidate = match &acc {
                None => powers[j].clone(),
                Some(a) => matmul(a, &powers[j], size),
            };
            if worst_tv(&candidate, size) > threshold {
                acc = Some(candidate);
                t += 1 << j;
            }
        }
        Ok(MixingTime::Steps(t + 1))
    }

    pub fn report(&self) -> Result<OracleReport> {
        let stationary_ok = self.stationary_residual()? <= 1e-12 && self.row_sum_error()? <= 1e-12;
        let connected = self.is_connected();
        let mixing_time = if self.count <= DENSE_LIMIT { Some(self.mixing_time(0.25)?) } else { None };
        Ok(OracleReport { omega_size: self.count, connected, diameter: self.diameter(), mixing_time, stationary_ok })
    }
}

fn worst_tv_identity(size: usize) -> f64 {
    1.0 - 1.0 / size as f64
}

/// `½ Σ |p − q|` after checking both distributions are normalized.
pub fn exact_tv(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { expected: p.len(), got: q.len() });
    }
    for dist in [p, q] {
        let sum: f64 = dist.iter().sum();
        if dist.iter().any(|&x| x < 0.0 || !x.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { sum });
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub omega_size: usize,
    pub connected: bool,
    pub diameter: Diameter,
    pub mixing_time: Option<MixingTime>,
    pub stationary_ok: bool,
}

impl OracleReport {
    pub fn to_json(&self) -> Value {
        json!({
            "omega_size": self.omega_size,
            "connected": self.connected,
            "diameter": self.diameter.to_json(),
            "mixing_time": self.mixing_time.map(MixingTime::to_json).unwrap_or(Value::Null),
            "stationary_ok": self.stationary_ok,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(g: &Graph, k: u32) -> ExactModel {
        let mut m = enumerate_colorings(g, k, DEFAULT_BUDGET).unwrap();
        m.build_transition_matrix();
        m
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_colorings(&Graph::complete(3).unwrap(), 3, 100).unwrap().len(), 6);
        assert_eq!(enumerate_colorings(&Graph::path(3).unwrap(), 3, 100).unwrap().len(), 12);
        for (n, k) in [(4usize, 3u32), (5, 3), (6, 4), (5, 5)] {
            let c = enumerate_colorings(&Graph::cycle(n).unwrap(), k, DEFAULT_BUDGET).unwrap().len();
            let expected = (k as i64 - 1).pow(n as u32) + if n % 2 == 0 { k as i64 - 1 } else { 1 - k as i64 };
            assert_eq!(c as i64, expected);
        }
        let grid = enumerate_colorings(&Graph::grid(3, 2).unwrap(), 4, DEFAULT_BUDGET).unwrap();
        assert_eq!(grid.len(), 588);
        assert!(matches!(
            enumerate_colorings(&Graph::path(3).unwrap(), 3, 5),
            Err(Error::BudgetExceeded { budget: 5, partial: 5 })
        ));
    }

    #[test]
    fn states_are_sorted_and_proper() {
        let g = Graph::cycle(5).unwrap();
        let m = enumerate_colorings(&g, 3, 1000).unwrap();
        for i in 0..m.len() {
            assert!(crate::dynamics::is_proper(&g, &m.coloring(i)).unwrap());
            if i > 0 {
                assert!(m.state(i - 1) < m.state(i));
            }
            assert_eq!(m.index_of(m.state(i)), Some(i));
        }
        assert_eq!(m.index_of(&[1, 1, 2, 3, 2]), None);
    }

    #[test]
    fn single_vertex_chain() {
        let m = model(&Graph::from_edges(1, []).unwrap(), 2);
        assert_eq!(m.dense_transition().unwrap(), vec![0.5; 4]);
        assert_eq!(m.mixing_time(0.25).unwrap(), MixingTime::Steps(1));
        assert_eq!(m.diameter(), Diameter::Value(1));
    }

    #[test]
    fn frozen_triangle() {
        let m = model(&Graph::complete(3).unwrap(), 3);
        let dense = m.dense_transition().unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(dense[i * 6 + j], if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(m.mixing_time(0.25).unwrap(), MixingTime::Disconnected);
        assert_eq!(m.diameter(), Diameter::Disconnected);
        assert!(!m.is_connected());
    }

    #[test]
    fn path_chain_is_symmetric_and_mixes() {
        let m = model(&Graph::path(3).unwrap(), 3);
        assert_eq!(m.len(), 12);
        assert!(m.row_sum_error().unwrap() <= 1e-12);
        assert!(m.symmetry_error().unwrap() <= 1e-12);
        assert!(m.stationary_residual().unwrap() <= 1e-12);
        let t = m.mixing_time(0.25).unwrap().steps().unwrap();
        assert!(t >= 1);
        assert_eq!(m.mixing_time(0.25).unwrap(), MixingTime::Steps(t));

        // the mixing time is the first crossing of the threshold
        let p = m.dense_transition().unwrap();
        let mut pow = p.clone();
        for _ in 1..t - 1 {
            pow = matmul(&pow, &p, 12);
        }
        if t > 1 {
            assert!(worst_tv(&pow, 12) > 0.25);
        }
        pow = if t > 1 { matmul(&pow, &p, 12) } else { pow };
        assert!(worst_tv(&pow, 12) <= 0.25);
    }

    #[test]
    fn triangle_diameter_with_six_colors() {
        let m = enumerate_colorings(&Graph::complete(3).unwrap(), 6, DEFAULT_BUDGET).unwrap();
        let d = m.diameter().value().unwrap();
        assert!(d <= 6);
        assert!(d >= 3);
    }

    #[test]
    fn tv_examples() {
        let p = vec![0.25; 4];
        assert_eq!(exact_tv(&p, &p).unwrap(), 0.0);
        let u = vec![1.0 / 6.0; 6];
        let mut point = vec![0.0; 6];
        point[2] = 1.0;
        assert!((exact_tv(&u, &point).unwrap() - 5.0 / 6.0).abs() < 1e-12);
        assert!(matches!(exact_tv(&[0.5, 0.6], &[0.5, 0.5]), Err(Error::NotNormalized { .. })));
        assert!(exact_tv(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn report_json_shape() {
        let m = model(&Graph::path(3).unwrap(), 3);
        let r = m.report().unwrap().to_json();
        assert_eq!(r["omega_size"], 12);
        assert_eq!(r["connected"], true);
        assert_eq!(r["stationary_ok"], true);
        let frozen = model(&Graph::complete(3).unwrap(), 3).report().unwrap().to_json();
        assert_eq!(frozen["mixing_time"], "disconnected");
        assert_eq!(frozen["diameter"], "disconnected");
    }
}
