//! Principal eigenvector of the perturbed adjacency matrix and the level-set
//! partition built from it.
//!
//! The perturbation `Ã = A + (ρ̂/n)·J` makes the matrix irreducible, so its
//! Perron vector is strictly positive even for disconnected graphs, and every
//! entry is at least `‖w‖₁ / 2n`. Levels then group vertices by
//! `w(v) / w_min` in powers of `Δ^{ε/2}`:
//!
//! ```text
//! L_i = { v : Δ^{iε/2} <= w(v)/w_min < Δ^{(i+1)ε/2} }
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::rng;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Diagonal shift applied while iterating. Bipartite graphs have `-ρ` in
/// their spectrum; iterating on `M + I` leaves the Perron vector unchanged
/// but makes it strictly dominant.
const SHIFT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    /// Positive weights with unit 1-norm.
    pub weights: Vec<f64>,
    /// Rayleigh value of `weights` under `Ã`.
    pub rho_tilde: f64,
    /// Rayleigh estimate of the spectral radius of `A` (first phase).
    pub rho_hat: f64,
    pub iterations: usize,
    /// Relative ∞-norm residual of the second phase.
    pub residual: f64,
    pub tolerance: f64,
}

impl EigenData {
    pub fn w_min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn w_max(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// Absolute slack implied by the residual, for `Ãw ≈ ρ̃w` comparisons.
    pub fn residual_slack(&self) -> f64 {
        self.residual * self.w_max() + 1e-12
    }
}

struct Phase {
    vector: Vec<f64>,
    value: f64,
    residual: f64,
    iterations: usize,
}

/// Power iteration on `x ↦ A x + c·sum(x)·1`, shifted by [`SHIFT`].
fn iterate(
    graph: &Graph,
    rank_one: f64,
    mut x: Vec<f64>,
    tolerance: f64,
    max_iters: usize,
) -> Result<Phase> {
    let n = graph.n();
    let apply = |x: &[f64], out: &mut [f64]| {
        let total: f64 = x.iter().sum();
        for v in 0..n {
            let s: f64 = graph.neighbors(v).iter().map(|&u| x[u]).sum();
            out[v] = s + rank_one * total;
        }
    };
    let mut mx = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..=max_iters {
        apply(&x, &mut mx);
        let num: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        let value = num / den;
        let xmax = x.iter().copied().fold(0.0, f64::max);
        residual = x
            .iter()
            .zip(&mx)
            .map(|(a, b)| (b - value * a).abs())
            .fold(0.0, f64::max)
            / xmax;
        if residual <= tolerance {
            return Ok(Phase { vector: x, value, residual, iterations: it });
        }
        if it == max_iters {
            break;
        }
        let mut norm: f64 = 0.0;
        for v in 0..n {
            mx[v] += SHIFT * x[v];
            norm = norm.max(mx[v]);
        }
        for v in 0..n {
            x[v] = mx[v] / norm;
        }
    }
    Err(Error::NoConvergence { iterations: max_iters, residual })
}

/// Two-phase power iteration: estimate `ρ̂` on `A`, then take the Perron
/// vector of `A + (ρ̂/n)J`. Deterministic for a given seed.
pub fn power_iterate(
    graph: &Graph,
    tolerance: f64,
    max_iters: usize,
    seed: u64,
) -> Result<EigenData> {
    let n = graph.n();
    if n == 0 {
        return Err(Error::InvalidArgument("power iteration needs n >= 1".into()));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if graph.edge_count() == 0 {
        return Ok(EigenData {
            weights: vec![1.0 / n as f64; n],
            rho_tilde: 0.0,
            rho_hat: 0.0,
            iterations: 0,
            residual: 0.0,
            tolerance,
        });
    }
    let mut rng = rng::seeded(seed);
    let start: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let first = iterate(graph, 0.0, start, tolerance, max_iters)?;
    let rho_hat = first.value;
    let second = iterate(graph, rho_hat / n as f64, first.vector, tolerance, max_iters)?;
    let total: f64 = second.vector.iter().sum();
    let weights = second.vector.iter().map(|x| x / total).collect();
    Ok(EigenData {
        weights,
        rho_tilde: second.value,
        rho_hat,
        iterations: first.iterations + second.iterations,
        residual: second.residual,
        tolerance,
    })
}

/// Largest `ε` with `ρ̂(1 + tol) = Δ^{1-ε}`.
pub fn choose_epsilon(graph: &Graph, eigen: &EigenData) -> Result<f64> {
    let delta = graph.max_degree();
    if delta < 2 {
        return Err(Error::InvalidArgument(format!("choose_epsilon needs max degree >= 2, got {delta}")));
    }
    let rho = eigen.rho_hat * (1.0 + eigen.tolerance);
    let d = delta as f64;
    if rho >= d {
        return Err(Error::NoSpectralGap { rho, max_degree: delta });
    }
    Ok((d / rho).ln() / d.ln())
}

/// Level sets `L_0..L_{m-1}` of a weight vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPartition {
    pub epsilon: f64,
    pub levels: Vec<Vec<Vertex>>,
    pub level_of: Vec<usize>,
    pub weights: Vec<f64>,
}

impl LevelPartition {
    pub fn m(&self) -> usize {
        self.levels.len()
    }

    /// Builds a partition from explicit level sets; no invariants are checked
    /// beyond every vertex appearing exactly once.
    pub fn from_levels(
        n: usize,
        epsilon: f64,
        levels: Vec<Vec<Vertex>>,
        weights: Vec<f64>,
    ) -> Result<LevelPartition> {
        let mut level_of = vec![usize::MAX; n];
        for (i, level) in levels.iter().enumerate() {
            for &v in level {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
                if level_of[v] != usize::MAX {
                    return Err(Error::InvalidArgument(format!("vertex {v} in two levels")));
                }
                level_of[v] = i;
            }
        }
        if let Some(v) = level_of.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidArgument(format!("vertex {v} in no level")));
        }
        if weights.len() != n {
            return Err(Error::LengthMismatch { expected: n, got: weights.len() });
        }
        Ok(LevelPartition { epsilon, levels, level_of, weights })
    }

    /// The trivial single-level partition.
    pub fn single(n: usize, weights: Vec<f64>) -> LevelPartition {
        LevelPartition {
            epsilon: f64::NAN,
            levels: vec![(0..n).collect()],
            level_of: vec![0; n],
            weights,
        }
    }

    /// `Δ^{1-ε/2}`, the per-vertex cap on neighbors outside lower levels.
    pub fn expansion_bound(&self, graph: &Graph) -> f64 {
        (graph.max_degree() as f64).powf(1.0 - self.epsilon / 2.0)
    }

    /// `(2/ε)·ln(2n)/ln Δ`; infinite when `Δ <= 1`.
    pub fn level_count_bound(&self, graph: &Graph) -> f64 {
        let d = graph.max_degree() as f64;
        if d <= 1.0 {
            return f64::INFINITY;
        }
        (2.0 / self.epsilon) * (2.0 * graph.n() as f64).ln() / d.ln()
    }

    /// `|N(v) \ L_{<ℓ(v)}|`.
    pub fn up_degree(&self, graph: &Graph, v: Vertex) -> usize {
        let lv = self.level_of[v];
        graph.neighbors(v).iter().filter(|&&u| self.level_of[u] >= lv).count()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "epsilon": self.epsilon,
            "m": self.m(),
            "levels": self.levels,
            "weights": self.weights,
        })
    }
}

/// Level index of a ratio `r >= 1`, closed on the left and open on the right.
fn level_index(ratio: f64, base: f64, epsilon: f64) -> usize {
    let step = epsilon / 2.0;
    let boundary = |i: usize| base.powf(i as f64 * step);
    let mut i = (ratio.ln() / (step * base.ln())).floor().max(0.0) as usize;
    while i > 0 && boundary(i) > ratio {
        i -= 1;
    }
    while boundary(i + 1) <= ratio {
        i += 1;
    }
    i
}

/// Level sets from an arbitrary positive weight vector. Depends only on the
/// ratios `w(v)/w_min`.
pub fn levels_from_weights(graph: &Graph, weights: &[f64], epsilon: f64) -> Result<LevelPartition> {
    let n = graph.n();
    if weights.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: weights.len() });
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside (0, 1)")));
    }
    if let Some(v) = weights.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::InvalidArgument(format!("weight of vertex {v} is not positive")));
    }
    let w_min = weights.iter().copied().fold(f64::INFINITY, f64::min);
    let base = graph.max_degree() as f64;
    let level_of: Vec<usize> = if base <= 1.0 {
        vec![0; n]
    } else {
        weights.iter().map(|&w| level_index(w / w_min, base, epsilon)).collect()
    };
    let m = level_of.iter().copied().max().map_or(0, |l| l + 1);
    let mut levels = vec![Vec::new(); m];
    for (v, &l) in level_of.iter().enumerate() {
        levels[l].push(v);
    }
    Ok(LevelPartition { epsilon, levels, level_of, weights: weights.to_vec() })
}

/// Level sets of `eigen.weights`, rejecting any vertex that breaks the
/// expansion bound `|N(v) \ L_{<i}| < Δ^{1-ε/2}`.
pub fn build_levels(graph: &Graph, eigen: &EigenData, epsilon: f64) -> Result<LevelPartition> {
    let partition = levels_from_weights(graph, &eigen.weights, epsilon)?;
    let bound = partition.expansion_bound(graph);
    for v in 0..graph.n() {
        let count = partition.up_degree(graph, v);
        if count > 0 && count as f64 >= bound {
            return Err(Error::LevelExpansion { vertex: v, count, bound });
        }
    }
    Ok(partition)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionWitness {
    pub vertex: Vertex,
    pub level: usize,
    pub count: usize,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionReport {
    pub m: usize,
    pub m_bound: f64,
    pub level_count_ok: bool,
    pub expansion_witnesses: Vec<ExpansionWitness>,
    /// Vertices with `w(N(u)) > ρ̃ w(u)` beyond the residual slack.
    pub neighborhood_witnesses: Vec<Vertex>,
    /// Vertices whose level disagrees with their weight ratio.
    pub membership_witnesses: Vec<Vertex>,
    pub w_min_ok: bool,
    pub rho_sandwich_ok: bool,
}

impl PartitionReport {
    pub fn pass(&self) -> bool {
        self.level_count_ok
            && self.expansion_witnesses.is_empty()
            && self.neighborhood_witnesses.is_empty()
            && self.membership_witnesses.is_empty()
            && self.w_min_ok
            && self.rho_sandwich_ok
    }
}

/// Re-checks every level-set and eigenvector invariant from scratch.
pub fn verify_partition(partition: &LevelPartition, graph: &Graph, eigen: &EigenData) -> PartitionReport {
    let n = graph.n();
    let bound = partition.expansion_bound(graph);
    let expansion_witnesses = (0..n)
        .filter_map(|v| {
            let count = partition.up_degree(graph, v);
            (count > 0 && count as f64 >= bound).then(|| ExpansionWitness {
                vertex: v,
                level: partition.level_of[v],
                count,
                bound,
            })
        })
        .collect();

    let w = &eigen.weights;
    let slack = eigen.residual_slack();
    let neighborhood_witnesses = (0..n)
        .filter(|&u| {
            let around: f64 = graph.neighbors(u).iter().map(|&x| w[x]).sum();
            around > eigen.rho_tilde * w[u] + slack
        })
        .collect();

    let membership_witnesses = match levels_from_weights(graph, &partition.weights, partition.epsilon) {
        Ok(expected) => (0..n).filter(|&v| expected.level_of[v] != partition.level_of[v]).collect(),
        Err(_) => (0..n).collect(),
    };

    let m_bound = partition.level_count_bound(graph);
    let total: f64 = w.iter().sum();
    let w_min_ok = eigen.w_min() >= total / (2.0 * n as f64) - 1e-9;
    let rho_sandwich_ok = graph.edge_count() == 0
        || (eigen.rho_hat < eigen.rho_tilde && eigen.rho_tilde <= 2.0 * eigen.rho_hat + slack);
    PartitionReport {
        m: partition.m(),
        m_bound,
        level_count_ok: partition.m() as f64 <= m_bound,
        expansion_witnesses,
        neighborhood_witnesses,
        membership_witnesses,
        w_min_ok,
        rho_sandwich_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eig(g: &Graph) -> EigenData {
        power_iterate(g, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS, 1).unwrap()
    }

    #[test]
    fn spectral_radius_examples() {
        let tol = 1e-6;
        assert!((eig(&Graph::cycle(4).unwrap()).rho_hat - 2.0).abs() < tol);
        assert!((eig(&Graph::complete_bipartite(3, 3).unwrap()).rho_hat - 3.0).abs() < tol);
        assert!((eig(&Graph::star(4).unwrap()).rho_hat - 2.0).abs() < tol);
        assert!((eig(&Graph::complete(5).unwrap()).rho_hat - 4.0).abs() < tol);
    }

    #[test]
    fn eigen_invariants_on_small_graphs() {
        for g in [
            Graph::grid(4, 3).unwrap(),
            Graph::star(9).unwrap(),
            Graph::complete_tree(3, 3).unwrap(),
            Graph::path(2).unwrap().disjoint_union(&Graph::cycle(5).unwrap()).unwrap(),
        ] {
            let e = eig(&g);
            assert!(e.residual <= DEFAULT_TOLERANCE);
            assert!(e.weights.iter().all(|&w| w > 0.0));
            assert!((e.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(e.w_min() >= 1.0 / (2.0 * g.n() as f64) - 1e-9);
            assert!(e.rho_hat < e.rho_tilde && e.rho_tilde <= 2.0 * e.rho_hat + e.residual_slack());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let g = Graph::planar_triangulation(40, 3).unwrap();
        let a = power_iterate(&g, 1e-8, 10_000, 5).unwrap();
        let b = power_iterate(&g, 1e-8, 10_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_convergence_is_reported() {
        let g = Graph::grid(6, 6).unwrap();
        match power_iterate(&g, 1e-14, 3, 0) {
            Err(Error::NoConvergence { iterations: 3, residual }) => assert!(residual > 1e-14),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
        assert!(power_iterate(&g, 0.0, 10, 0).is_err());
    }

    #[test]
    fn epsilon_examples() {
        let star = Graph::star(16).unwrap();
        let e = choose_epsilon(&star, &eig(&star)).unwrap();
        assert!((e - 0.5).abs() < 1e-6, "{e}");
        let k5 = Graph::complete(5).unwrap();
        assert!(matches!(choose_epsilon(&k5, &eig(&k5)), Err(Error::NoSpectralGap { .. })));
        let p2 = Graph::path(2).unwrap();
        assert!(matches!(choose_epsilon(&p2, &eig(&p2)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn epsilon_on_triangulation_respects_gap() {
        let g = Graph::planar_triangulation(200, 11).unwrap();
        let e = eig(&g);
        let eps = choose_epsilon(&g, &e).unwrap();
        assert!(eps > 0.0 && eps < 1.0);
        assert!(e.rho_hat <= (g.max_degree() as f64).powf(1.0 - eps));
    }

    #[test]
    fn single_vertex_and_regular_graphs_have_one_level() {
        let one = Graph::path(1).unwrap();
        let p = build_levels(&one, &eig(&one), 0.5).unwrap();
        assert_eq!(p.levels, vec![vec![0]]);

        // A regular graph has a constant eigenvector, hence one level. With
        // Δ >= 2 no ε makes the expansion bound hold, so only the level count
        // part of the report passes.
        let k33 = Graph::complete_bipartite(3, 3).unwrap();
        let e = eig(&k33);
        let p = levels_from_weights(&k33, &e.weights, 0.3).unwrap();
        assert_eq!(p.m(), 1);
        let report = verify_partition(&p, &k33, &e);
        assert!(report.level_count_ok && report.membership_witnesses.is_empty());
        assert_eq!(report.expansion_witnesses.len(), 6);
        assert!(matches!(build_levels(&k33, &e, 0.3), Err(Error::LevelExpansion { .. })));

        let empty = Graph::from_edges(4, []).unwrap();
        let e = eig(&empty);
        let p = build_levels(&empty, &e, 0.5).unwrap();
        assert_eq!(p.m(), 1);
        assert!(verify_partition(&p, &empty, &e).pass());
    }

    #[test]
    fn star_center_sits_above_leaves() {
        // Oracle: the perturbed star only has two distinct entries, so its
        // Perron vector comes from a 2x2 eigenproblem on (center, leaf).
        let leaves: f64 = 16.0;
        let n = leaves + 1.0;
        let p = 4.0 / n;
        let (a, b, c, d) = (p, leaves * (1.0 + p), 1.0 + p, leaves * p);
        let tr = a + d;
        let det = a * d - b * c;
        let lambda = tr / 2.0 + (tr * tr / 4.0 - det).sqrt();
        let ratio = b / (lambda - a); // center / leaf
        assert!(ratio > 1.0);

        let star = Graph::star(16).unwrap();
        let e = eig(&star);
        assert!((e.rho_tilde - lambda).abs() < 1e-6);
        let eps = choose_epsilon(&star, &e).unwrap();
        let part = build_levels(&star, &e, eps).unwrap();
        let expected_center = (ratio.ln() / (eps / 2.0 * 16f64.ln())).floor() as usize;
        assert!(expected_center >= 1);
        assert_eq!(part.level_of[0], expected_center);
        assert!((1..17).all(|v| part.level_of[v] == 0));
        assert!(verify_partition(&part, &star, &e).pass());
    }

    #[test]
    fn adversarial_partition_yields_witness() {
        let star = Graph::star(16).unwrap();
        let e = eig(&star);
        let hand = LevelPartition::from_levels(17, 0.5, vec![(0..17).collect()], e.weights.clone()).unwrap();
        let report = verify_partition(&hand, &star, &e);
        assert!(!report.pass());
        assert_eq!(report.expansion_witnesses.len(), 1);
        assert_eq!(report.expansion_witnesses[0].vertex, 0);
        assert_eq!(report.expansion_witnesses[0].count, 16);
        assert_eq!(report.membership_witnesses, vec![0]);
    }

    #[test]
    fn level_boundaries_are_closed_on_the_left() {
        // 16^{0.25} = 2 exactly, so ratio 2 starts level 1 and 4 starts level 2.
        assert_eq!(level_index(1.0, 16.0, 0.5), 0);
        assert_eq!(level_index(1.999_999, 16.0, 0.5), 0);
        assert_eq!(level_index(2.0, 16.0, 0.5), 1);
        assert_eq!(level_index(4.0, 16.0, 0.5), 2);
        assert_eq!(level_index(3.999_999, 16.0, 0.5), 1);
    }

    #[test]
    fn build_levels_rejects_bad_epsilon() {
        let g = Graph::star(4).unwrap();
        let e = eig(&g);
        assert!(build_levels(&g, &e, 0.0).is_err());
        assert!(build_levels(&g, &e, 1.0).is_err());
    }

    #[test]
    fn partition_json_shape() {
        let g = Graph::star(4).unwrap();
        let e = eig(&g);
        let p = build_levels(&g, &e, 0.4).unwrap();
        let j = p.to_json();
        assert_eq!(j["m"], p.m());
        assert_eq!(j["weights"].as_array().unwrap().len(), 5);
        assert!(j["levels"].is_array());
    }
}
