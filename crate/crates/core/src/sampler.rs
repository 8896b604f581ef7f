//! Sources of (approximately) uniform proper colorings.

use crate::dynamics::{degeneracy_coloring, glauber_step, ChainState, Coloring};
use crate::error::{Error, Result};
use crate::graph::{degeneracy, Graph};
use crate::oracle::{enumerate_colorings, ExactModel};
use crate::rng::{self, ChaCha8Rng};

/// State spaces up to this size are sampled exactly.
pub const EXACT_LIMIT: usize = 1_000_000;
const EXACT_MEMORY: usize = 1 << 27;

pub enum Sampler {
    Exact { model: ExactModel, rng: ChaCha8Rng },
    Chain { graph: Graph, state: ChainState, thin: u64 },
}

/// `50 n ln n` updates, at least `n`.
pub fn burn_in(n: usize) -> u64 {
    let n = n as f64;
    (50.0 * n * n.ln()).ceil().max(n) as u64
}

/// Cheap upper bound on the number of proper colorings: in breadth-first
/// order every vertex with an earlier neighbor has at most `k-1` choices.
pub fn omega_upper_bound(graph: &Graph, k: u32) -> f64 {
    let n = graph.n();
    let mut seen = vec![false; n];
    let mut log = 0.0;
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        log += (k as f64).ln();
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(v) = queue.pop_front() {
            for &u in graph.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    log += ((k as f64) - 1.0).max(0.0).ln();
                    queue.push_back(u);
                }
            }
        }
    }
    log.exp()
}

impl Sampler {
    pub fn exact(model: ExactModel, seed: u64) -> Sampler {
        Sampler::Exact { model, rng: rng::seeded(seed) }
    }

    /// Long-run Glauber from the greedy degeneracy coloring, burned in for
    /// `50 n ln n` updates and thinned by `thin` updates between samples.
    pub fn chain(graph: &Graph, k: u32, seed: u64, thin: u64) -> Result<Sampler> {
        let start = degeneracy_coloring(graph, &degeneracy(graph), k)?;
        let mut state = ChainState::seeded(graph, start, seed)?;
        if graph.n() > 0 {
            for _ in 0..burn_in(graph.n()) {
                glauber_step(&mut state, graph, None)?;
            }
        }
        Ok(Sampler::Chain { graph: graph.clone(), state, thin: thin.max(1) })
    }

    /// Exact sampling when `|Ω| ≤ 10⁶` can be established cheaply, otherwise
    /// the burned-in chain.
    pub fn auto(graph: &Graph, k: u32, seed: u64) -> Result<Sampler> {
        let n = graph.n().max(1);
        let memory_ok = EXACT_LIMIT.saturating_mul(n) <= EXACT_MEMORY;
        if omega_upper_bound(graph, k) <= EXACT_LIMIT as f64 || memory_ok {
            match enumerate_colorings(graph, k, EXACT_LIMIT) {
                Ok(model) if !model.is_empty() => return Ok(Sampler::exact(model, seed)),
                Ok(_) => return Err(Error::InvalidArgument(format!("no proper {k}-coloring exists"))),
                Err(Error::BudgetExceeded { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let thin = ((n as f64) * (n as f64).ln()).ceil().max(n as f64) as u64;
        Sampler::chain(graph, k, seed, thin)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Sampler::Exact { .. })
    }

    pub fn next_coloring(&mut self) -> Result<Coloring> {
        match self {
            Sampler::Exact { model, rng } => Ok(model.sample_uniform(rng)),
            Sampler::Chain { graph, state, thin } => {
                if graph.n() > 0 {
                    for _ in 0..*thin {
                        glauber_step(state, graph, None)?;
                    }
                }
                Ok(state.coloring().clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_picks_exact_on_tiny_graphs() {
        let g = Graph::path(3).unwrap();
        let mut s = Sampler::auto(&g, 3, 1).unwrap();
        assert!(s.is_exact());
        let c = s.next_coloring().unwrap();
        assert!(crate::dynamics::is_proper(&g, &c).unwrap());
    }

    #[test]
    fn chain_sampler_stays_proper() {
        let g = Graph::planar_triangulation(60, 2).unwrap();
        let mut s = Sampler::auto(&g, 8, 1).unwrap();
        assert!(!s.is_exact());
        for _ in 0..5 {
            assert!(crate::dynamics::is_proper(&g, &s.next_coloring().unwrap()).unwrap());
        }
    }

    #[test]
    fn upper_bound_is_exact_on_trees() {
        let t = Graph::complete_tree(2, 2).unwrap();
        assert!((omega_upper_bound(&t, 3) - 3.0 * 64.0).abs() < 1e-6);
    }
}
