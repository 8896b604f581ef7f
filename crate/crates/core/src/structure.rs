//! Forest covers, the bounded common-neighborhood subset, and level-gap
//! utilities over a level partition.

use std::collections::{BTreeMap, VecDeque};

use serde::Serialize;
use serde_json::{json, Value};

use crate::dynamics::{Coloring, Scratch};
use crate::error::{Error, Result};
use crate::graph::{DegeneracyData, Graph, Vertex};
use crate::spectral::LevelPartition;

pub const DEFAULT_ETA: f64 = 0.05;

/// Every edge (by index into `Graph::edges`) assigned to one forest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForestCover {
    pub forest_of: Vec<usize>,
    pub f: usize,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// False when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

impl ForestCover {
    /// Edges of forest `j`.
    pub fn forest(&self, graph: &Graph, j: usize) -> Vec<(Vertex, Vertex)> {
        graph.edges().iter().zip(&self.forest_of).filter(|(_, &f)| f == j).map(|(&e, _)| e).collect()
    }

    /// Forests are acyclic and every edge has exactly one valid forest.
    pub fn verify(&self, graph: &Graph) -> bool {
        if self.forest_of.len() != graph.edge_count() || self.forest_of.iter().any(|&j| j >= self.f) {
            return false;
        }
        (0..self.f).all(|j| {
            let mut uf = UnionFind::new(graph.n());
            self.forest(graph, j).into_iter().all(|(u, v)| uf.union(u, v))
        })
    }

    pub fn to_json(&self, graph: &Graph) -> Value {
        let edges: Vec<Value> = graph
            .edges()
            .iter()
            .zip(&self.forest_of)
            .map(|(&(u, v), &j)| json!({ "u": u, "v": v, "forest": j }))
            .collect();
        json!({ "f": self.f, "edges": edges })
    }
}

/// Each vertex hands its edges to later vertices in the peeling order to
/// slots `0, 1, ...`; a slot in which every vertex owns at most one edge to
/// a later vertex is a forest. Any edge that would still close a cycle in its
/// slot moves to a fresh slot.
pub fn forest_decomposition(graph: &Graph, degen: &DegeneracyData) -> ForestCover {
    let n = graph.n();
    let mut forest_of = vec![usize::MAX; graph.edge_count()];
    let mut slots: Vec<UnionFind> = Vec::new();
    for &v in &degen.order {
        let mut later: Vec<Vertex> =
            graph.neighbors(v).iter().copied().filter(|&u| degen.position[u] > degen.position[v]).collect();
        later.sort_unstable();
        for (slot, u) in later.into_iter().enumerate() {
            let e = graph.edge_index(v, u).expect("neighbor edge exists");
            let mut j = slot;
            loop {
                if j == slots.len() {
                    slots.push(UnionFind::new(n));
                }
                if slots[j].union(v, u) {
                    break;
                }
                j = slots.len();
            }
            forest_of[e] = j;
        }
    }
    ForestCover { forest_of, f: slots.len() }
}

/// A subset of `U` whose members share few neighbors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructSubset {
    pub subset: Vec<Vertex>,
    /// Color vector shared by the subset, one entry in `1..=3` per forest.
    pub class: Vec<u8>,
    /// `|U'| / |U|`.
    pub ratio: f64,
    /// Largest `|N(u) ∩ N(U' ∖ {u})|` over the subset.
    pub max_common: usize,
}

/// Depth mod 3 (as 1, 2, 3) in forest `j`, rooting each tree at its lowest id.
fn depth_classes(graph: &Graph, cover: &ForestCover, j: usize) -> Vec<u8> {
    let n = graph.n();
    let mut adj: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    for (u, v) in cover.forest(graph, j) {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut depth = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for root in 0..n {
        if depth[root] != u32::MAX {
            continue;
        }
        depth[root] = 0;
        queue.push_back(root);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if depth[y] == u32::MAX {
                    depth[y] = depth[x] + 1;
                    queue.push_back(y);
                }
            }
        }
    }
    depth.into_iter().map(|d| (d % 3) as u8 + 1).collect()
}

/// `|N(u) ∩ N(S ∖ {u})|`.
pub fn common_neighbors(graph: &Graph, u: Vertex, set: &[Vertex]) -> usize {
    let mut mark = vec![false; graph.n()];
    for &s in set {
        if s != u {
            for &w in graph.neighbors(s) {
                mark[w] = true;
            }
        }
    }
    graph.neighbors(u).iter().filter(|&&w| mark[w]).count()
}

/// Classifies `U` by the per-forest depth-mod-3 colors and returns a
/// largest class, after checking `|U'| ≥ |U| 3^{−f}` and
/// `|N(u) ∩ N(U' ∖ {u})| ≤ f` for each member. Among equally large classes
/// the lexicographically first one passing the check is returned.
pub fn struct_subset(graph: &Graph, set: &[Vertex], cover: &ForestCover) -> Result<StructSubset> {
    let n = graph.n();
    let mut u: Vec<Vertex> = set.to_vec();
    u.sort_unstable();
    u.dedup();
    if let Some(&v) = u.iter().find(|&&v| v >= n) {
        return Err(Error::VertexOutOfRange { vertex: v, n });
    }
    if u.is_empty() {
        return Ok(StructSubset { subset: Vec::new(), class: vec![1; cover.f], ratio: 1.0, max_common: 0 });
    }
    let colors: Vec<Vec<u8>> = (0..cover.f).map(|j| depth_classes(graph, cover, j)).collect();
    let mut classes: BTreeMap<Vec<u8>, Vec<Vertex>> = BTreeMap::new();
    for &v in &u {
        classes.entry(colors.iter().map(|c| c[v]).collect()).or_default().push(v);
    }
    let largest = classes.values().map(Vec::len).max().expect("nonempty");
    let floor = 3f64.powi(-(cover.f as i32));
    let mut witness = None;
    for (class, subset) in classes.into_iter().filter(|(_, s)| s.len() == largest) {
        let ratio = subset.len() as f64 / u.len() as f64;
        if ratio < floor {
            return Err(Error::Postcondition {
                vertex: subset[0],
                message: format!("class ratio {ratio} below 3^-{}", cover.f),
            });
        }
        let common: Vec<usize> = subset.iter().map(|&x| common_neighbors(graph, x, &subset)).collect();
        let max_common = common.iter().copied().max().unwrap_or(0);
        if max_common <= cover.f {
            return Ok(StructSubset { subset, class, ratio, max_common });
        }
        if witness.is_none() {
            let i = common.iter().position(|&c| c == max_common).expect("max exists");
            witness = Some((subset[i], max_common));
        }
    }
    let (vertex, c) = witness.expect("some class was examined");
    Err(Error::Postcondition {
        vertex,
        message: format!("{c} common neighbors with the rest of the subset, bound {}", cover.f),
    })
}

/// Vertices reachable from `v` by steps to strictly lower levels, never
/// going below level `ℓ(v) − span`.
pub fn descendants(graph: &Graph, partition: &LevelPartition, v: Vertex, span: usize) -> Vec<Vertex> {
    let lv = partition.level_of[v];
    let floor = lv.saturating_sub(span);
    if span == 0 {
        return Vec::new();
    }
    let mut seen = vec![false; graph.n()];
    seen[v] = true;
    let mut out = Vec::new();
    let mut queue = VecDeque::from([v]);
    while let Some(w) = queue.pop_front() {
        let lw = partition.level_of[w];
        for &u in graph.neighbors(w) {
            let lu = partition.level_of[u];
            if lu < lw && lu >= floor && !seen[u] {
                seen[u] = true;
                out.push(u);
                queue.push_back(u);
            }
        }
    }
    out.sort_unstable();
    out
}

/// `max_{uv ∈ E} |ℓ(u) − ℓ(v)|`.
pub fn level_span(graph: &Graph, partition: &LevelPartition) -> usize {
    graph
        .edges()
        .iter()
        .map(|&(u, v)| partition.level_of[u].abs_diff(partition.level_of[v]))
        .max()
        .unwrap_or(0)
}

/// Members of `set` with at least `3Δ^{1−η}` available colors.
pub fn thawed_vertices(graph: &Graph, coloring: &Coloring, set: &[Vertex], eta: f64) -> Vec<Vertex> {
    let threshold = 3.0 * (graph.max_degree() as f64).powf(1.0 - eta);
    let mut scratch = Scratch::new(coloring.k());
    set.iter().copied().filter(|&v| scratch.available_count(graph, coloring.colors(), v) as f64 >= threshold).collect()
}
