//! Simple undirected graphs, edge-list IO, certified-planar generators and
//! degeneracy peeling.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

pub type Vertex = usize;

/// Largest vertex count any generator or loader will build.
pub const VERTEX_BUDGET: usize = 1 << 24;

/// Immutable simple undirected graph on vertices `0..n`.
///
/// Adjacency lists are sorted and symmetric; the edge list holds each edge
/// once as `(min, max)` in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<Vertex>>,
    edges: Vec<(Vertex, Vertex)>,
    max_degree: usize,
    certified_planar: bool,
}

impl Graph {
    /// Builds a graph from an edge iterator. Duplicate edges collapse;
    /// self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        check_budget(n as u128)?;
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop { line: 0, vertex: u });
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self::from_sorted_edges(n, set.into_iter().collect(), false))
    }

    fn from_sorted_edges(n: usize, edges: Vec<(Vertex, Vertex)>, planar: bool) -> Graph {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let max_degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        Graph { adjacency, edges, max_degree, certified_planar: planar }
    }

    fn certified(n: usize, edges: impl IntoIterator<Item = (Vertex, Vertex)>) -> Graph {
        let set: BTreeSet<_> = edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect();
        Self::from_sorted_edges(n, set.into_iter().collect(), true)
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn is_certified_planar(&self) -> bool {
        self.certified_planar
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Index of edge `{u, v}` in [`Graph::edges`].
    pub fn edge_index(&self, u: Vertex, v: Vertex) -> Option<usize> {
        self.edges.binary_search(&(u.min(v), u.max(v))).ok()
    }

    /// True when no two vertices of `set` are adjacent.
    pub fn is_independent(&self, set: &[Vertex]) -> bool {
        let mut member = vec![false; self.n()];
        for &v in set {
            member[v] = true;
        }
        set.iter().all(|&v| self.adjacency[v].iter().all(|&u| !member[u]))
    }

    /// Parses the edge-list text format.
    ///
    /// One `u v` pair per line, `#` starts a comment line. A comment of the
    /// form `# vertices: N` fixes the vertex count (so isolated vertices
    /// survive a round trip); without it `n` is one more than the largest id.
    pub fn parse_edge_list(text: &str) -> Result<Graph> {
        let mut declared: Option<usize> = None;
        let mut pairs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(count) = comment.trim().strip_prefix("vertices:") {
                    let n = count.trim().parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad vertex count {:?}", count.trim()),
                    })?;
                    declared = Some(n);
                }
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut next = || -> Result<Vertex> {
                let tok = fields.next().ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: "expected two vertex ids".into(),
                })?;
                tok.parse::<Vertex>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad vertex id {tok:?}"),
                })
            };
            let u = next()?;
            let v = next()?;
            if fields.next().is_some() {
                return Err(Error::Parse { line: line_no, message: "trailing fields".into() });
            }
            if u == v {
                return Err(Error::SelfLoop { line: line_no, vertex: u });
            }
            pairs.push((u, v, line_no));
        }
        let inferred = pairs.iter().map(|&(u, v, _)| u.max(v) + 1).max().unwrap_or(0);
        let n = match declared {
            Some(n) => {
                if let Some(&(u, v, _)) = pairs.iter().find(|&&(u, v, _)| u.max(v) >= n) {
                    return Err(Error::VertexOutOfRange { vertex: u.max(v), n });
                }
                n
            }
            None => inferred,
        };
        Graph::from_edges(n, pairs.into_iter().map(|(u, v, _)| (u, v)))
    }

    /// Canonical edge-list text: a vertex-count header, then edges in
    /// lexicographic `(min, max)` order.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 8 + 32);
        writeln!(out, "# vertices: {}", self.n()).unwrap();
        for &(u, v) in &self.edges {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    /// Path on `n` vertices.
    pub fn path(n: usize) -> Result<Graph> {
        check_budget(n as u128)?;
        Ok(Self::certified(n, (1..n).map(|v| (v - 1, v))))
    }

    /// Cycle on `n >= 3` vertices.
    pub fn cycle(n: usize) -> Result<Graph> {
        if n < 3 {
            return Err(Error::InvalidArgument("cycle needs n >= 3".into()));
        }
        check_budget(n as u128)?;
        Ok(Self::certified(n, (0..n).map(|v| (v, (v + 1) % n))))
    }

    /// Star `K_{1,leaves}` with the center at vertex 0.
    pub fn star(leaves: usize) -> Result<Graph> {
        check_budget(leaves as u128 + 1)?;
        Ok(Self::certified(leaves + 1, (1..=leaves).map(|v| (0, v))))
    }

    /// Complete graph `K_n`. Only flagged planar for `n <= 4`.
    pub fn complete(n: usize) -> Result<Graph> {
        check_budget(n as u128)?;
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let mut g = Self::certified(n, edges);
        g.certified_planar = n <= 4;
        Ok(g)
    }

    /// Complete bipartite `K_{a,b}`: side A is `0..a`, side B is `a..a+b`.
    /// Only flagged planar when one side has at most two vertices.
    pub fn complete_bipartite(a: usize, b: usize) -> Result<Graph> {
        check_budget(a as u128 + b as u128)?;
        let edges: Vec<_> = (0..a).flat_map(|u| (0..b).map(move |j| (u, a + j))).collect();
        let mut g = Self::certified(a + b, edges);
        g.certified_planar = a.min(b) <= 2;
        Ok(g)
    }

    /// `w x h` grid; vertex `(x, y)` has id `y * w + x`.
    pub fn grid(w: usize, h: usize) -> Result<Graph> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidArgument("grid dimensions must be >= 1".into()));
        }
        check_budget(w as u128 * h as u128)?;
        let mut edges = Vec::with_capacity(2 * w * h);
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                if x + 1 < w {
                    edges.push((v, v + 1));
                }
                if y + 1 < h {
                    edges.push((v, v + w));
                }
            }
        }
        Ok(Self::certified(w * h, edges))
    }

    /// Complete rooted tree with the given branching factor and depth,
    /// numbered in breadth-first order from the root 0.
    pub fn complete_tree(branching: usize, depth: usize) -> Result<Graph> {
        if branching == 0 {
            return Err(Error::InvalidArgument("branching must be >= 1".into()));
        }
        let mut total: u128 = 0;
        let mut layer: u128 = 1;
        for _ in 0..=depth {
            total += layer;
            check_budget(total)?;
            layer = layer.saturating_mul(branching as u128);
        }
        let n = total as usize;
        let edges = (1..n).map(|v| ((v - 1) / branching, v));
        Ok(Self::certified(n, edges))
    }

    /// Random maximal planar graph by face insertion: start from a triangle
    /// (two triangular faces) and repeatedly connect a new vertex to the three
    /// corners of a uniformly chosen face.
    pub fn planar_triangulation(n: usize, seed: u64) -> Result<Graph> {
        if n < 3 {
            return Err(Error::InvalidArgument("triangulation needs n >= 3".into()));
        }
        check_budget(n as u128)?;
        let mut rng = rng::seeded(seed);
        let mut faces: Vec<[Vertex; 3]> = vec![[0, 1, 2], [0, 1, 2]];
        let mut edges = vec![(0, 1), (0, 2), (1, 2)];
        for v in 3..n {
            let f = rng::index(&mut rng, faces.len());
            let [a, b, c] = faces[f];
            edges.extend([(a, v), (b, v), (c, v)]);
            faces[f] = [a, b, v];
            faces.push([a, c, v]);
            faces.push([b, c, v]);
        }
        debug_assert_eq!(edges.len(), 3 * n - 6);
        Ok(Self::certified(n, edges))
    }

    /// Random triangulation with a prescribed maximum degree, found by
    /// scanning seeds `seed, seed + 1, ...` at the requested size.
    pub fn planar_triangulation_with_max_degree(
        n: usize,
        max_degree: usize,
        seed: u64,
        attempts: u64,
    ) -> Result<(Graph, u64)> {
        for s in seed..seed.saturating_add(attempts) {
            let g = Self::planar_triangulation(n, s)?;
            if g.max_degree() == max_degree {
                return Ok((g, s));
            }
        }
        Err(Error::InvalidArgument(format!(
            "no triangulation with n = {n} and max degree {max_degree} in {attempts} seeds"
        )))
    }

    /// Disjoint union of `self` and `other`, with `other` shifted past `self`.
    pub fn disjoint_union(&self, other: &Graph) -> Result<Graph> {
        let offset = self.n();
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(u, v)| (u + offset, v + offset)));
        let mut g = Graph::from_edges(offset + other.n(), edges)?;
        g.certified_planar = self.certified_planar && other.certified_planar;
        Ok(g)
    }

    /// Random graph with independent edge probability `p`; never flagged planar.
    pub fn random_gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
        check_budget(n as u128)?;
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Graph::from_edges(n, edges)
    }
}

fn check_budget(requested: u128) -> Result<()> {
    if requested > VERTEX_BUDGET as u128 {
        return Err(Error::SizeBudget { requested, budget: VERTEX_BUDGET });
    }
    Ok(())
}

/// `|N(u) ∩ N(v)|` for distinct `u`, `v`.
pub fn codegree(graph: &Graph, u: Vertex, v: Vertex) -> Result<usize> {
    if u == v {
        return Err(Error::InvalidArgument("codegree needs distinct vertices".into()));
    }
    for x in [u, v] {
        if x >= graph.n() {
            return Err(Error::VertexOutOfRange { vertex: x, n: graph.n() });
        }
    }
    let (a, b) = (graph.neighbors(u), graph.neighbors(v));
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(count)
}

/// Greedy minimum-degree peeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegeneracyData {
    /// `order[i]` has at most `d` neighbors among `order[i+1..]`.
    pub order: Vec<Vertex>,
    pub d: usize,
    /// Per vertex: number of neighbors that come later in `order`.
    pub back_degree: Vec<usize>,
    /// Per vertex: its index in `order`.
    pub position: Vec<usize>,
}

impl DegeneracyData {
    /// Single-scan check of the peeling property.
    pub fn verify(&self, graph: &Graph) -> bool {
        (0..graph.n()).all(|v| {
            let later = graph.neighbors(v).iter().filter(|&&u| self.position[u] > self.position[v]).count();
            later == self.back_degree[v] && later <= self.d
        })
    }
}

/// Repeatedly removes a minimum-degree vertex (lowest id on ties).
pub fn degeneracy(graph: &Graph) -> DegeneracyData {
    let n = graph.n();
    let mut deg: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    let mut queue: BTreeSet<(usize, Vertex)> = (0..n).map(|v| (deg[v], v)).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut back_degree = vec![0; n];
    let mut d = 0;
    while let Some((dv, v)) = queue.pop_first() {
        removed[v] = true;
        back_degree[v] = dv;
        d = d.max(dv);
        order.push(v);
        for &u in graph.neighbors(v) {
            if !removed[u] {
                queue.remove(&(deg[u], u));
                deg[u] -= 1;
                queue.insert((deg[u], u));
            }
        }
    }
    let mut position = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    DegeneracyData { order, d, back_degree, position }
}

/// Builds a graph from a generator spec such as `grid:3:3`, `tri:50:7`,
/// `tree:2:2`, `star:16`, `complete:5`, `cycle:6`, `path:4` or
/// `bipartite:2:3`. The triangulation seed defaults to 0.
pub fn from_spec(spec: &str) -> Result<Graph> {
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default();
    let args: Vec<usize> = parts
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad number {p:?} in graph spec {spec:?}")))
        })
        .collect::<Result<_>>()?;
    let arity = |want: &[usize]| {
        if want.contains(&args.len()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("graph spec {spec:?} has {} arguments", args.len())))
        }
    };
    match kind {
        "path" => arity(&[1]).and_then(|_| Graph::path(args[0])),
        "cycle" => arity(&[1]).and_then(|_| Graph::cycle(args[0])),
        "star" => arity(&[1]).and_then(|_| Graph::star(args[0])),
        "complete" => arity(&[1]).and_then(|_| Graph::complete(args[0])),
        "bipartite" => arity(&[2]).and_then(|_| Graph::complete_bipartite(args[0], args[1])),
        "grid" => arity(&[2]).and_then(|_| Graph::grid(args[0], args[1])),
        "tree" => arity(&[2]).and_then(|_| Graph::complete_tree(args[0], args[1])),
        "tri" => arity(&[1, 2]).and_then(|_| Graph::planar_triangulation(args[0], args.get(1).copied().unwrap_or(0) as u64)),
        _ => Err(Error::InvalidArgument(format!("unknown graph kind {kind:?}"))),
    }
}

/// Small graphs whose coloring spaces at `k = 2(d+1)` stay small enough for
/// exhaustive oracle checks.
pub const SMALL_SUITE: &[&str] = &[
    "path:3", "path:4", "path:5", "path:6", "cycle:4", "cycle:6", "complete:3", "complete:4", "star:3", "star:4",
    "star:5", "grid:2:2", "grid:3:2", "tree:2:1",
];

/// Larger members of the test suite.
pub const LARGE_SUITE: &[&str] = &[
    "path:40", "cycle:30", "star:8", "star:16", "complete:5", "bipartite:4:16", "grid:3:3", "grid:5:5", "grid:10:10",
    "tree:2:4", "tree:4:3", "tri:50:7", "tri:200:3", "tri:500:11",
];

/// Every suite member as `(spec, graph)`, small ones first.
pub fn suite() -> Vec<(&'static str, Graph)> {
    SMALL_SUITE
        .iter()
        .chain(LARGE_SUITE)
        .map(|&s| (s, from_spec(s).expect("suite specs are valid")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_examples() {
        let p3 = Graph::parse_edge_list("0 1\n1 2").unwrap();
        assert_eq!((p3.n(), p3.edge_count(), p3.max_degree()), (3, 2, 2));
        assert!(!p3.is_certified_planar());

        let p2 = Graph::parse_edge_list("0 1\n0 1").unwrap();
        assert_eq!((p2.n(), p2.edge_count()), (2, 1));

        assert_eq!(
            Graph::parse_edge_list("0 0"),
            Err(Error::SelfLoop { line: 1, vertex: 0 })
        );
    }

    #[test]
    fn load_rejects_bad_lines() {
        assert!(matches!(
            Graph::parse_edge_list("# vertices: 3\n0 1\n1 3"),
            Err(Error::VertexOutOfRange { vertex: 3, n: 3 })
        ));
        assert!(matches!(Graph::parse_edge_list("0 1\n2"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Graph::parse_edge_list("0 -1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Graph::parse_edge_list("1 2 3"), Err(Error::Parse { .. })));
        let g = Graph::parse_edge_list("# a comment\n\n  3 1  \n").unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edges(), &[(1, 3)]);
    }

    #[test]
    fn path_and_grid_examples() {
        let c4 = Graph::grid(2, 2).unwrap();
        assert_eq!((c4.n(), c4.edge_count(), c4.max_degree()), (4, 4, 2));
        let one = Graph::grid(1, 1).unwrap();
        assert_eq!((one.n(), one.edge_count()), (1, 0));
        let g33 = Graph::grid(3, 3).unwrap();
        assert_eq!((g33.n(), g33.edge_count(), g33.max_degree()), (9, 12, 4));
        assert!(g33.is_certified_planar());
        assert!(Graph::grid(0, 3).is_err());
        assert!(matches!(Graph::grid(1 << 20, 1 << 20), Err(Error::SizeBudget { .. })));
    }

    #[test]
    fn tree_examples() {
        let t = Graph::complete_tree(2, 2).unwrap();
        assert_eq!((t.n(), t.edge_count(), t.max_degree()), (7, 6, 3));
        assert_eq!(Graph::complete_tree(5, 0).unwrap().n(), 1);
        let t43 = Graph::complete_tree(4, 3).unwrap();
        assert_eq!(t43.n(), 85);
        // internal non-root vertices have one parent and four children
        assert_eq!(t43.degree(1), 5);
        assert_eq!(t43.degree(0), 4);
        assert!(matches!(Graph::complete_tree(1000, 10), Err(Error::SizeBudget { .. })));
    }

    #[test]
    fn triangulation_examples() {
        let k3 = Graph::planar_triangulation(3, 1).unwrap();
        assert_eq!(k3, Graph::complete(3).unwrap());
        let k4 = Graph::planar_triangulation(4, 1).unwrap();
        assert_eq!(k4.edge_count(), 6);
        assert_eq!(k4.edges(), Graph::complete(4).unwrap().edges());
        let t = Graph::planar_triangulation(50, 7).unwrap();
        assert_eq!(t.edge_count(), 144);
        assert!(2.0 * t.edge_count() as f64 / 50.0 < 6.0);
        assert!(Graph::planar_triangulation(2, 0).is_err());
    }

    #[test]
    fn degeneracy_examples() {
        assert_eq!(degeneracy(&Graph::complete(3).unwrap()).d, 2);
        assert_eq!(degeneracy(&Graph::complete_tree(3, 3).unwrap()).d, 1);
        assert_eq!(degeneracy(&Graph::path(6).unwrap()).d, 1);
        let g = Graph::grid(3, 3).unwrap();
        let dd = degeneracy(&g);
        assert_eq!(dd.d, 2);
        assert!(dd.verify(&g));
        // lowest-id tie-break: corner 0 goes first
        assert_eq!(dd.order[0], 0);
    }

    #[test]
    fn codegree_examples() {
        let c4 = Graph::grid(2, 2).unwrap();
        assert_eq!(codegree(&c4, 0, 3).unwrap(), 2);
        let p3 = Graph::path(3).unwrap();
        assert_eq!(codegree(&p3, 0, 2).unwrap(), 1);
        let k4 = Graph::complete(4).unwrap();
        assert_eq!(codegree(&k4, 1, 2).unwrap(), 2);
        assert!(codegree(&k4, 1, 1).is_err());
    }

    #[test]
    fn round_trip_keeps_isolated_vertices() {
        let g = Graph::grid(1, 1).unwrap();
        let back = Graph::parse_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(back.n(), 1);
    }

    #[test]
    fn spec_strings() {
        assert_eq!(from_spec("grid:3:3").unwrap().n(), 9);
        assert_eq!(from_spec("tri:50:7").unwrap().edge_count(), 144);
        assert_eq!(from_spec("tri:5").unwrap(), Graph::planar_triangulation(5, 0).unwrap());
        assert_eq!(from_spec("tree:2:2").unwrap().n(), 7);
        assert_eq!(from_spec("bipartite:2:3").unwrap().edge_count(), 6);
        assert!(from_spec("grid:3").is_err());
        assert!(from_spec("blob:3").is_err());
        assert!(from_spec("path:x").is_err());
        assert!(suite().iter().all(|(_, g)| g.n() > 0));
    }
}
