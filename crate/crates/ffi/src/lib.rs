//! C ABI over the `colorchain` library.
//!
//! Graphs, level partitions and chains are opaque heap handles created by a
//! `cc_*_new`/`cc_*_from_*` call and released by the matching `cc_*_free`.
//! Every fallible call returns a [`CcStatus`]; on failure the message is
//! available from [`cc_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use colorchain::dynamics::{degeneracy_coloring, glauber_step, run_set_dynamics, ChainState, RoundMode};
use colorchain::graph::{degeneracy, from_spec};
use colorchain::oracle::{enumerate_colorings, DEFAULT_BUDGET};
use colorchain::spectral::{build_levels, choose_epsilon, power_iterate, LevelPartition, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use colorchain::{Error, Graph};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    NoSpectralGap = 4,
    NoConvergence = 5,
    LevelExpansion = 6,
    ImproperColoring = 7,
    BudgetExceeded = 8,
    Io = 9,
    Internal = 10,
}

pub struct CcGraph {
    graph: Graph,
}

pub struct CcPartition {
    partition: LevelPartition,
}

pub struct CcChain {
    graph: Graph,
    state: ChainState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

fn status_of(err: &Error) -> CcStatus {
    match err {
        Error::Parse { .. } | Error::SelfLoop { .. } | Error::VertexOutOfRange { .. } => CcStatus::Parse,
        Error::NoSpectralGap { .. } => CcStatus::NoSpectralGap,
        Error::NoConvergence { .. } => CcStatus::NoConvergence,
        Error::LevelExpansion { .. } => CcStatus::LevelExpansion,
        Error::ImproperColoring | Error::PaletteExhausted { .. } => CcStatus::ImproperColoring,
        Error::BudgetExceeded { .. } | Error::SizeBudget { .. } => CcStatus::BudgetExceeded,
        Error::Io(_) => CcStatus::Io,
        Error::Invariant(_) | Error::Postcondition { .. } => CcStatus::Internal,
        _ => CcStatus::InvalidArgument,
    }
}

/// Runs `body`, recording any error or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), (CcStatus, String)>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            CcStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("panic inside colorchain");
            CcStatus::Internal
        }
    }
}

fn lib(err: Error) -> (CcStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (CcStatus, String) {
    (CcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CcStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (CcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message for the most recent failed call on this thread, or "" after a
/// success. The pointer stays valid until the next `cc_*` call.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a graph from a generator spec such as `grid:3:3` or `tri:50:7`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_graph_from_spec(spec: *const c_char, out: *mut *mut CcGraph) -> CcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = from_spec(text(spec, "spec")?).map_err(lib)?;
        put(out, CcGraph { graph });
        Ok(())
    })
}

/// Parses the whitespace-separated edge-list format.
///
/// # Safety
/// `edges` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_graph_from_edge_list(edges: *const c_char, out: *mut *mut CcGraph) -> CcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = Graph::parse_edge_list(text(edges, "edges")?).map_err(lib)?;
        put(out, CcGraph { graph });
        Ok(())
    })
}

/// # Safety
/// `graph` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cc_graph_free(graph: *mut CcGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_graph_vertex_count(graph: *const CcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.n())
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_graph_edge_count(graph: *const CcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.edge_count())
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_graph_max_degree(graph: *const CcGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.graph.max_degree())
}

/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_graph_degeneracy(graph: *const CcGraph) -> usize {
    graph.as_ref().map_or(0, |g| degeneracy(&g.graph).d)
}

/// Level sets from the perturbed Perron vector. A non-positive `epsilon`
/// selects it from the spectral gap.
///
/// # Safety
/// `graph` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_partition_new(
    graph: *const CcGraph,
    epsilon: f64,
    seed: u64,
    out: *mut *mut CcPartition,
) -> CcStatus {
    guard(|| {
        let g = &graph.as_ref().ok_or_else(|| null("graph"))?.graph;
        if out.is_null() {
            return Err(null("out"));
        }
        let eigen = power_iterate(g, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERS, seed).map_err(lib)?;
        let eps = if epsilon > 0.0 { epsilon } else { choose_epsilon(g, &eigen).map_err(lib)? };
        let partition = build_levels(g, &eigen, eps).map_err(lib)?;
        put(out, CcPartition { partition });
        Ok(())
    })
}

/// # Safety
/// `partition` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cc_partition_free(partition: *mut CcPartition) {
    if !partition.is_null() {
        drop(Box::from_raw(partition));
    }
}

/// Number of levels, or 0 for a null handle.
///
/// # Safety
/// `partition` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_partition_level_count(partition: *const CcPartition) -> usize {
    partition.as_ref().map_or(0, |p| p.partition.m())
}

/// # Safety
/// `partition` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_partition_epsilon(partition: *const CcPartition) -> f64 {
    partition.as_ref().map_or(f64::NAN, |p| p.partition.epsilon)
}

/// Writes the level of every vertex into `levels[0..len]`; `len` must equal
/// the vertex count.
///
/// # Safety
/// `partition` must be a live handle and `levels` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn cc_partition_levels(partition: *const CcPartition, levels: *mut usize, len: usize) -> CcStatus {
    guard(|| {
        let p = &partition.as_ref().ok_or_else(|| null("partition"))?.partition;
        if levels.is_null() {
            return Err(null("levels"));
        }
        if len != p.level_of.len() {
            return Err(lib(Error::LengthMismatch { expected: p.level_of.len(), got: len }));
        }
        std::slice::from_raw_parts_mut(levels, len).copy_from_slice(&p.level_of);
        Ok(())
    })
}

/// A chain over `k`-colorings started from the greedy degeneracy coloring.
/// The chain keeps its own copy of the graph.
///
/// # Safety
/// `graph` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_new(graph: *const CcGraph, k: u32, seed: u64, out: *mut *mut CcChain) -> CcStatus {
    guard(|| {
        let g = &graph.as_ref().ok_or_else(|| null("graph"))?.graph;
        if out.is_null() {
            return Err(null("out"));
        }
        let start = degeneracy_coloring(g, &degeneracy(g), k).map_err(lib)?;
        let state = ChainState::seeded(g, start, seed).map_err(lib)?;
        put(out, CcChain { graph: g.clone(), state });
        Ok(())
    })
}

/// # Safety
/// `chain` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_free(chain: *mut CcChain) {
    if !chain.is_null() {
        drop(Box::from_raw(chain));
    }
}

/// Runs `steps` single-site heat-bath updates.
///
/// # Safety
/// `chain` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_glauber(chain: *mut CcChain, steps: u64) -> CcStatus {
    guard(|| {
        let c = chain.as_mut().ok_or_else(|| null("chain"))?;
        for _ in 0..steps {
            glauber_step(&mut c.state, &c.graph, None).map_err(lib)?;
        }
        Ok(())
    })
}

/// Runs `rounds` rounds of level-set dynamics with random level choice.
///
/// # Safety
/// `chain` and `partition` must be live handles.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_set_dynamics(chain: *mut CcChain, partition: *const CcPartition, rounds: u64) -> CcStatus {
    guard(|| {
        let c = chain.as_mut().ok_or_else(|| null("chain"))?;
        let p = &partition.as_ref().ok_or_else(|| null("partition"))?.partition;
        if p.level_of.len() != c.graph.n() {
            return Err(lib(Error::LengthMismatch { expected: c.graph.n(), got: p.level_of.len() }));
        }
        run_set_dynamics(&mut c.state, &c.graph, p, rounds, RoundMode::Random).map_err(lib)?;
        Ok(())
    })
}

/// Copies the current coloring (colors 1..=k) into `colors[0..len]`; `len`
/// must equal the vertex count.
///
/// # Safety
/// `chain` must be a live handle and `colors` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn cc_chain_coloring(chain: *const CcChain, colors: *mut u32, len: usize) -> CcStatus {
    guard(|| {
        let c = chain.as_ref().ok_or_else(|| null("chain"))?;
        if colors.is_null() {
            return Err(null("colors"));
        }
        let current = c.state.coloring().colors();
        if len != current.len() {
            return Err(lib(Error::LengthMismatch { expected: current.len(), got: len }));
        }
        std::slice::from_raw_parts_mut(colors, len).copy_from_slice(current);
        Ok(())
    })
}

/// Counts proper `k`-colorings by exhaustive enumeration (bounded budget).
///
/// # Safety
/// `graph` must be a live handle and `count` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_count_colorings(graph: *const CcGraph, k: u32, count: *mut u64) -> CcStatus {
    guard(|| {
        let g = &graph.as_ref().ok_or_else(|| null("graph"))?.graph;
        if count.is_null() {
            return Err(null("count"));
        }
        *count = enumerate_colorings(g, k, DEFAULT_BUDGET).map_err(lib)?.len() as u64;
        Ok(())
    })
}
