use thiserror::Error;

use crate::graph::Vertex;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: Vertex },

    #[error("vertex id {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: Vertex, n: usize },

    #[error("graph size {requested} exceeds the budget of {budget} vertices")]
    SizeBudget { requested: u128, budget: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("no spectral gap: graph outside rho <= Delta^(1-eps) regime (rho' = {rho:.6}, Delta = {max_degree})")]
    NoSpectralGap { rho: f64, max_degree: usize },

    #[error("level-set expansion bound violated at vertex {vertex}: {count} neighbors outside lower levels, bound {bound:.6}")]
    LevelExpansion { vertex: Vertex, count: usize, bound: f64 },

    #[error("color {color} at vertex {vertex} outside palette 1..={k}")]
    ColorOutOfRange { vertex: Vertex, color: u32, k: u32 },

    #[error("coloring has {got} entries, graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },

    #[error("coloring is not proper")]
    ImproperColoring,

    #[error("level {level} is not an independent set; sweep mode rejected")]
    NotIndependent { level: usize },

    #[error("palette exhausted at vertex {vertex}")]
    PaletteExhausted { vertex: Vertex },

    #[error("layered construction stalled with {remaining} vertices left (k = {k})")]
    LayerStalled { remaining: usize, k: u32 },

    #[error("internal invariant failed: {0}")]
    Invariant(String),

    #[error("enumeration budget {budget} exceeded after {partial} colorings")]
    BudgetExceeded { budget: usize, partial: usize },

    #[error("distribution not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("postcondition failed at vertex {vertex}: {message}")]
    Postcondition { vertex: Vertex, message: String },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
