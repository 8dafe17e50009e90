use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("cell {cell} is degenerate (signed area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("non-finite value {value} at vertex {vertex}")]
    NonFiniteValue { vertex: usize, value: f64 },

    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("meshes are not nested: coarse level {coarse}, fine level {fine}")]
    NotNested { coarse: usize, fine: usize },

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("matrix is singular to working precision at pivot {pivot}")]
    Singular { pivot: usize },

    #[error("block ({row}, {col}) is required but missing")]
    MissingBlock { row: &'static str, col: &'static str },

    #[error("Newton iteration failed after {} iterations (residual history {history:?})", history.len())]
    NewtonFailed { history: Vec<f64> },

    #[error("non-finite residual in Newton iteration {iteration}")]
    NonFiniteResidual { iteration: usize },

    #[error("input is not mean free: <v,1> = {mean:e} with |v| = {norm:e}")]
    NotMeanFree { mean: f64, norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("monolithic solver refused: {dofs} unknowns exceed the cap of {cap}")]
    TooManyDofs { dofs: usize, cap: usize },
}
