use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph is not connected: vertex `{0}` is unreachable from the basepoint")]
    Disconnected(String),

    #[error("weight of vertex `{vertex}` must be positive, got {weight}")]
    NonPositiveWeight { vertex: String, weight: f64 },

    #[error("basepoint `{vertex}` must have weight 1, got {weight}")]
    BasepointWeight { vertex: String, weight: f64 },

    #[error("basepoint weight must be minimal: vertex `{vertex}` has weight {weight} < 1")]
    BasepointNotMinimal { vertex: String, weight: f64 },

    #[error("parameter `{name}` must be at least {min}, got {got}")]
    ParameterTooSmall { name: &'static str, min: usize, got: usize },

    #[error("{what}: {count} basis elements exceed the budget of {budget}")]
    BudgetExceeded { what: &'static str, count: u128, budget: usize },

    #[error("directed edge {0} is not in the directed double")]
    UnknownEdge(usize),

    #[error("edge sequence is not a path: edge {0} does not start where the previous one ends")]
    NotAPath(usize),

    #[error("path is not a loop at the basepoint")]
    NotALoop,

    #[error("depth {depth} is too small, at least {needed} is required")]
    InsufficientDepth { needed: usize, depth: usize },

    #[error("direct and recursive Wick realizations of {word:?} differ by {max_diff:e}")]
    WickMismatch { word: Vec<usize>, max_diff: f64 },

    #[error("element is not homogeneous (degrees {0:?})")]
    NotHomogeneous(Vec<usize>),

    #[error("element is not self-adjoint")]
    NotSelfAdjoint,

    #[error("seminorm vanishes on a nonscalar direction")]
    DegenerateDirection,

    #[error("singular Gram matrix in degree {0}")]
    SingularGram(usize),

    #[error("linear program failed: {0}")]
    Infeasible(String),

    #[error("family does not converge locally: {0}")]
    NotConvergent(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("corrupt serialized data: {0}")]
    Corrupt(String),
}
