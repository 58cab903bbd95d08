use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("subdifferential oracle unavailable at {point:?}: {reason}")]
    OracleUnavailable { point: Vec<f64>, reason: String },

    #[error("point {point:?} is not in the polytope (distance {distance:e})")]
    NotInPolytope { point: Vec<f64>, distance: f64 },

    #[error("epsilon {eps} too large: the epsilon-relative interior is empty beyond {max_feasible}")]
    EpsilonTooLarge { eps: f64, max_feasible: f64 },

    #[error("epsilon {eps} must be strictly below the prox-regularity radius {eps_bar}")]
    EpsilonNotBelowRadius { eps: f64, eps_bar: f64 },

    #[error("dimension of V is {dim_v}; the grid solver supports at most 3")]
    DimensionTooLarge { dim_v: usize },

    #[error("affine dimension {dim} is too large for facet enumeration")]
    HullDimensionTooLarge { dim: usize },

    #[error("invariant violated: {what}")]
    InvariantViolation { what: String, subspaces: Vec<Vec<Vec<f64>>> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("minimizer set at u = {u:?} splits into {clusters} clusters")]
    MultiCluster { u: Vec<f64>, clusters: usize },

    #[error("selection v(u) = {v:?} at u = {u:?} is not a minimizer for gbar = {gbar:?} (gap {gap:e})")]
    SelectionMismatch { u: Vec<f64>, v: Vec<f64>, gbar: Vec<f64>, gap: f64 },

    #[error("Jacobian of the manifold chart is rank deficient (rank {rank}, expected {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}
