use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("problem has no nodes")]
    NoNodes,
    #[error("dual dimension must be positive")]
    ZeroDualDim,
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: String,
    },
    #[error("multiplier entry {index} is {value}, expected a finite nonnegative value")]
    NegativeMultiplier { index: usize, value: f64 },
    #[error("allocation stamped {allocation:?} does not match state stamped {state:?}")]
    StampMismatch {
        allocation: (usize, u64),
        state: (usize, u64),
    },
    #[error("invalid problem specification: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("no best response: {0}")]
    NoBestResponse(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DelayError {
    #[error("subset size {m} must lie in [1, {k}]")]
    SubsetSize { m: usize, k: usize },
    #[error("update budget [{min}, {max}] must satisfy 1 <= min <= max")]
    InvalidBudget { min: usize, max: usize },
    #[error("constant delay {c} exceeds the delay bound {tau_max}")]
    ConstantExceedsBound { c: u64, tau_max: u64 },
    #[error("{schedule} schedule cannot drive the {engine} engine")]
    Incompatible {
        schedule: &'static str,
        engine: &'static str,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("step size must be positive and finite, got {0}")]
    NonPositive(f64),
    #[error("decay exponent alpha must be in (1/2, 1), got {0}")]
    AlphaOutOfRange(f64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("oracle at node {node}, slot {slot}{}: {source}", cycle.map(|c| format!(", cycle {c}")).unwrap_or_default())]
    Oracle {
        node: usize,
        slot: u64,
        cycle: Option<u64>,
        #[source]
        source: OracleError,
    },
    #[error("ring order must be a permutation of 0..{0}")]
    InvalidRing(usize),
    #[error("initial point has dimension {found}, expected {expected}")]
    InitDimension { expected: usize, found: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Delay(#[from] DelayError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("reference problem is infeasible: {0}")]
    Infeasible(String),
    #[error("grid too coarse: duality gap {gap:.4e} exceeds tolerance {tolerance:.4e}; refine the grid or add samples")]
    Resolution { gap: f64, tolerance: f64 },
    #[error("brute force needs at most {max_nodes} nodes and {max_dim} constraints")]
    TooLarge { max_nodes: usize, max_dim: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}
