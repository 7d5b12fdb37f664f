use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("network must declare at least one node")]
    EmptyNetwork,
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate edge id `{0}`")]
    DuplicateEdge(String),
    #[error("unknown node `{node}` referenced by edge {edge}")]
    UnknownNode { edge: String, node: String },
    #[error("non-finite cost on edge {edge}")]
    NonFiniteCost { edge: String },
    #[error("capacity matrix is all zero")]
    ZeroCapacity,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("divergent completion: cycle {} has penalized cost {cost}", cycle.join(" -> "))]
    DivergentCompletion { cycle: Vec<String>, cost: f64 },
    #[error("resource cap exceeded: more than {limit} {what}")]
    ResourceCap { what: &'static str, limit: usize },
    #[error("no cutoff admits every detour pair within {rounds} completion rounds")]
    NoExhaustiveCutoff { rounds: usize },
    #[error("network is not v-complete for cutoff {cutoff} and penalty {penalty}")]
    NotComplete { cutoff: f64, penalty: f64 },

    #[error("node `{node}` has no {direction}-links and dangling policy is reject")]
    Dangling {
        node: String,
        direction: &'static str,
    },
    #[error("non-unique stationary distribution: chain is reducible")]
    Reducible,
    #[error("power iteration oscillates (periodic chain without damping)")]
    Oscillation,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("infinite divergence: mass at ({row}, {col}) outside product support")]
    InfiniteDivergence { row: usize, col: usize },
    #[error("node set must be nonempty")]
    EmptySet,

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 1 input, 2 numeric, 3 resource.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::DivergentCompletion { .. }
            | Error::ResourceCap { .. }
            | Error::NoExhaustiveCutoff { .. } => 3,
            Error::Reducible
            | Error::Oscillation
            | Error::NonConvergence { .. }
            | Error::InfiniteDivergence { .. }
            | Error::ZeroCapacity => 2,
            _ => 1,
        }
    }

    /// Tag the error with the pipeline stage that raised it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }
}
