use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state component `{0}` appears in both primitives")]
    DuplicateStateName(String),
    #[error("primitives do not share a common input space")]
    IncompatibleInputSpace,
    #[error("OCPs disagree on horizon or step size")]
    HorizonMismatch,
    #[error("primitive set needs exactly one ego-dynamics primitive, found {0}")]
    MissingDynamics(usize),
    #[error("primitive `{primitive}` reads `{name}`, which is not in the composed state")]
    UnresolvedRead { primitive: String, name: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("{0} primitive needs a target vehicle")]
    MissingTarget(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite rollout cost (sample {sample})")]
    NonFiniteCost { sample: usize },
    #[error("no lane to the {0} of lane {1}")]
    NoAdjacentLane(&'static str, usize),
    #[error("command {0} is not valid here")]
    UnsupportedCommand(String),
    #[error("chat API error: {0}")]
    Api(String),
    #[error("no valid command token in response")]
    Parse,
    #[error("spawn failed after {0} attempts")]
    SpawnFailure(usize),
    #[error("trace schema error at line {line}: {reason}")]
    TraceSchema { line: usize, reason: String },
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
