use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("inconsistent paths: node {node} assigned both action {first} and action {second}")]
    InconsistentPaths {
        node: usize,
        first: usize,
        second: usize,
    },

    #[error("codec error: {0}")]
    Codec(String),

    #[error("degenerate network output: block {block} sums to zero")]
    DegenerateOutput { block: usize },

    #[error("index {index} out of range 1..={max}")]
    OutOfRange { index: usize, max: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    Divergence { epoch: usize, learning_rate: f64 },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("K = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("exhaustive selection over {subsets} subsets exceeds the budget of {budget}")]
    ExhaustiveBudget { subsets: u128, budget: u128 },

    #[error("best-response tree has {histories} histories, over the budget of {budget}")]
    SizeBudget { histories: u128, budget: u128 },

    #[error("parse error in {what}: {msg}")]
    Parse { what: String, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` failed (seed {seed}): {source}")]
    Stage {
        stage: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            what: what.into(),
            msg: msg.into(),
        }
    }

    /// Wraps an error with the pipeline stage and seed it happened under.
    pub fn in_stage(self, stage: &str, seed: u64) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                seed,
                source: Box::new(e),
            },
        }
    }
}
