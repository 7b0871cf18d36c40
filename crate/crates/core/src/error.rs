use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("bad idx magic in {path}: expected 0x{expected:08x}, found 0x{found:08x}")]
    BadIdxMagic { path: String, expected: u32, found: u32 },

    #[error("truncated idx payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedIdx { path: String, expected: usize, found: usize },

    #[error("unexpected idx image shape in {path}: {rows}x{cols} (expected 28x28)")]
    IdxShape { path: String, rows: u32, cols: u32 },

    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    IdxCountMismatch { images: usize, labels: usize },

    #[error("label {label} out of digit range at item {index}")]
    LabelRange { index: usize, label: u8 },

    #[error("split needs {needed} items but only {available} are available")]
    InsufficientItems { needed: usize, available: usize },

    #[error("repeat index {index} out of range (plan has {repeats} repeats)")]
    RepeatOutOfRange { index: u32, repeats: u32 },

    #[error("invalid physiology: {0}")]
    InvalidPhysiology(String),

    #[error("{what} = {value_ms} ms is not a positive multiple of the {tick_ms} ms tick")]
    NotTickAligned { what: &'static str, value_ms: f64, tick_ms: f64 },

    #[error("stimulus pixel {pixel} outside the network's {n_input}-node input block")]
    PixelOutOfRange { pixel: u16, n_input: u32 },

    #[error("snapshot interval {every_ms} ms does not divide horizon {horizon_ms} ms")]
    SnapshotInterval { every_ms: f64, horizon_ms: f64 },

    #[error("edge sets differ: {0}")]
    TopologyMismatch(String),

    #[error("empty vocabulary: corpus has no paths")]
    EmptyVocabulary,

    #[error("empty embedding space")]
    EmptySpace,

    #[error("query dimension {query} does not match space dimension {space}")]
    DimensionMismatch { query: usize, space: usize },

    #[error("k = {k} too large for {rows} rows of dimension {dim}")]
    KTooLarge { k: usize, rows: usize, dim: usize },

    #[error("trajectories have mismatched sample times (item {index})")]
    RaggedTrajectories { index: usize },

    #[error("one-shot training needs exactly one example per class; class {class} has {count}")]
    OneShotClassCount { class: u8, count: usize },

    #[error("network file {path} has unsupported version {version}")]
    NetworkVersion { path: String, version: u32 },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Wrap with run context so experiment failures identify the stimulus/stage.
    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }
}
