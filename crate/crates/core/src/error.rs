use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid item id {token:?}")]
    InvalidToken { line: usize, token: String },
    #[error("empty database")]
    EmptyDatabase,
    #[error("bit vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{name} must be in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },
    #[error("item universe of {m} items is too large for exhaustive enumeration (max {max})")]
    UniverseTooLarge { m: usize, max: usize },
    #[error("vector weight {weight} exceeds padding target {alpha_count}")]
    WeightExceedsAlpha { weight: usize, alpha_count: usize },
    #[error("padded vectors must be one preprocess and one query vector")]
    RoleMismatch,
    #[error("both padded vectors are all-zero")]
    EmptyUnion,
    /// Every member of the level sits at the maximum support and that maximum
    /// equals the threshold, so the similarity gap the hash families rely on
    /// vanishes.
    #[error("degenerate level: maximum support {alpha_count} equals threshold {theta_count}")]
    DegenerateLevel {
        alpha_count: usize,
        theta_count: usize,
    },
    #[error("tolerance too small: sketch would need {lambda} rows")]
    ToleranceTooSmall { lambda: f64 },
    #[error("covering family too large: mask dimension {mask_dim} exceeds cap {cap}")]
    CoveringFamilyTooLarge { mask_dim: u32, cap: u32 },
    #[error("position {position} out of range for padded length {len}")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("report serialization failed: {0}")]
    Serialize(String),
}
