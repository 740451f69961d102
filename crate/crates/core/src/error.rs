use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("block size {0} is not a power of two")]
    BlockSizeNotPowerOfTwo(u64),
    #[error("cache must have at least one way")]
    NoWays,
    #[error("capacity {capacity} is not divisible by block_size * ways ({block_size} * {ways})")]
    UnevenCapacity { capacity: u64, block_size: u64, ways: usize },
    #[error("set count {0} is not a power of two")]
    SetsNotPowerOfTwo(u64),
    #[error("threshold must be in 1..=255, got {0}")]
    Threshold(u32),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AddressError {
    #[error("address {addr:#x} exceeds the {bits}-bit address space")]
    OutOfRange { addr: u64, bits: u32 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Range { line: usize, source: AddressError },
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid combination: {0}")]
    InvalidCombination(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("checkpoint run did not terminate: {retries} consecutive failures rewound to safe point at instruction {safe_point}")]
    NonTermination { safe_point: u64, retries: u32 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing field `{0}`")]
    Missing(String),
}
