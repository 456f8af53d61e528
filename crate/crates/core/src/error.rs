use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("standard family needs n >= 2 (got n = {0})")]
    ParameterTooSmall(u64),
    #[error("parameters overflow the supported integer range: {0}")]
    Overflow(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("d = {d} is not divisible by p^L = {p}^{levels}")]
    Divisibility { d: usize, p: usize, levels: u32 },
    #[error("support({level}) = {support} is odd; double simplices need even supports when p > 2")]
    SupportParity { level: u32, support: usize },
    #[error("step(L) = {step} must be below q/2 = {half}")]
    StepTooLarge { step: u64, half: u64 },
    #[error("level {level} out of range 0..={max}")]
    LevelOutOfRange { level: u32, max: u32 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {value} at position {index} is not a residue mod {q}")]
    CoordinateOutOfRange { index: usize, value: u64, q: u64 },
    #[error("segment is not classified at any level")]
    Unclassified,
    #[error("segment levels differ ({0} vs {1})")]
    LevelMismatch(u32, u32),
    #[error("enumeration budget exceeded: need {needed} {what}, budget is {budget}")]
    BudgetExceeded { what: &'static str, needed: String, budget: u64 },
    #[error("map cannot be evaluated in exact rational arithmetic: {0}")]
    NotExact(String),
    #[error("tabulated map has no entry for point {0}")]
    MissingTableEntry(String),
    #[error("malformed table: {0}")]
    Table(String),
    #[error("malformed configuration: {0}")]
    Config(String),
    #[error("sample count must be at least {min} (got {got})")]
    TooFewSamples { min: usize, got: usize },
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(usize),
    #[error("({0}, {1}) is not an edge of the graph")]
    NotAnEdge(usize, usize),
    #[error("graph is disconnected: vertex {0} is unreachable from the root")]
    Disconnected(usize),
    #[error("invalid spanning tree: {0}")]
    InvalidTree(String),
    #[error("word search exhausted its memory cap before deciding length {0}")]
    SearchExhausted(usize),
    #[error("ball radius insufficient: {0}")]
    InsufficientRadius(String),
}
