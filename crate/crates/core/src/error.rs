use thiserror::Error;

/// Errors surfaced by the verification library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("the Collatz map is defined on positive integers only (got 0)")]
    ZeroInput,

    #[error("level {level} exceeds the supported maximum {max}")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("parity formula for T^{k}({n}) did not divide exactly by 2^{k}")]
    InexactDivision { n: String, k: u32 },

    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("trajectory reached {value}, outside the truncation [1, {truncation}]")]
    TruncationEscape { value: String, truncation: u64 },

    #[error("trajectory of {0} is unresolved within the iteration cap")]
    Unresolved(u64),

    #[error("the -1 eigenvector needs an even-length cycle (length {length})")]
    OddLengthCycle { length: usize },

    #[error("|1 + x^(2^{k})| = {distance:e} is too close to a pole")]
    PoleProximity { k: u32, distance: f64 },

    #[error("cutoff {r} outside the open interval (1, {upper})")]
    CutoffOutOfRange { r: u64, upper: u64 },

    #[error("image rank {found} differs from the expected {expected}")]
    RankDeficiency { expected: usize, found: usize },

    #[error("step function evaluated outside its represented range: {0}")]
    InsufficientRange(String),

    #[error("prefix length {prefix} exceeds the period 2^{level}")]
    PrefixTooLarge { prefix: u64, level: u32 },

    #[error("word term ({i}, {j}) exceeds the truncation level {k_max}")]
    WordOutOfRange { i: u32, j: u32, k_max: u32 },

    #[error("relative entropy argument {0} is outside (1/2, 1)")]
    DOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
