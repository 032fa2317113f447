use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not an admissible prime")]
    InvalidPrime(u64),
    #[error("determinant {det} is not 1 modulo {p}")]
    NonUnitDeterminant { p: u32, det: u32 },
    #[error("elements live over different primes ({0} vs {1})")]
    PrimeMismatch(u32, u32),
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("generator index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: i64, rank: usize },
    #[error("invalid rank {0}")]
    InvalidRank(usize),
    #[error("invalid genus {0}")]
    InvalidGenus(usize),
    #[error("genus mismatch: expected {expected}, found {found}")]
    GenusMismatch { expected: usize, found: usize },
    #[error("tuple does not generate PSL(2,{0})")]
    NotGenerating(u32),
    #[error("canonical tuple missing from class table (internal invariant violated)")]
    NotInTable,
    #[error("resource limit: estimated {estimated} tuple visits exceeds budget {budget}")]
    ResourceLimit { estimated: u128, budget: u64 },
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("matrix is plus or minus the identity")]
    MatrixIsIdentity,
    #[error("the word is trivial")]
    TrivialWord,
    #[error("no witness prime found up to {0}")]
    PrimeCeilingExceeded(u32),
    #[error("group order must be positive")]
    InvalidOrder,
    #[error("automorphism does not stabilize the handlebody kernel: image of {generator} escapes")]
    NotStabilizing { generator: String },
    #[error("not an automorphism: {0}")]
    InvalidAutomorphism(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("cache format error: {0}")]
    CacheFormat(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
