use crate::geometry::DualEdge;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("site set `{0}` is empty")]
    EmptySet(&'static str),
    #[error("`{0}` is not contained in the ambient region")]
    NotSubset(&'static str),
    #[error("depth d = {d} outside the admissible range ({lo}, {hi}]")]
    DepthOutOfRange { d: i64, lo: i64, hi: i64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("sector N = {particles} has dimension {dim}, above the cap {cap}")]
    SectorTooLarge {
        particles: usize,
        dim: usize,
        cap: usize,
    },
    #[error("Fock space of {modes} modes has dimension 2^{modes}, above the cap {cap}")]
    FockTooLarge { modes: usize, cap: usize },
    #[error("engine mismatch: {0}")]
    EngineMismatch(String),
    #[error("operator is not Hermitian (max residual {0:e})")]
    NotHermitian(f64),
    #[error("operators live on different mode indices")]
    ModeMismatch,
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },
    #[error("dual edge {0} is missing from the current field")]
    MissingEdge(DualEdge),
    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error("config: {0}")]
    Config(String),
    #[error("spectrum cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
