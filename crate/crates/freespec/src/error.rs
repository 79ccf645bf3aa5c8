use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("eigensolver did not converge on a {0}x{0} matrix")]
    EigenFailure(usize),
    #[error("singular value decomposition did not converge on a {0}x{1} matrix")]
    SvdFailure(usize, usize),
    #[error("could not split commutant spectrum after {0} attempts")]
    DegenerateSplit(usize),
    #[error("indeterminate: {0}")]
    Indeterminate(String),
    #[error("feasibility solver hit its iteration cap ({0} iterations)")]
    IterationLimit(usize),
    #[error("grading levels are not integral after normalization (worst rounding error {0:.3})")]
    AmbiguousLevels(f64),
    #[error("tuple is not block superdiagonal in the grading basis (off-pattern mass {0:.3e})")]
    NotSuperdiagonal(f64),
    #[error(
        "rank of the range matrix is ambiguous (singular value {0:.3e} inside the tolerance band)"
    )]
    RankAmbiguity(f64),
    #[error("point is not in the detailed boundary: {0}")]
    NotBoundary(String),
    #[error("no separation certificate: {0}")]
    NoCertificate(String),
    #[error("separating pencil has norm {0} at the boundary point")]
    NormDefect(f64),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("spectrahedron is unbounded along the sampled direction (scale cap {0:e})")]
    Unbounded(f64),
    #[error("polynomial is not monic: {0}")]
    NotMonic(String),
    #[error("polynomial exceeds the {0}")]
    TooLarge(String),
}
