use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0:?} lies outside the configured domain")]
    PointOutsideDomain(Vec<f64>),
    #[error("geodesic did not exit before t_max = {t_max}")]
    TrappedGeodesic { t_max: f64 },
    #[error("start direction is tangential to the boundary")]
    TangentialStart,
    #[error("Fermi chart degenerate: {0}")]
    ChartDegenerate(String),
    #[error("cover infeasible: intersection times {0} and {1} are too close")]
    CoverInfeasible(f64, f64),
    #[error("Riccati solution lost positivity at t = {t} (min eig of Im H = {min_eig:e})")]
    RiccatiDegenerate { t: f64, min_eig: f64 },
    #[error("point (t = {t}, y = {y:?}) lies outside the beam tube")]
    PointOutsideTube { t: f64, y: Vec<f64> },
    #[error("Cauchy transform quadrature diverged: residual {0:e}")]
    QuadratureDiverged(f64),
    #[error("adjacent amplitude profiles disagree by {0:e} on their overlap")]
    OverlapMismatch(f64),
    #[error("type-2 amplitudes need a geodesic without self-intersections")]
    Type2SelfIntersection,
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("test function does not vanish on the boundary (max |psi| = {0:e})")]
    BoundaryConditionViolated(f64),
    #[error("field is not closed: x'-slot mismatch {0:e}")]
    NotClosed(f64),
    #[error("ill-posed geodesic family: {0}")]
    IllPosedFamily(String),
    #[error("probe support escapes the boundary chart: {0}")]
    SupportEscapesChart(String),
    #[error("direction set is singular (rank {rank} < {needed})")]
    SingularDirectionSet { rank: usize, needed: usize },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io: {0}")]
    Io(String),
    #[error("experiment {experiment}: {source}")]
    Experiment { experiment: String, source: Box<Error> },
}

impl Error {
    /// The error beneath any experiment context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Experiment { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
