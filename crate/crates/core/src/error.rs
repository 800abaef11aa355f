use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which side of the country × product table an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Axis {
    Country,
    Product,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Country => f.write_str("country"),
            Axis::Product => f.write_str("product"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid trade record: {0}")]
    InvalidRecord(String),
    #[error("no trade records for year {0}")]
    NoDataForYear(i32),
    #[error("country {country} has no records in year {year}")]
    MissingPeriod { country: String, year: i32 },
    #[error("zero {axis} total for `{label}`")]
    ZeroMarginal { axis: Axis, label: String },
    #[error("no {0} products present")]
    MissingKind(&'static str),
    #[error("incidence matrix is empty after pruning")]
    EmptyAfterPrune,
    #[error("invalid incidence matrix: {0}")]
    InvalidIncidence(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("selected eigenvalue is complex (imaginary part {0:e})")]
    ComplexEigenvalue(f64),
    #[error("eigenvector residual {residual:e} exceeds tolerance {tol:e}")]
    EigenResidual { residual: f64, tol: f64 },
    #[error("singular update at {product}: sum of (N_c - c_i) over exporters is {denominator:e} after {iteration} iterations")]
    SingularUpdate {
        product: String,
        denominator: f64,
        iteration: usize,
    },
    #[error("only {0} shared labels; at least 3 are needed")]
    InsufficientOverlap(usize),
    #[error("ranking `{0}` is constant; correlation undefined")]
    ConstantRanking(&'static str),
    #[error("series share no years")]
    NoCommonYears,
    #[error("box statistics need at least 4 values, got {0}")]
    TooFewPoints(usize),
    #[error("design matrix is rank deficient; collinear columns: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("clustered errors need at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("unknown regressor `{0}`")]
    UnknownRegressor(String),
    #[error("not enough observations: {n_obs} for {n_params} parameters")]
    TooFewObservations { n_obs: usize, n_params: usize },
}
