use thiserror::Error;

pub type Result<T> = std::result::Result<T, GtmError>;

#[derive(Debug, Error)]
pub enum GtmError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("flat simplex: vertices are affinely dependent")]
    FlatSimplex,

    #[error("skew parameter exceeds the feasible range {max_r} for eps = {eps}")]
    SkewOutOfRange { eps: f64, max_r: f64 },

    #[error("underdetermined null space: {columns} columns but at least {needed} required")]
    UnderdeterminedNullSpace { columns: usize, needed: usize },

    #[error("null space dimension mismatch: rank(X1 - X2) = {found}, expected {expected}")]
    NullSpaceDimensionMismatch { expected: usize, found: usize },

    /// Carries the candidate points that were found (coordinates in the ambient space).
    #[error("expected {expected} extreme points, found {found}")]
    ExtremePointCount {
        expected: usize,
        found: usize,
        candidates: Vec<Vec<f64>>,
    },

    #[error("expected {expected} extreme rays, found {found}")]
    ExtremeRayCount {
        expected: usize,
        found: usize,
        candidates: Vec<Vec<f64>>,
    },

    /// `clusters` lists the member ids of every vertex cluster.
    #[error("found {found} vertex clusters, expected {expected}")]
    VertexClusterCount {
        expected: usize,
        found: usize,
        clusters: Vec<Vec<usize>>,
    },

    #[error("denoising annihilated sample: no point has at least {threshold} neighbours")]
    DenoisingAnnihilated { threshold: usize },

    #[error("M infeasible: could not draw a view with norm <= {bound} after {attempts} attempts")]
    MInfeasible { bound: f64, attempts: usize },

    #[error("power iteration failed to converge after {iterations} iterations")]
    PowerIteration { iterations: usize },

    #[error("degenerate ray: point {index} has norm {norm}")]
    DegenerateRay { index: usize, norm: f64 },

    #[error("not a projection: {0}")]
    NotProjection(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl GtmError {
    /// Short machine-readable code used in CSV rows and exit reporting.
    pub fn code(&self) -> &'static str {
        match self {
            GtmError::InvalidArgument(_) => "invalid_argument",
            GtmError::Shape(_) => "shape",
            GtmError::FlatSimplex => "flat_simplex",
            GtmError::SkewOutOfRange { .. } => "skew_out_of_range",
            GtmError::UnderdeterminedNullSpace { .. } => "underdetermined_null_space",
            GtmError::NullSpaceDimensionMismatch { .. } => "null_space_mismatch",
            GtmError::ExtremePointCount { .. } => "extreme_point_count",
            GtmError::ExtremeRayCount { .. } => "extreme_ray_count",
            GtmError::VertexClusterCount { .. } => "vertex_cluster_count",
            GtmError::DenoisingAnnihilated { .. } => "denoising_annihilated",
            GtmError::MInfeasible { .. } => "m_infeasible",
            GtmError::PowerIteration { .. } => "power_iteration",
            GtmError::DegenerateRay { .. } => "degenerate_ray",
            GtmError::NotProjection(_) => "not_projection",
            GtmError::Parse(_) => "parse",
            GtmError::Io(_) => "io",
            GtmError::Json(_) => "json",
        }
    }
}
