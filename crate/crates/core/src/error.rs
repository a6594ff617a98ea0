use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("metric degenerate at chart {chart} x={x:?} (pivot {pivot:.3e})")]
    MetricDegenerate { chart: usize, x: Vec<f64>, pivot: f64 },

    #[error("frame not orthonormal at chart {chart} x={x:?}: Gram deviation {deviation:.3e}")]
    FrameNotOrthonormal { chart: usize, x: Vec<f64>, deviation: f64 },

    #[error("frame degenerate at chart {chart} x={x:?}")]
    FrameDegenerate { chart: usize, x: Vec<f64> },

    #[error("differentiation failed: {0}")]
    DifferentiationError(String),

    #[error("point x={x:?} outside guard of chart {chart} ({guard})")]
    OutOfChart { chart: usize, x: Vec<f64>, guard: String },

    #[error("parallel transport diverged at t={t}")]
    TransportDiverged { t: f64 },

    #[error("integrator step failure at t={t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("more than {max} chart switches")]
    ChartExhausted { max: usize },

    #[error("model `{0}` does not declare an integrable vertical foliation")]
    FoliationNotDeclared(String),

    #[error("model `{0}` does not declare a submersion")]
    SubmersionNotDeclared(String),

    #[error("horizontal lift diverged at t={t}: {reason}")]
    LiftDiverged { t: f64, reason: String },

    #[error("model `{0}` is not a principal bundle")]
    NotPrincipalBundle(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("declared property `{property}` of `{model}` contradicted by diagnostics (residual {residual:.3e})")]
    DeclarationMismatch { model: String, property: String, residual: f64 },
}

pub type Result<T> = std::result::Result<T, GeoError>;
