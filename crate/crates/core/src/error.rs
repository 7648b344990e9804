use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("distance {distance} m is outside the path-loss model range (must be >= 1 m)")]
    OutOfModelRange { distance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("argument {s} outside the MGF domain (s must be < {limit})")]
    MgfDomain { s: f64, limit: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e} > tolerance {tolerance:e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("PA output {p_out} W exceeds the PA limit {p_max} W")]
    ConstraintViolation { p_out: f64, p_max: f64 },

    #[error("impedance singular at resonance (|denominator| = {0:e} ohm)")]
    ResonanceSingularity(f64),

    #[error("unstable load: |Z + Z0| = {0:e} ohm")]
    Instability(f64),

    #[error("differential resistance is singular at the peak point (V = {0} V)")]
    PeakSingularity(f64),

    #[error("resistance {r} ohm outside the realizable interval [{lo}, {hi}] ohm")]
    InfeasibleResistance { r: f64, lo: f64, hi: f64 },

    #[error("phase {phase} rad is not realizable by the unit cell{}", element.map(|i| format!(" (element {i})")).unwrap_or_default())]
    InfeasiblePhase { phase: f64, element: Option<usize> },

    #[error("amplitude {alpha} cannot be realized at phase {phase} rad")]
    ModelInversion { alpha: f64, phase: f64 },

    #[error("surface power budget {budget} W is below the minimum {minimum} W needed by the active elements")]
    InfeasibleBudget { budget: f64, minimum: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code category used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidGeometry(_) | Error::InvalidParameter(_) => 2,
            Error::Io(_) => 4,
            Error::AtIteration { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
