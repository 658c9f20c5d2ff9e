use thiserror::Error;

/// Errors raised anywhere in the simulator.
///
/// Every variant belongs to exactly one module; [`Error::module`] reports it so
/// front ends can prefix diagnostics with their origin.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("target resistance {value} Ω violates {bound} bound {limit} Ω")]
    Range {
        value: f64,
        bound: &'static str,
        limit: f64,
    },

    #[error("invalid device parameters: {0}")]
    DeviceParams(String),

    #[error(
        "no bracketing drift gain in [{lo:e}, {hi:e}]: residuals {residual_lo:e} Ω and {residual_hi:e} Ω"
    )]
    Calibration {
        lo: f64,
        hi: f64,
        residual_lo: f64,
        residual_hi: f64,
    },

    #[error("invalid netlist: {0}")]
    Netlist(String),

    #[error("assembly failed: element `{element}` has no memristance in the snapshot")]
    Assembly { element: String },

    #[error("singular system at pivot `{pivot}`{}", at.map(|t| format!(" (t = {t:e} s)")).unwrap_or_default())]
    Singular { pivot: String, at: Option<f64> },

    #[error("invalid cell configuration: {0}")]
    Config(String),

    #[error("invalid write pattern: {0}")]
    Pattern(String),

    #[error("unknown topology `{0}`")]
    Topology(String),

    #[error("non-positive resistance {0} Ω in closed-form readout")]
    Domain(f64),

    #[error("length mismatch: {left} memristances vs {right} resistors")]
    LengthMismatch { left: usize, right: usize },

    #[error("missing reference state for sub-cell {subcell} (R = {r_sub} Ω), digit {digit}")]
    Data {
        subcell: usize,
        r_sub: f64,
        digit: u8,
    },
}

impl Error {
    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Range { .. } | Error::DeviceParams(_) | Error::Calibration { .. } => "device",
            Error::Netlist(_) | Error::Assembly { .. } | Error::Singular { .. } => "circuit",
            Error::Config(_) | Error::Pattern(_) | Error::Topology(_) => "cell",
            Error::Domain(_) | Error::LengthMismatch { .. } => "readout",
            Error::Data { .. } => "analysis",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
