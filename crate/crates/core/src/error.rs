use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical input violates its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("deformation parameter lambda = {0} is below the admissible bound lambda >= -1/2")]
    LambdaOutOfRange(f64),

    #[error("Fock cutoff n_max = {0} is too small (n_max >= 2 required)")]
    CutoffTooSmall(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The Liouvillian has more than one stationary direction.
    #[error("steady state is not unique (smallest relative pivot {relative_pivot:.3e})")]
    DegenerateSteadyState { relative_pivot: f64 },

    #[error(
        "steady state failed validity checks: {reason} \
         (min eigenvalue {min_eigenvalue:.3e}, top Fock population {top_population:.3e}, residual {residual:.3e})"
    )]
    InvalidSteadyState {
        reason: String,
        min_eigenvalue: f64,
        top_population: f64,
        residual: f64,
    },

    #[error("truncation not converged: top Fock population {top_population:.3e} at n_max = {n_max} (limit {max_n_max})")]
    CutoffNotConverged {
        n_max: usize,
        max_n_max: usize,
        top_population: f64,
    },

    #[error("photon statistics undefined: mean photon number {0:.3e} is below 1e-14")]
    UndefinedStatistics(f64),

    #[error("numerical method failure: {0}")]
    Numerical(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
