use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A gradient, prox output or energy became non-finite; usually the
    /// step-size parameters are divergent.
    #[error("non-finite value: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Backtracking pushed the Lipschitz estimate beyond the growth cap.
    #[error("Lipschitz estimate {lipschitz:e} exceeded cap {cap:e} at iteration {iteration}")]
    NonSmooth {
        iteration: usize,
        lipschitz: f64,
        cap: f64,
    },

    #[error("degenerate inpainting mask: {0}")]
    DegenerateMask(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("image format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numbers rather than by the setup.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::NonSmooth { .. }
                | Error::DegenerateMask(_)
                | Error::Singular(_)
                | Error::NoConvergence(_)
        )
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, got })
    }
}
