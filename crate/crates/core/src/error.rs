use thiserror::Error;

#[derive(Debug, Error)]
pub enum NrError {
    #[error("matrix shape error: {0}")]
    Shape(String),

    #[error("expected a {expected}x{expected} matrix, got {found}x{found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not nilpotent (‖A^n‖ relative residual {residual:.3e})")]
    NotNilpotent { residual: f64 },

    #[error("{routine} did not converge after {iterations} iterations")]
    NonConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error("interpolated polynomial has imaginary residue {0:.3e} above tolerance")]
    ImaginaryResidue(f64),

    #[error("interpolation system is singular")]
    SingularInterpolation,

    #[error("degenerate Hessian at singularity ({0})")]
    DegenerateHessian(String),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, NrError>;
