use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NotConverged { sweeps: usize, off_norm: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("degenerate subspace split: {0}")]
    DegenerateSplit(String),

    #[error("degenerate minimum-norm weight: first coordinate lies in the signal subspace")]
    DegenerateWeight,

    #[error("insufficient aperture: {0}")]
    InsufficientAperture(String),

    #[error("regression fit failed: {0}")]
    Fit(String),

    #[error("chart assembly failed: {0}")]
    Assembly(String),

    #[error("{module} failed on UE {ue}: {source}")]
    Estimation {
        module: &'static str,
        ue: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_ue(self, module: &'static str, ue: usize) -> Self {
        Error::Estimation {
            module,
            ue,
            source: Box::new(self),
        }
    }
}
