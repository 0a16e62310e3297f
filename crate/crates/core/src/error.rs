use thiserror::Error;

pub type Result<T> = std::result::Result<T, NcfError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NcfError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty digit sequence")]
    EmptySequence,

    #[error("grid resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("compute budget exceeded: {required} units requested, cap is {cap}")]
    Budget { required: u64, cap: u64 },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(NcfError::Domain(msg.into()))
}

pub(crate) fn check_unit(x: f64, what: &str) -> Result<()> {
    if !x.is_finite() || !(0.0..=1.0).contains(&x) {
        return domain(format!("{what} = {x} is not in [0, 1]"));
    }
    Ok(())
}
