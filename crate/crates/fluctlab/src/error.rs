use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Taylor order {0} not in {{1,2,3}}")]
    InvalidOrder(usize),
    #[error("reaction is not balanced (integral {0:e}); no standing wave")]
    Unbalanced(f64),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("no sign change for bracket over [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
    #[error("K = {k} too small: two layers need K above {k_min:.3}")]
    KTooSmall { k: f64, k_min: f64 },
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("non-positive data in log fit at index {0}")]
    NonPositive(usize),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("local window needs 2^{0} configurations, above the enumeration cap")]
    WindowTooLarge(usize),
    #[error("kernel table is not positive semidefinite (pivot {0:e})")]
    NotPsd(f64),
    #[error("dimension d = {0} unsupported here")]
    Dimension(usize),
    #[error("weight overflow: c*z_max = {0}")]
    WeightOverflow(f64),
    #[error("no crossing of rho_star in window at snapshot {0}")]
    NoCrossing(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
