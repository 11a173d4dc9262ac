use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("prime windows degenerate for N = {n}: set construction needs N >= 16")]
    DegenerateWindow { n: u64 },

    #[error("prime window P is empty for N = {n}")]
    EmptyWindow { n: u64 },

    #[error("sieve bound {hi} exceeds the configured cap {cap}")]
    SieveCap { hi: u64, cap: u64 },

    #[error("enumeration would produce {count} elements, above the cap of {cap}")]
    EnumerationCap { count: u128, cap: usize },

    #[error("zeta tolerance {tol:e} unreachable at s = {sigma} + {t}i")]
    ToleranceUnreachable { sigma: f64, t: f64, tol: f64 },

    #[error("log zeta continuation failed at {sigma} + {t}i: {reason}")]
    Continuation { sigma: f64, t: f64, reason: String },

    #[error("quadrature did not converge: error estimate {err:e} above tolerance {tol:e}")]
    Quadrature { err: f64, tol: f64 },

    #[error("zero indicator vanishes at t = {t}: {reason}")]
    IndicatorRefusal { t: f64, reason: String },

    #[error("cost guard exceeded for {what}: {cost:e} > {limit:e}")]
    CostGuard { what: &'static str, cost: f64, limit: f64 },

    #[error("{what} violated at t = {t}: {lhs} > {rhs}")]
    BoundViolated {
        what: &'static str,
        t: f64,
        lhs: f64,
        rhs: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for refusals caused by caller input rather than internal failure.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::Domain { .. }
                | Error::DegenerateWindow { .. }
                | Error::EmptyWindow { .. }
                | Error::IndicatorRefusal { .. }
                | Error::Precondition(_)
                | Error::CostGuard { .. }
                | Error::EnumerationCap { .. }
                | Error::SieveCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
