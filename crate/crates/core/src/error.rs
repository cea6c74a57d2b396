use thiserror::Error;

/// Failure modes shared by every module of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Parameter(String),
    #[error("denominator modulus {modulus:e} below guard at x = {x}")]
    Domain { x: f64, modulus: f64 },
    #[error("momentum k = {0} is excluded for this model")]
    ExcludedMomentum(f64),
    #[error("limit did not converge: {0}")]
    Convergence(String),
    #[error("tolerance {requested:e} not met (error estimate {estimate:e})")]
    ToleranceNotMet { requested: f64, estimate: f64 },
    #[error("integrand decays too slowly (empirical exponent {0:.3})")]
    SlowDecay(f64),
    #[error("spectral parameter lies on the positive real cut")]
    OnCut,
    #[error("spectral parameter sits on a pole of the Green function")]
    AtPole,
    #[error("pole-order fit unstable: {0}")]
    FitUnstable(String),
    #[error("asymptotic regime not reached: {0}")]
    AsymptoteNotReached(String),
    #[error("triangle transform is singular (leading coefficient vanishes)")]
    SingularTransform,
    #[error("denominator vanishes: {0}")]
    ZeroDenominator(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
