use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared across the crate.
///
/// Numerical operations distinguish *refusals* (a precondition was violated,
/// e.g. a point outside the domain) from *diagnosed failures* (the computation
/// ran but could not certify its result, e.g. an accuracy or divergence signal).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("point {0} lies outside {1}")]
    OutsideDomain(Complex64, &'static str),

    #[error("point {z} is {dist:.3e} from a lens corner; evaluation refused below {limit:.1e}")]
    CornerProximity { z: Complex64, dist: f64, limit: f64 },

    #[error("derivative order {0} is not stocked (supported: 1..=4)")]
    UnsupportedOrder(u32),

    #[error("kernel evaluation too close to the boundary singularity: |1 - z·conj(w)| = {0:.3e}")]
    NearSingular(f64),

    #[error("inverse map did not converge after {iterations} iterations (best residual {residual:.3e})")]
    InverseDiverged { iterations: u32, residual: f64 },

    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Accuracy { estimate: f64, tolerance: f64 },

    #[error("non-integrable tail: {0}")]
    DivergentIntegral(String),

    #[error("no closed form is stocked for {0}")]
    UnsupportedClosedForm(String),

    #[error("moment table for {domain} has no entry at (j, k) = ({j}, {k})")]
    MissingMoment { domain: &'static str, j: u32, k: u32 },

    #[error("{0}")]
    Precondition(String),

    #[error("hessian symmetrization residual {0:.3e} exceeds the Hermitian tolerance")]
    NonHermitian(f64),

    #[error("plurisubharmonicity certificate failed: sampled Hessian lower bound C = {0:.6e} is not positive")]
    CertificationFailure(f64),

    #[error("intersection sampling found {found} of {requested} points within the iteration budget")]
    SamplingBudget { requested: usize, found: usize },

    #[error("defining function gradient degenerates on its zero set: |∇ρ{index}| = {norm:.3e} at ({z1}, {z2})")]
    DegenerateGradient { index: u8, norm: f64, z1: Complex64, z2: Complex64 },
}

impl Error {
    /// Convenience constructor for precondition violations.
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
