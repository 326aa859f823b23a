use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// No beamwidth choice satisfies the timing constraints, i.e. training
    /// would consume the whole slot (or more) for every admissible beam.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// A quantity was requested outside the domain where the closed form is
    /// defined (e.g. inverting a rate above the aligned-beam rate).
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// Gradient ascent hit the iteration cap without meeting the gradient
    /// tolerance. Carries the best iterate found so far.
    #[error("optimizer did not converge after {iterations} iterations (best objective {objective} at phi_t={phi_t}, phi_r={phi_r})")]
    NonConvergence {
        phi_t: f64,
        phi_r: f64,
        objective: f64,
        iterations: usize,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
