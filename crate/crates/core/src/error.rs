use thiserror::Error;

use crate::map::Side;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("map is not invertible: delta_{0} = 0")]
    DegenerateParameters(Side),

    #[error("eigenvalues of A_{side} are complex (discriminant {discriminant:.3e})")]
    ComplexEigenvalues { side: Side, discriminant: f64 },

    #[error("fixed point formula has a zero denominator ({0})")]
    DegenerateDenominator(&'static str),

    #[error("parameters outside the required region: {0}")]
    Domain(String),

    #[error("image slope is vertical (tau + m = 0 at m = {0})")]
    VerticalImage(f64),

    #[error("vertex {vertex:?} of f(Omega) lies outside Omega by {excess:.3e}")]
    ContainmentViolation { vertex: [f64; 2], excess: f64 },

    #[error("polyline exceeded the vertex budget of {0}")]
    VertexBudgetExceeded(usize),

    #[error("orbit left the ball of radius {radius} after {iterations} iterations")]
    Escaped { radius: f64, iterations: usize },

    #[error("Z is undefined: f^2(T) is not left of E^s(X), i.e. phi(g(xi)) >= 0")]
    ZUndefined,

    #[error("I - M is singular for itinerary {0}")]
    SingularComposition(String),

    #[error("itinerary mismatch for {word}: point {index} lies on the wrong side of the switching line")]
    ItineraryMismatch { word: String, index: usize },

    #[error("invalid itinerary {0:?}: expected a nonempty word over {{L, R}}")]
    InvalidWord(String),

    #[error("unsupported manifold request: {0}")]
    Unsupported(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
