use thiserror::Error;

/// Reasons a polynomial is rejected by the parser or by validation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("non-unit coefficient {coefficient} at position {pos}")]
    NonUnitCoefficient { pos: usize, coefficient: String },
    #[error("variable index 0 at position {pos}; variables start at x1")]
    ZeroVariable { pos: usize },
    #[error("expected {variables} monomials for {variables} variables, found {monomials}")]
    MonomialCount { variables: usize, monomials: usize },
    #[error("monomial {monomial} involves {count} variables; at most two are allowed")]
    TooManyVariables { monomial: usize, count: usize },
    #[error("monomial {monomial} has no exponent of at least 2")]
    NoLeadingExponent { monomial: usize },
    #[error("monomial {monomial} has secondary exponent {exponent}; it must be 1")]
    SecondaryExponent { monomial: usize, exponent: u32 },
    #[error("exponent matrix is singular")]
    Singular,
    #[error("weight q{index} = {value} is not positive")]
    NonPositiveWeight { index: usize, value: String },
    #[error("variable x{variable} leads {count} monomials; each variable must lead exactly one")]
    Leading { variable: usize, count: usize },
    #[error("the block containing x{variable} is neither a path nor a cycle")]
    BadComponent { variable: usize },
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] PolyError),
    /// An exact identity that must hold failed; this signals an arithmetic bug.
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("linear system is inconsistent: {0}")]
    Inconsistent(String),
    #[error("linear system is underdetermined: {0}")]
    Underdetermined(String),
    #[error("precondition not met: {0}")]
    Precondition(String),
    #[error("correlator fits neither the concave nor the nonconcave classification: {0}")]
    Unclassified(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
