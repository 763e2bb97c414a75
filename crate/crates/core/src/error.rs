use thiserror::Error;

use crate::statexpr::ParseError;

/// Errors raised by the numerical and geometric routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (max |A - A^H| = {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max |U^H U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("operator is not traceless (|Tr F| = {0:e})")]
    NotTraceless(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("subsystem index {index} out of range for {count} subsystems")]
    SubsystemIndex { index: usize, count: usize },

    #[error("non-Hermitian input detected: symplectic pairing has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("vector is not horizontal (|<psi|v>| = {0:e})")]
    NotHorizontal(f64),

    #[error("stabilizer dimension mismatch on subsystem {subsystem}: kernel route {kernel}, multiplicity route {multiplicity}")]
    StabilizerMismatch {
        subsystem: usize,
        kernel: usize,
        multiplicity: usize,
    },

    #[error("null basis has {found} generators but orbit dimensions predict {expected}")]
    NullBasisCount { found: usize, expected: usize },

    #[error("entanglement routes disagree: {0}")]
    RouteDisagreement(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub type Result<T> = std::result::Result<T, Error>;
