use thiserror::Error;

use crate::contfrac::ContFracError;
use crate::euler_core::EulerError;
use crate::lattice::LatticeError;
use crate::matrixop::MatrixOpError;
use crate::subsystem::SubsystemError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice: {0}")]
    Lattice(#[from] LatticeError),
    #[error("subsystem: {0}")]
    Subsystem(#[from] SubsystemError),
    #[error("continued fraction: {0}")]
    ContFrac(#[from] ContFracError),
    #[error("matrix operator: {0}")]
    MatrixOp(#[from] MatrixOpError),
    #[error("euler: {0}")]
    Euler(#[from] EulerError),
    #[error("export: {0}")]
    Export(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        match self {
            Error::Lattice(_) => true,
            Error::Subsystem(e) => matches!(
                e,
                SubsystemError::Lattice(_)
                    | SubsystemError::BadWindow { .. }
                    | SubsystemError::WindowMismatch
                    | SubsystemError::BadStep(_)
                    | SubsystemError::NotUdtStable(_)
            ),
            Error::ContFrac(e) => matches!(e, ContFracError::Lattice(_) | ContFracError::Parallel),
            Error::MatrixOp(e) => matches!(e, MatrixOpError::TooSmall(_) | MatrixOpError::TooLarge(_)),
            Error::Euler(e) => matches!(
                e,
                EulerError::EmptyModeSet(_) | EulerError::ModeNotInSet(_) | EulerError::BadStep(_) | EulerError::ModeSetMismatch
            ),
            Error::Export(_) => false,
        }
    }
}
