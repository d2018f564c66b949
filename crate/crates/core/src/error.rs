use thiserror::Error;

use crate::coercivity::CoercivityError;
use crate::fit::FitError;
use crate::halfline::HalfLineError;
use crate::hermite::HermiteError;
use crate::jacobi::SpectrumError;
use crate::lattice::LatticeError;
use crate::reconstruct::ReconstructError;

/// Union of the per-module error types.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Hermite(#[from] HermiteError),
    #[error(transparent)]
    Coercivity(#[from] CoercivityError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    HalfLine(#[from] HalfLineError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

impl Error {
    /// True when the error comes from invalid inputs rather than a failed
    /// computation.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Hermite(
                HermiteError::IndexTooLarge { .. } | HermiteError::Domain(_) | HermiteError::InvalidGrid(_)
            ) | Error::Coercivity(CoercivityError::Degenerate { .. } | CoercivityError::InvalidVector(_))
                | Error::Spectrum(SpectrumError::InvalidInput(_))
                | Error::Lattice(LatticeError::InvalidInput(_) | LatticeError::StepTooLarge { .. })
                | Error::HalfLine(HalfLineError::Configuration(_))
                | Error::Reconstruct(ReconstructError::ExcludedEigenvalue | ReconstructError::Mismatch(_))
        )
    }
}
