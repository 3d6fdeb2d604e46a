//! Centralized numerical tolerances.
//!
//! Every comparison in the certificate machinery goes through one of these
//! constants so the tolerance story stays auditable in one place. PSD and
//! multiplicity tests are relative to the spectral norm of the matrix under
//! test; the homogeneity test is an absolute angle in radians.

/// Admissible spread of line admittance arguments for homogeneity, radians.
pub const ANGLE_TOL: f64 = 1e-9;

/// A Hermitian matrix H counts as PSD when min eig >= -PSD_TOL * ||H||_2.
pub const PSD_TOL: f64 = 1e-9;

/// Eigenvalues with |lambda| <= MULT_TOL * ||A||_2 count as zero when
/// extracting null spaces and zero-eigenvalue multiplicities.
pub const MULT_TOL: f64 = 1e-8;

/// Newton power-mismatch convergence threshold (2-norm of the residual).
pub const NEWTON_TOL: f64 = 1e-8;

/// Newton iteration cap per start.
pub const NEWTON_MAX_ITER: usize = 50;

/// Flat-edge witnesses must satisfy their defining equations to this
/// relative residual.
pub const WITNESS_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub angle: f64,
    pub psd: f64,
    pub mult: f64,
    pub newton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            angle: ANGLE_TOL,
            psd: PSD_TOL,
            mult: MULT_TOL,
            newton: NEWTON_TOL,
        }
    }
}
