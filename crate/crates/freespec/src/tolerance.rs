use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute and relative tolerances shared by every numerical decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs_tol: 1e-9,
            rel_tol: 1e-7,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Result<Self> {
        if !(abs_tol > 0.0 && abs_tol.is_finite() && rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tolerances must be positive and finite, got abs={abs_tol} rel={rel_tol}"
            )));
        }
        Ok(Tolerance { abs_tol, rel_tol })
    }

    /// Same relative/absolute ratio as the default, scaled to `abs_tol`.
    pub fn from_abs(abs_tol: f64) -> Result<Self> {
        Tolerance::new(abs_tol, abs_tol * 100.0)
    }

    /// `abs_tol + rel_tol * scale`.
    pub fn bound(&self, scale: f64) -> f64 {
        self.abs_tol + self.rel_tol * scale
    }

    /// Width of the band around zero in which a minimal eigenvalue counts as boundary.
    pub fn boundary_band(&self) -> f64 {
        10.0 * self.abs_tol
    }
}
