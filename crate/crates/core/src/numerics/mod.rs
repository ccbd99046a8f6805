//! Special functions, quadrature and root finding.
//!
//! Nothing in here knows about radio links; the channel and power-control
//! modules build on these primitives.

mod gamma;
mod quadrature;
mod roots;

pub use gamma::{
    inv_reg_upper_gamma, inv_reg_upper_gamma_with, GammaQuantileTable, ln_gamma, normal_quantile, reg_lower_gamma,
    reg_upper_gamma,
};
pub use quadrature::{
    integrate_polar_sector, integrate_polar_sector_with, integrate_radial, integrate_radial_with,
    GaussLegendre, QuadOptions,
};
pub use roots::{bisect, bisect_with};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convergence controls shared by the iterative routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_iter: 200,
        }
    }
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        let tol = Self {
            abs_tol,
            rel_tol,
            max_iter,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::domain(format!("abs_tol must be > 0, got {}", self.abs_tol)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::domain(format!("rel_tol must be > 0, got {}", self.rel_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::domain("max_iter must be >= 1"));
        }
        Ok(())
    }
}
