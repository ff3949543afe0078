//! The one-parameter scaling regime: Mach, Froude and Rossby numbers are
//! slaved to a single small parameter, `Ma = eps^m`, `Fr = eps^(m/2)`,
//! `Ro = eps`, with `m >= 1` selecting the asymptotic regime.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EpsilonScaling {
    pub eps: f64,
    pub m: f64,
}

impl EpsilonScaling {
    pub fn new(eps: f64, m: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) || !eps.is_finite() {
            return Err(Error::Config(format!("eps must lie in (0, 1], got {eps}")));
        }
        if !(m >= 1.0) || !m.is_finite() {
            return Err(Error::Config(format!("m must satisfy m >= 1, got {m}")));
        }
        Ok(Self { eps, m })
    }

    pub fn mach(&self) -> f64 {
        self.eps.powf(self.m)
    }

    pub fn froude(&self) -> f64 {
        self.eps.powf(self.m / 2.0)
    }

    pub fn rossby(&self) -> f64 {
        self.eps
    }

    /// Switch that keeps the centrifugal contribution in the limit systems:
    /// 1 exactly at m = 2, 0 otherwise.
    pub fn delta2(&self) -> f64 {
        if self.m == 2.0 {
            1.0
        } else {
            0.0
        }
    }

    /// Froude^2 / Mach = eps^m / eps^m ... prefactor of the centrifugal term
    /// relative to the pressure scaling: eps^(2(m-1)).
    pub fn centrifugal_prefactor(&self) -> f64 {
        self.eps.powf(2.0 * (self.m - 1.0))
    }

    /// Prefactor of the gravitational term: eps^m.
    pub fn gravity_prefactor(&self) -> f64 {
        self.eps.powf(self.m)
    }
}
