//! Model parameters and their validity window.

use crate::C64;
use thiserror::Error;

/// Parameters of the chain: site count 2N, anisotropy eta, staggering
/// amplitude b, and the overall coupling sign.
///
/// The staggered inhomogeneity is a = i*b. With eta real, Hermiticity forces
/// a to be purely imaginary, which is why the imaginary part b is the stored
/// quantity and not a itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Number of lattice sites, written 2N throughout; must be even, >= 4.
    pub sites: usize,
    /// Anisotropy (crossing parameter), real and positive in the gapped
    /// regime covered here.
    pub eta: f64,
    /// Staggering amplitude: the inhomogeneities alternate -ib, +ib.
    pub b: f64,
    /// Coupling sign J, exactly +1 or -1.
    pub coupling: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("site count must be even and at least 4, got {0}")]
    BadSites(usize),
    #[error("eta must be real positive (gapped regime), got {0}")]
    BadEta(f64),
    #[error("coupling must be exactly +1 or -1, got {0}")]
    BadCoupling(f64),
    #[error("b must be finite, got {0}")]
    BadStagger(f64),
}

impl ModelParams {
    pub fn new(sites: usize, eta: f64, b: f64, coupling: f64) -> Result<Self, ParamError> {
        let p = ModelParams {
            sites,
            eta,
            b,
            coupling,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if self.sites < 4 || self.sites % 2 != 0 {
            return Err(ParamError::BadSites(self.sites));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(ParamError::BadEta(self.eta));
        }
        if self.coupling != 1.0 && self.coupling != -1.0 {
            return Err(ParamError::BadCoupling(self.coupling));
        }
        if !self.b.is_finite() {
            return Err(ParamError::BadStagger(self.b));
        }
        Ok(())
    }

    /// Half the site count: the N in 2N.
    #[inline]
    pub fn n(&self) -> usize {
        self.sites / 2
    }

    /// The staggered inhomogeneity a = i*b.
    #[inline]
    pub fn a(&self) -> C64 {
        C64::new(0.0, self.b)
    }

    /// Hilbert-space dimension 2^sites.
    #[inline]
    pub fn dim(&self) -> usize {
        1usize << self.sites
    }

    /// Inhomogeneity at chain position p (1-based): odd positions carry -a,
    /// even positions +a.
    #[inline]
    pub fn theta(&self, p: usize) -> C64 {
        if p % 2 == 1 {
            -self.a()
        } else {
            self.a()
        }
    }

    pub fn with_sites(&self, sites: usize) -> Self {
        ModelParams { sites, ..*self }
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        ModelParams { coupling, ..*self }
    }
}
