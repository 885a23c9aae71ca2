//! Single-resonance model environment, e.g. one dominant cavity mode.

use nalgebra::Matrix3;
use num_complex::Complex64;

use super::{equal_point_im_vacuum, GreenProvider, GreenTensor, Site};
use crate::consts::C;
use crate::error::{Error, Result};
use crate::permittivity::check_frequency;

/// `(ω²/c²) G_ab(ω) = T_ab · ω₀²/(ω₀² − ω² − iγω)`.
///
/// The response is causal and vanishes as ω → ∞, so its real and
/// imaginary parts form an exact Hilbert-transform pair. Only the listed
/// pairs exist; equal-point entries act as reflection parts.
#[derive(Debug, Clone)]
pub struct ResonantEnvironment {
    pub omega0: f64,
    pub gamma: f64,
    /// Strength tensors in 1/m³, keyed by site pair.
    pub pairs: Vec<((usize, usize), Matrix3<f64>)>,
    /// Add the free-space value to the equal-point imaginary part.
    pub include_vacuum: bool,
    /// Frequency window reported to principal-value integrals.
    pub window: (f64, f64),
}

impl ResonantEnvironment {
    pub fn new(omega0: f64, gamma: f64) -> Result<Self> {
        if !(omega0 > 0.0 && gamma > 0.0) {
            return Err(Error::domain("resonance frequency and width must be positive"));
        }
        Ok(ResonantEnvironment {
            omega0,
            gamma,
            pairs: Vec::new(),
            include_vacuum: false,
            window: (1e-6 * omega0, 200.0 * omega0),
        })
    }

    pub fn with_pair(mut self, a: usize, b: usize, strength: Matrix3<f64>) -> Self {
        self.pairs.push(((a, b), strength));
        self
    }

    pub fn lorentzian(&self, omega: f64) -> Complex64 {
        let w0 = self.omega0 * self.omega0;
        Complex64::new(w0, 0.0) / Complex64::new(w0 - omega * omega, -self.gamma * omega)
    }

    fn strength(&self, a: usize, b: usize) -> Option<Matrix3<f64>> {
        self.pairs.iter().find_map(|&((i, j), t)| {
            if (i, j) == (a, b) {
                Some(t)
            } else if (j, i) == (a, b) {
                Some(t.transpose())
            } else {
                None
            }
        })
    }

    fn evaluate(&self, t: &Matrix3<f64>, omega: f64) -> GreenTensor {
        let f = self.lorentzian(omega) * (C * C / (omega * omega));
        GreenTensor(t.map(|x| f * x))
    }
}

impl GreenProvider for ResonantEnvironment {
    fn tensor(&self, a: &Site, b: &Site, omega: f64) -> Result<GreenTensor> {
        check_frequency(omega)?;
        let t = self.strength(a.index, b.index).ok_or_else(|| {
            Error::invalid(format!("no resonance coupling for pair ({},{})", a.index, b.index))
        })?;
        Ok(self.evaluate(&t, omega))
    }

    fn equal_point_im(&self, a: &Site, omega: f64) -> Result<Matrix3<f64>> {
        let base = if self.include_vacuum {
            equal_point_im_vacuum(omega)?
        } else {
            check_frequency(omega)?;
            Matrix3::zeros()
        };
        Ok(match self.reflection(a, omega)? {
            Some(r) => base + r.im(),
            None => base,
        })
    }

    fn reflection(&self, a: &Site, omega: f64) -> Result<Option<GreenTensor>> {
        check_frequency(omega)?;
        Ok(self.strength(a.index, a.index).map(|t| self.evaluate(&t, omega)))
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some(self.window)
    }
}
