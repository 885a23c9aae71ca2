//! Complex permittivity of homogeneous surroundings.
//!
//! Three kinds of medium are supported: vacuum, a frequency-independent
//! complex constant, and a sum of Drude-Lorentz oscillators
//! `ε(ω) = 1 + Σ_j ω_P,j² / (ω_T,j² − ω² − iγ_jω)`.
//! The refractive index is always taken on the branch with `n_I ≥ 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzOscillator {
    /// Plasma frequency ω_P, rad/s.
    pub plasma: f64,
    /// Transverse resonance ω_T, rad/s (0 for a Drude term).
    pub resonance: f64,
    /// Damping γ, rad/s.
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PermittivityModel {
    Vacuum,
    Constant(Complex64),
    DrudeLorentz(Vec<LorentzOscillator>),
}

impl Default for PermittivityModel {
    fn default() -> Self {
        PermittivityModel::Vacuum
    }
}

impl PermittivityModel {
    pub fn constant(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::invalid("permittivity must be finite"));
        }
        if im < 0.0 {
            return Err(Error::invalid(format!(
                "constant permittivity must be passive (Im ε ≥ 0), got {im}"
            )));
        }
        Ok(PermittivityModel::Constant(Complex64::new(re, im)))
    }

    pub fn drude_lorentz(oscillators: Vec<LorentzOscillator>) -> Result<Self> {
        for (i, o) in oscillators.iter().enumerate() {
            let ok = [o.plasma, o.resonance, o.damping]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0);
            if !ok {
                return Err(Error::invalid(format!(
                    "oscillator {i}: plasma, resonance and damping must be finite and ≥ 0"
                )));
            }
        }
        Ok(PermittivityModel::DrudeLorentz(oscillators))
    }

    /// Closed-form response at any real frequency, including ω ≤ 0.
    ///
    /// For a Drude term (ω_T = 0, γ > 0) at ω = 0 the result is infinite.
    pub fn response(&self, omega: f64) -> Complex64 {
        match self {
            PermittivityModel::Vacuum => Complex64::new(1.0, 0.0),
            PermittivityModel::Constant(eps) => *eps,
            PermittivityModel::DrudeLorentz(osc) => {
                let mut eps = Complex64::new(1.0, 0.0);
                for o in osc {
                    let denom = Complex64::new(
                        o.resonance * o.resonance - omega * omega,
                        -o.damping * omega,
                    );
                    eps += o.plasma * o.plasma / denom;
                }
                eps
            }
        }
    }

    /// ε(ω) for ω > 0.
    pub fn evaluate(&self, omega: f64) -> Result<Complex64> {
        check_frequency(omega)?;
        Ok(self.response(omega))
    }

    /// n(ω) = √ε(ω) with `n_I ≥ 0`.
    pub fn refractive_index(&self, omega: f64) -> Result<Complex64> {
        Ok(passive_sqrt(self.evaluate(omega)?))
    }

    pub fn is_vacuum(&self) -> bool {
        match self {
            PermittivityModel::Vacuum => true,
            PermittivityModel::Constant(eps) => *eps == Complex64::new(1.0, 0.0),
            PermittivityModel::DrudeLorentz(osc) => osc.iter().all(|o| o.plasma == 0.0),
        }
    }
}

/// Square root on the branch with non-negative imaginary part.
///
/// The cut lies along the negative real axis; a value sitting exactly on the
/// cut is treated as carrying an infinitesimal positive imaginary part, so
/// `passive_sqrt(-1) = +i`.
pub fn passive_sqrt(eps: Complex64) -> Complex64 {
    let eps = if eps.im == 0.0 {
        Complex64::new(eps.re, 0.0)
    } else {
        eps
    };
    let n = eps.sqrt();
    if n.im < 0.0 {
        -n
    } else {
        n
    }
}

pub(crate) fn check_frequency(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "angular frequency must be positive and finite, got {omega}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn single(plasma: f64, resonance: f64, damping: f64) -> PermittivityModel {
        PermittivityModel::drude_lorentz(vec![LorentzOscillator {
            plasma,
            resonance,
            damping,
        }])
        .unwrap()
    }

    #[test]
    fn vacuum_is_unity() {
        for w in [1e10, 2.5e15, 7e18] {
            assert_eq!(
                PermittivityModel::Vacuum.evaluate(w).unwrap(),
                Complex64::new(1.0, 0.0)
            );
        }
    }

    #[test]
    fn on_resonance_value() {
        let (wt, wp, g) = (3.0e15, 1.2e15, 4.0e13);
        let eps = single(wp, wt, g).evaluate(wt).unwrap();
        assert_relative_eq!(eps.re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(eps.im, wp * wp / (g * wt), max_relative = 1e-12);
    }

    #[test]
    fn static_limit() {
        let wt = 2.0e15;
        let eps = single(0.5 * wt, wt, 0.01 * wt).response(0.0);
        assert_relative_eq!(eps.re, 1.25, max_relative = 1e-15);
        assert_eq!(eps.im, 0.0);
    }

    #[test]
    fn nonpositive_frequency_rejected() {
        let m = PermittivityModel::Vacuum;
        assert!(matches!(m.evaluate(0.0), Err(Error::Domain(_))));
        assert!(matches!(m.evaluate(-1.0), Err(Error::Domain(_))));
        assert!(matches!(m.evaluate(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn active_constant_rejected() {
        assert!(PermittivityModel::constant(2.0, -0.1).is_err());
    }

    #[test]
    fn index_branches() {
        assert_eq!(passive_sqrt(Complex64::new(1.0, 0.0)), Complex64::new(1.0, 0.0));
        let n = passive_sqrt(Complex64::new(-1.0, 0.0));
        assert_relative_eq!(n.re, 0.0, epsilon = 1e-16);
        assert_relative_eq!(n.im, 1.0, epsilon = 1e-16);
        let n = passive_sqrt(Complex64::new(-1.0, -0.0));
        assert!(n.im > 0.0);
        // mpmath.sqrt(2.25 + 0.1j) at 30 digits
        let n = PermittivityModel::constant(2.25, 0.1)
            .unwrap()
            .refractive_index(1e15)
            .unwrap();
        assert_relative_eq!(n.re, 1.500_370_141_983_477_6, max_relative = 1e-14);
        assert_relative_eq!(n.im, 0.033_325_109_985_127_0, max_relative = 1e-13);
    }

    #[test]
    fn crossing_symmetry() {
        let m = PermittivityModel::drude_lorentz(vec![
            LorentzOscillator { plasma: 1.1e15, resonance: 2.0e15, damping: 5e13 },
            LorentzOscillator { plasma: 9.0e15, resonance: 0.0, damping: 1e14 },
        ])
        .unwrap();
        for k in 1..200 {
            let w = k as f64 * 3e13;
            let d = m.response(-w) - m.response(w).conj();
            assert!(d.norm() <= 1e-12 * m.response(w).norm());
        }
    }

    proptest! {
        #[test]
        fn branch_consistency_and_passivity(
            wp in 1e13f64..1e16, wt in 0.0f64..1e16, g in 1e11f64..1e15, w in 1e12f64..3e16
        ) {
            let m = single(wp, wt, g);
            let eps = m.evaluate(w).unwrap();
            let n = m.refractive_index(w).unwrap();
            prop_assert!(eps.im >= 0.0);
            prop_assert!(n.im >= 0.0);
            prop_assert!((n * n - eps).norm() <= 1e-12 * eps.norm());
        }

        #[test]
        fn high_frequency_limit(wp in 1e13f64..1e15, wt in 0.0f64..1e15, g in 1e11f64..1e14) {
            let eps = single(wp, wt, g).evaluate(1e22).unwrap();
            prop_assert!((eps - 1.0).norm() < 1e-10);
        }
    }
}
