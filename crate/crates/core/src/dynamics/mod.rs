//! Single-excitation dynamics of the two-atom system.
//!
//! All amplitudes are slowly varying: `C_A` is measured relative to
//! `e^{−iω̃_A t}`.

mod strong;
mod volterra;
mod weak;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use strong::{
    strong_amplitude_exact, strong_ode_residual, strong_populations, time_averages, time_averages_numeric,
    AverageCase, Branch, StrongOdeParams, StrongParams,
};
pub use volterra::{volterra_solve, KernelSpec, VolterraOptions, DEFAULT_MEMORY_CAP};
pub use weak::{density_matrix_weak, weak_amplitudes, weak_populations_symmetric, DensityTrajectory};

/// Uniform grid `t_k = k·dt`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) || steps == 0 {
            return Err(Error::domain("time grid needs a positive end time and at least one step"));
        }
        Ok(TimeGrid { dt: t_end / steps as f64, steps })
    }

    /// Checks that explicit sample times start at zero and are evenly spaced.
    pub fn from_times(times: &[f64]) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::invalid("time grid must start at 0 and hold at least two samples"));
        }
        let steps = times.len() - 1;
        let dt = times[steps] / steps as f64;
        if !(dt > 0.0) {
            return Err(Error::invalid("time grid must be increasing"));
        }
        for (k, t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * dt {
                return Err(Error::invalid(format!("time grid not uniform at sample {k}")));
            }
        }
        Ok(TimeGrid { dt, steps })
    }

    pub fn t_end(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }
}

/// Sampled amplitudes and populations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub c_a: Option<Vec<Complex64>>,
    pub c_b: Option<Vec<Complex64>>,
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
    pub c_plus: Option<Vec<Complex64>>,
    pub c_minus: Option<Vec<Complex64>>,
    pub warnings: Vec<String>,
}

impl TimeSeries {
    pub fn from_amplitudes(t: Vec<f64>, c_a: Vec<Complex64>, c_b: Vec<Complex64>) -> Self {
        let p_a = c_a.iter().map(|c| c.norm_sqr()).collect();
        let p_b = c_b.iter().map(|c| c.norm_sqr()).collect();
        TimeSeries { t, c_a: Some(c_a), c_b: Some(c_b), p_a, p_b, c_plus: None, c_minus: None, warnings: Vec::new() }
    }

    pub fn from_populations(t: Vec<f64>, p_a: Vec<f64>, p_b: Vec<f64>) -> Self {
        TimeSeries { t, c_a: None, c_b: None, p_a, p_b, c_plus: None, c_minus: None, warnings: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.t.len() > 1 {
            self.t[1] - self.t[0]
        } else {
            0.0
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::debug!("{message}");
        self.warnings.push(message);
    }

    /// Largest violation of `0 ≤ P` and `P_A + P_B ≤ 1`.
    pub fn probability_excess(&self) -> f64 {
        self.p_a
            .iter()
            .zip(&self.p_b)
            .map(|(a, b)| (a + b - 1.0).max(-a).max(-b))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_probability(&self) -> Result<()> {
        let excess = self.probability_excess();
        if excess > 1e-9 {
            return Err(Error::numeric(format!("probability bound violated by {excess:e}")));
        }
        Ok(())
    }
}

/// Lorentzian field resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceProfile {
    /// Center, rad/s.
    pub omega_m: f64,
    /// Half width at half maximum, rad/s.
    pub delta_omega_m: f64,
}

impl ResonanceProfile {
    pub fn new(omega_m: f64, delta_omega_m: f64) -> Result<Self> {
        if !(delta_omega_m > 0.0 && delta_omega_m.is_finite()) {
            return Err(Error::domain("resonance half width must be positive"));
        }
        if !omega_m.is_finite() {
            return Err(Error::domain("resonance center must be finite"));
        }
        Ok(ResonanceProfile { omega_m, delta_omega_m })
    }
}

/// `sinh(z)/z`, accurate near zero.
pub(crate) fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < 0.05 {
        let z2 = z * z;
        1.0 + z2 / 6.0 * (1.0 + z2 / 20.0 * (1.0 + z2 / 42.0 * (1.0 + z2 / 72.0)))
    } else {
        z.sinh() / z
    }
}

/// Exact weights of `∫_0^h e^{s(h−u)} y(u) du` for `y` linear between its
/// end values: returns `(α, β)` multiplying `y(0)` and `y(h)`.
pub fn exp_weights(s: Complex64, h: f64) -> (Complex64, Complex64) {
    let z = s * h;
    if z.norm() < 0.1 {
        // Taylor expansion to O(z⁷)
        let mut alpha = Complex64::new(0.0, 0.0);
        let mut beta = Complex64::new(0.0, 0.0);
        let mut power = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        for n in 2..10 {
            if n > 2 {
                fact *= n as f64;
            }
            alpha += power * ((n - 1) as f64 / fact);
            beta += power / fact;
            power *= z;
        }
        (alpha * h, beta * h)
    } else {
        let e = z.exp();
        let z2 = z * z;
        (h * (z * e - e + 1.0) / z2, h * (e - 1.0 - z) / z2)
    }
}
