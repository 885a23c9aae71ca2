//! Strong coupling of one superposition state to a Lorentzian field resonance.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{sinhc, TimeGrid, TimeSeries};
use crate::coupling::Collective;
use crate::error::{Error, Result};

/// Which superposition state `|±⟩` is strongly coupled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongParams {
    /// Vacuum Rabi frequency Ω of the strongly coupled state, rad/s.
    pub omega_strong: f64,
    /// Decay rate Γ of the weakly coupled state, 1/s.
    pub gamma_weak: f64,
    pub delta_omega_m: f64,
    pub delta_ab: f64,
    pub branch: Branch,
}

impl StrongParams {
    pub fn from_collective(c: &Collective, delta_omega_m: f64, delta_ab: f64, branch: Branch) -> Result<Self> {
        let (strong, weak) = match branch {
            Branch::Plus => (c.omega_plus, c.omega_minus),
            Branch::Minus => (c.omega_minus, c.omega_plus),
        };
        if strong < weak {
            return Err(Error::model(format!(
                "branch {branch:?} names the state with the smaller Rabi frequency ({strong:e} < {weak:e})"
            )));
        }
        let gamma_weak = match branch {
            Branch::Plus => c.gamma_minus,
            Branch::Minus => c.gamma_plus,
        };
        Ok(StrongParams { omega_strong: strong, gamma_weak, delta_omega_m, delta_ab, branch })
    }
}

/// Populations for exact resonance `ω_m = ω̃_A ∓ δ_{A*B}`:
/// `C_strong = 2^{−½}e^{−Δω_m t/2}cos(Ωt/2)`, `C_weak = 2^{−½}e^{−Γt/2}`,
/// recombined through `C_A = 2^{−½}(C₊e^{iδt} + C₋e^{−iδt})` and
/// `C_B = 2^{−½}(C₊e^{iδt} − C₋e^{−iδt})`.
pub fn strong_populations(p: &StrongParams, grid: &TimeGrid, omega_weak: Option<f64>) -> TimeSeries {
    let t = grid.times();
    let n = t.len();
    let (mut c_a, mut c_b, mut c_p, mut c_m) =
        (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &tk in &t {
        let strong = FRAC_1_SQRT_2 * (-0.5 * p.delta_omega_m * tk).exp() * (0.5 * p.omega_strong * tk).cos();
        let weak = FRAC_1_SQRT_2 * (-0.5 * p.gamma_weak * tk).exp();
        let (cp, cm) = match p.branch {
            Branch::Plus => (strong, weak),
            Branch::Minus => (weak, strong),
        };
        let cp = Complex64::new(cp, 0.0);
        let cm = Complex64::new(cm, 0.0);
        let rot = Complex64::new(0.0, p.delta_ab * tk).exp();
        c_a.push(FRAC_1_SQRT_2 * (cp * rot + cm * rot.conj()));
        c_b.push(FRAC_1_SQRT_2 * (cp * rot - cm * rot.conj()));
        c_p.push(cp);
        c_m.push(cm);
    }
    let mut series = TimeSeries::from_amplitudes(t, c_a, c_b);
    series.c_plus = Some(c_p);
    series.c_minus = Some(c_m);
    if p.delta_omega_m > 0.0 {
        let ratio = p.omega_strong / p.delta_omega_m;
        if ratio > 0.1 && ratio < 10.0 {
            series.warn(format!(
                "Ω/Δω_m = {ratio:.3} lies between the weak and strong limits; closed forms unreliable"
            ));
        }
        if let Some(w) = omega_weak {
            if w / p.delta_omega_m > 0.1 {
                series.warn(format!(
                    "weakly coupled state has Ω/Δω_m = {:.3}; its exponential decay is approximate",
                    w / p.delta_omega_m
                ));
            }
        }
    }
    series
}

/// Coefficients of `C̈ + [i(ω_m − ω̃_A ± δ) + Δω_m]Ċ + (Ω/2)²C = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrongOdeParams {
    /// `ω_m − ω̃_A`, rad/s.
    pub detuning: f64,
    pub delta_ab: f64,
    pub branch: Branch,
    pub delta_omega_m: f64,
    pub omega: f64,
}

impl StrongOdeParams {
    fn damping(&self) -> Complex64 {
        Complex64::new(self.delta_omega_m, self.detuning + self.branch.sign() * self.delta_ab)
    }
}

/// Exact solution of the second-order equation with `C(0) = 2^{−½}`, `Ċ(0) = 0`.
pub fn strong_amplitude_exact(p: &StrongOdeParams, grid: &TimeGrid) -> Vec<Complex64> {
    let b = p.damping();
    let q = (0.25 * b * b - 0.25 * p.omega * p.omega).sqrt();
    grid.times()
        .into_iter()
        .map(|t| {
            let x = q * t;
            FRAC_1_SQRT_2 * (-0.5 * b * t).exp() * (x.cosh() + 0.5 * b * t * sinhc(x))
        })
        .collect()
}

/// Maximum magnitude of the ODE residual evaluated with centered differences.
pub fn strong_ode_residual(c: &[Complex64], dt: f64, p: &StrongOdeParams) -> Result<f64> {
    if dt * p.omega > 0.1 {
        return Err(Error::numeric(format!(
            "grid too coarse for second derivatives: Δt·Ω = {:.3} > 0.1",
            dt * p.omega
        )));
    }
    if c.len() < 3 {
        return Err(Error::invalid("residual needs at least three samples"));
    }
    let b = p.damping();
    let w2 = 0.25 * p.omega * p.omega;
    let mut worst: f64 = 0.0;
    for k in 1..c.len() - 1 {
        let d2 = (c[k + 1] - 2.0 * c[k] + c[k - 1]) / (dt * dt);
        let d1 = (c[k + 1] - c[k - 1]) / (2.0 * dt);
        worst = worst.max((d2 + b * d1 + w2 * c[k]).norm());
    }
    Ok(worst)
}

/// The three approximately periodic regimes of the undamped motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageCase {
    /// `4|δ| ≫ Ω`
    I,
    /// `4|δ| ≈ Ω`
    II,
    /// `4|δ| ≪ Ω`
    III,
}

/// Cycle averages `(P̄_A, P̄_B, P̄_L)`.
pub fn time_averages(case: AverageCase) -> (f64, f64, f64) {
    match case {
        AverageCase::I => (0.5, 0.5, 0.0),
        AverageCase::II => (5.0 / 8.0, 1.0 / 8.0, 2.0 / 8.0),
        AverageCase::III => (3.0 / 8.0, 3.0 / 8.0, 2.0 / 8.0),
    }
}

/// Averages of the limiting closed forms over one period by the trapezoidal
/// rule (spectrally accurate for periodic integrands).
pub fn time_averages_numeric(case: AverageCase, samples: usize) -> (f64, f64, f64) {
    let samples = samples.max(4);
    // unit δ for case i, unit Ω otherwise
    let (period, pa, pb): (f64, fn(f64) -> f64, fn(f64) -> f64) = match case {
        AverageCase::I => (PI, |t| t.cos().powi(2), |t| t.sin().powi(2)),
        AverageCase::II => (
            2.0 * PI,
            |t| 0.25 * (1.0 + 3.0 * (0.5 * t).cos().powi(2)),
            |t| 0.25 * (1.0 - (0.5 * t).cos().powi(2)),
        ),
        AverageCase::III => (4.0 * PI, |t| (0.25 * t).cos().powi(4), |t| (0.25 * t).sin().powi(4)),
    };
    let h = period / samples as f64;
    let (mut sa, mut sb) = (0.0, 0.0);
    for k in 0..samples {
        let t = k as f64 * h;
        sa += pa(t);
        sb += pb(t);
    }
    let (a, b) = (sa / samples as f64, sb / samples as f64);
    (a, b, 1.0 - a - b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn undamped(omega: f64, delta: f64) -> StrongParams {
        StrongParams { omega_strong: omega, gamma_weak: 0.0, delta_omega_m: 0.0, delta_ab: delta, branch: Branch::Plus }
    }

    #[test]
    fn initial_populations() {
        let p = StrongParams { omega_strong: 20.0, gamma_weak: 0.1, delta_omega_m: 1.0, delta_ab: 0.3, branch: Branch::Minus };
        let s = strong_populations(&p, &TimeGrid::new(1.0, 10).unwrap(), None);
        assert!((s.p_a[0] - 1.0).abs() < 1e-15);
        assert!(s.p_b[0].abs() < 1e-15);
    }

    #[test]
    fn matches_three_term_formula() {
        let p = StrongParams { omega_strong: 13.0, gamma_weak: 0.2, delta_omega_m: 0.7, delta_ab: 1.9, branch: Branch::Plus };
        let s = strong_populations(&p, &TimeGrid::new(6.0, 600).unwrap(), None);
        for (k, &t) in s.t.iter().enumerate() {
            let c = (0.5 * p.omega_strong * t).cos();
            let common = (-p.gamma_weak * t).exp() + (-p.delta_omega_m * t).exp() * c * c;
            let cross = 2.0 * (-(p.delta_omega_m + p.gamma_weak) * t / 2.0).exp() * c * (2.0 * p.delta_ab * t).cos();
            assert!((s.p_a[k] - 0.25 * (common + cross)).abs() < 1e-14);
            assert!((s.p_b[k] - 0.25 * (common - cross)).abs() < 1e-14);
        }
    }

    #[test]
    fn virtual_exchange_limit() {
        // 4δ ≫ Ω, t ≪ 2/Ω
        let (omega, delta) = (1e-3, 1.0);
        let s = strong_populations(&undamped(omega, delta), &TimeGrid::new(3.0, 300).unwrap(), None);
        for (k, &t) in s.t.iter().enumerate() {
            assert!((s.p_a[k] - (delta * t).cos().powi(2)).abs() < 1e-5);
            assert!((s.p_b[k] - (delta * t).sin().powi(2)).abs() < 1e-5);
        }
    }

    #[test]
    fn real_exchange_limit() {
        // 4δ ≪ Ω, t ≪ 1/(2δ)
        let (omega, delta) = (1.0, 1e-6);
        let s = strong_populations(&undamped(omega, delta), &TimeGrid::new(12.0, 300).unwrap(), None);
        for (k, &t) in s.t.iter().enumerate() {
            assert!((s.p_a[k] - (0.25 * omega * t).cos().powi(4)).abs() < 1e-9);
            assert!((s.p_b[k] - (0.25 * omega * t).sin().powi(4)).abs() < 1e-9);
        }
    }

    #[test]
    fn branch_must_match_rabi_ordering() {
        let c = Collective { gamma_plus: 2.0, gamma_minus: 0.01, omega_plus: 20.0, omega_minus: 1.4 };
        assert!(StrongParams::from_collective(&c, 100.0, 1.0, Branch::Plus).is_ok());
        assert!(matches!(StrongParams::from_collective(&c, 100.0, 1.0, Branch::Minus), Err(Error::Model(_))));
    }

    #[test]
    fn guard_warning() {
        let p = StrongParams { omega_strong: 2.0, gamma_weak: 0.0, delta_omega_m: 1.0, delta_ab: 0.0, branch: Branch::Plus };
        let s = strong_populations(&p, &TimeGrid::new(1.0, 4).unwrap(), None);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn averages() {
        for case in [AverageCase::I, AverageCase::II, AverageCase::III] {
            let exact = time_averages(case);
            let num = time_averages_numeric(case, 64);
            assert!((exact.0 - num.0).abs() < 1e-12);
            assert!((exact.1 - num.1).abs() < 1e-12);
            assert!((exact.2 - num.2).abs() < 1e-12);
        }
        assert!(time_averages_numeric(AverageCase::II, 64).0 > 3.0 / 8.0);
    }

    #[test]
    fn commensurate_full_formula_gives_case_ii() {
        // Ω = 4δ, no damping: the full expression reduces to the case-ii forms
        let omega = 1.0;
        let s = strong_populations(&undamped(omega, 0.25 * omega), &TimeGrid::new(2.0 * PI / omega, 256).unwrap(), None);
        let n = s.len() - 1;
        let pa: f64 = s.p_a[..n].iter().sum::<f64>() / n as f64;
        let pb: f64 = s.p_b[..n].iter().sum::<f64>() / n as f64;
        assert!((pa - 5.0 / 8.0).abs() < 1e-12);
        assert!((pb - 1.0 / 8.0).abs() < 1e-12);
    }

    fn ode(omega: f64, dom: f64) -> StrongOdeParams {
        StrongOdeParams { detuning: 0.0, delta_ab: 0.0, branch: Branch::Plus, delta_omega_m: dom, omega }
    }

    #[test]
    fn exact_solution_residual_second_order() {
        let p = ode(40.0, 1.0);
        let mut last = f64::INFINITY;
        for n in [4000, 8000] {
            let g = TimeGrid::new(3.0, n).unwrap();
            let c = strong_amplitude_exact(&p, &g);
            let r = strong_ode_residual(&c, g.dt, &p).unwrap();
            if last.is_finite() {
                let ratio = last / r;
                assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
            }
            last = r;
        }
    }

    #[test]
    fn residual_detects_perturbation() {
        let p = ode(40.0, 1.0);
        let g = TimeGrid::new(3.0, 4000).unwrap();
        let mut c = strong_amplitude_exact(&p, &g);
        let clean = strong_ode_residual(&c, g.dt, &p).unwrap();
        for z in c.iter_mut().skip(2000) {
            *z *= 1.1;
        }
        assert!(strong_ode_residual(&c, g.dt, &p).unwrap() > 1e3 * clean);
    }

    #[test]
    fn residual_rejects_coarse_grid() {
        let p = ode(40.0, 1.0);
        let g = TimeGrid::new(3.0, 100).unwrap();
        let c = strong_amplitude_exact(&p, &g);
        assert!(strong_ode_residual(&c, g.dt, &p).is_err());
    }

    #[test]
    fn detuning_enters_first_derivative() {
        let mut p = ode(40.0, 1.0);
        p.detuning = 3.0;
        let g = TimeGrid::new(1.0, 4000).unwrap();
        let c = strong_amplitude_exact(&p, &g);
        let ok = strong_ode_residual(&c, g.dt, &p).unwrap();
        p.detuning = 0.0;
        assert!(strong_ode_residual(&c, g.dt, &p).unwrap() > 100.0 * ok);
    }
}
