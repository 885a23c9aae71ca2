//! Markovian (weak atom-field coupling) dynamics.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use super::{sinhc, TimeGrid, TimeSeries};
use crate::coupling::CouplingSet;
use crate::error::{Error, Result};

/// Closed-form solution of
/// `Ċ_A = −½Γ_{A*A}C_A + 𝒦_{A*B}e^{i(ω̃_A−ω̃_B)t}C_B`,
/// `Ċ_B = −½Γ_{B*B}C_B + 𝒦_{B*A}e^{−i(ω̃_A−ω̃_B)t}C_A`
/// with `C_A(0) = 1`, `C_B(0) = 0`.
///
/// Written with `cosh` and `sinh(x)/x` of `Dt/2`, which are even in `D`:
/// the result does not depend on the square-root branch and stays regular
/// at `D = 0`. A residual detuning is absorbed into an effective complex
/// rate of atom B.
pub fn weak_amplitudes(set: &CouplingSet, grid: &TimeGrid) -> TimeSeries {
    let detuning = set.omega_tilde[0] - set.omega_tilde[1];
    let ga = Complex64::new(set.gamma_aa(), 0.0);
    let gb = Complex64::new(set.gamma_bb(), -2.0 * detuning);
    let kab = set.kappa_ab();
    let kba = set.kappa_ba();
    let half_diff = 0.5 * (ga - gb);
    let d = (half_diff * half_diff + 4.0 * kab * kba).sqrt();
    let mu = -0.25 * (ga + gb);

    let t = grid.times();
    let mut c_a = Vec::with_capacity(t.len());
    let mut c_b = Vec::with_capacity(t.len());
    for &tk in &t {
        let x = 0.5 * d * tk;
        let (cosh_part, sinh_part) = if x.norm() < 0.05 {
            let e = (mu * tk).exp();
            (e * x.cosh(), e * tk * sinhc(x))
        } else {
            let ep = ((mu + 0.5 * d) * tk).exp();
            let em = ((mu - 0.5 * d) * tk).exp();
            (0.5 * (ep + em), (ep - em) / d)
        };
        c_a.push(cosh_part - 0.5 * half_diff * sinh_part);
        c_b.push(kba * sinh_part * Complex64::new(0.0, -detuning * tk).exp());
    }
    let mut series = TimeSeries::from_amplitudes(t, c_a, c_b);
    if !set.is_passive() {
        series.warn("decay matrix is not positive semidefinite; populations are unbounded");
    }
    series
}

/// `P_{A(B)} = ½[cosh(Γ_{A*B}t) ± cos(2δ_{A*B}t)]e^{−Γ_{B*B}t}` for identical
/// atoms in equivalent positions.
pub fn weak_populations_symmetric(gamma_bb: f64, gamma_ab: f64, delta_ab: f64, grid: &TimeGrid) -> TimeSeries {
    let t = grid.times();
    let mut p_a = Vec::with_capacity(t.len());
    let mut p_b = Vec::with_capacity(t.len());
    for &tk in &t {
        let ch = 0.5 * (((gamma_ab - gamma_bb) * tk).exp() + ((-gamma_ab - gamma_bb) * tk).exp());
        let co = (2.0 * delta_ab * tk).cos() * (-gamma_bb * tk).exp();
        p_a.push(0.5 * (ch + co));
        p_b.push(0.5 * (ch - co));
    }
    TimeSeries::from_populations(t, p_a, p_b)
}

/// Single-excitation block of the density matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityTrajectory {
    pub t: Vec<f64>,
    pub rho_aa: Vec<f64>,
    pub rho_bb: Vec<f64>,
    pub rho_ab: Vec<Complex64>,
}

/// RK4 stability limit on `h·|λ|` used for the step check.
const RK4_STABILITY: f64 = 2.5;

/// Integrates `ϱ̇ = Mϱ + ϱM†`, `M = [[−Γ_{A*A}/2, 𝒦_{A*B}], [𝒦_{B*A}, −Γ_{B*B}/2]]`
/// with classical RK4 at the grid step.
pub fn density_matrix_weak(set: &CouplingSet, grid: &TimeGrid, rho0: Matrix2<Complex64>) -> Result<DensityTrajectory> {
    let detuning = set.omega_tilde[0] - set.omega_tilde[1];
    // Frame rotating with atom B's detuning keeps M constant.
    let m = Matrix2::new(
        Complex64::new(-0.5 * set.gamma_aa(), 0.0),
        set.kappa_ab(),
        set.kappa_ba(),
        Complex64::new(-0.5 * set.gamma_bb(), detuning),
    );
    let tr = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let disc = (0.25 * (m[(0, 0)] - m[(1, 1)]).powi(2) + m[(0, 1)] * m[(1, 0)]).sqrt();
    let radius = 2.0 * (tr + disc).norm().max((tr - disc).norm());
    let bound = RK4_STABILITY / radius;
    if grid.dt > bound {
        return Err(Error::numeric(format!(
            "time step {:e} s exceeds the RK4 stability bound {bound:e} s",
            grid.dt
        )));
    }
    let mh = m.adjoint();
    let rhs = |r: &Matrix2<Complex64>| m * r + r * mh;
    let h = grid.dt;
    let t = grid.times();
    let mut out = DensityTrajectory {
        t: t.clone(),
        rho_aa: Vec::with_capacity(t.len()),
        rho_bb: Vec::with_capacity(t.len()),
        rho_ab: Vec::with_capacity(t.len()),
    };
    let mut rho = rho0;
    for (k, &tk) in t.iter().enumerate() {
        if k > 0 {
            let k1 = rhs(&rho);
            let k2 = rhs(&(rho + k1 * Complex64::new(0.5 * h, 0.0)));
            let k3 = rhs(&(rho + k2 * Complex64::new(0.5 * h, 0.0)));
            let k4 = rhs(&(rho + k3 * Complex64::new(h, 0.0)));
            rho += (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(h / 6.0, 0.0);
        }
        out.rho_aa.push(rho[(0, 0)].re);
        out.rho_bb.push(rho[(1, 1)].re);
        out.rho_ab.push(rho[(0, 1)] * Complex64::new(0.0, detuning * tk).exp());
    }
    Ok(out)
}
