//! Integro-differential amplitude equations with memory.
//!
//! In the frame rotating at `ω̄ = (ω̃_A + ω̃_B)/2` the system reads
//! `ẏ = Hy + ∫_0^t M(t−t′) y(t′) dt′` with
//! `M_{AA′}(τ) = −(1/2π)∫Γ_{AA′}(ω)e^{−i(ω−ω̄)τ}dω`.
//! Kernels are expanded into exponentials `Σ_k C_k e^{s_k τ}`; each memory
//! integral is advanced exactly for piecewise-linear `y`, and the
//! trapezoidal step is implicit (solved exactly, the system being linear).

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use super::{exp_weights, ResonanceProfile, TimeGrid, TimeSeries};
use crate::coupling::{decay_density, AtomConfig, CouplingSet};
use crate::error::{Error, Result};
use crate::green::GreenProvider;

pub const DEFAULT_MEMORY_CAP: usize = 256 * 1024 * 1024;

pub enum KernelSpec<'a> {
    /// `M(τ) = −Γ δ(τ)`: memoryless decay.
    Markovian { gamma: Matrix2<Complex64> },
    /// `M(τ) = −(Γ/2)Δω_m e^{−i(ω_m−ω̄)τ}e^{−Δω_m τ}`.
    Lorentzian { profile: ResonanceProfile, gamma: Matrix2<Complex64> },
    /// Frequency integral of the decay density of a Green-tensor source.
    TabulatedImG { atoms: &'a AtomConfig, green: &'a dyn GreenProvider },
}

impl<'a> KernelSpec<'a> {
    pub fn markovian(set: &CouplingSet) -> Self {
        KernelSpec::Markovian { gamma: set.gamma }
    }

    /// Symmetric atoms described by their collective rates `Γ±`.
    pub fn lorentzian_collective(profile: ResonanceProfile, gamma_plus: f64, gamma_minus: f64) -> Self {
        let diag = Complex64::new(0.5 * (gamma_plus + gamma_minus), 0.0);
        let off = Complex64::new(0.5 * (gamma_plus - gamma_minus), 0.0);
        KernelSpec::Lorentzian { profile, gamma: Matrix2::new(diag, off, off, diag) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraOptions {
    /// Bytes.
    pub memory_cap: usize,
    /// Minimum number of frequency nodes for tabulated kernels.
    pub frequency_samples: usize,
    /// Frequency interval for tabulated kernels; default from the provider.
    pub support: Option<(f64, f64)>,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        VolterraOptions { memory_cap: DEFAULT_MEMORY_CAP, frequency_samples: 4096, support: None }
    }
}

struct ExpTerm {
    coeff: Matrix2<Complex64>,
    decay: Complex64,
    alpha: Complex64,
    beta: Complex64,
}

fn build_terms(
    kernel: &KernelSpec<'_>,
    omega_bar: f64,
    grid: &TimeGrid,
    opts: &VolterraOptions,
) -> Result<(Vec<ExpTerm>, Matrix2<Complex64>)> {
    let h = grid.dt;
    let mk = |coeff: Matrix2<Complex64>, s: Complex64| {
        let (alpha, beta) = exp_weights(s, h);
        ExpTerm { coeff, decay: (s * h).exp(), alpha, beta }
    };
    match kernel {
        KernelSpec::Markovian { gamma } => Ok((Vec::new(), -gamma * Complex64::new(0.5, 0.0))),
        KernelSpec::Lorentzian { profile, gamma } => {
            let s = Complex64::new(-profile.delta_omega_m, -(profile.omega_m - omega_bar));
            let coeff = -gamma * Complex64::new(0.5 * profile.delta_omega_m, 0.0);
            Ok((vec![mk(coeff, s)], Matrix2::zeros()))
        }
        KernelSpec::TabulatedImG { atoms, green } => {
            let (lo, hi) = opts.support.or_else(|| green.support()).ok_or_else(|| {
                Error::invalid("tabulated kernel needs a finite frequency support")
            })?;
            // Spacing small enough that the discrete spectrum does not
            // recur within the simulated time.
            let needed = ((hi - lo) * grid.t_end() / std::f64::consts::PI).ceil() as usize + 1;
            let nodes = opts.frequency_samples.max(needed).max(2);
            let bytes = nodes * std::mem::size_of::<ExpTerm>()
                + nodes * 2 * std::mem::size_of::<Complex64>()
                + (grid.steps + 1) * 4 * std::mem::size_of::<Complex64>();
            if bytes > opts.memory_cap {
                return Err(Error::numeric(format!(
                    "memory kernel needs {nodes} frequency nodes ({} MiB > cap {} MiB); use a shorter time span or narrower support",
                    bytes >> 20,
                    opts.memory_cap >> 20
                )));
            }
            let dw = (hi - lo) / (nodes - 1) as f64;
            let mut terms = Vec::with_capacity(nodes);
            for k in 0..nodes {
                let w = lo + k as f64 * dw;
                let weight = if k == 0 || k == nodes - 1 { 0.5 * dw } else { dw };
                let mut g = Matrix2::zeros();
                for i in 0..2 {
                    for j in 0..2 {
                        g[(i, j)] = decay_density(atoms, *green, i, j, w)?;
                    }
                }
                let coeff = g * Complex64::new(-weight / (2.0 * std::f64::consts::PI), 0.0);
                terms.push(mk(coeff, Complex64::new(0.0, -(w - omega_bar))));
            }
            Ok((terms, Matrix2::zeros()))
        }
    }
}

/// Solves the amplitude equations with `C_A(0) = 1`, `C_B(0) = 0`.
/// `delta` holds `[δ_{A*B}, δ_{B*A}]`.
pub fn volterra_solve(
    kernel: &KernelSpec<'_>,
    delta: [Complex64; 2],
    omega_tilde: [f64; 2],
    grid: &TimeGrid,
    opts: &VolterraOptions,
) -> Result<TimeSeries> {
    let omega_bar = 0.5 * (omega_tilde[0] + omega_tilde[1]);
    let phi = [omega_tilde[0] - omega_bar, omega_tilde[1] - omega_bar];
    let i = Complex64::i();
    let (terms, local) = build_terms(kernel, omega_bar, grid, opts)?;
    let h = grid.dt;
    let hh = Complex64::new(0.5 * h, 0.0);
    let hmat = Matrix2::new(-i * phi[0], i * delta[0], i * delta[1], -i * phi[1]) + local;
    let implicit = terms.iter().fold(Matrix2::zeros(), |acc, t| acc + t.coeff * t.beta);
    let a = Matrix2::identity() - (hmat + implicit) * hh;
    let a_inv = a
        .try_inverse()
        .ok_or_else(|| Error::numeric("implicit step matrix is singular; reduce the time step"))?;

    let mut z = vec![Vector2::<Complex64>::zeros(); terms.len()];
    let mut y = Vector2::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    let mut memory = Vector2::zeros();
    let t = grid.times();
    let mut c_a = Vec::with_capacity(t.len());
    let mut c_b = Vec::with_capacity(t.len());
    c_a.push(y[0]);
    c_b.push(y[1]);
    for &tk in t.iter().skip(1) {
        let mut carried = Vector2::zeros();
        for (term, zk) in terms.iter().zip(z.iter_mut()) {
            *zk = *zk * term.decay + y * term.alpha;
            carried += term.coeff * *zk;
        }
        let rhs = y + (hmat * y + memory + carried) * hh;
        let next = a_inv * rhs;
        memory = Vector2::zeros();
        for (term, zk) in terms.iter().zip(z.iter_mut()) {
            *zk += next * term.beta;
            memory += term.coeff * *zk;
        }
        y = next;
        if !(y[0].norm().is_finite() && y[1].norm().is_finite()) {
            return Err(Error::numeric(format!("memory integration diverged at t = {tk:e} s")));
        }
        c_a.push(y[0] * Complex64::new(0.0, phi[0] * tk).exp());
        c_b.push(y[1] * Complex64::new(0.0, phi[1] * tk).exp());
    }
    Ok(TimeSeries::from_amplitudes(t, c_a, c_b))
}
