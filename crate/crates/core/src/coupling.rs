//! Coupling coefficients of two atoms sharing one electromagnetic environment.
//!
//! Index convention: entry `(i, j)` of every matrix carries the conjugated
//! dipole of atom `i` on the left and is evaluated at the frequency of
//! atom `j`, i.e. `Γ[(0, 1)] = Γ_{A*B}`.

use nalgebra::{Matrix2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::consts::coupling_prefactor;
use crate::error::{Error, Result};
use crate::green::{contract_real, GreenProvider, Site};
use crate::quadrature::{integrate, principal_value, PvOptions, QuadOptions};

/// Relative frequency mismatch below which both atoms are evaluated at the
/// common mid-frequency.
pub const MID_FREQUENCY_THRESHOLD: f64 = 1e-3;
const KAPPA_IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    /// m
    pub position: Vector3<f64>,
    /// C·m
    pub dipole: Vector3<Complex64>,
    /// Bare transition frequency, rad/s.
    pub omega: f64,
    /// Medium-shifted frequency, rad/s; `None` until computed.
    pub omega_shifted: Option<f64>,
}

impl Atom {
    pub fn new(position: Vector3<f64>, dipole: Vector3<Complex64>, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::domain("atomic transition frequency must be positive"));
        }
        if dipole.norm() == 0.0 || dipole.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("dipole moment must be finite and non-zero"));
        }
        if position.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("atom position must be finite"));
        }
        Ok(Atom { position, dipole, omega, omega_shifted: None })
    }

    /// Real dipole along `axis` (normalized) with magnitude `norm`.
    pub fn real_dipole(axis: Vector3<f64>, norm: f64) -> Vector3<Complex64> {
        let unit = axis / axis.norm();
        unit.map(|x| Complex64::new(x * norm, 0.0))
    }

    pub fn with_shifted(mut self, omega_shifted: f64) -> Result<Self> {
        if !(omega_shifted > 0.0) {
            return Err(Error::domain("shifted transition frequency must be positive"));
        }
        self.omega_shifted = Some(omega_shifted);
        Ok(self)
    }

    pub fn shifted(&self) -> f64 {
        self.omega_shifted.unwrap_or(self.omega)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomConfig {
    pub atoms: [Atom; 2],
}

impl AtomConfig {
    pub fn new(a: Atom, b: Atom) -> Self {
        AtomConfig { atoms: [a, b] }
    }

    pub fn site(&self, i: usize) -> Site {
        Site::new(i, self.atoms[i].position)
    }

    pub fn separation(&self) -> f64 {
        (self.atoms[0].position - self.atoms[1].position).norm()
    }

    /// Frequency at which column `j` of the coupling matrices is evaluated.
    pub fn evaluation_frequency(&self, j: usize) -> f64 {
        let (wa, wb) = (self.atoms[0].shifted(), self.atoms[1].shifted());
        if (wa - wb).abs() < MID_FREQUENCY_THRESHOLD * wa.min(wb) {
            0.5 * (wa + wb)
        } else {
            self.atoms[j].shifted()
        }
    }

    fn column_frequency(&self, j: usize, fixed: Option<f64>) -> f64 {
        fixed.unwrap_or_else(|| self.evaluation_frequency(j))
    }
}

/// `2ω²/(ħε₀c²)·d_i*·Im G(r_i, r_j, ω)·d_j`, the frequency-resolved decay
/// coefficient; the equal-point imaginary part is used on the diagonal.
pub fn decay_density(
    atoms: &AtomConfig,
    green: &dyn GreenProvider,
    i: usize,
    j: usize,
    omega: f64,
) -> Result<Complex64> {
    let di = atoms.atoms[i].dipole.conjugate();
    let dj = &atoms.atoms[j].dipole;
    let im = if i == j {
        green.equal_point_im(&atoms.site(i), omega)?
    } else {
        green.tensor(&atoms.site(i), &atoms.site(j), omega)?.im()
    };
    Ok(contract_real(&im, &di, dj) * (2.0 * coupling_prefactor(omega)))
}

/// Same as [`decay_density`] restricted to the reflection part on the
/// diagonal (used for the single-atom shift).
fn reflection_density(atoms: &AtomConfig, green: &dyn GreenProvider, i: usize, omega: f64) -> Result<Complex64> {
    let d = &atoms.atoms[i].dipole;
    Ok(match green.reflection(&atoms.site(i), omega)? {
        Some(r) => contract_real(&r.im(), &d.conjugate(), d) * (2.0 * coupling_prefactor(omega)),
        None => Complex64::new(0.0, 0.0),
    })
}

/// Decay matrix Γ. `omega_eval` overrides the evaluation frequency of every
/// entry (e.g. a cavity resonance).
pub fn decay_matrix(
    atoms: &AtomConfig,
    green: &dyn GreenProvider,
    omega_eval: Option<f64>,
) -> Result<Matrix2<Complex64>> {
    let mut out = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = decay_density(atoms, green, i, j, atoms.column_frequency(j, omega_eval))?;
        }
    }
    Ok(out)
}

/// Off-diagonal resonant dipole-dipole shifts
/// `δ_{A*A'} = (ω̃_{A'}²/ħε₀c²)·d_A*·Re G(r_A, r_{A'}, ω̃_{A'})·d_{A'}`;
/// the diagonal is left at zero.
pub fn dd_shift(
    atoms: &AtomConfig,
    green: &dyn GreenProvider,
    omega_eval: Option<f64>,
) -> Result<Matrix2<Complex64>> {
    if !(atoms.separation() > 0.0) {
        return Err(Error::domain("dipole-dipole shift needs distinct atom positions"));
    }
    let mut out = Matrix2::zeros();
    for (i, j) in [(0, 1), (1, 0)] {
        let w = atoms.column_frequency(j, omega_eval);
        let g = green.tensor(&atoms.site(i), &atoms.site(j), w)?;
        out[(i, j)] = contract_real(&g.re(), &atoms.atoms[i].dipole.conjugate(), &atoms.atoms[j].dipole)
            * coupling_prefactor(w);
    }
    Ok(out)
}

/// `𝒦_{A*B} = i(ω̃_B²/ħε₀c²)·d_A*·G·d_B` and its mirror, cross-checked
/// against `−Γ/2 + iδ`.
pub fn kappa(
    atoms: &AtomConfig,
    green: &dyn GreenProvider,
    omega_eval: Option<f64>,
) -> Result<(Complex64, Complex64)> {
    let gamma = decay_matrix(atoms, green, omega_eval)?;
    let delta = dd_shift(atoms, green, omega_eval)?;
    let mut k = [Complex64::new(0.0, 0.0); 2];
    for (slot, (i, j)) in [(0, 1), (1, 0)].into_iter().enumerate() {
        let w = atoms.column_frequency(j, omega_eval);
        let g = green.tensor(&atoms.site(i), &atoms.site(j), w)?;
        let direct = Complex64::i()
            * g.contract(&atoms.atoms[i].dipole.conjugate(), &atoms.atoms[j].dipole)
            * coupling_prefactor(w);
        let split = -0.5 * gamma[(i, j)] + Complex64::i() * delta[(i, j)];
        let scale = direct.norm().max(split.norm());
        if (direct - split).norm() > KAPPA_IDENTITY_TOL * scale {
            return Err(Error::numeric(format!(
                "coupling decomposition mismatch for ({i},{j}): {direct} vs {split}"
            )));
        }
        k[slot] = direct;
    }
    Ok((k[0], k[1]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvSettings {
    /// Half-width of the paired near-pole window, rad/s; default 10 line widths.
    pub split: Option<f64>,
    /// Frequency interval of the integration; default from the provider.
    pub support: Option<(f64, f64)>,
    pub quad: QuadOptions,
}

impl Default for PvSettings {
    fn default() -> Self {
        PvSettings { split: None, support: None, quad: QuadOptions::default() }
    }
}

pub const DEFAULT_SPLIT_LINEWIDTHS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvComponents {
    pub minus: Matrix2<Complex64>,
    pub plus: Matrix2<Complex64>,
}

fn resolve_support(green: &dyn GreenProvider, settings: &PvSettings) -> Result<(f64, f64)> {
    settings.support.or_else(|| green.support()).ok_or_else(|| {
        Error::invalid("frequency integrals need a finite support; none given and the source is unbounded")
    })
}

fn split_window(split: Option<f64>, linewidth: f64, pole: f64, lo: f64, hi: f64) -> f64 {
    let room = 0.5 * (pole - lo).min(hi - pole);
    let w = split.unwrap_or(DEFAULT_SPLIT_LINEWIDTHS * linewidth.abs());
    if w > 0.0 && w.is_finite() {
        w.min(room)
    } else {
        room
    }
}

/// One pair of principal-value components
/// `δ∓ = (1/2π)·P∫ Γ(ω)/(ω ∓ ω_pole) dω` over `[lo, hi]`.
fn pv_pair<F>(density: F, pole: f64, window: f64, lo: f64, hi: f64, quad: &QuadOptions) -> Result<(Complex64, Complex64)>
where
    F: Fn(f64) -> Complex64,
{
    if !(pole > lo && pole < hi) {
        return Err(Error::domain(format!(
            "pole {pole:e} rad/s outside integration support [{lo:e}, {hi:e}]"
        )));
    }
    let mut opts = PvOptions::with_window(window);
    opts.quad = *quad;
    let minus = principal_value(&density, lo, hi, pole, &opts)?.value;
    let plus = integrate(|w: f64| density(w) * (1.0 / (w + pole)), lo, hi, quad)?.value;
    let norm = 1.0 / (2.0 * std::f64::consts::PI);
    Ok((minus * norm, plus * norm))
}

/// Principal-value components `δ∓_{A*A'}`. Off-diagonal entries use the full
/// tensor and `ω̃_{A'}`; diagonal entries use the reflection part and the
/// bare `ω_A`.
pub fn pv_components(atoms: &AtomConfig, green: &dyn GreenProvider, settings: &PvSettings) -> Result<PvComponents> {
    let (lo, hi) = resolve_support(green, settings)?;
    let mut minus = Matrix2::zeros();
    let mut plus = Matrix2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let (pole, linewidth) = if i == j {
                let w = atoms.atoms[i].omega;
                (w, decay_density(atoms, green, i, i, w.clamp(lo, hi))?.re)
            } else {
                let w = atoms.evaluation_frequency(j);
                (w, decay_density(atoms, green, j, j, w.clamp(lo, hi))?.re)
            };
            let window = split_window(settings.split, linewidth, pole, lo, hi);
            let (m, p) = if i == j {
                pv_pair(|w| reflection_density(atoms, green, i, w).unwrap_or(Complex64::new(f64::NAN, 0.0)), pole, window, lo, hi, &settings.quad)?
            } else {
                pv_pair(|w| decay_density(atoms, green, i, j, w).unwrap_or(Complex64::new(f64::NAN, 0.0)), pole, window, lo, hi, &settings.quad)?
            };
            if !(m.re.is_finite() && m.im.is_finite() && p.re.is_finite() && p.im.is_finite()) {
                return Err(Error::numeric(format!("principal-value integral ({i},{j}) is not finite")));
            }
            minus[(i, j)] = m;
            plus[(i, j)] = p;
        }
    }
    Ok(PvComponents { minus, plus })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambShift {
    /// rad/s
    pub value: f64,
    /// `2δ⁺` term subtracted when the correction is enabled.
    pub correction: f64,
    /// No reflection data: the shift is taken as already contained in ω_A.
    pub vacuum_only: bool,
}

/// Single-atom shift from the reflection part,
/// `δ_{A*A} = (ω_A²/ħε₀c²)·d_A*·Re G^R(r_A, r_A, ω_A)·d_A − 2δ⁺_{A*A}`.
pub fn lamb_shift(
    atoms: &AtomConfig,
    index: usize,
    green: &dyn GreenProvider,
    quantum_correction: bool,
    settings: &PvSettings,
) -> Result<LambShift> {
    let atom = &atoms.atoms[index];
    let w = atom.omega;
    let Some(refl) = green.reflection(&atoms.site(index), w)? else {
        return Ok(LambShift { value: 0.0, correction: 0.0, vacuum_only: true });
    };
    let leading = (contract_real(&refl.re(), &atom.dipole.conjugate(), &atom.dipole) * coupling_prefactor(w)).re;
    let correction = if quantum_correction {
        let (lo, hi) = resolve_support(green, settings)?;
        let d = |x: f64| reflection_density(atoms, green, index, x).unwrap_or(Complex64::new(f64::NAN, 0.0));
        let plus = integrate(|x: f64| d(x) * (1.0 / (x + w)), lo, hi, &settings.quad)?.value
            / (2.0 * std::f64::consts::PI);
        2.0 * plus.re
    } else {
        0.0
    };
    if !correction.is_finite() {
        return Err(Error::numeric("single-atom shift correction is not finite"));
    }
    Ok(LambShift { value: leading - correction, correction, vacuum_only: false })
}

/// Where a coupling set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingOrigin {
    Geometry,
    Override,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingOptions {
    /// Compute ω̃ = ω − δ_{A*A} for atoms without a fixed shifted frequency.
    pub lamb_shift: bool,
    pub quantum_correction: bool,
    /// Evaluate every coefficient at this frequency (e.g. ω_m).
    pub omega_eval: Option<f64>,
    pub pv: PvSettings,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions { lamb_shift: true, quantum_correction: false, omega_eval: None, pv: PvSettings::default() }
    }
}

/// Complete set of coefficients entering the amplitude equations.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet {
    pub gamma: Matrix2<Complex64>,
    /// Off-diagonal: δ_{A*A'}; diagonal: single-atom shifts.
    pub delta: Matrix2<Complex64>,
    /// Off-diagonal: 𝒦_{A*A'}; diagonal: −Γ_{A*A}/2.
    pub kappa: Matrix2<Complex64>,
    pub omega_tilde: [f64; 2],
    pub origin: CouplingOrigin,
}

impl CouplingSet {
    pub fn from_geometry(atoms: &AtomConfig, green: &dyn GreenProvider, opts: &CouplingOptions) -> Result<(Self, AtomConfig)> {
        let mut resolved = atoms.clone();
        let mut self_shift = [0.0; 2];
        for i in 0..2 {
            if resolved.atoms[i].omega_shifted.is_none() {
                if opts.lamb_shift {
                    let s = lamb_shift(atoms, i, green, opts.quantum_correction, &opts.pv)?;
                    self_shift[i] = s.value;
                }
                let w = resolved.atoms[i].omega - self_shift[i];
                if !(w > 0.0) {
                    return Err(Error::model(format!("shifted frequency of atom {i} is not positive")));
                }
                resolved.atoms[i].omega_shifted = Some(w);
            } else {
                self_shift[i] = resolved.atoms[i].omega - resolved.atoms[i].shifted();
            }
        }
        let gamma = decay_matrix(&resolved, green, opts.omega_eval)?;
        for i in 0..2 {
            if gamma[(i, i)].re < 0.0 {
                return Err(Error::model(format!("negative single-atom decay rate for atom {i}")));
            }
        }
        let mut delta = dd_shift(&resolved, green, opts.omega_eval)?;
        delta[(0, 0)] = Complex64::new(self_shift[0], 0.0);
        delta[(1, 1)] = Complex64::new(self_shift[1], 0.0);
        let (kab, kba) = kappa(&resolved, green, opts.omega_eval)?;
        let kappa = Matrix2::new(-0.5 * gamma[(0, 0)], kab, kba, -0.5 * gamma[(1, 1)]);
        let omega_tilde = [resolved.atoms[0].shifted(), resolved.atoms[1].shifted()];
        Ok((CouplingSet { gamma, delta, kappa, omega_tilde, origin: CouplingOrigin::Geometry }, resolved))
    }

    /// Symmetric real coefficients given directly (rates in 1/s, shift in rad/s).
    pub fn from_coefficients(gamma_aa: f64, gamma_bb: f64, gamma_ab: f64, delta_ab: f64, omega_tilde: [f64; 2]) -> Result<Self> {
        for (name, v) in [("gamma_aa", gamma_aa), ("gamma_bb", gamma_bb), ("gamma_ab", gamma_ab), ("delta_ab", delta_ab)] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite")));
            }
        }
        if gamma_aa < 0.0 || gamma_bb < 0.0 {
            return Err(Error::model("single-atom decay rates must be nonnegative"));
        }
        let c = |x: f64| Complex64::new(x, 0.0);
        let gamma = Matrix2::new(c(gamma_aa), c(gamma_ab), c(gamma_ab), c(gamma_bb));
        let delta = Matrix2::new(c(0.0), c(delta_ab), c(delta_ab), c(0.0));
        let k = Complex64::new(-0.5 * gamma_ab, delta_ab);
        let kappa = Matrix2::new(c(-0.5 * gamma_aa), k, k, c(-0.5 * gamma_bb));
        Ok(CouplingSet { gamma, delta, kappa, omega_tilde, origin: CouplingOrigin::Override })
    }

    pub fn gamma_aa(&self) -> f64 {
        self.gamma[(0, 0)].re
    }

    pub fn gamma_bb(&self) -> f64 {
        self.gamma[(1, 1)].re
    }

    /// 𝒦_{A*B}
    pub fn kappa_ab(&self) -> Complex64 {
        self.kappa[(0, 1)]
    }

    /// 𝒦_{B*A}
    pub fn kappa_ba(&self) -> Complex64 {
        self.kappa[(1, 0)]
    }

    /// True when the Hermitian part of Γ is positive semidefinite, the
    /// condition for populations to stay bounded.
    pub fn is_passive(&self) -> bool {
        let h = (self.gamma + self.gamma.adjoint()) * Complex64::new(0.5, 0.0);
        let (a, b) = (h[(0, 0)].re, h[(1, 1)].re);
        let scale: f64 = a.abs().max(b.abs());
        let tol = 1e-12 * scale;
        a >= -tol && b >= -tol && a * b - h[(0, 1)].norm_sqr() >= -tol * scale
    }

    /// Largest relative violation of `|Γ_{A*B}| ≤ √(Γ_{A*A}Γ_{B*B})`; ≤ 0 when satisfied.
    pub fn cauchy_schwarz_excess(&self) -> f64 {
        let bound = (self.gamma_aa() * self.gamma_bb()).sqrt();
        let worst = self.gamma[(0, 1)].norm().max(self.gamma[(1, 0)].norm());
        if bound > 0.0 {
            worst / bound - 1.0
        } else if worst == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Collective {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

/// `Γ± = Γ_{A*A} ± Γ_{A*B}`, `Ω± = √(2Γ±Δω_m)`.
pub fn collective_params(set: &CouplingSet, delta_omega_m: f64) -> Result<Collective> {
    if !(delta_omega_m > 0.0) {
        return Err(Error::domain("resonance half-width must be positive"));
    }
    let gab = set.gamma[(0, 1)];
    if gab.im.abs() > 1e-9 * gab.norm().max(set.gamma_aa()) {
        return Err(Error::model("collective rates need a real cross decay coefficient"));
    }
    let gamma_plus = set.gamma_aa() + gab.re;
    let gamma_minus = set.gamma_aa() - gab.re;
    let tol = 1e-12 * set.gamma_aa().abs();
    if gamma_plus < -tol || gamma_minus < -tol {
        return Err(Error::model(format!(
            "negative collective decay rate (Γ+ = {gamma_plus:e}, Γ- = {gamma_minus:e})"
        )));
    }
    let gamma_plus = gamma_plus.max(0.0);
    let gamma_minus = gamma_minus.max(0.0);
    Ok(Collective {
        gamma_plus,
        gamma_minus,
        omega_plus: (2.0 * gamma_plus * delta_omega_m).sqrt(),
        omega_minus: (2.0 * gamma_minus * delta_omega_m).sqrt(),
    })
}
