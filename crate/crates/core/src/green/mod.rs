//! Classical Green tensor of the surroundings.
//!
//! Convention: `G` is in 1/m and normalized so that in vacuum
//! `Im G(r, r, ω) = ω/(6πc) 𝟙`; with this choice
//! `Γ = (2ω²/ħε₀c²) d*·Im G·d` is the familiar free-space rate
//! `Γ₀ = ω³|d|²/(3πħε₀c³)` for SI inputs.

mod asymptotic;
mod resonance;
mod tabulated;

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::consts::C;
use crate::error::{Error, Result};
use crate::permittivity::{check_frequency, PermittivityModel};

pub use asymptotic::{asymptotic_delta_long, asymptotic_delta_short};
pub use resonance::ResonantEnvironment;
pub use tabulated::{
    format_table, read_table, write_table, Interpolation, TableEntry, TableKind, TabulatedGreen, TABLE_HEADER,
};

/// 3×3 complex Green tensor, units 1/m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenTensor(pub Matrix3<Complex64>);

impl GreenTensor {
    pub fn zeros() -> Self {
        GreenTensor(Matrix3::zeros())
    }

    pub fn from_parts(re: &Matrix3<f64>, im: &Matrix3<f64>) -> Self {
        GreenTensor(Matrix3::from_fn(|i, j| Complex64::new(re[(i, j)], im[(i, j)])))
    }

    pub fn re(&self) -> Matrix3<f64> {
        self.0.map(|z| z.re)
    }

    pub fn im(&self) -> Matrix3<f64> {
        self.0.map(|z| z.im)
    }

    pub fn transpose(&self) -> Self {
        GreenTensor(self.0.transpose())
    }

    /// `uᵀ G v` without conjugation; pass `u.conj()` for the `d*·G·d` forms.
    pub fn contract(&self, u: &Vector3<Complex64>, v: &Vector3<Complex64>) -> Complex64 {
        (u.transpose() * self.0 * v)[(0, 0)]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Add for GreenTensor {
    type Output = GreenTensor;
    fn add(self, rhs: GreenTensor) -> GreenTensor {
        GreenTensor(self.0 + rhs.0)
    }
}

/// `uᵀ M v` for a real matrix and complex vectors.
pub fn contract_real(m: &Matrix3<f64>, u: &Vector3<Complex64>, v: &Vector3<Complex64>) -> Complex64 {
    let mc = m.map(|x| Complex64::new(x, 0.0));
    (u.transpose() * mc * v)[(0, 0)]
}

/// A point at which the tensor is evaluated: an atom or an observation point.
///
/// The index keys tabulated data; the position feeds analytic sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub index: usize,
    pub position: Vector3<f64>,
}

impl Site {
    pub fn new(index: usize, position: Vector3<f64>) -> Self {
        Site { index, position }
    }
}

/// Anything that can supply the Green tensor of an environment.
pub trait GreenProvider: Send + Sync {
    /// Full tensor `G(r_a, r_b, ω)` between distinct sites.
    fn tensor(&self, a: &Site, b: &Site, omega: f64) -> Result<GreenTensor>;

    /// `Im G(r_a, r_a, ω)`: vacuum value plus any reflection contribution.
    fn equal_point_im(&self, a: &Site, omega: f64) -> Result<Matrix3<f64>>;

    /// Reflection part `G^R(r_a, r_a, ω)`, or `None` when there is none.
    fn reflection(&self, a: &Site, omega: f64) -> Result<Option<GreenTensor>>;

    /// Frequency interval covered by the data; `None` when unbounded.
    fn support(&self) -> Option<(f64, f64)> {
        None
    }
}

/// The environments that can be declared in a scenario.
#[derive(Debug, Clone)]
pub enum GreenSource {
    Vacuum,
    Bulk(PermittivityModel),
    Tabulated(TabulatedGreen),
}

impl GreenSource {
    /// Dispatching query used by the rest of the crate.
    pub fn query(&self, a: &Site, b: &Site, omega: f64) -> Result<GreenTensor> {
        self.tensor(a, b, omega)
    }
}

impl GreenProvider for GreenSource {
    fn tensor(&self, a: &Site, b: &Site, omega: f64) -> Result<GreenTensor> {
        match self {
            GreenSource::Vacuum => bulk_green(&PermittivityModel::Vacuum, &a.position, &b.position, omega),
            GreenSource::Bulk(model) => bulk_green(model, &a.position, &b.position, omega),
            GreenSource::Tabulated(t) => t.tensor(a, b, omega),
        }
    }

    fn equal_point_im(&self, a: &Site, omega: f64) -> Result<Matrix3<f64>> {
        match self {
            GreenSource::Vacuum => equal_point_im_vacuum(omega),
            GreenSource::Bulk(model) => {
                // Finite (propagating) part of the coincidence limit; the
                // near-field absorption term diverges for Im ε > 0.
                let n = model.refractive_index(omega)?;
                Ok(equal_point_im_vacuum(omega)? * n.re)
            }
            GreenSource::Tabulated(t) => t.equal_point_im(a, omega),
        }
    }

    fn reflection(&self, a: &Site, omega: f64) -> Result<Option<GreenTensor>> {
        match self {
            GreenSource::Vacuum | GreenSource::Bulk(_) => {
                check_frequency(omega)?;
                Ok(None)
            }
            GreenSource::Tabulated(t) => t.reflection(a, omega),
        }
    }

    fn support(&self) -> Option<(f64, f64)> {
        match self {
            GreenSource::Tabulated(t) => t.support(),
            _ => None,
        }
    }
}

/// `Im G(r, r, ω)` in vacuum: `(ω/6πc) 𝟙`.
pub fn equal_point_im_vacuum(omega: f64) -> Result<Matrix3<f64>> {
    check_frequency(omega)?;
    Ok(Matrix3::identity() * (omega / (6.0 * PI * C)))
}

const SERIES_RADIUS: f64 = 0.5;
const SERIES_TERMS: usize = 40;

/// Scalar factors `f, g` with `G = (k/4π)[f 𝟙 + g R̂R̂]` and `x = kR`:
/// `f = e^{ix}(x² + ix − 1)/x³`, `g = e^{ix}(3 − 3ix − x²)/x³`.
fn radial_factors(x: Complex64) -> (Complex64, Complex64) {
    if x.norm() >= SERIES_RADIUS {
        let e = (Complex64::i() * x).exp();
        let x2 = x * x;
        let x3 = x2 * x;
        let f = e * (x2 + Complex64::i() * x - 1.0) / x3;
        let g = e * (3.0 - 3.0 * Complex64::i() * x - x2) / x3;
        return (f, g);
    }
    // Termwise Laurent series; summing term by term keeps the O(x⁰)
    // imaginary part exact next to the O(x⁻³) near field.
    let mut inv_fact = [0.0f64; SERIES_TERMS + 1];
    inv_fact[0] = 1.0;
    for m in 1..=SERIES_TERMS {
        inv_fact[m] = inv_fact[m - 1] / m as f64;
    }
    let fact = |m: isize| -> f64 {
        if m < 0 {
            0.0
        } else {
            inv_fact[m as usize]
        }
    };
    let mut f = Complex64::new(0.0, 0.0);
    let mut g = Complex64::new(0.0, 0.0);
    let mut power = 1.0 / (x * x * x);
    let mut i_pow = Complex64::new(1.0, 0.0);
    for m in 0..=SERIES_TERMS as isize {
        let cm = -fact(m - 2) + fact(m - 1) - fact(m);
        let dm = 3.0 * fact(m) - 3.0 * fact(m - 1) + fact(m - 2);
        f += i_pow * cm * power;
        g += i_pow * dm * power;
        power *= x;
        i_pow *= Complex64::i();
    }
    (f, g)
}

/// Green tensor of an unbounded homogeneous medium, `k = n(ω)ω/c`:
/// `G = (e^{ikR}/4πR)[(1 + (ikR−1)/(kR)²) 𝟙 + (3(1−ikR)/(kR)² − 1) R̂⊗R̂]`.
pub fn bulk_green(
    model: &PermittivityModel,
    r_a: &Vector3<f64>,
    r_b: &Vector3<f64>,
    omega: f64,
) -> Result<GreenTensor> {
    let sep = r_a - r_b;
    let dist = sep.norm();
    if !(dist > 0.0) {
        return Err(Error::domain(
            "bulk Green tensor requested at coincident points",
        ));
    }
    let n = model.refractive_index(omega)?;
    let k = n * (omega / C);
    let (f, g) = radial_factors(k * dist);
    let unit = sep / dist;
    let outer = unit * unit.transpose();
    let pre = k / (4.0 * PI);
    Ok(GreenTensor(Matrix3::from_fn(|i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        pre * (f * delta + g * outer[(i, j)])
    })))
}
