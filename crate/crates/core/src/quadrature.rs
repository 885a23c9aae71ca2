//! Adaptive Gauss-Kronrod quadrature and Cauchy principal values.
//!
//! Integrands may be real, complex or complex 3-vectors (see [`QuadValue`]).
//! Principal values `P∫ f(x)/(x − p) dx` are computed by excluding a
//! symmetric window `(p − h, p + h)` around the pole and extrapolating
//! `h → 0` over `{h, h/2, h/4}`; inside the near-pole region the two sides
//! are paired so the integrand stays bounded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Sub};

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn scaled(self, s: f64) -> Self;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn scaled(self, s: f64) -> Self {
        self * s
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn scaled(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
}

impl QuadValue for Vector3<Complex64> {
    fn zero() -> Self {
        Vector3::zeros()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn scaled(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T> {
    pub value: T,
    /// Estimated absolute error.
    pub error: f64,
    /// Estimate of ∫|f|, used as the scale for cancellation-limited results.
    pub scale: f64,
}

// 15-point Kronrod nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights on the odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    scale: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> Panel<T> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc.scaled(WGK[7]);
    let mut gauss = fc.scaled(WG[3]);
    let mut scale = fc.magnitude() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let pair = f1 + f2;
        kronrod = kronrod + pair.scaled(WGK[j]);
        scale += (f1.magnitude() + f2.magnitude()) * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + pair.scaled(WG[j / 2]);
        }
    }
    let value = kronrod.scaled(half);
    let scale = scale * half.abs();
    let diff = (kronrod - gauss).magnitude() * half.abs();
    // QUADPACK-style error scaling of the Gauss/Kronrod difference.
    let error = if diff == 0.0 || scale == 0.0 {
        diff
    } else {
        let r = (200.0 * diff / scale).powf(1.5);
        scale * r.min(1.0)
    }
    .max(50.0 * f64::EPSILON * scale);
    Panel {
        a,
        b,
        value,
        error,
        scale,
    }
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("integration limits must be finite"));
    }
    if a == b {
        return Ok(Estimate {
            value: T::zero(),
            error: 0.0,
            scale: 0.0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut scale = first.scale;
    heap.push(first);
    loop {
        let target = opts
            .abs_tol
            .max(opts.rel_tol * value.magnitude())
            .max(64.0 * f64::EPSILON * scale);
        if error <= target {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::numeric(format!(
                "quadrature on [{a:e}, {b:e}] did not converge: error {error:e} > {target:e}"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        value = value - worst.value + left.value + right.value;
        error += left.error + right.error - worst.error;
        scale += left.scale + right.scale - worst.scale;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed accumulated update rounding.
    let mut total = T::zero();
    let mut err = 0.0;
    for p in heap.iter() {
        total = total + p.value;
        err += p.error;
    }
    Ok(Estimate {
        value: total,
        error: err,
        scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvOptions {
    /// Half-width of the symmetric region around the pole that is treated by
    /// pairing `x = p ± u`. Clipped to the integration interval.
    pub window: f64,
    /// First exclusion half-width as a fraction of the (clipped) window.
    pub exclusion_fraction: f64,
    pub quad: QuadOptions,
}

impl PvOptions {
    pub fn with_window(window: f64) -> Self {
        PvOptions {
            window,
            exclusion_fraction: 1e-3,
            quad: QuadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PvEstimate<T> {
    pub value: T,
    pub error: f64,
    /// Excluded-window integrals for half-widths `h`, `h/2`, `h/4`.
    pub excluded: [T; 3],
    pub exclusion: f64,
}

/// Principal value `P∫_a^b f(x) / (x − pole) dx` for `a < pole < b`.
pub fn principal_value<T, F>(
    f: F,
    a: f64,
    b: f64,
    pole: f64,
    opts: &PvOptions,
) -> Result<PvEstimate<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if !(a < pole && pole < b) {
        return Err(Error::domain(format!(
            "pole {pole:e} outside integration support ({a:e}, {b:e})"
        )));
    }
    if !(opts.window > 0.0) || !(opts.exclusion_fraction > 0.0 && opts.exclusion_fraction < 1.0)
    {
        return Err(Error::invalid(
            "principal-value window must be positive and exclusion fraction in (0, 1)",
        ));
    }
    let w = opts.window.min(pole - a).min(b - pole);
    let h = opts.exclusion_fraction * w;

    let regular = |x: f64| f(x).scaled(1.0 / (x - pole));
    let left = integrate(regular, a, pole - w, &opts.quad)?;
    let right = integrate(regular, pole + w, b, &opts.quad)?;
    let outer = left.value + right.value;

    let paired = |u: f64| (f(pole + u) - f(pole - u)).scaled(1.0 / u);
    let core = integrate(paired, h, w, &opts.quad)?;
    let s1 = integrate(paired, 0.5 * h, h, &opts.quad)?;
    let s2 = integrate(paired, 0.25 * h, 0.5 * h, &opts.quad)?;

    let j_h = outer + core.value;
    let j_h2 = j_h + s1.value;
    let j_h4 = j_h2 + s2.value;

    // I(h) = PV − 2f'(p)h − f'''(p)h³/9 − O(h⁵)
    let r1_h = j_h2.scaled(2.0) - j_h;
    let r1_h2 = j_h4.scaled(2.0) - j_h2;
    let r2 = (r1_h2.scaled(8.0) - r1_h).scaled(1.0 / 7.0);

    let quad_err = left.error + right.error + core.error + s1.error + s2.error;
    let extrap_err = (r2 - r1_h2).magnitude();
    Ok(PvEstimate {
        value: r2,
        error: quad_err + extrap_err,
        excluded: [j_h, j_h2, j_h4],
        exclusion: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let est = integrate(|x: f64| 3.0 * x * x, 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert_relative_eq!(est.value, 8.0, max_relative = 1e-14);
    }

    #[test]
    fn peaked_integrand() {
        let g = 1e-3;
        let est = integrate(
            |x: f64| g / ((x - 0.3) * (x - 0.3) + g * g),
            -1.0,
            1.0,
            &QuadOptions::default(),
        )
        .unwrap();
        let exact = (0.7 / g).atan() + (1.3 / g).atan();
        assert_relative_eq!(est.value, exact, max_relative = 1e-10);
    }

    #[test]
    fn complex_oscillatory() {
        let est = integrate(
            |x: f64| Complex64::new(0.0, 40.0 * x).exp(),
            0.0,
            1.0,
            &QuadOptions::default(),
        )
        .unwrap();
        let exact = (Complex64::new(0.0, 40.0).exp() - 1.0) / Complex64::new(0.0, 40.0);
        assert!((est.value - exact).norm() < 1e-12);
    }

    #[test]
    fn pv_of_constant_over_symmetric_interval_vanishes() {
        let est =
            principal_value(|_x: f64| 1.0, -2.0, 2.0, 0.0, &PvOptions::with_window(0.5)).unwrap();
        assert!(est.value.abs() < 1e-13);
    }

    #[test]
    fn pv_log_closed_form() {
        // P∫_0^3 dx / (x − 1) = ln 2
        let est =
            principal_value(|_x: f64| 1.0, 0.0, 3.0, 1.0, &PvOptions::with_window(0.2)).unwrap();
        assert_relative_eq!(est.value, 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn pv_lorentzian_finite_interval() {
        // Partial-fraction closed form of P∫ γ/((x−c)²+γ²) /(x − p) dx on [a, b].
        let (c, g, p, a, b): (f64, f64, f64, f64, f64) = (1.0, 0.05, 0.93, 0.0, 4.0);
        let d = p - c;
        let (u1, u2) = (a - c, b - c);
        let exact = g / (d * d + g * g)
            * (((u2 - d) / (u1 - d)).abs().ln()
                - 0.5 * ((u2 * u2 + g * g) / (u1 * u1 + g * g)).ln()
                - d / g * ((u2 / g).atan() - (u1 / g).atan()));
        let est = principal_value(
            |x: f64| g / ((x - c) * (x - c) + g * g),
            a,
            b,
            p,
            &PvOptions::with_window(0.5),
        )
        .unwrap();
        assert_relative_eq!(est.value, exact, max_relative = 1e-9);
        // Excluded integrals approach the limit roughly linearly in h.
        let e: Vec<f64> = est.excluded.iter().map(|v| (v - exact).abs()).collect();
        assert!(e[0] > e[1] && e[1] > e[2]);
    }

    #[test]
    fn pv_window_insensitive() {
        let f = |x: f64| (x * 3.0).sin() + x * x;
        let a = principal_value(f, 0.0, PI, 1.2, &PvOptions::with_window(0.05)).unwrap();
        let b = principal_value(f, 0.0, PI, 1.2, &PvOptions::with_window(1.0)).unwrap();
        assert_relative_eq!(a.value, b.value, max_relative = 1e-10);
    }

    #[test]
    fn pole_outside_support() {
        let r = principal_value(|_x: f64| 1.0, 0.0, 1.0, 2.0, &PvOptions::with_window(0.1));
        assert!(matches!(r, Err(Error::Domain(_))));
    }
}
