//! Closed-form bulk limits of the resonant dipole-dipole shift.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::consts::{C, EPSILON_0, HBAR};
use crate::error::{Error, Result};
use crate::permittivity::PermittivityModel;

fn geometry(r_a: &Vector3<f64>, r_b: &Vector3<f64>) -> Result<(f64, Vector3<Complex64>)> {
    let sep = r_a - r_b;
    let dist = sep.norm();
    if !(dist > 0.0) {
        return Err(Error::domain("asymptotic shift needs distinct atom positions"));
    }
    Ok((dist, (sep / dist).map(|x| Complex64::new(x, 0.0))))
}

fn dot(u: &Vector3<Complex64>, v: &Vector3<Complex64>) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// Near-field limit `ω̃R/c → 0`:
/// `δ = Re[1/ε]·(3(d_A*·R̂)(d_B·R̂) − d_A*·d_B)/(4πħε₀R³)`.
pub fn asymptotic_delta_short(
    d_a: &Vector3<Complex64>,
    r_a: &Vector3<f64>,
    d_b: &Vector3<Complex64>,
    r_b: &Vector3<f64>,
    model: &PermittivityModel,
    omega: f64,
) -> Result<Complex64> {
    let (dist, unit) = geometry(r_a, r_b)?;
    let eps = model.evaluate(omega)?;
    let da = d_a.conjugate();
    let angular = 3.0 * dot(&da, &unit) * dot(d_b, &unit) - dot(&da, d_b);
    Ok(angular * (1.0 / eps).re / (4.0 * PI * HBAR * EPSILON_0 * dist.powi(3)))
}

/// Far-field limit `ω̃R/c → ∞`:
/// `δ = ω̃²/(4πħε₀c²R)·(d_A*·d_B − (d_A*·R̂)(d_B·R̂))·cos(n_R ω̃R/c)·e^{−n_I ω̃R/c}`.
pub fn asymptotic_delta_long(
    d_a: &Vector3<Complex64>,
    r_a: &Vector3<f64>,
    d_b: &Vector3<Complex64>,
    r_b: &Vector3<f64>,
    model: &PermittivityModel,
    omega: f64,
) -> Result<Complex64> {
    let (dist, unit) = geometry(r_a, r_b)?;
    let n = model.refractive_index(omega)?;
    let da = d_a.conjugate();
    let transverse = dot(&da, d_b) - dot(&da, &unit) * dot(d_b, &unit);
    let phase = omega * dist / C;
    let envelope = (n.re * phase).cos() * (-n.im * phase).exp();
    Ok(transverse * envelope * omega * omega / (4.0 * PI * HBAR * EPSILON_0 * C * C * dist))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::DEBYE;
    use approx::assert_relative_eq;

    fn real(v: [f64; 3]) -> Vector3<Complex64> {
        Vector3::new(v[0], v[1], v[2]).map(|x| Complex64::new(x, 0.0))
    }

    const W: f64 = 2.5e15;

    #[test]
    fn short_perpendicular_and_parallel() {
        let d = real([DEBYE, 0.0, 0.0]);
        let r: f64 = 5e-9;
        let base = DEBYE * DEBYE / (4.0 * PI * HBAR * EPSILON_0 * r.powi(3));
        let o = Vector3::zeros();
        let perp = asymptotic_delta_short(&d, &o, &d, &Vector3::new(0.0, r, 0.0), &PermittivityModel::Vacuum, W).unwrap();
        assert_relative_eq!(perp.re, -base, max_relative = 1e-14);
        let par = asymptotic_delta_short(&d, &o, &d, &Vector3::new(r, 0.0, 0.0), &PermittivityModel::Vacuum, W).unwrap();
        assert_relative_eq!(par.re, 2.0 * base, max_relative = 1e-14);
    }

    #[test]
    fn short_lossy_scaling() {
        // 1/(2+2i) = (2−2i)/8 → real part 0.25
        let d = real([0.0, 0.0, DEBYE]);
        let o = Vector3::zeros();
        let rb = Vector3::new(3e-9, 0.0, 0.0);
        let vac = asymptotic_delta_short(&d, &o, &d, &rb, &PermittivityModel::Vacuum, W).unwrap();
        let lossy = PermittivityModel::constant(2.0, 2.0).unwrap();
        let med = asymptotic_delta_short(&d, &o, &d, &rb, &lossy, W).unwrap();
        assert_relative_eq!(med.re, 0.25 * vac.re, max_relative = 1e-14);
    }

    #[test]
    fn long_transverse_projection() {
        let d = real([DEBYE, 0.0, 0.0]);
        let o = Vector3::zeros();
        let along = asymptotic_delta_long(&d, &o, &d, &Vector3::new(1e-5, 0.0, 0.0), &PermittivityModel::Vacuum, W).unwrap();
        assert!(along.norm() < 1e-30);
    }

    #[test]
    fn long_damping_factor() {
        let d = real([DEBYE, 0.0, 0.0]);
        let o = Vector3::zeros();
        let lossy = PermittivityModel::constant(2.0, 0.5).unwrap();
        let n = lossy.refractive_index(W).unwrap();
        let r = std::f64::consts::LN_2 * C / (n.im * W);
        let rb = Vector3::new(0.0, r, 0.0);
        let got = asymptotic_delta_long(&d, &o, &d, &rb, &lossy, W).unwrap();
        let undamped = W * W / (4.0 * PI * HBAR * EPSILON_0 * C * C * r) * DEBYE * DEBYE * (n.re * W * r / C).cos();
        assert_relative_eq!(got.re, 0.5 * undamped, max_relative = 1e-12);
    }

    #[test]
    fn long_lossless_scales_inverse_distance() {
        let d = real([0.0, 0.0, DEBYE]);
        let o = Vector3::zeros();
        let lambda = 2.0 * PI * C / W;
        // whole wavelengths keep the cosine at one
        let a = asymptotic_delta_long(&d, &o, &d, &Vector3::new(10.0 * lambda, 0.0, 0.0), &PermittivityModel::Vacuum, W).unwrap();
        let b = asymptotic_delta_long(&d, &o, &d, &Vector3::new(20.0 * lambda, 0.0, 0.0), &PermittivityModel::Vacuum, W).unwrap();
        assert_relative_eq!(a.re, 2.0 * b.re, max_relative = 1e-9);
    }
}
