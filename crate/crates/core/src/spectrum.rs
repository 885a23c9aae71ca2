//! Emitted-light spectra at a fixed observation point.
//!
//! Values are the modulus squared of the bracketed amplitudes (arbitrary
//! units); only relative heights, widths and positions are meaningful.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::Serialize;

use crate::consts::{C, EPSILON_0};
use crate::coupling::{AtomConfig, PvSettings};
use crate::dynamics::{exp_weights, Branch, ResonanceProfile, StrongParams, TimeSeries};
use crate::error::{Error, Result};
use crate::green::{GreenProvider, Site};
use crate::quadrature::{principal_value, PvOptions};

/// Site index used for the observation point in Green-tensor queries.
pub const OBSERVER_INDEX: usize = 2;
pub const DEFAULT_GRID_POINTS: usize = 2001;

type CVec = Vector3<Complex64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMeta {
    /// `weak`, `strong` or `finite-T`.
    pub regime: String,
    pub branch: Option<Branch>,
    pub observation: Option<[f64; 3]>,
    /// Detector operating time for finite-T spectra, s.
    pub t_obs: Option<f64>,
}

impl SpectrumMeta {
    pub fn new(regime: &str) -> Self {
        SpectrumMeta { regime: regime.to_string(), branch: None, observation: None, t_obs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSeries {
    pub omega_s: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SpectrumMeta,
    pub warnings: Vec<String>,
}

impl SpectrumSeries {
    fn new(omega_s: Vec<f64>, values: Vec<f64>, meta: SpectrumMeta) -> Self {
        SpectrumSeries { omega_s, values, meta, warnings: Vec::new() }
    }

    pub fn with_observation(mut self, r: Vector3<f64>) -> Self {
        self.meta.observation = Some([r.x, r.y, r.z]);
        self
    }

    fn warn(&mut self, message: String) {
        log::debug!("{message}");
        self.warnings.push(message);
    }

    /// Trapezoidal integral over the grid.
    pub fn integral(&self) -> f64 {
        self.omega_s
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(w, v)| 0.5 * (w[1] - w[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Emission vectors of the two atoms at one observation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmissionVectors {
    pub f_a: CVec,
    pub f_b: CVec,
    pub w_a: Option<CVec>,
    pub w_b: Option<CVec>,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("spectral grid is empty"));
    }
    if grid.iter().any(|w| !w.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("spectral grid must be finite and strictly increasing"));
    }
    Ok(())
}

/// `n` equidistant setting frequencies spanning `ω̃_A ± max(10δ, 10Γ₊, 2Ω)`.
pub fn default_grid(omega_a: f64, delta_ab: f64, gamma_plus: f64, omega_rabi: Option<f64>, n: usize) -> Vec<f64> {
    let span = (10.0 * delta_ab.abs()).max(10.0 * gamma_plus.abs()).max(2.0 * omega_rabi.unwrap_or(0.0).abs());
    let n = n.max(2);
    (0..n).map(|k| omega_a - span + 2.0 * span * k as f64 / (n - 1) as f64).collect()
}

/// Weak-coupling emission vector
/// `F = (ω̃²/πε₀c²)∫dω Im G(r, r_A, ω)·d·ζ(ω̃ − ω)` with
/// `ζ(x) = πδ(x) + i𝒫/x`, integrated over `window`. `pv.split` sets the
/// paired near-pole region and should cover a few widths of `Im G`.
pub fn emission_vector_weak(
    green: &dyn GreenProvider,
    observer: Vector3<f64>,
    atoms: &AtomConfig,
    atom: usize,
    window: (f64, f64),
    pv: &PvSettings,
) -> Result<CVec> {
    let (lo, hi) = window;
    let a = &atoms.atoms[atom];
    let w = a.shifted();
    if !(lo < w && w < hi) {
        return Err(Error::domain(format!(
            "emission window [{lo:e}, {hi:e}] excludes the transition frequency {w:e}"
        )));
    }
    let obs = Site::new(OBSERVER_INDEX, observer);
    let src = atoms.site(atom);
    let im_g_d = |omega: f64| -> CVec {
        match green.tensor(&obs, &src, omega) {
            Ok(g) => g.im().map(|x| Complex64::new(x, 0.0)) * a.dipole,
            Err(_) => CVec::repeat(Complex64::new(f64::NAN, 0.0)),
        }
    };
    let at_pole = green.tensor(&obs, &src, w)?.im().map(|x| Complex64::new(x, 0.0)) * a.dipole;
    let room = 0.5 * (w - lo).min(hi - w);
    let mut opts = PvOptions::with_window(pv.split.map_or(room, |x| x.min(room)));
    opts.quad = pv.quad;
    // 𝒫∫ f/(ω̃ − ω) = −𝒫∫ f/(ω − ω̃)
    let pv = principal_value(im_g_d, lo, hi, w, &opts)?.value;
    let f = (at_pole * Complex64::new(PI, 0.0) - pv * Complex64::new(0.0, 1.0)) * Complex64::new(w * w / (PI * EPSILON_0 * C * C), 0.0);
    if f.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::numeric("emission vector is not finite"));
    }
    Ok(f)
}

/// Strong-coupling emission vector `W = ω_m²Δω_m/(ε₀c²Ω)·Im G(r, r_A, ω_m)·d`.
pub fn emission_vector_strong(
    green: &dyn GreenProvider,
    observer: Vector3<f64>,
    atoms: &AtomConfig,
    atom: usize,
    profile: &ResonanceProfile,
    omega_rabi: f64,
) -> Result<CVec> {
    if !(omega_rabi > 0.0) {
        return Err(Error::domain("Rabi frequency must be positive"));
    }
    let wm = profile.omega_m;
    let g = green.tensor(&Site::new(OBSERVER_INDEX, observer), &atoms.site(atom), wm)?;
    let scale = wm * wm * profile.delta_omega_m / (EPSILON_0 * C * C * omega_rabi);
    Ok(g.im().map(|x| Complex64::new(x * scale, 0.0)) * atoms.atoms[atom].dipole)
}

/// Line parameters of the weak-coupling doublet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubletParams {
    pub omega_a: f64,
    pub delta_ab: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

/// `S = ¼|(F_A+F_B)/(Δω_S+δ+iΓ₊/2) + (F_A−F_B)/(Δω_S−δ+iΓ₋/2)|²`, `Δω_S = ω_S − ω̃_A`.
pub fn weak_spectrum(f_a: &CVec, f_b: &CVec, p: &DoubletParams, grid: &[f64]) -> Result<SpectrumSeries> {
    check_grid(grid)?;
    let plus = f_a + f_b;
    let minus = f_a - f_b;
    let values = grid
        .iter()
        .map(|&ws| {
            let x = ws - p.omega_a;
            let a = Complex64::new(1.0, 0.0) / Complex64::new(x + p.delta_ab, 0.5 * p.gamma_plus);
            let b = Complex64::new(1.0, 0.0) / Complex64::new(x - p.delta_ab, 0.5 * p.gamma_minus);
            0.25 * (plus * a + minus * b).norm_squared()
        })
        .collect();
    Ok(SpectrumSeries::new(grid.to_vec(), values, SpectrumMeta::new("weak")))
}

/// Triplet spectrum: for the strongly coupled branch with sign `s`,
/// `S = ¼|(W_A+sW_B)[1/(Δω_S+sδ+Ω/2+iΔω_m/2) − 1/(Δω_S+sδ−Ω/2+iΔω_m/2)]
///        + i(F_A−sF_B)/(Δω_S−sδ+iΓ/2)|²`.
pub fn strong_spectrum(e: &EmissionVectors, p: &StrongParams, omega_a: f64, grid: &[f64]) -> Result<SpectrumSeries> {
    check_grid(grid)?;
    let (w_a, w_b) = match (e.w_a, e.w_b) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("strong spectrum needs the W emission vectors")),
    };
    let s = p.branch.sign();
    let wv = w_a + w_b * Complex64::new(s, 0.0);
    let fv = e.f_a - e.f_b * Complex64::new(s, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let half_width = 0.5 * p.delta_omega_m;
    let values = grid
        .iter()
        .map(|&ws| {
            let x = ws - omega_a + s * p.delta_ab;
            let split = one / Complex64::new(x + 0.5 * p.omega_strong, half_width)
                - one / Complex64::new(x - 0.5 * p.omega_strong, half_width);
            let weak = Complex64::new(0.0, 1.0) / Complex64::new(ws - omega_a - s * p.delta_ab, 0.5 * p.gamma_weak);
            0.25 * (wv * split + fv * weak).norm_squared()
        })
        .collect();
    let mut meta = SpectrumMeta::new("strong");
    meta.branch = Some(p.branch);
    Ok(SpectrumSeries::new(grid.to_vec(), values, meta))
}

/// One contribution to the detected field amplitude.
///
/// Without a kernel the channel contributes `vector·amplitude(t)`; with a
/// kernel rate `s` it contributes `vector·∫_0^t amplitude(t')e^{s(t−t')}dt'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub amplitude: Vec<Complex64>,
    pub vector: CVec,
    pub kernel: Option<Complex64>,
}

/// Channels for weak coupling: atom A and B amplitudes with `F_A`, `F_B`.
pub fn weak_channels(series: &TimeSeries, e: &EmissionVectors) -> Result<Vec<Channel>> {
    let (ca, cb) = match (&series.c_a, &series.c_b) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => return Err(Error::invalid("finite-T spectrum needs complex amplitudes")),
    };
    Ok(vec![
        Channel { amplitude: ca, vector: e.f_a, kernel: None },
        Channel { amplitude: cb, vector: e.f_b, kernel: None },
    ])
}

/// Channels for strong coupling: the strongly coupled state drives the
/// Lorentzian resonance kernel `Ω(W_A ± W_B)e^{−i(ω_m−ω̃_A)τ−Δω_m τ}`, the
/// weakly coupled one radiates through `F_A ∓ F_B`.
pub fn strong_channels(
    series: &TimeSeries,
    e: &EmissionVectors,
    p: &StrongParams,
    profile: &ResonanceProfile,
    omega_a: f64,
) -> Result<Vec<Channel>> {
    let (cp, cm) = match (&series.c_plus, &series.c_minus) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("finite-T strong spectrum needs superposition amplitudes")),
    };
    let (w_a, w_b) = match (e.w_a, e.w_b) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("strong spectrum needs the W emission vectors")),
    };
    let s = p.branch.sign();
    let rotate = |c: &[Complex64], sign: f64| -> Vec<Complex64> {
        series
            .t
            .iter()
            .zip(c)
            .map(|(&t, &c)| c * Complex64::new(0.0, sign * p.delta_ab * t).exp())
            .collect()
    };
    let (strong, weak) = match p.branch {
        Branch::Plus => (rotate(cp, 1.0), rotate(cm, -1.0)),
        Branch::Minus => (rotate(cm, -1.0), rotate(cp, 1.0)),
    };
    let rate = Complex64::new(-profile.delta_omega_m, -(profile.omega_m - omega_a));
    Ok(vec![
        Channel {
            amplitude: strong,
            vector: (w_a + w_b * Complex64::new(s, 0.0)) * Complex64::new(p.omega_strong, 0.0),
            kernel: Some(rate),
        },
        Channel { amplitude: weak, vector: e.f_a - e.f_b * Complex64::new(s, 0.0), kernel: None },
    ])
}

/// `S(ω_S, T) = prefactor·|Σ ∫_0^T e^{i(ω_S−ω̃_A)t} I_ch(t) dt|²` on the series
/// time grid. Memory integrals and the outer transform both use exact
/// exponential weights for piecewise-linear data.
pub fn finite_t_spectrum_numeric(
    t: &[f64],
    channels: &[Channel],
    omega_a: f64,
    prefactor: f64,
    grid: &[f64],
) -> Result<SpectrumSeries> {
    check_grid(grid)?;
    let n = t.len();
    if n < 2 {
        return Err(Error::invalid("finite-T spectrum needs at least two time samples"));
    }
    let h = t[1] - t[0];
    if !(h > 0.0) {
        return Err(Error::invalid("time samples must increase"));
    }
    let mut field = vec![CVec::zeros(); n];
    let mut peak: f64 = 0.0;
    let mut last: f64 = 0.0;
    for ch in channels {
        if ch.amplitude.len() != n {
            return Err(Error::invalid("channel length differs from the time grid"));
        }
        peak = peak.max(ch.amplitude.iter().map(|c| c.norm()).fold(0.0, f64::max));
        last = last.max(ch.amplitude[n - 1].norm());
        match ch.kernel {
            None => {
                for (f, c) in field.iter_mut().zip(&ch.amplitude) {
                    *f += ch.vector * *c;
                }
            }
            Some(s) => {
                let (alpha, beta) = exp_weights(s, h);
                let decay = (s * h).exp();
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 1..n {
                    acc = decay * acc + alpha * ch.amplitude[k - 1] + beta * ch.amplitude[k];
                    field[k] += ch.vector * acc;
                }
            }
        }
    }
    let values = grid
        .iter()
        .map(|&ws| {
            let s = Complex64::new(0.0, ws - omega_a);
            let (alpha, beta) = exp_weights(s, h);
            let mut total = CVec::zeros();
            for k in 0..n - 1 {
                let phase = Complex64::new(0.0, (ws - omega_a) * t[k]).exp();
                total += (field[k] * beta + field[k + 1] * alpha) * phase;
            }
            prefactor * total.norm_squared()
        })
        .collect();
    let mut meta = SpectrumMeta::new("finite-T");
    meta.t_obs = Some(t[n - 1]);
    let mut out = SpectrumSeries::new(grid.to_vec(), values, meta);
    if peak > 0.0 && last / peak > (-1.5f64).exp() {
        out.warn(format!(
            "observation time {:e} s is shorter than three decay times; spectrum not converged",
            t[n - 1]
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub position: f64,
    /// Half width at half maximum.
    pub half_width: f64,
    /// Integral between the neighbouring minima.
    pub weight: f64,
    pub height: f64,
}

/// Local maxima above `1e−6` of the global maximum, refined by a parabola
/// through the three top samples.
pub fn peak_analysis(series: &SpectrumSeries) -> Vec<Peak> {
    let (x, y) = (&series.omega_s, &series.values);
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let top = y.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Vec::new();
    }
    let maxima: Vec<usize> = (1..n - 1).filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] > 1e-6 * top).collect();
    let mut peaks = Vec::with_capacity(maxima.len());
    for &k in &maxima {
        // Bounding minima.
        let mut l = k;
        while l > 0 && y[l - 1] <= y[l] {
            l -= 1;
        }
        let mut r = k;
        while r + 1 < n && y[r + 1] <= y[r] {
            r += 1;
        }
        let (position, height) = parabola_vertex(x[k - 1], x[k], x[k + 1], y[k - 1], y[k], y[k + 1]);
        let half = 0.5 * height;
        let left = crossing(x, y, k, l, half).unwrap_or(x[l]);
        let right = crossing(x, y, k, r, half).unwrap_or(x[r]);
        let weight: f64 = (l..r).map(|j| 0.5 * (x[j + 1] - x[j]) * (y[j] + y[j + 1])).sum();
        peaks.push(Peak { position, half_width: 0.5 * (right - left), weight, height });
    }
    peaks
}

fn parabola_vertex(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a < 0.0) {
        return (x1, y1);
    }
    let b = d01 - a * (x0 + x1);
    let xv = (-b / (2.0 * a)).clamp(x0, x2);
    let yv = y1 + (xv - x1) * (d01 + a * (xv - x0));
    (xv, yv.max(y1))
}

/// Linear-interpolated position where `y` falls to `level`, walking from
/// `from` toward `to`.
fn crossing(x: &[f64], y: &[f64], from: usize, to: usize, level: f64) -> Option<f64> {
    let step = |j: usize| if to > from { j + 1 } else { j - 1 };
    let mut j = from;
    while j != to {
        let nj = step(j);
        if y[nj] <= level {
            let frac = (y[j] - level) / (y[j] - y[nj]);
            return Some(x[j] + frac * (x[nj] - x[j]));
        }
        j = nj;
    }
    None
}
