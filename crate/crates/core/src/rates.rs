//! Energy-transfer rates: transient slope `w₁`, adiabatic elimination `w₂`
//! and the golden-rule rate `w` with Lorentzian level densities.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::Serialize;

use crate::coupling::CouplingSet;
use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Below this relative rate difference the equal-rate limit is used.
pub const EQUAL_RATE_THRESHOLD: f64 = 1e-6;
/// Default moving-average width for inflection detection.
pub const DEFAULT_SMOOTHING: usize = 5;
/// Golden-rule quadrature half-range in line widths.
pub const GOLDEN_RULE_WIDTHS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Γ_{A*A} ≫ Γ_{B*B}
    I,
    /// Γ_{A*A} = Γ_{B*B}
    II,
    /// Γ_{B*B} ≫ Γ_{A*A}
    III,
    /// Neither limit applies.
    General,
}

impl Regime {
    /// Classification used for reports; ratios beyond 10 count as limits.
    pub fn classify(gamma_aa: f64, gamma_bb: f64) -> Regime {
        let max = gamma_aa.max(gamma_bb);
        if (gamma_aa - gamma_bb).abs() <= EQUAL_RATE_THRESHOLD * max {
            Regime::II
        } else if gamma_aa >= 10.0 * gamma_bb {
            Regime::I
        } else if gamma_bb >= 10.0 * gamma_aa {
            Regime::III
        } else {
            Regime::General
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Regime::I => "i",
            Regime::II => "ii",
            Regime::III => "iii",
            Regime::General => "general",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub regime: Regime,
    pub w1: f64,
    pub t0: f64,
    pub w2: f64,
    pub w_golden: f64,
    /// `P_A^(0)` used for `w₂` and as `p_A(ω̃_A)` for `w`.
    pub p_a0: f64,
    pub ratio: f64,
    /// `w₁/w·e^{Γ_{B*B}t₀}`
    pub corrected_ratio: f64,
    pub warnings: Vec<String>,
}

impl RateReport {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("regime = {}\n", self.regime.label()));
        for (k, v) in [
            ("w1", self.w1),
            ("t0", self.t0),
            ("w2", self.w2),
            ("w_golden", self.w_golden),
            ("p_a0", self.p_a0),
            ("ratio_w1_w", self.ratio),
            ("corrected_ratio", self.corrected_ratio),
        ] {
            s.push_str(&format!("{k} = {v:.12e}\n"));
        }
        for w in &self.warnings {
            s.push_str(&format!("# warning: {w}\n"));
        }
        s
    }
}

/// Inflection time `t₀` and slope `w₁` of `P_B` for weak dipole-dipole
/// coupling, `C_B ≈ 𝒦_{B*A}(e^{−Γ_{A*A}t/2} − e^{−Γ_{B*B}t/2})/((Γ_{B*B}−Γ_{A*A})/2)`.
pub fn rate_w1(gamma_aa: f64, gamma_bb: f64, k_ba: Complex64) -> (f64, f64) {
    let gmax = gamma_aa.max(gamma_bb);
    let k2 = k_ba.norm_sqr();
    if gmax <= 0.0 {
        return (0.0, f64::INFINITY);
    }
    let d = 0.5 * (gamma_aa - gamma_bb).abs();
    if d <= EQUAL_RATE_THRESHOLD * gmax {
        let g = 0.5 * (gamma_aa + gamma_bb);
        let x = 2.0 - SQRT_2;
        return (k2 * 2.0 * (SQRT_2 - 1.0) * (-x).exp() / g, x / g);
    }
    let (d_plus, d_minus) = if gamma_aa > gamma_bb { (-gamma_bb, -gamma_aa) } else { (-gamma_aa, -gamma_bb) };
    let s = d_plus + d_minus;
    // Smaller root of D₊²y² − (S²/2)y + D₋² = 0, y = e^{Dt₀}, through the
    // root product to avoid cancellation when D₊ → 0.
    let y = 4.0 * d_minus * d_minus / (s * s + 2.0 * d * (s * s + 4.0 * d_plus * d_minus).sqrt());
    let t0 = y.ln() / d;
    // dP_B/dt at t₀, written with sinh/cosh of Dt₀/2.
    let sigma = 0.5 * (gamma_aa + gamma_bb);
    let half = 0.5 * d * t0;
    let f = half.sinh() / (0.5 * d);
    let fp = half.cosh();
    let w1 = k2 * (-sigma * t0).exp() * (2.0 * f * fp - sigma * f * f);
    (w1, t0)
}

/// `w₂ = 4|𝒦_{B*A}|²/(Γ_{A*A} + Γ_{B*B})·P_A^(0)`.
pub fn rate_w2(gamma_aa: f64, gamma_bb: f64, k_ba: Complex64, p_a0: f64) -> f64 {
    let sum = gamma_aa + gamma_bb;
    if k_ba.norm_sqr() == 0.0 {
        return 0.0;
    }
    4.0 * k_ba.norm_sqr() / sum * p_a0
}

/// Inflection located on sampled data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalRate {
    pub t0: f64,
    pub w1: f64,
}

/// First zero crossing (from above) of the discrete second derivative of
/// `P_B` where the first derivative is positive. Differences are centered;
/// the second derivative is smoothed by a moving average of `smoothing` points.
pub fn rate_window_detect(series: &TimeSeries, smoothing: usize) -> Result<EmpiricalRate> {
    let p = &series.p_b;
    let n = p.len();
    if n < 5 {
        return Err(Error::invalid("rate window detection needs at least five samples"));
    }
    let h = series.dt();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for k in 1..n - 1 {
        d1[k] = (p[k + 1] - p[k - 1]) / (2.0 * h);
        d2[k] = (p[k + 1] - 2.0 * p[k] + p[k - 1]) / (h * h);
    }
    let w = smoothing.max(1);
    let half = w / 2;
    let lo = 1 + half;
    let hi = n - 1 - half;
    let smooth = |k: usize| -> f64 { d2[k - half..=k + half].iter().sum::<f64>() / (2 * half + 1) as f64 };
    if hi <= lo + 1 {
        return Err(Error::invalid("series too short for the smoothing window"));
    }
    let mut prev = smooth(lo);
    for k in lo + 1..hi {
        let cur = smooth(k);
        if prev > 0.0 && cur <= 0.0 {
            let frac = prev / (prev - cur);
            let slope = d1[k - 1] + frac * (d1[k] - d1[k - 1]);
            if slope > 0.0 {
                let t0 = series.t[k - 1] + frac * h;
                return Ok(EmpiricalRate { t0, w1: slope });
            }
        }
        prev = cur;
    }
    Err(Error::numeric("no inflection with positive slope: P_B never enters a rate regime"))
}

/// Least-squares slope of `ln P_B` against `ln t` over `0 < t ≤ t_max`.
pub fn early_time_exponent(series: &TimeSeries, t_max: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .t
        .iter()
        .zip(&series.p_b)
        .filter(|(t, p)| **t > 0.0 && **t <= t_max && **p > 0.0)
        .map(|(t, p)| (t.ln(), p.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::invalid("too few positive samples for the early-time fit"));
    }
    Ok(linear_fit(&pts).0)
}

/// Least-squares slope of `P_B` over `[t_lo, t_hi]`.
pub fn linear_slope(series: &TimeSeries, t_lo: f64, t_hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .t
        .iter()
        .zip(&series.p_b)
        .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
        .map(|(t, p)| (*t, *p))
        .collect();
    if pts.len() < 3 {
        return Err(Error::invalid("too few samples in the fit window"));
    }
    Ok(linear_fit(&pts).0)
}

/// `(slope, intercept)`
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GoldenRule {
    /// `4|𝒦|²p_A/ΣΓ / (1 + (2Δ/ΣΓ)²)`
    pub closed: f64,
    /// Direct quadrature of the Lorentzian overlap.
    pub quadrature: f64,
}

/// Golden-rule rate with Lorentzian level densities of widths Γ_{A*A},
/// Γ_{B*B} centered at `ω̃_A`, `ω̃_B` (detuning `ω̃_A − ω̃_B`).
pub fn golden_rule_rate(k_ba: Complex64, gamma_aa: f64, gamma_bb: f64, detuning: f64, p_a: f64) -> Result<GoldenRule> {
    let sum = gamma_aa + gamma_bb;
    if !(sum > 0.0) {
        return Err(Error::domain("golden-rule rate needs a positive total line width"));
    }
    let k2 = k_ba.norm_sqr();
    let x = 2.0 * detuning / sum;
    let closed = 4.0 * k2 / sum * p_a / (1.0 + x * x);

    let (ha, hb) = (0.5 * gamma_aa, 0.5 * gamma_bb);
    let lorentz = |nu: f64, c: f64, hw: f64| hw / PI / ((nu - c).powi(2) + hw * hw);
    let (ca, cb) = (0.5 * detuning, -0.5 * detuning);
    let reach = GOLDEN_RULE_WIDTHS * ha.max(hb);
    let lo = ca.min(cb) - reach;
    let hi = ca.max(cb) + reach;
    let overlap = |nu: f64| lorentz(nu, ca, ha) * lorentz(nu, cb, hb);
    // Break points at both centers keep the adaptive rule from missing a
    // narrow line.
    let mut cuts = vec![lo, ca.min(cb), ca.max(cb), hi];
    cuts.dedup();
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 20000 };
    let mut body = 0.0;
    for w in cuts.windows(2) {
        body += integrate(overlap, w[0], w[1], &opts)?.value;
    }
    // Tails: ξ_Aξ_B ≈ (Γ_AΓ_B/4π²)/u⁴ beyond the cut.
    let tail_coeff = ha * hb / (PI * PI);
    let tail = tail_coeff / (3.0 * (hi - ca.max(cb)).powi(3))
        + tail_coeff / (3.0 * (ca.min(cb) - lo).powi(3));
    let quadrature = 2.0 * PI * k2 * p_a * (body + tail);
    Ok(GoldenRule { closed, quadrature })
}

/// All three rates for a coupling set; `p_a0` defaults to `e^{−Γ_{A*A}t₀}`.
pub fn rate_report(set: &CouplingSet, p_a0: Option<f64>) -> Result<RateReport> {
    let (ga, gb) = (set.gamma_aa(), set.gamma_bb());
    let k = set.kappa_ba();
    let (w1, t0) = rate_w1(ga, gb, k);
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::model("rate regime needs a positive decay rate"));
    }
    let p = p_a0.unwrap_or_else(|| (-ga * t0).exp());
    let w2 = rate_w2(ga, gb, k, p);
    let detuning = set.omega_tilde[0] - set.omega_tilde[1];
    let golden = golden_rule_rate(k, ga, gb, detuning, p)?;
    let mut warnings = Vec::new();
    if k.norm() > 0.1 * ga.max(gb) {
        warnings.push(format!(
            "|K_BA| = {:e} is not small against the decay rates; quasi-stationary coherence is doubtful",
            k.norm()
        ));
    }
    let ratio = if golden.closed > 0.0 { w1 / golden.closed } else { f64::NAN };
    Ok(RateReport {
        regime: Regime::classify(ga, gb),
        w1,
        t0,
        w2,
        w_golden: golden.closed,
        p_a0: p,
        ratio,
        corrected_ratio: ratio * (gb * t0).exp(),
        warnings,
    })
}

/// Ratio table in the three limiting regimes, built from the limiting
/// closed forms with unit dominant rate and unit |𝒦|.
pub fn ratio_report(regime: Regime) -> Result<RateReport> {
    let k2 = 1.0;
    let (ga, gb, t0, w1) = match regime {
        Regime::I => (1.0, 0.0, 4f64.ln(), k2),
        Regime::III => (0.0, 1.0, 4f64.ln(), k2),
        Regime::II => {
            let x = 2.0 - SQRT_2;
            (1.0, 1.0, x, k2 * 2.0 * (SQRT_2 - 1.0) * (-x).exp())
        }
        Regime::General => return Err(Error::invalid("ratio table is defined for regimes i, ii and iii only")),
    };
    let p = (-ga * t0).exp();
    let w = 4.0 * k2 / (ga + gb) * p;
    let ratio = w1 / w;
    Ok(RateReport {
        regime,
        w1,
        t0,
        w2: w,
        w_golden: w,
        p_a0: p,
        ratio,
        corrected_ratio: ratio * (gb * t0).exp(),
        warnings: Vec::new(),
    })
}
