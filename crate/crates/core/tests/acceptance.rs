//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::{PI, SQRT_2};
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use rddi::cli::selftest::{selftest, DEFAULT_SEED};
use rddi::consts::{C, DEBYE};
use rddi::coupling::{dd_shift, pv_components, Atom, AtomConfig, CouplingSet, PvSettings};
use rddi::dynamics::{
    strong_amplitude_exact, strong_ode_residual, strong_populations, time_averages, volterra_solve, weak_amplitudes,
    AverageCase, Branch, KernelSpec, ResonanceProfile, StrongOdeParams, StrongParams, TimeGrid, TimeSeries,
    VolterraOptions,
};
use rddi::green::{asymptotic_delta_long, asymptotic_delta_short, GreenSource, ResonantEnvironment};
use rddi::permittivity::PermittivityModel;
use rddi::rates::{early_time_exponent, linear_slope, rate_w1, ratio_report, Regime};
use rddi::spectrum::{
    default_grid, finite_t_spectrum_numeric, peak_analysis, strong_channels, strong_spectrum, weak_channels,
    weak_spectrum, DoubletParams, EmissionVectors, Peak, DEFAULT_GRID_POINTS,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cv(x: f64, y: f64, z: f64) -> Vector3<Complex64> {
    Vector3::new(c(x, 0.0), c(y, 0.0), c(z, 0.0))
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn local_maxima(v: &[f64]) -> usize {
    (1..v.len() - 1).filter(|&k| v[k] > v[k - 1] && v[k] >= v[k + 1]).count()
}

/// Slope of the perturbative `P_B = |K|²t²e^{−Γt}` at its inflection point,
/// located by bisection on the analytic second derivative.
fn w1_oracle(gamma: f64, k2: f64) -> (f64, f64) {
    let second = |t: f64| (2.0 - 4.0 * gamma * t + gamma * gamma * t * t) * (-gamma * t).exp();
    let (mut lo, mut hi) = (0.0, 1.0 / gamma);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if second(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t0 = 0.5 * (lo + hi);
    (k2 * (2.0 * t0 - gamma * t0 * t0) * (-gamma * t0).exp(), t0)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let set = CouplingSet::from_coefficients(1.07, 1.07, 0.04, 0.06, [1e3, 1e3]).map_err(|e| e.to_string())?;
    let series = weak_amplitudes(&set, &TimeGrid::new(20.0, 4000).unwrap());
    let (w1, t0) = rate_w1(1.07, 1.07, set.kappa_ba());
    let (w1_ref, t0_ref) = w1_oracle(1.07, set.kappa_ba().norm_sqr());
    let slope = linear_slope(&series, t0 - 0.05 / 1.07, t0 + 0.05 / 1.07).map_err(|e| e.to_string())?;
    let exponent = early_time_exponent(&series, 0.02 / 1.07).map_err(|e| e.to_string())?;
    let maxima = local_maxima(&series.p_b);
    let elapsed = start.elapsed();
    let closed_ok = (w1 / w1_ref - 1.0).abs() < 1e-10 && (t0 / t0_ref - 1.0).abs() < 1e-10;
    let slope_err = (slope / w1 - 1.0).abs();
    check(
        closed_ok && maxima == 1 && (exponent - 2.0).abs() <= 0.05 && slope_err < 0.03 && elapsed < Duration::from_secs(1),
        format!(
            "maxima={maxima} exponent={exponent:.4} slope={slope:.6e} w1={w1:.6e} rel={slope_err:.2e} oracle_rel={:.1e} runtime={elapsed:?}",
            (w1 / w1_ref - 1.0).abs()
        ),
    )
}

fn criterion_2() -> Outcome {
    let expected = [(Regime::I, 1.0, 1.0), (Regime::II, SQRT_2 - 1.0, 0.74), (Regime::III, 0.25, 1.0)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (regime, ratio, corrected) in expected {
        let r = ratio_report(regime).map_err(|e| e.to_string())?;
        ok &= (r.ratio - ratio).abs() < 1e-6 && (r.corrected_ratio - corrected).abs() < 0.01;
        detail.push(format!("{}: {:.8}/{:.4}", regime.label(), r.ratio, r.corrected_ratio));
    }
    check(ok, detail.join(" "))
}

/// Simpson average over one cycle.
fn cycle_average(f: impl Fn(f64) -> f64, period: f64) -> f64 {
    let n = 2000;
    let h = period / n as f64;
    let mut sum = f(0.0) + f(period);
    for k in 1..n {
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    sum * h / 3.0 / period
}

/// Largest gap between the full undamped populations and a limiting form
/// over `[0, t_end]`.
fn limit_gap(omega: f64, delta: f64, t_end: f64, pa: impl Fn(f64) -> f64, pb: impl Fn(f64) -> f64) -> f64 {
    let p = StrongParams { omega_strong: omega, gamma_weak: 0.0, delta_omega_m: 0.0, delta_ab: delta, branch: Branch::Plus };
    let s = strong_populations(&p, &TimeGrid::new(t_end, 4000).unwrap(), None);
    s.t.iter().enumerate().map(|(k, &t)| (s.p_a[k] - pa(t)).abs().max((s.p_b[k] - pb(t)).abs())).fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    // unit δ for case i, unit Ω otherwise
    let forms: [(AverageCase, f64, fn(f64) -> f64, fn(f64) -> f64, (f64, f64, f64)); 3] = [
        (AverageCase::I, PI, |t| t.cos().powi(2), |t| t.sin().powi(2), (0.5, 0.5, 0.0)),
        (
            AverageCase::II,
            2.0 * PI,
            |t| 0.25 * (1.0 + 3.0 * (0.5 * t).cos().powi(2)),
            |t| 0.25 * (1.0 - (0.5 * t).cos().powi(2)),
            (5.0 / 8.0, 1.0 / 8.0, 0.25),
        ),
        (AverageCase::III, 4.0 * PI, |t| (0.25 * t).cos().powi(4), |t| (0.25 * t).sin().powi(4), (3.0 / 8.0, 3.0 / 8.0, 0.25)),
    ];
    let mut exact = true;
    let mut worst: f64 = 0.0;
    for (case, period, pa, pb, expected) in forms {
        exact &= time_averages(case) == expected;
        let a = cycle_average(pa, period);
        let b = cycle_average(pb, period);
        for (x, y) in [(a, expected.0), (b, expected.1), (1.0 - a - b, expected.2)] {
            worst = worst.max((x - y).abs());
        }
    }
    // The full populations reduce to the limiting forms inside their windows.
    let gap_i = limit_gap(1e-4, 1.0, PI, |t| t.cos().powi(2), |t| t.sin().powi(2));
    let gap_ii = limit_gap(1.0, 0.25, 2.0 * PI, forms[1].2, forms[1].3);
    let gap_iii = limit_gap(1.0, 1e-5, 4.0 * PI, forms[2].2, forms[2].3);
    check(
        exact && worst < 1e-3 && gap_i.max(gap_ii).max(gap_iii) < 1e-3,
        format!("closed forms exact={exact} cycle-average max deviation={worst:.2e} limit gaps=({gap_i:.1e},{gap_ii:.1e},{gap_iii:.1e})"),
    )
}

/// Exact solution of the Lorentzian-kernel equations for two equivalent
/// atoms, channel by channel: `y'' + (b − a)y' + (ΓΔ/2 − ab)y = 0`.
fn lorentzian_exact(g_pm: [f64; 2], delta_ab: f64, profile: &ResonanceProfile, omega_bar: f64, t: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let dw = profile.delta_omega_m;
    let b = c(dw, profile.omega_m - omega_bar);
    let y0 = 1.0 / SQRT_2;
    let channel = |gamma: f64, sign: f64| -> Vec<Complex64> {
        let a = c(0.0, sign * delta_ab);
        let p = b - a;
        let q = c(0.5 * gamma * dw, 0.0) - a * b;
        let disc = (p * p - 4.0 * q).sqrt();
        let fast = if (-p - disc).norm() > (-p + disc).norm() { 0.5 * (-p - disc) } else { 0.5 * (-p + disc) };
        let slow = q / fast;
        let ca = y0 * (a - slow) / (fast - slow);
        let cb = y0 - ca;
        t.iter().map(|&tk| ca * (fast * tk).exp() + cb * (slow * tk).exp()).collect()
    };
    let (yp, ym) = (channel(g_pm[0], 1.0), channel(g_pm[1], -1.0));
    let pa = yp.iter().zip(&ym).map(|(p, m)| ((p + m) / SQRT_2).norm_sqr()).collect();
    let pb = yp.iter().zip(&ym).map(|(p, m)| ((p - m) / SQRT_2).norm_sqr()).collect();
    (pa, pb)
}

fn lorentzian_run(set: &CouplingSet, g_pm: [f64; 2], profile: ResonanceProfile, t_end: f64, steps: usize) -> TimeSeries {
    let kernel = KernelSpec::lorentzian_collective(profile, g_pm[0], g_pm[1]);
    let delta = [set.delta[(0, 1)], set.delta[(1, 0)]];
    volterra_solve(&kernel, delta, set.omega_tilde, &TimeGrid::new(t_end, steps).unwrap(), &VolterraOptions::default()).unwrap()
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn criterion_4() -> Outcome {
    let (g, gab, d, w) = (1.0, 0.3, 0.5, 1e3);
    let set = CouplingSet::from_coefficients(g, g, gab, d, [w, w]).unwrap();
    let g_pm = [g + gab, g - gab];
    let t_end = 5.0 / g;

    // Markov equivalence deep in the broad-resonance regime
    let wide = ResonanceProfile::new(w, 1e4 * g_pm[0]).unwrap();
    let start = Instant::now();
    let v = lorentzian_run(&set, g_pm, wide, t_end, 10_000);
    let elapsed = start.elapsed();
    let m = weak_amplitudes(&set, &TimeGrid::new(t_end, 10_000).unwrap());
    let scale = |p: &[f64]| p.iter().cloned().fold(0.0, f64::max);
    let rel = (max_dev(&v.p_a, &m.p_a) / scale(&m.p_a)).max(max_dev(&v.p_b, &m.p_b) / scale(&m.p_b));

    // Discretization order against the exact kernel solution at Δω_m/Γ₊ = 100
    let narrow = ResonanceProfile::new(w, 100.0 * g_pm[0]).unwrap();
    let residual = |steps: usize| {
        let s = lorentzian_run(&set, g_pm, narrow, t_end, steps);
        let (pa, pb) = lorentzian_exact(g_pm, d, &narrow, w, &s.t);
        max_dev(&s.p_a, &pa).max(max_dev(&s.p_b, &pb))
    };
    let (r1, r2) = (residual(10_000), residual(20_000));
    let order = r1 / r2;
    check(
        rel < 1e-3 && (order - 4.0).abs() < 0.5 && elapsed < Duration::from_secs(30),
        format!("Δω_m/Γ₊=1e4 rel={rel:.2e}; Δω_m/Γ₊=100 residual ratio={order:.3} ({r1:.2e}→{r2:.2e}); runtime={elapsed:?}"),
    )
}

fn criterion_5() -> Outcome {
    let (dw, d, w) = (1.0, 3.0, 1e3);
    let ratio = 100.0;
    let gamma_plus = ratio * ratio * dw / 2.0;
    let g = 0.5 * gamma_plus;
    let set = CouplingSet::from_coefficients(g, g, g, d, [w, w]).unwrap();
    let omega = (2.0 * gamma_plus * dw).sqrt();
    let profile = ResonanceProfile::new(w - d, dw).unwrap();
    let t_end = 3.0 * 4.0 * PI / omega;
    let s = lorentzian_run(&set, [gamma_plus, 0.0], profile, t_end, 12_000);
    let (ca, cb) = (s.c_a.as_ref().unwrap(), s.c_b.as_ref().unwrap());
    let mut worst: f64 = 0.0;
    for (k, &t) in s.t.iter().enumerate() {
        let plus = ((ca[k] + cb[k]) / SQRT_2).norm();
        let model = (-0.5 * dw * t).exp() * (0.5 * omega * t).cos().abs() / SQRT_2;
        worst = worst.max((plus - model).abs() * SQRT_2);
    }

    let p = StrongOdeParams { detuning: -d, delta_ab: d, branch: Branch::Plus, delta_omega_m: dw, omega };
    let res = |steps: usize| {
        let g = TimeGrid::new(t_end, steps).unwrap();
        strong_ode_residual(&strong_amplitude_exact(&p, &g), g.dt, &p).unwrap()
    };
    let order = res(8_000) / res(16_000);
    check(
        worst < 0.02 && (order - 4.0).abs() < 0.5,
        format!("Ω₊/Δω_m={ratio} max |C₊| deviation={worst:.2e}; residual ratio={order:.3}"),
    )
}

const W: f64 = 3.0e15;

fn atom_pair(r: Vector3<f64>, da: Vector3<f64>, db: Vector3<f64>) -> AtomConfig {
    let a = Atom::new(Vector3::zeros(), Atom::real_dipole(da, DEBYE), W).unwrap().with_shifted(W).unwrap();
    let b = Atom::new(r, Atom::real_dipole(db, DEBYE), W).unwrap().with_shifted(W).unwrap();
    AtomConfig::new(a, b)
}

fn criterion_6() -> Outcome {
    let atoms = atom_pair(Vector3::new(1e-7, 0.0, 0.0), Vector3::z(), Vector3::z());
    let t = Matrix3::identity() * 1e18;
    let mut env = ResonantEnvironment::new(1.05 * W, 0.02 * W).unwrap().with_pair(0, 1, t).with_pair(0, 0, t * 0.5).with_pair(1, 1, t * 0.5);
    env.include_vacuum = true;
    env.window = (1e-6 * W, 400.0 * W);
    let pv = pv_components(&atoms, &env, &PvSettings { split: Some(0.01 * W), ..Default::default() }).map_err(|e| e.to_string())?;
    let direct = dd_shift(&atoms, &env, None).map_err(|e| e.to_string())?[(0, 1)];
    let sum = pv.minus[(0, 1)] + pv.plus[(0, 1)];
    let rel = ((sum - direct) / direct).norm();
    check(rel < 1e-4, format!("δ⁻+δ⁺={:.9e} Re-G={:.9e} rel={rel:.2e}", sum.re, direct.re))
}

fn criterion_7() -> Outcome {
    let d = Vector3::new(0.3, 0.2, 1.0);
    let lossless = PermittivityModel::Constant(c(2.25, 0.0));
    let shift = |model: &PermittivityModel, x: f64| -> (f64, Vector3<f64>, AtomConfig) {
        let r = Vector3::new(0.0, x * C / W, 0.0);
        let atoms = atom_pair(r, d, d);
        let full = dd_shift(&atoms, &GreenSource::Bulk(model.clone()), None).unwrap()[(0, 1)].re;
        (full, r, atoms)
    };
    let (near, r, atoms) = shift(&lossless, 0.01);
    let da = atoms.atoms[0].dipole;
    let near_ref = asymptotic_delta_short(&da, &Vector3::zeros(), &da, &r, &lossless, W).unwrap().re;
    let (far, r, _) = shift(&lossless, 50.0);
    let far_ref = asymptotic_delta_long(&da, &Vector3::zeros(), &da, &r, &lossless, W).unwrap().re;
    let e_near = (near / near_ref - 1.0).abs();
    let e_far = (far / far_ref - 1.0).abs();

    // Envelope of δ·R sampled where cos(n_R ω̃R/c) = ±1
    let lossy = PermittivityModel::Constant(c(2.25, 0.15));
    let n = lossy.refractive_index(W).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut m = (50.0 * n.re / PI).ceil();
    while m * PI / n.re <= 150.0 {
        let x = m * PI / n.re;
        let (full, _, _) = shift(&lossy, x);
        xs.push(x);
        ys.push((full.abs() * x).ln());
        m += 1.0;
    }
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let e_slope = (-slope / n.im - 1.0).abs();
    check(
        e_near < 0.01 && e_far < 0.05 && e_slope < 0.02,
        format!("near rel={e_near:.2e} far rel={e_far:.2e} envelope slope={slope:.5} vs −n_I={:.5} rel={e_slope:.2e}", -n.im),
    )
}

fn peaks_match(a: &[Peak], b: &[Peak], step: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x.position - y.position).abs() <= step && (x.height / y.height - 1.0).abs() < 0.05)
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    // Weak doublet
    let (g, gab, d, w0) = (1.0, 0.6, 6.0, 100.0);
    let p = DoubletParams { omega_a: w0, delta_ab: d, gamma_plus: g + gab, gamma_minus: g - gab };
    let (f_a, f_b) = (cv(1.0, 0.0, 0.0), Vector3::new(c(0.4, 0.0), c(0.3, 0.0), c(0.0, 0.0)));
    let grid = default_grid(w0, d, p.gamma_plus, None, DEFAULT_GRID_POINTS);
    let step = grid[1] - grid[0];
    let closed = peak_analysis(&weak_spectrum(&f_a, &f_b, &p, &grid).unwrap());
    let sep_ok = closed.len() == 2 && (closed[1].position - closed[0].position - 2.0 * d).abs() <= step;
    let fine = peak_analysis(&weak_spectrum(&f_a, &f_b, &p, &uniform(w0 - 3.0 * d, w0 + 3.0 * d, 40_001)).unwrap());
    let widths = if fine.len() == 2 { (2.0 * fine[0].half_width, 2.0 * fine[1].half_width) } else { (f64::NAN, f64::NAN) };
    let width_ok = (widths.0 / p.gamma_plus - 1.0).abs() < 0.05 && (widths.1 / p.gamma_minus - 1.0).abs() < 0.05;
    ok &= sep_ok && width_ok;
    notes.push(format!("doublet sep ok={sep_ok} widths=({:.4},{:.4})", widths.0, widths.1));

    let set = CouplingSet::from_coefficients(g, g, gab, d, [w0, w0]).unwrap();
    let t_obs = 20.0 / p.gamma_minus;
    let series = weak_amplitudes(&set, &TimeGrid::new(t_obs, 20_000).unwrap());
    let e = EmissionVectors { f_a, f_b, w_a: None, w_b: None };
    let numeric = peak_analysis(&finite_t_spectrum_numeric(&series.t, &weak_channels(&series, &e).unwrap(), w0, 1.0, &grid).unwrap());
    let ft_ok = peaks_match(&numeric, &closed, step);
    ok &= ft_ok;
    notes.push(format!("finite-T doublet ok={ft_ok}"));

    // Strong triplet
    let sp = StrongParams { omega_strong: 10.0, gamma_weak: 0.5, delta_omega_m: 0.4, delta_ab: 8.0, branch: Branch::Plus };
    let e = EmissionVectors { f_a: cv(0.3, 0.0, 0.0), f_b: cv(0.0, 0.1, 0.0), w_a: Some(cv(1.0, 0.0, 0.0)), w_b: Some(cv(0.5, 0.0, 0.2)) };
    let grid = default_grid(w0, sp.delta_ab, 1.0, Some(sp.omega_strong), DEFAULT_GRID_POINTS);
    let step = grid[1] - grid[0];
    let closed = peak_analysis(&strong_spectrum(&e, &sp, w0, &grid).unwrap());
    let tri_ok = closed.len() == 3 && (closed[1].position - closed[0].position - sp.omega_strong).abs() <= step;
    let profile = ResonanceProfile::new(w0 - sp.delta_ab, sp.delta_omega_m).unwrap();
    let t_obs = 20.0 / sp.gamma_weak.min(sp.delta_omega_m);
    let series = strong_populations(&sp, &TimeGrid::new(t_obs, 20_000).unwrap(), None);
    let channels = strong_channels(&series, &e, &sp, &profile, w0).unwrap();
    let numeric = peak_analysis(&finite_t_spectrum_numeric(&series.t, &channels, w0, 0.5, &grid).unwrap());
    let ft_ok = peaks_match(&numeric, &closed, step);
    ok &= tri_ok && ft_ok;
    notes.push(format!("triplet peaks={} split ok={tri_ok} finite-T ok={ft_ok}", closed.len()));
    check(ok, notes.join("; "))
}

fn criterion_9() -> Outcome {
    let report = selftest(DEFAULT_SEED, 100);
    let failures: usize = report.checks.iter().map(|c| c.failed).sum();
    let checks: usize = report.checks.iter().map(|c| c.passed + c.failed).sum();
    let skipped: usize = report.checks.iter().map(|c| c.skipped).sum();
    check(report.passed(), format!("{checks} checks over 100 geometries, {failures} failures, {skipped} outside preconditions"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("fig1 weak-coupling transfer", criterion_1),
        ("rate ratio table", criterion_2),
        ("time-average table", criterion_3),
        ("memory kernel markov limit", criterion_4),
        ("vacuum rabi oscillation", criterion_5),
        ("kramers-kronig sum", criterion_6),
        ("bulk shift asymptotics", criterion_7),
        ("spectral doublet and triplet", criterion_8),
        ("invariant suite", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(d) => println!("PASS {} {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
