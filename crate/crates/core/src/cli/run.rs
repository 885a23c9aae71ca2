//! Executes the analyses of a scenario and writes their tables.

use std::path::PathBuf;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde_json::json;

use super::output::{Cell, Emitter, Table};
use super::scenario::{Analysis, AtomsMode, Format, Scenario};
use crate::coupling::{collective_params, AtomConfig, CouplingOptions, CouplingSet, PvSettings};
use crate::dynamics::{
    strong_populations, volterra_solve, weak_amplitudes, Branch, KernelSpec, ResonanceProfile, StrongParams, TimeGrid,
    TimeSeries, VolterraOptions,
};
use crate::error::{Error, Result};
use crate::green::GreenSource;
use crate::quadrature::QuadOptions;
use crate::rates::{early_time_exponent, linear_slope, rate_report, rate_window_detect};
use crate::spectrum::{
    default_grid, emission_vector_strong, emission_vector_weak, finite_t_spectrum_numeric, strong_channels,
    strong_spectrum, weak_channels, weak_spectrum, DoubletParams, EmissionVectors, SpectrumSeries,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub force: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// Everything the analyses share once couplings are known.
struct Context<'s> {
    scenario: &'s Scenario,
    gamma0: f64,
    green: Option<GreenSource>,
    atoms: Option<AtomConfig>,
    set: CouplingSet,
    grid: TimeGrid,
    pv: PvSettings,
}

struct Produced {
    table: Table,
    warnings: Vec<String>,
}

pub fn output_file(a: Analysis, f: Format) -> String {
    format!("{}.{}", a.name(), f.extension())
}

pub const MANIFEST: &str = "manifest.json";

pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let analyses = scenario.analyses()?;
    let format = opts.format.or(scenario.output.format).unwrap_or_default();
    let dir = opts
        .output_dir
        .clone()
        .or_else(|| scenario.output.dir.as_ref().map(|d| scenario.resolve(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut emitter = Emitter::new(&dir, opts.force)?;
    let mut files: Vec<String> = analyses.iter().map(|a| output_file(*a, format)).collect();
    files.push(MANIFEST.to_string());
    emitter.check_free(&files)?;

    match execute(scenario, &analyses, format, &mut emitter) {
        Ok(warnings) => Ok(RunSummary { files: emitter.written().to_vec(), warnings }),
        Err(e) => {
            emitter.rollback();
            Err(e)
        }
    }
}

fn execute(scenario: &Scenario, analyses: &[Analysis], format: Format, emitter: &mut Emitter) -> Result<Vec<String>> {
    let ctx = prepare(scenario).map_err(|e| e.context("coupling"))?;
    let mut results: Vec<(Analysis, Result<Produced>)> = Vec::new();
    let shared = &ctx;
    std::thread::scope(|s| {
        let handles: Vec<_> = analyses.iter().map(|&a| (a, s.spawn(move || produce(shared, a)))).collect();
        for (a, h) in handles {
            let r = h.join().unwrap_or_else(|_| Err(Error::numeric("analysis thread panicked")));
            results.push((a, r));
        }
    });
    let mut warnings = Vec::new();
    let mut produced = Vec::new();
    for (a, r) in results {
        let p = r.map_err(|e| e.context(a.name()))?;
        warnings.extend(p.warnings.iter().map(|w| format!("{}: {w}", a.name())));
        produced.push((a, p));
    }
    for (a, p) in &produced {
        emitter.write(&output_file(*a, format), &p.table.render(format))?;
    }
    let manifest = manifest(&ctx, analyses, format, &warnings);
    emitter.write(MANIFEST, &manifest)?;
    Ok(warnings)
}

fn prepare(scenario: &Scenario) -> Result<Context<'_>> {
    let gamma0 = scenario.gamma0();
    let n = &scenario.numerics;
    let grid = TimeGrid::new(n.t_end / gamma0, n.steps)?;
    let quad = QuadOptions { rel_tol: n.rel_tol, ..QuadOptions::default() };
    let pv = PvSettings { split: n.pv_split.map(|x| x * gamma0), support: n.support.map(|[a, b]| (a, b)), quad };
    match scenario.atoms_mode()? {
        AtomsMode::Override(o) => {
            let w = scenario.reference_omega();
            let set = CouplingSet::from_coefficients(
                o.gamma_aa * gamma0,
                o.gamma_bb * gamma0,
                o.gamma_ab * gamma0,
                o.delta_ab * gamma0,
                [w, w - o.detuning * gamma0],
            )
            .map_err(|e| e.context("atoms.override"))?;
            Ok(Context { scenario, gamma0, green: None, atoms: None, set, grid, pv })
        }
        AtomsMode::Geometry(atoms) => {
            let green = match scenario.permittivity() {
                Some(crate::permittivity::PermittivityModel::Vacuum) => GreenSource::Vacuum,
                Some(m) => GreenSource::Bulk(m),
                None => GreenSource::Tabulated(scenario.tabulated()?.expect("tabulated medium")),
            };
            let opts = CouplingOptions { lamb_shift: n.lamb_shift, quantum_correction: n.quantum_correction, omega_eval: None, pv };
            let (set, resolved) = CouplingSet::from_geometry(&atoms, &green, &opts)?;
            Ok(Context { scenario, gamma0, green: Some(green), atoms: Some(resolved), set, grid, pv })
        }
    }
}

fn produce(ctx: &Context<'_>, a: Analysis) -> Result<Produced> {
    match a {
        Analysis::Coupling => Ok(Produced { table: coupling_table(ctx), warnings: Vec::new() }),
        Analysis::DynamicsWeak => {
            let s = weak_amplitudes(&ctx.set, &ctx.grid);
            s.check_probability()?;
            Ok(series_table(ctx, "dynamics-weak", &s, false))
        }
        Analysis::DynamicsStrong => {
            let (p, profile, weak_rabi) = strong_setup(ctx)?;
            let s = strong_populations(&p, &ctx.grid, Some(weak_rabi));
            s.check_probability()?;
            let mut out = series_table(ctx, "dynamics-strong", &s, true);
            out.table.meta("omega_m", profile.omega_m).meta("delta_omega_m", profile.delta_omega_m);
            out.table.meta("omega_rabi", p.omega_strong).meta("branch", branch_name(p.branch));
            Ok(out)
        }
        Analysis::Volterra => volterra(ctx),
        Analysis::Rates => rates(ctx),
        Analysis::SpectrumWeak => spectrum_weak(ctx),
        Analysis::SpectrumStrong => spectrum_strong(ctx),
        Analysis::SpectrumFiniteT => spectrum_finite_t(ctx),
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

fn coupling_table(ctx: &Context<'_>) -> Table {
    let s = &ctx.set;
    let mut t = Table::key_values(
        "coupling",
        &[
            ("gamma0", ctx.gamma0),
            ("gamma_aa", s.gamma_aa()),
            ("gamma_bb", s.gamma_bb()),
            ("gamma_ab_re", s.gamma[(0, 1)].re),
            ("gamma_ab_im", s.gamma[(0, 1)].im),
            ("gamma_ba_re", s.gamma[(1, 0)].re),
            ("gamma_ba_im", s.gamma[(1, 0)].im),
            ("delta_ab_re", s.delta[(0, 1)].re),
            ("delta_ab_im", s.delta[(0, 1)].im),
            ("delta_ba_re", s.delta[(1, 0)].re),
            ("delta_ba_im", s.delta[(1, 0)].im),
            ("shift_a", s.delta[(0, 0)].re),
            ("shift_b", s.delta[(1, 1)].re),
            ("kappa_ab_re", s.kappa_ab().re),
            ("kappa_ab_im", s.kappa_ab().im),
            ("kappa_ba_re", s.kappa_ba().re),
            ("kappa_ba_im", s.kappa_ba().im),
            ("omega_tilde_a", s.omega_tilde[0]),
            ("omega_tilde_b", s.omega_tilde[1]),
            ("cauchy_schwarz_excess", s.cauchy_schwarz_excess()),
        ],
    );
    t.meta("origin", format!("{:?}", s.origin).to_lowercase()).meta("units", "1/s and rad/s");
    t
}

fn series_table(ctx: &Context<'_>, name: &str, s: &TimeSeries, superposition: bool) -> Produced {
    let (label1, label2, c1, c2) = if superposition {
        ("c_plus", "c_minus", s.c_plus.as_ref(), s.c_minus.as_ref())
    } else {
        ("c_a", "c_b", s.c_a.as_ref(), s.c_b.as_ref())
    };
    let mut cols = vec!["t", "t_gamma0", "p_a", "p_b"];
    let names = [format!("{label1}_re"), format!("{label1}_im"), format!("{label2}_re"), format!("{label2}_im")];
    let with_amp = c1.is_some() && c2.is_some();
    if with_amp {
        cols.extend(names.iter().map(String::as_str));
    }
    let mut t = Table::new(name, &cols);
    t.meta("gamma0", ctx.gamma0).meta("dt", ctx.grid.dt).meta("steps", ctx.grid.steps);
    for k in 0..s.len() {
        let mut row = vec![Cell::Num(s.t[k]), Cell::Num(s.t[k] * ctx.gamma0), Cell::Num(s.p_a[k]), Cell::Num(s.p_b[k])];
        if let (Some(a), Some(b)) = (c1, c2) {
            row.extend([a[k].re, a[k].im, b[k].re, b[k].im].map(Cell::Num));
        }
        t.push(row);
    }
    for w in &s.warnings {
        t.meta("warning", w);
    }
    Produced { table: t, warnings: s.warnings.clone() }
}

fn profile_for(ctx: &Context<'_>, branch: Branch) -> Result<ResonanceProfile> {
    let r = ctx
        .scenario
        .numerics
        .resonance
        .as_ref()
        .ok_or_else(|| Error::config("numerics.resonance", "this analysis needs a field resonance"))?;
    let delta = ctx.set.delta[(0, 1)].re;
    let offset = r.offset.map(|o| o * ctx.gamma0).unwrap_or(-branch.sign() * delta);
    ResonanceProfile::new(ctx.set.omega_tilde[0] + offset, r.half_width * ctx.gamma0)
}

fn strong_setup(ctx: &Context<'_>) -> Result<(StrongParams, ResonanceProfile, f64)> {
    let branch = ctx
        .scenario
        .numerics
        .resonance
        .as_ref()
        .map(|r| r.branch)
        .ok_or_else(|| Error::config("numerics.resonance", "this analysis needs a field resonance"))?;
    let profile = profile_for(ctx, branch)?;
    let c = collective_params(&ctx.set, profile.delta_omega_m)?;
    let p = StrongParams::from_collective(&c, profile.delta_omega_m, ctx.set.delta[(0, 1)].re, branch)?;
    let weak = match branch {
        Branch::Plus => c.omega_minus,
        Branch::Minus => c.omega_plus,
    };
    Ok((p, profile, weak))
}

fn volterra(ctx: &Context<'_>) -> Result<Produced> {
    let n = &ctx.scenario.numerics;
    let opts = VolterraOptions {
        memory_cap: n.memory_cap_mib << 20,
        frequency_samples: n.frequency_samples,
        support: n.support.map(|[a, b]| (a, b)),
    };
    let delta = [ctx.set.delta[(0, 1)], ctx.set.delta[(1, 0)]];
    let (kernel, label) = if n.resonance.is_some() {
        let branch = n.resonance.as_ref().map(|r| r.branch).unwrap_or(Branch::Plus);
        let profile = profile_for(ctx, branch)?;
        (KernelSpec::Lorentzian { profile, gamma: ctx.set.gamma }, "lorentzian")
    } else if let (Some(atoms), Some(green)) = (&ctx.atoms, &ctx.green) {
        (KernelSpec::TabulatedImG { atoms, green }, "green-tensor")
    } else {
        (KernelSpec::markovian(&ctx.set), "markovian")
    };
    let s = volterra_solve(&kernel, delta, ctx.set.omega_tilde, &ctx.grid, &opts)?;
    s.check_probability()?;
    let mut out = series_table(ctx, "volterra", &s, false);
    out.table.meta("kernel", label).meta("frequency_samples", n.frequency_samples).meta("memory_cap_mib", n.memory_cap_mib);
    Ok(out)
}

fn rates(ctx: &Context<'_>) -> Result<Produced> {
    let n = &ctx.scenario.numerics;
    let r = rate_report(&ctx.set, n.p_a0)?;
    let mut warnings = r.warnings.clone();
    let series = weak_amplitudes(&ctx.set, &ctx.grid);
    let gmax = ctx.set.gamma_aa().max(ctx.set.gamma_bb());
    let (t_emp, w_emp, slope) = match rate_window_detect(&series, n.smoothing) {
        Ok(e) => {
            let half = 0.05 / gmax;
            let slope = linear_slope(&series, e.t0 - half, e.t0 + half).unwrap_or(f64::NAN);
            (e.t0, e.w1, slope)
        }
        Err(e) => {
            warnings.push(e.to_string());
            (f64::NAN, f64::NAN, f64::NAN)
        }
    };
    let exponent = early_time_exponent(&series, 0.02 / gmax).unwrap_or_else(|e| {
        warnings.push(format!("early-time fit: {e}"));
        f64::NAN
    });
    let mut t = Table::key_values(
        "rates",
        &[
            ("w1", r.w1),
            ("t0", r.t0),
            ("w2", r.w2),
            ("w_golden", r.w_golden),
            ("p_a0", r.p_a0),
            ("ratio_w1_w", r.ratio),
            ("corrected_ratio", r.corrected_ratio),
            ("w1_empirical", w_emp),
            ("t0_empirical", t_emp),
            ("linear_fit_slope", slope),
            ("early_exponent", exponent),
        ],
    );
    t.meta("regime", r.regime.label()).meta("gamma0", ctx.gamma0).meta("smoothing", n.smoothing);
    for w in &warnings {
        t.meta("warning", w);
    }
    Ok(Produced { table: t, warnings })
}

fn spectrum_table(name: &str, s: &SpectrumSeries, omega_a: f64, gamma0: f64) -> Produced {
    let mut t = Table::new(name, &["omega_s", "detuning_gamma0", "S"]);
    t.meta("regime", &s.meta.regime).meta("normalization", "modulus squared of the bracketed amplitude (arbitrary units)");
    if let Some(b) = s.meta.branch {
        t.meta("branch", branch_name(b));
    }
    if let Some(o) = s.meta.observation {
        t.meta("observation", format!("{} {} {}", o[0], o[1], o[2]));
    }
    if let Some(to) = s.meta.t_obs {
        t.meta("t_obs", to);
    }
    t.meta("omega_tilde_a", omega_a).meta("gamma0", gamma0);
    for w in &s.warnings {
        t.meta("warning", w);
    }
    for (w, v) in s.omega_s.iter().zip(&s.values) {
        t.push(vec![Cell::Num(*w), Cell::Num((w - omega_a) / gamma0), Cell::Num(*v)]);
    }
    Produced { table: t, warnings: s.warnings.clone() }
}

fn scalar_vec(v: [f64; 2]) -> Vector3<Complex64> {
    Vector3::new(Complex64::new(v[0], v[1]), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
}

fn observation(ctx: &Context<'_>) -> Result<Vector3<f64>> {
    ctx.scenario
        .spectrum
        .observation
        .map(Vector3::from)
        .ok_or_else(|| Error::config("spectrum.observation", "required for geometry-derived spectra"))
}

fn weak_vectors(ctx: &Context<'_>) -> Result<(Vector3<Complex64>, Vector3<Complex64>)> {
    let sp = &ctx.scenario.spectrum;
    match (&ctx.atoms, &ctx.green) {
        (Some(atoms), Some(green)) => {
            let r = observation(ctx)?;
            let mut f = [Vector3::zeros(); 2];
            for (i, fi) in f.iter_mut().enumerate() {
                let w = atoms.atoms[i].shifted();
                let window = sp.window.map(|[a, b]| (a, b)).or(ctx.pv.support).unwrap_or((0.5 * w, 1.5 * w));
                *fi = emission_vector_weak(green, r, atoms, i, window, &ctx.pv)?;
            }
            Ok((f[0], f[1]))
        }
        _ => Ok((scalar_vec(sp.f_a), scalar_vec(sp.f_b))),
    }
}

fn symmetric_warning(ctx: &Context<'_>) -> Option<String> {
    let s = &ctx.set;
    let asym = (s.gamma_aa() - s.gamma_bb()).abs() > 1e-6 * s.gamma_aa().max(s.gamma_bb())
        || (s.omega_tilde[0] - s.omega_tilde[1]).abs() > 1e-6 * s.gamma_aa().max(ctx.gamma0);
    asym.then(|| "atoms are not equivalent; the doublet formula assumes equal rates and frequencies".to_string())
}

fn spectrum_weak(ctx: &Context<'_>) -> Result<Produced> {
    let c = collective_params(&ctx.set, ctx.gamma0)?;
    let (f_a, f_b) = weak_vectors(ctx)?;
    let omega_a = ctx.set.omega_tilde[0];
    let p = DoubletParams { omega_a, delta_ab: ctx.set.delta[(0, 1)].re, gamma_plus: c.gamma_plus, gamma_minus: c.gamma_minus };
    let grid = default_grid(omega_a, p.delta_ab, p.gamma_plus, None, ctx.scenario.spectrum.points);
    let mut s = weak_spectrum(&f_a, &f_b, &p, &grid)?;
    if let Some(o) = ctx.scenario.spectrum.observation {
        s = s.with_observation(Vector3::from(o));
    }
    if let Some(w) = symmetric_warning(ctx) {
        s.warnings.push(w);
    }
    Ok(spectrum_table("spectrum-weak", &s, omega_a, ctx.gamma0))
}

fn emission_all(ctx: &Context<'_>, p: &StrongParams, profile: &ResonanceProfile) -> Result<EmissionVectors> {
    let (f_a, f_b) = weak_vectors(ctx)?;
    let (w_a, w_b) = match (&ctx.atoms, &ctx.green) {
        (Some(atoms), Some(green)) => {
            let r = observation(ctx)?;
            (
                emission_vector_strong(green, r, atoms, 0, profile, p.omega_strong)?,
                emission_vector_strong(green, r, atoms, 1, profile, p.omega_strong)?,
            )
        }
        _ => (scalar_vec(ctx.scenario.spectrum.w_a), scalar_vec(ctx.scenario.spectrum.w_b)),
    };
    Ok(EmissionVectors { f_a, f_b, w_a: Some(w_a), w_b: Some(w_b) })
}

fn spectrum_strong(ctx: &Context<'_>) -> Result<Produced> {
    let (p, profile, _) = strong_setup(ctx)?;
    let e = emission_all(ctx, &p, &profile)?;
    let omega_a = ctx.set.omega_tilde[0];
    let c = collective_params(&ctx.set, profile.delta_omega_m)?;
    let grid = default_grid(omega_a, p.delta_ab, c.gamma_plus, Some(p.omega_strong), ctx.scenario.spectrum.points);
    let s = strong_spectrum(&e, &p, omega_a, &grid)?;
    Ok(spectrum_table("spectrum-strong", &s, omega_a, ctx.gamma0))
}

fn spectrum_finite_t(ctx: &Context<'_>) -> Result<Produced> {
    let sp = &ctx.scenario.spectrum;
    let omega_a = ctx.set.omega_tilde[0];
    let strong = ctx.scenario.numerics.resonance.is_some();
    let (p_strong, profile, c) = if strong {
        let (p, profile, _) = strong_setup(ctx)?;
        let c = collective_params(&ctx.set, profile.delta_omega_m)?;
        (Some(p), Some(profile), c)
    } else {
        (None, None, collective_params(&ctx.set, ctx.gamma0)?)
    };
    let longest = match (&p_strong, &profile) {
        (Some(p), Some(pr)) => p.gamma_weak.min(pr.delta_omega_m),
        _ => c.gamma_minus.min(c.gamma_plus),
    };
    let t_obs = match sp.t_obs {
        Some(t) => t / ctx.gamma0,
        None if longest > 0.0 => 20.0 / longest,
        None => return Err(Error::config("spectrum.t_obs", "a line has zero width; give the detector time explicitly")),
    };
    let grid_t = TimeGrid::new(t_obs, sp.t_obs_steps)?;
    let delta = ctx.set.delta[(0, 1)].re;
    let mut warnings = Vec::new();
    let fastest = delta.abs().max(p_strong.map_or(0.0, |p| p.omega_strong));
    if grid_t.dt * fastest > 0.1 {
        warnings.push(format!("detector time step resolves the fastest oscillation poorly (dt·ω = {:.3})", grid_t.dt * fastest));
    }
    let (series, channels, prefactor, grid) = match (p_strong, profile) {
        (Some(p), Some(profile)) => {
            let series = strong_populations(&p, &grid_t, None);
            let e = emission_all(ctx, &p, &profile)?;
            let ch = strong_channels(&series, &e, &p, &profile, omega_a)?;
            (series, ch, 0.5, default_grid(omega_a, delta, c.gamma_plus, Some(p.omega_strong), sp.points))
        }
        _ => {
            let series = weak_amplitudes(&ctx.set, &grid_t);
            let (f_a, f_b) = weak_vectors(ctx)?;
            let e = EmissionVectors { f_a, f_b, w_a: None, w_b: None };
            let ch = weak_channels(&series, &e)?;
            (series, ch, 1.0, default_grid(omega_a, delta, c.gamma_plus, None, sp.points))
        }
    };
    let mut s = finite_t_spectrum_numeric(&series.t, &channels, omega_a, prefactor, &grid)?;
    s.warnings.extend(warnings);
    if let Some(o) = sp.observation {
        s = s.with_observation(Vector3::from(o));
    }
    let mut out = spectrum_table("spectrum-finite-t", &s, omega_a, ctx.gamma0);
    out.table.meta("t_obs_steps", sp.t_obs_steps);
    Ok(out)
}

fn manifest(ctx: &Context<'_>, analyses: &[Analysis], format: Format, warnings: &[String]) -> String {
    let n = &ctx.scenario.numerics;
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let v = json!({
        "tool": "rddi",
        "version": VERSION,
        "timestamp": timestamp,
        "format": format.extension(),
        "analyses": analyses.iter().map(|a| a.name()).collect::<Vec<_>>(),
        "files": analyses.iter().map(|a| output_file(*a, format)).collect::<Vec<_>>(),
        "gamma0": ctx.gamma0,
        "resolved": {
            "dt": ctx.grid.dt,
            "steps": ctx.grid.steps,
            "t_end_s": ctx.grid.t_end(),
            "pv_split": ctx.pv.split,
            "pv_support": ctx.pv.support.map(|(a, b)| [a, b]),
            "quad_rel_tol": ctx.pv.quad.rel_tol,
            "quad_abs_tol": ctx.pv.quad.abs_tol,
            "quad_max_intervals": ctx.pv.quad.max_intervals,
            "smoothing": n.smoothing,
            "frequency_samples": n.frequency_samples,
            "memory_cap_mib": n.memory_cap_mib,
            "spectrum_points": ctx.scenario.spectrum.points,
            "t_obs_steps": ctx.scenario.spectrum.t_obs_steps,
            "probability_tolerance": 1e-9,
            "omega_tilde": ctx.set.omega_tilde,
        },
        "scenario": ctx.scenario,
        "warnings": warnings,
    });
    let mut s = serde_json::to_string_pretty(&v).expect("manifest serializes");
    s.push('\n');
    s
}
