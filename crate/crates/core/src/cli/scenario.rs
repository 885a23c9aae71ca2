//! Scenario files: TOML with the schema printed by `rddi schema`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::consts::{free_space_decay_rate, DEBYE};
use crate::coupling::{Atom, AtomConfig};
use crate::dynamics::Branch;
use crate::error::{Error, Result};
use crate::green::{read_table, Interpolation, TableEntry, TableKind, TabulatedGreen};
use crate::permittivity::{LorentzOscillator, PermittivityModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Coupling,
    DynamicsWeak,
    DynamicsStrong,
    Volterra,
    Rates,
    SpectrumWeak,
    SpectrumStrong,
    SpectrumFiniteT,
}

impl Analysis {
    pub const ALL: [Analysis; 8] = [
        Analysis::Coupling,
        Analysis::DynamicsWeak,
        Analysis::DynamicsStrong,
        Analysis::Volterra,
        Analysis::Rates,
        Analysis::SpectrumWeak,
        Analysis::SpectrumStrong,
        Analysis::SpectrumFiniteT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Coupling => "coupling",
            Analysis::DynamicsWeak => "dynamics-weak",
            Analysis::DynamicsStrong => "dynamics-strong",
            Analysis::Volterra => "volterra",
            Analysis::Rates => "rates",
            Analysis::SpectrumWeak => "spectrum-weak",
            Analysis::SpectrumStrong => "spectrum-strong",
            Analysis::SpectrumFiniteT => "spectrum-finite-t",
        }
    }

    /// Position in the dependency order.
    pub fn stage(self) -> u8 {
        match self {
            Analysis::Coupling => 0,
            Analysis::DynamicsWeak | Analysis::DynamicsStrong | Analysis::Volterra => 1,
            _ => 2,
        }
    }
}

impl FromStr for Analysis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Analysis::ALL.iter().copied().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = Analysis::ALL.iter().map(|a| a.name()).collect();
            Error::config("analysis.run", format!("unknown analysis `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    /// Transition frequency for Γ₀, rad/s. Defaults to atom A's frequency.
    pub omega: Option<f64>,
    /// Dipole moment for Γ₀, debye.
    #[serde(default = "one")]
    pub dipole_debye: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for Reference {
    fn default() -> Self {
        Reference { omega: None, dipole_debye: one() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub a: usize,
    pub b: usize,
    pub kind: TableKind,
    pub file: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Medium {
    Vacuum,
    Constant {
        epsilon: [f64; 2],
    },
    DrudeLorentz {
        oscillators: Vec<LorentzOscillator>,
    },
    Tabulated {
        tables: Vec<TableSpec>,
        #[serde(default = "default_interp")]
        interpolation: Interpolation,
    },
}

fn default_interp() -> Interpolation {
    Interpolation::Cubic
}

impl Default for Medium {
    fn default() -> Self {
        Medium::Vacuum
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    /// Position, m.
    pub position: [f64; 3],
    /// Dipole orientation (normalized on load).
    pub dipole: [f64; 3],
    #[serde(default = "one")]
    pub dipole_debye: f64,
    /// Bare transition frequency, rad/s; defaults to `reference.omega`.
    pub omega: Option<f64>,
    /// Shifted frequency ω̃, rad/s; computed when absent.
    pub omega_shifted: Option<f64>,
}

/// Coefficients in units of Γ₀.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    pub gamma_aa: f64,
    pub gamma_bb: f64,
    pub gamma_ab: f64,
    pub delta_ab: f64,
    /// `ω̃_A − ω̃_B` in units of Γ₀.
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Atoms {
    pub a: Option<AtomSpec>,
    pub b: Option<AtomSpec>,
    #[serde(rename = "override")]
    pub coefficients: Option<Override>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    pub run: Vec<String>,
}

/// Lorentzian field resonance, Γ₀ units relative to ω̃_A.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSpec {
    /// Half width Δω_m / Γ₀.
    pub half_width: f64,
    /// `(ω_m − ω̃_A)/Γ₀`; defaults to exact resonance with the strong branch.
    pub offset: Option<f64>,
    #[serde(default = "default_branch")]
    pub branch: Branch,
}

fn default_branch() -> Branch {
    Branch::Plus
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// End time in units of 1/Γ₀.
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "yes")]
    pub lamb_shift: bool,
    #[serde(default)]
    pub quantum_correction: bool,
    /// Paired principal-value window half width, Γ₀ units.
    pub pv_split: Option<f64>,
    /// Frequency support of PV and memory integrals, rad/s.
    pub support: Option<[f64; 2]>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_smoothing")]
    pub smoothing: usize,
    /// `P_A^(0)` for w₂ and the golden rule; default `e^{−Γ_AA t₀}`.
    pub p_a0: Option<f64>,
    #[serde(default = "default_samples")]
    pub frequency_samples: usize,
    #[serde(default = "default_cap")]
    pub memory_cap_mib: usize,
    pub resonance: Option<ResonanceSpec>,
}

fn yes() -> bool {
    true
}
fn default_t_end() -> f64 {
    10.0
}
fn default_steps() -> usize {
    2000
}
fn default_rel_tol() -> f64 {
    1e-10
}
fn default_smoothing() -> usize {
    crate::rates::DEFAULT_SMOOTHING
}
fn default_samples() -> usize {
    4096
}
fn default_cap() -> usize {
    256
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            t_end: default_t_end(),
            steps: default_steps(),
            lamb_shift: true,
            quantum_correction: false,
            pv_split: None,
            support: None,
            rel_tol: default_rel_tol(),
            smoothing: default_smoothing(),
            p_a0: None,
            frequency_samples: default_samples(),
            memory_cap_mib: default_cap(),
            resonance: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSpec {
    /// Observation point, m (geometry mode).
    pub observation: Option<[f64; 3]>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Integration window for the emission vectors, rad/s.
    pub window: Option<[f64; 2]>,
    /// Detector time in units of 1/Γ₀; default `20/min(Γ₋, Δω_m)`.
    pub t_obs: Option<f64>,
    #[serde(default = "default_obs_steps")]
    pub t_obs_steps: usize,
    /// Emission amplitudes `[re, im]` along x (override mode).
    #[serde(default = "unit")]
    pub f_a: [f64; 2],
    #[serde(default)]
    pub f_b: [f64; 2],
    #[serde(default = "unit")]
    pub w_a: [f64; 2],
    #[serde(default = "unit")]
    pub w_b: [f64; 2],
}

fn default_points() -> usize {
    crate::spectrum::DEFAULT_GRID_POINTS
}
fn default_obs_steps() -> usize {
    20000
}
fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

impl Default for SpectrumSpec {
    fn default() -> Self {
        SpectrumSpec {
            observation: None,
            points: default_points(),
            window: None,
            t_obs: None,
            t_obs_steps: default_obs_steps(),
            f_a: unit(),
            f_b: [0.0, 0.0],
            w_a: unit(),
            w_b: unit(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub medium: Medium,
    #[serde(default)]
    pub atoms: Atoms,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub spectrum: SpectrumSpec,
    #[serde(default)]
    pub output: OutputSpec,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Geometry or direct coefficients, after validation.
#[derive(Debug, Clone)]
pub enum AtomsMode {
    Geometry(AtomConfig),
    Override(Override),
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading scenario {}", path.display()), e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base)
}

pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::config("<file>", e.to_string().trim().to_string()))?;
    let mut scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path.is_empty() { "<root>".into() } else { path }, e.into_inner().to_string().trim().to_string())
    })?;
    scenario.base_dir = base_dir.to_path_buf();
    scenario.validate()?;
    Ok(scenario)
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

impl Scenario {
    pub fn analyses(&self) -> Result<Vec<Analysis>> {
        let mut out = Vec::new();
        for name in &self.analysis.run {
            let a: Analysis = name.parse()?;
            if !out.contains(&a) {
                out.push(a);
            }
        }
        if out.is_empty() {
            return Err(Error::config("analysis.run", "no analyses requested"));
        }
        out.sort_by_key(|a| a.stage());
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        self.analyses()?;
        let a = &self.atoms;
        match (&a.a, &a.b, &a.coefficients) {
            (Some(_), Some(_), None) | (None, None, Some(_)) => {}
            (_, _, Some(_)) => {
                return Err(Error::config("atoms", "give either atoms.a/atoms.b geometry or atoms.override, not both"))
            }
            _ => return Err(Error::config("atoms", "need both atoms.a and atoms.b, or atoms.override")),
        }
        if let Some(o) = &a.coefficients {
            if self.reference.omega.is_none() {
                return Err(Error::config("reference.omega", "required with atoms.override"));
            }
            for (k, v) in [("gamma_aa", o.gamma_aa), ("gamma_bb", o.gamma_bb)] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::config(format!("atoms.override.{k}"), "must be finite and nonnegative"));
                }
            }
        }
        if let Some(w) = self.reference.omega {
            positive("reference.omega", w)?;
        }
        positive("reference.dipole_debye", self.reference.dipole_debye)?;
        let n = &self.numerics;
        positive("numerics.t_end", n.t_end)?;
        if n.steps == 0 {
            return Err(Error::config("numerics.steps", "must be at least 1"));
        }
        positive("numerics.rel_tol", n.rel_tol)?;
        if let Some(r) = &n.resonance {
            positive("numerics.resonance.half_width", r.half_width)?;
        }
        if let Some([lo, hi]) = n.support {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::config("numerics.support", "need 0 < lo < hi"));
            }
        }
        if let Some(p) = n.p_a0 {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("numerics.p_a0", "must lie in [0, 1]"));
            }
        }
        if self.spectrum.points < 3 {
            return Err(Error::config("spectrum.points", "need at least 3 points"));
        }
        if let Medium::Tabulated { tables, .. } = &self.medium {
            for (i, t) in tables.iter().enumerate() {
                let p = self.resolve(&t.file);
                if !p.is_file() {
                    return Err(Error::config(format!("medium.tables[{i}].file"), format!("{} does not exist", p.display())));
                }
            }
        }
        if let Medium::Constant { epsilon } = &self.medium {
            PermittivityModel::constant(epsilon[0], epsilon[1]).map_err(|e| Error::config("medium.epsilon", e.to_string()))?;
        }
        let fallback = self.reference.omega.or_else(|| a.a.as_ref().and_then(|s| s.omega));
        for (key, spec) in [("atoms.a", &a.a), ("atoms.b", &a.b)] {
            if let Some(s) = spec {
                if Vector3::from(s.dipole).norm() == 0.0 {
                    return Err(Error::config(format!("{key}.dipole"), "orientation must be nonzero"));
                }
                positive(&format!("{key}.dipole_debye"), s.dipole_debye)?;
                if s.omega.is_none() && fallback.is_none() {
                    return Err(Error::config(format!("{key}.omega"), "required unless reference.omega or atoms.a.omega is set"));
                }
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Reference transition frequency, rad/s.
    pub fn reference_omega(&self) -> f64 {
        self.reference
            .omega
            .or_else(|| self.atoms.a.as_ref().and_then(|a| a.omega))
            .expect("validated scenario has a reference frequency")
    }

    /// Γ₀ from the reference frequency and dipole.
    pub fn gamma0(&self) -> f64 {
        free_space_decay_rate(self.reference_omega(), self.reference.dipole_debye * DEBYE)
    }

    pub fn atoms_mode(&self) -> Result<AtomsMode> {
        if let Some(o) = &self.atoms.coefficients {
            return Ok(AtomsMode::Override(o.clone()));
        }
        let build = |key: &str, s: &AtomSpec| -> Result<Atom> {
            let dir = Vector3::from(s.dipole).normalize();
            let omega = s.omega.unwrap_or_else(|| self.reference_omega());
            let mut atom = Atom::new(Vector3::from(s.position), Atom::real_dipole(dir, s.dipole_debye * DEBYE), omega)
                .map_err(|e| Error::config(key, e.to_string()))?;
            if let Some(w) = s.omega_shifted {
                atom = atom.with_shifted(w).map_err(|e| Error::config(format!("{key}.omega_shifted"), e.to_string()))?;
            }
            Ok(atom)
        };
        let a = build("atoms.a", self.atoms.a.as_ref().expect("validated"))?;
        let b = build("atoms.b", self.atoms.b.as_ref().expect("validated"))?;
        Ok(AtomsMode::Geometry(AtomConfig::new(a, b)))
    }

    pub fn permittivity(&self) -> Option<PermittivityModel> {
        match &self.medium {
            Medium::Vacuum => Some(PermittivityModel::Vacuum),
            Medium::Constant { epsilon } => Some(PermittivityModel::Constant(Complex64::new(epsilon[0], epsilon[1]))),
            Medium::DrudeLorentz { oscillators } => Some(PermittivityModel::DrudeLorentz(oscillators.clone())),
            Medium::Tabulated { .. } => None,
        }
    }

    pub fn tabulated(&self) -> Result<Option<TabulatedGreen>> {
        let Medium::Tabulated { tables, interpolation } = &self.medium else {
            return Ok(None);
        };
        let mut g = TabulatedGreen::new();
        for (i, t) in tables.iter().enumerate() {
            let key = format!("medium.tables[{i}]");
            let (grid, values) = read_table(&self.resolve(&t.file))?;
            let entry = TableEntry::new(t.a, t.b, t.kind, grid, &values, *interpolation)
                .map_err(|e| Error::config(key.clone(), e.to_string()))?;
            g.insert(entry).map_err(|e| Error::config(key, e.to_string()))?;
        }
        Ok(Some(g))
    }
}

/// Schema text printed by `rddi schema`.
pub const SCHEMA: &str = r#"# rddi scenario schema (TOML). Units: SI unless noted; "Γ₀" is the
# free-space decay rate for reference.omega and reference.dipole_debye.

[reference]
omega = 3.0e15            # rad/s; defaults to atoms.a.omega; required with atoms.override
dipole_debye = 1.0

[medium]
kind = "vacuum"           # vacuum | constant | drude-lorentz | tabulated
# constant:       epsilon = [re, im]
# drude-lorentz:  oscillators = [{ plasma = .., resonance = .., damping = .. }]   (rad/s)
# tabulated:      tables = [{ a = 0, b = 1, kind = "full", file = "g01.dat" }]
#                 interpolation = "cubic"   # or "linear"; kind "reflection" for a = b;
#                 index 2 is the spectrum observation point

# Either geometry ...
[atoms.a]
position = [0.0, 0.0, 0.0]   # m
dipole = [0.0, 0.0, 1.0]     # orientation
dipole_debye = 1.0
# omega = 3.0e15             # rad/s, default reference.omega
# omega_shifted = 3.0e15     # rad/s, skips the single-atom shift
[atoms.b]
position = [1.0e-7, 0.0, 0.0]
dipole = [0.0, 0.0, 1.0]

# ... or coefficients in units of Γ₀ (not both)
# [atoms.override]
# gamma_aa = 1.07
# gamma_bb = 1.07
# gamma_ab = 0.04
# delta_ab = 0.06
# detuning = 0.0             # (ω̃_A − ω̃_B)/Γ₀

[analysis]
run = ["coupling", "dynamics-weak", "rates"]
# coupling | dynamics-weak | dynamics-strong | volterra | rates |
# spectrum-weak | spectrum-strong | spectrum-finite-t

[numerics]
t_end = 10.0                 # 1/Γ₀
steps = 2000
lamb_shift = true
quantum_correction = false
# pv_split = 10.0            # Γ₀; paired principal-value window
# support = [lo, hi]         # rad/s; frequency range of PV and memory integrals
rel_tol = 1e-10
smoothing = 5                # inflection detection window
# p_a0 = 0.5                 # default exp(−Γ_AA t₀)
frequency_samples = 4096
memory_cap_mib = 256
# [numerics.resonance]       # Lorentzian field resonance (strong coupling, volterra)
# half_width = 0.01          # Δω_m/Γ₀
# offset = -0.06             # (ω_m − ω̃_A)/Γ₀; default ∓δ_AB for branch ±
# branch = "plus"

[spectrum]
# observation = [0.0, 0.0, 1.0e-5]   # m, geometry mode
points = 2001
# window = [lo, hi]          # rad/s, emission-vector integration window
# t_obs = 200.0              # 1/Γ₀, finite-T detector time
t_obs_steps = 20000
f_a = [1.0, 0.0]             # override mode: emission amplitudes [re, im]
f_b = [0.0, 0.0]
w_a = [1.0, 0.0]
w_b = [1.0, 0.0]

[output]
# dir = "out"
# format = "csv"             # csv | json
"#;

#[cfg(test)]
mod tests {
    use super::*;

    const FIG1: &str = r#"
        [reference]
        omega = 3.0e15
        [atoms.override]
        gamma_aa = 1.07
        gamma_bb = 1.07
        gamma_ab = 0.04
        delta_ab = 0.06
        [analysis]
        run = ["rates", "dynamics-weak"]
    "#;

    #[test]
    fn override_scenario() {
        let s = parse_scenario(FIG1, Path::new(".")).unwrap();
        assert!(matches!(s.atoms_mode().unwrap(), AtomsMode::Override(_)));
        assert_eq!(s.analyses().unwrap(), vec![Analysis::DynamicsWeak, Analysis::Rates]);
        assert_eq!(s.numerics.steps, 2000);
    }

    #[test]
    fn minimal_vacuum_geometry() {
        let text = r#"
            [atoms.a]
            position = [0, 0, 0]
            dipole = [0, 0, 2]
            omega = 3.0e15
            [atoms.b]
            position = [1e-7, 0, 0]
            dipole = [0, 0, 1]
            [analysis]
            run = ["coupling"]
        "#;
        let s = parse_scenario(text, Path::new(".")).unwrap();
        let AtomsMode::Geometry(cfg) = s.atoms_mode().unwrap() else { panic!() };
        assert!((cfg.atoms[0].dipole.norm() - DEBYE).abs() < 1e-40);
        assert_eq!(cfg.atoms[1].omega, 3.0e15);
        assert!(matches!(s.medium, Medium::Vacuum));
    }

    #[test]
    fn both_modes_rejected() {
        let text = format!("{FIG1}\n[atoms.a]\nposition=[0,0,0]\ndipole=[0,0,1]\n[atoms.b]\nposition=[1,0,0]\ndipole=[0,0,1]\n");
        let e = parse_scenario(&text, Path::new(".")).unwrap_err();
        assert!(e.is_config());
    }

    #[test]
    fn unknown_key_reports_path() {
        let text = FIG1.replace("delta_ab = 0.06", "delta_ab = 0.06\ndelta_xy = 1");
        let e = parse_scenario(&text, Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("atoms.override"), "{e}");
    }

    #[test]
    fn unknown_analysis_rejected() {
        let text = FIG1.replace("\"rates\"", "\"ratez\"");
        let e = parse_scenario(&text, Path::new(".")).unwrap_err();
        assert!(e.to_string().contains("unknown analysis"));
    }

    #[test]
    fn missing_table_rejected() {
        let text = format!("{FIG1}\n[medium]\nkind = \"tabulated\"\ntables = [{{ a = 0, b = 1, kind = \"full\", file = \"nope.dat\" }}]\n");
        let e = parse_scenario(&text, Path::new("/nonexistent")).unwrap_err();
        assert!(e.to_string().contains("does not exist"));
    }

    #[test]
    fn schema_text_parses() {
        let s = parse_scenario(SCHEMA, Path::new(".")).unwrap();
        assert_eq!(s.analyses().unwrap().len(), 3);
    }
}
