//! Randomized invariant checks over seeded geometries.

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::consts::DEBYE;
use crate::coupling::{collective_params, kappa, Atom, AtomConfig, CouplingOptions, CouplingSet};
use crate::dynamics::{strong_populations, weak_amplitudes, Branch, StrongParams, TimeGrid};
use crate::error::Result;
use crate::green::{GreenProvider, GreenSource, Site};
use crate::permittivity::{LorentzOscillator, PermittivityModel};
use crate::spectrum::{default_grid, weak_spectrum, DoubletParams};

pub const DEFAULT_SEED: u64 = 20;
pub const DEFAULT_CASES: usize = 100;
const RECIPROCITY_TOL: f64 = 1e-12;
const CS_TOL: f64 = 1e-9;
const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct Check {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// Cases outside the check's precondition.
    pub skipped: usize,
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl Check {
    fn new(name: &'static str) -> Self {
        Check { name, ..Default::default() }
    }

    fn record(&mut self, value: f64, ok: bool, case: usize) {
        if value.is_finite() {
            self.worst = self.worst.max(value);
        }
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            self.first_failure.get_or_insert_with(|| format!("case {case}: {value:e}"));
        }
    }

    fn error(&mut self, case: usize, e: impl std::fmt::Display) {
        self.failed += 1;
        self.first_failure.get_or_insert_with(|| format!("case {case}: {e}"));
    }
}

#[derive(Debug, Clone)]
pub struct SelftestReport {
    pub seed: u64,
    pub cases: usize,
    pub checks: Vec<Check>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("selftest seed={} cases={}\n", self.seed, self.cases);
        for c in &self.checks {
            let status = if c.failed == 0 { "PASS" } else { "FAIL" };
            s.push_str(&format!("{status} {:<24} passed={} failed={} skipped={} worst={:.3e}", c.name, c.passed, c.failed, c.skipped, c.worst));
            if let Some(f) = &c.first_failure {
                s.push_str(&format!(" first={f}"));
            }
            s.push('\n');
        }
        s
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_medium(rng: &mut ChaCha8Rng, omega: f64) -> (GreenSource, bool) {
    match rng.random_range(0..3) {
        0 => (GreenSource::Vacuum, true),
        1 => (GreenSource::Bulk(PermittivityModel::Constant(Complex64::new(rng.random_range(1.0..4.0), 0.0))), true),
        _ => {
            let o = LorentzOscillator {
                plasma: rng.random_range(0.2..1.0) * omega,
                resonance: rng.random_range(0.5..1.5) * omega,
                damping: rng.random_range(0.01..0.1) * omega,
            };
            (GreenSource::Bulk(PermittivityModel::DrudeLorentz(vec![o])), false)
        }
    }
}

pub fn selftest(seed: u64, cases: usize) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reciprocity = Check::new("reciprocity");
    let mut cs = Check::new("cauchy-schwarz");
    let mut kappa_id = Check::new("coupling-identity");
    let mut weak_prob = Check::new("weak-probability");
    let mut strong_prob = Check::new("strong-probability");
    let mut spectrum_pos = Check::new("spectrum-nonnegative");
    let opts = CouplingOptions { lamb_shift: false, ..CouplingOptions::default() };

    for case in 0..cases {
        let omega = 2.0 * std::f64::consts::PI * 3e8 / rng.random_range(400e-9..1000e-9);
        let lambda = 2.0 * std::f64::consts::PI * 3e8 / omega;
        let (green, lossless) = random_medium(&mut rng, omega);
        let ra = Vector3::zeros();
        let rb = random_unit(&mut rng) * rng.random_range(0.02..2.0) * lambda;
        let da = Atom::real_dipole(random_unit(&mut rng), DEBYE);
        let db = Atom::real_dipole(random_unit(&mut rng), DEBYE);
        let built = Atom::new(ra, da, omega).and_then(|a| Ok(AtomConfig::new(a, Atom::new(rb, db, omega)?)));
        let atoms = match built {
            Ok(a) => a,
            Err(e) => {
                reciprocity.error(case, e);
                continue;
            }
        };

        let sa = Site::new(0, ra);
        let sb = Site::new(1, rb);
        match (green.tensor(&sa, &sb, omega), green.tensor(&sb, &sa, omega)) {
            (Ok(g1), Ok(g2)) => {
                let scale = g1.max_abs().max(f64::MIN_POSITIVE);
                let r = (g1.0 - g2.0.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max) / scale;
                reciprocity.record(r, r <= RECIPROCITY_TOL, case);
            }
            (Err(e), _) | (_, Err(e)) => reciprocity.error(case, e),
        }

        let set = match CouplingSet::from_geometry(&atoms, &green, &opts) {
            Ok((s, _)) => s,
            Err(e) => {
                kappa_id.error(case, e);
                continue;
            }
        };
        if lossless {
            let x = set.cauchy_schwarz_excess();
            cs.record(x, x <= CS_TOL, case);
        } else {
            cs.skipped += 1;
        }
        match kappa(&atoms, &green, None) {
            Ok(_) => kappa_id.record(0.0, true, case),
            Err(e) => kappa_id.error(case, e),
        }

        let gmax = set.gamma_aa().max(set.gamma_bb());
        let grid = match TimeGrid::new(10.0 / gmax, 400) {
            Ok(g) => g,
            Err(e) => {
                weak_prob.error(case, e);
                continue;
            }
        };
        let s = weak_amplitudes(&set, &grid);
        // the bound needs a positive semidefinite decay matrix
        let x = s.probability_excess();
        if set.is_passive() {
            weak_prob.record(x, x <= PROBABILITY_TOL, case);
        } else {
            weak_prob.skipped += 1;
        }

        let mut synthetic = || -> Result<(f64, f64)> {
            let ga = rng.random_range(0.5..1.5);
            let gab = rng.random_range(-0.99..0.99) * ga;
            let dab = rng.random_range(-20.0..20.0);
            let width = rng.random_range(0.5..5.0);
            let s = CouplingSet::from_coefficients(ga, ga, gab, dab, [1e3, 1e3])?;
            let c = collective_params(&s, width)?;
            let branch = if c.omega_plus >= c.omega_minus { Branch::Plus } else { Branch::Minus };
            let p = StrongParams::from_collective(&c, width, dab, branch)?;
            let g = TimeGrid::new(10.0 / width, 400)?;
            let strong = strong_populations(&p, &g, None).probability_excess();
            let dp = DoubletParams { omega_a: 1e3, delta_ab: dab, gamma_plus: c.gamma_plus, gamma_minus: c.gamma_minus };
            let freq = default_grid(1e3, dab, c.gamma_plus, None, 401);
            let fa = random_unit(&mut rng).map(|x| Complex64::new(x, 0.0));
            let fb = random_unit(&mut rng).map(|x| Complex64::new(0.0, x));
            let spec = weak_spectrum(&fa, &fb, &dp, &freq)?;
            let peak = spec.values.iter().cloned().fold(0.0, f64::max);
            let most_negative = spec.values.iter().cloned().fold(0.0, f64::min);
            Ok((strong, -most_negative / peak.max(f64::MIN_POSITIVE)))
        };
        match synthetic() {
            Ok((strong, neg)) => {
                strong_prob.record(strong, strong <= PROBABILITY_TOL, case);
                spectrum_pos.record(neg, neg <= 1e-12, case);
            }
            Err(e) => strong_prob.error(case, e),
        }
    }
    SelftestReport { seed, cases, checks: vec![reciprocity, cs, kappa_id, weak_prob, strong_prob, spectrum_pos] }
}
