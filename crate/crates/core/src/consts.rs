//! SI constants (CODATA 2018).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// One debye in C m.
pub const DEBYE: f64 = 3.335_640_952e-30;

/// Prefactor ω²/(ħ ε₀ c²) that turns `d* · G · d` (G in 1/m, d in C m) into rad/s.
pub fn coupling_prefactor(omega: f64) -> f64 {
    omega * omega / (HBAR * EPSILON_0 * C * C)
}

/// Free-space single-atom decay rate Γ₀ = ω³|d|²/(3πħε₀c³).
pub fn free_space_decay_rate(omega: f64, dipole_norm: f64) -> f64 {
    omega.powi(3) * dipole_norm * dipole_norm
        / (3.0 * std::f64::consts::PI * HBAR * EPSILON_0 * C.powi(3))
}
