//! Physical constants (CODATA 2018, exact SI where defined) and unit helpers.

/// Elementary charge in coulombs.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054571817e-34;

/// Reduced flux quantum ħ/2e in webers.
pub const REDUCED_FLUX_QUANTUM: f64 = HBAR / (2.0 * ELEMENTARY_CHARGE);

/// Converts an energy in joules to an angular frequency in rad/s (ħ = 1).
#[inline]
pub fn joules_to_rad_per_s(energy: f64) -> f64 {
    energy / HBAR
}
