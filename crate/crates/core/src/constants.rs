//! Physical constants in SI units (CODATA 2018).

use std::f64::consts::PI;

/// Elementary charge [C].
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant [J s].
pub const H_PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant [J s].
pub const HBAR: f64 = H_PLANCK / (2.0 * PI);
/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;
/// Electron rest mass [kg].
pub const M_E: f64 = 9.109_383_701_5e-31;
/// Vacuum permittivity [F/m].
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability [H/m].
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Bohr magneton [J/T].
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Rydberg energy used by the hydrogenic surface-state formula [eV].
pub const RYDBERG_EV: f64 = 13.606;
/// Free-electron g-factor.
pub const G_ELECTRON: f64 = 2.0023;
/// Coulomb constant e^2 / (4 pi eps0) [J m].
pub const COULOMB_E2: f64 = E_CHARGE * E_CHARGE / (4.0 * PI * EPS0);
