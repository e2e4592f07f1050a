//! Physical constants and reference values (SI).

/// Faraday constant [C/mol].
pub const FARADAY: f64 = 9.6485e4;
/// Universal gas constant [J/(mol K)].
pub const R_GAS: f64 = 8.314;

/// Molar masses [kg/mol].
pub const M_H2: f64 = 2.0e-3;
pub const M_H2O: f64 = 18.0e-3;
pub const M_O2: f64 = 32.0e-3;
pub const M_AIR: f64 = 28.97e-3;

/// Specific gas constant of air [J/(kg K)].
pub fn r_specific_air() -> f64 {
    R_GAS / M_AIR
}

/// Reference membrane conductivity [S/m].
pub const SIGMA_MEMBRANE: f64 = 8.3;
/// Reference operating temperature [K].
pub const THETA_REF: f64 = 357.15;
/// Reference air density at operating conditions [kg/m^3].
/// Kept as the published reference value; the ideal-gas law at
/// (P_ATM, THETA_REF) gives ~0.988, a ~0.7% discrepancy.
pub const RHO_AIR_REF: f64 = 0.995;
/// Liquid water density near operating temperature [kg/m^3].
pub const RHO_WATER: f64 = 970.0;
/// Atmospheric pressure [Pa].
pub const P_ATM: f64 = 101_325.0;
