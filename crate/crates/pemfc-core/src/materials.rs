//! Material laws, electrode kinetics and state-equation helpers.
//!
//! All transport coefficients are scalar functions of the temperature
//! iterate; the checker side works with declared floor/cap tables that the
//! laws must respect (verified by sampling, see [`verify_bounds`]).

use crate::constants::{FARADAY, R_GAS};
use crate::error::{Error, Result};
use crate::mesh::Region;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Scalar coefficient law evaluated at a temperature value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum MaterialLaw {
    Constant { value: f64 },
    /// base + slope * theta, clamped to [lo, hi].
    Affine { base: f64, slope: f64, lo: f64, hi: f64 },
    /// Piecewise-linear in theta; constant beyond the end points.
    /// Points are (theta, value) sorted by theta.
    Table { points: Vec<[f64; 2]> },
}

impl MaterialLaw {
    pub fn constant(value: f64) -> Self {
        MaterialLaw::Constant { value }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            MaterialLaw::Constant { value } => *value,
            MaterialLaw::Affine { base, slope, lo, hi } => (base + slope * theta).clamp(*lo, *hi),
            MaterialLaw::Table { points } => {
                let n = points.len();
                if theta <= points[0][0] {
                    return points[0][1];
                }
                if theta >= points[n - 1][0] {
                    return points[n - 1][1];
                }
                let k = points.partition_point(|p| p[0] <= theta);
                let (a, b) = (points[k - 1], points[k]);
                let t = (theta - a[0]) / (b[0] - a[0]);
                a[1] + t * (b[1] - a[1])
            }
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        match self {
            MaterialLaw::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Config(format!("{name}: non-finite constant")));
                }
            }
            MaterialLaw::Affine { base, slope, lo, hi } => {
                if ![*base, *slope, *lo, *hi].iter().all(|v| v.is_finite()) {
                    return Err(Error::Config(format!("{name}: non-finite affine parameters")));
                }
                if lo > hi {
                    return Err(Error::Config(format!("{name}: clamp interval is empty")));
                }
            }
            MaterialLaw::Table { points } => {
                if points.is_empty() {
                    return Err(Error::Config(format!("{name}: empty table")));
                }
                if !points.iter().all(|p| p[0].is_finite() && p[1].is_finite()) {
                    return Err(Error::Config(format!("{name}: non-finite table entry")));
                }
                if points.windows(2).any(|w| w[0][0] >= w[1][0]) {
                    return Err(Error::Config(format!(
                        "{name}: table abscissae must be strictly increasing"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Thermal voltage slope R*theta/F [V] of the exponent in the electrode law.
pub fn tafel_slope(theta: f64) -> f64 {
    R_GAS * theta / FARADAY
}

/// Klinkenberg-corrected gas permeability.
///
/// K_g(p) = k_l * (1 + b / max(p, p_floor)); with b = 0 the liquid
/// permeability is returned unchanged. The result always lies in
/// [k_l, k_l * (1 + b / p_floor)].
pub fn klinkenberg(p: f64, k_l: f64, b: f64, p_floor: f64) -> f64 {
    if b == 0.0 {
        return k_l;
    }
    k_l * (1.0 + b / p.max(p_floor))
}

/// Ideal-gas state relation p = R_specific * rho * theta.
pub fn boyle(rho: f64, theta: f64, r_specific: f64) -> f64 {
    r_specific * rho * theta
}

/// Saturating electrode kinetics for one electrode.
///
/// For eta >= 0 the current is j = j_lim / (1 + j_lim / s) with
/// s = 2 j0 sinh(eta / b); the odd extension handles negative
/// overpotentials. The current is strictly below j_lim for finite s and
/// saturates to j_lim (correctly rounded) as s grows.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BvElectrode {
    /// Exchange current density [A/m^2].
    pub j0: f64,
    /// Limiting current density [A/m^2].
    pub j_lim: f64,
    /// Thermal voltage slope [V], see [`tafel_slope`].
    pub b: f64,
}

impl BvElectrode {
    pub fn current(&self, eta: f64) -> f64 {
        if eta < 0.0 {
            return -self.current(-eta);
        }
        let x = eta / self.b;
        if x > 690.0 {
            // sinh overflows; j_lim/s = (j_lim/j0) e^{-x} to machine precision
            return self.j_lim / (1.0 + (self.j_lim / self.j0) * (-x).exp());
        }
        let s = 2.0 * self.j0 * x.sinh();
        if s == 0.0 {
            0.0
        } else {
            self.j_lim / (1.0 + self.j_lim / s)
        }
    }

    /// dj/deta, an even function of eta.
    pub fn current_deriv(&self, eta: f64) -> f64 {
        let x = eta.abs() / self.b;
        if x > 690.0 {
            let e = (-x).exp();
            let d = 1.0 + (self.j_lim / self.j0) * e;
            return (self.j_lim * self.j_lim / (self.b * self.j0)) * e / (d * d);
        }
        let s = 2.0 * self.j0 * x.sinh();
        if s > 1e100 {
            // coth(x) = 1 to machine precision here; avoids overflow of (j_lim+s)^2
            return self.j_lim * self.j_lim / (self.b * s);
        }
        let sp = (2.0 * self.j0 / self.b) * x.cosh();
        let d = self.j_lim + s;
        self.j_lim * self.j_lim * sp / (d * d)
    }
}

/// Anode/cathode kinetics pair. The anode exchange current must dominate
/// the cathode one (sluggish oxygen reduction).
#[derive(Debug, Clone, Copy)]
pub struct BvPair {
    pub anode: BvElectrode,
    pub cathode: BvElectrode,
}

impl BvPair {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [("anode", &self.anode), ("cathode", &self.cathode)] {
            if !(e.j0 > 0.0 && e.j_lim > 0.0 && e.b > 0.0) {
                return Err(Error::Config(format!(
                    "{name} electrode parameters must be positive (j0 = {}, j_lim = {}, b = {})",
                    e.j0, e.j_lim, e.b
                )));
            }
        }
        if self.anode.j0 <= self.cathode.j0 {
            return Err(Error::Config(format!(
                "anode exchange current ({}) must exceed the cathode one ({})",
                self.anode.j0, self.cathode.j0
            )));
        }
        Ok(())
    }

    /// Larger of the two limiting currents; enters the load bound of the
    /// transport estimate.
    pub fn j_lim_max(&self) -> f64 {
        self.anode.j_lim.max(self.cathode.j_lim)
    }
}

/// Index layout of the coupled transport matrix: two species rows, then
/// temperature, then potential.
pub const N_VARS: usize = 4;
pub const VAR_THETA: usize = 2;
pub const VAR_PHI: usize = 3;

/// Where the species-species cross diffusion acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossDiffusionDomain {
    Membrane,
    Omega,
}

/// Full coefficient bundle for one run.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub mu: MaterialLaw,
    pub lambda: MaterialLaw,
    pub beta: MaterialLaw,
    /// Darcy liquid permeability per porous strip [AnodeGdl, Membrane, CathodeGdl].
    pub k_l: [f64; 3],
    /// Klinkenberg slip factor per porous strip (0 disables).
    pub klink_b: [f64; 3],
    /// Pressure floor in the Klinkenberg correction.
    pub p_floor: f64,
    /// Fick diagonal diffusivities.
    pub d: [MaterialLaw; 2],
    /// Species-species cross diffusivities, [row i][col j], i != j used.
    pub d_cross: [[MaterialLaw; 2]; 2],
    pub k_heat: MaterialLaw,
    pub sigma_gdl: MaterialLaw,
    pub sigma_mem: MaterialLaw,
    /// a_{i, theta}: species row, temperature column (on Omega).
    pub a_species_theta: [MaterialLaw; 2],
    /// a_{i, phi}: species row, potential column (on Omega_p).
    pub a_species_phi: [MaterialLaw; 2],
    /// a_{theta, j}: heat row, species columns (on Omega).
    pub a_heat_species: [MaterialLaw; 2],
    /// a_{theta, phi} (on Omega_p).
    pub a_heat_phi: MaterialLaw,
    /// a_{phi, j}: potential row, species columns (on the membrane).
    pub a_phi_species: [MaterialLaw; 2],
    /// a_{phi, theta} (on the membrane).
    pub a_phi_theta: MaterialLaw,
    pub h_c: MaterialLaw,
    pub cross_diffusion_domain: CrossDiffusionDomain,
}

impl Coefficients {
    /// Minimal liquid permeability over the porous strips.
    pub fn k_l_min(&self) -> f64 {
        self.k_l.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Permeability of a porous region at pressure p.
    pub fn permeability(&self, region: Region, p: f64) -> f64 {
        let s = match region {
            Region::AnodeGdl => 0,
            Region::Membrane => 1,
            Region::CathodeGdl => 2,
            _ => panic!("permeability queried outside the porous sandwich"),
        };
        klinkenberg(p, self.k_l[s], self.klink_b[s], self.p_floor)
    }

    pub fn sigma(&self, region: Region, theta: f64) -> f64 {
        match region {
            Region::AnodeGdl | Region::CathodeGdl => self.sigma_gdl.eval(theta),
            Region::Membrane => self.sigma_mem.eval(theta),
            _ => 0.0,
        }
    }

    /// Coupled diffusion matrix at a point of the given region, with the
    /// domain masks applied: potential row/column live on the porous
    /// sandwich only, its cross terms on the membrane only, and the
    /// species-species couplings on the membrane unless widened.
    pub fn eval_matrix(&self, theta: f64, region: Region) -> [[f64; N_VARS]; N_VARS] {
        let mut a = [[0.0; N_VARS]; N_VARS];
        let porous = region.is_porous();
        let membrane = region == Region::Membrane;
        let cross_here = match self.cross_diffusion_domain {
            CrossDiffusionDomain::Membrane => membrane,
            CrossDiffusionDomain::Omega => true,
        };
        for i in 0..2 {
            a[i][i] = self.d[i].eval(theta);
            if cross_here {
                let j = 1 - i;
                a[i][j] = self.d_cross[i][j].eval(theta);
            }
            a[i][VAR_THETA] = self.a_species_theta[i].eval(theta);
            a[VAR_THETA][i] = self.a_heat_species[i].eval(theta);
            if porous {
                a[i][VAR_PHI] = self.a_species_phi[i].eval(theta);
            }
            if membrane {
                a[VAR_PHI][i] = self.a_phi_species[i].eval(theta);
            }
        }
        a[VAR_THETA][VAR_THETA] = self.k_heat.eval(theta);
        if porous {
            a[VAR_THETA][VAR_PHI] = self.a_heat_phi.eval(theta);
            a[VAR_PHI][VAR_PHI] = self.sigma(region, theta);
        }
        if membrane {
            a[VAR_PHI][VAR_THETA] = self.a_phi_theta.eval(theta);
        }
        a
    }

    pub fn validate(&self) -> Result<()> {
        self.mu.validate("mu")?;
        self.lambda.validate("lambda")?;
        self.beta.validate("beta")?;
        for (i, d) in self.d.iter().enumerate() {
            d.validate(&format!("d[{i}]"))?;
        }
        for i in 0..2 {
            for j in 0..2 {
                if i != j {
                    self.d_cross[i][j].validate(&format!("d_cross[{i}][{j}]"))?;
                }
            }
        }
        self.k_heat.validate("k_heat")?;
        self.sigma_gdl.validate("sigma_gdl")?;
        self.sigma_mem.validate("sigma_mem")?;
        for i in 0..2 {
            self.a_species_theta[i].validate("a_species_theta")?;
            self.a_species_phi[i].validate("a_species_phi")?;
            self.a_heat_species[i].validate("a_heat_species")?;
            self.a_phi_species[i].validate("a_phi_species")?;
        }
        self.a_heat_phi.validate("a_heat_phi")?;
        self.a_phi_theta.validate("a_phi_theta")?;
        self.h_c.validate("h_c")?;
        if self.k_l.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::Config(format!(
                "liquid permeabilities must be positive, got {:?}",
                self.k_l
            )));
        }
        if self.klink_b.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(Error::Config(format!(
                "Klinkenberg slip factors must be nonnegative, got {:?}",
                self.klink_b
            )));
        }
        let b_max = self.klink_b.iter().cloned().fold(0.0, f64::max);
        if b_max > 0.0 && !(self.p_floor > 0.0) {
            return Err(Error::Config(
                "a positive pressure floor is required when Klinkenberg slip is active".into(),
            ));
        }
        Ok(())
    }
}

/// Declared floors and caps the laws must respect; the checker works off
/// these, not off the laws themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundTable {
    pub mu_floor: f64,
    pub mu_cap: f64,
    pub lambda_cap: f64,
    pub beta_floor: f64,
    pub beta_cap: f64,
    pub d_fluid_floor: [f64; 2],
    pub d_porous_floor: [f64; 2],
    pub d_cap: [f64; 2],
    pub k_heat_floor: f64,
    pub k_heat_cap: f64,
    pub sigma_gdl_floor: f64,
    pub sigma_mem_floor: f64,
    pub sigma_cap: f64,
    pub h_floor: f64,
    pub h_cap: f64,
    /// Absolute caps on the off-diagonal couplings of the transport matrix,
    /// [row][col] with the diagonal entries ignored.
    pub offdiag_cap: [[f64; 4]; 4],
}

impl BoundTable {
    pub fn validate(&self) -> Result<()> {
        let pairs = [
            ("mu", self.mu_floor, self.mu_cap),
            ("beta", self.beta_floor, self.beta_cap),
            ("k_heat", self.k_heat_floor, self.k_heat_cap),
            ("h", self.h_floor, self.h_cap),
        ];
        for (name, lo, hi) in pairs {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} bounds must satisfy 0 < floor <= cap, got ({lo}, {hi})"
                )));
            }
        }
        for i in 0..2 {
            let (lof, lop, hi) = (self.d_fluid_floor[i], self.d_porous_floor[i], self.d_cap[i]);
            if !(lof > 0.0 && lop > 0.0 && hi >= lof.max(lop) && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "diffusivity bounds for species {i} must satisfy 0 < floors <= cap"
                )));
            }
        }
        if !(self.sigma_gdl_floor > 0.0
            && self.sigma_mem_floor > 0.0
            && self.sigma_cap >= self.sigma_gdl_floor.max(self.sigma_mem_floor))
        {
            return Err(Error::Config(
                "conductivity bounds must satisfy 0 < floors <= cap".into(),
            ));
        }
        if self.lambda_cap < 0.0 {
            return Err(Error::Config("lambda cap must be nonnegative".into()));
        }
        if self
            .offdiag_cap
            .iter()
            .flatten()
            .any(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(Error::Config(
                "off-diagonal caps must be nonnegative and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Sampling box for the regime check: the temperature range the laws are
/// expected to see.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StateBox {
    pub theta_lo: f64,
    pub theta_hi: f64,
}

/// Verify by sampling that every law stays inside its declared bounds over
/// the state box, in every region mask combination.
pub fn verify_bounds(
    coeffs: &Coefficients,
    bounds: &BoundTable,
    state_box: StateBox,
    n_samples: usize,
    rng: &mut impl Rng,
) -> Result<()> {
    let check = |name: &str, v: f64, lo: f64, hi: f64| -> Result<()> {
        if v < lo || v > hi {
            return Err(Error::OutOfRegime(format!(
                "{name} = {v} leaves its declared bounds [{lo}, {hi}]"
            )));
        }
        Ok(())
    };
    for _ in 0..n_samples {
        let theta = rng.random_range(state_box.theta_lo..=state_box.theta_hi);
        check("mu", coeffs.mu.eval(theta), bounds.mu_floor, bounds.mu_cap)?;
        check(
            "|lambda|",
            coeffs.lambda.eval(theta).abs(),
            0.0,
            bounds.lambda_cap,
        )?;
        check(
            "beta",
            coeffs.beta.eval(theta),
            bounds.beta_floor,
            bounds.beta_cap,
        )?;
        check(
            "h_c",
            coeffs.h_c.eval(theta),
            bounds.h_floor,
            bounds.h_cap,
        )?;
        for region in Region::ALL {
            let a = coeffs.eval_matrix(theta, region);
            for i in 0..2 {
                let floor = if region.is_fluid() {
                    bounds.d_fluid_floor[i]
                } else {
                    bounds.d_porous_floor[i]
                };
                check(&format!("D_{i}"), a[i][i], floor, bounds.d_cap[i])?;
            }
            check(
                "k_heat",
                a[VAR_THETA][VAR_THETA],
                bounds.k_heat_floor,
                bounds.k_heat_cap,
            )?;
            match region {
                Region::AnodeGdl | Region::CathodeGdl => check(
                    "sigma_gdl",
                    a[VAR_PHI][VAR_PHI],
                    bounds.sigma_gdl_floor,
                    bounds.sigma_cap,
                )?,
                Region::Membrane => check(
                    "sigma_mem",
                    a[VAR_PHI][VAR_PHI],
                    bounds.sigma_mem_floor,
                    bounds.sigma_cap,
                )?,
                _ => {}
            }
            for r in 0..N_VARS {
                for c in 0..N_VARS {
                    if r != c {
                        check(
                            &format!("|a[{r}][{c}]| ({region:?})"),
                            a[r][c].abs(),
                            0.0,
                            bounds.offdiag_cap[r][c],
                        )?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Nodal interpolation of the inlet/outlet-compatible lifting velocity:
/// vertical profile u0 = (0, u_in + (u_out - u_in) y / L) on the channel
/// closures, zero elsewhere. Linear in y, so the interpolation is exact.
pub fn lifting_velocity(mesh: &crate::mesh::Mesh, u_in: f64, u_out: f64) -> Vec<[f64; 2]> {
    let length = mesh.geom.length;
    let mut u0 = vec![[0.0, 0.0]; mesh.n_nodes()];
    for n in 0..mesh.n_nodes() {
        if mesh.is_fluid_node(n) {
            let y = mesh.coords[n][1];
            u0[n] = [0.0, u_in + (u_out - u_in) * y / length];
        }
    }
    u0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn electrode() -> BvElectrode {
        BvElectrode {
            j0: 1.0,
            j_lim: 1.0e4,
            b: 0.03,
        }
    }

    #[test]
    fn thermal_voltage_slope_at_operating_temperature() {
        let b = tafel_slope(357.15);
        assert!((b - 0.030775).abs() < 1e-6, "b = {b}");
    }

    #[test]
    fn electrode_current_is_odd_and_vanishes_at_zero() {
        let e = electrode();
        assert_eq!(e.current(0.0), 0.0);
        for k in 1..=1000 {
            let eta = 40.0 * e.b * k as f64 / 1000.0;
            assert_eq!(e.current(-eta), -e.current(eta));
        }
    }

    #[test]
    fn electrode_current_stays_strictly_below_the_limit() {
        let e = electrode();
        for k in 0..=1000 {
            let eta = -40.0 * e.b + 80.0 * e.b * k as f64 / 1000.0;
            assert!(e.current(eta).abs() < e.j_lim);
        }
    }

    #[test]
    fn electrode_current_saturates_to_the_limit() {
        let e = electrode();
        let j = e.current(40.0 * e.b);
        assert!((j - e.j_lim).abs() <= 1e-6 * e.j_lim);
        // and is correctly rounded to the limit once sinh overflows
        assert_eq!(e.current(800.0 * e.b), e.j_lim);
        assert_eq!(e.current(-800.0 * e.b), -e.j_lim);
    }

    #[test]
    fn electrode_slope_at_zero_is_twice_j0_over_b() {
        let e = BvElectrode {
            j0: 1.0,
            j_lim: 1.0e4,
            b: 0.03,
        };
        let expect = 2.0 * e.j0 / e.b; // 66.67 with these numbers
        assert!((e.current_deriv(0.0) - expect).abs() < 1e-10 * expect);
        assert!((expect - 66.6666667).abs() < 1e-4);
    }

    #[test]
    fn electrode_derivative_matches_central_differences() {
        let e = electrode();
        let h = 1e-6;
        for eta in [-0.2, 0.05, 0.4] {
            let cd = (e.current(eta + h) - e.current(eta - h)) / (2.0 * h);
            let d = e.current_deriv(eta);
            assert!(
                (d - cd).abs() <= 1e-6 * d.abs().max(1e-300),
                "eta = {eta}: analytic {d}, central {cd}"
            );
        }
    }

    #[test]
    fn electrode_derivative_stays_finite_far_out() {
        let e = electrode();
        // far branch returns finite, decaying values while exp(-x) is
        // representable
        let d1 = e.current_deriv(700.0 * e.b);
        let d2 = e.current_deriv(710.0 * e.b);
        assert!(d1.is_finite() && d2.is_finite());
        assert!(d2 < d1 && d2 > 0.0);
        // past the underflow threshold it saturates to zero, not NaN
        let d3 = e.current_deriv(800.0 * e.b);
        assert!(d3.is_finite() && d3 >= 0.0);
    }

    #[test]
    fn klinkenberg_reference_value_and_clamp() {
        let k = klinkenberg(1.0e5, 1.0e-13, 1.0e4, 1.0e4);
        assert!((k - 1.1e-13).abs() < 1e-27);
        // below the floor the correction saturates
        let k_floor = klinkenberg(-5.0, 1.0e-13, 1.0e4, 1.0e4);
        assert!((k_floor - 2.0e-13).abs() < 1e-27);
        // zero slip returns k_l exactly even with a zero floor
        assert_eq!(klinkenberg(0.0, 1.0e-13, 0.0, 0.0), 1.0e-13);
    }

    #[test]
    fn state_equation_reference_point() {
        let p = boyle(0.995, 357.15, crate::constants::r_specific_air());
        assert!((p - crate::constants::P_ATM).abs() / crate::constants::P_ATM < 0.007);
    }

    #[test]
    fn law_forms_evaluate_and_clamp() {
        let c = MaterialLaw::constant(3.0);
        assert_eq!(c.eval(123.0), 3.0);
        let a = MaterialLaw::Affine {
            base: 1.0,
            slope: 2.0,
            lo: 1.5,
            hi: 4.0,
        };
        assert_eq!(a.eval(0.0), 1.5);
        assert_eq!(a.eval(1.0), 3.0);
        assert_eq!(a.eval(100.0), 4.0);
        let t = MaterialLaw::Table {
            points: vec![[0.0, 1.0], [1.0, 3.0], [2.0, 2.0]],
        };
        assert_eq!(t.eval(-1.0), 1.0);
        assert_eq!(t.eval(0.5), 2.0);
        assert_eq!(t.eval(1.5), 2.5);
        assert_eq!(t.eval(5.0), 2.0);
    }

    fn demo_coefficients() -> Coefficients {
        let z = MaterialLaw::constant(0.0);
        Coefficients {
            mu: MaterialLaw::constant(1.0e-5),
            lambda: MaterialLaw::constant(1.0e-5),
            beta: MaterialLaw::constant(10.0),
            k_l: [1.0e-11, 1.0e-13, 1.0e-11],
            klink_b: [1.0e3, 0.0, 1.0e3],
            p_floor: 1.0e3,
            d: [MaterialLaw::constant(1.0e-4), MaterialLaw::constant(8.0e-5)],
            d_cross: [
                [z.clone(), MaterialLaw::constant(1.0e-6)],
                [MaterialLaw::constant(1.0e-6), z.clone()],
            ],
            k_heat: MaterialLaw::constant(1.0),
            sigma_gdl: MaterialLaw::constant(100.0),
            sigma_mem: MaterialLaw::constant(8.3),
            a_species_theta: [MaterialLaw::constant(1.0e-7), MaterialLaw::constant(1.0e-7)],
            a_species_phi: [MaterialLaw::constant(1.0e-7), MaterialLaw::constant(1.0e-7)],
            a_heat_species: [MaterialLaw::constant(1.0e-7), MaterialLaw::constant(1.0e-7)],
            a_heat_phi: MaterialLaw::constant(1.0e-7),
            a_phi_species: [MaterialLaw::constant(1.0e-7), MaterialLaw::constant(1.0e-7)],
            a_phi_theta: MaterialLaw::constant(1.0e-7),
            h_c: MaterialLaw::constant(5.0),
            cross_diffusion_domain: CrossDiffusionDomain::Membrane,
        }
    }

    #[test]
    fn transport_matrix_region_masks() {
        let c = demo_coefficients();
        let th = 350.0;
        let fluid = c.eval_matrix(th, Region::Fuel);
        // potential row and column vanish off the porous sandwich
        for k in 0..N_VARS {
            assert_eq!(fluid[VAR_PHI][k], 0.0);
            assert_eq!(fluid[k][VAR_PHI], 0.0);
        }
        // species cross terms vanish off the membrane by default
        assert_eq!(fluid[0][1], 0.0);
        let gdl = c.eval_matrix(th, Region::AnodeGdl);
        assert_eq!(gdl[0][1], 0.0);
        assert_eq!(gdl[VAR_PHI][0], 0.0); // potential cross terms membrane-only
        assert_eq!(gdl[VAR_PHI][VAR_PHI], 100.0);
        assert_eq!(gdl[0][VAR_PHI], 1.0e-7); // species-potential acts on all porous strips
        let mem = c.eval_matrix(th, Region::Membrane);
        assert_eq!(mem[0][1], 1.0e-6);
        assert_eq!(mem[VAR_PHI][0], 1.0e-7);
        assert_eq!(mem[VAR_PHI][VAR_PHI], 8.3);
        // widened cross-diffusion mask
        let mut cw = c.clone();
        cw.cross_diffusion_domain = CrossDiffusionDomain::Omega;
        assert_eq!(cw.eval_matrix(th, Region::Fuel)[0][1], 1.0e-6);
    }

    #[test]
    fn bound_verification_accepts_and_rejects() {
        let c = demo_coefficients();
        let mut caps = [[1.0e-6; 4]; 4];
        caps[0][1] = 1.0e-6;
        let bounds = BoundTable {
            mu_floor: 1.0e-5,
            mu_cap: 1.0e-5,
            lambda_cap: 1.0e-5,
            beta_floor: 10.0,
            beta_cap: 10.0,
            d_fluid_floor: [1.0e-4, 8.0e-5],
            d_porous_floor: [1.0e-4, 8.0e-5],
            d_cap: [1.0e-4, 8.0e-5],
            k_heat_floor: 1.0,
            k_heat_cap: 1.0,
            sigma_gdl_floor: 100.0,
            sigma_mem_floor: 8.3,
            sigma_cap: 100.0,
            h_floor: 5.0,
            h_cap: 5.0,
            offdiag_cap: caps,
        };
        bounds.validate().unwrap();
        let sb = StateBox {
            theta_lo: 300.0,
            theta_hi: 400.0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        verify_bounds(&c, &bounds, sb, 10_000, &mut rng).unwrap();

        let mut tight = bounds.clone();
        tight.offdiag_cap[0][1] = 1.0e-7; // law evaluates to 1e-6 on the membrane
        let err = verify_bounds(&c, &tight, sb, 10_000, &mut rng).unwrap_err();
        assert!(matches!(err, Error::OutOfRegime(_)));
    }

    #[test]
    fn lifting_profile_is_linear_in_y_and_channel_supported() {
        let mesh = crate::mesh::build_mesh(
            crate::mesh::Geometry {
                widths: [1.0e-3, 2.5e-4, 1.0e-4, 2.5e-4, 1.0e-3],
                length: 4.0e-3,
            },
            crate::mesh::Divisions {
                nx: [2, 1, 1, 1, 2],
                ny: 4,
            },
        )
        .unwrap();
        let u0 = lifting_velocity(&mesh, 0.2, 0.6);
        for n in 0..mesh.n_nodes() {
            let [x, y] = mesh.coords[n];
            if mesh.is_fluid_node(n) {
                let expect = 0.2 + 0.4 * y / 4.0e-3;
                assert!((u0[n][1] - expect).abs() < 1e-15);
                assert_eq!(u0[n][0], 0.0);
            } else {
                assert_eq!(u0[n], [0.0, 0.0], "at ({x}, {y})");
            }
        }
    }
}
