//! Wellposedness calculator: coercivity margins of the coupled transport
//! matrix, the smallness constants gating the outer fixed point, a discrete
//! Sobolev-embedding estimate, a trace-inequality spot check, and a
//! manufactured-solution convergence harness.

mod embedding;
mod mms;
mod trace_ineq;

pub use embedding::{
    embedding_search, estimate_embedding_constant, inject_refined, p1_ratio, EMBEDDING_SAFETY,
};
pub use mms::{mms_study, potential_zero_jump_gap, MmsLevel, MmsProblem, MmsStudy};
pub use trace_ineq::{trace_inequality_check, trace_ratio, TraceCheck};

use crate::error::{Error, Result};
use crate::femcore::norms::{vec_div_sq, vec_dsym_sq, vec_edge_l2_sq};
use crate::materials::{lifting_velocity, BoundTable, VAR_PHI, VAR_THETA};
use crate::mesh::{InterfaceTag, Mesh};

/// Coercivity margins of the coupled transport operator, one per unknown:
/// two species, heat, potential. Each margin is the leading floor of that
/// equation minus weighted squares of the off-diagonal caps standing in the
/// same column, the weights being the Young-inequality split constants.
/// `n_species` enters the species margins as the exponent of those weights
/// (2^I on the heat and potential columns, 2^(I+1) on the species ones);
/// the transport stack itself is fixed at two species.
pub fn ellipticity_margins(bounds: &BoundTable, n_species: u32) -> Result<[f64; 4]> {
    let d_floor = [
        bounds.d_fluid_floor[0].min(bounds.d_porous_floor[0]),
        bounds.d_fluid_floor[1].min(bounds.d_porous_floor[1]),
    ];
    let positives = [
        ("species 1 diffusivity", d_floor[0]),
        ("species 2 diffusivity", d_floor[1]),
        ("heat conductivity", bounds.k_heat_floor),
        ("layer conductivity", bounds.sigma_gdl_floor),
        ("membrane conductivity", bounds.sigma_mem_floor),
    ];
    for (name, v) in positives {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Config(format!(
                "{name} floor must be positive, got {v}"
            )));
        }
    }
    let cap = &bounds.offdiag_cap;
    if cap.iter().flatten().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Config(
            "off-diagonal caps must be nonnegative and finite".into(),
        ));
    }

    let w_lead = 2f64.powi(n_species as i32);
    let w_species = 2.0 * w_lead;
    let sq = |v: f64| v * v;

    let mut margins = [0.0; 4];
    for i in 0..2 {
        let j = 1 - i;
        margins[i] = d_floor[i]
            - w_lead * sq(cap[VAR_THETA][i]) / bounds.k_heat_floor
            - w_lead * sq(cap[VAR_PHI][i]) / bounds.sigma_mem_floor
            - w_species * sq(cap[j][i]) / bounds.d_fluid_floor[j];
    }
    margins[2] = bounds.k_heat_floor
        - 4.0 * sq(cap[0][VAR_THETA]) / bounds.d_fluid_floor[0]
        - 4.0 * sq(cap[1][VAR_THETA]) / bounds.d_fluid_floor[1]
        - 2.0 * sq(cap[VAR_PHI][VAR_THETA]) / bounds.sigma_mem_floor;
    margins[3] = bounds.sigma_gdl_floor.min(bounds.sigma_mem_floor)
        - 2.0 * sq(cap[VAR_THETA][VAR_PHI]) / bounds.k_heat_floor
        - 2.0 * sq(cap[0][VAR_PHI]) / bounds.d_fluid_floor[0]
        - 2.0 * sq(cap[1][VAR_PHI]) / bounds.d_fluid_floor[1];
    Ok(margins)
}

/// How the dissipation-norm bound entering the constant `c` is obtained.
#[derive(Debug, Clone, Copy)]
pub enum PhiBound {
    /// Regularity route: the resolvent norm bound with the supplied
    /// operator constant, evaluated on the catalyst interfaces.
    Resolvent { m_r: f64 },
    /// A-posteriori route: the dissipation norm of an actual iterate.
    Measured { value: f64 },
}

/// Everything the smallness evaluation needs besides the mesh.
#[derive(Debug, Clone)]
pub struct SmallnessInputs<'a> {
    pub bounds: &'a BoundTable,
    /// Output of [`ellipticity_margins`] for the same bounds.
    pub margins: [f64; 4],
    pub r_specific: f64,
    pub u_in: f64,
    pub u_out: f64,
    pub theta_e: f64,
    /// Largest limiting current of the two electrode laws.
    pub j_l: f64,
    /// Smallest liquid permeability over the porous strips.
    pub k_l_min: f64,
    /// Embedding constant used for the convective drift.
    pub s_star: f64,
    /// Velocity integrability exponent the drift bound refers to.
    pub q_exponent: f64,
    pub phi_bound: PhiBound,
}

/// Evaluation of the fixed-point smallness conditions: the lifting constant,
/// the three scalar coefficients of the self-map inequality, the admissible
/// squared-radius interval and the pass/fail verdicts.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    /// Species, heat and potential coercivity margins.
    pub margins: [f64; 4],
    /// Smallest of the four margins.
    pub a_floor: f64,
    /// Boundary-lifting energy constant.
    pub c0: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// b computed from the raw diffusivity floors.
    pub b_from_floors: f64,
    /// b computed from the species coercivity margins; the reported b is
    /// the smaller (more restrictive) of the two presentations.
    pub b_from_margins: f64,
    pub r1: f64,
    pub r3: f64,
    pub delta: f64,
    pub ellipticity: bool,
    pub small1: bool,
    pub small2: bool,
    /// Admissible squared-radius interval of the direct case; empty when
    /// the lower end exceeds the upper.
    pub r2sq_lo: f64,
    pub r2sq_hi: f64,
    /// Echo of the inputs the verdicts depend on.
    pub s_star: f64,
    pub q_exponent: f64,
    pub m_r: Option<f64>,
    /// True when the dissipation bound came from an iterate instead of the
    /// resolvent constant.
    pub a_posteriori: bool,
}

impl HypothesisReport {
    pub fn r2(&self) -> f64 {
        self.r2sq_lo.max(0.0).sqrt()
    }

    /// Flat JSON rendering with the fixed key set. Non-finite values come
    /// out as null.
    pub fn to_json(&self) -> String {
        let num = |v: f64| {
            if v.is_finite() {
                format!("{v:e}")
            } else {
                "null".to_string()
            }
        };
        let entries = [
            ("margins.a1", num(self.margins[0])),
            ("margins.a2", num(self.margins[1])),
            ("margins.heat", num(self.margins[2])),
            ("margins.potential", num(self.margins[3])),
            ("const.a", num(self.a)),
            ("const.b", num(self.b)),
            ("const.c", num(self.c)),
            ("const.C0", num(self.c0)),
            ("const.R1", num(self.r1)),
            ("const.R3", num(self.r3)),
            ("const.Delta", num(self.delta)),
            ("verdict.ellipticity", self.ellipticity.to_string()),
            ("verdict.small1", self.small1.to_string()),
            ("verdict.small2", self.small2.to_string()),
            ("interval.R2sq_lo", num(self.r2sq_lo)),
            ("interval.R2sq_hi", num(self.r2sq_hi)),
        ];
        let mut out = String::from("{\n");
        for (i, (k, v)) in entries.iter().enumerate() {
            let comma = if i + 1 < entries.len() { "," } else { "" };
            out.push_str(&format!("  \"{k}\": {v}{comma}\n"));
        }
        out.push('}');
        out.push('\n');
        out
    }
}

/// Total length of the two catalyst interfaces, measured on the mesh.
fn catalyst_interface_length(mesh: &Mesh) -> f64 {
    [InterfaceTag::GammaA, InterfaceTag::GammaC]
        .into_iter()
        .flat_map(|t| mesh.interface_edges(t))
        .map(|e| mesh.edge_length(e.nodes))
        .sum()
}

/// Dissipation-norm bound entering `c`. The resolvent route requires the
/// operator constant to stay below its admissibility ceiling.
fn r3_bound(mesh: &Mesh, bounds: &BoundTable, j_l: f64, phi_bound: PhiBound) -> Result<f64> {
    match phi_bound {
        PhiBound::Measured { value } => Ok(value),
        PhiBound::Resolvent { m_r } => {
            if !(m_r > 0.0 && m_r.is_finite()) {
                return Err(Error::Config(format!(
                    "resolvent constant must be positive, got {m_r}"
                )));
            }
            let hi = bounds.sigma_cap;
            let lo = bounds.sigma_gdl_floor;
            let root = (hi * hi - lo * lo).sqrt();
            let denom = hi - m_r * root;
            if denom <= 0.0 {
                return Err(Error::OutOfRegime(format!(
                    "resolvent constant {m_r} reaches the admissibility ceiling {}",
                    hi / root
                )));
            }
            Ok(lo * m_r * j_l * catalyst_interface_length(mesh) / (hi * denom))
        }
    }
}

/// Evaluate the smallness conditions for the outer fixed point. All
/// constants are computed mechanically even when the margins fail, so a
/// report can always be written; the verdicts are authoritative.
pub fn smallness_report(mesh: &Mesh, inputs: &SmallnessInputs) -> Result<HypothesisReport> {
    let bd = inputs.bounds;
    let margins = inputs.margins;
    let a_floor = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let ellipticity = margins.iter().all(|m| *m > 0.0);

    // Boundary-lifting energy: the explicit vertical profile is linear in
    // y, so its nodal interpolation is the profile itself and the
    // quadrature below is exact.
    let u0 = lifting_velocity(mesh, inputs.u_in, inputs.u_out);
    let (u0x, u0y): (Vec<f64>, Vec<f64>) = u0.iter().map(|v| (v[0], v[1])).unzip();
    let dsym = vec_dsym_sq(mesh, &u0x, &u0y, |r| r.is_fluid());
    let div = vec_div_sq(mesh, &u0x, &u0y, |r| r.is_fluid());
    let gamma_edges: Vec<[usize; 2]> = mesh.gamma_edges().map(|e| e.nodes).collect();
    let gamma = vec_edge_l2_sq(mesh, &u0x, &u0y, gamma_edges.iter().map(|n| (*n, ())));
    let c0 = bd.mu_cap.sqrt() * dsym.sqrt()
        + bd.lambda_cap.sqrt() * div.sqrt()
        + bd.beta_cap.max(bd.mu_cap / inputs.k_l_min).sqrt() * gamma.sqrt();

    let damp = (bd.mu_floor / 2.0).min(bd.beta_floor).sqrt();
    let a = inputs.r_specific / (damp * bd.mu_floor.sqrt());

    let b_from_floors =
        bd.d_fluid_floor[0].min(bd.d_fluid_floor[1]) / inputs.s_star - c0 / damp;
    let b_from_margins = margins[0].min(margins[1]) / inputs.s_star - c0 / damp;
    let b = b_from_floors.min(b_from_margins);

    let r3 = r3_bound(mesh, bd, inputs.j_l, inputs.phi_bound)?;
    let sig_hi = bd.sigma_cap;
    let wall = mesh.measures().len_gamma_w();
    let c = (inputs.s_star * sig_hi).powi(2) / bd.k_heat_floor * r3 * r3
        + inputs.j_l * inputs.j_l / bd.sigma_gdl_floor.min(bd.sigma_mem_floor / 2.0)
        + bd.h_cap * inputs.theta_e * inputs.theta_e * wall;

    let delta = b * b - 4.0 * a * c;
    let small1 = ellipticity && b >= a_floor + a * c / a_floor;
    let small2 = ellipticity && delta > 0.0 && 2.0 * (a * c).sqrt() < b && b < 2.0 * a_floor + delta.sqrt();

    let r2sq_lo = c / a_floor;
    let r2sq_hi = (b - a_floor) / a;
    let r1 = (bd.mu_cap / inputs.k_l_min).sqrt()
        * (inputs.r_specific * r2sq_lo / bd.mu_floor.sqrt() + c0);

    let (m_r, a_posteriori) = match inputs.phi_bound {
        PhiBound::Resolvent { m_r } => (Some(m_r), false),
        PhiBound::Measured { .. } => (None, true),
    };

    Ok(HypothesisReport {
        margins,
        a_floor,
        c0,
        a,
        b,
        c,
        b_from_floors,
        b_from_margins,
        r1,
        r3,
        delta,
        ellipticity,
        small1,
        small2,
        r2sq_lo,
        r2sq_hi,
        s_star: inputs.s_star,
        q_exponent: inputs.q_exponent,
        m_r,
        a_posteriori,
    })
}

/// Brute-force search for an admissible squared radius: scans a fine grid
/// and reports whether the direct case and the quadratic case each contain
/// an admissible point. Exists so the closed-form verdicts can be checked
/// against something that knows nothing about them.
pub fn verdicts_by_search(a: f64, a_floor: f64, b: f64, c: f64, grid: usize) -> (bool, bool) {
    if a <= 0.0 || a_floor <= 0.0 {
        return (false, false);
    }
    let hi = (b.max(0.0) / a).max(c / a_floor) * 1.5 + 1e-12;
    let mut direct = false;
    let mut quadratic = false;
    for k in 1..=grid {
        let x = hi * k as f64 / grid as f64;
        let slack = b - a * x;
        if slack >= a_floor && a_floor * x >= c {
            direct = true;
        }
        if slack > 0.0 && slack < a_floor && a * x * x - b * x + c <= 0.0 {
            quadratic = true;
        }
        if direct && quadratic {
            break;
        }
    }
    (direct, quadratic)
}
