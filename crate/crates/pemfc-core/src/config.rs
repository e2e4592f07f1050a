//! Run configuration: a single TOML file with four blocks (geometry,
//! materials, solver, output). Parsing is strict: unknown fields, malformed
//! values and missing CSV tables are all reported with the offending
//! location, and nothing is read lazily after `load` returns.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::constants::{FARADAY, M_H2, M_O2};
use crate::error::{Error, Result};
use crate::materials::{
    BoundTable, BvElectrode, BvPair, Coefficients, CrossDiffusionDomain, MaterialLaw, StateBox,
};
use crate::mesh::{build_mesh, Divisions, Geometry, Mesh};
use crate::picard::{PicardConfig, UpdateMetric};

/// One material law in the config: a bare number is a constant law, a table
/// with a `form` key is spelled out inline, and `{ csv = "path" }` loads a
/// two-column (state, value) table relative to the config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Constant(f64),
    Csv { csv: String },
    Full(MaterialLaw),
}

impl LawSpec {
    fn resolve(&self, base: &Path) -> Result<MaterialLaw> {
        match self {
            LawSpec::Constant(v) => Ok(MaterialLaw::constant(*v)),
            LawSpec::Full(law) => Ok(law.clone()),
            LawSpec::Csv { csv } => read_law_csv(&base.join(csv)),
        }
    }
}

fn zero_law() -> LawSpec {
    LawSpec::Constant(0.0)
}

fn zero_law2() -> [LawSpec; 2] {
    [zero_law(), zero_law()]
}

fn zero_law22() -> [[LawSpec; 2]; 2] {
    [zero_law2(), zero_law2()]
}

/// Two-column CSV (state, value), one point per line, optional header row.
fn read_law_csv(path: &Path) -> Result<MaterialLaw> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("law table {}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',').map(str::trim);
        let parsed = (|| {
            let a: f64 = cols.next()?.parse().ok()?;
            let b: f64 = cols.next()?.parse().ok()?;
            if cols.next().is_some() {
                return None;
            }
            Some([a, b])
        })();
        match parsed {
            Some(p) => points.push(p),
            // a single unparsable first row is a header
            None if lineno == 0 => continue,
            None => {
                return Err(Error::Config(format!(
                    "law table {} line {}: expected two numeric columns, got {line:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Config(format!(
            "law table {}: no data rows",
            path.display()
        )));
    }
    Ok(MaterialLaw::Table { points })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// strip widths: fuel channel, anode GDL, membrane, cathode GDL, air channel [m]
    pub widths: [f64; 5],
    /// channel length in the flow direction [m]
    pub length: f64,
    /// mesh divisions per strip
    pub nx: [usize; 5],
    /// mesh divisions along the channel
    pub ny: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialsConfig {
    pub r_specific: f64,
    pub u_in: f64,
    pub u_out: f64,
    /// ambient temperature on the cooled walls, relative scale [K]
    pub theta_e: f64,
    /// cell voltage, applied as a constant lift on the cathode side at export [V]
    #[serde(default)]
    pub e_cell: f64,
    /// temperature box the material laws are verified over
    pub state_box: StateBox,
    /// liquid permeability per porous strip [m^2]
    pub k_l: [f64; 3],
    /// Klinkenberg slip factor per porous strip [Pa], 0 disables
    pub klink_b: [f64; 3],
    /// pressure clamp in the slip correction [Pa]
    pub p_floor: f64,
    pub mu: LawSpec,
    pub lambda: LawSpec,
    pub beta: LawSpec,
    pub d: [LawSpec; 2],
    #[serde(default = "zero_law22")]
    pub d_cross: [[LawSpec; 2]; 2],
    pub k_heat: LawSpec,
    pub sigma_gdl: LawSpec,
    pub sigma_mem: LawSpec,
    #[serde(default = "zero_law2")]
    pub a_species_theta: [LawSpec; 2],
    #[serde(default = "zero_law2")]
    pub a_species_phi: [LawSpec; 2],
    #[serde(default = "zero_law2")]
    pub a_heat_species: [LawSpec; 2],
    #[serde(default = "zero_law")]
    pub a_heat_phi: LawSpec,
    #[serde(default = "zero_law2")]
    pub a_phi_species: [LawSpec; 2],
    #[serde(default = "zero_law")]
    pub a_phi_theta: LawSpec,
    pub h_c: LawSpec,
    pub anode: BvElectrode,
    pub cathode: BvElectrode,
    pub bounds: BoundTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpec {
    Energy,
    L2,
}

impl From<MetricSpec> for UpdateMetric {
    fn from(m: MetricSpec) -> UpdateMetric {
        match m {
            MetricSpec::Energy => UpdateMetric::Energy,
            MetricSpec::L2 => UpdateMetric::L2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_outer: usize,
    pub relaxation: f64,
    pub metric: MetricSpec,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub t_exponent: f64,
    pub record_seconds: bool,
    /// add the electrode mass sources to the species equations
    pub species_faradaic_flux: bool,
    /// where the species-species cross diffusion acts
    pub cross_diffusion_domain: CrossDiffusionDomain,
    /// uniform species-diffusivity bump for out-of-regime experiments [m^2/s];
    /// shifts the declared species floors and caps along with the laws
    pub artificial_diffusion: f64,
    /// embedding constant for the checker; estimated from the mesh when absent
    pub s_star: Option<f64>,
    /// velocity norm exponent in the drift terms
    pub q_exponent: f64,
    /// resolvent regularity bound; when absent the dissipation budget is
    /// measured from the actual iterate instead
    pub m_r: Option<f64>,
    /// evaluate the per-iteration a priori estimates during the solve
    pub check_estimates: bool,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        let p = PicardConfig::default();
        SolverConfig {
            tol: p.tol,
            max_outer: p.max_outer,
            relaxation: p.relaxation,
            metric: MetricSpec::Energy,
            newton_tol: p.newton_tol,
            newton_max: p.newton_max,
            t_exponent: p.t_exponent,
            record_seconds: p.record_seconds,
            species_faradaic_flux: false,
            cross_diffusion_domain: CrossDiffusionDomain::Membrane,
            artificial_diffusion: 0.0,
            s_star: None,
            q_exponent: 4.0,
            m_r: None,
            check_estimates: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// output directory, overridable from the command line
    pub dir: String,
    pub fields: bool,
    pub trace: bool,
    pub balances: bool,
    pub report: bool,
    pub mesh: bool,
}

impl Default for OutputConfig {
    fn default() -> OutputConfig {
        OutputConfig {
            dir: "out".into(),
            fields: true,
            trace: true,
            balances: true,
            report: true,
            mesh: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub materials: MaterialsConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// directory the config file lives in; law tables resolve against it
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        RunConfig::from_str(&text, base)
    }

    pub fn from_str(text: &str, base_dir: PathBuf) -> Result<RunConfig> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Everything checkable without touching the mesh: laws resolve (CSV
    /// tables exist and parse), electrode and bound tables are consistent,
    /// scalars are in range. Geometry is left to `build_mesh` so that a
    /// degenerate strip reports as a geometry error, not a parse error.
    fn validate(&self) -> Result<()> {
        let m = &self.materials;
        if !(m.r_specific > 0.0) {
            return Err(Error::Config(format!(
                "materials.r_specific must be positive, got {}",
                m.r_specific
            )));
        }
        if m.state_box.theta_lo > m.state_box.theta_hi {
            return Err(Error::Config(format!(
                "materials.state_box is empty: [{}, {}]",
                m.state_box.theta_lo, m.state_box.theta_hi
            )));
        }
        let s = &self.solver;
        if !(s.tol > 0.0) || !(s.relaxation > 0.0 && s.relaxation <= 1.0) {
            return Err(Error::Config(format!(
                "solver.tol must be positive and solver.relaxation in (0, 1], \
                 got {} and {}",
                s.tol, s.relaxation
            )));
        }
        if s.artificial_diffusion < 0.0 {
            return Err(Error::Config(format!(
                "solver.artificial_diffusion must be nonnegative, got {}",
                s.artificial_diffusion
            )));
        }
        self.coefficients()?.validate()?;
        self.bv().validate()?;
        self.bounds().validate()?;
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            widths: self.geometry.widths,
            length: self.geometry.length,
        }
    }

    pub fn divisions(&self) -> Divisions {
        Divisions {
            nx: self.geometry.nx,
            ny: self.geometry.ny,
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_mesh(self.geometry(), self.divisions())
    }

    pub fn coefficients(&self) -> Result<Coefficients> {
        let m = &self.materials;
        let b = &self.base_dir;
        let law = |s: &LawSpec| s.resolve(b);
        let law2 = |s: &[LawSpec; 2]| Ok::<_, Error>([law(&s[0])?, law(&s[1])?]);
        let delta = self.solver.artificial_diffusion;
        let bump = |l: MaterialLaw| shift_law(l, delta);
        Ok(Coefficients {
            mu: law(&m.mu)?,
            lambda: law(&m.lambda)?,
            beta: law(&m.beta)?,
            k_l: m.k_l,
            klink_b: m.klink_b,
            p_floor: m.p_floor,
            d: [bump(law(&m.d[0])?), bump(law(&m.d[1])?)],
            d_cross: [law2(&m.d_cross[0])?, law2(&m.d_cross[1])?],
            k_heat: law(&m.k_heat)?,
            sigma_gdl: law(&m.sigma_gdl)?,
            sigma_mem: law(&m.sigma_mem)?,
            a_species_theta: law2(&m.a_species_theta)?,
            a_species_phi: law2(&m.a_species_phi)?,
            a_heat_species: law2(&m.a_heat_species)?,
            a_heat_phi: law(&m.a_heat_phi)?,
            a_phi_species: law2(&m.a_phi_species)?,
            a_phi_theta: law(&m.a_phi_theta)?,
            h_c: law(&m.h_c)?,
            cross_diffusion_domain: self.solver.cross_diffusion_domain,
        })
    }

    pub fn bv(&self) -> BvPair {
        BvPair {
            anode: self.materials.anode.clone(),
            cathode: self.materials.cathode.clone(),
        }
    }

    /// Declared bounds, with the species floors and caps shifted by the
    /// artificial-diffusion bump so they stay consistent with the laws.
    pub fn bounds(&self) -> BoundTable {
        let mut b = self.materials.bounds.clone();
        let delta = self.solver.artificial_diffusion;
        if delta != 0.0 {
            for i in 0..2 {
                b.d_fluid_floor[i] += delta;
                b.d_porous_floor[i] += delta;
                b.d_cap[i] += delta;
            }
        }
        b
    }

    pub fn picard(&self) -> PicardConfig {
        let s = &self.solver;
        PicardConfig {
            tol: s.tol,
            max_outer: s.max_outer,
            relaxation: s.relaxation,
            metric: s.metric.into(),
            newton_tol: s.newton_tol,
            newton_max: s.newton_max,
            t_exponent: s.t_exponent,
            record_seconds: s.record_seconds,
        }
    }

    /// Signed electrode mass-flux coefficients: hydrogen consumed at the
    /// anode, oxygen at the cathode. Zeros when the flag is off.
    pub fn species_flux(&self) -> [[f64; 2]; 2] {
        if !self.solver.species_faradaic_flux {
            return [[0.0; 2]; 2];
        }
        [
            [-M_H2 / (2.0 * FARADAY), 0.0],
            [0.0, -M_O2 / (4.0 * FARADAY)],
        ]
    }
}

fn shift_law(law: MaterialLaw, delta: f64) -> MaterialLaw {
    if delta == 0.0 {
        return law;
    }
    match law {
        MaterialLaw::Constant { value } => MaterialLaw::Constant {
            value: value + delta,
        },
        MaterialLaw::Affine {
            base,
            slope,
            lo,
            hi,
        } => MaterialLaw::Affine {
            base: base + delta,
            slope,
            lo: lo + delta,
            hi: hi + delta,
        },
        MaterialLaw::Table { mut points } => {
            for p in &mut points {
                p[1] += delta;
            }
            MaterialLaw::Table { points }
        }
    }
}
