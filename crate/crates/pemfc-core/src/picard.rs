//! Outer fixed-point driver: alternate the flow solve and the transport
//! solve at frozen iterates, under-relax the slot updates, and stop when the
//! relative update of every field is below tolerance.

use std::time::Instant;

use crate::error::{Error, Result};
pub use crate::femcore::State;
use crate::femcore::layout::DofLayout;
use crate::femcore::norms::{piecewise_lt, scalar_h1_sq, scalar_l2_sq, vec_l2_sq, Field};
use crate::flow::{
    check_flow_estimate, flow_layout, interface_normal_flux, solve_flow, FlowData, FlowEstimate,
};
use crate::materials::{BoundTable, BvPair, Coefficients, VAR_PHI, VAR_THETA};
use crate::mesh::{InterfaceTag, Mesh};
use crate::tec::{
    check_tec_estimate, compute_joule, electrode_current, newton_solve_tec, tec_layout,
    tec_residual, TecData, TecEstimate, VAR_RHO,
};

/// Norm used for the relative-update stopping metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UpdateMetric {
    /// gradient seminorm for the scalars, L2 for the velocity, L^t for the
    /// dissipation slot (the spaces the solution lives in)
    Energy,
    /// plain L2 for everything
    L2,
}

#[derive(Clone, Debug)]
pub struct PicardConfig {
    /// relative-update tolerance
    pub tol: f64,
    pub max_outer: usize,
    /// under-relaxation factor in (0, 1]; falls back to 0.5 when the update
    /// norms grow
    pub relaxation: f64,
    pub metric: UpdateMetric,
    pub newton_tol: f64,
    pub newton_max: usize,
    /// dissipation-slot norm exponent
    pub t_exponent: f64,
    /// record wall-clock seconds per iteration (off keeps output reproducible)
    pub record_seconds: bool,
}

impl Default for PicardConfig {
    fn default() -> PicardConfig {
        PicardConfig {
            tol: 1e-8,
            max_outer: 100,
            relaxation: 1.0,
            metric: UpdateMetric::Energy,
            newton_tol: 1e-10,
            newton_max: 25,
            t_exponent: 1.5,
            record_seconds: false,
        }
    }
}

/// Everything the coupled problem needs beyond the mesh: material laws,
/// electrode parameters and boundary data.
pub struct ProblemData<'a> {
    pub coeffs: &'a Coefficients,
    pub bv: &'a BvPair,
    pub r_specific: f64,
    pub u_in: f64,
    pub u_out: f64,
    pub theta_e: f64,
    /// signed faradaic mass-flux coefficients per electrode and species,
    /// forwarded to the transport assembly; zeros disable them
    pub species_flux: [[f64; 2]; 2],
}

/// Inputs for the per-iteration a priori estimate checks; omit to skip them.
pub struct RegimeInputs<'a> {
    pub bounds: &'a BoundTable,
    /// ellipticity margins (species 1, species 2, heat, potential)
    pub margins: [f64; 4],
    pub s_star: f64,
    pub q_exponent: f64,
    pub t_exponent: f64,
}

#[derive(Clone, Debug)]
pub struct TraceRow {
    pub iter: usize,
    pub du: f64,
    pub dp: f64,
    pub drho: [f64; 2],
    pub dtheta: f64,
    pub dphi: f64,
    pub d_joule: f64,
    pub newton_steps: usize,
    pub current_imbalance: f64,
    pub darcy_flux: f64,
    pub seconds: f64,
}

#[derive(Default)]
pub struct IterationTrace {
    pub rows: Vec<TraceRow>,
    /// per-iteration estimate results, populated when regime inputs are given
    pub flow_estimates: Vec<FlowEstimate>,
    /// None marks an iteration whose velocity broke the estimate's
    /// precondition (the bound does not apply there)
    pub tec_estimates: Vec<Option<TecEstimate>>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn max_update(row: &TraceRow) -> f64 {
        row.du
            .max(row.dp)
            .max(row.drho[0])
            .max(row.drho[1])
            .max(row.dtheta)
            .max(row.dphi)
            .max(row.d_joule)
    }

    /// Fixed-schema CSV export, one row per outer iteration.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "iter,du,dp,drho1,drho2,dtheta,dphi,dPhi,newton_steps,current_imbalance,darcy_flux,seconds\n",
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e}\n",
                r.iter,
                r.du,
                r.dp,
                r.drho[0],
                r.drho[1],
                r.dtheta,
                r.dphi,
                r.d_joule,
                r.newton_steps,
                r.current_imbalance,
                r.darcy_flux,
                r.seconds
            ));
        }
        s
    }
}

pub struct FixedPointRun {
    pub state: State,
    pub trace: IterationTrace,
}

impl FixedPointRun {
    pub fn converged(&self) -> bool {
        self.trace.converged
    }

    /// Turn a non-converged run into the corresponding error.
    pub fn require_converged(self) -> Result<(State, IterationTrace)> {
        if self.trace.converged {
            Ok((self.state, self.trace))
        } else {
            let last = self
                .trace
                .rows
                .last()
                .map(IterationTrace::max_update)
                .unwrap_or(f64::NAN);
            Err(Error::NonConvergence(format!(
                "fixed point not reached after {} outer iterations, last relative update {last:.3e}",
                self.trace.rows.len()
            )))
        }
    }
}

const EPS_UPDATE: f64 = 1e-14;

fn rel(num: f64, den: f64) -> f64 {
    num / (den + EPS_UPDATE)
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn field<'a>(main: &'a [f64], mem: Option<&'a [f64]>) -> Field<'a> {
    match mem {
        Some(m) => Field::TwoSided { main, mem: m },
        None => Field::Nodal(main),
    }
}

fn scalar_update(
    mesh: &Mesh,
    metric: UpdateMetric,
    new_main: &[f64],
    new_mem: Option<&[f64]>,
    old_main: &[f64],
    old_mem: Option<&[f64]>,
    in_region: impl Fn(crate::mesh::Region) -> bool + Copy,
) -> f64 {
    let dm = diff(new_main, old_main);
    let dmem = new_mem.map(|nm| diff(nm, old_mem.expect("both traces or neither")));
    let norm_sq = match metric {
        UpdateMetric::Energy => scalar_h1_sq,
        UpdateMetric::L2 => scalar_l2_sq,
    };
    let num = norm_sq(mesh, &field(&dm, dmem.as_deref()), in_region).sqrt();
    let den = norm_sq(mesh, &field(new_main, new_mem), in_region).sqrt();
    rel(num, den)
}

/// Raw inner-solve outputs of one iteration, before relaxation.
struct Candidates {
    ux: Vec<f64>,
    uy: Vec<f64>,
    p: Vec<f64>,
    rho: [Vec<f64>; 2],
    theta: Vec<f64>,
    phi_main: Vec<f64>,
    phi_mem: Vec<f64>,
}

/// Relax the slots toward the candidates; the velocity is a derived field
/// and is taken as computed, and the dissipation slot is rebuilt from the
/// relaxed potential so its norm identity holds exactly.
fn apply_update(mesh: &Mesh, old: &State, cand: &Candidates, omega: f64) -> State {
    let blend = |old: &[f64], cand: &[f64]| -> Vec<f64> {
        old.iter()
            .zip(cand)
            .map(|(o, c)| o + omega * (c - o))
            .collect()
    };
    let phi_main = blend(&old.phi_main, &cand.phi_main);
    let phi_mem = blend(&old.phi_mem, &cand.phi_mem);
    let joule = compute_joule(mesh, &phi_main, &phi_mem);
    State {
        ux: cand.ux.clone(),
        uy: cand.uy.clone(),
        p: blend(&old.p, &cand.p),
        rho: [blend(&old.rho[0], &cand.rho[0]), blend(&old.rho[1], &cand.rho[1])],
        theta: blend(&old.theta, &cand.theta),
        phi_main,
        phi_mem,
        joule,
    }
}

/// Iterate flow and transport solves from the zero state. Returns the last
/// state with the full trace; inner-solve failures propagate as errors after
/// one halved-relaxation rewind of the previous update.
pub fn run_fixed_point(
    mesh: &Mesh,
    data: &ProblemData,
    config: &PicardConfig,
    regime: Option<&RegimeInputs>,
) -> Result<FixedPointRun> {
    if !(config.relaxation > 0.0 && config.relaxation <= 1.0) {
        return Err(Error::Config(format!(
            "relaxation factor must lie in (0, 1], got {}",
            config.relaxation
        )));
    }
    if !(config.tol > 0.0) {
        return Err(Error::Config(format!(
            "update tolerance must be positive, got {}",
            config.tol
        )));
    }

    let flow_lay = flow_layout(mesh);
    let tec_lay = tec_layout(mesh);
    let n = mesh.n_nodes();

    let mut state = State::zero(mesh);
    let mut omega = config.relaxation;
    // previous pre-update state and raw candidates, kept so one inner
    // failure can rewind the last update at halved relaxation
    let mut rewind: Option<(State, Candidates)> = None;
    let mut retried = false;
    let mut prev_max = f64::INFINITY;
    let mut trace = IterationTrace::default();

    for iter in 1..=config.max_outer {
        let t0 = Instant::now();
        let (flow, sol) = loop {
            let rho_tot: Vec<f64> =
                (0..n).map(|i| state.rho[0][i] + state.rho[1][i]).collect();
            let fdata = FlowData {
                coeffs: data.coeffs,
                r_specific: data.r_specific,
                u_in: data.u_in,
                u_out: data.u_out,
                rho_total: &rho_tot,
                theta: &state.theta,
                p_prev: &state.p,
            };
            let attempt = solve_flow(mesh, &flow_lay, &fdata).and_then(|flow| {
                let res = {
                    let tdata = TecData {
                        coeffs: data.coeffs,
                        bv: data.bv,
                        theta_e: data.theta_e,
                        wx: &flow.ux,
                        wy: &flow.uy,
                        theta_prev: &state.theta,
                        phi_prev_main: &state.phi_main,
                        phi_prev_mem: &state.phi_mem,
                        joule: &state.joule,
                        species_flux: data.species_flux,
                    };
                    // fresh start each outer iteration: the inner solution
                    // must be exact at the current slots, or small fields
                    // inherit stale errors above the outer tolerance
                    newton_solve_tec(
                        mesh,
                        &tec_lay,
                        &tdata,
                        None,
                        config.newton_tol,
                        config.newton_max,
                    )
                };
                res.map(|(sol, _)| (flow, sol))
            });
            match attempt {
                Ok(v) => break v,
                Err(e) => match rewind.take() {
                    Some((before, cand)) if !retried => {
                        retried = true;
                        omega *= 0.5;
                        state = apply_update(mesh, &before, &cand, omega);
                    }
                    _ => return Err(e),
                },
            }
        };

        if let Some(reg) = regime {
            let rho_tot: Vec<f64> =
                (0..n).map(|i| state.rho[0][i] + state.rho[1][i]).collect();
            let fdata = FlowData {
                coeffs: data.coeffs,
                r_specific: data.r_specific,
                u_in: data.u_in,
                u_out: data.u_out,
                rho_total: &rho_tot,
                theta: &state.theta,
                p_prev: &state.p,
            };
            trace
                .flow_estimates
                .push(check_flow_estimate(mesh, reg.bounds, data.coeffs, &fdata, &flow));
            let tdata = TecData {
                coeffs: data.coeffs,
                bv: data.bv,
                theta_e: data.theta_e,
                wx: &flow.ux,
                wy: &flow.uy,
                theta_prev: &state.theta,
                phi_prev_main: &state.phi_main,
                phi_prev_mem: &state.phi_mem,
                joule: &state.joule,
                species_flux: data.species_flux,
            };
            let est = check_tec_estimate(
                mesh,
                data.coeffs,
                reg.bounds,
                &tdata,
                &sol,
                reg.margins,
                reg.s_star,
                reg.q_exponent,
                reg.t_exponent,
            )
            .ok();
            trace.tec_estimates.push(est);
        }

        let cand = Candidates {
            ux: flow.ux,
            uy: flow.uy,
            p: flow.p,
            rho: sol.rho,
            theta: sol.theta,
            phi_main: sol.phi_main,
            phi_mem: sol.phi_mem,
        };
        let new_state = apply_update(mesh, &state, &cand, omega);

        let du = {
            let dx = diff(&new_state.ux, &state.ux);
            let dy = diff(&new_state.uy, &state.uy);
            let num = vec_l2_sq(mesh, &dx, &dy, |r| r.is_fluid()).sqrt();
            let den = vec_l2_sq(mesh, &new_state.ux, &new_state.uy, |r| r.is_fluid()).sqrt();
            rel(num, den)
        };
        let dp = scalar_update(mesh, config.metric, &new_state.p, None, &state.p, None, |r| {
            r.is_porous()
        });
        let drho = [
            scalar_update(
                mesh,
                config.metric,
                &new_state.rho[0],
                None,
                &state.rho[0],
                None,
                |_| true,
            ),
            scalar_update(
                mesh,
                config.metric,
                &new_state.rho[1],
                None,
                &state.rho[1],
                None,
                |_| true,
            ),
        ];
        let dtheta = scalar_update(
            mesh,
            config.metric,
            &new_state.theta,
            None,
            &state.theta,
            None,
            |_| true,
        );
        let dphi = scalar_update(
            mesh,
            config.metric,
            &new_state.phi_main,
            Some(&new_state.phi_mem),
            &state.phi_main,
            Some(&state.phi_mem),
            |r| r.is_porous(),
        );
        let d_joule = {
            let dj = diff(&new_state.joule, &state.joule);
            let t = config.t_exponent;
            let num = piecewise_lt(mesh, &dj, t, |r| r.is_gdl());
            let den = piecewise_lt(mesh, &new_state.joule, t, |r| r.is_gdl());
            rel(num, den)
        };

        rewind = Some((state, cand));
        state = new_state;

        let row = TraceRow {
            iter,
            du,
            dp,
            drho,
            dtheta,
            dphi,
            d_joule,
            newton_steps: sol.newton_steps,
            current_imbalance: sol.anode_current - sol.cathode_current,
            darcy_flux: flow.darcy_flux,
            seconds: if config.record_seconds {
                t0.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        let max_update = IterationTrace::max_update(&row);
        trace.rows.push(row);

        if max_update <= config.tol {
            trace.converged = true;
            break;
        }
        // growth fallback, ignoring the startup iterations whose update
        // norms are saturated near one by construction
        if iter >= 3 && max_update > prev_max && omega > 0.5 {
            omega = 0.5;
        }
        prev_max = max_update;
    }

    Ok(FixedPointRun { state, trace })
}

#[derive(Clone, Copy, Debug)]
pub struct Balances {
    pub darcy_net_flux: f64,
    pub current_imbalance: f64,
    pub heat_balance: f64,
}

/// Pack nodal state vectors into the transport dof ordering.
fn pack_tec(mesh: &Mesh, layout: &DofLayout, state: &State) -> Vec<f64> {
    use crate::femcore::layout::{Side, NO_DOF};
    let mut x = vec![0.0; layout.n_dofs];
    for n in 0..mesh.n_nodes() {
        for (var, vals) in [(VAR_RHO[0], &state.rho[0]), (VAR_RHO[1], &state.rho[1])] {
            x[layout.dof(var, n)] = vals[n];
        }
        x[layout.dof(VAR_THETA, n)] = state.theta[n];
        let d = layout.dof_side(VAR_PHI, n, Side::Gdl);
        if d != NO_DOF {
            x[d] = state.phi_main[n];
            x[layout.dof_side(VAR_PHI, n, Side::Membrane)] = state.phi_mem[n];
        }
    }
    x
}

/// Both electrode currents of a state, evaluated at its own jump trace.
pub fn electrode_currents(mesh: &Mesh, data: &ProblemData, state: &State) -> (f64, f64) {
    let tdata = TecData {
        coeffs: data.coeffs,
        bv: data.bv,
        theta_e: data.theta_e,
        wx: &state.ux,
        wy: &state.uy,
        theta_prev: &state.theta,
        phi_prev_main: &state.phi_main,
        phi_prev_mem: &state.phi_mem,
        joule: &state.joule,
        species_flux: data.species_flux,
    };
    let jump = |n: usize| state.phi_main[n] - state.phi_mem[n];
    (
        electrode_current(mesh, &tdata, InterfaceTag::GammaA, jump),
        electrode_current(mesh, &tdata, InterfaceTag::GammaC, jump),
    )
}

/// Conservation diagnostics at a (converged) state: net interface flux, the
/// mismatch of the two electrode currents, and the heat-row residual tested
/// with the admissible interpolant of the constant one.
pub fn balances(mesh: &Mesh, data: &ProblemData, state: &State) -> Balances {
    let darcy_net_flux = interface_normal_flux(mesh, &state.ux, &state.uy);

    let (anode, cathode) = electrode_currents(mesh, data, state);
    let current_imbalance = anode - cathode;

    let tdata = TecData {
        coeffs: data.coeffs,
        bv: data.bv,
        theta_e: data.theta_e,
        wx: &state.ux,
        wy: &state.uy,
        theta_prev: &state.theta,
        phi_prev_main: &state.phi_main,
        phi_prev_mem: &state.phi_mem,
        joule: &state.joule,
        species_flux: data.species_flux,
    };
    let layout = tec_layout(mesh);
    let x = pack_tec(mesh, &layout, state);
    let f = tec_residual(mesh, &layout, &tdata, &x);
    let mut pinned = vec![false; mesh.n_nodes()];
    for n in mesh.inlet_outlet_nodes() {
        pinned[n] = true;
    }
    let mut heat_balance = 0.0;
    for n in 0..mesh.n_nodes() {
        if !pinned[n] {
            heat_balance += f[layout.dof(VAR_THETA, n)];
        }
    }

    Balances {
        darcy_net_flux,
        current_imbalance,
        heat_balance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femcore::norms::{vec_dsym_sq, Field};
    use crate::materials::{BvElectrode, CrossDiffusionDomain, MaterialLaw};
    use crate::mesh::{build_mesh, demo_geometry, Divisions};

    fn coeffs(cross: f64) -> Coefficients {
        Coefficients {
            mu: MaterialLaw::constant(1.0e-5),
            lambda: MaterialLaw::constant(1.0e-5),
            beta: MaterialLaw::constant(10.0),
            k_l: [1.0e-11, 1.0e-13, 1.0e-11],
            klink_b: [1.0e3, 0.0, 1.0e3],
            p_floor: 1.0e3,
            d: [MaterialLaw::constant(1.0e-4), MaterialLaw::constant(8.0e-5)],
            d_cross: [
                [MaterialLaw::constant(0.0), MaterialLaw::constant(cross)],
                [MaterialLaw::constant(cross), MaterialLaw::constant(0.0)],
            ],
            k_heat: MaterialLaw::constant(1.0),
            sigma_gdl: MaterialLaw::constant(100.0),
            sigma_mem: MaterialLaw::constant(8.3),
            a_species_theta: [MaterialLaw::constant(cross), MaterialLaw::constant(cross)],
            a_species_phi: [MaterialLaw::constant(cross), MaterialLaw::constant(cross)],
            a_heat_species: [MaterialLaw::constant(cross), MaterialLaw::constant(cross)],
            a_heat_phi: MaterialLaw::constant(cross),
            a_phi_species: [MaterialLaw::constant(cross), MaterialLaw::constant(cross)],
            a_phi_theta: MaterialLaw::constant(cross),
            h_c: MaterialLaw::constant(5.0),
            cross_diffusion_domain: CrossDiffusionDomain::Membrane,
        }
    }

    fn bv() -> BvPair {
        BvPair {
            anode: BvElectrode {
                j0: 1.0e-2,
                j_lim: 1.2e4,
                b: 0.03,
            },
            cathode: BvElectrode {
                j0: 1.0e-3,
                j_lim: 9.0e3,
                b: 0.03,
            },
        }
    }

    fn mesh() -> Mesh {
        build_mesh(
            demo_geometry(),
            Divisions {
                nx: [3, 2, 1, 2, 3],
                ny: 6,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_data_converges_to_the_zero_state_in_one_iteration() {
        let mesh = mesh();
        let cf = coeffs(1.0e-6);
        let pair = bv();
        let data = ProblemData {
            coeffs: &cf,
            bv: &pair,
            r_specific: 287.0,
            u_in: 0.0,
            u_out: 0.0,
            theta_e: 0.0,
            species_flux: [[0.0; 2]; 2],
        };
        let run = run_fixed_point(&mesh, &data, &PicardConfig::default(), None).unwrap();
        assert!(run.converged());
        assert_eq!(run.trace.rows.len(), 1);
        assert!(run.state.is_zero());
        let row = &run.trace.rows[0];
        assert_eq!(row.du, 0.0);
        assert_eq!(row.newton_steps, 0);
        assert_eq!(row.darcy_flux, 0.0);
        assert_eq!(row.current_imbalance, 0.0);

        let bal = balances(&mesh, &data, &run.state);
        assert_eq!(bal.darcy_net_flux, 0.0);
        assert_eq!(bal.current_imbalance, 0.0);
        assert_eq!(bal.heat_balance, 0.0);
    }

    fn physical_data<'a>(cf: &'a Coefficients, pair: &'a BvPair) -> ProblemData<'a> {
        ProblemData {
            coeffs: cf,
            bv: pair,
            r_specific: 287.0,
            u_in: 1.0e-3,
            u_out: 1.2e-3,
            theta_e: 15.0,
            species_flux: [[0.0; 2]; 2],
        }
    }

    #[test]
    fn coupled_iteration_converges_and_satisfies_the_balances() {
        let mesh = mesh();
        let cf = coeffs(1.0e-6);
        let pair = bv();
        let data = physical_data(&cf, &pair);
        let config = PicardConfig {
            max_outer: 60,
            ..PicardConfig::default()
        };
        let run = run_fixed_point(&mesh, &data, &config, None).unwrap();
        assert!(run.converged(), "trace:\n{}", run.trace.to_csv());
        let last = run.trace.rows.last().unwrap();
        assert!(IterationTrace::max_update(last) <= config.tol);
        // the solution is nontrivial in every field
        assert!(run.state.theta.iter().any(|v| v.abs() > 0.05));
        assert!(run.state.p.iter().any(|v| v.abs() > 1e-3));
        assert!(run.state.ux.iter().chain(&run.state.uy).any(|v| v.abs() > 1e-4));
        assert!(run.state.phi_main.iter().any(|v| *v != 0.0));

        let bal = balances(&mesh, &data, &run.state);
        let u_h1 = (vec_l2_sq(&mesh, &run.state.ux, &run.state.uy, |r| r.is_fluid())
            + vec_dsym_sq(&mesh, &run.state.ux, &run.state.uy, |r| r.is_fluid()))
        .sqrt();
        assert!(
            bal.darcy_net_flux.abs() <= 1e-10 * u_h1,
            "net flux {} vs velocity scale {}",
            bal.darcy_net_flux,
            u_h1
        );
        let m = mesh.measures();
        let cur_scale = bal.current_imbalance.abs().max(1.0)
            + pair.j_lim_max() * m.len_gamma_c;
        assert!(bal.current_imbalance.abs() <= 1e-9 * cur_scale);

        // heat residual against ones, relative to the data functional scale
        let zero = State::zero(&mesh);
        let b_scale = {
            let tdata = TecData {
                coeffs: &cf,
                bv: &pair,
                theta_e: data.theta_e,
                wx: &zero.ux,
                wy: &zero.uy,
                theta_prev: &run.state.theta,
                phi_prev_main: &run.state.phi_main,
                phi_prev_mem: &run.state.phi_mem,
                joule: &run.state.joule,
                species_flux: [[0.0; 2]; 2],
            };
            let layout = tec_layout(&mesh);
            let f0 = tec_residual(&mesh, &layout, &tdata, &vec![0.0; layout.n_dofs]);
            let mut acc = 0.0;
            for n in 0..mesh.n_nodes() {
                acc += f0[layout.dof(VAR_THETA, n)].abs();
            }
            acc
        };
        assert!(
            bal.heat_balance.abs() <= 1e-6 * b_scale,
            "heat balance {} vs scale {}",
            bal.heat_balance,
            b_scale
        );
    }

    #[test]
    fn relaxed_and_full_updates_reach_the_same_fixed_point() {
        let mesh = mesh();
        let cf = coeffs(1.0e-6);
        let pair = bv();
        let data = physical_data(&cf, &pair);
        let full = run_fixed_point(&mesh, &data, &PicardConfig::default(), None).unwrap();
        let relaxed = run_fixed_point(
            &mesh,
            &data,
            &PicardConfig {
                relaxation: 0.5,
                ..PicardConfig::default()
            },
            None,
        )
        .unwrap();
        assert!(full.converged() && relaxed.converged());
        let close = |a: &[f64], b: &[f64], region: fn(crate::mesh::Region) -> bool| {
            let d = diff(a, b);
            let num = scalar_l2_sq(&mesh, &Field::Nodal(&d), region).sqrt();
            let den = scalar_l2_sq(&mesh, &Field::Nodal(a), region).sqrt()
                + scalar_l2_sq(&mesh, &Field::Nodal(b), region).sqrt();
            num <= 1e-7 * (den + EPS_UPDATE)
        };
        assert!(close(&full.state.theta, &relaxed.state.theta, |_| true));
        assert!(close(&full.state.rho[0], &relaxed.state.rho[0], |_| true));
        assert!(close(&full.state.p, &relaxed.state.p, |r| r.is_porous()));
        assert!(close(&full.state.ux, &relaxed.state.ux, |r| r.is_fluid()));
        assert!(close(
            &full.state.phi_main,
            &relaxed.state.phi_main,
            |r| r.is_porous()
        ));
    }

    #[test]
    fn dissipation_slot_keeps_its_norm_identity() {
        let mesh = mesh();
        let cf = coeffs(1.0e-6);
        let pair = bv();
        let data = physical_data(&cf, &pair);
        let run = run_fixed_point(&mesh, &data, &PicardConfig::default(), None).unwrap();
        assert!(run.state.joule.iter().all(|v| *v >= 0.0));
        let l1 = piecewise_lt(&mesh, &run.state.joule, 1.0, |r| r.is_gdl());
        let h1 = scalar_h1_sq(
            &mesh,
            &Field::TwoSided {
                main: &run.state.phi_main,
                mem: &run.state.phi_mem,
            },
            |r| r.is_gdl(),
        );
        assert!((l1 - h1).abs() <= 1e-12 * h1.max(1e-300));
    }

    #[test]
    fn identical_runs_produce_identical_traces_and_states() {
        let mesh = mesh();
        let cf = coeffs(1.0e-6);
        let pair = bv();
        let data = physical_data(&cf, &pair);
        let a = run_fixed_point(&mesh, &data, &PicardConfig::default(), None).unwrap();
        let b = run_fixed_point(&mesh, &data, &PicardConfig::default(), None).unwrap();
        assert_eq!(a.trace.to_csv(), b.trace.to_csv());
        assert_eq!(a.state, b.state);
    }

    #[test]
    fn bad_config_is_rejected_and_nonconvergence_is_reported() {
        let mesh = mesh();
        let cf = coeffs(1.0e-6);
        let pair = bv();
        let data = physical_data(&cf, &pair);
        let bad = PicardConfig {
            relaxation: 0.0,
            ..PicardConfig::default()
        };
        assert!(matches!(
            run_fixed_point(&mesh, &data, &bad, None),
            Err(Error::Config(_))
        ));

        let starved = PicardConfig {
            max_outer: 1,
            tol: 1e-14,
            ..PicardConfig::default()
        };
        let run = run_fixed_point(&mesh, &data, &starved, None).unwrap();
        assert!(!run.converged());
        assert_eq!(run.trace.rows.len(), 1);
        assert!(matches!(
            run.require_converged(),
            Err(Error::NonConvergence(_))
        ));
    }

    #[test]
    fn csv_schema_is_fixed_and_row_count_matches() {
        let mesh = mesh();
        let cf = coeffs(1.0e-6);
        let pair = bv();
        let data = ProblemData {
            coeffs: &cf,
            bv: &pair,
            r_specific: 287.0,
            u_in: 0.0,
            u_out: 0.0,
            theta_e: 0.0,
            species_flux: [[0.0; 2]; 2],
        };
        let run = run_fixed_point(&mesh, &data, &PicardConfig::default(), None).unwrap();
        let csv = run.trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iter,du,dp,drho1,drho2,dtheta,dphi,dPhi,newton_steps,current_imbalance,darcy_flux,seconds"
        );
        assert_eq!(lines.count(), run.trace.rows.len());
        for r in &run.trace.rows {
            assert_eq!(r.seconds, 0.0);
        }
    }
}
