//! Channel flow coupled to porous filtration.
//!
//! Unknowns are the velocity perturbation U = u - u0 on the channels (u0 is
//! the linear inflow lifting) and the gas pressure p on the porous strips.
//! The weak form couples them skew-symmetrically across the fluid-porous
//! interface, so the assembled blocks are exact negative transposes of each
//! other and energy identities hold at the discrete level.

use crate::error::Result;
use crate::femcore::assemble::{
    div_test_load, edge_mass_tangential, interface_coupling, p1_sampler, scalar_diffusion,
    vector_stress, EdgeGeom,
};
use crate::femcore::layout::{DofLayout, VarSpec};
use crate::femcore::norms::{
    scalar_h1_sq, scalar_l4, vec_div_sq, vec_dsym_sq, vec_tangential_edge_l2_sq, Field,
};
use crate::femcore::quadrature::{TRI_DEG4, EDGE_GAUSS2};
use crate::femcore::system::SparseSystem;
use crate::materials::{lifting_velocity, BoundTable, Coefficients};
use crate::mesh::Mesh;

pub const VAR_UX: usize = 0;
pub const VAR_UY: usize = 1;
pub const VAR_P: usize = 2;

/// Frozen fields from the outer fixed point that the flow problem needs.
pub struct FlowData<'a> {
    pub coeffs: &'a Coefficients,
    pub r_specific: f64,
    pub u_in: f64,
    pub u_out: f64,
    /// total density iterate (rho1 + rho2), nodal
    pub rho_total: &'a [f64],
    /// temperature iterate, nodal
    pub theta: &'a [f64],
    /// pressure iterate feeding the slip-corrected permeability, nodal
    pub p_prev: &'a [f64],
}

pub struct FlowSolution {
    /// total velocity u = U + u0, nodal, zero off the channels
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    /// perturbation U alone
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    /// gas pressure, nodal, zero off the porous strips
    pub p: Vec<f64>,
    /// net interface flux int_Gamma u . n by edge quadrature
    pub darcy_flux: f64,
    /// the same quantity recovered from the pressure-row residuals
    pub darcy_flux_residual: f64,
}

pub fn flow_layout(mesh: &Mesh) -> DofLayout {
    DofLayout::build(
        mesh,
        &[VarSpec::fluid(), VarSpec::fluid(), VarSpec::porous(false)],
    )
}

fn dirichlet_rows(mesh: &Mesh, layout: &DofLayout) -> Vec<(usize, f64)> {
    let mut bc = Vec::new();
    for n in mesh.inlet_outlet_nodes() {
        bc.push((layout.dof(VAR_UX, n), 0.0));
        bc.push((layout.dof(VAR_UY, n), 0.0));
    }
    for n in mesh.side_wall_nodes() {
        bc.push((layout.dof(VAR_UX, n), 0.0));
    }
    bc.sort_unstable_by_key(|&(d, _)| d);
    bc.dedup_by_key(|&mut (d, _)| d);
    bc
}

/// Assembles the flow system for frozen iterates. Returns the system with
/// boundary conditions not yet applied, plus the lifting in dof order.
pub fn assemble_flow(mesh: &Mesh, layout: &DofLayout, data: &FlowData) -> SparseSystem {
    let mut sys = SparseSystem::new(layout.n_dofs);
    let theta = p1_sampler(mesh, data.theta);
    let rho = p1_sampler(mesh, data.rho_total);
    let p_prev = p1_sampler(mesh, data.p_prev);
    let cf = data.coeffs;

    vector_stress(
        &mut sys,
        mesh,
        layout,
        [VAR_UX, VAR_UY],
        |r| r.is_fluid(),
        |t, x| cf.mu.eval(theta(t, x)),
        |t, x| cf.lambda.eval(theta(t, x)),
        &TRI_DEG4,
    );
    let gamma: Vec<[usize; 2]> = mesh.gamma_edges().map(|e| e.nodes).collect();
    edge_mass_tangential(&mut sys, mesh, layout, [VAR_UX, VAR_UY], gamma.iter(), |e, t| {
        cf.beta
            .eval(data.theta[e[0]] * (1.0 - t) + data.theta[e[1]] * t)
    });
    scalar_diffusion(
        &mut sys,
        mesh,
        layout,
        VAR_P,
        VAR_P,
        |r| r.is_porous(),
        |t, x| {
            let region = mesh.tri_region[t];
            cf.permeability(region, p_prev(t, x)) / cf.mu.eval(theta(t, x))
        },
        &TRI_DEG4,
    );
    let coupled: Vec<(&[usize; 2], [f64; 2])> = mesh
        .gamma_edges()
        .map(|e| (&e.nodes, mesh.gamma_normal_from_fluid(e.tag)))
        .collect();
    interface_coupling(
        &mut sys,
        mesh,
        layout,
        [VAR_UX, VAR_UY],
        VAR_P,
        coupled.into_iter(),
    );
    // thermodynamic driving term R rho theta against div v
    div_test_load(
        &mut sys,
        mesh,
        layout,
        [VAR_UX, VAR_UY],
        |r| r.is_fluid(),
        |t, x| data.r_specific * rho(t, x) * theta(t, x),
        &TRI_DEG4,
    );
    sys
}

pub fn solve_flow(mesh: &Mesh, layout: &DofLayout, data: &FlowData) -> Result<FlowSolution> {
    let mut sys = assemble_flow(mesh, layout, data);

    // move the lifting to the right-hand side: rhs -= A x0. The lifting has
    // no normal trace on the interface, so this is exactly the G functional.
    let u0 = lifting_velocity(mesh, data.u_in, data.u_out);
    let mut x0 = vec![0.0; layout.n_dofs];
    for n in 0..mesh.n_nodes() {
        let d = layout.dof(VAR_UX, n);
        if d != crate::femcore::layout::NO_DOF {
            x0[d] = u0[n][0];
            x0[layout.dof(VAR_UY, n)] = u0[n][1];
        }
    }
    let ax0 = sys.matvec(&x0);
    for i in 0..layout.n_dofs {
        let v = ax0[i];
        if v != 0.0 {
            sys.add_rhs(i, -v);
        }
    }

    sys.apply_dirichlet(&dirichlet_rows(mesh, layout));
    let x = sys.solve()?;

    // conservation: with q = 1 on the porous strips the pressure rows state
    // that the net interface influx vanishes; recover it from the residual.
    let res = sys.residual(&x);
    let mut flux_res = 0.0;
    for n in 0..mesh.n_nodes() {
        let d = layout.dof(VAR_P, n);
        if d != crate::femcore::layout::NO_DOF {
            flux_res -= res[d];
        }
    }

    let (wx, _) = layout.extract(VAR_UX, &x);
    let (wy, _) = layout.extract(VAR_UY, &x);
    let (p, _) = layout.extract(VAR_P, &x);
    let mut ux = wx.clone();
    let mut uy = wy.clone();
    for n in 0..mesh.n_nodes() {
        ux[n] += u0[n][0];
        uy[n] += u0[n][1];
    }
    let darcy_flux = interface_normal_flux(mesh, &ux, &uy);
    Ok(FlowSolution {
        ux,
        uy,
        wx,
        wy,
        p,
        darcy_flux,
        darcy_flux_residual: flux_res,
    })
}

/// int_Gamma u . n with n pointing out of the channels, 2-point Gauss.
pub fn interface_normal_flux(mesh: &Mesh, ux: &[f64], uy: &[f64]) -> f64 {
    let mut acc = 0.0;
    for e in mesh.gamma_edges() {
        let n = mesh.gamma_normal_from_fluid(e.tag);
        let eg = EdgeGeom::new(mesh.coords[e.nodes[0]], mesh.coords[e.nodes[1]]);
        for (tq, wq) in &EDGE_GAUSS2 {
            let vx = ux[e.nodes[0]] * (1.0 - tq) + ux[e.nodes[1]] * tq;
            let vy = uy[e.nodes[0]] * (1.0 - tq) + uy[e.nodes[1]] * tq;
            acc += eg.len * wq * (vx * n[0] + vy * n[1]);
        }
    }
    acc
}

pub struct FlowEstimate {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// A priori energy bound for the flow solution: the dissipation of the
/// computed fields must not exceed the data-driven budget.
pub fn check_flow_estimate(
    mesh: &Mesh,
    bounds: &BoundTable,
    coeffs: &Coefficients,
    data: &FlowData,
    sol: &FlowSolution,
) -> FlowEstimate {
    let k_l = coeffs.k_l_min();
    let gamma: Vec<[usize; 2]> = mesh.gamma_edges().map(|e| e.nodes).collect();

    let lhs = 0.5 * bounds.mu_floor * vec_dsym_sq(mesh, &sol.ux, &sol.uy, |r| r.is_fluid())
        + bounds.beta_floor * vec_tangential_edge_l2_sq(mesh, &sol.ux, &sol.uy, gamma.iter())
        + (k_l / bounds.mu_cap) * scalar_h1_sq(mesh, &Field::Nodal(&sol.p), |r| r.is_porous());

    let u0 = lifting_velocity(mesh, data.u_in, data.u_out);
    let u0x: Vec<f64> = u0.iter().map(|v| v[0]).collect();
    let u0y: Vec<f64> = u0.iter().map(|v| v[1]).collect();
    let rho_l4 = scalar_l4(mesh, &Field::Nodal(data.rho_total), |r| r.is_fluid());
    let theta_l4 = scalar_l4(mesh, &Field::Nodal(data.theta), |r| r.is_fluid());
    let du0 = vec_dsym_sq(mesh, &u0x, &u0y, |r| r.is_fluid()).sqrt();
    let div_u0_sq = vec_div_sq(mesh, &u0x, &u0y, |r| r.is_fluid());
    let u0_gamma_sq = {
        let mut acc = 0.0;
        for e in mesh.gamma_edges() {
            let eg = EdgeGeom::new(mesh.coords[e.nodes[0]], mesh.coords[e.nodes[1]]);
            for (tq, wq) in &EDGE_GAUSS2 {
                let vx = u0x[e.nodes[0]] * (1.0 - tq) + u0x[e.nodes[1]] * tq;
                let vy = u0y[e.nodes[0]] * (1.0 - tq) + u0y[e.nodes[1]] * tq;
                acc += eg.len * wq * (vx * vx + vy * vy);
            }
        }
        acc
    };

    let head = data.r_specific / bounds.mu_floor.sqrt() * rho_l4 * theta_l4
        + bounds.mu_cap.sqrt() * du0;
    let rhs = head * head
        + bounds.lambda_cap * div_u0_sq
        + (bounds.beta_cap).max(bounds.mu_cap / k_l) * u0_gamma_sq;

    FlowEstimate {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-8),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::femcore::layout::NO_DOF;
    use crate::materials::MaterialLaw;
    use crate::mesh::{build_mesh, demo_geometry, Divisions};

    fn coeffs() -> Coefficients {
        Coefficients {
            mu: MaterialLaw::constant(1.0e-5),
            lambda: MaterialLaw::constant(1.0e-5),
            beta: MaterialLaw::constant(10.0),
            k_l: [1.0e-11, 1.0e-13, 1.0e-11],
            klink_b: [1.0e3, 0.0, 1.0e3],
            p_floor: 1.0e3,
            d: [MaterialLaw::constant(1.0e-4), MaterialLaw::constant(8.0e-5)],
            d_cross: [
                [MaterialLaw::constant(0.0), MaterialLaw::constant(0.0)],
                [MaterialLaw::constant(0.0), MaterialLaw::constant(0.0)],
            ],
            k_heat: MaterialLaw::constant(1.0),
            sigma_gdl: MaterialLaw::constant(100.0),
            sigma_mem: MaterialLaw::constant(8.3),
            a_species_theta: [MaterialLaw::constant(0.0), MaterialLaw::constant(0.0)],
            a_species_phi: [MaterialLaw::constant(0.0), MaterialLaw::constant(0.0)],
            a_heat_species: [MaterialLaw::constant(0.0), MaterialLaw::constant(0.0)],
            a_heat_phi: MaterialLaw::constant(0.0),
            a_phi_species: [MaterialLaw::constant(0.0), MaterialLaw::constant(0.0)],
            a_phi_theta: MaterialLaw::constant(0.0),
            h_c: MaterialLaw::constant(5.0),
            cross_diffusion_domain: crate::materials::CrossDiffusionDomain::Membrane,
        }
    }

    fn mesh() -> Mesh {
        build_mesh(
            demo_geometry(),
            Divisions {
                nx: [4, 2, 1, 2, 4],
                ny: 8,
            },
        )
        .unwrap()
    }

    #[test]
    fn zero_data_gives_the_zero_solution() {
        let mesh = mesh();
        let layout = flow_layout(&mesh);
        let zeros = vec![0.0; mesh.n_nodes()];
        let cf = coeffs();
        let data = FlowData {
            coeffs: &cf,
            r_specific: 287.0,
            u_in: 0.0,
            u_out: 0.0,
            rho_total: &zeros,
            theta: &zeros,
            p_prev: &zeros,
        };
        let sol = solve_flow(&mesh, &layout, &data).unwrap();
        assert!(sol.ux.iter().all(|v| *v == 0.0));
        assert!(sol.uy.iter().all(|v| *v == 0.0));
        assert!(sol.p.iter().all(|v| *v == 0.0));
        assert_eq!(sol.darcy_flux, 0.0);
    }

    #[test]
    fn constant_state_recovers_the_gas_law_pressure() {
        // with rho theta constant and no inflow, the exact discrete solution
        // is U = 0 and p = R rho theta everywhere
        let mesh = mesh();
        let layout = flow_layout(&mesh);
        let rho = vec![0.995; mesh.n_nodes()];
        let theta = vec![357.15; mesh.n_nodes()];
        let p_prev = vec![1.0e5; mesh.n_nodes()];
        let cf = coeffs();
        let r = 287.0;
        let data = FlowData {
            coeffs: &cf,
            r_specific: r,
            u_in: 0.0,
            u_out: 0.0,
            rho_total: &rho,
            theta: &theta,
            p_prev: &p_prev,
        };
        let sol = solve_flow(&mesh, &layout, &data).unwrap();
        let want = r * 0.995 * 357.15;
        let uscale = want; // pressure scale; velocities should be ~0 against it
        for n in 0..mesh.n_nodes() {
            assert!(
                sol.ux[n].abs() + sol.uy[n].abs() < 1e-12 * uscale,
                "velocity not zero at node {n}"
            );
            if mesh.is_porous_node(n) {
                assert!(
                    (sol.p[n] - want).abs() < 1e-9 * want,
                    "pressure off at node {n}: {} vs {want}",
                    sol.p[n]
                );
            }
        }
    }

    #[test]
    fn interface_blocks_are_negative_transposes_in_the_full_system() {
        let mesh = build_mesh(
            demo_geometry(),
            Divisions {
                nx: [1, 1, 1, 1, 1],
                ny: 2,
            },
        )
        .unwrap();
        let layout = flow_layout(&mesh);
        let zeros = vec![0.0; mesh.n_nodes()];
        let cf = coeffs();
        let data = FlowData {
            coeffs: &cf,
            r_specific: 287.0,
            u_in: 0.0,
            u_out: 0.0,
            rho_total: &zeros,
            theta: &zeros,
            p_prev: &zeros,
        };
        let sys = assemble_flow(&mesh, &layout, &data);
        let n = layout.n_dofs;
        let mut dense = vec![vec![0.0; n]; n];
        for &(r, c, v) in &sys.trips {
            dense[r][c] += v;
        }
        for node in 0..mesh.n_nodes() {
            let pd = layout.dof(VAR_P, node);
            if pd == NO_DOF {
                continue;
            }
            for other in 0..mesh.n_nodes() {
                for var in [VAR_UX, VAR_UY] {
                    let ud = layout.dof(var, other);
                    if ud == NO_DOF {
                        continue;
                    }
                    assert!(
                        (dense[ud][pd] + dense[pd][ud]).abs() < 1e-18,
                        "coupling not skew between dofs {ud} and {pd}"
                    );
                }
            }
        }
    }

    #[test]
    fn assembled_energy_is_nonnegative_and_positive_on_free_dofs() {
        let mesh = mesh();
        let layout = flow_layout(&mesh);
        let zeros = vec![0.0; mesh.n_nodes()];
        let cf = coeffs();
        let data = FlowData {
            coeffs: &cf,
            r_specific: 287.0,
            u_in: 0.0,
            u_out: 0.0,
            rho_total: &zeros,
            theta: &zeros,
            p_prev: &zeros,
        };
        let sys = assemble_flow(&mesh, &layout, &data);
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let bc: Vec<usize> = dirichlet_rows(&mesh, &layout).iter().map(|b| b.0).collect();
        for _ in 0..5 {
            let mut x: Vec<f64> =
                (0..layout.n_dofs).map(|_| rng.random_range(-1.0..=1.0)).collect();
            for &d in &bc {
                x[d] = 0.0;
            }
            let energy: f64 = sys.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!(energy > 0.0, "energy {energy} not positive");
        }
    }

    #[test]
    fn darcy_flux_vanishes_and_matches_the_residual_identity() {
        let mesh = mesh();
        let layout = flow_layout(&mesh);
        let rho: Vec<f64> = mesh.coords.iter().map(|c| 0.9 + 40.0 * c[0]).collect();
        let theta: Vec<f64> = mesh.coords.iter().map(|c| 350.0 + 1000.0 * c[1]).collect();
        let p_prev = vec![1.0e5; mesh.n_nodes()];
        let cf = coeffs();
        let data = FlowData {
            coeffs: &cf,
            r_specific: 287.0,
            u_in: 0.2,
            u_out: 0.3,
            rho_total: &rho,
            theta: &theta,
            p_prev: &p_prev,
        };
        let sol = solve_flow(&mesh, &layout, &data).unwrap();
        // the pressure equation enforces zero net influx
        let scale = sol
            .ux
            .iter()
            .zip(&sol.uy)
            .map(|(a, b)| a.abs().max(b.abs()))
            .fold(0.0_f64, f64::max)
            * mesh.measures().len_gamma;
        assert!(
            sol.darcy_flux.abs() <= 1e-10 * scale.max(1e-30),
            "darcy flux {} vs scale {scale}",
            sol.darcy_flux
        );
        assert!(
            (sol.darcy_flux - sol.darcy_flux_residual).abs() <= 1e-10 * scale.max(1e-30),
            "flux {} vs residual form {}",
            sol.darcy_flux,
            sol.darcy_flux_residual
        );
    }

    #[test]
    fn energy_estimate_holds_for_a_physical_run() {
        let mesh = mesh();
        let layout = flow_layout(&mesh);
        let rho = vec![0.995; mesh.n_nodes()];
        let theta = vec![357.15; mesh.n_nodes()];
        let p_prev = vec![1.0e5; mesh.n_nodes()];
        let cf = coeffs();
        let data = FlowData {
            coeffs: &cf,
            r_specific: 287.0,
            u_in: 0.2,
            u_out: 0.25,
            rho_total: &rho,
            theta: &theta,
            p_prev: &p_prev,
        };
        let sol = solve_flow(&mesh, &layout, &data).unwrap();
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
            offdiag_cap: [[1.0; 4]; 4],
        };
        let est = check_flow_estimate(&mesh, &bounds, &cf, &data, &sol);
        assert!(
            est.pass,
            "estimate violated: lhs {} rhs {}",
            est.lhs, est.rhs
        );
        assert!(est.lhs > 0.0);
    }
}
