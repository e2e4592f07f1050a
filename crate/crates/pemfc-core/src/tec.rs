//! Thermo-electrochemical transport: two partial densities, temperature and
//! electric potential, coupled through cross-diffusion at frozen outer
//! iterates. The anode electrode law is implicit and handled by a damped
//! Newton iteration with its analytic Jacobian; the cathode electrode law is
//! an explicit load at the previous potential iterate.

use crate::error::{Error, Result};
use crate::femcore::assemble::{
    convection_grad_test, coupled_diffusion, edge_load_scalar, edge_mass_scalar, jump_load,
    jump_mass, p1_sampler, volume_load, EdgeGeom, TriGeom,
};
use crate::femcore::layout::{DofLayout, Side, VarSpec};
use crate::femcore::norms::{piecewise_lt, scalar_edge_l2_sq, scalar_h1_sq, vec_lq, Field};
use crate::femcore::quadrature::{EDGE_GAUSS2, TRI_DEG4};
use crate::femcore::system::SparseSystem;
use crate::materials::{BvPair, Coefficients, N_VARS, VAR_PHI, VAR_THETA};
use crate::mesh::{InterfaceTag, Mesh};

pub const VAR_RHO: [usize; 2] = [0, 1];

/// Frozen fields from the outer fixed point that the transport problem needs.
pub struct TecData<'a> {
    pub coeffs: &'a Coefficients,
    pub bv: &'a BvPair,
    /// ambient temperature entering the cooling law, relative scale
    pub theta_e: f64,
    /// velocity iterate (full channel velocity), nodal, zero off the channels
    pub wx: &'a [f64],
    pub wy: &'a [f64],
    /// temperature iterate, nodal
    pub theta_prev: &'a [f64],
    /// potential iterate, nodal main (GDL) and membrane traces
    pub phi_prev_main: &'a [f64],
    pub phi_prev_mem: &'a [f64],
    /// dissipation density per triangle, zero off the diffusion layers
    pub joule: &'a [f64],
    /// signed faradaic mass-flux coefficients sM/(nF) per electrode row
    /// (anode, cathode) and species column; negative consumes the species,
    /// all zero leaves the species equations without electrode sources
    pub species_flux: [[f64; 2]; 2],
}

pub struct TecSolution {
    pub rho: [Vec<f64>; 2],
    pub theta: Vec<f64>,
    pub phi_main: Vec<f64>,
    pub phi_mem: Vec<f64>,
    /// accepted-step residual norms, one entry per Newton iteration
    pub newton_residuals: Vec<f64>,
    pub newton_steps: usize,
    /// electrode currents at the solution and the frozen cathode load
    pub anode_current: f64,
    pub cathode_current: f64,
}

pub fn tec_layout(mesh: &Mesh) -> DofLayout {
    DofLayout::build(
        mesh,
        &[
            VarSpec::all(),
            VarSpec::all(),
            VarSpec::all(),
            VarSpec::porous(true),
        ],
    )
}

/// Homogeneous Dirichlet rows: densities and temperature at channel ends,
/// potential at the current collectors (the outer GDL edges).
pub fn tec_dirichlet(mesh: &Mesh, layout: &DofLayout) -> Vec<(usize, f64)> {
    let mut bc = Vec::new();
    for n in mesh.inlet_outlet_nodes() {
        for var in [VAR_RHO[0], VAR_RHO[1], VAR_THETA] {
            bc.push((layout.dof(var, n), 0.0));
        }
    }
    let (col_a, col_c) = mesh.collector_nodes();
    for n in col_a.into_iter().chain(col_c) {
        // the collector sits on the GDL, so the primary (GDL-side) dof is
        // pinned; a membrane duplicate at the strip corner stays free
        bc.push((layout.dof(VAR_PHI, n), 0.0));
    }
    bc.sort_unstable_by_key(|&(d, _)| d);
    bc.dedup_by_key(|&mut (d, _)| d);
    bc
}

/// Linear part of the operator and all loads that do not involve the
/// implicit anode electrode law.
pub fn assemble_tec_linear(mesh: &Mesh, layout: &DofLayout, data: &TecData) -> SparseSystem {
    let mut sys = SparseSystem::new(layout.n_dofs);
    let cf = data.coeffs;
    let xi = p1_sampler(mesh, data.theta_prev);

    coupled_diffusion::<N_VARS>(
        &mut sys,
        mesh,
        layout,
        [VAR_RHO[0], VAR_RHO[1], VAR_THETA, VAR_PHI],
        |t, x| cf.eval_matrix(xi(t, x), mesh.tri_region[t]),
        &TRI_DEG4,
    );

    let wx = p1_sampler(mesh, data.wx);
    let wy = p1_sampler(mesh, data.wy);
    for var in VAR_RHO {
        convection_grad_test(
            &mut sys,
            mesh,
            layout,
            var,
            |r| r.is_fluid(),
            |t, x| [wx(t, x), wy(t, x)],
            &TRI_DEG4,
        );
    }

    // cooling law on the outer walls: mass on the left, data on the right
    let wall_edges: Vec<[usize; 2]> = mesh
        .boundary
        .iter()
        .filter(|e| e.tag.is_wall_like())
        .map(|e| e.nodes)
        .collect();
    let h_at = |e: [usize; 2], t: f64| {
        cf.h_c
            .eval(data.theta_prev[e[0]] * (1.0 - t) + data.theta_prev[e[1]] * t)
    };
    edge_mass_scalar(&mut sys, mesh, layout, VAR_THETA, wall_edges.iter(), h_at);
    edge_load_scalar(
        &mut sys,
        mesh,
        layout,
        VAR_THETA,
        wall_edges.iter(),
        |e, t, _| h_at(e, t) * data.theta_e,
        &EDGE_GAUSS2,
    );

    // dissipation source on the diffusion layers
    volume_load(
        &mut sys,
        mesh,
        layout,
        VAR_THETA,
        |r| r.is_gdl(),
        |t, x| cf.sigma(mesh.tri_region[t], xi(t, x)) * data.joule[t],
        &TRI_DEG4,
    );

    // explicit cathode electrode load at the frozen potential jump
    let gamma_c: Vec<[usize; 2]> = mesh
        .interface_edges(InterfaceTag::GammaC)
        .map(|e| e.nodes)
        .collect();
    jump_load(&mut sys, mesh, layout, VAR_PHI, gamma_c.iter(), |e, t| {
        let jump = |n: usize| data.phi_prev_main[n] - data.phi_prev_mem[n];
        data.bv
            .cathode
            .current(jump(e[0]) * (1.0 - t) + jump(e[1]) * t)
    });

    // optional faradaic mass sources on the catalyst interfaces, frozen at
    // the previous potential jump like the cathode load
    if data.species_flux.iter().flatten().any(|c| *c != 0.0) {
        let jump = |n: usize| data.phi_prev_main[n] - data.phi_prev_mem[n];
        for (k, tag) in [InterfaceTag::GammaA, InterfaceTag::GammaC]
            .into_iter()
            .enumerate()
        {
            let electrode = match tag {
                InterfaceTag::GammaA => &data.bv.anode,
                _ => &data.bv.cathode,
            };
            let edges: Vec<[usize; 2]> = mesh.interface_edges(tag).map(|e| e.nodes).collect();
            for (i, var) in VAR_RHO.into_iter().enumerate() {
                let c = data.species_flux[k][i];
                if c == 0.0 {
                    continue;
                }
                edge_load_scalar(
                    &mut sys,
                    mesh,
                    layout,
                    var,
                    edges.iter(),
                    |e, t, _| c * electrode.current(jump(e[0]) * (1.0 - t) + jump(e[1]) * t),
                    &EDGE_GAUSS2,
                );
            }
        }
    }

    sys
}

fn jump_at(layout: &DofLayout, x: &[f64], node: usize) -> f64 {
    x[layout.dof_side(VAR_PHI, node, Side::Gdl)] - x[layout.dof_side(VAR_PHI, node, Side::Membrane)]
}

/// Anode electrode contribution to the residual: out += int j_a([phi]) [w].
fn add_anode_residual(mesh: &Mesh, layout: &DofLayout, data: &TecData, x: &[f64], out: &mut [f64]) {
    for e in mesh.interface_edges(InterfaceTag::GammaA) {
        let eg = EdgeGeom::new(mesh.coords[e.nodes[0]], mesh.coords[e.nodes[1]]);
        let j = [
            jump_at(layout, x, e.nodes[0]),
            jump_at(layout, x, e.nodes[1]),
        ];
        for (tq, wq) in &EDGE_GAUSS2 {
            let cur = data.bv.anode.current(j[0] * (1.0 - tq) + j[1] * tq);
            let lam = [1.0 - tq, *tq];
            for i in 0..2 {
                let c = eg.len * wq * cur * lam[i];
                out[layout.dof_side(VAR_PHI, e.nodes[i], Side::Gdl)] += c;
                out[layout.dof_side(VAR_PHI, e.nodes[i], Side::Membrane)] -= c;
            }
        }
    }
}

/// Full nonlinear residual A x - b + N_a(x) at a packed vector, no rows
/// blanked. Conservation diagnostics test this against admissible functions.
pub fn tec_residual(mesh: &Mesh, layout: &DofLayout, data: &TecData, x: &[f64]) -> Vec<f64> {
    let base = assemble_tec_linear(mesh, layout, data);
    let mut f = base.residual(x);
    add_anode_residual(mesh, layout, data, x, &mut f);
    f
}

/// Residual F(x) = A x - b + N_a(x) with Dirichlet rows blanked (iterates
/// stay admissible, so those rows are identically zero).
fn residual(
    base: &SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    data: &TecData,
    bc: &[(usize, f64)],
    x: &[f64],
) -> Vec<f64> {
    let mut f = base.residual(x);
    add_anode_residual(mesh, layout, data, x, &mut f);
    for &(d, _) in bc {
        f[d] = 0.0;
    }
    f
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn newton_solve_tec(
    mesh: &Mesh,
    layout: &DofLayout,
    data: &TecData,
    warm_start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(TecSolution, Vec<f64>)> {
    let base = assemble_tec_linear(mesh, layout, data);
    let bc = tec_dirichlet(mesh, layout);

    let mut x = match warm_start {
        Some(x0) => {
            assert_eq!(x0.len(), layout.n_dofs);
            let mut x = x0.to_vec();
            for &(d, v) in &bc {
                x[d] = v;
            }
            x
        }
        None => vec![0.0; layout.n_dofs],
    };

    let mut bnorm = {
        let mut b = base.rhs.clone();
        for &(d, _) in &bc {
            b[d] = 0.0;
        }
        norm2(&b)
    };
    if bnorm == 0.0 {
        bnorm = f64::MIN_POSITIVE; // zero data must solve to exactly zero
    }

    let mut history = Vec::new();
    let mut f = residual(&base, mesh, layout, data, &bc, &x);
    let mut fnorm = norm2(&f);
    let mut steps = 0;
    while fnorm > tol * bnorm {
        if steps >= max_iter {
            return Err(Error::NonConvergence(format!(
                "electrode iteration stalled at residual {fnorm:.3e} after {steps} steps \
                 (history: {history:?})"
            )));
        }
        // Jacobian = linear operator + electrode slope on the jump dofs
        let mut jac = SparseSystem::new(layout.n_dofs);
        jac.trips.extend_from_slice(&base.trips);
        let gamma_a: Vec<[usize; 2]> = mesh
            .interface_edges(InterfaceTag::GammaA)
            .map(|e| e.nodes)
            .collect();
        jump_mass(&mut jac, mesh, layout, VAR_PHI, gamma_a.iter(), |e, t| {
            data.bv
                .anode
                .current_deriv(jump_at(layout, &x, e[0]) * (1.0 - t) + jump_at(layout, &x, e[1]) * t)
        });
        for i in 0..layout.n_dofs {
            jac.rhs[i] = -f[i];
        }
        jac.apply_dirichlet(&bc);
        let delta = jac.solve()?;

        // damped update: halve until the residual stops growing
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..=10 {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + s * d).collect();
            let ft = residual(&base, mesh, layout, data, &bc, &trial);
            let fn2 = norm2(&ft);
            if fn2 <= fnorm || s <= 1.0 / 1024.0 {
                accepted = Some((trial, ft, fn2));
                break;
            }
            s *= 0.5;
        }
        let (xn, ft, fn2) = accepted.expect("damping loop always yields a candidate");
        x = xn;
        f = ft;
        fnorm = fn2;
        steps += 1;
        history.push(fnorm);
    }

    let (r1, _) = layout.extract(VAR_RHO[0], &x);
    let (r2, _) = layout.extract(VAR_RHO[1], &x);
    let (th, _) = layout.extract(VAR_THETA, &x);
    let (phi_main, phi_mem) = layout.extract(VAR_PHI, &x);
    let anode_current = electrode_current(mesh, data, InterfaceTag::GammaA, |n| {
        jump_at(layout, &x, n)
    });
    let cathode_current = electrode_current(mesh, data, InterfaceTag::GammaC, |n| {
        data.phi_prev_main[n] - data.phi_prev_mem[n]
    });
    Ok((
        TecSolution {
            rho: [r1, r2],
            theta: th,
            phi_main,
            phi_mem,
            newton_residuals: history,
            newton_steps: steps,
            anode_current,
            cathode_current,
        },
        x,
    ))
}

/// int over the interface of the electrode current at the given jump trace,
/// with the same 2-point rule the assembly uses.
pub fn electrode_current(
    mesh: &Mesh,
    data: &TecData,
    tag: InterfaceTag,
    jump: impl Fn(usize) -> f64,
) -> f64 {
    let electrode = match tag {
        InterfaceTag::GammaA => &data.bv.anode,
        InterfaceTag::GammaC => &data.bv.cathode,
        _ => unreachable!("electrode interfaces are the catalyst layers"),
    };
    let mut acc = 0.0;
    for e in mesh.interface_edges(tag) {
        let eg = EdgeGeom::new(mesh.coords[e.nodes[0]], mesh.coords[e.nodes[1]]);
        let j = [jump(e.nodes[0]), jump(e.nodes[1])];
        for (tq, wq) in &EDGE_GAUSS2 {
            acc += eg.len * wq * electrode.current(j[0] * (1.0 - tq) + j[1] * tq);
        }
    }
    acc
}

/// Dissipation density |grad phi|^2 per triangle on the diffusion layers
/// (the cell-voltage shift is constant there and drops out of the gradient).
pub fn compute_joule(mesh: &Mesh, phi_main: &[f64], phi_mem: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_tris()];
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !region.is_gdl() {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        let tri = mesh.tris[t];
        let f = Field::TwoSided {
            main: phi_main,
            mem: phi_mem,
        };
        let mut grad = [0.0; 2];
        for i in 0..3 {
            let v = f.at(tri[i], region);
            grad[0] += v * g.grad[i][0];
            grad[1] += v * g.grad[i][1];
        }
        out[t] = grad[0] * grad[0] + grad[1] * grad[1];
    }
    out
}

pub struct TecEstimate {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// min over species of the convection-reduced margin
    pub margin_after_convection: f64,
}

/// A priori energy bound for the transport solution: the weighted gradient
/// energies must stay below the data budget. `margins` are the ellipticity
/// margins (species 1, species 2, heat, potential); `s_star` the embedding
/// constant; `q_exponent` the velocity norm exponent; `t_exponent` the
/// dissipation norm exponent.
#[allow(clippy::too_many_arguments)]
pub fn check_tec_estimate(
    mesh: &Mesh,
    coeffs: &Coefficients,
    bounds: &crate::materials::BoundTable,
    data: &TecData,
    sol: &TecSolution,
    margins: [f64; 4],
    s_star: f64,
    q_exponent: f64,
    t_exponent: f64,
) -> Result<TecEstimate> {
    let w_q = vec_lq(mesh, data.wx, data.wy, q_exponent, |r| r.is_fluid());
    let drift = s_star * w_q;
    let min_species_margin = margins[0].min(margins[1]);
    if drift >= min_species_margin {
        return Err(Error::OutOfRegime(format!(
            "velocity drift {drift:.3e} reaches the species ellipticity margin \
             {min_species_margin:.3e}; the transport bound does not apply"
        )));
    }

    let mut lhs = 0.0;
    for i in 0..2 {
        let f = Field::Nodal(&sol.rho[i]);
        lhs += (margins[i] - drift) * scalar_h1_sq(mesh, &f, |r| r.is_fluid());
        lhs += margins[i] * scalar_h1_sq(mesh, &f, |r| r.is_porous());
    }
    let phi_field = Field::TwoSided {
        main: &sol.phi_main,
        mem: &sol.phi_mem,
    };
    lhs += margins[3] * scalar_h1_sq(mesh, &phi_field, |r| r.is_porous());
    lhs += margins[2] * scalar_h1_sq(mesh, &Field::Nodal(&sol.theta), |_| true);
    let wall_edges: Vec<[usize; 2]> = mesh
        .boundary
        .iter()
        .filter(|e| e.tag.is_wall_like())
        .map(|e| e.nodes)
        .collect();
    lhs += bounds.h_floor * scalar_edge_l2_sq(mesh, &sol.theta, wall_edges.iter());

    let phi_t = piecewise_lt(mesh, data.joule, t_exponent, |r| r.is_gdl());
    let j_l = data.bv.j_lim_max();
    let sigma_floor = bounds.sigma_gdl_floor.min(bounds.sigma_mem_floor / 2.0);
    let theta_e_wall_sq = {
        let m = mesh.measures();
        data.theta_e * data.theta_e * m.len_gamma_w()
    };
    let rhs = (s_star * bounds.sigma_cap).powi(2) / bounds.k_heat_floor * phi_t * phi_t
        + j_l * j_l / sigma_floor
        + bounds.h_cap * theta_e_wall_sq;

    let _ = coeffs;
    Ok(TecEstimate {
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-8),
        margin_after_convection: min_species_margin - drift,
    })
}
