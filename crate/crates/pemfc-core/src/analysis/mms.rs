//! Manufactured-solution convergence studies.
//!
//! Each study runs one subproblem (flow, species, heat, potential) on a
//! sequence of uniformly refined unit-square meshes with a smooth exact
//! field. Sources and boundary data are derived from the exact field so
//! the discrete solution should converge at the P1 rates: second order in
//! L2, first order in the H1 seminorm.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::femcore::assemble::{
    convection_grad_test, edge_load_scalar, edge_load_vec, edge_mass_scalar, edge_mass_tangential,
    interface_coupling, jump_mass, scalar_diffusion, vector_stress, volume_load, TriGeom,
};
use crate::femcore::layout::{DofLayout, Side, VarSpec, NO_DOF};
use crate::femcore::quadrature::{EDGE_GAUSS4, TRI_DEG5, TRI_MIDPOINT};
use crate::femcore::system::SparseSystem;
use crate::flow::{flow_layout, VAR_P, VAR_UX, VAR_UY};
use crate::mesh::{
    build_mesh, unit_square_geometry, BoundaryTag, Divisions, InterfaceTag, Mesh, Region,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsProblem {
    Flow,
    Species,
    Heat,
    Potential,
}

impl MmsProblem {
    pub fn parse(name: &str) -> Option<MmsProblem> {
        match name {
            "flow" => Some(MmsProblem::Flow),
            "species" => Some(MmsProblem::Species),
            "heat" => Some(MmsProblem::Heat),
            "potential" => Some(MmsProblem::Potential),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MmsProblem::Flow => "flow",
            MmsProblem::Species => "species",
            MmsProblem::Heat => "heat",
            MmsProblem::Potential => "potential",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MmsLevel {
    pub level: usize,
    pub h: f64,
    pub err_l2: f64,
    pub err_h1: f64,
}

#[derive(Debug, Clone)]
pub struct MmsStudy {
    pub problem: MmsProblem,
    pub levels: Vec<MmsLevel>,
}

impl MmsStudy {
    /// Observed L2 orders between consecutive levels.
    pub fn orders_l2(&self) -> Vec<f64> {
        pair_orders(self.levels.iter().map(|l| l.err_l2))
    }

    /// Observed H1-seminorm orders between consecutive levels.
    pub fn orders_h1(&self) -> Vec<f64> {
        pair_orders(self.levels.iter().map(|l| l.err_h1))
    }
}

fn pair_orders(errs: impl Iterator<Item = f64>) -> Vec<f64> {
    let e: Vec<f64> = errs.collect();
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

pub fn mms_study(problem: MmsProblem, levels: usize) -> Result<MmsStudy> {
    if levels < 3 {
        return Err(Error::Config(format!(
            "a convergence study needs at least 3 levels, got {levels}"
        )));
    }
    let mut out = Vec::with_capacity(levels);
    for level in 0..levels {
        let mesh = level_mesh(level)?;
        let (err_l2, err_h1) = match problem {
            MmsProblem::Flow => run_flow(&mesh)?,
            MmsProblem::Species => run_species(&mesh)?,
            MmsProblem::Heat => run_heat(&mesh)?,
            MmsProblem::Potential => run_potential(&mesh)?,
        };
        out.push(MmsLevel {
            level,
            h: mesh_h(&mesh),
            err_l2,
            err_h1,
        });
    }
    Ok(MmsStudy {
        problem,
        levels: out,
    })
}

/// Unit-square strips, halved mesh width per level.
fn level_mesh(level: usize) -> Result<Mesh> {
    let base = Divisions { nx: [2; 5], ny: 10 };
    build_mesh(unit_square_geometry(), base.refined(1 << level))
}

fn mesh_h(mesh: &Mesh) -> f64 {
    let mut h: f64 = 0.0;
    for t in 0..mesh.n_tris() {
        let p = mesh.tri_coords(t);
        for i in 0..3 {
            let q = p[(i + 1) % 3];
            h = h.max(((p[i][0] - q[0]).powi(2) + (p[i][1] - q[1]).powi(2)).sqrt());
        }
    }
    h
}

/// L2 and H1-seminorm errors of a nodal field against an exact one.
fn scalar_error(
    mesh: &Mesh,
    nodal: &[f64],
    in_region: impl Fn(Region) -> bool,
    exact: impl Fn([f64; 2]) -> f64,
    grad_exact: impl Fn([f64; 2]) -> [f64; 2],
) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let tri = mesh.tris[t];
        let mut gh = [0.0; 2];
        for i in 0..3 {
            gh[0] += nodal[tri[i]] * g.grad[i][0];
            gh[1] += nodal[tri[i]] * g.grad[i][1];
        }
        for (bary, w) in &TRI_DEG5 {
            let x = g.point(p, *bary);
            let vh: f64 = (0..3).map(|i| bary[i] * nodal[tri[i]]).sum();
            let ge = grad_exact(x);
            l2 += g.area * w * (vh - exact(x)).powi(2);
            h1 += g.area * w * ((gh[0] - ge[0]).powi(2) + (gh[1] - ge[1]).powi(2));
        }
    }
    (l2.sqrt(), h1.sqrt())
}

fn vector_error_l2(
    mesh: &Mesh,
    ux: &[f64],
    uy: &[f64],
    in_region: impl Fn(Region) -> bool,
    exact: impl Fn([f64; 2]) -> [f64; 2],
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let tri = mesh.tris[t];
        for (bary, w) in &TRI_DEG5 {
            let x = g.point(p, *bary);
            let e = exact(x);
            let vx = (0..3).map(|i| bary[i] * ux[tri[i]]).sum::<f64>() - e[0];
            let vy = (0..3).map(|i| bary[i] * uy[tri[i]]).sum::<f64>() - e[1];
            acc += g.area * w * (vx * vx + vy * vy);
        }
    }
    acc.sqrt()
}

// heat: diffusion everywhere, Robin exchange on the wall-like boundary

const HEAT_K: f64 = 2.0;
const HEAT_ROBIN: f64 = 5.0;

fn heat_exact(x: [f64; 2]) -> f64 {
    1.5 + (PI * x[0]).sin() * (0.8 * PI * x[1] + 0.3).cos()
}

fn heat_grad(x: [f64; 2]) -> [f64; 2] {
    let (sx, cx) = (PI * x[0]).sin_cos();
    let (sy, cy) = (0.8 * PI * x[1] + 0.3).sin_cos();
    [PI * cx * cy, -0.8 * PI * sx * sy]
}

fn heat_lap(x: [f64; 2]) -> f64 {
    -(1.0 + 0.64) * PI * PI * (PI * x[0]).sin() * (0.8 * PI * x[1] + 0.3).cos()
}

fn run_heat(mesh: &Mesh) -> Result<(f64, f64)> {
    let layout = DofLayout::build(mesh, &[VarSpec::all()]);
    let mut sys = SparseSystem::new(layout.n_dofs);
    scalar_diffusion(
        &mut sys,
        mesh,
        &layout,
        0,
        0,
        |_| true,
        |_, _| HEAT_K,
        &TRI_MIDPOINT,
    );
    let wall: Vec<[usize; 2]> = mesh
        .boundary
        .iter()
        .filter(|e| e.tag.is_wall_like())
        .map(|e| e.nodes)
        .collect();
    edge_mass_scalar(&mut sys, mesh, &layout, 0, wall.iter(), |_, _| HEAT_ROBIN);
    volume_load(
        &mut sys,
        mesh,
        &layout,
        0,
        |_| true,
        |_, x| -HEAT_K * heat_lap(x),
        &TRI_DEG5,
    );
    for e in &mesh.boundary {
        if !e.tag.is_wall_like() {
            continue;
        }
        let n = e.normal;
        edge_load_scalar(
            &mut sys,
            mesh,
            &layout,
            0,
            std::iter::once(&e.nodes),
            |_, _, x| {
                let g = heat_grad(x);
                HEAT_ROBIN * heat_exact(x) + HEAT_K * (g[0] * n[0] + g[1] * n[1])
            },
            &EDGE_GAUSS4,
        );
    }
    let bc: Vec<(usize, f64)> = mesh
        .inlet_outlet_nodes()
        .iter()
        .map(|&nd| (layout.dof(0, nd), heat_exact(mesh.coords[nd])))
        .collect();
    sys.apply_dirichlet(&bc);
    let sol = sys.solve()?;
    let (vals, _) = layout.extract(0, &sol);
    Ok(scalar_error(mesh, &vals, |_| true, heat_exact, heat_grad))
}

// species: diffusion everywhere plus channel convection tested against
// the gradient, the same shape as the production transport block

const SPEC_D: f64 = 1.3;

fn species_exact(x: [f64; 2]) -> f64 {
    0.4 + 0.25 * (PI * x[0] + 0.4).sin() * (1.3 * PI * x[1] + 0.2).sin()
}

fn species_grad(x: [f64; 2]) -> [f64; 2] {
    let (sx, cx) = (PI * x[0] + 0.4).sin_cos();
    let (sy, cy) = (1.3 * PI * x[1] + 0.2).sin_cos();
    [0.25 * PI * cx * sy, 0.25 * 1.3 * PI * sx * cy]
}

fn species_lap(x: [f64; 2]) -> f64 {
    -0.25 * (1.0 + 1.69) * PI * PI * (PI * x[0] + 0.4).sin() * (1.3 * PI * x[1] + 0.2).sin()
}

/// Vertical channel profile; no normal trace on any vertical line and
/// divergence free, so the advective term leaves no boundary part.
fn species_wy(x: [f64; 2]) -> f64 {
    0.4 + 0.3 * (PI * x[0]).sin()
}

fn run_species(mesh: &Mesh) -> Result<(f64, f64)> {
    let layout = DofLayout::build(mesh, &[VarSpec::all()]);
    let mut sys = SparseSystem::new(layout.n_dofs);
    scalar_diffusion(
        &mut sys,
        mesh,
        &layout,
        0,
        0,
        |_| true,
        |_, _| SPEC_D,
        &TRI_MIDPOINT,
    );
    convection_grad_test(
        &mut sys,
        mesh,
        &layout,
        0,
        |r| r.is_fluid(),
        |_, x| [0.0, species_wy(x)],
        &TRI_DEG5,
    );
    volume_load(
        &mut sys,
        mesh,
        &layout,
        0,
        |_| true,
        |t, x| {
            let mut f = -SPEC_D * species_lap(x);
            if mesh.tri_region[t].is_fluid() {
                f -= species_wy(x) * species_grad(x)[1];
            }
            f
        },
        &TRI_DEG5,
    );
    for e in &mesh.boundary {
        if !e.tag.is_wall_like() {
            continue;
        }
        let n = e.normal;
        edge_load_scalar(
            &mut sys,
            mesh,
            &layout,
            0,
            std::iter::once(&e.nodes),
            |_, _, x| {
                let g = species_grad(x);
                SPEC_D * (g[0] * n[0] + g[1] * n[1])
            },
            &EDGE_GAUSS4,
        );
    }
    let bc: Vec<(usize, f64)> = mesh
        .inlet_outlet_nodes()
        .iter()
        .map(|&nd| (layout.dof(0, nd), species_exact(mesh.coords[nd])))
        .collect();
    sys.apply_dirichlet(&bc);
    let sol = sys.solve()?;
    let (vals, _) = layout.extract(0, &sol);
    Ok(scalar_error(
        mesh,
        &vals,
        |_| true,
        species_exact,
        species_grad,
    ))
}

// potential: conduction on the porous sandwich, Dirichlet collectors,
// manufactured flux on the channel-facing sides and the membrane caps

const POT_SIGMA: f64 = 3.0;

fn potential_exact(x: [f64; 2]) -> f64 {
    1.7 + (PI * (x[0] - 0.2) / 0.6).sin() * (0.7 * PI * x[1] + 0.2).cos()
}

fn potential_grad(x: [f64; 2]) -> [f64; 2] {
    let (sx, cx) = (PI * (x[0] - 0.2) / 0.6).sin_cos();
    let (sy, cy) = (0.7 * PI * x[1] + 0.2).sin_cos();
    [PI / 0.6 * cx * cy, -0.7 * PI * sx * sy]
}

fn potential_lap(x: [f64; 2]) -> f64 {
    let k = (PI / 0.6) * (PI / 0.6) + 0.7 * PI * 0.7 * PI;
    -k * (PI * (x[0] - 0.2) / 0.6).sin() * (0.7 * PI * x[1] + 0.2).cos()
}

fn assemble_potential(mesh: &Mesh, layout: &DofLayout, sys: &mut SparseSystem) {
    scalar_diffusion(
        sys,
        mesh,
        layout,
        0,
        0,
        |r| r.is_porous(),
        |_, _| POT_SIGMA,
        &TRI_MIDPOINT,
    );
    volume_load(
        sys,
        mesh,
        layout,
        0,
        |r| r.is_porous(),
        |_, x| -POT_SIGMA * potential_lap(x),
        &TRI_DEG5,
    );
    for e in mesh.gamma_edges() {
        let nf = mesh.gamma_normal_from_fluid(e.tag);
        // outward from the porous sandwich
        let n = [-nf[0], -nf[1]];
        edge_load_scalar(
            sys,
            mesh,
            layout,
            0,
            std::iter::once(&e.nodes),
            |_, _, x| {
                let g = potential_grad(x);
                POT_SIGMA * (g[0] * n[0] + g[1] * n[1])
            },
            &EDGE_GAUSS4,
        );
    }
    for e in &mesh.boundary {
        // horizontal wall pieces cap the membrane strip
        if e.tag != BoundaryTag::Wall || e.normal[1] == 0.0 {
            continue;
        }
        let n = e.normal;
        edge_load_scalar(
            sys,
            mesh,
            layout,
            0,
            std::iter::once(&e.nodes),
            |_, _, x| {
                let g = potential_grad(x);
                POT_SIGMA * (g[0] * n[0] + g[1] * n[1])
            },
            &EDGE_GAUSS4,
        );
    }
}

fn potential_dirichlet(mesh: &Mesh, layout: &DofLayout) -> Vec<(usize, f64)> {
    let (anode, cathode) = mesh.collector_nodes();
    anode
        .into_iter()
        .chain(cathode)
        .map(|nd| (layout.dof(0, nd), potential_exact(mesh.coords[nd])))
        .collect()
}

fn run_potential(mesh: &Mesh) -> Result<(f64, f64)> {
    let layout = DofLayout::build(mesh, &[VarSpec::porous(false)]);
    let mut sys = SparseSystem::new(layout.n_dofs);
    assemble_potential(mesh, &layout, &mut sys);
    sys.apply_dirichlet(&potential_dirichlet(mesh, &layout));
    let sol = sys.solve()?;
    let (vals, _) = layout.extract(0, &sol);
    Ok(scalar_error(
        mesh,
        &vals,
        |r| r.is_porous(),
        potential_exact,
        potential_grad,
    ))
}

/// Gap between the continuous potential discretization and the broken one
/// with both traces identified at every interface node. The jump penalty
/// terms must cancel under the identification, so the two systems agree up
/// to solver roundoff.
pub fn potential_zero_jump_gap(level: usize) -> Result<f64> {
    let mesh = level_mesh(level)?;
    let cont = DofLayout::build(&mesh, &[VarSpec::porous(false)]);
    let mut csys = SparseSystem::new(cont.n_dofs);
    assemble_potential(&mesh, &cont, &mut csys);
    let bc = potential_dirichlet(&mesh, &cont);
    csys.apply_dirichlet(&bc);
    let xc = csys.solve()?;

    let broken = DofLayout::build(&mesh, &[VarSpec::porous(true)]);
    let mut bsys = SparseSystem::new(broken.n_dofs);
    assemble_potential(&mesh, &broken, &mut bsys);
    let a_edges: Vec<[usize; 2]> = mesh
        .interface_edges(InterfaceTag::GammaA)
        .map(|e| e.nodes)
        .collect();
    let c_edges: Vec<[usize; 2]> = mesh
        .interface_edges(InterfaceTag::GammaC)
        .map(|e| e.nodes)
        .collect();
    jump_mass(
        &mut bsys,
        &mesh,
        &broken,
        0,
        a_edges.iter().chain(c_edges.iter()),
        |_, _| 1.0e3,
    );

    let mut map = vec![NO_DOF; broken.n_dofs];
    for node in 0..mesh.n_nodes() {
        let prim = broken.dof(0, node);
        if prim == NO_DOF {
            continue;
        }
        let target = cont.dof(0, node);
        map[prim] = target;
        map[broken.dof_side(0, node, Side::Membrane)] = target;
    }
    let mut folded = SparseSystem::new(cont.n_dofs);
    for &(r, c, v) in &bsys.trips {
        folded.add(map[r], map[c], v);
    }
    for (d, &v) in bsys.rhs.iter().enumerate() {
        if v != 0.0 {
            folded.add_rhs(map[d], v);
        }
    }
    folded.apply_dirichlet(&bc);
    let xf = folded.solve()?;

    let scale = xc.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let gap = xc
        .iter()
        .zip(&xf)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(gap / scale)
}

// flow: channel stress with interface friction and pressure coupling,
// Darcy conduction on the sandwich. The manufactured velocity has no
// normal trace on the interfaces and the pressure has no normal gradient
// there, which keeps every interface load explicit and simple.

const FLOW_MU: f64 = 1.0;
const FLOW_LAMBDA: f64 = 0.5;
const FLOW_BETA: f64 = 0.7;
const FLOW_KR: f64 = 0.05;

/// Channel-local coordinate in [0, 1]; only queried on the channels.
fn chan_s(x: f64) -> f64 {
    if x <= 0.5 {
        x / 0.2
    } else {
        (x - 0.8) / 0.2
    }
}

struct FlowFields {
    ux: f64,
    uy: f64,
    ux_x: f64,
    ux_y: f64,
    uy_x: f64,
    uy_y: f64,
    ux_xx: f64,
    ux_yy: f64,
    ux_xy: f64,
    uy_xx: f64,
    uy_yy: f64,
    uy_xy: f64,
}

fn flow_u(p: [f64; 2]) -> FlowFields {
    let s = chan_s(p[0]);
    let ds = 5.0; // d(s)/dx
    let (ss, cs) = (PI * s).sin_cos();
    let (sy, cy) = (PI * p[1]).sin_cos();
    let (sy13, cy13) = (1.3 * PI * p[1]).sin_cos();
    let ax = 0.5 + 0.4 * cy;
    let ax_y = -0.4 * PI * sy;
    let ax_yy = -0.4 * PI * PI * cy;
    let by = 0.7 + 0.2 * ss;
    let by_x = 0.2 * PI * cs * ds;
    let by_xx = -0.2 * PI * PI * ss * ds * ds;
    FlowFields {
        ux: ss * ax,
        uy: 0.5 + cy13 * by,
        ux_x: PI * ds * cs * ax,
        ux_y: ss * ax_y,
        uy_x: cy13 * by_x,
        uy_y: -1.3 * PI * sy13 * by,
        ux_xx: -PI * PI * ds * ds * ss * ax,
        ux_yy: ss * ax_yy,
        ux_xy: PI * ds * cs * ax_y,
        uy_xx: cy13 * by_xx,
        uy_yy: -1.69 * PI * PI * cy13 * by,
        uy_xy: -1.3 * PI * sy13 * by_x,
    }
}

struct PressureFields {
    p: f64,
    p_x: f64,
    p_y: f64,
    lap: f64,
}

fn flow_p(pt: [f64; 2]) -> PressureFields {
    let dr = PI / 0.6;
    let (sr, cr) = (dr * (pt[0] - 0.2)).sin_cos();
    let (sy, cy) = (PI * pt[1]).sin_cos();
    let ay = 1.0 + 0.2 * sy;
    PressureFields {
        p: 0.8 + cr * ay,
        p_x: -dr * sr * ay,
        p_y: 0.2 * PI * cr * cy,
        lap: -dr * dr * cr * ay - 0.2 * PI * PI * cr * sy,
    }
}

/// Negative divergence of the manufactured stress.
fn flow_body(pt: [f64; 2]) -> [f64; 2] {
    let f = flow_u(pt);
    let div_x = f.ux_xx + f.uy_xy;
    let div_y = f.ux_xy + f.uy_yy;
    [
        -(FLOW_MU * (f.ux_xx + 0.5 * (f.ux_yy + f.uy_xy)) + FLOW_LAMBDA * div_x),
        -(FLOW_MU * (f.uy_yy + 0.5 * (f.uy_xx + f.ux_xy)) + FLOW_LAMBDA * div_y),
    ]
}

/// Velocity-row load on an interface edge: manufactured traction plus the
/// friction and pressure terms the discrete form keeps on the interface.
fn flow_gamma_load(pt: [f64; 2], nx: f64) -> [f64; 2] {
    let f = flow_u(pt);
    let pr = flow_p(pt);
    let div = f.ux_x + f.uy_y;
    let t11 = FLOW_MU * f.ux_x + FLOW_LAMBDA * div;
    let t12 = FLOW_MU * 0.5 * (f.ux_y + f.uy_x);
    [(t11 + pr.p) * nx, t12 * nx + FLOW_BETA * f.uy]
}

fn run_flow(mesh: &Mesh) -> Result<(f64, f64)> {
    let layout = flow_layout(mesh);
    let mut sys = SparseSystem::new(layout.n_dofs);
    vector_stress(
        &mut sys,
        mesh,
        &layout,
        [VAR_UX, VAR_UY],
        |r| r.is_fluid(),
        |_, _| FLOW_MU,
        |_, _| FLOW_LAMBDA,
        &TRI_MIDPOINT,
    );
    let gamma: Vec<[usize; 2]> = mesh.gamma_edges().map(|e| e.nodes).collect();
    edge_mass_tangential(
        &mut sys,
        mesh,
        &layout,
        [VAR_UX, VAR_UY],
        gamma.iter(),
        |_, _| FLOW_BETA,
    );
    scalar_diffusion(
        &mut sys,
        mesh,
        &layout,
        VAR_P,
        VAR_P,
        |r| r.is_porous(),
        |_, _| FLOW_KR,
        &TRI_MIDPOINT,
    );
    let coupled: Vec<(&[usize; 2], [f64; 2])> = mesh
        .gamma_edges()
        .map(|e| (&e.nodes, mesh.gamma_normal_from_fluid(e.tag)))
        .collect();
    interface_coupling(
        &mut sys,
        mesh,
        &layout,
        [VAR_UX, VAR_UY],
        VAR_P,
        coupled.into_iter(),
    );

    volume_load(
        &mut sys,
        mesh,
        &layout,
        VAR_P,
        |r| r.is_porous(),
        |_, x| -FLOW_KR * flow_p(x).lap,
        &TRI_DEG5,
    );
    for alpha in 0..2 {
        let var = [VAR_UX, VAR_UY][alpha];
        volume_load(
            &mut sys,
            mesh,
            &layout,
            var,
            |r| r.is_fluid(),
            |_, x| flow_body(x)[alpha],
            &TRI_DEG5,
        );
    }
    for e in mesh.gamma_edges() {
        let n = mesh.gamma_normal_from_fluid(e.tag);
        edge_load_vec(
            &mut sys,
            mesh,
            &layout,
            [VAR_UX, VAR_UY],
            std::iter::once(&e.nodes),
            |_, _, x| flow_gamma_load(x, n[0]),
            &EDGE_GAUSS4,
        );
    }
    for e in &mesh.boundary {
        // horizontal pieces of the sandwich boundary: collectors and caps
        let porous_side = matches!(
            e.tag,
            BoundaryTag::CollectorA | BoundaryTag::CollectorC | BoundaryTag::Wall
        );
        if !porous_side || e.normal[1] == 0.0 {
            continue;
        }
        let ny = e.normal[1];
        edge_load_scalar(
            &mut sys,
            mesh,
            &layout,
            VAR_P,
            std::iter::once(&e.nodes),
            |_, _, x| FLOW_KR * flow_p(x).p_y * ny,
            &EDGE_GAUSS4,
        );
    }

    let mut bc = Vec::new();
    for nd in mesh
        .inlet_outlet_nodes()
        .into_iter()
        .chain(mesh.side_wall_nodes())
    {
        let f = flow_u(mesh.coords[nd]);
        bc.push((layout.dof(VAR_UX, nd), f.ux));
        bc.push((layout.dof(VAR_UY, nd), f.uy));
    }
    bc.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    bc.dedup_by_key(|e| e.0);
    sys.apply_dirichlet(&bc);

    let sol = sys.solve()?;
    let (ux, _) = layout.extract(VAR_UX, &sol);
    let (uy, _) = layout.extract(VAR_UY, &sol);
    let (p, _) = layout.extract(VAR_P, &sol);
    let err_u = vector_error_l2(mesh, &ux, &uy, |r| r.is_fluid(), |x| {
        let f = flow_u(x);
        [f.ux, f.uy]
    });
    let (_, err_p) = scalar_error(
        mesh,
        &p,
        |r| r.is_porous(),
        |x| flow_p(x).p,
        |x| {
            let q = flow_p(x);
            [q.p_x, q.p_y]
        },
    );
    Ok((err_u, err_p))
}
