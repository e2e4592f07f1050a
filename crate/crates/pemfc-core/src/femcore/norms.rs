//! Norms and functionals of P1 fields over mesh subsets.
//!
//! Fields are either plainly nodal or two-sided (separate traces on the
//! porous strips when the variable is broken at the catalyst interfaces).

use super::assemble::{EdgeGeom, TriGeom};
use super::quadrature::{EDGE_GAUSS2, TRI_DEG4, TRI_DEG5};
use crate::mesh::{Mesh, Region};

/// Nodal values of a scalar field, resolved per region for broken fields.
pub enum Field<'a> {
    Nodal(&'a [f64]),
    /// main: values used on GDL strips (and anywhere else), mem: values on
    /// the membrane strip. Both are indexed by node id.
    TwoSided { main: &'a [f64], mem: &'a [f64] },
}

impl Field<'_> {
    pub fn at(&self, node: usize, region: Region) -> f64 {
        match self {
            Field::Nodal(v) => v[node],
            Field::TwoSided { main, mem } => {
                if region == Region::Membrane {
                    mem[node]
                } else {
                    main[node]
                }
            }
        }
    }
}

fn tri_values(mesh: &Mesh, t: usize, f: &Field) -> [f64; 3] {
    let tri = mesh.tris[t];
    let region = mesh.tri_region[t];
    [
        f.at(tri[0], region),
        f.at(tri[1], region),
        f.at(tri[2], region),
    ]
}

/// L2 norm squared of a scalar field over selected regions.
pub fn scalar_l2_sq(mesh: &Mesh, f: &Field, in_region: impl Fn(Region) -> bool) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        let v = tri_values(mesh, t, f);
        for (bary, w) in &TRI_DEG4 {
            let val = v[0] * bary[0] + v[1] * bary[1] + v[2] * bary[2];
            acc += g.area * w * val * val;
        }
    }
    acc
}

/// H1 seminorm squared (gradient L2) of a scalar field over selected regions.
pub fn scalar_h1_sq(mesh: &Mesh, f: &Field, in_region: impl Fn(Region) -> bool) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        let v = tri_values(mesh, t, f);
        let gx = v[0] * g.grad[0][0] + v[1] * g.grad[1][0] + v[2] * g.grad[2][0];
        let gy = v[0] * g.grad[0][1] + v[1] * g.grad[1][1] + v[2] * g.grad[2][1];
        acc += g.area * (gx * gx + gy * gy);
    }
    acc
}

/// L4 norm (not raised to any power) of a scalar field over selected regions.
pub fn scalar_l4(mesh: &Mesh, f: &Field, in_region: impl Fn(Region) -> bool) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        let v = tri_values(mesh, t, f);
        for (bary, w) in &TRI_DEG5 {
            let val = v[0] * bary[0] + v[1] * bary[1] + v[2] * bary[2];
            acc += g.area * w * val.powi(4);
        }
    }
    acc.powf(0.25)
}

/// L2 norm squared of a scalar field along a set of edges.
pub fn scalar_edge_l2_sq<'a>(
    mesh: &Mesh,
    values: &[f64],
    edges: impl Iterator<Item = &'a [usize; 2]>,
) -> f64 {
    let mut acc = 0.0;
    for e in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        let (va, vb) = (values[e[0]], values[e[1]]);
        for (tq, wq) in &EDGE_GAUSS2 {
            let val = va * (1.0 - tq) + vb * tq;
            acc += eg.len * wq * val * val;
        }
    }
    acc
}

/// L2 norm squared of a vector field over selected regions.
pub fn vec_l2_sq(
    mesh: &Mesh,
    ux: &[f64],
    uy: &[f64],
    in_region: impl Fn(Region) -> bool,
) -> f64 {
    scalar_l2_sq(mesh, &Field::Nodal(ux), &in_region)
        + scalar_l2_sq(mesh, &Field::Nodal(uy), &in_region)
}

/// Squared L2 norm of the symmetric gradient of a vector field.
pub fn vec_dsym_sq(
    mesh: &Mesh,
    ux: &[f64],
    uy: &[f64],
    in_region: impl Fn(Region) -> bool,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        let tri = mesh.tris[t];
        let mut grad = [[0.0; 2]; 2];
        for i in 0..3 {
            grad[0][0] += ux[tri[i]] * g.grad[i][0];
            grad[0][1] += ux[tri[i]] * g.grad[i][1];
            grad[1][0] += uy[tri[i]] * g.grad[i][0];
            grad[1][1] += uy[tri[i]] * g.grad[i][1];
        }
        let d01 = 0.5 * (grad[0][1] + grad[1][0]);
        acc += g.area
            * (grad[0][0] * grad[0][0] + grad[1][1] * grad[1][1] + 2.0 * d01 * d01);
    }
    acc
}

/// Squared L2 norm of the divergence of a vector field.
pub fn vec_div_sq(
    mesh: &Mesh,
    ux: &[f64],
    uy: &[f64],
    in_region: impl Fn(Region) -> bool,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        let tri = mesh.tris[t];
        let mut div = 0.0;
        for i in 0..3 {
            div += ux[tri[i]] * g.grad[i][0] + uy[tri[i]] * g.grad[i][1];
        }
        acc += g.area * div * div;
    }
    acc
}

/// L4 norm of |u| for a vector field over selected regions.
pub fn vec_l4(
    mesh: &Mesh,
    ux: &[f64],
    uy: &[f64],
    in_region: impl Fn(Region) -> bool,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        let tri = mesh.tris[t];
        for (bary, w) in &TRI_DEG5 {
            let vx = ux[tri[0]] * bary[0] + ux[tri[1]] * bary[1] + ux[tri[2]] * bary[2];
            let vy = uy[tri[0]] * bary[0] + uy[tri[1]] * bary[1] + uy[tri[2]] * bary[2];
            acc += g.area * w * (vx * vx + vy * vy).powi(2);
        }
    }
    acc.powf(0.25)
}

/// Lq norm of |u| over selected regions (quadrature degree 5, adequate for
/// the moderate exponents used by the fixed-point monitor).
pub fn vec_lq(
    mesh: &Mesh,
    ux: &[f64],
    uy: &[f64],
    q: f64,
    in_region: impl Fn(Region) -> bool,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        let tri = mesh.tris[t];
        for (bary, w) in &TRI_DEG5 {
            let vx = ux[tri[0]] * bary[0] + ux[tri[1]] * bary[1] + ux[tri[2]] * bary[2];
            let vy = uy[tri[0]] * bary[0] + uy[tri[1]] * bary[1] + uy[tri[2]] * bary[2];
            acc += g.area * w * (vx * vx + vy * vy).sqrt().powf(q);
        }
    }
    acc.powf(1.0 / q)
}

/// Squared L2 norm of the tangential component of a vector field on edges.
pub fn vec_tangential_edge_l2_sq<'a>(
    mesh: &Mesh,
    ux: &[f64],
    uy: &[f64],
    edges: impl Iterator<Item = &'a [usize; 2]>,
) -> f64 {
    let mut acc = 0.0;
    for e in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        let ta = [
            ux[e[0]] * eg.tangent[0] + uy[e[0]] * eg.tangent[1],
            ux[e[1]] * eg.tangent[0] + uy[e[1]] * eg.tangent[1],
        ];
        for (tq, wq) in &EDGE_GAUSS2 {
            let val = ta[0] * (1.0 - tq) + ta[1] * tq;
            acc += eg.len * wq * val * val;
        }
    }
    acc
}

/// Squared L2 norm of the full vector trace on edges.
pub fn vec_edge_l2_sq<'a>(
    mesh: &Mesh,
    ux: &[f64],
    uy: &[f64],
    edges: impl Iterator<Item = ([usize; 2], ())> + Clone,
) -> f64 {
    let mut acc = 0.0;
    for (e, _) in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        for (tq, wq) in &EDGE_GAUSS2 {
            let vx = ux[e[0]] * (1.0 - tq) + ux[e[1]] * tq;
            let vy = uy[e[0]] * (1.0 - tq) + uy[e[1]] * tq;
            acc += eg.len * wq * (vx * vx + vy * vy);
        }
    }
    acc
}

/// L^t norm (t = 1.5 by the fixed-point monitor) of a piecewise-constant
/// cell field over selected regions.
pub fn piecewise_lt(
    mesh: &Mesh,
    cell_values: &[f64],
    t_exp: f64,
    in_region: impl Fn(Region) -> bool,
) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        if !in_region(mesh.tri_region[t]) {
            continue;
        }
        let g = TriGeom::new(mesh.tri_coords(t));
        acc += g.area * cell_values[t].abs().powf(t_exp);
    }
    acc.powf(1.0 / t_exp)
}
