//! Element and edge assembly kernels for P1 fields.
//!
//! Coefficients are passed as samplers `(tri, xy) -> value` so callers can
//! plug nodal iterates, analytic closures or constants without the kernels
//! caring. All kernels accumulate into a [`SparseSystem`] in element order.

use super::layout::{DofLayout, Side, NO_DOF};
use super::quadrature::{EdgePoint, TriPoint, EDGE_GAUSS2};
use super::system::SparseSystem;
use crate::mesh::{Mesh, Region};

/// Area and constant basis gradients of a triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriGeom {
    pub area: f64,
    pub grad: [[f64; 2]; 3],
}

impl TriGeom {
    pub fn new(p: [[f64; 2]; 3]) -> TriGeom {
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let area = 0.5 * det;
        let g = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        TriGeom {
            area,
            grad: [g(p[1], p[2]), g(p[2], p[0]), g(p[0], p[1])],
        }
    }

    pub fn point(&self, p: [[f64; 2]; 3], bary: [f64; 3]) -> [f64; 2] {
        [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ]
    }
}

/// Length, unit tangent and midpoint parameterization of an edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeGeom {
    pub len: f64,
    pub tangent: [f64; 2],
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl EdgeGeom {
    pub fn new(a: [f64; 2], b: [f64; 2]) -> EdgeGeom {
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
        EdgeGeom {
            len,
            tangent: [d[0] / len, d[1] / len],
            a,
            b,
        }
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        [
            self.a[0] + t * (self.b[0] - self.a[0]),
            self.a[1] + t * (self.b[1] - self.a[1]),
        ]
    }
}

/// Pointwise evaluator for a nodal P1 field: value at any point of a given
/// triangle, exact for the linear interpolant.
pub fn p1_sampler<'a>(
    mesh: &'a Mesh,
    values: &'a [f64],
) -> impl Fn(usize, [f64; 2]) -> f64 + 'a {
    move |t, x| {
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let tri = mesh.tris[t];
        let mut grad = [0.0; 2];
        for i in 0..3 {
            grad[0] += values[tri[i]] * g.grad[i][0];
            grad[1] += values[tri[i]] * g.grad[i][1];
        }
        values[tri[0]] + grad[0] * (x[0] - p[0][0]) + grad[1] * (x[1] - p[0][1])
    }
}

/// div(c grad) stiffness between two scalar variables over selected regions.
pub fn scalar_diffusion(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_row: usize,
    var_col: usize,
    in_region: impl Fn(Region) -> bool,
    coeff: impl Fn(usize, [f64; 2]) -> f64,
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !in_region(region) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let mut cint = 0.0;
        for (bary, w) in rule {
            cint += w * coeff(t, g.point(p, *bary));
        }
        cint *= g.area;
        if cint == 0.0 {
            continue;
        }
        let tri = mesh.tris[t];
        for i in 0..3 {
            let r = layout.dof_in(var_row, tri[i], region);
            debug_assert_ne!(r, NO_DOF);
            for j in 0..3 {
                let c = layout.dof_in(var_col, tri[j], region);
                let gij = g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1];
                sys.add(r, c, cint * gij);
            }
        }
    }
}

/// Mass term between two scalar variables over selected regions.
pub fn scalar_mass(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_row: usize,
    var_col: usize,
    in_region: impl Fn(Region) -> bool,
    coeff: impl Fn(usize, [f64; 2]) -> f64,
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !in_region(region) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let tri = mesh.tris[t];
        for (bary, w) in rule {
            let c = g.area * w * coeff(t, g.point(p, *bary));
            for i in 0..3 {
                let r = layout.dof_in(var_row, tri[i], region);
                for j in 0..3 {
                    let cdof = layout.dof_in(var_col, tri[j], region);
                    sys.add(r, cdof, c * bary[i] * bary[j]);
                }
            }
        }
    }
}

/// Convective term with the gradient on the test function:
/// entry(i, j) = int phi_j (w . grad phi_i).
pub fn convection_grad_test(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var: usize,
    in_region: impl Fn(Region) -> bool,
    w: impl Fn(usize, [f64; 2]) -> [f64; 2],
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !in_region(region) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let tri = mesh.tris[t];
        for (bary, wq) in rule {
            let wv = w(t, g.point(p, *bary));
            for i in 0..3 {
                let r = layout.dof_in(var, tri[i], region);
                let wg = wv[0] * g.grad[i][0] + wv[1] * g.grad[i][1];
                for j in 0..3 {
                    let c = layout.dof_in(var, tri[j], region);
                    sys.add(r, c, g.area * wq * bary[j] * wg);
                }
            }
        }
    }
}

/// Coupled multi-variable diffusion: for each element, assembles
/// coeff[r][c] * grad(var_c) . grad(var_r) for every variable pair.
/// Zero coefficients (masked-out couplings) are skipped.
pub fn coupled_diffusion<const NV: usize>(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    vars: [usize; NV],
    coeff: impl Fn(usize, [f64; 2]) -> [[f64; NV]; NV],
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let mut cint = [[0.0; NV]; NV];
        for (bary, w) in rule {
            let a = coeff(t, g.point(p, *bary));
            for r in 0..NV {
                for c in 0..NV {
                    cint[r][c] += w * a[r][c];
                }
            }
        }
        let tri = mesh.tris[t];
        for vr in 0..NV {
            for vc in 0..NV {
                let cf = cint[vr][vc] * g.area;
                if cf == 0.0 {
                    continue;
                }
                for i in 0..3 {
                    let r = layout.dof_in(vars[vr], tri[i], region);
                    debug_assert_ne!(r, NO_DOF, "coupling touches a variable outside its support");
                    for j in 0..3 {
                        let c = layout.dof_in(vars[vc], tri[j], region);
                        let gij = g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1];
                        sys.add(r, c, cf * gij);
                    }
                }
            }
        }
    }
}

/// Symmetric-gradient viscous block plus dilatational term:
/// int mu D(u):D(v) + lambda (div u)(div v) over fluid elements.
pub fn vector_stress(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_u: [usize; 2],
    in_region: impl Fn(Region) -> bool,
    mu: impl Fn(usize, [f64; 2]) -> f64,
    lambda: impl Fn(usize, [f64; 2]) -> f64,
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !in_region(region) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let (mut mu_int, mut la_int) = (0.0, 0.0);
        for (bary, w) in rule {
            let x = g.point(p, *bary);
            mu_int += w * mu(t, x);
            la_int += w * lambda(t, x);
        }
        mu_int *= g.area;
        la_int *= g.area;
        let tri = mesh.tris[t];
        for i in 0..3 {
            for alpha in 0..2 {
                let r = layout.dof_in(var_u[alpha], tri[i], region);
                for j in 0..3 {
                    for beta in 0..2 {
                        let c = layout.dof_in(var_u[beta], tri[j], region);
                        let gij = g.grad[i][0] * g.grad[j][0] + g.grad[i][1] * g.grad[j][1];
                        let dsym = 0.5
                            * (if alpha == beta { gij } else { 0.0 }
                                + g.grad[i][beta] * g.grad[j][alpha]);
                        let dv = g.grad[i][alpha] * g.grad[j][beta];
                        sys.add(r, c, mu_int * dsym + la_int * dv);
                    }
                }
            }
        }
    }
}

/// Scalar mass term on a set of edges (Robin-type boundary terms).
/// The coefficient sees the edge nodes and the parameter along the edge so
/// nodal iterates can be interpolated exactly.
pub fn edge_mass_scalar<'a>(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var: usize,
    edges: impl Iterator<Item = &'a [usize; 2]>,
    coeff: impl Fn([usize; 2], f64) -> f64,
) {
    for e in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        let d = [layout.dof(var, e[0]), layout.dof(var, e[1])];
        for (tq, wq) in &EDGE_GAUSS2 {
            let c = eg.len * wq * coeff(*e, *tq);
            let lam = [1.0 - tq, *tq];
            for i in 0..2 {
                for j in 0..2 {
                    sys.add(d[i], d[j], c * lam[i] * lam[j]);
                }
            }
        }
    }
}

/// Tangential friction block on a set of edges:
/// int beta (u . t)(v . t) with t the unit tangent.
pub fn edge_mass_tangential<'a>(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_u: [usize; 2],
    edges: impl Iterator<Item = &'a [usize; 2]>,
    coeff: impl Fn([usize; 2], f64) -> f64,
) {
    for e in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        let t = eg.tangent;
        for (tq, wq) in &EDGE_GAUSS2 {
            let c = eg.len * wq * coeff(*e, *tq);
            let lam = [1.0 - tq, *tq];
            for i in 0..2 {
                for alpha in 0..2 {
                    let r = layout.dof(var_u[alpha], e[i]);
                    for j in 0..2 {
                        for beta in 0..2 {
                            let cdof = layout.dof(var_u[beta], e[j]);
                            sys.add(r, cdof, c * lam[i] * lam[j] * t[alpha] * t[beta]);
                        }
                    }
                }
            }
        }
    }
}

/// Skew coupling at the fluid-porous interface, built from a single edge
/// mass kernel so the two blocks are exact negative transposes:
///   + int p (v . n)   (velocity rows, pressure columns)
///   - int (u . n) q   (pressure rows, velocity columns)
/// with n the outward-from-fluid normal of each edge.
pub fn interface_coupling<'a>(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_u: [usize; 2],
    var_p: usize,
    edges: impl Iterator<Item = (&'a [usize; 2], [f64; 2])>,
) {
    for (e, n) in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        for (tq, wq) in &EDGE_GAUSS2 {
            let c = eg.len * wq;
            let lam = [1.0 - tq, *tq];
            for i in 0..2 {
                for j in 0..2 {
                    let m = c * lam[i] * lam[j];
                    for alpha in 0..2 {
                        if n[alpha] == 0.0 {
                            continue;
                        }
                        let udof = layout.dof(var_u[alpha], e[i]);
                        let pdof = layout.dof(var_p, e[j]);
                        sys.add(udof, pdof, n[alpha] * m);
                        sys.add(pdof, udof, -(n[alpha] * m));
                    }
                }
            }
        }
    }
}

/// Jump-jump mass on a broken interface: int c [phi][w] with
/// [v] = v_gdl - v_mem. Signs come from the side resolution.
pub fn jump_mass<'a>(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var: usize,
    edges: impl Iterator<Item = &'a [usize; 2]>,
    coeff: impl Fn([usize; 2], f64) -> f64,
) {
    let sides = [(Side::Gdl, 1.0), (Side::Membrane, -1.0)];
    for e in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        for (tq, wq) in &EDGE_GAUSS2 {
            let c = eg.len * wq * coeff(*e, *tq);
            let lam = [1.0 - tq, *tq];
            for i in 0..2 {
                for (sr, sgr) in sides {
                    let r = layout.dof_side(var, e[i], sr);
                    for j in 0..2 {
                        for (sc, sgc) in sides {
                            let cdof = layout.dof_side(var, e[j], sc);
                            sys.add(r, cdof, c * lam[i] * lam[j] * sgr * sgc);
                        }
                    }
                }
            }
        }
    }
}

/// Jump-weighted load on a broken interface: rhs += int g [w].
pub fn jump_load<'a>(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var: usize,
    edges: impl Iterator<Item = &'a [usize; 2]>,
    g: impl Fn([usize; 2], f64) -> f64,
) {
    for e in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        for (tq, wq) in &EDGE_GAUSS2 {
            let c = eg.len * wq * g(*e, *tq);
            let lam = [1.0 - tq, *tq];
            for i in 0..2 {
                sys.add_rhs(layout.dof_side(var, e[i], Side::Gdl), c * lam[i]);
                sys.add_rhs(layout.dof_side(var, e[i], Side::Membrane), -c * lam[i]);
            }
        }
    }
}

/// Volume load int f phi for a scalar variable.
pub fn volume_load(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var: usize,
    in_region: impl Fn(Region) -> bool,
    f: impl Fn(usize, [f64; 2]) -> f64,
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !in_region(region) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let tri = mesh.tris[t];
        for (bary, w) in rule {
            let c = g.area * w * f(t, g.point(p, *bary));
            for i in 0..3 {
                sys.add_rhs(layout.dof_in(var, tri[i], region), c * bary[i]);
            }
        }
    }
}

/// Volume load int f . v for a vector variable.
pub fn volume_load_vec(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_u: [usize; 2],
    in_region: impl Fn(Region) -> bool,
    f: impl Fn(usize, [f64; 2]) -> [f64; 2],
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !in_region(region) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let tri = mesh.tris[t];
        for (bary, w) in rule {
            let fv = f(t, g.point(p, *bary));
            for i in 0..3 {
                for alpha in 0..2 {
                    let r = layout.dof_in(var_u[alpha], tri[i], region);
                    sys.add_rhs(r, g.area * w * fv[alpha] * bary[i]);
                }
            }
        }
    }
}

/// Load against the divergence of the test field: rhs += int g (div v).
pub fn div_test_load(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_u: [usize; 2],
    in_region: impl Fn(Region) -> bool,
    g_fn: impl Fn(usize, [f64; 2]) -> f64,
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !in_region(region) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let mut gint = 0.0;
        for (bary, w) in rule {
            gint += w * g_fn(t, g.point(p, *bary));
        }
        gint *= g.area;
        let tri = mesh.tris[t];
        for i in 0..3 {
            for alpha in 0..2 {
                let r = layout.dof_in(var_u[alpha], tri[i], region);
                sys.add_rhs(r, gint * g.grad[i][alpha]);
            }
        }
    }
}

/// Load against the symmetric gradient of the test field:
/// rhs += int tau : D(v) with tau symmetric (2x2).
pub fn stress_test_load(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_u: [usize; 2],
    in_region: impl Fn(Region) -> bool,
    tau: impl Fn(usize, [f64; 2]) -> [[f64; 2]; 2],
    rule: &[TriPoint],
) {
    for t in 0..mesh.n_tris() {
        let region = mesh.tri_region[t];
        if !in_region(region) {
            continue;
        }
        let p = mesh.tri_coords(t);
        let g = TriGeom::new(p);
        let mut tint = [[0.0; 2]; 2];
        for (bary, w) in rule {
            let tv = tau(t, g.point(p, *bary));
            for a in 0..2 {
                for b in 0..2 {
                    tint[a][b] += w * tv[a][b];
                }
            }
        }
        let tri = mesh.tris[t];
        for i in 0..3 {
            for alpha in 0..2 {
                let r = layout.dof_in(var_u[alpha], tri[i], region);
                // tau : D(e_alpha phi_i) = row_alpha(tau) . grad phi_i for symmetric tau
                let v = tint[alpha][0] * g.grad[i][0] + tint[alpha][1] * g.grad[i][1];
                sys.add_rhs(r, g.area * v);
            }
        }
    }
}

/// Scalar edge load: rhs += int g phi over the given edges.
pub fn edge_load_scalar<'a>(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var: usize,
    edges: impl Iterator<Item = &'a [usize; 2]>,
    g: impl Fn([usize; 2], f64, [f64; 2]) -> f64,
    rule: &[EdgePoint],
) {
    for e in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        for (tq, wq) in rule {
            let c = eg.len * wq * g(*e, *tq, eg.point(*tq));
            sys.add_rhs(layout.dof(var, e[0]), c * (1.0 - tq));
            sys.add_rhs(layout.dof(var, e[1]), c * tq);
        }
    }
}

/// Vector edge load: rhs += int g . v over the given edges.
pub fn edge_load_vec<'a>(
    sys: &mut SparseSystem,
    mesh: &Mesh,
    layout: &DofLayout,
    var_u: [usize; 2],
    edges: impl Iterator<Item = &'a [usize; 2]>,
    g: impl Fn([usize; 2], f64, [f64; 2]) -> [f64; 2],
    rule: &[EdgePoint],
) {
    for e in edges {
        let eg = EdgeGeom::new(mesh.coords[e[0]], mesh.coords[e[1]]);
        for (tq, wq) in rule {
            let gv = g(*e, *tq, eg.point(*tq));
            let lam = [1.0 - tq, *tq];
            for i in 0..2 {
                for alpha in 0..2 {
                    sys.add_rhs(layout.dof(var_u[alpha], e[i]), eg.len * wq * gv[alpha] * lam[i]);
                }
            }
        }
    }
}
