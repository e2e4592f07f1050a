//! Discrete lower estimate of the embedding constant
//! sup ||v||_q / ||v||_{1,2} over the P1 space, found by projected
//! gradient ascent on the log ratio from several starts. Whatever the
//! ascent returns is a certified ratio of an actual discrete function, so
//! the result is a lower bound on the true constant, never an upper one.

use crate::femcore::assemble::{scalar_diffusion, scalar_mass, TriGeom};
use crate::femcore::layout::{DofLayout, VarSpec};
use crate::femcore::norms::{scalar_h1_sq, scalar_l2_sq, Field};
use crate::femcore::quadrature::{TRI_DEG5, TRI_MIDPOINT};
use crate::femcore::system::SparseSystem;
use crate::mesh::Mesh;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Inflation applied when the ascent estimate stands in for the true
/// constant in the regime checks.
pub const EMBEDDING_SAFETY: f64 = 1.5;

const ASCENT_ITERS: usize = 50;
const RANDOM_RESTARTS: usize = 5;

/// Ratio ||v||_q / ||v||_{1,2} of a nodal function over the whole mesh,
/// by quadrature that is exact for q = 4.
pub fn p1_ratio(mesh: &Mesh, v: &[f64], q: f64) -> f64 {
    let lq = lq_integral(mesh, v, q).powf(1.0 / q);
    let h1 = (scalar_l2_sq(mesh, &Field::Nodal(v), |_| true)
        + scalar_h1_sq(mesh, &Field::Nodal(v), |_| true))
    .sqrt();
    if h1 == 0.0 {
        0.0
    } else {
        lq / h1
    }
}

fn lq_integral(mesh: &Mesh, v: &[f64], q: f64) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_tris() {
        let g = TriGeom::new(mesh.tri_coords(t));
        let tri = mesh.tris[t];
        for (bary, w) in &TRI_DEG5 {
            let val = v[tri[0]] * bary[0] + v[tri[1]] * bary[1] + v[tri[2]] * bary[2];
            acc += g.area * w * val.abs().powf(q);
        }
    }
    acc
}

/// Gradient of int |v|^q with respect to the nodal values, up to the
/// common factor q.
fn lq_gradient(mesh: &Mesh, v: &[f64], q: f64, out: &mut [f64]) {
    out.fill(0.0);
    for t in 0..mesh.n_tris() {
        let g = TriGeom::new(mesh.tri_coords(t));
        let tri = mesh.tris[t];
        for (bary, w) in &TRI_DEG5 {
            let val = v[tri[0]] * bary[0] + v[tri[1]] * bary[1] + v[tri[2]] * bary[2];
            let s = val.abs().powf(q - 1.0) * val.signum();
            for i in 0..3 {
                out[tri[i]] += g.area * w * s * bary[i];
            }
        }
    }
}

struct Ascent {
    layout: DofLayout,
    form: SparseSystem,
}

impl Ascent {
    fn new(mesh: &Mesh) -> Ascent {
        let layout = DofLayout::build(mesh, &[VarSpec::all()]);
        let mut form = SparseSystem::new(layout.n_dofs);
        scalar_mass(&mut form, mesh, &layout, 0, 0, |_| true, |_, _| 1.0, &TRI_MIDPOINT);
        scalar_diffusion(&mut form, mesh, &layout, 0, 0, |_| true, |_, _| 1.0, &TRI_MIDPOINT);
        Ascent { layout, form }
    }

    fn run(&self, mesh: &Mesh, q: f64, start: &[f64], best: &mut (f64, Vec<f64>)) {
        let n = mesh.n_nodes();
        let mut v = start.to_vec();
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if scale == 0.0 {
            return;
        }
        v.iter_mut().for_each(|x| *x /= scale);
        let mut grad_lq = vec![0.0; n];
        let mut packed = vec![0.0; self.layout.n_dofs];
        for _ in 0..=ASCENT_ITERS {
            let ratio = p1_ratio(mesh, &v, q);
            if ratio > best.0 {
                best.0 = ratio;
                best.1.copy_from_slice(&v);
            }
            let lq_int = lq_integral(mesh, &v, q);
            for i in 0..n {
                packed[self.layout.dof(0, i)] = v[i];
            }
            let h1v = self.form.matvec(&packed);
            let h1_sq: f64 = packed.iter().zip(&h1v).map(|(a, b)| a * b).sum();
            if lq_int <= 0.0 || h1_sq <= 0.0 {
                return;
            }
            lq_gradient(mesh, &v, q, &mut grad_lq);
            let mut gnorm = 0.0;
            let mut vnorm = 0.0;
            for i in 0..n {
                grad_lq[i] = grad_lq[i] / lq_int - h1v[self.layout.dof(0, i)] / h1_sq;
                gnorm += grad_lq[i] * grad_lq[i];
                vnorm += v[i] * v[i];
            }
            if gnorm == 0.0 {
                return;
            }
            let step = 0.25 * (vnorm / gnorm).sqrt();
            for i in 0..n {
                v[i] += step * grad_lq[i];
            }
        }
    }
}

/// Best ratio found and the function achieving it. One deterministic
/// constant start, a batch of seeded random restarts, and any caller
/// supplied candidates.
pub fn embedding_search(
    mesh: &Mesh,
    q: f64,
    seed: u64,
    extra_starts: &[Vec<f64>],
) -> (f64, Vec<f64>) {
    let n = mesh.n_nodes();
    let ascent = Ascent::new(mesh);
    let mut best = (0.0, vec![0.0; n]);
    ascent.run(mesh, q, &vec![1.0; n], &mut best);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_RESTARTS {
        let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        ascent.run(mesh, q, &start, &mut best);
    }
    for start in extra_starts {
        ascent.run(mesh, q, start, &mut best);
    }
    best
}

/// Discrete lower estimate of the embedding constant for the given
/// exponent. Deterministic for a fixed seed.
pub fn estimate_embedding_constant(mesh: &Mesh, q: f64, seed: u64) -> f64 {
    embedding_search(mesh, q, seed, &[]).0
}

/// Re-express a nodal function on the mesh refined by exactly two in every
/// direction. P1 spaces nest under this refinement, so the result is the
/// same function: new nodes sit on coarse edges or on the split diagonal
/// and take the linear interpolant there.
pub fn inject_refined(coarse: &Mesh, fine: &Mesh, values: &[f64]) -> Vec<f64> {
    assert_eq!(fine.div.ny, coarse.div.ny * 2, "fine mesh is not the 2-refinement");
    for s in 0..5 {
        assert_eq!(fine.div.nx[s], coarse.div.nx[s] * 2);
    }
    let nxc = coarse.strip_cols[5];
    let nyc = coarse.div.ny;
    let at = |ix: usize, iy: usize| values[coarse.node_id(ix, iy)];
    let mut out = vec![0.0; fine.n_nodes()];
    for iy in 0..=nyc {
        for ix in 0..=nxc {
            out[fine.node_id(2 * ix, 2 * iy)] = at(ix, iy);
        }
    }
    for iy in 0..=nyc {
        for ix in 0..nxc {
            out[fine.node_id(2 * ix + 1, 2 * iy)] = 0.5 * (at(ix, iy) + at(ix + 1, iy));
        }
    }
    for iy in 0..nyc {
        for ix in 0..=nxc {
            out[fine.node_id(2 * ix, 2 * iy + 1)] = 0.5 * (at(ix, iy) + at(ix, iy + 1));
        }
    }
    // cell centers lie on the split diagonal from the lower-left corner
    for iy in 0..nyc {
        for ix in 0..nxc {
            out[fine.node_id(2 * ix + 1, 2 * iy + 1)] = 0.5 * (at(ix, iy) + at(ix + 1, iy + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, unit_square_geometry, Divisions};

    fn unit_mesh(factor: usize) -> Mesh {
        build_mesh(
            unit_square_geometry(),
            Divisions {
                nx: [factor; 5],
                ny: 5 * factor,
            },
        )
        .unwrap()
    }

    #[test]
    fn constant_function_on_the_unit_square_has_ratio_one() {
        let mesh = unit_mesh(2);
        let ones = vec![1.0; mesh.n_nodes()];
        let r = p1_ratio(&mesh, &ones, 4.0);
        assert!((r - 1.0).abs() <= 1e-12, "ratio {r}");
        let est = estimate_embedding_constant(&mesh, 4.0, 7);
        assert!(est >= 1.0 - 1e-12, "estimate {est}");
    }

    #[test]
    fn estimate_never_decreases_under_refinement() {
        let mut mesh = unit_mesh(1);
        let (mut est, mut arg) = embedding_search(&mesh, 4.0, 11, &[]);
        for _ in 0..3 {
            let fine = build_mesh(mesh.geom, mesh.div.refined(2)).unwrap();
            let carried = inject_refined(&mesh, &fine, &arg);
            let same = p1_ratio(&fine, &carried, 4.0);
            assert!(
                (same - est).abs() <= 1e-10 * est,
                "injected ratio moved: {est} -> {same}"
            );
            let (next, next_arg) = embedding_search(&fine, 4.0, 11, &[carried]);
            assert!(next >= est - 1e-12, "estimate dropped: {est} -> {next}");
            mesh = fine;
            est = next;
            arg = next_arg;
        }
    }

    #[test]
    fn whole_domain_estimate_dominates_a_zero_extended_candidate() {
        let mesh = unit_mesh(3);
        // hat supported on an interior patch, zero elsewhere
        let mut hat = vec![0.0; mesh.n_nodes()];
        let (nx, ny) = (mesh.strip_cols[5], mesh.div.ny);
        for iy in 1..ny {
            for ix in 1..nx {
                let x = mesh.coords[mesh.node_id(ix, iy)];
                if x[0] > 0.25 && x[0] < 0.55 && x[1] > 0.3 && x[1] < 0.7 {
                    hat[mesh.node_id(ix, iy)] = 1.0;
                }
            }
        }
        let direct = p1_ratio(&mesh, &hat, 4.0);
        assert!(direct > 0.0 && direct < 1.0, "candidate ratio {direct}");
        let unseeded = estimate_embedding_constant(&mesh, 4.0, 3);
        assert!(unseeded >= direct, "{unseeded} < {direct}");
        let (seeded, _) = embedding_search(&mesh, 4.0, 3, &[hat]);
        assert!(seeded >= direct - 1e-12);
        assert!(seeded >= unseeded - 1e-12);
    }

    #[test]
    fn search_is_deterministic_for_a_fixed_seed() {
        let mesh = unit_mesh(2);
        let a = estimate_embedding_constant(&mesh, 4.0, 42);
        let b = estimate_embedding_constant(&mesh, 4.0, 42);
        assert_eq!(a, b);
        let c = estimate_embedding_constant(&mesh, 4.0, 43);
        // different seed explores different starts; both are lower bounds
        assert!(c > 0.0);
    }
}
