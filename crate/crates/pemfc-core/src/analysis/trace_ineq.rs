//! Spot check of the one-dimensional trace bound used on the cathode
//! layer: a function on the strip that vanishes at the collector side
//! satisfies int_{interface} v^2 <= width * int_{strip} |grad v|^2. Both
//! sides are quadrature-exact for P1, so the check is sharp.

use crate::femcore::norms::{scalar_edge_l2_sq, scalar_h1_sq, Field};
use crate::mesh::{InterfaceTag, Mesh, Region};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct TraceCheck {
    pub samples: usize,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Interface-trace to gradient-energy ratio of one nodal function on the
/// cathode layer. Zero-energy functions report zero.
pub fn trace_ratio(mesh: &Mesh, values: &[f64]) -> f64 {
    let edges: Vec<[usize; 2]> = mesh
        .interface_edges(InterfaceTag::GammaC)
        .map(|e| e.nodes)
        .collect();
    let lhs = scalar_edge_l2_sq(mesh, values, edges.iter());
    let grad = scalar_h1_sq(mesh, &Field::Nodal(values), |r| r == Region::CathodeGdl);
    let rhs = mesh.geom.widths[3] * grad;
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}

/// Sample random P1 functions on the cathode layer vanishing on its
/// collector-side line and report the worst trace ratio observed.
pub fn trace_inequality_check(mesh: &Mesh, samples: usize, seed: u64) -> TraceCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (mesh.strip_cols[3], mesh.strip_cols[4]);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..samples {
        let mut v = vec![0.0; mesh.n_nodes()];
        for iy in 0..=mesh.div.ny {
            for ix in lo..hi {
                v[mesh.node_id(ix, iy)] = rng.random_range(-1.0..=1.0);
            }
        }
        max_ratio = max_ratio.max(trace_ratio(mesh, &v));
    }
    TraceCheck {
        samples,
        max_ratio,
        pass: max_ratio <= 1.0 + 1e-12,
    }
}
