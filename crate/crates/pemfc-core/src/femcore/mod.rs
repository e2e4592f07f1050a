//! P1 finite element core: quadrature, dof layout, assembly kernels,
//! sparse linear algebra and norms.

pub mod assemble;
pub mod layout;
pub mod norms;
pub mod quadrature;
pub mod system;

pub use assemble::{EdgeGeom, TriGeom};
pub use layout::{DofLayout, Side, Support, VarLayout, VarSpec, NO_DOF};
pub use system::SparseSystem;

use crate::mesh::Mesh;

/// Nodal solution vectors of the coupled problem. Velocity lives on the
/// channel nodes, pressure on the porous nodes, potential carries separate
/// main and membrane traces; entries off a field's support stay zero. The
/// dissipation field is piecewise constant and nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub p: Vec<f64>,
    pub rho: [Vec<f64>; 2],
    pub theta: Vec<f64>,
    pub phi_main: Vec<f64>,
    pub phi_mem: Vec<f64>,
    /// per-triangle dissipation density, zero off the diffusion layers
    pub joule: Vec<f64>,
}

impl State {
    pub fn zero(mesh: &Mesh) -> State {
        let n = mesh.n_nodes();
        State {
            ux: vec![0.0; n],
            uy: vec![0.0; n],
            p: vec![0.0; n],
            rho: [vec![0.0; n], vec![0.0; n]],
            theta: vec![0.0; n],
            phi_main: vec![0.0; n],
            phi_mem: vec![0.0; n],
            joule: vec![0.0; mesh.n_tris()],
        }
    }

    pub fn is_zero(&self) -> bool {
        let all0 = |v: &[f64]| v.iter().all(|x| *x == 0.0);
        all0(&self.ux)
            && all0(&self.uy)
            && all0(&self.p)
            && all0(&self.rho[0])
            && all0(&self.rho[1])
            && all0(&self.theta)
            && all0(&self.phi_main)
            && all0(&self.phi_mem)
            && all0(&self.joule)
    }
}
