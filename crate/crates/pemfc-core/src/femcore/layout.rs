//! Degree-of-freedom bookkeeping.
//!
//! Each variable is a P1 nodal field over a support (all nodes, fluid
//! closure, porous closure). A porous variable may be "broken": nodes on
//! the membrane-GDL interfaces carry two dofs, a GDL-side primary and a
//! membrane-side duplicate, so traces may jump there.

use crate::mesh::{Mesh, Region};

pub const NO_DOF: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    All,
    Fluid,
    Porous,
}

#[derive(Debug, Clone, Copy)]
pub struct VarSpec {
    pub support: Support,
    pub broken: bool,
}

impl VarSpec {
    pub fn all() -> Self {
        VarSpec {
            support: Support::All,
            broken: false,
        }
    }
    pub fn fluid() -> Self {
        VarSpec {
            support: Support::Fluid,
            broken: false,
        }
    }
    pub fn porous(broken: bool) -> Self {
        VarSpec {
            support: Support::Porous,
            broken,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarLayout {
    /// Primary dof per node (GDL side at broken interface nodes).
    pub primary: Vec<usize>,
    /// Membrane-side duplicate per node.
    pub dup: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DofLayout {
    pub vars: Vec<VarLayout>,
    pub n_nodes: usize,
    pub n_dofs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Gdl,
    Membrane,
}

impl DofLayout {
    pub fn build(mesh: &Mesh, specs: &[VarSpec]) -> DofLayout {
        let n_nodes = mesh.n_nodes();
        let mut vars = Vec::with_capacity(specs.len());
        let mut next = 0usize;
        for spec in specs {
            let mut primary = vec![NO_DOF; n_nodes];
            let mut dup = vec![NO_DOF; n_nodes];
            for node in 0..n_nodes {
                let inside = match spec.support {
                    Support::All => true,
                    Support::Fluid => mesh.is_fluid_node(node),
                    Support::Porous => mesh.is_porous_node(node),
                };
                if inside {
                    primary[node] = next;
                    next += 1;
                }
            }
            if spec.broken {
                assert!(
                    spec.support == Support::Porous,
                    "broken variables live on the porous sandwich"
                );
                for node in 0..n_nodes {
                    if mesh.on_gamma_a(node) || mesh.on_gamma_c(node) {
                        dup[node] = next;
                        next += 1;
                    }
                }
            }
            vars.push(VarLayout { primary, dup });
        }
        DofLayout {
            vars,
            n_nodes,
            n_dofs: next,
        }
    }

    /// Primary dof of a variable at a node (NO_DOF outside the support).
    pub fn dof(&self, var: usize, node: usize) -> usize {
        self.vars[var].primary[node]
    }

    /// Dof seen from an element of the given region: membrane elements use
    /// the membrane-side duplicate where one exists.
    pub fn dof_in(&self, var: usize, node: usize, region: Region) -> usize {
        let v = &self.vars[var];
        if region == Region::Membrane && v.dup[node] != NO_DOF {
            v.dup[node]
        } else {
            v.primary[node]
        }
    }

    /// Dof of a given side at a broken interface node.
    pub fn dof_side(&self, var: usize, node: usize, side: Side) -> usize {
        let v = &self.vars[var];
        match side {
            Side::Gdl => v.primary[node],
            Side::Membrane => {
                if v.dup[node] != NO_DOF {
                    v.dup[node]
                } else {
                    v.primary[node]
                }
            }
        }
    }

    /// Scatter a dof vector into per-node arrays (primary side and
    /// membrane side); nodes outside the support read zero.
    pub fn extract(&self, var: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let v = &self.vars[var];
        let mut main = vec![0.0; self.n_nodes];
        let mut mem = vec![0.0; self.n_nodes];
        for node in 0..self.n_nodes {
            if v.primary[node] != NO_DOF {
                main[node] = x[v.primary[node]];
                mem[node] = if v.dup[node] != NO_DOF {
                    x[v.dup[node]]
                } else {
                    main[node]
                };
            }
        }
        (main, mem)
    }
}
