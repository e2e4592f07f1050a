//! Legacy-ASCII VTK export (DataFile 3.0, UNSTRUCTURED_GRID) of the mesh and
//! the converged fields. Values are printed with the shortest round-trip
//! float format, so files are byte-reproducible and lossless.

use std::fmt::Write;

use crate::femcore::State;
use crate::mesh::Mesh;

fn grid(out: &mut String, title: &str, mesh: &Mesh) {
    let n = mesh.n_nodes();
    let t = mesh.n_tris();
    writeln!(out, "# vtk DataFile Version 3.0").unwrap();
    writeln!(out, "{title}").unwrap();
    writeln!(out, "ASCII").unwrap();
    writeln!(out, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(out, "POINTS {n} double").unwrap();
    for c in &mesh.coords {
        writeln!(out, "{:e} {:e} 0", c[0], c[1]).unwrap();
    }
    writeln!(out, "CELLS {t} {}", 4 * t).unwrap();
    for tri in &mesh.tris {
        writeln!(out, "3 {} {} {}", tri[0], tri[1], tri[2]).unwrap();
    }
    writeln!(out, "CELL_TYPES {t}").unwrap();
    for _ in 0..t {
        writeln!(out, "5").unwrap();
    }
}

fn scalars(out: &mut String, name: &str, values: impl Iterator<Item = f64>) {
    writeln!(out, "SCALARS {name} double 1").unwrap();
    writeln!(out, "LOOKUP_TABLE default").unwrap();
    for v in values {
        writeln!(out, "{v:e}").unwrap();
    }
}

fn region_cells(out: &mut String, mesh: &Mesh) {
    writeln!(out, "SCALARS region int 1").unwrap();
    writeln!(out, "LOOKUP_TABLE default").unwrap();
    for r in &mesh.tri_region {
        writeln!(out, "{}", r.index()).unwrap();
    }
}

/// Mesh plus region tags, for a quick look at the strip layout.
pub fn mesh_vtk(mesh: &Mesh) -> String {
    let mut out = String::new();
    grid(&mut out, "pemfc mesh", mesh);
    writeln!(out, "CELL_DATA {}", mesh.n_tris()).unwrap();
    region_cells(&mut out, mesh);
    out
}

/// Solution fields. The potential is exported twice: `phi_gdl` carries the
/// electronic side with the cell-voltage lift added on the cathode closure,
/// `phi_mem` the protonic side (equal to `phi_gdl` away from the interface
/// duplicates). The dissipation density `Phi` is cellwise.
pub fn fields_vtk(mesh: &Mesh, state: &State, e_cell: f64) -> String {
    let n = mesh.n_nodes();
    let cathode_gdl = |node: usize| {
        let col = node % (mesh.strip_cols[5] + 1);
        col >= mesh.strip_cols[3] && col <= mesh.strip_cols[4]
    };
    let mut out = String::new();
    grid(&mut out, "pemfc fields", mesh);

    writeln!(out, "POINT_DATA {n}").unwrap();
    writeln!(out, "VECTORS u double").unwrap();
    for i in 0..n {
        writeln!(out, "{:e} {:e} 0", state.ux[i], state.uy[i]).unwrap();
    }
    scalars(&mut out, "p", state.p.iter().copied());
    scalars(&mut out, "rho1", state.rho[0].iter().copied());
    scalars(&mut out, "rho2", state.rho[1].iter().copied());
    scalars(&mut out, "theta", state.theta.iter().copied());
    scalars(
        &mut out,
        "phi_gdl",
        (0..n).map(|i| state.phi_main[i] + if cathode_gdl(i) { e_cell } else { 0.0 }),
    );
    scalars(&mut out, "phi_mem", state.phi_mem.iter().copied());

    writeln!(out, "CELL_DATA {}", mesh.n_tris()).unwrap();
    region_cells(&mut out, mesh);
    scalars(&mut out, "Phi", state.joule.iter().copied());
    out
}
