//! Structured triangulation of the five-strip cell section.
//!
//! The domain is a rectangle [0,W] x [0,L] split into five vertical strips:
//! fuel channel | anode GDL | membrane | cathode GDL | air channel.
//! Each strip is meshed with a tensor grid and every grid cell is cut into
//! two triangles along the same diagonal direction, so a uniform 2x
//! refinement produces nested P1 spaces.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    Fuel = 0,
    AnodeGdl = 1,
    Membrane = 2,
    CathodeGdl = 3,
    Air = 4,
}

impl Region {
    pub const ALL: [Region; 5] = [
        Region::Fuel,
        Region::AnodeGdl,
        Region::Membrane,
        Region::CathodeGdl,
        Region::Air,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_fluid(self) -> bool {
        matches!(self, Region::Fuel | Region::Air)
    }

    pub fn is_porous(self) -> bool {
        !self.is_fluid()
    }

    /// Gas-diffusion layers: the electronically conducting porous strips.
    pub fn is_gdl(self) -> bool {
        matches!(self, Region::AnodeGdl | Region::CathodeGdl)
    }
}

/// Tags for exterior boundary edges.
///
/// InletA/InletC are the bottom (y=0) edges of the fuel and air channels,
/// OutletA/OutletC the corresponding top (y=L) edges. CollectorA/CollectorC
/// are the bottom+top edges of the two GDL strips (current collectors).
/// Everything else is Wall: the two vertical sides and the membrane strip's
/// bottom/top edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    InletA,
    InletC,
    OutletA,
    OutletC,
    Wall,
    CollectorA,
    CollectorC,
}

impl BoundaryTag {
    pub fn is_inlet_outlet(self) -> bool {
        matches!(
            self,
            BoundaryTag::InletA | BoundaryTag::InletC | BoundaryTag::OutletA | BoundaryTag::OutletC
        )
    }

    /// Wall in the wide sense: everything that is not inlet or outlet.
    /// The Robin heat condition lives on this set.
    pub fn is_wall_like(self) -> bool {
        !self.is_inlet_outlet()
    }
}

/// Tags for interior interface edges (all vertical lines).
///
/// GammaFuel/GammaAir are the fluid-porous interfaces where the flow
/// coupling acts; GammaA/GammaC are the membrane-GDL interfaces carrying
/// the electrode kinetics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceTag {
    GammaFuel,
    GammaA,
    GammaC,
    GammaAir,
}

/// Strip widths and channel length in meters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Geometry {
    /// Widths of fuel channel, anode GDL, membrane, cathode GDL, air channel.
    pub widths: [f64; 5],
    /// Extent in y (channel/flow direction).
    pub length: f64,
}

impl Geometry {
    /// x-coordinates of the strip boundaries, x0 = 0 through x5 = W.
    pub fn x_breaks(&self) -> [f64; 6] {
        let mut xb = [0.0; 6];
        for i in 0..5 {
            xb[i + 1] = xb[i] + self.widths[i];
        }
        xb
    }

    pub fn total_width(&self) -> f64 {
        self.widths.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.widths.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::Geometry(format!(
                "strip widths must be positive and finite, got {:?}",
                self.widths
            )));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::Geometry(format!(
                "channel length must be positive and finite, got {}",
                self.length
            )));
        }
        Ok(())
    }
}

/// Cell counts: per-strip divisions in x and a shared division in y.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Divisions {
    pub nx: [usize; 5],
    pub ny: usize,
}

impl Divisions {
    pub fn refined(&self, factor: usize) -> Divisions {
        Divisions {
            nx: self.nx.map(|n| n * factor),
            ny: self.ny * factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx.iter().any(|n| *n == 0) || self.ny == 0 {
            return Err(Error::Geometry(format!(
                "divisions must be at least 1 per strip and in y, got nx = {:?}, ny = {}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryEdge {
    /// Node ids, ordered along the edge.
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    /// Outward unit normal of the domain.
    pub normal: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct InterfaceEdge {
    pub nodes: [usize; 2],
    pub tag: InterfaceTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub geom: Geometry,
    pub div: Divisions,
    /// Column x-coordinates (len = total nx + 1).
    pub xs: Vec<f64>,
    /// Row y-coordinates (len = ny + 1).
    pub ys: Vec<f64>,
    /// Node coordinates; node id = row * (total nx + 1) + col.
    pub coords: Vec<[f64; 2]>,
    /// Triangles, counter-clockwise.
    pub tris: Vec<[usize; 3]>,
    pub tri_region: Vec<Region>,
    pub boundary: Vec<BoundaryEdge>,
    pub interfaces: Vec<InterfaceEdge>,
    /// Column indices of the strip boundaries (0, c1, c2, c3, c4, total nx).
    pub strip_cols: [usize; 6],
}

pub fn build_mesh(geom: Geometry, div: Divisions) -> Result<Mesh> {
    geom.validate()?;
    div.validate()?;

    let xb = geom.x_breaks();
    let mut strip_cols = [0usize; 6];
    for i in 0..5 {
        strip_cols[i + 1] = strip_cols[i] + div.nx[i];
    }
    let nxt = strip_cols[5];
    let ny = div.ny;

    let mut xs = Vec::with_capacity(nxt + 1);
    for s in 0..5 {
        let h = geom.widths[s] / div.nx[s] as f64;
        for k in 0..div.nx[s] {
            xs.push(xb[s] + h * k as f64);
        }
    }
    xs.push(xb[5]);
    let ys: Vec<f64> = (0..=ny)
        .map(|j| geom.length * j as f64 / ny as f64)
        .collect();

    let id = |ix: usize, iy: usize| iy * (nxt + 1) + ix;

    let mut coords = Vec::with_capacity((nxt + 1) * (ny + 1));
    for iy in 0..=ny {
        for ix in 0..=nxt {
            coords.push([xs[ix], ys[iy]]);
        }
    }

    let col_region = |ix: usize| -> Region {
        // region of the cell column [ix, ix+1]
        let mut r = Region::Air;
        for s in 0..5 {
            if ix < strip_cols[s + 1] {
                r = Region::ALL[s];
                break;
            }
        }
        r
    };

    let mut tris = Vec::with_capacity(2 * nxt * ny);
    let mut tri_region = Vec::with_capacity(2 * nxt * ny);
    for iy in 0..ny {
        for ix in 0..nxt {
            let (n00, n10) = (id(ix, iy), id(ix + 1, iy));
            let (n01, n11) = (id(ix, iy + 1), id(ix + 1, iy + 1));
            tris.push([n00, n10, n11]);
            tris.push([n00, n11, n01]);
            let r = col_region(ix);
            tri_region.push(r);
            tri_region.push(r);
        }
    }

    let horizontal_tag = |ix: usize, bottom: bool| -> BoundaryTag {
        match col_region(ix) {
            Region::Fuel => {
                if bottom {
                    BoundaryTag::InletA
                } else {
                    BoundaryTag::OutletA
                }
            }
            Region::Air => {
                if bottom {
                    BoundaryTag::InletC
                } else {
                    BoundaryTag::OutletC
                }
            }
            Region::AnodeGdl => BoundaryTag::CollectorA,
            Region::CathodeGdl => BoundaryTag::CollectorC,
            Region::Membrane => BoundaryTag::Wall,
        }
    };

    let mut boundary = Vec::new();
    for ix in 0..nxt {
        boundary.push(BoundaryEdge {
            nodes: [id(ix, 0), id(ix + 1, 0)],
            tag: horizontal_tag(ix, true),
            normal: [0.0, -1.0],
        });
    }
    for ix in 0..nxt {
        boundary.push(BoundaryEdge {
            nodes: [id(ix, ny), id(ix + 1, ny)],
            tag: horizontal_tag(ix, false),
            normal: [0.0, 1.0],
        });
    }
    for iy in 0..ny {
        boundary.push(BoundaryEdge {
            nodes: [id(0, iy), id(0, iy + 1)],
            tag: BoundaryTag::Wall,
            normal: [-1.0, 0.0],
        });
        boundary.push(BoundaryEdge {
            nodes: [id(nxt, iy), id(nxt, iy + 1)],
            tag: BoundaryTag::Wall,
            normal: [1.0, 0.0],
        });
    }

    let mut interfaces = Vec::new();
    let iface_tags = [
        InterfaceTag::GammaFuel,
        InterfaceTag::GammaA,
        InterfaceTag::GammaC,
        InterfaceTag::GammaAir,
    ];
    for (k, tag) in iface_tags.iter().enumerate() {
        let c = strip_cols[k + 1];
        for iy in 0..ny {
            interfaces.push(InterfaceEdge {
                nodes: [id(c, iy), id(c, iy + 1)],
                tag: *tag,
            });
        }
    }

    Ok(Mesh {
        geom,
        div,
        xs,
        ys,
        coords,
        tris,
        tri_region,
        boundary,
        interfaces,
        strip_cols,
    })
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_tris(&self) -> usize {
        self.tris.len()
    }

    pub fn n_cols(&self) -> usize {
        self.strip_cols[5] + 1
    }

    pub fn node_col(&self, node: usize) -> usize {
        node % self.n_cols()
    }

    pub fn node_row(&self, node: usize) -> usize {
        node / self.n_cols()
    }

    pub fn node_id(&self, ix: usize, iy: usize) -> usize {
        iy * self.n_cols() + ix
    }

    pub fn tri_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.tris[t];
        [
            self.coords[tri[0]],
            self.coords[tri[1]],
            self.coords[tri[2]],
        ]
    }

    /// Node lies in the closure of the fluid subdomain (touches a channel).
    pub fn is_fluid_node(&self, node: usize) -> bool {
        let c = self.node_col(node);
        c <= self.strip_cols[1] || c >= self.strip_cols[4]
    }

    /// Node lies in the closure of the porous sandwich.
    pub fn is_porous_node(&self, node: usize) -> bool {
        let c = self.node_col(node);
        c >= self.strip_cols[1] && c <= self.strip_cols[4]
    }

    /// Node lies in the closure of the membrane strip.
    pub fn is_membrane_node(&self, node: usize) -> bool {
        let c = self.node_col(node);
        c >= self.strip_cols[2] && c <= self.strip_cols[3]
    }

    pub fn on_gamma_a(&self, node: usize) -> bool {
        self.node_col(node) == self.strip_cols[2]
    }

    pub fn on_gamma_c(&self, node: usize) -> bool {
        self.node_col(node) == self.strip_cols[3]
    }

    /// Node lies in the closure of the cathode-side region (cathode GDL span),
    /// where the cell-voltage lift is applied for export.
    pub fn in_cathode_gdl_closure(&self, node: usize) -> bool {
        let c = self.node_col(node);
        c >= self.strip_cols[3] && c <= self.strip_cols[4]
    }

    /// Dirichlet nodes for the velocity: inlet/outlet closures of both channels.
    pub fn inlet_outlet_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for &iy in &[0, self.div.ny] {
            for ix in 0..self.n_cols() {
                let n = self.node_id(ix, iy);
                if self.is_fluid_node(n) {
                    out.push(n);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nodes on the two vertical side walls (x = 0 and x = W).
    pub fn side_wall_nodes(&self) -> Vec<usize> {
        let nxt = self.strip_cols[5];
        let mut out = Vec::new();
        for iy in 0..=self.div.ny {
            out.push(self.node_id(0, iy));
            out.push(self.node_id(nxt, iy));
        }
        out.sort_unstable();
        out
    }

    /// Nodes in the closure of the collector edges, per electrode side.
    pub fn collector_nodes(&self) -> (Vec<usize>, Vec<usize>) {
        let mut anode = Vec::new();
        let mut cathode = Vec::new();
        for &iy in &[0, self.div.ny] {
            for ix in self.strip_cols[1]..=self.strip_cols[2] {
                anode.push(self.node_id(ix, iy));
            }
            for ix in self.strip_cols[3]..=self.strip_cols[4] {
                cathode.push(self.node_id(ix, iy));
            }
        }
        anode.sort_unstable();
        cathode.sort_unstable();
        (anode, cathode)
    }

    /// Interface edges with a given tag, in deterministic order.
    pub fn interface_edges(&self, tag: InterfaceTag) -> impl Iterator<Item = &InterfaceEdge> {
        self.interfaces.iter().filter(move |e| e.tag == tag)
    }

    /// Fluid-porous interface edges (both channels).
    pub fn gamma_edges(&self) -> impl Iterator<Item = &InterfaceEdge> {
        self.interfaces
            .iter()
            .filter(|e| matches!(e.tag, InterfaceTag::GammaFuel | InterfaceTag::GammaAir))
    }

    /// Outward-from-fluid unit normal on a fluid-porous interface edge.
    pub fn gamma_normal_from_fluid(&self, tag: InterfaceTag) -> [f64; 2] {
        match tag {
            InterfaceTag::GammaFuel => [1.0, 0.0],
            InterfaceTag::GammaAir => [-1.0, 0.0],
            _ => panic!("not a fluid-porous interface"),
        }
    }

    pub fn edge_length(&self, nodes: [usize; 2]) -> f64 {
        let a = self.coords[nodes[0]];
        let b = self.coords[nodes[1]];
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    pub fn measures(&self) -> Measures {
        let mut area = [0.0; 5];
        for (t, tri) in self.tris.iter().enumerate() {
            let [a, b, c] = [
                self.coords[tri[0]],
                self.coords[tri[1]],
                self.coords[tri[2]],
            ];
            let ar = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
            area[self.tri_region[t].index()] += ar;
        }
        let mut m = Measures {
            area,
            len_gamma: 0.0,
            len_gamma_a: 0.0,
            len_gamma_c: 0.0,
            len_inlet: 0.0,
            len_outlet: 0.0,
            len_wall: 0.0,
            len_collector_a: 0.0,
            len_collector_c: 0.0,
        };
        for e in &self.interfaces {
            let l = self.edge_length(e.nodes);
            match e.tag {
                InterfaceTag::GammaFuel | InterfaceTag::GammaAir => m.len_gamma += l,
                InterfaceTag::GammaA => m.len_gamma_a += l,
                InterfaceTag::GammaC => m.len_gamma_c += l,
            }
        }
        for e in &self.boundary {
            let l = self.edge_length(e.nodes);
            match e.tag {
                BoundaryTag::InletA | BoundaryTag::InletC => m.len_inlet += l,
                BoundaryTag::OutletA | BoundaryTag::OutletC => m.len_outlet += l,
                BoundaryTag::Wall => m.len_wall += l,
                BoundaryTag::CollectorA => m.len_collector_a += l,
                BoundaryTag::CollectorC => m.len_collector_c += l,
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Measures {
    pub area: [f64; 5],
    pub len_gamma: f64,
    pub len_gamma_a: f64,
    pub len_gamma_c: f64,
    pub len_inlet: f64,
    pub len_outlet: f64,
    pub len_wall: f64,
    pub len_collector_a: f64,
    pub len_collector_c: f64,
}

impl Measures {
    pub fn area_fluid(&self) -> f64 {
        self.area[Region::Fuel.index()] + self.area[Region::Air.index()]
    }

    pub fn area_porous(&self) -> f64 {
        self.area[Region::AnodeGdl.index()]
            + self.area[Region::Membrane.index()]
            + self.area[Region::CathodeGdl.index()]
    }

    pub fn area_total(&self) -> f64 {
        self.area.iter().sum()
    }

    /// Everything that is not inlet or outlet, collectors included.
    pub fn len_gamma_w(&self) -> f64 {
        self.len_wall + self.len_collector_a + self.len_collector_c
    }
}

/// Structural checks: orientation, area identity, tag completeness.
pub fn validate_mesh(mesh: &Mesh) -> Result<()> {
    for t in 0..mesh.n_tris() {
        let [a, b, c] = mesh.tri_coords(t);
        let ar2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if ar2 <= 0.0 {
            return Err(Error::Geometry(format!(
                "triangle {t} is not counter-clockwise (doubled area {ar2})"
            )));
        }
    }
    let m = mesh.measures();
    let expect = mesh.geom.total_width() * mesh.geom.length;
    if (m.area_total() - expect).abs() > 1e-12 * expect {
        return Err(Error::Geometry(format!(
            "triangle areas sum to {} but the domain has area {}",
            m.area_total(),
            expect
        )));
    }
    let nxt = mesh.strip_cols[5];
    let expected_boundary = 2 * nxt + 2 * mesh.div.ny;
    if mesh.boundary.len() != expected_boundary {
        return Err(Error::Geometry(format!(
            "expected {expected_boundary} boundary edges, found {}",
            mesh.boundary.len()
        )));
    }
    if mesh.interfaces.len() != 4 * mesh.div.ny {
        return Err(Error::Geometry(format!(
            "expected {} interface edges, found {}",
            4 * mesh.div.ny,
            mesh.interfaces.len()
        )));
    }
    Ok(())
}

/// Strip widths and channel length of the demonstration cell.
pub fn demo_geometry() -> Geometry {
    Geometry {
        widths: [1.0e-3, 2.5e-4, 1.0e-4, 2.5e-4, 1.0e-3],
        length: 5.0e-3,
    }
}

/// Geometry whose strips tile the unit square; handy for exact checks.
pub fn unit_square_geometry() -> Geometry {
    Geometry {
        widths: [0.2; 5],
        length: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_and_triangle_counts() {
        let mesh = build_mesh(
            demo_geometry(),
            Divisions {
                nx: [4, 2, 1, 2, 4],
                ny: 8,
            },
        )
        .unwrap();
        assert_eq!(mesh.n_nodes(), 126);
        assert_eq!(mesh.n_tris(), 208);
        validate_mesh(&mesh).unwrap();
    }

    #[test]
    fn minimal_mesh_counts() {
        let mesh = build_mesh(
            demo_geometry(),
            Divisions {
                nx: [1, 1, 1, 1, 1],
                ny: 1,
            },
        )
        .unwrap();
        assert_eq!(mesh.n_nodes(), 12);
        assert_eq!(mesh.n_tris(), 10);
        assert_eq!(mesh.interfaces.len(), 4);
        validate_mesh(&mesh).unwrap();
    }

    #[test]
    fn measures_match_geometry() {
        let g = demo_geometry();
        let mesh = build_mesh(
            g,
            Divisions {
                nx: [3, 2, 2, 2, 3],
                ny: 5,
            },
        )
        .unwrap();
        let m = mesh.measures();
        let l = g.length;
        assert!((m.area_total() - g.total_width() * l).abs() < 1e-18);
        assert!((m.area_fluid() - (g.widths[0] + g.widths[4]) * l).abs() < 1e-18);
        assert!((m.len_gamma - 2.0 * l).abs() < 1e-15);
        assert!((m.len_gamma_a - l).abs() < 1e-15);
        assert!((m.len_gamma_c - l).abs() < 1e-15);
        assert!((m.len_inlet - (g.widths[0] + g.widths[4])).abs() < 1e-15);
        assert!((m.len_outlet - (g.widths[0] + g.widths[4])).abs() < 1e-15);
        assert!((m.len_collector_a - 2.0 * g.widths[1]).abs() < 1e-15);
        assert!((m.len_collector_c - 2.0 * g.widths[3]).abs() < 1e-15);
        // walls: two vertical sides + membrane bottom/top
        assert!((m.len_wall - (2.0 * l + 2.0 * g.widths[2])).abs() < 1e-15);
    }

    #[test]
    fn refinement_nests_nodes() {
        let g = demo_geometry();
        let d = Divisions {
            nx: [2, 1, 1, 1, 2],
            ny: 3,
        };
        let coarse = build_mesh(g, d).unwrap();
        let fine = build_mesh(g, d.refined(2)).unwrap();
        // every coarse node appears in the fine mesh at even (col, row)
        for iy in 0..=coarse.div.ny {
            for ix in 0..coarse.n_cols() {
                let nc = coarse.node_id(ix, iy);
                let nf = fine.node_id(2 * ix, 2 * iy);
                let a = coarse.coords[nc];
                let b = fine.coords[nf];
                assert!((a[0] - b[0]).abs() < 1e-16 && (a[1] - b[1]).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn boundary_tags_partition_the_boundary() {
        let mesh = build_mesh(
            demo_geometry(),
            Divisions {
                nx: [2, 2, 1, 2, 2],
                ny: 4,
            },
        )
        .unwrap();
        let inlet_a = mesh
            .boundary
            .iter()
            .filter(|e| e.tag == BoundaryTag::InletA)
            .count();
        let collector_a = mesh
            .boundary
            .iter()
            .filter(|e| e.tag == BoundaryTag::CollectorA)
            .count();
        assert_eq!(inlet_a, 2);
        assert_eq!(collector_a, 4); // bottom + top, 2 edges each
        // every bottom/top edge of the membrane strip is Wall
        let membrane_wall = mesh
            .boundary
            .iter()
            .filter(|e| {
                e.tag == BoundaryTag::Wall
                    && e.normal[0] == 0.0
                    && mesh.coords[e.nodes[0]][0] >= mesh.geom.x_breaks()[2] - 1e-15
                    && mesh.coords[e.nodes[1]][0] <= mesh.geom.x_breaks()[3] + 1e-15
            })
            .count();
        assert_eq!(membrane_wall, 2);
    }

    #[test]
    fn dirichlet_node_sets() {
        let g = demo_geometry();
        let mesh = build_mesh(
            g,
            Divisions {
                nx: [2, 2, 2, 2, 2],
                ny: 3,
            },
        )
        .unwrap();
        let io = mesh.inlet_outlet_nodes();
        // per row: cols 0..=2 (fuel closure) and 8..=10 (air closure)
        assert_eq!(io.len(), 2 * 6);
        for n in &io {
            let r = mesh.node_row(*n);
            assert!(r == 0 || r == mesh.div.ny);
            assert!(mesh.is_fluid_node(*n));
        }
        let (ca, cc) = mesh.collector_nodes();
        assert_eq!(ca.len(), 2 * 3);
        assert_eq!(cc.len(), 2 * 3);
        // interface columns belong to both closures
        let corner = mesh.node_id(mesh.strip_cols[2], 0);
        assert!(ca.contains(&corner));
        assert!(mesh.on_gamma_a(corner));
    }

    #[test]
    fn invalid_inputs_are_geometry_errors() {
        let mut g = demo_geometry();
        g.widths[2] = 0.0;
        assert!(matches!(
            build_mesh(
                g,
                Divisions {
                    nx: [1; 5],
                    ny: 1
                }
            ),
            Err(Error::Geometry(_))
        ));
        let g = demo_geometry();
        assert!(matches!(
            build_mesh(
                g,
                Divisions {
                    nx: [1, 0, 1, 1, 1],
                    ny: 1
                }
            ),
            Err(Error::Geometry(_))
        ));
    }
}
