//! Solver core for a planar five-strip fuel cell section:
//! two gas channels (compressible Stokes) flanking a porous sandwich
//! (gas-diffusion layers + membrane, Darcy), coupled to species, heat and
//! charge transport with Butler-Volmer electrode kinetics on the
//! membrane interfaces, plus a wellposedness calculator that evaluates
//! ellipticity margins, a-priori energy estimates and smallness conditions
//! for the outer fixed-point iteration.

pub mod analysis;
pub mod config;
pub mod constants;
pub mod error;
pub mod femcore;
pub mod flow;
pub mod materials;
pub mod mesh;
pub mod picard;
pub mod report;
pub mod tec;
pub mod vtk;

pub use error::Error;

/// Configure linear-solver parallelism. `1` (default) is fully sequential
/// and byte-reproducible; larger values enable the backend thread pool.
pub fn set_threads(n: usize) {
    if n <= 1 {
        faer::set_global_parallelism(faer::Par::Seq);
    } else {
        faer::set_global_parallelism(faer::Par::rayon(n));
    }
}
