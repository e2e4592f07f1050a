//! Command-line driver: mesh generation, wellposedness checking, the coupled
//! solve, convergence studies and electrode curves, all steered by one TOML
//! configuration file.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pemfc_core::analysis::{
    ellipticity_margins, estimate_embedding_constant, mms_study, smallness_report,
    HypothesisReport, MmsProblem, PhiBound, SmallnessInputs, EMBEDDING_SAFETY,
};
use pemfc_core::config::RunConfig;
use pemfc_core::error::{Error, Result};
use pemfc_core::materials::verify_bounds;
use pemfc_core::mesh::Mesh;
use pemfc_core::picard::{balances, electrode_currents, run_fixed_point, ProblemData, RegimeInputs};
use pemfc_core::report::RunSummary;
use pemfc_core::{set_threads, vtk};

#[derive(Parser)]
#[command(
    name = "pemfc",
    version,
    about = "Coupled channel and membrane fuel-cell solver with a wellposedness checker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// override the output directory from the config
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// assembly and solve thread count
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// seed for the bound sampling and the embedding search
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Build the strip mesh and export it with region tags
    GenerateMesh(RunArgs),
    /// Evaluate the ellipticity margins and the smallness conditions
    Check(RunArgs),
    /// Run the coupled fixed point and export fields, trace and balances
    Solve(RunArgs),
    /// Manufactured-solution convergence study on the reference geometry
    Mms {
        /// flow, species, heat or potential
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Tabulate an electrode law and its slope on a symmetric grid
    BvCurve {
        #[arg(long)]
        config: PathBuf,
        /// anode or cathode
        #[arg(long)]
        side: String,
        /// half-width of the overpotential grid [V]
        #[arg(long, default_value_t = 0.5)]
        eta_max: f64,
        /// grid size; odd counts hit zero exactly
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenerateMesh(a) => {
            set_threads(a.threads);
            cmd_generate_mesh(&a)
        }
        Command::Check(a) => {
            set_threads(a.threads);
            cmd_check(&a)
        }
        Command::Solve(a) => {
            set_threads(a.threads);
            cmd_solve(&a)
        }
        Command::Mms {
            problem,
            levels,
            out_dir,
            threads,
        } => {
            set_threads(threads);
            cmd_mms(&problem, levels, &out_dir)
        }
        Command::BvCurve {
            config,
            side,
            eta_max,
            points,
            out_dir,
        } => cmd_bv_curve(&config, &side, eta_max, points, &out_dir),
    }
}

fn out_dir(cfg: &RunConfig, args: &RunArgs) -> PathBuf {
    args.out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_generate_mesh(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let mesh = cfg.mesh()?;
    let dir = out_dir(&cfg, args);
    fs::create_dir_all(&dir)?;
    write(&dir.join("mesh.vtk"), &vtk::mesh_vtk(&mesh))?;
    println!(
        "mesh: {} nodes, {} triangles, {} boundary edges",
        mesh.n_nodes(),
        mesh.n_tris(),
        mesh.boundary.len()
    );
    Ok(())
}

struct CheckOutcome {
    report: HypothesisReport,
    s_star_estimated: bool,
}

/// Margins plus smallness evaluation for a loaded config. The embedding
/// constant falls back to the discrete estimate inflated by the safety
/// factor; the dissipation bound falls back to the a posteriori route with
/// the zero iterate when no resolvent constant is configured.
fn wellposedness(mesh: &Mesh, cfg: &RunConfig, seed: u64) -> Result<CheckOutcome> {
    let coeffs = cfg.coefficients()?;
    let bounds = cfg.bounds();
    let bv = cfg.bv();
    let margins = ellipticity_margins(&bounds, 2)?;
    let (s_star, s_star_estimated) = match cfg.solver.s_star {
        Some(s) => (s, false),
        None => (
            EMBEDDING_SAFETY * estimate_embedding_constant(mesh, cfg.solver.q_exponent, seed),
            true,
        ),
    };
    let phi_bound = match cfg.solver.m_r {
        Some(m_r) => PhiBound::Resolvent { m_r },
        None => PhiBound::Measured { value: 0.0 },
    };
    let inputs = SmallnessInputs {
        bounds: &bounds,
        margins,
        r_specific: cfg.materials.r_specific,
        u_in: cfg.materials.u_in,
        u_out: cfg.materials.u_out,
        theta_e: cfg.materials.theta_e,
        j_l: bv.j_lim_max(),
        k_l_min: coeffs.k_l_min(),
        s_star,
        q_exponent: cfg.solver.q_exponent,
        phi_bound,
    };
    let report = smallness_report(mesh, &inputs)?;
    Ok(CheckOutcome {
        report,
        s_star_estimated,
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn print_check_summary(out: &CheckOutcome) {
    let r = &out.report;
    println!(
        "margins: species {:e} {:e}, heat {:e}, potential {:e}",
        r.margins[0], r.margins[1], r.margins[2], r.margins[3]
    );
    let origin = if out.s_star_estimated {
        "discrete estimate with safety factor"
    } else {
        "configured"
    };
    println!("S* = {:e} ({origin}), q = {}", r.s_star, r.q_exponent);
    println!(
        "C0 = {:e}, a = {:e}, b = {:e} (floors {:e}, margins {:e}), c = {:e}",
        r.c0, r.a, r.b, r.b_from_floors, r.b_from_margins, r.c
    );
    match r.m_r {
        Some(m) => println!("dissipation bound R3 = {:e} via resolvent constant {m:e}", r.r3),
        None => println!(
            "dissipation bound R3 = {:e} measured from the iterate (a posteriori)",
            r.r3
        ),
    }
    println!(
        "radii: R1 = {:e}, R2^2 in [{:e}, {:e}]",
        r.r1, r.r2sq_lo, r.r2sq_hi
    );
    println!(
        "ellipticity: {}, small1: {}, small2: {}",
        verdict(r.ellipticity),
        verdict(r.small1),
        verdict(r.small2)
    );
}

fn cmd_check(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let mesh = cfg.mesh()?;
    let out = wellposedness(&mesh, &cfg, args.seed)?;
    let dir = out_dir(&cfg, args);
    fs::create_dir_all(&dir)?;
    if cfg.output.report {
        write(&dir.join("report.json"), &out.report.to_json())?;
    }
    print_check_summary(&out);
    // the laws must actually live inside the declared bounds over the
    // configured state box, or the margins above are meaningless
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    verify_bounds(
        &cfg.coefficients()?,
        &cfg.bounds(),
        cfg.materials.state_box,
        10_000,
        &mut rng,
    )?;
    if !out.report.ellipticity {
        return Err(Error::OutOfRegime(format!(
            "a coercivity margin is nonpositive: species {:e} {:e}, heat {:e}, potential {:e}",
            out.report.margins[0],
            out.report.margins[1],
            out.report.margins[2],
            out.report.margins[3]
        )));
    }
    Ok(())
}

fn cmd_solve(args: &RunArgs) -> Result<()> {
    let cfg = RunConfig::load(&args.config)?;
    let mesh = cfg.mesh()?;
    let coeffs = cfg.coefficients()?;
    let bounds = cfg.bounds();
    let bv = cfg.bv();

    // pre-solve check: failures downgrade to a warning, the solver runs
    // regardless and the warning is echoed in the summary and the balances
    let mut warning: Option<String> = None;
    let mut note = |w: String| match &mut warning {
        Some(prev) => {
            prev.push_str("; ");
            prev.push_str(&w);
        }
        None => warning = Some(w),
    };
    let mut regime_ready = None;
    let mut report_json = None;
    match wellposedness(&mesh, &cfg, args.seed) {
        Ok(out) => {
            report_json = Some(out.report.to_json());
            if out.report.ellipticity {
                regime_ready = Some((out.report.margins, out.report.s_star));
            } else {
                note(format!(
                    "outside the coercive regime: margins {:e} {:e} {:e} {:e}",
                    out.report.margins[0],
                    out.report.margins[1],
                    out.report.margins[2],
                    out.report.margins[3]
                ));
            }
            if !out.report.small1 && !out.report.small2 {
                note(
                    "smallness conditions fail; the iteration has no contraction guarantee"
                        .to_string(),
                );
            }
        }
        Err(e) => note(e.to_string()),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    if let Err(e) = verify_bounds(&coeffs, &bounds, cfg.materials.state_box, 10_000, &mut rng) {
        note(e.to_string());
    }

    let data = ProblemData {
        coeffs: &coeffs,
        bv: &bv,
        r_specific: cfg.materials.r_specific,
        u_in: cfg.materials.u_in,
        u_out: cfg.materials.u_out,
        theta_e: cfg.materials.theta_e,
        species_flux: cfg.species_flux(),
    };
    let regime = regime_ready
        .filter(|_| cfg.solver.check_estimates)
        .map(|(margins, s_star)| RegimeInputs {
            bounds: &bounds,
            margins,
            s_star,
            q_exponent: cfg.solver.q_exponent,
            t_exponent: cfg.solver.t_exponent,
        });
    let run = run_fixed_point(&mesh, &data, &cfg.picard(), regime.as_ref())?;

    let dir = out_dir(&cfg, args);
    fs::create_dir_all(&dir)?;
    if cfg.output.trace {
        write(&dir.join("trace.csv"), &run.trace.to_csv())?;
    }
    if cfg.output.fields {
        write(
            &dir.join("fields.vtk"),
            &vtk::fields_vtk(&mesh, &run.state, cfg.materials.e_cell),
        )?;
    }
    if cfg.output.mesh {
        write(&dir.join("mesh.vtk"), &vtk::mesh_vtk(&mesh))?;
    }
    let bal = balances(&mesh, &data, &run.state);
    let (anode, cathode) = electrode_currents(&mesh, &data, &run.state);
    let current_scale = anode.abs() + bv.j_lim_max() * mesh.measures().len_gamma_c;
    let summary = RunSummary::from_trace(&run.trace, bal, anode, cathode, current_scale, warning.clone());
    if cfg.output.balances {
        write(&dir.join("balances.json"), &summary.to_json())?;
    }
    if let (true, Some(json)) = (cfg.output.report, &report_json) {
        write(&dir.join("report.json"), json)?;
    }

    if summary.converged {
        println!(
            "converged in {} iterations, final relative update {:e}",
            summary.iterations, summary.final_update
        );
    } else {
        println!(
            "stopped after {} iterations, last relative update {:e}",
            summary.iterations, summary.final_update
        );
    }
    println!(
        "currents: anode {:e}, cathode {:e} (relative imbalance {:e})",
        anode,
        cathode,
        summary.current_imbalance_rel()
    );
    println!(
        "darcy net flux {:e}, heat balance {:e}",
        bal.darcy_net_flux, bal.heat_balance
    );
    if summary.estimates_checked > 0 {
        println!(
            "a priori estimates: {} checked, {} failed",
            summary.estimates_checked, summary.estimates_failed
        );
    }
    if let Some(w) = &warning {
        println!("warning: {w}");
    }
    run.require_converged().map(|_| ())
}

fn cmd_mms(problem: &str, levels: usize, dir: &Path) -> Result<()> {
    let problem = MmsProblem::parse(problem).ok_or_else(|| {
        Error::Config(format!(
            "unknown study {problem:?}; expected flow, species, heat or potential"
        ))
    })?;
    let study = mms_study(problem, levels)?;
    let ol = study.orders_l2();
    let oh = study.orders_h1();
    let mut csv = String::from("level,h,err_l2,err_h1,order_l2,order_h1\n");
    for (i, l) in study.levels.iter().enumerate() {
        let (o2, o1) = if i == 0 {
            (String::new(), String::new())
        } else {
            (format!("{:e}", ol[i - 1]), format!("{:e}", oh[i - 1]))
        };
        csv.push_str(&format!(
            "{},{:e},{:e},{:e},{o2},{o1}\n",
            l.level, l.h, l.err_l2, l.err_h1
        ));
    }
    fs::create_dir_all(dir)?;
    write(&dir.join(format!("mms_{}.csv", study.problem.name())), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_bv_curve(config: &Path, side: &str, eta_max: f64, points: usize, dir: &Path) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let electrode = match side {
        "anode" => cfg.materials.anode,
        "cathode" => cfg.materials.cathode,
        other => {
            return Err(Error::Config(format!(
                "side must be anode or cathode, got {other:?}"
            )))
        }
    };
    if points < 2 || !(eta_max > 0.0) {
        return Err(Error::Config(format!(
            "need at least two grid points and a positive range, got {points} and {eta_max}"
        )));
    }
    let m = (points - 1) as f64;
    let mut csv = String::from("eta,j,djdeta\n");
    for i in 0..points {
        // integer offsets keep the grid exactly symmetric, so the odd and
        // even symmetries of the law hold bit for bit in the table
        let t = (2 * i) as f64 - m;
        let eta = eta_max * (t / m);
        csv.push_str(&format!(
            "{:e},{:e},{:e}\n",
            eta,
            electrode.current(eta),
            electrode.current_deriv(eta)
        ));
    }
    fs::create_dir_all(dir)?;
    write(&dir.join(format!("bv_{side}.csv")), &csv)?;
    Ok(())
}
