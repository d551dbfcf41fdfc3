use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use thermokin::config::Config;
use thermokin::corrector::CorrectorSolution;
use thermokin::harness::{run_convergence, Sweep};
use thermokin::heat::HeatProfile;
use thermokin::interface::{build_interface_coefficients, verify_thermostat_identity, CoefficientPath};
use thermokin::kinetic::{apriori_diagnostics, solve_fv, solve_mc, FvOptions, KineticField};
use thermokin::scattering::DiscreteL;
use thermokin::testfn::SmoothTestFn;
use thermokin::Result;

#[derive(Parser)]
#[command(
    name = "thermokin",
    version,
    about = "Phonon Boltzmann equation with a thermostatted interface"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Fv,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathChoice {
    Auto,
    ClosedForm,
    Quadrature,
}

#[derive(Subcommand)]
enum Command {
    /// Interface coefficients per wavenumber cell.
    Coefficients {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "coeffs.csv")]
        out: PathBuf,
        /// Overrides `coefficient_path` from the config.
        #[arg(long, value_enum)]
        path: Option<PathChoice>,
    },
    /// Diffusion constant and correctors.
    Diffusion {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "corrector.csv")]
        out: PathBuf,
    },
    /// Solve the kinetic equation.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "fv")]
        solver: Solver,
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Dirichlet heat reference on the cell centres of the y-grid.
    Heat {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
        #[arg(long, default_value = "heat.csv")]
        out: PathBuf,
    },
    /// ε-sweep against the heat reference. Exits 1 if any check fails.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
}

fn coefficients(config: &Path, out: &Path, path: Option<PathChoice>) -> Result<()> {
    let cfg = Config::load(config)?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let path = match path {
        None => cfg.coefficient_path,
        Some(PathChoice::Auto) => CoefficientPath::Auto,
        Some(PathChoice::ClosedForm) => CoefficientPath::ClosedForm,
        Some(PathChoice::Quadrature) => CoefficientPath::Quadrature,
    };
    let c = build_interface_coefficients(
        &model,
        cfg.gamma_therm(),
        cfg.temperature(),
        &grid,
        path,
        &cfg.nu_options(),
    )?;
    let residual = verify_thermostat_identity(&c, &model)?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["k", "re_nu", "im_nu", "p_plus", "p_minus", "g_abs", "identity_residual"])?;
    for (j, &k) in grid.midpoints().iter().enumerate() {
        w.write_record(
            [
                k,
                c.nu()[j].re,
                c.nu()[j].im,
                c.p_plus()[j],
                c.p_minus()[j],
                c.g_abs()[j],
                residual[j],
            ]
            .map(|x| x.to_string()),
        )?;
    }
    w.flush()?;
    let worst = residual.iter().cloned().fold(0.0, f64::max);
    println!(
        "{} cells written to {}; max identity residual {worst:.3e}",
        grid.n_k(),
        out.display()
    );
    Ok(())
}

fn diffusion(config: &Path, out: &Path) -> Result<()> {
    let cfg = Config::load(config)?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let dl = DiscreteL::assemble(&cfg.kernel()?, &grid);
    let gamma = cfg.sim.as_ref().map_or(1.0, |s| s.gamma_scat);
    let sol = CorrectorSolution::compute(&model, &dl, gamma)?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["k", "x1", "x2"])?;
    for (j, &k) in grid.midpoints().iter().enumerate() {
        w.write_record([k, sol.x1[j], sol.x2[j]].map(|x| x.to_string()))?;
    }
    w.flush()?;
    println!("D = {:.12}", sol.diffusion);
    Ok(())
}

fn solve(config: &Path, solver: Solver, out: &Path) -> Result<()> {
    let cfg = Config::load(config)?;
    let sim = cfg.sim_config()?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let dl = DiscreteL::assemble(&cfg.kernel()?, &grid);
    let coeffs = build_interface_coefficients(
        &model,
        sim.gamma_therm,
        sim.temperature,
        &grid,
        cfg.coefficient_path,
        &cfg.nu_options(),
    )?;
    let y = sim.y_grid();
    let w0 = KineticField::from_profile(&y, sim.n_k, &cfg.initial_profile()?);
    let times = cfg.snapshot_times()?;
    let bank: Vec<SmoothTestFn> = SmoothTestFn::headline_bank()
        .into_iter()
        .filter(|p| {
            let (lo, hi) = p.support();
            lo >= -sim.domain_half_width && hi <= sim.domain_half_width
        })
        .collect();
    fs::create_dir_all(out)?;
    let mut obs = csv::Writer::from_path(out.join("observables.csv"))?;
    obs.write_record(["t", "phi_id", "estimate", "stderr"])?;
    match solver {
        Solver::Fv => {
            let run = solve_fv(&sim, &model, &dl, &coeffs, &w0, &times, &FvOptions::default())?;
            for snap in &run.snapshots {
                let mut w = csv::Writer::from_path(out.join(format!("snapshot_{}.csv", snap.time)))?;
                w.write_record(["y", "k", "W"])?;
                for i in 0..sim.n_y {
                    for (j, &k) in grid.midpoints().iter().enumerate() {
                        w.write_record([y.center(i), k, snap.get(i, j)].map(|x| x.to_string()))?;
                    }
                }
                w.flush()?;
                for (m, phi) in bank.iter().enumerate() {
                    let e = snap.pairing(&y, &grid, phi, snap.time);
                    obs.write_record([snap.time.to_string(), m.to_string(), e.to_string(), "0".into()])?;
                }
            }
            let rep = apriori_diagnostics(&run);
            let mut w = csv::Writer::from_path(out.join("diagnostics.csv"))?;
            w.write_record([
                "t",
                "l2",
                "dirichlet_cum",
                "trace_cum",
                "l2_bound",
                "dirichlet_bound",
                "trace_bound",
            ])?;
            for i in 0..rep.l2.times.len() {
                w.write_record(
                    [
                        rep.l2.times[i],
                        rep.l2.values[i],
                        rep.dirichlet.values[i],
                        rep.trace.values[i],
                        rep.l2.bound,
                        rep.dirichlet.bound,
                        rep.trace.bound,
                    ]
                    .map(|x| x.to_string()),
                )?;
            }
            w.flush()?;
            println!(
                "{} steps, dt = {:.4e}; a priori bounds {}",
                run.steps.len(),
                run.dt,
                if rep.passed() { "hold" } else { "VIOLATED" }
            );
        }
        Solver::Mc => {
            let run = solve_mc(&sim, &model, &dl, &coeffs, &w0, &bank, &times)?;
            for e in &run.estimates {
                obs.write_record([e.time, e.phi_index as f64, e.estimate, e.stderr].map(|x| x.to_string()))?;
            }
            let c = run.crossings;
            println!(
                "{} particles; crossings: {} transmitted, {} reflected, {} absorbed; {} left the domain",
                run.n_particles, c.transmitted, c.reflected, c.absorbed, c.left_domain
            );
        }
    }
    obs.flush()?;
    Ok(())
}

fn heat(config: &Path, times: &[f64], out: &Path) -> Result<()> {
    let cfg = Config::load(config)?;
    let sim = cfg.sim_config()?;
    let grid = cfg.grid()?;
    let dl = DiscreteL::assemble(&cfg.kernel()?, &grid);
    let d = CorrectorSolution::compute(&cfg.model()?, &dl, sim.gamma_scat)?.diffusion;
    let y = sim.y_grid();
    let w0 = KineticField::from_profile(&y, sim.n_k, &cfg.initial_profile()?);
    let profile = HeatProfile::from_w0(&w0, &y, d, sim.temperature)?;
    let times = if times.is_empty() {
        cfg.snapshot_times()?
    } else {
        times.to_vec()
    };
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["t", "y", "rho"])?;
    for &t in &times {
        for i in 0..y.n_y {
            let yc = y.center(i);
            w.write_record([t, yc, profile.eval(t, yc)?].map(|x| x.to_string()))?;
        }
    }
    w.flush()?;
    println!("D = {d:.12}; {} rows written to {}", times.len() * y.n_y, out.display());
    Ok(())
}

fn converge(config: &Path, eps: &[f64], out: &Path) -> Result<bool> {
    let cfg = Config::load(config)?;
    let eps = if eps.is_empty() {
        cfg.eps.clone().unwrap_or_else(|| vec![0.4, 0.2, 0.1])
    } else {
        eps.to_vec()
    };
    let report = run_convergence(&Sweep::new(cfg), &eps)?;
    report.write(out)?;
    println!("D = {:.8}", report.diffusion);
    for r in &report.runs {
        println!(
            "eps = {:<6} max error {:.4e}  relative {:.4e}  local equilibration {:.4e}  ({:.2} s)",
            r.eps, r.max_error, r.relative_error, r.local_equilibration, r.wall_time
        );
    }
    for c in &report.checks {
        println!("[{}] {} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Coefficients { config, out, path } => coefficients(&config, &out, path).map(|_| true),
        Command::Diffusion { config, out } => diffusion(&config, &out).map(|_| true),
        Command::Solve { config, solver, out } => solve(&config, solver, &out).map(|_| true),
        Command::Heat { config, times, out } => heat(&config, &times, &out).map(|_| true),
        Command::Converge { config, eps, out } => converge(&config, &eps, &out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
