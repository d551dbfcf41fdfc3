//! ε-sweep of the kinetic solvers against the Dirichlet heat reference.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::corrector::diffusion_coefficient;
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::heat::HeatProfile;
use crate::interface::{build_interface_coefficients, InterfaceCoefficients};
use crate::kinetic::{
    apriori_diagnostics, solve_fv, solve_mc, AprioriReport, FvOptions, KineticField, McEstimate, PiecewiseProfile,
    SimConfig, YGrid,
};
use crate::scattering::{check_diffusive_condition, DiscreteL};
use crate::testfn::SmoothTestFn;

/// Allowed growth between consecutive ε in the monotonicity checks.
pub const MONOTONE_SLACK: f64 = 0.10;

/// Everything a sweep needs besides the ε values.
#[derive(Clone, Debug)]
pub struct Sweep {
    pub config: Config,
    pub bank: Vec<SmoothTestFn>,
}

impl Sweep {
    pub fn new(config: Config) -> Self {
        Self {
            config,
            bank: SmoothTestFn::headline_bank(),
        }
    }

    pub fn with_bank(mut self, bank: Vec<SmoothTestFn>) -> Self {
        self.bank = bank;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableError {
    pub eps: f64,
    pub phi_id: usize,
    pub t: f64,
    pub kinetic: f64,
    pub heat: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug)]
pub struct EpsResult {
    pub eps: f64,
    pub errors: Vec<ObservableError>,
    pub max_error: f64,
    /// max |error| / max |⟨ρ, φ⟩|.
    pub relative_error: f64,
    pub diagnostics: AprioriReport,
    /// Σ_y 𝒟(W(y, ·))Δy at the final snapshot.
    pub local_equilibration: f64,
    /// |mean W − T| over the two cells touching y = 0 at the final snapshot.
    pub interface_distance: f64,
    pub wall_time: f64,
    pub final_field: KineticField,
    pub mc: Option<Vec<McEstimate>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub eps_values: Vec<f64>,
    pub runs: Vec<EpsResult>,
    pub diffusion: f64,
    pub heat: HeatProfile,
    pub snapshot_times: Vec<f64>,
    pub half_width: f64,
    pub checks: Vec<Check>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_errors(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.max_error).collect()
    }

    pub fn errors_len(&self) -> usize {
        self.runs.iter().map(|r| r.errors.len()).sum::<usize>() / self.runs.len().max(1)
    }

    pub fn local_equilibration(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.local_equilibration).collect()
    }

    /// Writes convergence.csv, summary.csv, checks.csv and the .dat files.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("convergence.csv"))?;
        for r in &self.runs {
            for e in &r.errors {
                w.serialize(e)?;
            }
        }
        w.flush()?;

        #[derive(Serialize)]
        struct Summary {
            eps: f64,
            max_abs_error: f64,
            relative_error: f64,
            local_equilibration: f64,
            interface_distance: f64,
            diagnostics_passed: bool,
            wall_time_s: f64,
        }
        let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
        for r in &self.runs {
            w.serialize(Summary {
                eps: r.eps,
                max_abs_error: r.max_error,
                relative_error: r.relative_error,
                local_equilibration: r.local_equilibration,
                interface_distance: r.interface_distance,
                diagnostics_passed: r.diagnostics.passed(),
                wall_time_s: r.wall_time,
            })?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("checks.csv"))?;
        w.write_record(["check", "passed", "detail"])?;
        for c in &self.checks {
            w.write_record([
                c.name.as_str(),
                if c.passed { "true" } else { "false" },
                c.detail.as_str(),
            ])?;
        }
        w.flush()?;

        if self.runs.iter().any(|r| r.mc.is_some()) {
            let mut w = csv::Writer::from_path(dir.join("mc.csv"))?;
            w.write_record(["eps", "phi_id", "t", "estimate", "stderr"])?;
            for r in &self.runs {
                for e in r.mc.iter().flatten() {
                    w.write_record([
                        r.eps.to_string(),
                        e.phi_index.to_string(),
                        e.time.to_string(),
                        e.estimate.to_string(),
                        e.stderr.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }

        let mut f = fs::File::create(dir.join("errors.dat"))?;
        writeln!(
            f,
            "# eps max_abs_error relative_error local_equilibration interface_distance"
        )?;
        for r in &self.runs {
            writeln!(
                f,
                "{} {:e} {:e} {:e} {:e}",
                r.eps, r.max_error, r.relative_error, r.local_equilibration, r.interface_distance
            )?;
        }

        let t_end = *self.snapshot_times.last().expect("nonempty");
        for r in &self.runs {
            let grid = YGrid::new(r.final_field.n_y, self.half_width);
            let mut f = fs::File::create(dir.join(format!("rho_eps{}.dat", r.eps)))?;
            writeln!(f, "# t = {t_end}: y rho_kinetic rho_heat")?;
            for (i, rho) in r.final_field.rho().iter().enumerate() {
                let yc = grid.center(i);
                writeln!(f, "{yc} {rho:e} {:e}", self.heat.eval(t_end, yc)?)?;
            }
        }
        Ok(())
    }
}

/// Σ_y 𝒟(W(y, ·))Δy.
pub fn local_equilibration_check(field: &KineticField, dl: &DiscreteL, dy: f64) -> Result<f64> {
    let mut s = 0.0;
    for i in 0..field.n_y {
        s += dl.dirichlet_form(field.row(i))?;
    }
    Ok(s * dy)
}

fn monotone(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ")
}

struct Shared<'a> {
    model: &'a DispersionModel,
    dl: &'a DiscreteL,
    coeffs: &'a InterfaceCoefficients,
    heat_pairs: &'a [f64],
    times: &'a [f64],
    bank: &'a [SmoothTestFn],
    initial: &'a PiecewiseProfile,
    with_mc: bool,
}

fn run_one(base: &SimConfig, eps: f64, sh: &Shared) -> Result<EpsResult> {
    let start = Instant::now();
    let config = SimConfig { eps, ..base.clone() };
    let y = config.y_grid();
    let w0 = KineticField::from_profile(&y, config.n_k, sh.initial);
    let run = solve_fv(
        &config,
        sh.model,
        sh.dl,
        sh.coeffs,
        &w0,
        sh.times,
        &FvOptions::default(),
    )?;
    let diagnostics = apriori_diagnostics(&run);
    let grid = sh.dl.grid();
    let mut errors = Vec::with_capacity(sh.times.len() * sh.bank.len());
    for (s, snap) in run.snapshots.iter().enumerate() {
        for (m, phi) in sh.bank.iter().enumerate() {
            let kinetic = snap.pairing(&y, grid, phi, snap.time);
            let heat = sh.heat_pairs[s * sh.bank.len() + m];
            let abs_error = (kinetic - heat).abs();
            if !abs_error.is_finite() {
                return Err(Error::NonFinite {
                    time: snap.time,
                    step: run.steps.len(),
                    iy: 0,
                    ik: 0,
                });
            }
            errors.push(ObservableError {
                eps,
                phi_id: m,
                t: snap.time,
                kinetic,
                heat,
                abs_error,
            });
        }
    }
    let max_error = errors.iter().map(|e| e.abs_error).fold(0.0, f64::max);
    let scale = sh.heat_pairs.iter().map(|h| h.abs()).fold(0.0, f64::max);
    let relative_error = if scale > 0.0 { max_error / scale } else { max_error };
    let final_field = run.snapshots.last().expect("at least one snapshot").clone();
    let local_equilibration = local_equilibration_check(&final_field, sh.dl, y.dy())?;
    let h = y.interface_cell();
    let near =
        (final_field.row(h - 1).iter().sum::<f64>() + final_field.row(h).iter().sum::<f64>()) / (2 * config.n_k) as f64;
    let interface_distance = (near - config.temperature).abs();
    let mc = if sh.with_mc {
        Some(solve_mc(&config, sh.model, sh.dl, sh.coeffs, &w0, sh.bank, sh.times)?.estimates)
    } else {
        None
    };
    Ok(EpsResult {
        eps,
        errors,
        max_error,
        relative_error,
        diagnostics,
        local_equilibration,
        interface_distance,
        wall_time: start.elapsed().as_secs_f64(),
        final_field,
        mc,
    })
}

/// Runs the finite-volume solver (and the particle solver if `config.mc`)
/// for every ε, compares the test-function bank against the heat reference
/// and evaluates the sweep checks. ε values are run concurrently; the report
/// is ordered as `eps_values`.
pub fn run_convergence(sweep: &Sweep, eps_values: &[f64]) -> Result<ConvergenceReport> {
    if eps_values.is_empty() {
        return Err(Error::param("eps", "empty list"));
    }
    if sweep.bank.is_empty() {
        return Err(Error::param("bank", "no test functions"));
    }
    let cfg = &sweep.config;
    let base = cfg.sim_config()?;
    let model = cfg.model()?;
    let kernel = cfg.kernel()?;
    let check = check_diffusive_condition(&model, &kernel);
    if !check.admissible {
        return Err(Error::param(
            "kernel",
            "diffusive condition fails for this model and kernel",
        ));
    }
    let grid = cfg.grid()?;
    let dl = DiscreteL::assemble(&kernel, &grid);
    let diffusion = diffusion_coefficient(&model, &dl, base.gamma_scat)?;
    let coeffs = build_interface_coefficients(
        &model,
        base.gamma_therm,
        base.temperature,
        &grid,
        cfg.coefficient_path,
        &cfg.nu_options(),
    )?;
    let mut times = cfg.snapshot_times()?;
    times.sort_by(f64::total_cmp);
    if times.iter().any(|&t| !(t > 0.0 && t <= base.t_end)) {
        return Err(Error::param("snapshot_times", "must lie in (0, t_end]"));
    }
    let initial = cfg.initial_profile()?;
    let y = base.y_grid();
    let w0 = KineticField::from_profile(&y, base.n_k, &initial);
    let heat = HeatProfile::from_w0(&w0, &y, diffusion, base.temperature)?;
    let mut heat_pairs = Vec::with_capacity(times.len() * sweep.bank.len());
    for &t in &times {
        for phi in &sweep.bank {
            heat_pairs.push(heat.pairing(phi, t)?);
        }
    }

    let shared = Shared {
        model: &model,
        dl: &dl,
        coeffs: &coeffs,
        heat_pairs: &heat_pairs,
        times: &times,
        bank: &sweep.bank,
        initial: &initial,
        with_mc: cfg.mc,
    };
    let runs: Vec<EpsResult> = eps_values
        .par_iter()
        .map(|&eps| {
            run_one(&base, eps, &shared).map_err(|e| Error::Sweep {
                eps,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut checks = Vec::new();
    for r in &runs {
        checks.push(Check {
            name: format!("apriori bounds eps={}", r.eps),
            passed: r.diagnostics.passed(),
            detail: format!(
                "l2 {:.3e}/{:.3e}, dirichlet {:.3e}/{:.3e}, trace {:.3e}/{:.3e}",
                r.diagnostics.l2.values.iter().cloned().fold(0.0, f64::max),
                r.diagnostics.l2.bound,
                r.diagnostics.dirichlet.last(),
                r.diagnostics.dirichlet.bound,
                r.diagnostics.trace.last(),
                r.diagnostics.trace.bound
            ),
        });
    }
    let finite = runs.iter().all(|r| r.max_error.is_finite());
    checks.push(Check {
        name: "errors finite".into(),
        passed: finite,
        detail: String::new(),
    });
    if runs.len() > 1 {
        let ordered = eps_values.windows(2).all(|w| w[1] < w[0]);
        let errs: Vec<f64> = runs.iter().map(|r| r.max_error).collect();
        let eq: Vec<f64> = runs.iter().map(|r| r.local_equilibration).collect();
        let dist: Vec<f64> = runs.iter().map(|r| r.interface_distance).collect();
        for (name, v) in [
            ("weak error decreases", &errs),
            ("local equilibration decreases", &eq),
            ("interface value approaches T", &dist),
        ] {
            checks.push(Check {
                name: name.into(),
                passed: ordered && monotone(v, MONOTONE_SLACK),
                detail: fmt_list(v),
            });
        }
    }

    Ok(ConvergenceReport {
        eps_values: eps_values.to_vec(),
        runs,
        diffusion,
        heat,
        snapshot_times: times,
        half_width: base.domain_half_width,
        checks,
    })
}
