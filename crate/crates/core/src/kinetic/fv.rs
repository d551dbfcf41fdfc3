//! Finite-volume solver: first-order upwind advection with interface ghost
//! values, then an implicit relaxation step in k shared by all y-cells.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::diagnostics::StepRecord;
use super::{KineticField, Relaxation, SimConfig, YGrid};
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::interface::InterfaceCoefficients;
use crate::scattering::DiscreteL;

#[derive(Clone, Debug)]
pub struct FvOptions {
    /// Record per-step diagnostics (costs one extra product per step).
    pub diagnostics: bool,
    /// Keep the field after every step.
    pub store_trajectory: bool,
}

impl Default for FvOptions {
    fn default() -> Self {
        Self {
            diagnostics: true,
            store_trajectory: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FvRun {
    pub snapshots: Vec<KineticField>,
    pub steps: Vec<StepRecord>,
    /// ‖W̃₀‖² = Σ (W₀ − T)² Δy Δk.
    pub initial_l2: f64,
    pub dt: f64,
    /// W₀ followed by the field after each step, if requested.
    pub trajectory: Vec<KineticField>,
    pub y_grid: YGrid,
    pub eps: f64,
    pub gamma_scat: f64,
    pub temperature: f64,
}

struct Stepper<'a> {
    y: YGrid,
    n_k: usize,
    eps: f64,
    temperature: f64,
    v: Vec<f64>,
    mirror: Vec<usize>,
    coeffs: &'a InterfaceCoefficients,
    ghost_lo: Vec<f64>,
    ghost_hi: Vec<f64>,
    l: &'a DMatrix<f64>,
    tau_scale: f64,
    relaxation: Relaxation,
    eigen: Option<SymmetricEigen<f64, nalgebra::Dyn>>,
    cache: HashMap<u64, DMatrix<f64>>,
    dk: f64,
}

impl Stepper<'_> {
    /// Outgoing interface values (W(0⁺, k) for v > 0, W(0⁻, k) for v < 0)
    /// computed from the cells adjacent to the interface.
    fn ghosts(&self, w: &[f64]) -> Vec<f64> {
        let n_k = self.n_k;
        let h = self.y.interface_cell();
        let left = &w[(h - 1) * n_k..h * n_k];
        let right = &w[h * n_k..(h + 1) * n_k];
        let (pp, pm, g) = (self.coeffs.p_plus(), self.coeffs.p_minus(), self.coeffs.g_abs());
        let t = self.temperature;
        (0..n_k)
            .map(|j| {
                let m = self.mirror[j];
                if self.v[j] > 0.0 {
                    pm[j] * right[m] + pp[j] * left[j] + t * g[j]
                } else {
                    pm[j] * left[m] + pp[j] * right[j] + t * g[j]
                }
            })
            .collect()
    }

    fn traces(&self, w: &[f64]) -> Vec<(f64, f64)> {
        let n_k = self.n_k;
        let h = self.y.interface_cell();
        let out = self.ghosts(w);
        (0..n_k)
            .map(|j| {
                if self.v[j] > 0.0 {
                    (w[(h - 1) * n_k + j], out[j])
                } else {
                    (out[j], w[h * n_k + j])
                }
            })
            .collect()
    }

    fn advect(&self, w: &[f64], next: &mut [f64], dt: f64, rec: &mut StepRecord) {
        let n_k = self.n_k;
        let n_y = self.y.n_y;
        let h = self.y.interface_cell();
        let out = self.ghosts(w);
        let lam = dt / (self.eps * self.y.dy());
        next.par_chunks_mut(n_k).enumerate().for_each(|(i, row)| {
            for j in 0..n_k {
                let c = self.v[j] * lam;
                let wij = w[i * n_k + j];
                row[j] = if c > 0.0 {
                    let inflow = if i == 0 {
                        self.ghost_lo[j]
                    } else if i == h {
                        out[j]
                    } else {
                        w[(i - 1) * n_k + j]
                    };
                    wij - c * (wij - inflow)
                } else {
                    let inflow = if i == n_y - 1 {
                        self.ghost_hi[j]
                    } else if i == h - 1 {
                        out[j]
                    } else {
                        w[(i + 1) * n_k + j]
                    };
                    wij - c * (inflow - wij)
                };
            }
        });

        if rec.enabled {
            let t = self.temperature;
            let (pp, pm, g) = (self.coeffs.p_plus(), self.coeffs.p_minus(), self.coeffs.g_abs());
            let mut trace = 0.0;
            let mut flux = 0.0;
            let mut margin = f64::INFINITY;
            let mut outer = 0.0;
            for j in 0..n_k {
                let m = self.mirror[j];
                if self.v[j] > 0.0 {
                    let x = w[(h - 1) * n_k + j] - t;
                    let y = w[h * n_k + m] - t;
                    let u = out[j] - t;
                    let z = out[m] - t;
                    let q = x * x + y * y - u * u - z * z;
                    let lm = 1.0 - (pp[j] + pm[j]).powi(2);
                    margin = margin.min(q - lm * (x * x + y * y));
                    flux += self.v[j] * q;
                    trace += self.v[j] * g[j] * (x * x + u * u) + self.v[j].abs() * g[m] * (y * y + z * z);
                    let gin = self.ghost_lo[j] - t;
                    let gout = w[(n_y - 1) * n_k + j] - t;
                    outer += self.v[j] * (gin * gin - gout * gout);
                } else if self.v[j] < 0.0 {
                    let gin = self.ghost_hi[j] - t;
                    let gout = w[j] - t;
                    outer += self.v[j].abs() * (gin * gin - gout * gout);
                }
            }
            rec.trace = trace * self.dk;
            rec.interface_flux = flux * self.dk / self.eps;
            rec.interface_margin = margin;
            rec.outer_flux = outer * self.dk / self.eps;
        }
    }

    fn relax_matrix(&mut self, dt: f64) -> Result<&DMatrix<f64>> {
        let key = dt.to_bits();
        if !self.cache.contains_key(&key) {
            let tau = dt * self.tau_scale;
            let n = self.n_k;
            let m = match self.relaxation {
                Relaxation::BackwardEuler => {
                    let a = DMatrix::identity(n, n) - self.l * tau;
                    a.try_inverse()
                        .ok_or_else(|| Error::Singular("relaxation matrix is singular".into()))?
                }
                Relaxation::Exponential => {
                    if self.eigen.is_none() {
                        self.eigen = Some(SymmetricEigen::new(self.l.clone()));
                    }
                    let e = self.eigen.as_ref().expect("just set");
                    let d = e.eigenvalues.map(|lam| (tau * lam).exp());
                    let vd = DMatrix::from_fn(n, n, |i, j| e.eigenvectors[(i, j)] * d[j]);
                    vd * e.eigenvectors.transpose()
                }
            };
            self.cache.insert(key, m);
        }
        Ok(&self.cache[&key])
    }
}

fn sq_norm(w: &[f64], t: f64, cell: f64) -> f64 {
    w.iter().map(|x| (x - t) * (x - t)).sum::<f64>() * cell
}

/// Runs the finite-volume scheme from `w0` and returns the field at each
/// snapshot time (at t_end only if `snapshot_times` is empty).
///
/// Outer boundaries at ±L take their inflow from the initial values of the
/// boundary cells.
pub fn solve_fv(
    config: &SimConfig,
    model: &DispersionModel,
    dl: &DiscreteL,
    coeffs: &InterfaceCoefficients,
    w0: &KineticField,
    snapshot_times: &[f64],
    opts: &FvOptions,
) -> Result<FvRun> {
    config.validate()?;
    let n_k = config.n_k;
    let y = config.y_grid();
    if dl.n_k() != n_k || coeffs.grid().n_k() != n_k || dl.grid() != coeffs.grid() {
        return Err(Error::GridMismatch(format!(
            "config n_k = {n_k}, scattering n_k = {}, coefficients n_k = {}",
            dl.n_k(),
            coeffs.grid().n_k()
        )));
    }
    w0.check_shape(config.n_y, n_k)?;
    if (coeffs.temperature() - config.temperature).abs() > 0.0 {
        return Err(Error::Config(format!(
            "coefficient table built for T = {}, run uses T = {}",
            coeffs.temperature(),
            config.temperature
        )));
    }
    let mut times: Vec<f64> = if snapshot_times.is_empty() {
        vec![config.t_end]
    } else {
        snapshot_times.to_vec()
    };
    for &t in &times {
        if !(t >= 0.0 && t <= config.t_end) {
            return Err(Error::param("snapshot_times", format!("{t} outside [0, t_end]")));
        }
    }
    times.sort_by(f64::total_cmp);

    let grid = dl.grid();
    let v = model.cell_velocities(grid);
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let dt0 = config.cfl * config.eps * y.dy() / vmax;
    if !(dt0 > 0.0 && dt0.is_finite()) {
        return Err(Error::Cfl(format!("time step {dt0}")));
    }
    let cell = y.dy() * grid.cell_width();
    let t_ref = config.temperature;

    let mut st = Stepper {
        y,
        n_k,
        eps: config.eps,
        temperature: t_ref,
        v,
        mirror: (0..n_k).map(|j| grid.mirror(j)).collect(),
        coeffs,
        ghost_lo: w0.row(0).to_vec(),
        ghost_hi: w0.row(config.n_y - 1).to_vec(),
        l: dl.matrix(),
        tau_scale: config.gamma_scat / (config.eps * config.eps),
        relaxation: config.relaxation,
        eigen: None,
        cache: HashMap::new(),
        dk: grid.cell_width(),
    };

    let mut w = w0.values.clone();
    let mut next = vec![0.0; w.len()];
    let initial_l2 = sq_norm(&w, t_ref, cell);
    let snapshot = |w: &[f64], t: f64, st: &Stepper| KineticField {
        n_y: config.n_y,
        n_k,
        values: w.to_vec(),
        boundary_traces: st.traces(w),
        time: t,
    };
    let mut run = FvRun {
        snapshots: Vec::with_capacity(times.len()),
        steps: Vec::new(),
        initial_l2,
        dt: dt0,
        trajectory: Vec::new(),
        y_grid: y,
        eps: config.eps,
        gamma_scat: config.gamma_scat,
        temperature: t_ref,
    };
    if opts.store_trajectory {
        run.trajectory.push(snapshot(&w, 0.0, &st));
    }

    let mut t = 0.0;
    let mut step = 0usize;
    for &target in &times {
        while target - t > 1e-12 * target.max(1.0) {
            let remaining = target - t;
            let dt = if remaining <= dt0 * (1.0 + 1e-9) {
                remaining
            } else {
                dt0
            };
            let mut rec = StepRecord {
                enabled: opts.diagnostics,
                dt,
                ..Default::default()
            };
            st.advect(&w, &mut next, dt, &mut rec);
            let b = st.relax_matrix(dt)?;
            let field = DMatrix::from_vec(n_k, config.n_y, std::mem::take(&mut next));
            let relaxed = b * &field;
            next = field.data.into();
            w.copy_from_slice(relaxed.as_slice());
            step += 1;
            t = if dt == remaining { target } else { t + dt };

            if let Some(pos) = w.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    time: t,
                    step,
                    iy: pos / n_k,
                    ik: pos % n_k,
                });
            }
            if opts.diagnostics {
                let lw = st.l * &relaxed;
                let d: f64 = relaxed.iter().zip(lw.iter()).map(|(a, b)| a * b).sum();
                rec.dirichlet = -2.0 * d * st.dk * y.dy();
                rec.time = t;
                rec.l2 = sq_norm(&w, t_ref, cell);
                run.steps.push(rec);
            }
            if opts.store_trajectory {
                run.trajectory.push(snapshot(&w, t, &st));
            }
        }
        run.snapshots.push(snapshot(&w, t, &st));
    }
    Ok(run)
}
