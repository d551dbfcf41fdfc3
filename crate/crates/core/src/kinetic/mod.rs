//! Solvers for the diffusively rescaled kinetic equation
//! ∂tW + ε⁻¹ω̄′(k)∂yW = (γ/ε²)LW on [−L, L] × 𝕋 with the thermostatted
//! interface at y = 0.

mod diagnostics;
mod fv;
mod mc;
mod weak;

pub use diagnostics::{apriori_diagnostics, AprioriReport, BoundSeries, StepRecord};
pub use fv::{solve_fv, FvOptions, FvRun};
pub use mc::{exact_crossing_step, solve_mc, Crossing, McEstimate, McRun, Particle};
pub use weak::weak_residual;

use serde::{Deserialize, Serialize};

use crate::dispersion::WavenumberGrid;
use crate::error::{Error, Result};
use crate::testfn::SmoothTestFn;

/// Treatment of the stiff relaxation sub-step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relaxation {
    /// (I − τL)⁻¹
    #[default]
    BackwardEuler,
    /// e^{τL}
    Exponential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub eps: f64,
    #[serde(default = "one")]
    pub gamma_scat: f64,
    #[serde(default = "one")]
    pub gamma_therm: f64,
    #[serde(default)]
    pub temperature: f64,
    pub domain_half_width: f64,
    pub n_y: usize,
    pub n_k: usize,
    pub t_end: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_particles")]
    pub n_particles: usize,
    #[serde(default)]
    pub relaxation: Relaxation,
}

fn one() -> f64 {
    1.0
}
fn default_cfl() -> f64 {
    0.9
}
fn default_particles() -> usize {
    100_000
}

impl SimConfig {
    /// Headline setup: L = 4, n_y = 400, n_k = 64, t_end = 0.5, T = 1.
    pub fn headline(eps: f64) -> Self {
        Self {
            eps,
            gamma_scat: 1.0,
            gamma_therm: 1.0,
            temperature: 1.0,
            domain_half_width: 4.0,
            n_y: 400,
            n_k: 64,
            t_end: 0.5,
            cfl: 0.9,
            seed: 0,
            n_particles: 100_000,
            relaxation: Relaxation::BackwardEuler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::param("eps", format!("must lie in (0, 1], got {}", self.eps)));
        }
        for (name, v) in [
            ("gamma_scat", self.gamma_scat),
            ("gamma_therm", self.gamma_therm),
            ("domain_half_width", self.domain_half_width),
            ("t_end", self.t_end),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::param(
                "temperature",
                format!("must be >= 0, got {}", self.temperature),
            ));
        }
        if self.n_y == 0 || self.n_y % 2 != 0 {
            return Err(Error::param(
                "n_y",
                format!("must be even and positive, got {}", self.n_y),
            ));
        }
        if self.n_k == 0 || self.n_k % 2 != 0 {
            return Err(Error::param(
                "n_k",
                format!("must be even and positive, got {}", self.n_k),
            ));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Cfl(format!("cfl = {} outside (0, 1]", self.cfl)));
        }
        Ok(())
    }

    pub fn y_grid(&self) -> YGrid {
        YGrid::new(self.n_y, self.domain_half_width)
    }
}

/// Uniform cell grid on [−L, L] with a face at y = 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YGrid {
    pub n_y: usize,
    pub half_width: f64,
}

impl YGrid {
    pub fn new(n_y: usize, half_width: f64) -> Self {
        Self { n_y, half_width }
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.half_width / self.n_y as f64
    }

    /// Face i, i = 0..=n_y; face n_y/2 is exactly 0.
    pub fn face(&self, i: usize) -> f64 {
        let h = self.n_y / 2;
        if i == h {
            0.0
        } else {
            -self.half_width + i as f64 * self.dy()
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.dy()
    }

    /// Index of the first cell on y > 0.
    pub fn interface_cell(&self) -> usize {
        self.n_y / 2
    }

    pub fn cell_of(&self, y: f64) -> Option<usize> {
        if !(y.abs() <= self.half_width) {
            return None;
        }
        let i = ((y + self.half_width) / self.dy()).floor() as usize;
        Some(i.min(self.n_y - 1))
    }
}

/// Cell averages of W on the y × k grid, stored row-major (one row per
/// y-cell), with the interface traces at the stored time.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticField {
    pub n_y: usize,
    pub n_k: usize,
    pub values: Vec<f64>,
    /// Per k-cell (W(t, 0⁻, k), W(t, 0⁺, k)).
    pub boundary_traces: Vec<(f64, f64)>,
    pub time: f64,
}

impl KineticField {
    pub fn constant(n_y: usize, n_k: usize, c: f64) -> Self {
        Self {
            n_y,
            n_k,
            values: vec![c; n_y * n_k],
            boundary_traces: vec![(c, c); n_k],
            time: 0.0,
        }
    }

    /// Samples f at the cell midpoints.
    pub fn from_fn(y: &YGrid, k: &WavenumberGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n_k = k.n_k();
        let mut values = Vec::with_capacity(y.n_y * n_k);
        for i in 0..y.n_y {
            let yc = y.center(i);
            values.extend(k.midpoints().iter().map(|&kk| f(yc, kk)));
        }
        let mut out = Self {
            n_y: y.n_y,
            n_k,
            values,
            boundary_traces: vec![(0.0, 0.0); n_k],
            time: 0.0,
        };
        let h = y.interface_cell();
        for j in 0..n_k {
            out.boundary_traces[j] = (out.get(h - 1, j), out.get(h, j));
        }
        out
    }

    /// k-flat field whose y-profile is the exact cell average of a
    /// piecewise-constant function.
    pub fn from_profile(y: &YGrid, n_k: usize, profile: &PiecewiseProfile) -> Self {
        let dy = y.dy();
        let mut values = Vec::with_capacity(y.n_y * n_k);
        for i in 0..y.n_y {
            let v = profile.cell_average(y.face(i), y.face(i) + dy);
            values.extend(std::iter::repeat_n(v, n_k));
        }
        let h = y.interface_cell();
        let traces = vec![(values[(h - 1) * n_k], values[h * n_k]); n_k];
        Self {
            n_y: y.n_y,
            n_k,
            values,
            boundary_traces: traces,
            time: 0.0,
        }
    }

    pub fn get(&self, iy: usize, ik: usize) -> f64 {
        self.values[iy * self.n_k + ik]
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        &self.values[iy * self.n_k..(iy + 1) * self.n_k]
    }

    /// ρ per y-cell: the k-average of the row.
    pub fn rho(&self) -> Vec<f64> {
        (0..self.n_y)
            .map(|i| self.row(i).iter().sum::<f64>() / self.n_k as f64)
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn check_shape(&self, n_y: usize, n_k: usize) -> Result<()> {
        if self.n_y != n_y || self.n_k != n_k || self.values.len() != n_y * n_k {
            return Err(Error::GridMismatch(format!(
                "field is {}×{}, expected {n_y}×{n_k}",
                self.n_y, self.n_k
            )));
        }
        Ok(())
    }

    /// ⟨W, φ(t)⟩ = Σ W_ij φ̄_ij Δy Δk with exact cell averages of φ.
    pub fn pairing(&self, y: &YGrid, k: &WavenumberGrid, phi: &SmoothTestFn, t: f64) -> f64 {
        let hk = k_cell_averages(k, phi);
        let dy = y.dy();
        let (lo, hi) = phi.support();
        let mut s = 0.0;
        for i in 0..self.n_y {
            let a = y.face(i);
            if a + dy <= lo || a >= hi {
                continue;
            }
            let b = phi.y_cell_average(a, a + dy);
            let r: f64 = self.row(i).iter().zip(&hk).map(|(w, h)| w * h).sum();
            s += b * r;
        }
        s * phi.time_factor(t) * dy * k.cell_width()
    }
}

pub(crate) fn k_cell_averages(k: &WavenumberGrid, phi: &SmoothTestFn) -> Vec<f64> {
    let f = k.faces();
    (0..k.n_k())
        .map(|j| phi.k_profile.cell_average(f[j], f[j + 1]))
        .collect()
}

/// Piecewise-constant function of y: `background` plus `value` on each
/// `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseProfile {
    #[serde(default)]
    pub background: f64,
    #[serde(default)]
    pub pieces: Vec<Piece>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

impl PiecewiseProfile {
    pub fn constant(c: f64) -> Self {
        Self {
            background: c,
            pieces: Vec::new(),
        }
    }

    /// Headline datum 2·1{1 ≤ |y| ≤ 2}.
    pub fn headline() -> Self {
        Self {
            background: 0.0,
            pieces: vec![
                Piece {
                    lo: -2.0,
                    hi: -1.0,
                    value: 2.0,
                },
                Piece {
                    lo: 1.0,
                    hi: 2.0,
                    value: 2.0,
                },
            ],
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        self.background
            + self
                .pieces
                .iter()
                .filter(|p| y >= p.lo && y <= p.hi)
                .map(|p| p.value)
                .sum::<f64>()
    }

    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        let mut s = self.background;
        for p in &self.pieces {
            let overlap = (b.min(p.hi) - a.max(p.lo)).max(0.0);
            s += p.value * overlap / (b - a);
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.pieces {
            if !(p.lo < p.hi) || !p.value.is_finite() {
                return Err(Error::param("initial", format!("bad piece {p:?}")));
            }
        }
        Ok(())
    }
}


#[cfg(test)]
mod solver_tests;
