//! Monte Carlo particle method for W̃ = W − T.
//!
//! Particles fly at ε⁻¹ω̄′ between exponential scattering events of rate
//! (γ/ε²)R, jump in k according to the rows of the discrete generator, and
//! at every crossing of y = 0 are reflected (k → −k) with probability p₋,
//! transmitted with p₊ or absorbed with 𝔤. Velocities and coefficients are
//! looked up by k-cell, so the particle system and the finite-volume scheme
//! discretize the same k-model.

use rand::distr::Open01 as OpenOpen01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{KineticField, SimConfig, YGrid};
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::interface::InterfaceCoefficients;
use crate::scattering::DiscreteL;
use crate::testfn::SmoothTestFn;

/// Particles per deterministic reduction chunk.
const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub y: f64,
    pub k: f64,
    pub cell: usize,
    pub weight: f64,
    pub alive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    None,
    Transmitted,
    Reflected,
    Absorbed,
}

/// Moves `p` for `dt_free` at `velocity`, resolving at most one crossing of
/// y = 0 at its exact time. The draw `u` ∈ [0, 1) selects reflection
/// (u < p₋), transmission (u < p₋ + p₊) or absorption.
pub fn exact_crossing_step(
    p: &mut Particle,
    dt_free: f64,
    velocity: f64,
    mirror_cell: usize,
    p_plus: f64,
    p_minus: f64,
    u: f64,
) -> Crossing {
    let toward = (p.y < 0.0 && velocity > 0.0) || (p.y > 0.0 && velocity < 0.0);
    if !toward || velocity.abs() * dt_free < p.y.abs() {
        p.y += velocity * dt_free;
        return Crossing::None;
    }
    let rem = dt_free - (-p.y / velocity);
    if u < p_minus {
        p.k = -p.k;
        p.cell = mirror_cell;
        p.y = -velocity * rem;
        Crossing::Reflected
    } else if u < p_minus + p_plus {
        p.y = velocity * rem;
        Crossing::Transmitted
    } else {
        p.y = 0.0;
        p.alive = false;
        Crossing::Absorbed
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub time: f64,
    pub phi_index: usize,
    /// Estimate of ⟨W(t), φ⟩.
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McRun {
    /// Ordered by snapshot time, then by test function.
    pub estimates: Vec<McEstimate>,
    /// Total alive |weight| / (N·‖W̃₀‖₁) per snapshot time.
    pub alive_fraction: Vec<f64>,
    pub crossings: CrossingCounts,
    pub n_particles: usize,
    /// ‖W̃₀‖₁, the modulus of each particle weight.
    pub mass: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CrossingCounts {
    pub transmitted: u64,
    pub reflected: u64,
    pub absorbed: u64,
    pub left_domain: u64,
}

impl CrossingCounts {
    fn add(&mut self, o: &CrossingCounts) {
        self.transmitted += o.transmitted;
        self.reflected += o.reflected;
        self.absorbed += o.absorbed;
        self.left_domain += o.left_domain;
    }
}

struct Tables<'a> {
    y: YGrid,
    faces: Vec<f64>,
    dk: f64,
    speed: Vec<f64>,
    rate: Vec<f64>,
    /// Row-wise cumulative jump weights (self-jumps excluded).
    jump_cdf: Vec<Vec<f64>>,
    mirror: Vec<usize>,
    coeffs: &'a InterfaceCoefficients,
    cell_cdf: Vec<f64>,
    signs: Vec<f64>,
    n_k: usize,
}

struct ChunkSums {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    alive: Vec<f64>,
    counts: CrossingCounts,
}

fn simulate_chunk(
    tab: &Tables,
    chunk: usize,
    n_particles: usize,
    seed: u64,
    mass: f64,
    tests: &[SmoothTestFn],
    times: &[f64],
) -> ChunkSums {
    let n_obs = times.len() * tests.len();
    let mut out = ChunkSums {
        sum: vec![0.0; n_obs],
        sumsq: vec![0.0; n_obs],
        alive: vec![0.0; times.len()],
        counts: CrossingCounts::default(),
    };
    let lo = chunk * CHUNK;
    let hi = (lo + CHUNK).min(n_particles);
    let total = *tab.cell_cdf.last().expect("nonempty");
    let dy = tab.y.dy();
    for idx in lo..hi {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(idx as u64);
        let u: f64 = rng.random();
        let c = tab
            .cell_cdf
            .partition_point(|&x| x <= u * total)
            .min(tab.cell_cdf.len() - 1);
        let (iy, jk) = (c / tab.n_k, c % tab.n_k);
        let uy: f64 = rng.sample(OpenOpen01);
        let uk: f64 = rng.sample(OpenOpen01);
        let mut p = Particle {
            y: tab.y.face(iy) + uy * dy,
            k: tab.faces[jk] + uk * tab.dk,
            cell: jk,
            weight: tab.signs[c] * mass,
            alive: true,
        };
        let mut t = 0.0;
        let mut next_scatter = t + exp_draw(&mut rng, tab.rate[p.cell]);
        let mut snap = 0;
        while snap < times.len() {
            let t_next = next_scatter.min(times[snap]);
            if p.alive {
                let u: f64 = rng.random();
                let j = p.cell;
                let ev = exact_crossing_step(
                    &mut p,
                    t_next - t,
                    tab.speed[j],
                    tab.mirror[j],
                    tab.coeffs.p_plus()[j],
                    tab.coeffs.p_minus()[j],
                    u,
                );
                match ev {
                    Crossing::None => {}
                    Crossing::Transmitted => out.counts.transmitted += 1,
                    Crossing::Reflected => out.counts.reflected += 1,
                    Crossing::Absorbed => out.counts.absorbed += 1,
                }
                if p.alive && p.y.abs() > tab.y.half_width {
                    p.alive = false;
                    out.counts.left_domain += 1;
                }
            }
            t = t_next;
            if t_next == times[snap] {
                if p.alive {
                    out.alive[snap] += p.weight.abs();
                    for (m, phi) in tests.iter().enumerate() {
                        let x = p.weight * phi.value(t, p.y, p.k);
                        out.sum[snap * tests.len() + m] += x;
                        out.sumsq[snap * tests.len() + m] += x * x;
                    }
                }
                snap += 1;
                continue;
            }
            if !p.alive {
                // Nothing left to simulate; remaining snapshots see a dead particle.
                next_scatter = f64::INFINITY;
                continue;
            }
            let row = &tab.jump_cdf[p.cell];
            let u: f64 = rng.random();
            let target = row.partition_point(|&x| x <= u * row[row.len() - 1]).min(tab.n_k - 1);
            let uk: f64 = rng.sample(OpenOpen01);
            p.cell = target;
            p.k = tab.faces[target] + uk * tab.dk;
            next_scatter = t + exp_draw(&mut rng, tab.rate[p.cell]);
        }
    }
    out
}

fn exp_draw(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.sample(OpenOpen01);
    -u.ln() / rate
}

/// Estimates ⟨W(t), φ⟩ for every snapshot time and test function, as
/// T⟨1, φ⟩ + (1/N)Σ w_i φ(t, y_i, k_i) over the alive particles. Initial
/// positions are drawn cell by cell with probability ∝ |W̃₀| and uniformly
/// inside the cell; weights are ±‖W̃₀‖₁. Particles leaving [−L, L] are
/// removed. Results are bit-identical for a given seed.
pub fn solve_mc(
    config: &SimConfig,
    model: &DispersionModel,
    dl: &DiscreteL,
    coeffs: &InterfaceCoefficients,
    w0: &KineticField,
    tests: &[SmoothTestFn],
    snapshot_times: &[f64],
) -> Result<McRun> {
    config.validate()?;
    if config.n_particles == 0 {
        return Err(Error::param("n_particles", "must be positive"));
    }
    let n_k = config.n_k;
    if dl.n_k() != n_k || coeffs.grid() != dl.grid() {
        return Err(Error::GridMismatch(
            "scattering and coefficient grids differ from the config".into(),
        ));
    }
    w0.check_shape(config.n_y, n_k)?;
    let mut times: Vec<f64> = if snapshot_times.is_empty() {
        vec![config.t_end]
    } else {
        snapshot_times.to_vec()
    };
    times.sort_by(f64::total_cmp);
    if times.iter().any(|t| !(*t >= 0.0 && *t <= config.t_end)) {
        return Err(Error::param("snapshot_times", "must lie in [0, t_end]"));
    }

    let y = config.y_grid();
    let grid = dl.grid();
    let t_ref = config.temperature;
    let cell_area = y.dy() * grid.cell_width();
    let mut cell_cdf = Vec::with_capacity(w0.values.len());
    let mut signs = Vec::with_capacity(w0.values.len());
    let mut acc = 0.0;
    for &w in &w0.values {
        let d = w - t_ref;
        if !d.is_finite() {
            return Err(Error::param("w0", "non-finite initial value"));
        }
        acc += d.abs();
        cell_cdf.push(acc);
        signs.push(d.signum());
    }
    let mass = acc * cell_area;
    let n = config.n_particles;

    let rate_scale = config.gamma_scat / (config.eps * config.eps);
    let m = dl.matrix();
    let jump_cdf: Vec<Vec<f64>> = (0..n_k)
        .map(|j| {
            let mut s = 0.0;
            (0..n_k)
                .map(|i| {
                    if i != j {
                        s += m[(j, i)];
                    }
                    s
                })
                .collect()
        })
        .collect();
    let tab = Tables {
        y,
        faces: grid.faces(),
        dk: grid.cell_width(),
        speed: model.cell_velocities(grid).iter().map(|v| v / config.eps).collect(),
        rate: (0..n_k).map(|j| -m[(j, j)] * rate_scale).collect(),
        jump_cdf,
        mirror: (0..n_k).map(|j| grid.mirror(j)).collect(),
        coeffs,
        cell_cdf,
        signs,
        n_k,
    };

    let n_obs = times.len() * tests.len();
    let mut total = ChunkSums {
        sum: vec![0.0; n_obs],
        sumsq: vec![0.0; n_obs],
        alive: vec![0.0; times.len()],
        counts: CrossingCounts::default(),
    };
    if mass > 0.0 {
        let n_chunks = n.div_ceil(CHUNK);
        let parts: Vec<ChunkSums> = (0..n_chunks)
            .into_par_iter()
            .map(|c| simulate_chunk(&tab, c, n, config.seed, mass, tests, &times))
            .collect();
        for part in &parts {
            for i in 0..n_obs {
                total.sum[i] += part.sum[i];
                total.sumsq[i] += part.sumsq[i];
            }
            for i in 0..times.len() {
                total.alive[i] += part.alive[i];
            }
            total.counts.add(&part.counts);
        }
    }

    let nf = n as f64;
    let mut estimates = Vec::with_capacity(n_obs);
    for (s, &t) in times.iter().enumerate() {
        for (mi, phi) in tests.iter().enumerate() {
            let i = s * tests.len() + mi;
            let mean = total.sum[i] / nf;
            let var = (total.sumsq[i] / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
            let estimate = t_ref * phi.integral(t) + mean;
            if !estimate.is_finite() {
                return Err(Error::NonFinite {
                    time: t,
                    step: 0,
                    iy: 0,
                    ik: mi,
                });
            }
            estimates.push(McEstimate {
                time: t,
                phi_index: mi,
                estimate,
                stderr: (var / nf).sqrt(),
            });
        }
    }
    let alive_fraction = total
        .alive
        .iter()
        .map(|a| if mass > 0.0 { a / (nf * mass) } else { 0.0 })
        .collect();
    Ok(McRun {
        estimates,
        alive_fraction,
        crossings: total.counts,
        n_particles: n,
        mass,
    })
}
