//! Weak-form residual of a stored finite-volume trajectory.

use super::fv::FvRun;
use super::k_cell_averages;
use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::scattering::DiscreteL;
use crate::testfn::SmoothTestFn;

/// For φ = Σ c_m φ_m supported away from y = 0, returns
/// ∫₀ᵗ ⟨W̃, ∂tφ + ε⁻¹ω̄′∂yφ + γε⁻²Lφ⟩ ds + ⟨W̃₀, φ(0)⟩ − ⟨W̃(t), φ(t)⟩,
/// with the time integral by the trapezoid rule over the stored steps.
pub fn weak_residual(
    run: &FvRun,
    model: &DispersionModel,
    dl: &DiscreteL,
    tests: &[(f64, SmoothTestFn)],
) -> Result<f64> {
    if run.trajectory.len() < 2 {
        return Err(Error::param("trajectory", "run was not stored step by step"));
    }
    for (_, phi) in tests {
        phi.require_away_from_interface()?;
    }
    let y = run.y_grid;
    let grid = dl.grid();
    let n_k = grid.n_k();
    let dy = y.dy();
    let cell = dy * grid.cell_width();
    let v = model.cell_velocities(grid);
    let (eps, gamma, t_ref) = (run.eps, run.gamma_scat, run.temperature);
    let mut total = 0.0;
    for &(c, ref phi) in tests {
        let b: Vec<f64> = (0..y.n_y)
            .map(|i| phi.y_cell_average(y.face(i), y.face(i) + dy))
            .collect();
        let db: Vec<f64> = (0..y.n_y)
            .map(|i| (phi.y_derivatives(y.face(i) + dy)[0] - phi.y_derivatives(y.face(i))[0]) / dy)
            .collect();
        let h = k_cell_averages(grid, phi);
        let lh = dl.apply(&h)?;
        let rate = -phi.decay_rate;
        // ⟨W̃(t), 𝒜φ(t)⟩ and ⟨W̃(t), φ(t)⟩.
        let pair = |f: &super::KineticField| {
            let mut gen = 0.0;
            let mut plain = 0.0;
            for i in 0..y.n_y {
                if b[i] == 0.0 && db[i] == 0.0 {
                    continue;
                }
                let row = f.row(i);
                for j in 0..n_k {
                    let w = row[j] - t_ref;
                    plain += w * b[i] * h[j];
                    gen += w * (rate * b[i] * h[j] + v[j] * db[i] * h[j] / eps + gamma * b[i] * lh[j] / (eps * eps));
                }
            }
            let s = phi.time_factor(f.time) * cell;
            (gen * s, plain * s)
        };
        let pairs: Vec<(f64, f64)> = run.trajectory.iter().map(pair).collect();
        let mut integral = 0.0;
        for w in 1..pairs.len() {
            let dt = run.trajectory[w].time - run.trajectory[w - 1].time;
            integral += 0.5 * dt * (pairs[w].0 + pairs[w - 1].0);
        }
        let r = integral + pairs[0].1 - pairs[pairs.len() - 1].1;
        total += c * r;
    }
    Ok(total)
}
