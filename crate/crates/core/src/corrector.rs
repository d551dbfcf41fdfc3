//! Corrector equations on the wavenumber grid.
//!
//! −LX₁ = ω̄′ with the centering Σ X₁ R Δk = 0, the diffusion constant
//! D = (1/γ) Σ ω̄′ X₁ Δk, the second corrector LX₂ = D − ω̄′X₁/γ, and the
//! perturbed test function φ + εχ₁ + ε²χ₂ with χ₁ = (1/γ)∂yφ·X₁ and
//! χ₂ = (1/γ)∂²yφ·X₂.

use nalgebra::{DMatrix, DVector};

use crate::dispersion::DispersionModel;
use crate::error::{Error, Result};
use crate::scattering::DiscreteL;
use crate::testfn::SmoothTestFn;

/// Relative tolerance for residuals and solvability.
pub const SOLVER_TOL: f64 = 1e-10;

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solves (−L)X = rhs subject to Σ X_j R(k_j) Δk = 0.
///
/// The system is augmented with the centering row and a Lagrange multiplier
/// and factorized densely.
pub fn solve_corrector(dl: &DiscreteL, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = dl.n_k();
    if rhs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    let dk = dl.grid().cell_width();
    let scale = sup(rhs).max(1.0);
    let mean = rhs.iter().sum::<f64>() * dk;
    if mean.abs() > SOLVER_TOL * scale {
        return Err(Error::Solvability {
            mean,
            tol: SOLVER_TOL * scale,
        });
    }
    let m = dl.matrix();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = -m[(i, j)];
        }
        let w = dl.total_rates()[i] * dk;
        a[(i, n)] = w;
        a[(n, i)] = w;
    }
    let mut b = DVector::zeros(n + 1);
    for i in 0..n {
        b[i] = rhs[i];
    }
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Singular("augmented corrector matrix is singular".into()))?;
    let x: Vec<f64> = x.iter().take(n).copied().collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite corrector solution".into()));
    }
    let lx = dl.apply(&x)?;
    let residual = lx.iter().zip(rhs).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
    if residual > SOLVER_TOL * scale {
        // A kernel of −L larger than the constants shows up here.
        return Err(Error::Residual {
            residual,
            tol: SOLVER_TOL * scale,
        });
    }
    Ok(x)
}

/// First and second correctors with the diffusion constant.
#[derive(Clone, Debug)]
pub struct CorrectorSolution {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub diffusion: f64,
    pub gamma_scat: f64,
    /// Transport velocities the correctors were solved against.
    pub velocities: Vec<f64>,
}

impl CorrectorSolution {
    /// Solves both correctors for the cell-averaged velocities of `model`.
    pub fn compute(model: &DispersionModel, dl: &DiscreteL, gamma_scat: f64) -> Result<Self> {
        check_gamma(gamma_scat)?;
        let v = model.cell_velocities(dl.grid());
        let x1 = solve_corrector(dl, &v)?;
        let diffusion = dl.inner(&v, &x1) / gamma_scat;
        let x2 = second_corrector(dl, &v, &x1, gamma_scat, diffusion)?;
        Ok(Self {
            x1,
            x2,
            diffusion,
            gamma_scat,
            velocities: v,
        })
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma_scat", format!("must be positive, got {gamma}")));
    }
    Ok(())
}

/// D = (1/γ) Σ ω̄′ X₁ Δk.
pub fn diffusion_coefficient(model: &DispersionModel, dl: &DiscreteL, gamma_scat: f64) -> Result<f64> {
    check_gamma(gamma_scat)?;
    let v = model.cell_velocities(dl.grid());
    let x1 = solve_corrector(dl, &v)?;
    let d = dl.inner(&v, &x1) / gamma_scat;
    if !(d > 0.0) {
        return Err(Error::Singular(format!("non-positive diffusion constant {d}")));
    }
    Ok(d)
}

/// X₂ with LX₂ = D − vX₁/γ, centered like X₁.
pub fn second_corrector(dl: &DiscreteL, v: &[f64], x1: &[f64], gamma_scat: f64, d: f64) -> Result<Vec<f64>> {
    check_gamma(gamma_scat)?;
    if v.len() != x1.len() {
        return Err(Error::LengthMismatch {
            expected: v.len(),
            got: x1.len(),
        });
    }
    let rhs: Vec<f64> = v.iter().zip(x1).map(|(a, b)| a * b / gamma_scat - d).collect();
    solve_corrector(dl, &rhs)
}

const SAMPLE_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const SAMPLE_Y: usize = 201;

fn sample_ys(phi: &SmoothTestFn) -> Vec<f64> {
    let (lo, hi) = phi.support();
    (0..SAMPLE_Y)
        .map(|i| lo + (hi - lo) * i as f64 / (SAMPLE_Y - 1) as f64)
        .collect()
}

/// Sup norms of the ε⁻¹ term v∂yφ + γLχ₁ and of the ε⁰ term
/// ∂tφ + v∂yχ₁ + γLχ₂ − (∂tφ + D∂²yφ) over the sample grid.
pub fn order_terms(phi: &SmoothTestFn, corr: &CorrectorSolution, dl: &DiscreteL) -> Result<(f64, f64)> {
    phi.require_away_from_interface()?;
    let g = corr.gamma_scat;
    let v = &corr.velocities;
    let lx1 = dl.apply(&corr.x1)?;
    let lx2 = dl.apply(&corr.x2)?;
    let (mut t1, mut t2) = (0.0f64, 0.0f64);
    for &t in &SAMPLE_TIMES {
        let a = phi.time_factor(t);
        for y in sample_ys(phi) {
            let d = phi.y_derivatives(y).map(|x| x * a);
            for j in 0..v.len() {
                let i_term = v[j] * d[1] + g * (d[1] / g) * lx1[j];
                let ii_term = v[j] * d[2] * corr.x1[j] / g + g * (d[2] / g) * lx2[j] - corr.diffusion * d[2];
                t1 = t1.max(i_term.abs());
                t2 = t2.max(ii_term.abs());
            }
        }
    }
    Ok((t1, t2))
}

/// sup |(∂t + ε⁻¹ω̄′∂y + ε⁻²γL)φ_ε − (∂tφ + D∂²yφ)| over a space-time-k
/// sample grid, with φ_ε = φ + εχ₁ + ε²χ₂. Every term is evaluated as
/// written, so the O(ε⁻¹) and O(1) cancellations are measured, not assumed.
pub fn perturbed_test_residual(phi: &SmoothTestFn, corr: &CorrectorSolution, dl: &DiscreteL, eps: f64) -> Result<f64> {
    phi.require_away_from_interface()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    let g = corr.gamma_scat;
    let v = &corr.velocities;
    let a_rate = -phi.decay_rate;
    let n = v.len();
    let mut worst = 0.0f64;
    for &t in &SAMPLE_TIMES {
        let a = phi.time_factor(t);
        for y in sample_ys(phi) {
            let d = phi.y_derivatives(y).map(|x| x * a);
            // φ_ε(k) and its t- and y-derivatives on the grid.
            let f: Vec<f64> = (0..n)
                .map(|j| d[0] + eps * d[1] * corr.x1[j] / g + eps * eps * d[2] * corr.x2[j] / g)
                .collect();
            let lf = dl.apply(&f)?;
            for j in 0..n {
                let dt = a_rate * f[j];
                let dy = d[1] + eps * d[2] * corr.x1[j] / g + eps * eps * d[3] * corr.x2[j] / g;
                let gen = dt + v[j] * dy / eps + g * lf[j] / (eps * eps);
                let heat = a_rate * d[0] + corr.diffusion * d[2];
                worst = worst.max((gen - heat).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::WavenumberGrid;
    use crate::scattering::ScatteringKernel;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn setup(n: usize) -> (DispersionModel, DiscreteL) {
        let g = WavenumberGrid::new(n).unwrap();
        (
            DispersionModel::sine(),
            DiscreteL::assemble(&ScatteringKernel::uniform(), &g),
        )
    }

    #[test]
    fn uniform_kernel_corrector_is_the_velocity() {
        let (m, dl) = setup(64);
        let v: Vec<f64> = dl
            .grid()
            .midpoints()
            .iter()
            .map(|&k| m.omega_bar_prime(k).unwrap())
            .collect();
        let x = solve_corrector(&dl, &v).unwrap();
        for (a, b) in x.iter().zip(&v) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_rhs_is_rejected() {
        let (_, dl) = setup(16);
        assert!(matches!(
            solve_corrector(&dl, &[1.0; 16]),
            Err(Error::Solvability { .. })
        ));
        assert!(matches!(
            solve_corrector(&dl, &[0.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn disconnected_kernel_is_singular() {
        // No scattering between the two half-tori: −L has a 2-dimensional kernel.
        let g = WavenumberGrid::new(16).unwrap();
        let k = ScatteringKernel::custom(0.0, 1.0, |a, b| if a * b > 0.0 { 1.0 } else { 0.0 }).unwrap();
        let dl = DiscreteL::assemble(&k, &g);
        let mut rhs = vec![0.0; 16];
        rhs[0] = 1.0;
        rhs[15] = -1.0;
        assert!(solve_corrector(&dl, &rhs).is_err());
    }

    #[test]
    fn diffusion_constant_values() {
        let (m, dl) = setup(512);
        let d = diffusion_coefficient(&m, &dl, 1.0).unwrap();
        assert!((d - 0.125).abs() < 1e-6);
        let d2 = diffusion_coefficient(&m, &dl, 2.0).unwrap();
        assert!((d2 - d / 2.0).abs() < 1e-15);
    }

    #[test]
    fn diffusion_constant_converges_at_second_order() {
        let errs: Vec<f64> = [64, 128, 256]
            .iter()
            .map(|&n| {
                let (m, dl) = setup(n);
                (diffusion_coefficient(&m, &dl, 1.0).unwrap() - 0.125).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let r = w[0] / w[1];
            assert!((3.5..=4.5).contains(&r), "ratio {r}");
        }
        // Cell-averaged velocities give D(n) = sinc²(π/2n)/8.
        let x = PI / 128.0;
        assert!((0.125 - errs[0] - 0.125 * (x.sin() / x).powi(2)).abs() < 1e-14);
    }

    #[test]
    fn custom_kernel_diffusion_constant() {
        // R = 1 + a sin(2πk)sin(2πk′): D = 1/8 + a(2/3π)²/(1 − a/2).
        let g = WavenumberGrid::new(512).unwrap();
        let a = 0.5;
        let k = ScatteringKernel::custom(0.0, 1.0, move |x, y| {
            1.0 + a * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
        })
        .unwrap();
        let dl = DiscreteL::assemble(&k, &g);
        let d = diffusion_coefficient(&DispersionModel::sine(), &dl, 1.0).unwrap();
        let exact = 0.125 + a * (2.0 / (3.0 * PI)).powi(2) / (1.0 - a / 2.0);
        assert!((d - exact).abs() < 1e-5, "{d} vs {exact}");
    }

    #[test]
    fn corrector_solution_invariants() {
        let (m, dl) = setup(64);
        let c = CorrectorSolution::compute(&m, &dl, 1.0).unwrap();
        let dk = dl.grid().cell_width();
        let centering: f64 = c.x1.iter().zip(dl.total_rates()).map(|(x, r)| x * r).sum::<f64>() * dk;
        assert!(centering.abs() < 1e-14);
        for j in 0..64 {
            let jm = dl.grid().mirror(j);
            assert!((c.x1[j] + c.x1[jm]).abs() < 1e-14);
            assert!((c.x2[j] - c.x2[jm]).abs() < 1e-14);
            // Uniform kernel: X₂ = v² − D.
            assert!((c.x2[j] - (c.velocities[j].powi(2) - c.diffusion)).abs() < 1e-13);
        }
        let lx2 = dl.apply(&c.x2).unwrap();
        for j in 0..64 {
            let r = lx2[j] - (c.diffusion - c.velocities[j] * c.x1[j]);
            assert!(r.abs() < 1e-10);
        }
        let lx1 = dl.apply(&c.x1).unwrap();
        let q = -dl.inner(&c.x1, &lx1);
        assert!((q - c.diffusion).abs() < 1e-10);
    }

    #[test]
    fn order_terms_cancel() {
        let (m, dl) = setup(64);
        let c = CorrectorSolution::compute(&m, &dl, 1.0).unwrap();
        let phi = SmoothTestFn::bump(2.5, 0.5).with_decay(1.0);
        let (i, ii) = order_terms(&phi, &c, &dl).unwrap();
        assert!(i < 1e-10, "{i}");
        assert!(ii < 1e-10, "{ii}");
    }

    #[test]
    fn perturbed_residual_is_first_order() {
        let (m, dl) = setup(64);
        let c = CorrectorSolution::compute(&m, &dl, 1.0).unwrap();
        let phi = SmoothTestFn::bump(2.5, 0.5).with_decay(1.0);
        let r: Vec<f64> = [0.4, 0.2, 0.1, 0.05]
            .iter()
            .map(|&e| perturbed_test_residual(&phi, &c, &dl, e).unwrap())
            .collect();
        for w in r.windows(2) {
            assert!(w[1] < w[0]);
            let ratio = w[0] / w[1];
            assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
        }
        assert!(perturbed_test_residual(&SmoothTestFn::bump(0.3, 0.5), &c, &dl, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(coeffs in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let g = WavenumberGrid::new(32).unwrap();
            let k = ScatteringKernel::product_sine2(2.0).unwrap();
            let dl = DiscreteL::assemble(&k, &g);
            let mean = coeffs.iter().sum::<f64>() / 32.0;
            let rhs: Vec<f64> = coeffs.iter().map(|c| c - mean).collect();
            let x = solve_corrector(&dl, &rhs).unwrap();
            let lx = dl.apply(&x).unwrap();
            for (a, b) in lx.iter().zip(&rhs) {
                prop_assert!((a + b).abs() < 1e-10);
            }
        }
    }
}
