//! Thermostat coefficients at the interface y = 0.
//!
//! g̃(λ) = (1 + γ∫ λ/(λ² + ω²(k)) dk)⁻¹ for Re λ > 0, its boundary value
//! ν(k) = lim_{δ→0⁺} g̃(δ − iω(k)), and the per-wavenumber triple
//! 𝒫 = γν/(2|ω̄′|), p₊ = |1 − 𝒫|², p₋ = |𝒫|², 𝔤 = 1 − p₊ − p₋.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, WavenumberGrid};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Which route computes ν.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientPath {
    /// Closed form; only available for the default model.
    ClosedForm,
    /// Adaptive quadrature and δ-extrapolation.
    Quadrature,
    /// Closed form when the model has one, quadrature otherwise.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NuOptions {
    /// Strictly decreasing positive δ values.
    pub deltas: Vec<f64>,
    /// Acceptance threshold for the extrapolation error estimate.
    pub tol: f64,
}

impl Default for NuOptions {
    fn default() -> Self {
        Self {
            deltas: vec![1e-2, 1e-3, 1e-4],
            tol: 1e-6,
        }
    }
}

impl NuOptions {
    fn validate(&self) -> Result<()> {
        if self.deltas.len() < 2 {
            return Err(Error::param("delta_seq", "need at least two values"));
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::param("delta_seq", "values must be positive"));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("delta_seq", "must be strictly decreasing"));
        }
        Ok(())
    }
}

/// ν(k) with the extrapolation error estimate (zero on the closed-form path).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NuEstimate {
    pub value: Complex64,
    pub error: f64,
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_intervals: 20_000,
    }
}

/// ∫𝕋 λ/(λ² + ω²(k)) dk. With `resonance = Some(k_r)`, λ is taken to be
/// close to −iω(k_r): the panel is split at k_r and λ² + ω² is formed as
/// (ω(k)² − ω(k_r)²) + (λ² + ω(k_r)²) to avoid cancellation.
fn resolvent_integral(model: &DispersionModel, lambda: Complex64, resonance: Option<f64>) -> Result<Complex64> {
    let l2 = lambda * lambda;
    let mut points = vec![0.0];
    let value = match resonance {
        Some(r) if r > 0.0 && r < 0.5 => {
            points.push(r);
            points.push(0.5);
            let wr = model.omega(r);
            // λ² + ω_r² with λ = δ + ib is δ² + 2iδb + (ω_r² − b²).
            let shift = Complex64::new(lambda.re * lambda.re, 2.0 * lambda.re * lambda.im)
                + (wr - lambda.im.abs()) * (wr + lambda.im.abs());
            let f = |k: f64| lambda / (model.omega_sq_diff(k, r) + shift);
            integrate(f, &points, quad_opts())?.value
        }
        _ => {
            points.push(0.5);
            let f = |k: f64| {
                let w = model.omega(k);
                lambda / (l2 + w * w)
            };
            integrate(f, &points, quad_opts())?.value
        }
    };
    // The integrand is even in k.
    Ok(value * 2.0)
}

/// g̃(λ) for Re λ > 0. Uses the closed form 1/(1 + γ/√(λ² + 1)) for the
/// default model and adaptive quadrature otherwise.
pub fn g_tilde(model: &DispersionModel, gamma_therm: f64, lambda: Complex64) -> Result<Complex64> {
    check_gamma(gamma_therm)?;
    if !(lambda.re > 0.0) || !lambda.im.is_finite() {
        return Err(Error::Domain(format!("g_tilde requires Re λ > 0, got {lambda}")));
    }
    if model.is_sine() {
        Ok(g_tilde_closed(gamma_therm, lambda))
    } else {
        g_tilde_quadrature(model, gamma_therm, lambda, None)
    }
}

fn g_tilde_closed(gamma: f64, lambda: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    one / (one + gamma / (lambda * lambda + 1.0).sqrt())
}

/// g̃(λ) by quadrature, for any model.
pub fn g_tilde_quadrature(
    model: &DispersionModel,
    gamma_therm: f64,
    lambda: Complex64,
    resonance: Option<f64>,
) -> Result<Complex64> {
    check_gamma(gamma_therm)?;
    if !(lambda.re > 0.0) {
        return Err(Error::Domain(format!("g_tilde requires Re λ > 0, got {lambda}")));
    }
    let i = resolvent_integral(model, lambda, resonance)?;
    Ok(Complex64::new(1.0, 0.0) / (1.0 + gamma_therm * i))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma_therm", format!("must be positive, got {gamma}")));
    }
    Ok(())
}

/// Closed-form ν(k) = |cos πk| / (|cos πk| + γ) for the default model.
pub fn nu_closed_form(gamma_therm: f64, k: f64) -> f64 {
    let c = (std::f64::consts::PI * k).cos().abs();
    c / (c + gamma_therm)
}

/// ν(k) = lim g̃(δ − iω(k)) by quadrature at each δ and polynomial
/// extrapolation to δ = 0.
///
/// The δ values are shrunk near the band edges by
/// s(k) = min(1, 2ω(k)/ω_max, 2(ω_max − ω(k))/ω_max): the expansion in δ
/// only converges while δ is small against the distance from −iω(k) to the
/// nearest band-edge singularity of g̃.
pub fn nu_boundary(model: &DispersionModel, gamma_therm: f64, k: f64, opts: &NuOptions) -> Result<NuEstimate> {
    check_gamma(gamma_therm)?;
    opts.validate()?;
    if k == 0.0 || !k.is_finite() {
        return Err(Error::Domain(format!("nu_boundary at k = {k}")));
    }
    let w = model.omega(k);
    let wmax = model.omega_max();
    let scale = (2.0 * w.min(wmax - w) / wmax).clamp(f64::MIN_POSITIVE, 1.0);
    let kr = k.abs().min(0.5);
    let xs: Vec<f64> = opts.deltas.iter().map(|d| d * scale).collect();
    let ys = xs
        .iter()
        .map(|&d| g_tilde_quadrature(model, gamma_therm, Complex64::new(d, -w), Some(kr)))
        .collect::<Result<Vec<_>>>()?;
    let (value, error) = neville_at_zero(&xs, &ys);
    if !(error < opts.tol) {
        return Err(Error::Extrapolation {
            k,
            estimate: error,
            tol: opts.tol,
        });
    }
    Ok(NuEstimate { value, error })
}

/// Value at 0 of the polynomial interpolating (xs, ys).
fn neville(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let n = xs.len();
    let mut p = ys.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            let (a, b) = (xs[i], xs[i + m]);
            p[i] = (p[i + 1] * a - p[i] * b) / (a - b);
        }
    }
    p[0]
}

/// Extrapolated value and its distance to the extrapolant without the
/// largest δ.
fn neville_at_zero(xs: &[f64], ys: &[Complex64]) -> (Complex64, f64) {
    let top = neville(xs, ys);
    let lower = neville(&xs[1..], &ys[1..]);
    (top, (top - lower).norm())
}

#[derive(Clone, Debug)]
pub struct InterfaceCoefficients {
    grid: WavenumberGrid,
    nu: Vec<Complex64>,
    nu_error: Vec<f64>,
    p_plus: Vec<f64>,
    p_minus: Vec<f64>,
    g_abs: Vec<f64>,
    temperature: f64,
    gamma_therm: f64,
}

/// (p₊, p₋, 𝔤) from ν and the local group speed |ω̄′|.
fn triple(nu: Complex64, gamma: f64, speed: f64) -> (f64, f64, f64) {
    let cp = nu * (gamma / (2.0 * speed));
    let pp = (Complex64::new(1.0, 0.0) - cp).norm_sqr();
    let pm = cp.norm_sqr();
    (pp, pm, 1.0 - pp - pm)
}

/// Builds the coefficient table on `grid`. Cells are independent and are
/// processed in parallel; values on k < 0 are copied from the mirror cell.
pub fn build_interface_coefficients(
    model: &DispersionModel,
    gamma_therm: f64,
    temperature: f64,
    grid: &WavenumberGrid,
    path: CoefficientPath,
    opts: &NuOptions,
) -> Result<InterfaceCoefficients> {
    check_gamma(gamma_therm)?;
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::param("temperature", format!("must be >= 0, got {temperature}")));
    }
    let closed = match path {
        CoefficientPath::ClosedForm => {
            if !model.is_sine() {
                return Err(Error::param("path", "closed form exists only for the sine model"));
            }
            true
        }
        CoefficientPath::Quadrature => false,
        CoefficientPath::Auto => model.is_sine(),
    };
    let n = grid.n_k();
    let ks = grid.midpoints();
    let half: Vec<(Complex64, f64, f64, f64, f64)> = (n / 2..n)
        .into_par_iter()
        .map(|j| {
            let k = ks[j];
            let speed = model.omega_bar_prime(k)?.abs();
            let est = if closed {
                NuEstimate {
                    value: Complex64::new(nu_closed_form(gamma_therm, k), 0.0),
                    error: 0.0,
                }
            } else {
                nu_boundary(model, gamma_therm, k, opts)?
            };
            let (pp, pm, g) = triple(est.value, gamma_therm, speed);
            if !g.is_finite() || g < -1e-10 {
                return Err(Error::Absorption { k, g_abs: g });
            }
            Ok((est.value, est.error, pp, pm, g))
        })
        .collect::<Result<_>>()?;

    let mut out = InterfaceCoefficients {
        grid: grid.clone(),
        nu: vec![Complex64::new(0.0, 0.0); n],
        nu_error: vec![0.0; n],
        p_plus: vec![0.0; n],
        p_minus: vec![0.0; n],
        g_abs: vec![0.0; n],
        temperature,
        gamma_therm,
    };
    for (i, &(nu, err, pp, pm, g)) in half.iter().enumerate() {
        let j = n / 2 + i;
        for idx in [j, grid.mirror(j)] {
            out.nu[idx] = nu;
            out.nu_error[idx] = err;
            out.p_plus[idx] = pp;
            out.p_minus[idx] = pm;
            out.g_abs[idx] = g;
        }
    }
    Ok(out)
}

impl InterfaceCoefficients {
    /// Assembles a table from explicit per-cell values (used for forced
    /// coefficients in experiments). Requires p₊ + p₋ + 𝔤 = 1 and values in [0, 1].
    pub fn from_parts(
        grid: &WavenumberGrid,
        nu: Vec<Complex64>,
        p_plus: Vec<f64>,
        p_minus: Vec<f64>,
        g_abs: Vec<f64>,
        temperature: f64,
        gamma_therm: f64,
    ) -> Result<Self> {
        let n = grid.n_k();
        for len in [nu.len(), p_plus.len(), p_minus.len(), g_abs.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, got: len });
            }
        }
        for j in 0..n {
            let (a, b, c) = (p_plus[j], p_minus[j], g_abs[j]);
            if ![a, b, c].iter().all(|x| (-1e-12..=1.0 + 1e-12).contains(x)) || (a + b + c - 1.0).abs() > 1e-12 {
                return Err(Error::param(
                    "coefficients",
                    format!("cell {j}: ({a}, {b}, {c}) is not a probability triple"),
                ));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            nu,
            nu_error: vec![0.0; n],
            p_plus,
            p_minus,
            g_abs,
            temperature,
            gamma_therm,
        })
    }

    pub fn grid(&self) -> &WavenumberGrid {
        &self.grid
    }
    pub fn nu(&self) -> &[Complex64] {
        &self.nu
    }
    pub fn nu_error(&self) -> &[f64] {
        &self.nu_error
    }
    pub fn p_plus(&self) -> &[f64] {
        &self.p_plus
    }
    pub fn p_minus(&self) -> &[f64] {
        &self.p_minus
    }
    pub fn g_abs(&self) -> &[f64] {
        &self.g_abs
    }
    pub fn temperature(&self) -> f64 {
        self.temperature
    }
    pub fn gamma_therm(&self) -> f64 {
        self.gamma_therm
    }

    pub fn with_temperature(&self, temperature: f64) -> Self {
        Self {
            temperature,
            ..self.clone()
        }
    }

    /// |γ|ν|²/|ω̄′| − 𝔤| per cell.
    pub fn absorption_crosscheck(&self, model: &DispersionModel) -> Result<Vec<f64>> {
        self.grid
            .midpoints()
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let s = model.omega_bar_prime(k)?.abs();
                Ok((self.gamma_therm * self.nu[j].norm_sqr() / s - self.g_abs[j]).abs())
            })
            .collect()
    }
}

/// |Re ν − (1 + γ/(2|ω̄′|))|ν|²| per cell.
pub fn verify_thermostat_identity(coeffs: &InterfaceCoefficients, model: &DispersionModel) -> Result<Vec<f64>> {
    let gamma = coeffs.gamma_therm();
    coeffs
        .grid()
        .midpoints()
        .iter()
        .zip(coeffs.nu())
        .map(|(&k, nu)| {
            let s = model.omega_bar_prime(k)?.abs();
            Ok((nu.re - (1.0 + gamma / (2.0 * s)) * nu.norm_sqr()).abs())
        })
        .collect()
}

/// Eigenvalues (λ₊, λ₋) = (1 − (p₊ − p₋)², 1 − (p₊ + p₋)²) of the interface
/// quadratic form per cell.
pub fn interface_form_eigenvalues(coeffs: &InterfaceCoefficients) -> Vec<(f64, f64)> {
    coeffs
        .p_plus()
        .iter()
        .zip(coeffs.p_minus())
        .map(|(&pp, &pm)| form_eigenvalues(pp, pm))
        .collect()
}

pub fn form_eigenvalues(p_plus: f64, p_minus: f64) -> (f64, f64) {
    let d = p_plus - p_minus;
    let s = p_plus + p_minus;
    (1.0 - d * d, 1.0 - s * s)
}
