//! A priori bounds of the kinetic solution, evaluated on a finite-volume run.
//!
//! With W̃ = W − T:
//! ‖W̃(t)‖² ≤ ‖W̃₀‖²,
//! ∫₀ᵗ Σ_y 𝒟(W̃(s, y, ·))Δy ds ≤ (ε²/γ)‖W̃₀‖²,
//! ∫₀ᵗ Σ_k |ω̄′|𝔤 (W̃(s, 0⁻, k)² + W̃(s, 0⁺, k)²)Δk ds ≤ 2ε‖W̃₀‖².

use super::fv::FvRun;

/// Relative slack allowed on every bound.
pub const BOUND_SLACK: f64 = 1e-6;
/// Absolute floor for runs that start at equilibrium.
const ABS_FLOOR: f64 = 1e-18;

/// Per-step quantities recorded by the finite-volume solver.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepRecord {
    pub(crate) enabled: bool,
    /// Time at the end of the step.
    pub time: f64,
    pub dt: f64,
    /// ‖W̃‖² after the step.
    pub l2: f64,
    /// Σ_y 𝒟 Δy of the relaxed field.
    pub dirichlet: f64,
    /// Σ_k |ω̄′|𝔤(in² + out²)Δk at the interface.
    pub trace: f64,
    /// ε⁻¹ Σ_{k>0} |ω̄′| Q Δk, the energy removed by the interface.
    pub interface_flux: f64,
    /// min over k of Q − λ₋(x² + y²), where Q is the interface quadratic form
    /// evaluated on the incoming traces (x, y).
    pub interface_margin: f64,
    /// Net energy entering through the outer boundaries per unit time.
    pub outer_flux: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundSeries {
    pub times: Vec<f64>,
    /// Running value (‖W̃‖² itself, or the cumulative integral).
    pub values: Vec<f64>,
    pub bound: f64,
    pub passed: bool,
}

impl BoundSeries {
    fn new(times: Vec<f64>, values: Vec<f64>, bound: f64) -> Self {
        let limit = bound * (1.0 + BOUND_SLACK) + ABS_FLOOR;
        let passed = values.iter().all(|v| v.is_finite() && *v <= limit);
        Self {
            times,
            values,
            bound,
            passed,
        }
    }

    pub fn last(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AprioriReport {
    pub l2: BoundSeries,
    /// ‖W̃(t)‖² is nonincreasing step by step (within the slack).
    pub l2_monotone: bool,
    pub dirichlet: BoundSeries,
    pub trace: BoundSeries,
    /// Q ≥ λ₋(x² + y²) ≥ 0 on every step.
    pub interface_dissipative: bool,
    pub outer_flux_cum: f64,
}

impl AprioriReport {
    pub fn passed(&self) -> bool {
        self.l2.passed && self.l2_monotone && self.dirichlet.passed && self.trace.passed && self.interface_dissipative
    }
}

/// Evaluates the three bounds on the step records of `run`.
pub fn apriori_diagnostics(run: &FvRun) -> AprioriReport {
    let e0 = run.initial_l2;
    let mut times = vec![0.0];
    let mut l2 = vec![e0];
    let mut dir = vec![0.0];
    let mut tr = vec![0.0];
    let mut monotone = true;
    let mut dissipative = true;
    let mut outer = 0.0;
    for r in &run.steps {
        let prev = *l2.last().expect("nonempty");
        if r.l2 > prev + BOUND_SLACK * e0 + ABS_FLOOR {
            monotone = false;
        }
        if r.interface_margin < -1e-12 * e0.max(1.0) {
            dissipative = false;
        }
        times.push(r.time);
        l2.push(r.l2);
        dir.push(dir.last().expect("nonempty") + r.dt * r.dirichlet);
        tr.push(tr.last().expect("nonempty") + r.dt * r.trace);
        outer += r.dt * r.outer_flux;
    }
    let eps = run.eps;
    AprioriReport {
        l2: BoundSeries::new(times.clone(), l2, e0),
        l2_monotone: monotone,
        dirichlet: BoundSeries::new(times.clone(), dir, eps * eps / run.gamma_scat * e0),
        trace: BoundSeries::new(times, tr, 2.0 * eps * e0),
        interface_dissipative: dissipative,
        outer_flux_cum: outer,
    }
}
