//! Dispersion relations ω(k) on the torus 𝕋 = [-1/2, 1/2] and the
//! wavenumber grid used throughout the crate.
//!
//! Every model is even, unimodal (kω′(k) ≥ 0) and smooth away from k = 0.
//! The group velocity entering the transport term is ω̄′ = ω′ / 2π.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_real, QuadOptions};

/// Model selector as it appears in the TOML config.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DispersionSpec {
    /// ω(k) = |sin(πk)|
    #[default]
    Sine,
    /// ω(k) = ∫₀^|k| π|sin(πu)|^κ du
    Powerlaw { kappa: f64 },
}

impl DispersionSpec {
    pub fn build(&self) -> Result<DispersionModel> {
        match *self {
            DispersionSpec::Sine => Ok(DispersionModel::sine()),
            DispersionSpec::Powerlaw { kappa } => DispersionModel::powerlaw(kappa),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Sine,
    Powerlaw,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispersionModel {
    kind: Kind,
    kappa: f64,
    omega_max: f64,
}

/// Maps k onto the fundamental domain [-1/2, 1/2].
fn wrap(k: f64) -> f64 {
    if (-0.5..=0.5).contains(&k) {
        k
    } else {
        k - k.round()
    }
}

impl DispersionModel {
    /// The default model ω(k) = |sin(πk)| (κ = 0, ω_max = 1).
    pub fn sine() -> Self {
        Self {
            kind: Kind::Sine,
            kappa: 0.0,
            omega_max: 1.0,
        }
    }

    /// Power-law family with ω′(k) = π sign(k) |sin(πk)|^κ.
    pub fn powerlaw(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::param("kappa", format!("must be finite and >= 0, got {kappa}")));
        }
        let mut model = Self {
            kind: Kind::Powerlaw,
            kappa,
            omega_max: 0.0,
        };
        model.omega_max = model.omega(0.5);
        Ok(model)
    }

    pub fn is_sine(&self) -> bool {
        self.kind == Kind::Sine
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn omega(&self, k: f64) -> f64 {
        let a = wrap(k).abs();
        match self.kind {
            Kind::Sine => (PI * a).sin(),
            Kind::Powerlaw => powerlaw_omega(self.kappa, a),
        }
    }

    /// ω′(k); undefined at k = 0.
    pub fn omega_prime(&self, k: f64) -> Result<f64> {
        if !k.is_finite() {
            return Err(Error::Domain(format!("omega_prime at non-finite k = {k}")));
        }
        let k = wrap(k);
        if k == 0.0 {
            return Err(Error::Domain("omega_prime is undefined at k = 0".into()));
        }
        let s = k.signum();
        Ok(match self.kind {
            Kind::Sine => PI * s * (PI * k).cos(),
            Kind::Powerlaw => {
                if self.kappa == 0.0 {
                    PI * s
                } else {
                    PI * s * (PI * k).sin().abs().powf(self.kappa)
                }
            }
        })
    }

    /// ω(k₁)² − ω(k₂)², in product form where the model allows it so that
    /// nearly resonant pairs keep their relative accuracy.
    pub fn omega_sq_diff(&self, k1: f64, k2: f64) -> f64 {
        let a = PI * wrap(k1).abs();
        let b = PI * wrap(k2).abs();
        match self.kind {
            Kind::Sine => (a + b).sin() * (a - b).sin(),
            Kind::Powerlaw if self.kappa == 1.0 => {
                let d = 2.0 * (0.5 * (a + b)).sin() * (0.5 * (a - b)).sin();
                d * (self.omega(k1) + self.omega(k2))
            }
            Kind::Powerlaw => {
                let (w1, w2) = (self.omega(k1), self.omega(k2));
                (w1 - w2) * (w1 + w2)
            }
        }
    }

    /// Group velocity ω̄′(k) = ω′(k) / 2π.
    pub fn omega_bar_prime(&self, k: f64) -> Result<f64> {
        Ok(self.omega_prime(k)? / (2.0 * PI))
    }

    /// Exact cell averages of ω̄′ over the cells of `grid`,
    /// (ω(k_{j+½}) − ω(k_{j−½})) / (2π Δk). This is the transport velocity
    /// of a piecewise-constant density on the grid.
    pub fn cell_velocities(&self, grid: &WavenumberGrid) -> Vec<f64> {
        let faces = grid.faces();
        let n = grid.n_k();
        let mut v = vec![0.0; n];
        for j in 0..n / 2 {
            let hi = faces[j + 1];
            let lo = faces[j];
            v[j] = (self.omega(hi) - self.omega(lo)) / (2.0 * PI * grid.cell_width());
        }
        for j in n / 2..n {
            v[j] = -v[grid.mirror(j)];
        }
        v
    }
}

fn powerlaw_omega(kappa: f64, a: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    if kappa == 0.0 {
        return PI * a;
    }
    if kappa == 1.0 {
        return 1.0 - (PI * a).cos();
    }
    // u = a·s^m with m = 1/(κ+1) removes the u^κ endpoint behaviour.
    let m = 1.0 / (kappa + 1.0);
    let f = |s: f64| {
        if s == 0.0 {
            return PI * a * m * (PI * a).powf(kappa);
        }
        let u = a * s.powf(m);
        PI * (PI * u).sin().abs().powf(kappa) * a * m * s.powf(m - 1.0)
    };
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 2000,
    };
    integrate_real(f, &[0.0, 1.0], opts).expect("smooth integrand on [0, 1]")
}

/// Midpoint grid on 𝕋 with an even number of cells, so that the cells are
/// mirror images of each other and no midpoint sits on 0 or ±1/2.
#[derive(Clone, Debug, PartialEq)]
pub struct WavenumberGrid {
    midpoints: Vec<f64>,
}

impl WavenumberGrid {
    pub fn new(n_k: usize) -> Result<Self> {
        if n_k == 0 || n_k % 2 != 0 {
            return Err(Error::param("n_k", format!("must be even and positive, got {n_k}")));
        }
        let mut midpoints = vec![0.0; n_k];
        for j in 0..n_k / 2 {
            midpoints[j] = -0.5 + (j as f64 + 0.5) / n_k as f64;
        }
        for j in n_k / 2..n_k {
            midpoints[j] = -midpoints[n_k - 1 - j];
        }
        Ok(Self { midpoints })
    }

    pub fn n_k(&self) -> usize {
        self.midpoints.len()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.midpoints.len() as f64
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    /// Cell faces −1/2 = f₀ < f₁ < … < f_n = 1/2, with f_{n/2} = 0 exactly.
    pub fn faces(&self) -> Vec<f64> {
        let n = self.n_k();
        let mut f = vec![0.0; n + 1];
        for j in 0..=n / 2 {
            f[j] = -0.5 + j as f64 / n as f64;
        }
        f[n / 2] = 0.0;
        for j in n / 2 + 1..=n {
            f[j] = -f[n - j];
        }
        f
    }

    /// Index of the cell holding −k_j.
    pub fn mirror(&self, j: usize) -> usize {
        self.n_k() - 1 - j
    }

    /// Index of the cell containing k (k on a face goes to the upper cell).
    pub fn cell_of(&self, k: f64) -> usize {
        let n = self.n_k();
        let j = ((wrap(k) + 0.5) * n as f64).floor();
        (j.max(0.0) as usize).min(n - 1)
    }

    /// Midpoint-rule integral Σ f_j Δk.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.cell_width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_model_values() {
        let m = DispersionModel::sine();
        assert!((m.omega(0.25) - 0.707_106_781_186_547_6).abs() < 1e-15);
        let wp = m.omega_prime(-0.25).unwrap();
        assert!((wp + PI * (PI / 4.0).cos()).abs() < 1e-14);
        assert!((wp + 2.221_441_469).abs() < 1e-9);
        assert_eq!(m.omega(-1.0 / 3.0), m.omega(1.0 / 3.0));
        assert_eq!(m.omega_max(), 1.0);
        assert_eq!(m.kappa(), 0.0);
    }

    #[test]
    fn omega_bar_prime_values() {
        let m = DispersionModel::sine();
        assert!((m.omega_bar_prime(0.25).unwrap() - 0.353_553_390_59).abs() < 1e-10);
        assert!(m.omega_bar_prime(0.5 - 1e-12).unwrap().abs() < 1e-11);
        let a = m.omega_bar_prime(0.17).unwrap();
        let b = m.omega_bar_prime(-0.17).unwrap();
        assert_eq!(a, -b);
    }

    #[test]
    fn omega_prime_rejects_zero() {
        let m = DispersionModel::sine();
        assert!(matches!(m.omega_prime(0.0), Err(Error::Domain(_))));
        assert!(m.omega_bar_prime(f64::NAN).is_err());
        let p = DispersionModel::powerlaw(0.5).unwrap();
        assert!(p.omega_prime(0.0).is_err());
    }

    #[test]
    fn powerlaw_closed_forms() {
        let p0 = DispersionModel::powerlaw(0.0).unwrap();
        assert!((p0.omega_prime(1e-9).unwrap().abs() - PI).abs() < 1e-15);
        assert!((p0.omega(0.2) - 0.2 * PI).abs() < 1e-15);
        let p1 = DispersionModel::powerlaw(1.0).unwrap();
        for &k in &[0.05, 0.2, 0.37, 0.5] {
            assert!((p1.omega(k) - (1.0 - (PI * k).cos())).abs() < 1e-15);
        }
        assert!((p1.omega_max() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn powerlaw_generic_kappa_matches_direct_quadrature() {
        // κ = 2: ∫₀^a π sin²(πu) du = a·π/2 − sin(2πa)/4.
        let p2 = DispersionModel::powerlaw(2.0).unwrap();
        for &a in &[0.1, 0.25, 0.5] {
            let exact = 0.5 * PI * a - (2.0 * PI * a).sin() / 4.0;
            assert!((p2.omega(a) - exact).abs() < 1e-12, "a = {a}");
        }
        // κ = 0.5 against a brute-force midpoint sum.
        let p = DispersionModel::powerlaw(0.5).unwrap();
        let n = 200_000;
        let a = 0.3;
        let h = a / n as f64;
        let brute: f64 = (0..n)
            .map(|i| PI * (PI * (i as f64 + 0.5) * h).sin().powf(0.5) * h)
            .sum();
        assert!((p.omega(a) - brute).abs() < 1e-7);
    }

    #[test]
    fn omega_sq_diff_matches_direct() {
        for m in [
            DispersionModel::sine(),
            DispersionModel::powerlaw(1.0).unwrap(),
            DispersionModel::powerlaw(0.5).unwrap(),
        ] {
            for &(a, b) in &[(0.1, 0.3), (-0.45, 0.2), (0.49, -0.499)] {
                let direct = m.omega(a).powi(2) - m.omega(b).powi(2);
                assert!((m.omega_sq_diff(a, b) - direct).abs() < 1e-14);
            }
        }
        let m = DispersionModel::sine();
        let d = m.omega_sq_diff(0.5 - 1e-9, 0.5 - 2e-9);
        let exact = (PI * 1e-9).powi(2) * 3.0 * (1.0 - (PI * 1e-9).powi(2));
        assert!((d - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn powerlaw_rejects_negative_kappa() {
        assert!(DispersionModel::powerlaw(-0.1).is_err());
        assert!(DispersionModel::powerlaw(f64::INFINITY).is_err());
    }

    #[test]
    fn symmetry_and_unimodality() {
        let models = [
            DispersionModel::sine(),
            DispersionModel::powerlaw(0.0).unwrap(),
            DispersionModel::powerlaw(0.7).unwrap(),
            DispersionModel::powerlaw(1.0).unwrap(),
        ];
        let grid = WavenumberGrid::new(64).unwrap();
        for m in &models {
            for (j, &k) in grid.midpoints().iter().enumerate() {
                let kk = grid.midpoints()[grid.mirror(j)];
                assert_eq!(m.omega(k), m.omega(kk));
                let a = m.omega_bar_prime(k).unwrap();
                let b = m.omega_bar_prime(kk).unwrap();
                assert_eq!(a, -b);
                assert!(k * a >= 0.0);
            }
            let mut prev = -1.0;
            for i in 0..=500 {
                let w = m.omega(0.5 * i as f64 / 500.0);
                assert!(w >= prev);
                prev = w;
            }
        }
        let m = DispersionModel::sine();
        let max = grid
            .midpoints()
            .iter()
            .map(|&k| m.omega_bar_prime(k).unwrap().abs())
            .fold(0.0, f64::max);
        assert!(max <= 0.5 + 1e-15);
    }

    #[test]
    fn grid_layout() {
        assert!(WavenumberGrid::new(7).is_err());
        assert!(WavenumberGrid::new(0).is_err());
        let g = WavenumberGrid::new(8).unwrap();
        assert_eq!(g.cell_width(), 0.125);
        assert_eq!(g.midpoints()[0], -0.4375);
        for (j, &k) in g.midpoints().iter().enumerate() {
            assert_eq!(g.midpoints()[g.mirror(j)], -k);
            assert!(k != 0.0 && k.abs() != 0.5);
            assert_eq!(g.cell_of(k), j);
        }
        let f = g.faces();
        assert_eq!(f[4], 0.0);
        assert_eq!(f[0], -0.5);
        assert_eq!(f[8], 0.5);
    }

    #[test]
    fn cell_velocities_are_exact_averages() {
        let m = DispersionModel::sine();
        let g = WavenumberGrid::new(16).unwrap();
        let v = m.cell_velocities(&g);
        let x = PI * g.cell_width() / 2.0;
        let sinc = x.sin() / x;
        for (j, &k) in g.midpoints().iter().enumerate() {
            let expect = 0.5 * k.signum() * (PI * k).cos() * sinc;
            assert!((v[j] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn spec_parses_from_toml() {
        #[derive(Deserialize)]
        struct Wrap {
            dispersion: DispersionSpec,
        }
        let w: Wrap = toml::from_str("dispersion = { kind = \"powerlaw\", kappa = 0.5 }").unwrap();
        assert_eq!(w.dispersion, DispersionSpec::Powerlaw { kappa: 0.5 });
        let w: Wrap = toml::from_str("dispersion = { kind = \"sine\" }").unwrap();
        assert!(w.dispersion.build().unwrap().is_sine());
    }
}
