//! Scattering kernel R(k, k′), the jump generator
//! LF(k) = ∫ R(k, k′)[F(k′) − F(k)] dk′ on the wavenumber grid, its Dirichlet
//! form, and the admissibility check for the diffusive regime.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dispersion::{DispersionModel, WavenumberGrid};
use crate::error::{Error, Result};

/// Number of midpoint cells used when a kernel integral is needed off-grid.
const RATE_QUADRATURE_CELLS: usize = 4096;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    Uniform,
    /// R(k, k′) = r0 sin²(πk) sin²(πk′)
    ProductSine2 { r0: f64 },
}

impl KernelSpec {
    pub fn build(&self) -> Result<ScatteringKernel> {
        match *self {
            KernelSpec::Uniform => Ok(ScatteringKernel::uniform()),
            KernelSpec::ProductSine2 { r0 } => ScatteringKernel::product_sine2(r0),
        }
    }
}

type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    Uniform,
    ProductSine2,
    Custom(KernelFn),
}

/// Symmetric, nonnegative scattering kernel.
#[derive(Clone)]
pub struct ScatteringKernel {
    shape: Shape,
    beta: f64,
    r0: f64,
}

impl fmt::Debug for ScatteringKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.shape {
            Shape::Uniform => "uniform",
            Shape::ProductSine2 => "product_sine2",
            Shape::Custom(_) => "custom",
        };
        f.debug_struct("ScatteringKernel")
            .field("shape", &name)
            .field("beta", &self.beta)
            .field("r0", &self.r0)
            .finish()
    }
}

impl ScatteringKernel {
    /// R(k, k′) ≡ 1.
    pub fn uniform() -> Self {
        Self {
            shape: Shape::Uniform,
            beta: 0.0,
            r0: 1.0,
        }
    }

    /// R(k, k′) = r0 sin²(πk) sin²(πk′); total rate ∼ (r0/2) sin²(πk), β = 2.
    pub fn product_sine2(r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) {
            return Err(Error::param("r0", format!("must be positive, got {r0}")));
        }
        Ok(Self {
            shape: Shape::ProductSine2,
            beta: 2.0,
            r0,
        })
    }

    /// Arbitrary kernel. The caller is responsible for symmetry and
    /// positivity; `beta` is the small-k exponent of the total rate.
    pub fn custom<F>(beta: f64, r0: f64, r: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(beta >= 0.0) {
            return Err(Error::param("beta", format!("must be >= 0, got {beta}")));
        }
        Ok(Self {
            shape: Shape::Custom(Arc::new(r)),
            beta,
            r0,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.shape, Shape::Uniform)
    }

    pub fn is_product_sine2(&self) -> bool {
        matches!(self.shape, Shape::ProductSine2)
    }

    pub fn r(&self, k: f64, kp: f64) -> f64 {
        match &self.shape {
            Shape::Uniform => 1.0,
            Shape::ProductSine2 => {
                let a = (std::f64::consts::PI * k).sin();
                let b = (std::f64::consts::PI * kp).sin();
                self.r0 * a * a * b * b
            }
            Shape::Custom(f) => f(k, kp),
        }
    }

    /// R(k) = ∫ R(k, k′) dk′ by the midpoint rule on a fine periodic grid.
    pub fn total_rate(&self, k: f64) -> Result<f64> {
        if k == 0.0 || !k.is_finite() {
            return Err(Error::Domain(format!("total rate requested at k = {k}")));
        }
        let n = RATE_QUADRATURE_CELLS;
        let h = 1.0 / n as f64;
        let s: f64 = (0..n).map(|j| self.r(k, -0.5 + (j as f64 + 0.5) * h)).sum();
        Ok(s * h)
    }

    /// Stochastic kernel p(k, k′) = R(k, k′) / R(k).
    pub fn stochastic(&self, k: f64, kp: f64) -> Result<f64> {
        Ok(self.r(k, kp) / self.total_rate(k)?)
    }
}

/// Outcome of the diffusive-regime admissibility check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusiveCheck {
    /// β < 1 + 2κ
    pub admissible: bool,
    /// Midpoint value of ∫ ω′(k)² / R(k) dk (finite-grid value even when the
    /// integral diverges).
    pub integral_estimate: f64,
    pub divergence_warning: bool,
}

pub fn check_diffusive_condition(model: &DispersionModel, kernel: &ScatteringKernel) -> DiffusiveCheck {
    let admissible = kernel.beta() < 1.0 + 2.0 * model.kappa();
    let grid = WavenumberGrid::new(2048).expect("even grid");
    let integral_estimate = grid
        .midpoints()
        .iter()
        .map(|&k| {
            let wp = model.omega_prime(k).expect("midpoints avoid 0");
            wp * wp / kernel.total_rate(k).expect("midpoints avoid 0")
        })
        .sum::<f64>()
        * grid.cell_width();
    DiffusiveCheck {
        admissible,
        integral_estimate,
        divergence_warning: !admissible,
    }
}

/// Grid discretization of L: off-diagonal entries R(k_i, k_j)Δk, diagonal
/// chosen so that every row sums to zero.
#[derive(Clone, Debug)]
pub struct DiscreteL {
    grid: WavenumberGrid,
    matrix: DMatrix<f64>,
    total_rates: Vec<f64>,
}

impl DiscreteL {
    pub fn assemble(kernel: &ScatteringKernel, grid: &WavenumberGrid) -> Self {
        let n = grid.n_k();
        let dk = grid.cell_width();
        let k = grid.midpoints();
        let mut matrix = DMatrix::zeros(n, n);
        let mut total_rates = vec![0.0; n];
        for i in 0..n {
            total_rates[i] += kernel.r(k[i], k[i]) * dk;
            for j in i + 1..n {
                let r = kernel.r(k[i], k[j]);
                matrix[(i, j)] = r * dk;
                matrix[(j, i)] = r * dk;
                total_rates[i] += r * dk;
                total_rates[j] += r * dk;
            }
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| matrix[(i, j)]).sum();
            matrix[(i, i)] = -off;
        }
        Self {
            grid: grid.clone(),
            matrix,
            total_rates,
        }
    }

    pub fn grid(&self) -> &WavenumberGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Discrete R(k_j) = Σ_i R(k_j, k_i) Δk.
    pub fn total_rates(&self) -> &[f64] {
        &self.total_rates
    }

    pub fn n_k(&self) -> usize {
        self.grid.n_k()
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n_k() {
            return Err(Error::LengthMismatch {
                expected: self.n_k(),
                got: f.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_len(f)?;
        let n = self.n_k();
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * f[j]).sum())
            .collect())
    }

    /// 𝒟(f) = Σ_{i,j} R(k_i, k_j)(f_i − f_j)² Δk².
    pub fn dirichlet_form(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f)?;
        let n = self.n_k();
        let dk = self.grid.cell_width();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = f[i] - f[j];
                    s += self.matrix[(i, j)] * d * d;
                }
            }
        }
        Ok(s * dk)
    }

    /// Flat-weight inner product Σ f_j g_j Δk.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_width()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_kernel_basics() {
        let u = ScatteringKernel::uniform();
        assert_eq!(u.total_rate(0.3).unwrap(), 1.0);
        assert_eq!(u.stochastic(0.1, -0.4).unwrap(), 1.0);
        assert_eq!(u.r(0.1, 0.2), u.r(0.2, 0.1));
        assert_eq!(u.beta(), 0.0);
        assert_eq!(u.r0(), 1.0);
        assert!(u.total_rate(0.0).is_err());
    }

    #[test]
    fn product_kernel_total_rate() {
        let p = ScatteringKernel::product_sine2(8.0).unwrap();
        assert!((p.total_rate(0.25).unwrap() - 2.0).abs() < 1e-13);
        assert_eq!(p.total_rate(-0.2).unwrap(), p.total_rate(0.2).unwrap());
        assert!(ScatteringKernel::product_sine2(0.0).is_err());
    }

    #[test]
    fn stochastic_kernel_is_normalized() {
        let p = ScatteringKernel::product_sine2(3.0).unwrap();
        let g = WavenumberGrid::new(4096).unwrap();
        for &k in &[0.07, -0.3, 0.49] {
            let s: f64 = g.midpoints().iter().map(|&kp| p.stochastic(k, kp).unwrap()).sum();
            assert!((s * g.cell_width() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_l_on_uniform_kernel() {
        let g = WavenumberGrid::new(32).unwrap();
        let dl = DiscreteL::assemble(&ScatteringKernel::uniform(), &g);
        let c = vec![2.5; 32];
        assert!(dl.apply(&c).unwrap().iter().all(|x| x.abs() < 1e-14));
        let m = DispersionModel::sine();
        let v: Vec<f64> = g.midpoints().iter().map(|&k| m.omega_bar_prime(k).unwrap()).collect();
        let lv = dl.apply(&v).unwrap();
        for (a, b) in lv.iter().zip(&v) {
            assert!((a + b).abs() < 1e-14);
        }
        let mut f = vec![0.0; 32];
        f[5] = 1.0;
        f[6] = 0.5;
        assert!(dl.apply(&f).unwrap()[5] < 0.0);
        assert!(matches!(dl.apply(&[1.0; 3]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn dirichlet_form_values() {
        let g = WavenumberGrid::new(64).unwrap();
        let dl = DiscreteL::assemble(&ScatteringKernel::uniform(), &g);
        assert_eq!(dl.dirichlet_form(&[1.3; 64]).unwrap(), 0.0);
        let m = DispersionModel::sine();
        let v: Vec<f64> = g.midpoints().iter().map(|&k| m.omega_bar_prime(k).unwrap()).collect();
        assert!((dl.dirichlet_form(&v).unwrap() - 0.25).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let f: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(dl.dirichlet_form(&f).unwrap() >= 0.0);
        }
    }

    #[test]
    fn row_sums_and_self_adjointness() {
        let g = WavenumberGrid::new(48).unwrap();
        let kernel = ScatteringKernel::custom(0.0, 1.0, |k, kp| {
            1.0 + 0.5 * (2.0 * std::f64::consts::PI * k).sin() * (2.0 * std::f64::consts::PI * kp).sin()
        })
        .unwrap();
        let dl = DiscreteL::assemble(&kernel, &g);
        for i in 0..48 {
            let s: f64 = dl.matrix().row(i).iter().sum();
            assert!(s.abs() < 1e-14);
            for j in 0..48 {
                if i != j {
                    assert!(dl.matrix()[(i, j)] >= 0.0);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f: Vec<f64> = (0..48).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..48).map(|_| rng.random_range(-1.0..1.0)).collect();
            let a = dl.inner(&f, &dl.apply(&h).unwrap());
            let b = dl.inner(&dl.apply(&f).unwrap(), &h);
            assert!((a - b).abs() < 1e-12);
            let d = dl.dirichlet_form(&f).unwrap();
            assert!((d + 2.0 * dl.inner(&f, &dl.apply(&f).unwrap())).abs() < 1e-12);
        }
    }

    #[test]
    fn diffusive_condition() {
        let sine = DispersionModel::sine();
        let c = check_diffusive_condition(&sine, &ScatteringKernel::uniform());
        assert!(c.admissible && !c.divergence_warning);
        // ∫ω′² dk = π²/2 for the default model and R ≡ 1.
        assert!((c.integral_estimate - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-10);

        let beta2 = ScatteringKernel::custom(2.0, 1.0, |_, _| 1.0).unwrap();
        assert!(!check_diffusive_condition(&sine, &beta2).admissible);

        let beta1 = ScatteringKernel::custom(1.0, 1.0, |_, _| 1.0).unwrap();
        let kappa1 = DispersionModel::powerlaw(1.0).unwrap();
        assert!(check_diffusive_condition(&kappa1, &beta1).admissible);

        let prod = ScatteringKernel::product_sine2(1.0).unwrap();
        let c = check_diffusive_condition(&sine, &prod);
        assert!(!c.admissible && c.divergence_warning);
        assert!(c.integral_estimate > 1e3);
    }

    #[test]
    fn kernel_spec_from_toml() {
        #[derive(Deserialize)]
        struct Wrap {
            kernel: KernelSpec,
        }
        let w: Wrap = toml::from_str("kernel = { kind = \"product_sine2\", r0 = 2.0 }").unwrap();
        assert!(w.kernel.build().unwrap().is_product_sine2());
        let w: Wrap = toml::from_str("kernel = { kind = \"uniform\" }").unwrap();
        assert!(w.kernel.build().unwrap().is_uniform());
    }
}
