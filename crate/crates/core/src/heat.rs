//! Dirichlet heat equation ∂tρ = D∂²yρ on y ≠ 0 with ρ(t, 0) = T, solved by
//! the method of images for piecewise-constant initial data.

use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::kinetic::{KineticField, PiecewiseProfile, YGrid};
use crate::quadrature::gl5_average;
use crate::testfn::SmoothTestFn;

/// Piecewise-constant function with `values[0]` on (−∞, b₀), `values[i]` on
/// (bᵢ₋₁, bᵢ) and `values[n]` on (bₙ₋₁, ∞).
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let out = Self { breakpoints, values };
        out.validate()?;
        Ok(out)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            breakpoints: Vec::new(),
            values: vec![c],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.breakpoints.len() + 1 {
            return Err(Error::LengthMismatch {
                expected: self.breakpoints.len() + 1,
                got: self.values.len(),
            });
        }
        if self.breakpoints.windows(2).any(|w| !(w[0] < w[1])) || self.breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::param("breakpoints", "must be finite and strictly increasing"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "must be finite"));
        }
        Ok(())
    }

    /// Value at y; at a breakpoint, the mean of both sides.
    pub fn value(&self, y: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b < y);
        if i < self.breakpoints.len() && self.breakpoints[i] == y {
            0.5 * (self.values[i] + self.values[i + 1])
        } else {
            self.values[i]
        }
    }

    /// Intervals (a, b, value), with infinite ends for the tails.
    fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.breakpoints.len();
        (0..=n).map(move |i| {
            let a = if i == 0 {
                f64::NEG_INFINITY
            } else {
                self.breakpoints[i - 1]
            };
            let b = if i == n { f64::INFINITY } else { self.breakpoints[i] };
            (a, b, self.values[i])
        })
    }

    pub fn from_profile(p: &PiecewiseProfile) -> Result<Self> {
        p.validate()?;
        let mut bps: Vec<f64> = p.pieces.iter().flat_map(|q| [q.lo, q.hi]).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let mut values = Vec::with_capacity(bps.len() + 1);
        values.push(p.background);
        for w in bps.windows(2) {
            values.push(p.value(0.5 * (w[0] + w[1])));
        }
        if !bps.is_empty() {
            values.push(p.background);
        }
        Self::new(bps, values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// ρ₀ on the y-grid: per cell the k-average of W₀ (midpoint rule in k). The
/// edge cells extend to ±∞.
pub fn rho0_from_w0(w0: &KineticField, y: &YGrid) -> Result<PiecewiseConstant> {
    w0.check_shape(y.n_y, w0.n_k)?;
    let rho = w0.rho();
    let breakpoints: Vec<f64> = (1..y.n_y).map(|i| y.face(i)).collect();
    PiecewiseConstant::new(breakpoints, rho)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatProfile {
    pub rho0: PiecewiseConstant,
    pub diffusion: f64,
    pub temperature: f64,
}

/// erf(x₂) − erf(x₁) without cancellation in the tails.
fn erf_diff(x1: f64, x2: f64) -> f64 {
    if x1 >= 0.0 && x2 >= 0.0 {
        erfc(x1) - erfc(x2)
    } else if x1 <= 0.0 && x2 <= 0.0 {
        erfc(-x2) - erfc(-x1)
    } else {
        erf(x2) - erf(x1)
    }
}

impl HeatProfile {
    pub fn new(rho0: PiecewiseConstant, diffusion: f64, temperature: f64) -> Result<Self> {
        rho0.validate()?;
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::param("diffusion", format!("must be positive, got {diffusion}")));
        }
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::param("temperature", format!("must be >= 0, got {temperature}")));
        }
        Ok(Self {
            rho0,
            diffusion,
            temperature,
        })
    }

    pub fn from_w0(w0: &KineticField, y: &YGrid, diffusion: f64, temperature: f64) -> Result<Self> {
        Self::new(rho0_from_w0(w0, y)?, diffusion, temperature)
    }

    /// ρ(t, y). At y = 0 returns T, the common one-sided limit.
    pub fn eval(&self, t: f64, y: f64) -> Result<f64> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::param("t", format!("must be positive, got {t}")));
        }
        Ok(self.eval_at(t, y))
    }

    fn eval_at(&self, t: f64, y: f64) -> f64 {
        if y == 0.0 {
            return self.temperature;
        }
        let s = (4.0 * self.diffusion * t).sqrt();
        let (x, side) = if y > 0.0 { (y, 1.0) } else { (-y, -1.0) };
        let mut acc = 0.0;
        for (a, b, v) in self.rho0.pieces() {
            // Map the part of the piece on the half-line of y to (lo, hi) ⊂ (0, ∞).
            let (lo, hi) = if side > 0.0 {
                (a.max(0.0), b)
            } else {
                ((-b).max(0.0), -a)
            };
            if !(hi > lo) {
                continue;
            }
            let w = v - self.temperature;
            if w == 0.0 {
                continue;
            }
            let direct = erf_diff((lo - x) / s, (hi - x) / s);
            let image = erf_diff((lo + x) / s, (hi + x) / s);
            acc += 0.5 * w * (direct - image);
        }
        self.temperature + acc
    }

    /// ⟨ρ(t), φ(t)⟩ = ∫∫ ρ(t, y) φ(t, y, k) dy dk by composite Gauss–Legendre
    /// in y, split at y = 0.
    pub fn pairing(&self, phi: &SmoothTestFn, t: f64) -> Result<f64> {
        const PANELS: usize = 200;
        self.eval(t, 1.0)?;
        let (lo, hi) = phi.support();
        let mut segments = vec![(lo, hi)];
        if lo < 0.0 && hi > 0.0 {
            segments = vec![(lo, 0.0), (0.0, hi)];
        }
        let mut s = 0.0;
        for (a, b) in segments {
            let h = (b - a) / PANELS as f64;
            for p in 0..PANELS {
                let (u, v) = (a + p as f64 * h, a + (p + 1) as f64 * h);
                s += gl5_average(|yy| self.eval_at(t, yy) * phi.y_derivatives(yy)[0], u, v) * h;
            }
        }
        Ok(s * phi.k_profile.mean() * phi.time_factor(t))
    }
}

/// Free-function form of [`HeatProfile::eval`].
pub fn heat_dirichlet(profile: &HeatProfile, t: f64, y: f64) -> Result<f64> {
    profile.eval(t, y)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrankNicolson {
    pub half_width: f64,
    /// Number of intervals on [−L, L]; must be even so that y = 0 is a node.
    pub n_y: usize,
    pub n_t: usize,
}

impl Default for CrankNicolson {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            n_y: 800,
            n_t: 800,
        }
    }
}

/// Solves tridiagonal a·x[i−1] + b·x[i] + c·x[i+1] = d[i] (constant a, b, c)
/// in place.
fn thomas(a: f64, b: f64, c: f64, d: &mut [f64]) {
    let n = d.len();
    let mut cp = vec![0.0; n];
    cp[0] = c / b;
    d[0] /= b;
    for i in 1..n {
        let m = b - a * cp[i - 1];
        cp[i] = c / m;
        d[i] = (d[i] - a * d[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        d[i] -= cp[i] * d[i + 1];
    }
}

/// Node values of the Crank–Nicolson solution at `t_end` on the grid of
/// `opts`, with ρ = T held at y = 0 and the far-field values of ρ₀ at ±L.
/// Four backward-Euler half steps start the march.
pub fn crank_nicolson(profile: &HeatProfile, t_end: f64, opts: &CrankNicolson) -> Result<Vec<(f64, f64)>> {
    if opts.n_y < 4 || opts.n_y % 2 != 0 || opts.n_t < 2 {
        return Err(Error::param("n_y", "need an even n_y >= 4 and n_t >= 2"));
    }
    if !(t_end > 0.0 && t_end.is_finite()) || !(opts.half_width > 0.0) {
        return Err(Error::param("t_end", "must be positive"));
    }
    let n = opts.n_y;
    let h = 2.0 * opts.half_width / n as f64;
    let node = |i: usize| {
        if i == n / 2 {
            0.0
        } else {
            -opts.half_width + i as f64 * h
        }
    };
    let t_ref = profile.temperature;
    let mut u: Vec<f64> = (0..=n).map(|i| profile.rho0.value(node(i))).collect();
    u[0] = profile.rho0.values[0];
    u[n] = *profile.rho0.values.last().expect("nonempty");
    u[n / 2] = t_ref;
    let fixed = [u[0], t_ref, u[n]];

    let dt = t_end / opts.n_t as f64;
    // Interior blocks (1..n/2) and (n/2+1..n), each with Dirichlet ends.
    let step = |u: &mut Vec<f64>, tau: f64, theta: f64| {
        let r = profile.diffusion * tau / (h * h);
        for (lo, hi) in [(0, n / 2), (n / 2, n)] {
            let mut d: Vec<f64> = ((lo + 1)..hi)
                .map(|i| u[i] + (1.0 - theta) * r * (u[i - 1] - 2.0 * u[i] + u[i + 1]))
                .collect();
            let m = d.len();
            d[0] += theta * r * u[lo];
            d[m - 1] += theta * r * u[hi];
            thomas(-theta * r, 1.0 + 2.0 * theta * r, -theta * r, &mut d);
            u[lo + 1..hi].copy_from_slice(&d);
        }
    };
    for _ in 0..4 {
        step(&mut u, 0.5 * dt, 1.0);
    }
    for _ in 2..opts.n_t {
        step(&mut u, dt, 0.5);
    }
    debug_assert_eq!([u[0], u[n / 2], u[n]], fixed);
    Ok((0..=n).map(|i| (node(i), u[i])).collect())
}

/// Sup-norm distance between the image-kernel solution and an independent
/// Crank–Nicolson solve at `t_end`.
pub fn heat_crosscheck(profile: &HeatProfile, t_end: f64, opts: &CrankNicolson) -> Result<f64> {
    let nodes = crank_nicolson(profile, t_end, opts)?;
    let mut worst = 0.0f64;
    for (y, v) in nodes {
        worst = worst.max((profile.eval(t_end, y)? - v).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::WavenumberGrid;

    fn headline() -> HeatProfile {
        HeatProfile::new(
            PiecewiseConstant::from_profile(&PiecewiseProfile::headline()).unwrap(),
            0.125,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn piecewise_constant_from_profile() {
        let p = PiecewiseConstant::from_profile(&PiecewiseProfile::headline()).unwrap();
        assert_eq!(p.breakpoints, vec![-2.0, -1.0, 1.0, 2.0]);
        assert_eq!(p.values, vec![0.0, 2.0, 0.0, 2.0, 0.0]);
        assert_eq!(p.value(1.5), 2.0);
        assert_eq!(p.value(1.0), 1.0);
        assert!(PiecewiseConstant::new(vec![1.0, 0.0], vec![0.0; 3]).is_err());
        assert!(PiecewiseConstant::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn erf_of_constant_half_line() {
        let h = HeatProfile::new(PiecewiseConstant::new(vec![0.0], vec![0.0, 3.0]).unwrap(), 0.125, 0.0).unwrap();
        for &(t, y) in &[(0.1f64, 0.2f64), (0.5, 1.0), (1.0, 0.05), (2.0, 3.0)] {
            let exact = 3.0 * erf(y / (4.0 * 0.125 * t).sqrt());
            assert!((h.eval(t, y).unwrap() - exact).abs() < 1e-14);
        }
        assert!(h.eval(0.0, 1.0).is_err());
        assert!(h.eval(-1.0, 1.0).is_err());
    }

    #[test]
    fn boundary_value_is_the_temperature() {
        let h = headline();
        for t in [0.1, 0.5, 1.0] {
            for y in [-1e-8, 1e-8] {
                assert!((h.eval(t, y).unwrap() - 1.0).abs() < 1e-6);
            }
            assert_eq!(h.eval(t, 0.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn odd_data_give_odd_solutions() {
        let p = PiecewiseConstant::new(vec![-2.0, -0.5, 0.5, 2.0], vec![0.0, -1.5, 0.0, 1.5, 0.0]).unwrap();
        let h = HeatProfile::new(p, 0.3, 0.0).unwrap();
        for y in [0.1, 0.7, 1.9, 3.0] {
            let (a, b) = (h.eval(0.4, y).unwrap(), h.eval(0.4, -y).unwrap());
            assert!((a + b).abs() < 1e-15);
        }
    }

    #[test]
    fn half_lines_decouple() {
        let a = headline();
        let mut b = headline();
        b.rho0.values[1] = -7.0;
        b.rho0.values[0] = 3.0;
        for y in [0.01, 0.5, 1.5, 3.0] {
            assert_eq!(a.eval(0.3, y).unwrap(), b.eval(0.3, y).unwrap());
        }
        assert_ne!(a.eval(0.3, -1.5).unwrap(), b.eval(0.3, -1.5).unwrap());
    }

    #[test]
    fn maximum_principle() {
        let h = headline();
        for t in [0.01, 0.25, 1.0, 10.0] {
            for i in 0..=200 {
                let y = -5.0 + 0.05 * i as f64;
                let v = h.eval(t, y).unwrap();
                assert!((-1e-14..=2.0 + 1e-14).contains(&v), "{t} {y} {v}");
            }
        }
    }

    #[test]
    fn rho0_is_the_k_average() {
        let y = YGrid::new(40, 4.0);
        let k = WavenumberGrid::new(16).unwrap();
        let f = |yy: f64| if yy.abs() < 2.0 { 1.0 + yy * yy } else { 0.5 };
        let w0 = KineticField::from_fn(&y, &k, |yy, kk| f(yy) * (1.0 + (2.0 * std::f64::consts::PI * kk).sin()));
        let rho0 = rho0_from_w0(&w0, &y).unwrap();
        for i in 0..y.n_y {
            assert!((rho0.values[i] - f(y.center(i))).abs() < 1e-13);
        }
        let eq = KineticField::constant(40, 16, 1.7);
        assert!(rho0_from_w0(&eq, &y)
            .unwrap()
            .values
            .iter()
            .all(|&v| (v - 1.7).abs() < 1e-14));
    }

    #[test]
    fn crank_nicolson_matches_images() {
        let h = headline();
        let d = heat_crosscheck(&h, 0.5, &CrankNicolson::default()).unwrap();
        assert!(d < 1e-4, "{d}");
        let eq = HeatProfile::new(PiecewiseConstant::constant(1.0), 0.125, 1.0).unwrap();
        assert!(heat_crosscheck(&eq, 0.5, &CrankNicolson::default()).unwrap() < 1e-14);
    }

    #[test]
    fn crank_nicolson_is_second_order() {
        let box_ = PiecewiseConstant::new(vec![-1.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let h = HeatProfile::new(box_, 0.125, 0.0).unwrap();
        let coarse = CrankNicolson {
            half_width: 4.0,
            n_y: 200,
            n_t: 200,
        };
        let fine = CrankNicolson {
            n_y: 400,
            n_t: 400,
            ..coarse
        };
        let e1 = heat_crosscheck(&h, 0.5, &coarse).unwrap();
        let e2 = heat_crosscheck(&h, 0.5, &fine).unwrap();
        assert!(e2 < 1e-4);
        assert!((3.0..5.0).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn pairing_with_a_constant_solution() {
        let eq = HeatProfile::new(PiecewiseConstant::constant(2.0), 0.125, 2.0).unwrap();
        let phi = SmoothTestFn::bump(0.5, 1.0).with_profile(crate::testfn::KProfile::Cos { amp: 0.5, mode: 1 });
        let p = eq.pairing(&phi, 0.3).unwrap();
        assert!((p - 2.0 * phi.integral(0.3)).abs() < 1e-12);
    }
}
