//! Smooth compactly supported test functions
//! φ(t, y, k) = A·e^{−at}·b((y − c)/r)·h(k) with the C∞ bump
//! b(z) = exp(−1/(1 − z²)) on |z| < 1, and exact y-derivatives via
//! truncated Taylor arithmetic.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::quadrature::gl5_average;

/// Number of Taylor coefficients carried (derivatives up to order 3).
pub const ORDER: usize = 4;

/// ∫_{−1}^{1} exp(−1/(1 − z²)) dz
pub const BUMP_INTEGRAL: f64 = 0.443_993_816_168_079_4;

/// Truncated Taylor series f(x₀ + h) = Σ c[n] hⁿ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet(pub [f64; ORDER]);

impl Jet {
    pub fn constant(c: f64) -> Self {
        let mut a = [0.0; ORDER];
        a[0] = c;
        Jet(a)
    }

    pub fn variable(x: f64) -> Self {
        let mut a = [0.0; ORDER];
        a[0] = x;
        a[1] = 1.0;
        Jet(a)
    }

    pub fn recip(self) -> Self {
        let a = self.0;
        let mut b = [0.0; ORDER];
        b[0] = 1.0 / a[0];
        for n in 1..ORDER {
            let s: f64 = (1..=n).map(|i| a[i] * b[n - i]).sum();
            b[n] = -s * b[0];
        }
        Jet(b)
    }

    pub fn exp(self) -> Self {
        let a = self.0;
        let mut e = [0.0; ORDER];
        e[0] = a[0].exp();
        for n in 1..ORDER {
            let s: f64 = (1..=n).map(|i| i as f64 * a[i] * e[n - i]).sum();
            e[n] = s / n as f64;
        }
        Jet(e)
    }

    pub fn scale(self, s: f64) -> Self {
        Jet(self.0.map(|c| c * s))
    }

    /// Derivatives f, f′, f″, f‴ at the expansion point.
    pub fn derivatives(self) -> [f64; ORDER] {
        let mut d = self.0;
        let mut fact = 1.0;
        for (n, x) in d.iter_mut().enumerate().skip(1) {
            fact *= n as f64;
            *x *= fact;
        }
        d
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.0;
        for (x, y) in c.iter_mut().zip(o.0) {
            *x += y;
        }
        Jet(c)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + o.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER];
        for i in 0..ORDER {
            for j in 0..ORDER - i {
                c[i + j] += self.0[i] * o.0[j];
            }
        }
        Jet(c)
    }
}

/// b, b′, b″, b‴ of the bump at z.
pub fn bump_derivatives(z: f64) -> [f64; ORDER] {
    if z.abs() >= 1.0 {
        return [0.0; ORDER];
    }
    let x = Jet::variable(z);
    let one = Jet::constant(1.0);
    (one - x * x).recip().scale(-1.0).exp().derivatives()
}

/// k-dependence h(k) of a test function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KProfile {
    Flat,
    /// 1 + amp·cos(2π·mode·k)
    Cos {
        amp: f64,
        mode: u32,
    },
    /// 1 + amp·sin(2π·mode·k)
    Sin {
        amp: f64,
        mode: u32,
    },
}

impl KProfile {
    pub fn value(&self, k: f64) -> f64 {
        match *self {
            KProfile::Flat => 1.0,
            KProfile::Cos { amp, mode } => 1.0 + amp * (2.0 * PI * mode as f64 * k).cos(),
            KProfile::Sin { amp, mode } => 1.0 + amp * (2.0 * PI * mode as f64 * k).sin(),
        }
    }

    /// Mean of h over 𝕋.
    pub fn mean(&self) -> f64 {
        match *self {
            KProfile::Cos { amp, mode: 0 } => 1.0 + amp,
            _ => 1.0,
        }
    }

    /// Exact mean of h over [lo, hi].
    pub fn cell_average(&self, lo: f64, hi: f64) -> f64 {
        let w = 2.0 * PI;
        match *self {
            KProfile::Flat => 1.0,
            KProfile::Cos { mode: 0, .. } | KProfile::Sin { mode: 0, .. } => self.mean(),
            KProfile::Cos { amp, mode } => {
                let m = w * mode as f64;
                1.0 + amp * ((m * hi).sin() - (m * lo).sin()) / (m * (hi - lo))
            }
            KProfile::Sin { amp, mode } => {
                let m = w * mode as f64;
                1.0 - amp * ((m * hi).cos() - (m * lo).cos()) / (m * (hi - lo))
            }
        }
    }

    fn label(&self) -> String {
        match *self {
            KProfile::Flat => "flat".into(),
            KProfile::Cos { amp, mode } => format!("cos{mode}:{amp}"),
            KProfile::Sin { amp, mode } => format!("sin{mode}:{amp}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothTestFn {
    pub center: f64,
    pub radius: f64,
    pub amplitude: f64,
    pub decay_rate: f64,
    pub k_profile: KProfile,
}

impl SmoothTestFn {
    pub fn bump(center: f64, radius: f64) -> Self {
        Self {
            center,
            radius,
            amplitude: 1.0,
            decay_rate: 0.0,
            k_profile: KProfile::Flat,
        }
    }

    pub fn with_profile(mut self, k_profile: KProfile) -> Self {
        self.k_profile = k_profile;
        self
    }

    pub fn with_decay(mut self, rate: f64) -> Self {
        self.decay_rate = rate;
        self
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude = a;
        self
    }

    /// Open support (c − r, c + r) in y.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }

    /// Errors unless the closed support avoids y = 0.
    pub fn require_away_from_interface(&self) -> Result<()> {
        let (lo, hi) = self.support();
        if lo <= 0.0 && hi >= 0.0 {
            return Err(Error::Support(format!("[{lo}, {hi}] contains y = 0")));
        }
        Ok(())
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        (-self.decay_rate * t).exp()
    }

    /// A·b((y−c)/r) and its first three y-derivatives.
    pub fn y_derivatives(&self, y: f64) -> [f64; ORDER] {
        let d = bump_derivatives((y - self.center) / self.radius);
        let mut s = self.amplitude;
        let mut out = [0.0; ORDER];
        for n in 0..ORDER {
            out[n] = d[n] * s;
            s /= self.radius;
        }
        out
    }

    pub fn value(&self, t: f64, y: f64, k: f64) -> f64 {
        self.time_factor(t) * self.y_derivatives(y)[0] * self.k_profile.value(k)
    }

    /// ∫∫ φ(t, y, k) dy dk.
    pub fn integral(&self, t: f64) -> f64 {
        self.time_factor(t) * self.amplitude * self.radius * BUMP_INTEGRAL * self.k_profile.mean()
    }

    /// Mean of A·b((y−c)/r) over [lo, hi].
    pub fn y_cell_average(&self, lo: f64, hi: f64) -> f64 {
        let (s0, s1) = self.support();
        if hi <= s0 || lo >= s1 {
            return 0.0;
        }
        // Integrate only over the overlap so the cut-off is not inside a GL panel.
        let a = lo.max(s0);
        let b = hi.min(s1);
        let n = 4;
        let h = (b - a) / n as f64;
        let s: f64 = (0..n)
            .map(|i| gl5_average(|y| self.y_derivatives(y)[0], a + i as f64 * h, a + (i + 1) as f64 * h))
            .sum();
        s * h / (hi - lo)
    }

    pub fn label(&self) -> String {
        format!("c={} r={} {}", self.center, self.radius, self.k_profile.label())
    }

    /// Headline observable bank: bumps of half-width 1 centred at
    /// −3, −2.5, …, 3, each with a flat, cosine and sine k-profile.
    pub fn headline_bank() -> Vec<SmoothTestFn> {
        let mut bank = Vec::new();
        for i in 0..13 {
            let c = -3.0 + 0.5 * i as f64;
            for p in [
                KProfile::Flat,
                KProfile::Cos { amp: 0.5, mode: 1 },
                KProfile::Sin { amp: 0.5, mode: 1 },
            ] {
                bank.push(SmoothTestFn::bump(c, 1.0).with_profile(p));
            }
        }
        bank
    }
}
