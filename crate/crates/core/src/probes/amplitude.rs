use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{ExtendedDifference, MagneticPotential};
use crate::quad::adaptive_simpson;

/// Absolute tolerance of every ray quadrature.
pub const RAY_TOL: f64 = 1e-10;

/// A compactly supported transverse field `A' = (a2, a3)`.
pub trait TransverseField: Send + Sync {
    fn at(&self, x: [f64; 3]) -> [f64; 2];
    /// `d a_i / d x_k` for `i = 2, 3` (rows) and `k = 1, 2, 3` (columns).
    fn jac(&self, x: [f64; 3]) -> [[f64; 3]; 2];
    /// Radius of a ball in `x'` containing the support.
    fn radius(&self) -> f64;
}

impl TransverseField for MagneticPotential {
    fn at(&self, x: [f64; 3]) -> [f64; 2] {
        self.transverse(x)
    }
    fn jac(&self, x: [f64; 3]) -> [[f64; 3]; 2] {
        let j = self.jacobian(x);
        [j[1], j[2]]
    }
    fn radius(&self) -> f64 {
        self.support_radius()
    }
}

impl TransverseField for ExtendedDifference {
    fn at(&self, x: [f64; 3]) -> [f64; 2] {
        self.eval(x)
    }
    fn jac(&self, x: [f64; 3]) -> [[f64; 3]; 2] {
        let j = self.jacobian(x);
        [j[1], j[2]]
    }
    fn radius(&self) -> f64 {
        self.potential().support_radius()
    }
}

/// Parameters `s` with `|x' + s dir| <= rho`, if any.
pub fn chord(x: [f64; 2], dir: [f64; 2], rho: f64) -> Option<(f64, f64)> {
    let b = x[0] * dir[0] + x[1] * dir[1];
    let c = x[0] * x[0] + x[1] * x[1] - rho * rho;
    let disc = b * b - c;
    (disc > 0.0).then(|| (-b - disc.sqrt(), -b + disc.sqrt()))
}

/// `int_{s0}^{s1} g(x1, x' + s dir) ds` where `g` vanishes outside `B(0, rho)`.
pub fn line_integral<G: Fn([f64; 3]) -> f64>(
    g: G,
    rho: f64,
    x: [f64; 3],
    dir: [f64; 2],
    s0: f64,
    s1: f64,
) -> Result<f64> {
    if !rho.is_finite() {
        return Err(Error::Quadrature { a: s0, b: s1, reason: "field is not compactly supported".into() });
    }
    let Some((lo, hi)) = chord([x[1], x[2]], dir, rho) else {
        return Ok(0.0);
    };
    let (a, b) = (s0.max(lo), s1.min(hi));
    if a >= b {
        return Ok(0.0);
    }
    adaptive_simpson(|s| g([x[0], x[1] + s * dir[0], x[2] + s * dir[1]]), a, b, RAY_TOL)
}

/// `int_R omega . A'(x1, x' + s omega) ds`.
pub fn full_ray_integral<F: TransverseField + ?Sized>(field: &F, omega: [f64; 2], x: [f64; 3]) -> Result<f64> {
    line_integral(|y| dot(omega, field.at(y)), field.radius(), x, omega, f64::NEG_INFINITY, f64::INFINITY)
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `b(t, x) = exp(-i int_0^t omega . A'(x1, x' - s omega) ds)`.
pub struct Amplitude<'a, F: TransverseField + ?Sized> {
    field: &'a F,
    omega: [f64; 2],
}

pub fn build_amplitude<F: TransverseField + ?Sized>(field: &F, omega: [f64; 2]) -> Amplitude<'_, F> {
    Amplitude { field, omega }
}

impl<F: TransverseField + ?Sized> Amplitude<'_, F> {
    fn back(&self) -> [f64; 2] {
        [-self.omega[0], -self.omega[1]]
    }

    fn segment(&self, x: [f64; 3], s0: f64, s1: f64) -> Result<f64> {
        let w = self.omega;
        line_integral(|y| dot(w, self.field.at(y)), self.field.radius(), x, self.back(), s0, s1)
    }

    pub fn phase(&self, t: f64, x: [f64; 3]) -> Result<f64> {
        self.segment(x, 0.0, t)
    }

    pub fn eval(&self, t: f64, x: [f64; 3]) -> Result<Complex64> {
        Ok(Complex64::from_polar(1.0, -self.phase(t, x)?))
    }

    /// Phases at increasing times `ts`, accumulated segment by segment.
    pub fn phase_series(&self, x: [f64; 3], ts: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ts.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &t in ts {
            acc += self.segment(x, prev, t)?;
            prev = t;
            out.push(acc);
        }
        Ok(out)
    }
}
