//! One-dimensional quadrature rules shared by the ray, X-ray and probe code.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: reals and complex numbers.
pub trait Quadrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Quadrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Quadrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

const MAX_DEPTH: u32 = 40;

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance `tol`.
///
/// Fails only when the integrand produces a non-finite value.
pub fn adaptive_simpson<T: Quadrand, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64, tol: f64) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    refine(&mut f, a, b, [fa, fm, fb], tol, MAX_DEPTH, 3)
}

fn simpson<T: Quadrand>(a: f64, b: f64, fa: T, fm: T, fb: T) -> T {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

// `forced` levels are always split so that integrands vanishing on the coarse
// nodes are not accepted blindly.
fn refine<T: Quadrand, F: FnMut(f64) -> T>(
    f: &mut F,
    a: f64,
    b: f64,
    [fa, fm, fb]: [T; 3],
    tol: f64,
    depth: u32,
    forced: u32,
) -> Result<T> {
    let m = 0.5 * (a + b);
    let whole = simpson(a, b, fa, fm, fb);
    let flm = f(0.5 * (a + m));
    let frm = f(0.5 * (m + b));
    let fine = simpson(a, m, fa, flm, fm) + simpson(m, b, fm, frm, fb);
    let diff = fine - whole;
    if !fine.magnitude().is_finite() {
        return Err(Error::Quadrature { a, b, reason: "non-finite integrand".into() });
    }
    let tiny = (b - a).abs() < 1e-14 * (1.0 + a.abs());
    if forced == 0 && (depth == 0 || diff.magnitude() <= 15.0 * tol || tiny) {
        return Ok(fine + diff * (1.0 / 15.0));
    }
    let forced = forced.saturating_sub(1);
    let l = refine(f, a, m, [fa, flm, fm], tol * 0.5, depth - 1, forced)?;
    let r = refine(f, m, b, [fm, frm, fb], tol * 0.5, depth - 1, forced)?;
    Ok(l + r)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A composite Gauss-Legendre rule: `panels` equal panels on `[a, b]`, `order` nodes each.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * width * (xi + 1.0));
                weights.push(0.5 * width * wi);
            }
        }
        CompositeRule { nodes, weights }
    }

    pub fn integrate<T: Quadrand, F: FnMut(f64) -> T>(&self, mut f: F) -> T {
        let mut acc = T::zero();
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(*x) * *w;
        }
        acc
    }
}

/// Trapezoid weights for `n + 1` uniform samples spaced by `dt`.
pub fn trapezoid_weights(n: usize, dt: f64) -> Vec<f64> {
    let mut w = vec![dt; n + 1];
    w[0] *= 0.5;
    w[n] *= 0.5;
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        for p in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "degree {p}: {q} vs {exact}");
        }
    }

    #[test]
    fn simpson_handles_smooth_and_complex() {
        let v = adaptive_simpson(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let c = adaptive_simpson(|x: f64| Complex64::new(0.0, 3.0 * x).exp(), 0.0, 1.0, 1e-12).unwrap();
        let exact = (Complex64::new(0.0, 3.0).exp() - 1.0) / Complex64::new(0.0, 3.0);
        assert!((c - exact).norm() < 1e-11);
    }

    #[test]
    fn simpson_reports_non_finite() {
        assert!(adaptive_simpson(|x: f64| 1.0 / x, 0.0, 1.0, 1e-8).is_err());
    }

    #[test]
    fn composite_rule_matches_exponential() {
        let r = CompositeRule::new(0.0, 2.0, 4, 10);
        let v = r.integrate(|x| x.exp());
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-13);
    }
}
