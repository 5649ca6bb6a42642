//! X-ray transform along transverse directions, the pairing oracle and the
//! extraction of Fourier samples of `beta_23` from probe pairings.

mod extract;
mod recon;
mod stability;

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dn::{PairingPath, PairingRecord};
use crate::error::{Error, Result};
use crate::fields::ExtendedDifference;
use crate::probes::{chord, line_integral, window, GOComponents, TransverseField, WINDOW_HALF_WIDTH};
use crate::quad::CompositeRule;

pub use extract::{
    beta_hat_direct, divisor, extract_beta_hat, lattice, oracle_samples, pde_samples, pick_j, probe_direction, probe_k,
    write_samples_csv, FourierSample, FourierSampleGrid, RayTable, SAMPLES_CSV_HEADER,
};
pub use recon::{japanese, reconstruct_beta23, write_field, ReconGrid, Reconstruction};
pub use stability::{
    fitted_slope, log_slope, stability_experiment, stability_row, StabilityRow, StabilitySetup, STABILITY_CSV_HEADER,
};

/// `(P f)(omega, x) = int_R f(x1, x' + s omega) ds` for `f` supported in `B(0, rho)`.
pub fn xray_transform<F: Fn([f64; 3]) -> f64>(f: F, rho: f64, omega: [f64; 2], x: [f64; 3]) -> Result<f64> {
    line_integral(f, rho, x, omega, f64::NEG_INFINITY, f64::INFINITY)
}

/// `rho_j = omega . d A' / d x_j` for the extended difference.
pub struct RhoJ<'a> {
    pub diff: &'a ExtendedDifference,
    pub omega: [f64; 2],
    pub j: usize,
}

/// `(2 pi)^{-1} int e^{-i x'.xi} f(x1, x') dx'` by tensor Gauss-Legendre.
pub fn fourier_2d(f: &dyn Fn([f64; 3]) -> f64, x1: f64, xi: [f64; 2], r: f64) -> Complex64 {
    let rule = CompositeRule::new(-r, r, 24, 12);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&a, &wa) in rule.nodes.iter().zip(&rule.weights) {
        for (&b, &wb) in rule.nodes.iter().zip(&rule.weights) {
            let v = f([x1, a, b]);
            if v != 0.0 {
                acc += Complex64::from_polar(v * wa * wb, -(a * xi[0] + b * xi[1]));
            }
        }
    }
    acc / (2.0 * PI)
}

/// `(2 pi)^{-1} int_{omega^perp} e^{-i x'.xi} (P f) dx'` for `xi` parallel to `perp`.
pub fn slice_fourier(f: &dyn Fn([f64; 3]) -> f64, x1: f64, omega: [f64; 2], eta: f64, r: f64) -> Result<Complex64> {
    let e = [-omega[1], omega[0]];
    let rule = CompositeRule::new(-r, r, 24, 12);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&p, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = xray_transform(f, r, omega, [x1, p * e[0], p * e[1]])?;
        acc += Complex64::from_polar(v * w, -eta * p);
    }
    Ok(acc / (2.0 * PI))
}

pub fn rho_j(diff: &ExtendedDifference, omega: [f64; 2], j: usize) -> Result<RhoJ<'_>> {
    if j != 2 && j != 3 {
        return Err(Error::Index(format!("rho_j needs j in {{2, 3}}, got {j}")));
    }
    Ok(RhoJ { diff, omega, j })
}

impl RhoJ<'_> {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let jac = self.diff.jac(x);
        self.omega[0] * jac[0][self.j - 1] + self.omega[1] * jac[1][self.j - 1]
    }

    /// `(P rho_j)(omega, x)`.
    pub fn xray(&self, x: [f64; 3]) -> Result<f64> {
        xray_transform(|y| self.eval(y), self.diff.radius(), self.omega, x)
    }
}

/// Both sides of `int_0^T sigma omega.A'(x1, x' + 2 sigma t omega) b dt = (i/2)[exp(-i int_0^{2 sigma T}) - 1]`.
pub fn telescope_check<F: TransverseField + ?Sized>(
    field: &F,
    omega: [f64; 2],
    sigma: f64,
    t_final: f64,
    x: [f64; 3],
) -> Result<(Complex64, Complex64)> {
    let rho = field.radius();
    let wa = |y: [f64; 3]| {
        let a = field.at(y);
        omega[0] * a[0] + omega[1] * a[1]
    };
    let mut lhs = Complex64::new(0.0, 0.0);
    let total = line_integral(wa, rho, x, omega, 0.0, 2.0 * sigma * t_final)?;
    let rhs = Complex64::new(0.0, 0.5) * (Complex64::from_polar(1.0, -total) - 1.0);
    let Some((lo, hi)) = chord([x[1], x[2]], omega, rho) else {
        return Ok((lhs, rhs));
    };
    let (t0, t1) = ((lo / (2.0 * sigma)).max(0.0), (hi / (2.0 * sigma)).min(t_final));
    if t0 >= t1 {
        return Ok((lhs, rhs));
    }
    let rule = CompositeRule::new(t0, t1, 32, 10);
    let mut acc = Complex64::new(0.0, 0.0);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let tau = 2.0 * sigma * t;
        let a = wa([x[0], x[1] + tau * omega[0], x[2] + tau * omega[1]]);
        if a != 0.0 {
            let phase = line_integral(wa, rho, x, omega, 0.0, tau)?;
            acc += Complex64::from_polar(sigma * a * w, -phase);
        }
    }
    lhs += acc;
    Ok((lhs, rhs))
}

/// Quadrature sizes for the tensor oracle: `x1` trapezoid nodes, then Gauss panels and
/// order in `p` and in `q`.
#[derive(Debug, Clone, Copy)]
pub struct OracleQuadrature {
    pub n1: usize,
    pub panels: usize,
    pub order: usize,
}

impl Default for OracleQuadrature {
    fn default() -> Self {
        OracleQuadrature { n1: 16, panels: 8, order: 8 }
    }
}

/// `-(1/4) int_0^1 int_{R^2} e^{-2 i k pi x1} phi^2 (P rho_j) exp(-i int_R omega.A') dx`
/// by tensor quadrature over the probe support.
pub fn pairing_oracle(c: &GOComponents, diff: &ExtendedDifference, quad: OracleQuadrature) -> Result<PairingRecord> {
    let s = c.spec;
    let rho = rho_j(diff, s.omega, s.j)?;
    let (pb, qb) = c.support_box();
    let rp = CompositeRule::new(pb[0], pb[1], quad.panels, quad.order);
    let rq = CompositeRule::new(qb[0], qb[1], quad.panels, quad.order);
    let e = s.perp();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..quad.n1 {
        let x1 = i as f64 / quad.n1 as f64;
        let mode = Complex64::from_polar(1.0, -2.0 * PI * s.k as f64 * x1);
        for (&p, &wp) in rp.nodes.iter().zip(&rp.weights) {
            let base = [x1, p * e[0], p * e[1]];
            let pr = rho.xray(base)?;
            if pr == 0.0 {
                continue;
            }
            let (ray, _) = c.ray(x1, p)?;
            let tail = Complex64::from_polar(pr, -ray);
            let mut inner = Complex64::new(0.0, 0.0);
            for (&q, &wq) in rq.nodes.iter().zip(&rq.weights) {
                let x = [x1, p * e[0] + q * s.omega[0], p * e[1] + q * s.omega[1]];
                let phi = c.phi(x)?;
                inner += phi * phi * wq;
            }
            acc += mode * inner * tail * wp;
        }
    }
    let value = acc * (-0.25 / quad.n1 as f64);
    Ok(PairingRecord::new(&s, value, PairingPath::Oracle))
}

/// The same pairing after integrating out the profile along rays:
/// `-(1/4) int_0^1 e^{-2 i k pi x1} e^{2 i theta x1} int e^{-i eta p} beta0(p) (P rho_j)(x1, p) dp dx1`.
pub fn window_reduced(c: &GOComponents, diff: &ExtendedDifference, n1: usize) -> Result<Complex64> {
    let s = c.spec;
    let rho = rho_j(diff, s.omega, s.j)?;
    let e = s.perp();
    let eta = s.eta();
    let rule = CompositeRule::new(s.z0 - WINDOW_HALF_WIDTH, s.z0 + WINDOW_HALF_WIDTH, 16, 10);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n1 {
        let x1 = i as f64 / n1 as f64;
        let mode = Complex64::from_polar(1.0, (2.0 * s.theta - 2.0 * PI * s.k as f64) * x1);
        let mut inner = Complex64::new(0.0, 0.0);
        for (&p, &wp) in rule.nodes.iter().zip(&rule.weights) {
            let w = window(p, s.z0);
            if w != 0.0 {
                inner += Complex64::from_polar(w * wp * rho.xray([x1, p * e[0], p * e[1]])?, -eta * p);
            }
        }
        acc += mode * inner;
    }
    Ok(acc * (-0.25 / n1 as f64))
}
