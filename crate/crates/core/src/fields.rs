//! Closed-form magnetic potentials, gauge functions and certified potential pairs.
//!
//! Derivatives are analytic. `jacobian(x)[i][j]` is `da_i/dx_j` with 0-based
//! indices, `x = (x1, x2, x3)`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::domain::{CrossSection, Shape};
use crate::error::{Error, Result};

/// `exp(-1/u)` for `u > 0`, else 0.
fn flat(u: f64) -> f64 {
    if u > 0.0 {
        (-1.0 / u).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, C-infinity in between.
pub fn smooth_step(u: f64) -> f64 {
    let (a, b) = (flat(u), flat(1.0 - u));
    if a + b == 0.0 {
        return if u >= 1.0 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

pub fn smooth_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let (a, b) = (flat(u), flat(1.0 - u));
    let da = a / (u * u);
    let db = b / ((1.0 - u) * (1.0 - u));
    (da * b + a * db) / ((a + b) * (a + b))
}

/// Standard bump `chi(u) = exp(1 - 1/(1-u^2))` with its first two derivatives.
pub fn bump(u: f64) -> (f64, f64, f64) {
    if u.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - u * u;
    let c = (1.0 - 1.0 / q).exp();
    let d1 = c * (-2.0 * u / (q * q));
    let d2 = c * (4.0 * u * u / q.powi(4) - 2.0 / (q * q) - 8.0 * u * u / q.powi(3));
    (c, d1, d2)
}

/// Radial plateau cutoff: 1 on `B(c, r0)`, 0 outside `B(c, rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub center: [f64; 2],
    pub plateau: f64,
    pub radius: f64,
}

impl Cutoff {
    pub fn value_grad(&self, x2: f64, x3: f64) -> (f64, [f64; 2]) {
        let d = [x2 - self.center[0], x3 - self.center[1]];
        let r = d[0].hypot(d[1]);
        let w = self.radius - self.plateau;
        let u = (self.radius - r) / w;
        let v = smooth_step(u);
        if r < 1e-300 {
            return (v, [0.0, 0.0]);
        }
        let dr = -smooth_step_deriv(u) / w;
        (v, [dr * d[0] / r, dr * d[1] / r])
    }

    pub fn support_radius(&self) -> f64 {
        self.center[0].hypot(self.center[1]) + self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GaugeFunction {
    Zero,
    /// `amplitude * (1 + modulation sin 2 pi x1) * chi(|x' - c| / radius)`; vanishes near the lateral boundary
    /// when the ball lies inside the cross-section.
    Bump {
        amplitude: f64,
        center: [f64; 2],
        radius: f64,
        modulation: f64,
    },
    /// `g2 x2 + g3 x3 + offset`; does not vanish on the boundary.
    Linear {
        g2: f64,
        g3: f64,
        offset: f64,
    },
}

impl GaugeFunction {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.eval_all(x).0
    }

    /// Value, gradient and Hessian.
    pub fn eval_all(&self, x: [f64; 3]) -> (f64, [f64; 3], [[f64; 3]; 3]) {
        match *self {
            GaugeFunction::Zero => (0.0, [0.0; 3], [[0.0; 3]; 3]),
            GaugeFunction::Linear { g2, g3, offset } => (g2 * x[1] + g3 * x[2] + offset, [0.0, g2, g3], [[0.0; 3]; 3]),
            GaugeFunction::Bump { amplitude, center, radius, modulation } => {
                let w = 2.0 * PI;
                let q = 1.0 + modulation * (w * x[0]).sin();
                let dq = modulation * w * (w * x[0]).cos();
                let ddq = -modulation * w * w * (w * x[0]).sin();
                let d = [x[1] - center[0], x[2] - center[1]];
                let r = d[0].hypot(d[1]);
                let (c, c1, c2) = bump(r / radius);
                let fr = c1 / radius;
                let frr = c2 / (radius * radius);
                let (gx, hxx) = if r < 1e-12 {
                    ([0.0, 0.0], [[frr, 0.0], [0.0, frr]])
                } else {
                    let n = [d[0] / r, d[1] / r];
                    let mut h = [[0.0; 2]; 2];
                    for a in 0..2 {
                        for b in 0..2 {
                            let id = if a == b { 1.0 } else { 0.0 };
                            h[a][b] = frr * n[a] * n[b] + fr / r * (id - n[a] * n[b]);
                        }
                    }
                    ([fr * n[0], fr * n[1]], h)
                };
                let a = amplitude;
                let grad = [a * dq * c, a * q * gx[0], a * q * gx[1]];
                let hess = [
                    [a * ddq * c, a * dq * gx[0], a * dq * gx[1]],
                    [a * dq * gx[0], a * q * hxx[0][0], a * q * hxx[0][1]],
                    [a * dq * gx[1], a * q * hxx[1][0], a * q * hxx[1][1]],
                ];
                (a * q * c, grad, hess)
            }
        }
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        self.eval_all(x).1
    }

    /// Largest `|Psi|` over the lateral boundary nodes and 16 values of `x1`.
    pub fn boundary_max(&self, cs: &CrossSection) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..16 {
            let x1 = k as f64 / 16.0;
            for b in cs.boundary() {
                let c = cs.coords(b.node);
                m = m.max(self.eval([x1, c[0], c[1]]).abs());
            }
        }
        m
    }

    pub fn vanishes_on_boundary(&self, cs: &CrossSection) -> bool {
        self.boundary_max(cs) <= 1e-12
    }

    fn support_radius(&self) -> f64 {
        match *self {
            GaugeFunction::Zero => 0.0,
            GaugeFunction::Bump { center, radius, .. } => center[0].hypot(center[1]) + radius,
            GaugeFunction::Linear { .. } => f64::INFINITY,
        }
    }
}

/// A 1-periodic (in x1) magnetic potential in closed form.
#[derive(Debug, Clone, PartialEq)]
pub enum MagneticPotential {
    Zero,
    /// `a1 = axial cut cos(2 pi x1)`,
    /// `A' = strength cut (1 + modulation cos 2 pi x1) (-(x3-c3)/2, (x2-c2)/2)`;
    /// `beta_23 = -strength` on the plateau when `modulation = 0`.
    Swirl {
        strength: f64,
        cutoff: Cutoff,
        modulation: f64,
        axial: f64,
    },
    /// `A' = cut (1 + modulation sin 2 pi x1) (alpha2, alpha3)`.
    Drift {
        alpha: [f64; 2],
        cutoff: Cutoff,
        modulation: f64,
    },
    Sum(Arc<MagneticPotential>, Arc<MagneticPotential>),
    Scaled(f64, Arc<MagneticPotential>),
    /// `A + grad Psi`.
    GaugeShifted(Arc<MagneticPotential>, GaugeFunction),
}

pub type Jacobian = [[f64; 3]; 3];

impl MagneticPotential {
    pub fn sum(a: MagneticPotential, b: MagneticPotential) -> Self {
        MagneticPotential::Sum(Arc::new(a), Arc::new(b))
    }

    pub fn scaled(s: f64, a: MagneticPotential) -> Self {
        MagneticPotential::Scaled(s, Arc::new(a))
    }

    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        self.eval_jac(x).0
    }

    pub fn jacobian(&self, x: [f64; 3]) -> Jacobian {
        self.eval_jac(x).1
    }

    /// The cross-section part `A' = (a2, a3)`.
    pub fn transverse(&self, x: [f64; 3]) -> [f64; 2] {
        let a = self.eval(x);
        [a[1], a[2]]
    }

    pub fn eval_jac(&self, x: [f64; 3]) -> ([f64; 3], Jacobian) {
        let w = 2.0 * PI;
        match self {
            MagneticPotential::Zero => ([0.0; 3], [[0.0; 3]; 3]),
            MagneticPotential::Swirl { strength, cutoff, modulation, axial } => {
                let (cut, gc) = cutoff.value_grad(x[1], x[2]);
                let (s, c) = (w * x[0]).sin_cos();
                let q = 1.0 + modulation * c;
                let dq = -modulation * w * s;
                let d = [x[1] - cutoff.center[0], x[2] - cutoff.center[1]];
                let g = strength * cut * q;
                let gx = [strength * cut * dq, strength * gc[0] * q, strength * gc[1] * q];
                let a1 = axial * cut * c;
                let a2 = -0.5 * g * d[1];
                let a3 = 0.5 * g * d[0];
                let jac = [
                    [-axial * cut * w * s, axial * gc[0] * c, axial * gc[1] * c],
                    [-0.5 * gx[0] * d[1], -0.5 * gx[1] * d[1], -0.5 * gx[2] * d[1] - 0.5 * g],
                    [0.5 * gx[0] * d[0], 0.5 * gx[1] * d[0] + 0.5 * g, 0.5 * gx[2] * d[0]],
                ];
                ([a1, a2, a3], jac)
            }
            MagneticPotential::Drift { alpha, cutoff, modulation } => {
                let (cut, gc) = cutoff.value_grad(x[1], x[2]);
                let (s, c) = (w * x[0]).sin_cos();
                let q = 1.0 + modulation * s;
                let dq = modulation * w * c;
                let mut jac = [[0.0; 3]; 3];
                for k in 0..2 {
                    jac[k + 1] = [alpha[k] * cut * dq, alpha[k] * gc[0] * q, alpha[k] * gc[1] * q];
                }
                ([0.0, alpha[0] * cut * q, alpha[1] * cut * q], jac)
            }
            MagneticPotential::Sum(a, b) => {
                let (va, ja) = a.eval_jac(x);
                let (vb, jb) = b.eval_jac(x);
                let mut jac = ja;
                for i in 0..3 {
                    for j in 0..3 {
                        jac[i][j] += jb[i][j];
                    }
                }
                ([va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]], jac)
            }
            MagneticPotential::Scaled(s, a) => {
                let (v, mut jac) = a.eval_jac(x);
                jac.iter_mut().flatten().for_each(|e| *e *= s);
                ([s * v[0], s * v[1], s * v[2]], jac)
            }
            MagneticPotential::GaugeShifted(a, psi) => {
                let (v, mut jac) = a.eval_jac(x);
                let (_, g, h) = psi.eval_all(x);
                for i in 0..3 {
                    for j in 0..3 {
                        jac[i][j] += h[i][j];
                    }
                }
                ([v[0] + g[0], v[1] + g[1], v[2] + g[2]], jac)
            }
        }
    }

    /// Radius of a ball in x' outside of which every component vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            MagneticPotential::Zero => 0.0,
            MagneticPotential::Swirl { cutoff, .. } | MagneticPotential::Drift { cutoff, .. } => {
                cutoff.support_radius()
            }
            MagneticPotential::Sum(a, b) => a.support_radius().max(b.support_radius()),
            MagneticPotential::Scaled(_, a) => a.support_radius(),
            MagneticPotential::GaugeShifted(a, psi) => a.support_radius().max(psi.support_radius()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, MagneticPotential::Zero)
    }

    /// `div A' = da2/dx2 + da3/dx3`.
    pub fn transverse_divergence(&self, x: [f64; 3]) -> f64 {
        let j = self.jacobian(x);
        j[1][1] + j[2][2]
    }

    /// Sup-norm of `|a_j(x1 + 1, x') - a_j(x1, x')|` over the given points.
    pub fn periodicity_defect(&self, points: &[[f64; 3]]) -> f64 {
        let mut m: f64 = 0.0;
        for p in points {
            let a = self.eval(*p);
            let b = self.eval([p[0] + 1.0, p[1], p[2]]);
            for k in 0..3 {
                m = m.max((a[k] - b[k]).abs());
            }
        }
        m
    }

    /// Sup-norm of `A` over points outside the declared support ball.
    pub fn support_defect(&self, points: &[[f64; 3]]) -> f64 {
        let r = self.support_radius();
        points.iter().filter(|p| p[1].hypot(p[2]) > r).flat_map(|p| self.eval(*p)).fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn gauge_transform(a: &MagneticPotential, psi: &GaugeFunction) -> MagneticPotential {
    if *psi == GaugeFunction::Zero {
        return a.clone();
    }
    MagneticPotential::GaugeShifted(Arc::new(a.clone()), psi.clone())
}

/// `beta_ij = da_i/dx_j - da_j/dx_i` at `x`, with 1-based indices.
pub fn beta(a: &MagneticPotential, i: usize, j: usize, x: [f64; 3]) -> Result<f64> {
    if i == j || !(1..=3).contains(&i) || !(1..=3).contains(&j) {
        return Err(Error::Index(format!("beta needs distinct indices in 1..=3, got ({i}, {j})")));
    }
    let jac = a.jacobian(x);
    Ok(jac[i - 1][j - 1] - jac[j - 1][i - 1])
}

/// `beta_23` of a potential (convenience used by the reconstruction code).
pub fn beta23(a: &MagneticPotential, x: [f64; 3]) -> f64 {
    let jac = a.jacobian(x);
    jac[1][2] - jac[2][1]
}

/// Two potentials sharing boundary values and normal derivatives.
#[derive(Debug, Clone)]
pub struct PotentialPair {
    pub a1: MagneticPotential,
    pub a2: MagneticPotential,
}

pub const BOUNDARY_TOL: f64 = 1e-12;

impl PotentialPair {
    pub fn new(a1: MagneticPotential, a2: MagneticPotential) -> Self {
        PotentialPair { a1, a2 }
    }

    /// `A = A2 - A1`.
    pub fn difference(&self) -> MagneticPotential {
        MagneticPotential::sum(self.a2.clone(), MagneticPotential::scaled(-1.0, self.a1.clone()))
    }

    /// Largest value of `|A|` and `|dA|` over lateral boundary nodes.
    pub fn boundary_defect(&self, cs: &CrossSection) -> f64 {
        let d = self.difference();
        let mut m: f64 = 0.0;
        for k in 0..16 {
            let x1 = k as f64 / 16.0;
            for b in cs.boundary() {
                let c = cs.coords(b.node);
                let (v, j) = d.eval_jac([x1, c[0], c[1]]);
                m = v.iter().chain(j.iter().flatten()).fold(m, |m, e| m.max(e.abs()));
            }
        }
        m
    }

    /// Checks boundary flatness of the difference and admissibility of both members.
    pub fn certify(&self, cs: &CrossSection) -> Result<()> {
        let defect = self.boundary_defect(cs);
        if defect > BOUNDARY_TOL {
            return Err(Error::Geometry(format!("potentials differ on the lateral boundary by {defect:e}")));
        }
        for (name, a) in [("A1", &self.a1), ("A2", &self.a2)] {
            let m = crate::domain::admissibility_margin(a, cs)?;
            if m <= 0.0 {
                return Err(Error::Geometry(format!("{name} is not admissible (margin {m:e})")));
            }
        }
        Ok(())
    }

    pub fn extend_by_zero(&self, shape: Shape) -> ExtendedDifference {
        ExtendedDifference { diff: self.difference(), shape }
    }
}

/// `A' = A2' - A1'` inside the cross-section, 0 outside.
#[derive(Debug, Clone)]
pub struct ExtendedDifference {
    diff: MagneticPotential,
    shape: Shape,
}

impl ExtendedDifference {
    pub fn eval(&self, x: [f64; 3]) -> [f64; 2] {
        if self.shape.contains([x[1], x[2]]) {
            self.diff.transverse(x)
        } else {
            [0.0, 0.0]
        }
    }

    pub fn jacobian(&self, x: [f64; 3]) -> Jacobian {
        if self.shape.contains([x[1], x[2]]) {
            self.diff.jacobian(x)
        } else {
            [[0.0; 3]; 3]
        }
    }

    pub fn potential(&self) -> &MagneticPotential {
        &self.diff
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// `beta_23` of the difference, 0 outside the cross-section.
    pub fn beta23(&self, x: [f64; 3]) -> f64 {
        let j = self.jacobian(x);
        j[1][2] - j[2][1]
    }
}

pub fn extend_by_zero(pair: &PotentialPair, shape: Shape) -> ExtendedDifference {
    pair.extend_by_zero(shape)
}
