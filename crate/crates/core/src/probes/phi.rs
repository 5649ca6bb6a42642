use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use super::amplitude::{line_integral, TransverseField};
use super::{sqrt_window, ProbeSpec, ProfileH, Side, PROFILE_SUPPORT, WINDOW_HALF_WIDTH};
use crate::error::Result;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The Lemma-type probe profile `phi = phi_theta phi_0` for a given difference potential.
///
/// In the rotated frame `p = x' . perp`, `q = x' . omega`:
/// `phi = e^{i theta x1} e^{(i/2) I(x1, p)} e^{-(i/2) eta p} beta0(p)^{1/2} h(q + r)`,
/// where `I` is the full ray integral of `omega . A'`.
pub struct GOComponents {
    pub spec: ProbeSpec,
    field: Arc<dyn TransverseField>,
    h: ProfileH,
    rays: Mutex<HashMap<(u64, u64), (f64, f64)>>,
}

pub fn lemma54_phi(spec: ProbeSpec, field: Arc<dyn TransverseField>) -> Result<GOComponents> {
    spec.validate()?;
    Ok(GOComponents { spec, field, h: ProfileH::default(), rays: Mutex::new(HashMap::new()) })
}

impl GOComponents {
    pub fn field(&self) -> &Arc<dyn TransverseField> {
        &self.field
    }

    pub fn profile_h(&self) -> &ProfileH {
        &self.h
    }

    /// `(p, q)` coordinates of `x'`.
    pub fn frame(&self, y: [f64; 2]) -> (f64, f64) {
        let (w, e) = (self.spec.omega, self.spec.perp());
        (y[0] * e[0] + y[1] * e[1], y[0] * w[0] + y[1] * w[1])
    }

    /// Bounding box of `supp phi_0` in `(p, q)`.
    pub fn support_box(&self) -> ([f64; 2], [f64; 2]) {
        let (c, r) = (self.spec.z0, self.spec.r_z0());
        ([c - WINDOW_HALF_WIDTH, c + WINDOW_HALF_WIDTH], [-r, -r + PROFILE_SUPPORT])
    }

    /// Full ray integral `I(x1, p)` and `dI/dp`, cached.
    pub fn ray(&self, x1: f64, p: f64) -> Result<(f64, f64)> {
        let key = (x1.to_bits(), p.to_bits());
        if let Some(v) = self.rays.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let (w, e) = (self.spec.omega, self.spec.perp());
        let x = [x1, p * e[0], p * e[1]];
        let rho = self.field.radius();
        let f = &self.field;
        let val = line_integral(|y| dot(w, f.at(y)), rho, x, w, f64::NEG_INFINITY, f64::INFINITY)?;
        let der = line_integral(
            |y| {
                let j = f.jac(y);
                w[0] * (j[0][1] * e[0] + j[0][2] * e[1]) + w[1] * (j[1][1] * e[0] + j[1][2] * e[1])
            },
            rho,
            x,
            w,
            f64::NEG_INFINITY,
            f64::INFINITY,
        )?;
        self.rays.lock().unwrap().insert(key, (val, der));
        Ok((val, der))
    }

    /// `phi(x)` together with `d phi/dp` and `d phi/dq`.
    pub fn phi_with_derivatives(&self, x: [f64; 3]) -> Result<[Complex64; 3]> {
        let zero = Complex64::new(0.0, 0.0);
        let (p, q) = self.frame([x[1], x[2]]);
        let (sb, dsb) = sqrt_window(p, self.spec.z0);
        let (h, dh, _) = self.h.eval(q + self.spec.r_z0());
        if sb == 0.0 || (h == 0.0 && dh == 0.0) {
            return Ok([zero; 3]);
        }
        let (ray, dray) = self.ray(x[0], p)?;
        let eta = self.spec.eta();
        let phase = Complex64::from_polar(1.0, self.spec.theta * x[0] + 0.5 * ray - 0.5 * eta * p);
        let e = phase * sb;
        let de = phase * (I * (0.5 * (dray - eta)) * sb + dsb);
        Ok([e * h, de * h, e * dh])
    }

    pub fn phi(&self, x: [f64; 3]) -> Result<Complex64> {
        Ok(self.phi_with_derivatives(x)?[0])
    }

    /// `d phi / d x_j` for `j = 2, 3`.
    pub fn d_phi(&self, x: [f64; 3], j: usize) -> Result<Complex64> {
        let [_, dp, dq] = self.phi_with_derivatives(x)?;
        let (w, e) = (self.spec.omega, self.spec.perp());
        Ok(dp * e[j - 2] + dq * w[j - 2])
    }

    /// Profile of the GO solution on a side: `e^{-2 i k pi x1} phi` (forward)
    /// or `conj(d_j phi)` (backward).
    pub fn side_profile(&self, side: Side, x: [f64; 3]) -> Result<Complex64> {
        match side {
            Side::Forward => Ok(self.phi(x)? * Complex64::from_polar(1.0, -2.0 * PI * self.spec.k as f64 * x[0])),
            Side::Backward => Ok(self.d_phi(x, self.spec.j)?.conj()),
        }
    }

    /// `Phi(t, x) = profile(x1, x' - t omega)`.
    pub fn transported(&self, side: Side, t: f64, x: [f64; 3]) -> Result<Complex64> {
        let w = self.spec.omega;
        self.side_profile(side, [x[0], x[1] - t * w[0], x[2] - t * w[1]])
    }

    /// `E_sigma(t, x') = exp(i sigma (x' . omega - sigma t))`.
    pub fn e_sigma(&self, t: f64, y: [f64; 2]) -> Complex64 {
        let s = self.spec.sigma;
        Complex64::from_polar(1.0, s * (dot(y, self.spec.omega) - s * t))
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `L2`, gradient and Hessian norms over `(0,1) x R^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Parts {
    pub l2: f64,
    pub grad: f64,
    pub hess: f64,
}

impl H2Parts {
    pub fn h2(&self) -> f64 {
        (self.l2 * self.l2 + self.grad * self.grad + self.hess * self.hess).sqrt()
    }
}

/// Samples on a uniform `(x1, p, q)` grid; `x1` wraps with `e^{i theta}`.
struct Samples {
    n: [usize; 3],
    step: [f64; 3],
    wrap: Complex64,
    v: Vec<Complex64>,
}

impl Samples {
    fn at(&self, i: isize, a: isize, b: isize) -> Complex64 {
        let [n1, np, nq] = self.n.map(|n| n as isize);
        if a < 0 || a >= np || b < 0 || b >= nq {
            return Complex64::new(0.0, 0.0);
        }
        let (i, wrap) = match i {
            i if i < 0 => (i + n1, self.wrap.conj()),
            i if i >= n1 => (i - n1, self.wrap),
            i => (i, Complex64::new(1.0, 0.0)),
        };
        self.v[((i * np + a) * nq + b) as usize] * wrap
    }

    fn d_q(&self) -> Samples {
        let [n1, np, nq] = self.n;
        let mut v = Vec::with_capacity(self.v.len());
        for i in 0..n1 as isize {
            for a in 0..np as isize {
                for b in 0..nq as isize {
                    v.push((self.at(i, a, b + 1) - self.at(i, a, b - 1)) / (2.0 * self.step[2]));
                }
            }
        }
        Samples { n: self.n, step: self.step, wrap: self.wrap, v }
    }

    fn parts(&self) -> H2Parts {
        let [n1, np, nq] = self.n;
        let vol = self.step.iter().product::<f64>();
        let (mut l2, mut g, mut hs) = (0.0, 0.0, 0.0);
        let off = |d: usize, s: isize| {
            let mut o = [0isize; 3];
            o[d] = s;
            o
        };
        for i in 0..n1 as isize {
            for a in 0..np as isize {
                for b in 0..nq as isize {
                    let f = |o: [isize; 3]| self.at(i + o[0], a + o[1], b + o[2]);
                    let c = f([0; 3]);
                    l2 += c.norm_sqr();
                    for d in 0..3 {
                        let hd = self.step[d];
                        g += ((f(off(d, 1)) - f(off(d, -1))) / (2.0 * hd)).norm_sqr();
                        hs += ((f(off(d, 1)) - c * 2.0 + f(off(d, -1))) / (hd * hd)).norm_sqr();
                        for e in d + 1..3 {
                            let he = self.step[e];
                            let m = |s: isize, t: isize| {
                                let mut o = off(d, s);
                                o[e] = t;
                                f(o)
                            };
                            let mixed = (m(1, 1) - m(1, -1) - m(-1, 1) + m(-1, -1)) / (4.0 * hd * he);
                            hs += 2.0 * mixed.norm_sqr();
                        }
                    }
                }
            }
        }
        H2Parts { l2: (l2 * vol).sqrt(), grad: (g * vol).sqrt(), hess: (hs * vol).sqrt() }
    }
}

/// Grid resolution used by the `N_omega` norm: `(n1, np, nq)`.
pub const N_OMEGA_GRID: [usize; 3] = [32, 96, 48];

fn sample<F>(
    f: F,
    theta: f64,
    frame: ([f64; 2], [f64; 2]),
    pbox: [f64; 2],
    qbox: [f64; 2],
    n: [usize; 3],
) -> Result<Samples>
where
    F: Fn([f64; 3]) -> Result<Complex64> + Sync,
{
    let [n1, np, nq] = n;
    let step = [1.0 / n1 as f64, (pbox[1] - pbox[0]) / (np - 1) as f64, (qbox[1] - qbox[0]) / (nq - 1) as f64];
    let (w, e) = frame;
    let v = (0..n1 * np * nq)
        .into_par_iter()
        .map(|idx| {
            let (i, a, b) = (idx / (np * nq), (idx / nq) % np, idx % nq);
            let (x1, p, q) = (i as f64 * step[0], pbox[0] + a as f64 * step[1], qbox[0] + b as f64 * step[2]);
            f([x1, p * e[0] + q * w[0], p * e[1] + q * w[1]])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Samples { n, step, wrap: Complex64::from_polar(1.0, theta), v })
}

/// `H^2` parts of `f` on `(0,1) x R^2`, where `f` vanishes outside the `(p, q)` box
/// of the frame `(omega, perp)`, sampled with `n = (n1, np, nq)` points.
pub fn h2_parts<F>(
    f: F,
    theta: f64,
    omega: [f64; 2],
    pbox: [f64; 2],
    qbox: [f64; 2],
    n: [usize; 3],
) -> Result<(H2Parts, H2Parts)>
where
    F: Fn([f64; 3]) -> Result<Complex64> + Sync,
{
    let s = sample(f, theta, (omega, [-omega[1], omega[0]]), pbox, qbox, n)?;
    Ok((s.parts(), s.d_q().parts()))
}

/// `N_omega(f) = ||f||_{H^2} + ||omega . grad f||_{H^2}` for `f = phi` (`derivative = false`)
/// or `f = d_j phi`.
pub fn n_omega_norm(c: &GOComponents, derivative: bool) -> Result<f64> {
    let (pb, qb) = c.support_box();
    let pad = |b: [f64; 2]| [b[0] - 0.01, b[1] + 0.01];
    let f = |x: [f64; 3]| {
        if derivative {
            c.d_phi(x, c.spec.j)
        } else {
            c.phi(x)
        }
    };
    let (a, b) = h2_parts(f, c.spec.theta, c.spec.omega, pad(pb), pad(qb), N_OMEGA_GRID)?;
    Ok(a.h2() + b.h2())
}
