//! Preconditioners for `I + zeta Delta_A`: the exact inverse of the free
//! operator on rectangles (twisted Fourier in x1, sine transforms across), and
//! Jacobi otherwise.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::operator::MagneticOperator;

#[derive(Debug, Clone)]
enum Kind {
    Spectral {
        n1: usize,
        k2: usize,
        k3: usize,
        n2: usize,
        ncs: usize,
        sine2: Vec<f64>,
        sine3: Vec<f64>,
        fourier: Vec<Complex64>,
        inv_symbol: Vec<Complex64>,
    },
    Jacobi(Vec<Complex64>),
}

#[derive(Debug, Clone)]
pub struct Preconditioner {
    kind: Kind,
}

fn sine_matrix(m: usize) -> Vec<f64> {
    // orthogonal up to the factor 2/m: S S = (m/2) I
    let k = m - 1;
    let mut s = vec![0.0; k * k];
    for p in 0..k {
        for j in 0..k {
            s[p * k + j] = (PI * ((p + 1) * (j + 1)) as f64 / m as f64).sin();
        }
    }
    s
}

impl Preconditioner {
    /// For the system `I + zeta Delta_A`.
    pub fn new(op: &MagneticOperator, zeta: Complex64) -> Self {
        let g = op.grid();
        if g.cs.is_rectangle() {
            Self::spectral(op, zeta)
        } else {
            let inv = (0..g.level_len())
                .map(|p| {
                    let j = p % g.cs.len();
                    if g.cs.kind(j) == crate::domain::NodeKind::Interior {
                        1.0 / (1.0 + zeta * op.diagonal(p))
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                })
                .collect();
            Preconditioner { kind: Kind::Jacobi(inv) }
        }
    }

    fn spectral(op: &MagneticOperator, zeta: Complex64) -> Self {
        let g = op.grid();
        let (n2, n3) = g.cs.dims();
        let (m2, m3) = (n2 - 1, n3 - 1);
        let n1 = g.n1;
        let h1 = g.h1();
        let h = g.cs.h();
        let theta = op.theta();
        let kappa: Vec<f64> = (0..n1).map(|m| (theta + 2.0 * PI * m as f64) / n1 as f64).collect();
        let mut fourier = vec![Complex64::new(0.0, 0.0); n1 * n1];
        for m in 0..n1 {
            for i in 0..n1 {
                fourier[m * n1 + i] = Complex64::from_polar(1.0, kappa[m] * i as f64);
            }
        }
        let mu1: Vec<f64> = kappa.iter().map(|k| 4.0 / (h1 * h1) * (0.5 * k).sin().powi(2)).collect();
        let mu = |p: usize, m: usize| 4.0 / (h * h) * (PI * (p + 1) as f64 / (2.0 * m as f64)).sin().powi(2);
        let (k2, k3) = (m2 - 1, m3 - 1);
        let mut inv_symbol = Vec::with_capacity(n1 * k2 * k3);
        for &a in &mu1 {
            for p3 in 0..k3 {
                for p2 in 0..k2 {
                    let lam = a + mu(p2, m2) + mu(p3, m3);
                    inv_symbol.push(1.0 / (1.0 - zeta * lam));
                }
            }
        }
        Preconditioner {
            kind: Kind::Spectral {
                n1,
                k2,
                k3,
                n2,
                ncs: g.cs.len(),
                sine2: sine_matrix(m2),
                sine3: sine_matrix(m3),
                fourier,
                inv_symbol,
            },
        }
    }

    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        match &self.kind {
            Kind::Jacobi(inv) => {
                for ((o, x), d) in out.iter_mut().zip(v).zip(inv) {
                    *o = x * d;
                }
            }
            Kind::Spectral { n1, k2, k3, n2, ncs, sine2, sine3, fourier, inv_symbol } => {
                let (n1, k2, k3, n2, ncs) = (*n1, *k2, *k3, *n2, *ncs);
                let zero = Complex64::new(0.0, 0.0);
                let plane = k2 * k3;
                let mut t = vec![zero; n1 * plane];
                for i1 in 0..n1 {
                    for a3 in 0..k3 {
                        for a2 in 0..k2 {
                            t[i1 * plane + a3 * k2 + a2] = v[i1 * ncs + (a2 + 1) + n2 * (a3 + 1)];
                        }
                    }
                }
                let s2 = 2.0 / (k2 + 1) as f64;
                let s3 = 2.0 / (k3 + 1) as f64;
                let mut u = vec![zero; n1 * plane];
                sine_pass(&t, &mut u, n1, k2, k3, sine2, sine3, s2 * s3);
                // twisted Fourier along x1
                let mut w = vec![zero; n1 * plane];
                for m in 0..n1 {
                    for i in 0..n1 {
                        let f = fourier[m * n1 + i].conj() / n1 as f64;
                        let (src, dst) = (&u[i * plane..(i + 1) * plane], &mut w[m * plane..(m + 1) * plane]);
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += f * s;
                        }
                    }
                }
                for (x, s) in w.iter_mut().zip(inv_symbol) {
                    *x *= s;
                }
                u.iter_mut().for_each(|x| *x = zero);
                for i in 0..n1 {
                    for m in 0..n1 {
                        let f = fourier[m * n1 + i];
                        let (src, dst) = (&w[m * plane..(m + 1) * plane], &mut u[i * plane..(i + 1) * plane]);
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += f * s;
                        }
                    }
                }
                sine_pass(&u, &mut t, n1, k2, k3, sine2, sine3, 1.0);
                out.iter_mut().for_each(|x| *x = zero);
                for i1 in 0..n1 {
                    for a3 in 0..k3 {
                        for a2 in 0..k2 {
                            out[i1 * ncs + (a2 + 1) + n2 * (a3 + 1)] = t[i1 * plane + a3 * k2 + a2];
                        }
                    }
                }
            }
        }
    }
}

/// Applies the separable sine transform in x2 and x3 to every x1 plane.
#[allow(clippy::too_many_arguments)]
fn sine_pass(
    src: &[Complex64],
    dst: &mut [Complex64],
    n1: usize,
    k2: usize,
    k3: usize,
    s2: &[f64],
    s3: &[f64],
    scale: f64,
) {
    let zero = Complex64::new(0.0, 0.0);
    let plane = k2 * k3;
    let mut tmp = vec![zero; plane];
    for i1 in 0..n1 {
        let x = &src[i1 * plane..(i1 + 1) * plane];
        for a3 in 0..k3 {
            let row = &x[a3 * k2..(a3 + 1) * k2];
            for p in 0..k2 {
                let s = &s2[p * k2..(p + 1) * k2];
                tmp[a3 * k2 + p] = row.iter().zip(s).map(|(v, c)| v * c).sum();
            }
        }
        let y = &mut dst[i1 * plane..(i1 + 1) * plane];
        for q in 0..k3 {
            let s = &s3[q * k3..(q + 1) * k3];
            for p in 0..k2 {
                let mut acc = zero;
                for a3 in 0..k3 {
                    acc += tmp[a3 * k2 + p] * s[a3];
                }
                y[q * k2 + p] = acc * scale;
            }
        }
    }
}
