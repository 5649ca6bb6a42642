//! Symmetrized finite-difference magnetic Laplacian on one time level.

use std::sync::Arc;

use num_complex::Complex64;

use crate::domain::{NodeKind, WaveguideGrid};
use crate::fields::MagneticPotential;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `Delta_A = sum_j (d_j + i a_j)^2` with the convection term written as
/// `i (a D + D a)`, so the matrix is Hermitian on interior nodes.
#[derive(Debug, Clone)]
pub struct MagneticOperator {
    grid: Arc<WaveguideGrid>,
    theta: f64,
    a: [Vec<f64>; 3],
    a_sq: Vec<f64>,
    zero_potential: bool,
}

impl MagneticOperator {
    pub fn new(a: &MagneticPotential, theta: f64, grid: Arc<WaveguideGrid>) -> Self {
        let len = grid.level_len();
        let ncs = grid.cs.len();
        let mut comps = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut a_sq = vec![0.0; len];
        if !a.is_zero() {
            for i1 in 0..grid.n1 {
                for j in 0..ncs {
                    if grid.cs.kind(j) == NodeKind::Exterior {
                        continue;
                    }
                    let p = i1 * ncs + j;
                    let v = a.eval(grid.point(i1, j));
                    for k in 0..3 {
                        comps[k][p] = v[k];
                    }
                    a_sq[p] = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                }
            }
        }
        MagneticOperator { grid, theta, a: comps, a_sq, zero_potential: a.is_zero() }
    }

    pub fn grid(&self) -> &Arc<WaveguideGrid> {
        &self.grid
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn is_free(&self) -> bool {
        self.zero_potential
    }

    /// `out = Delta_A u` on interior nodes, 0 elsewhere. Boundary entries of `u`
    /// act as Dirichlet data.
    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let g = &*self.grid;
        let (n2, _) = g.cs.dims();
        let ncs = g.cs.len();
        let n1 = g.n1;
        let h1 = g.h1();
        let h = g.cs.h();
        let (c1, c) = (1.0 / (h1 * h1), 1.0 / (h * h));
        let (s1, s) = (0.5 / h1, 0.5 / h);
        let wrap_p = Complex64::from_polar(1.0, self.theta);
        let wrap_m = wrap_p.conj();
        let [a1, a2, a3] = &self.a;
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for i1 in 0..n1 {
            let (ip, pp) = if i1 + 1 == n1 { (0, wrap_p) } else { (i1 + 1, Complex64::new(1.0, 0.0)) };
            let (im, pm) = if i1 == 0 { (n1 - 1, wrap_m) } else { (i1 - 1, Complex64::new(1.0, 0.0)) };
            let base = i1 * ncs;
            for &j in g.cs.interior() {
                let p = base + j;
                let qp = ip * ncs + j;
                let qm = im * ncs + j;
                let mut acc =
                    (c1 + I * ((a1[p] + a1[qp]) * s1)) * pp * u[qp] + (c1 - I * ((a1[p] + a1[qm]) * s1)) * pm * u[qm];
                for (aa, step) in [(a2, 1usize), (a3, n2)] {
                    let (qp, qm) = (p + step, p - step);
                    acc += (c + I * ((aa[p] + aa[qp]) * s)) * u[qp] + (c - I * ((aa[p] + aa[qm]) * s)) * u[qm];
                }
                acc -= u[p] * (2.0 * c1 + 4.0 * c + self.a_sq[p]);
                out[p] = acc;
            }
        }
    }

    /// Diagonal entry at a flat index.
    pub fn diagonal(&self, p: usize) -> f64 {
        let h1 = self.grid.h1();
        let h = self.grid.cs.h();
        -(2.0 / (h1 * h1) + 4.0 / (h * h) + self.a_sq[p])
    }

    /// Weighted inner product `sum w conj(u) v` on one level.
    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        level_inner(&self.grid, u, v)
    }
}

/// Weighted discrete L2 inner product `sum w conj(u) v` on one time level.
pub fn level_inner(grid: &WaveguideGrid, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let ncs = grid.cs.len();
    let w = grid.cs.weights();
    let h1 = grid.h1();
    let mut acc = Complex64::new(0.0, 0.0);
    for i1 in 0..grid.n1 {
        for j in 0..ncs {
            let p = i1 * ncs + j;
            acc += u[p].conj() * v[p] * w[j];
        }
    }
    acc * h1
}

pub fn level_norm_sq(grid: &WaveguideGrid, u: &[Complex64]) -> f64 {
    level_inner(grid, u, u).re
}
