//! Restarted, right-preconditioned GMRES for complex systems.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub rel_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { rel_tol: 1e-12, restart: 30, max_iter: 600 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// Relative residual after every inner iteration.
    pub history: Vec<f64>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Solves `A x = b` starting from the contents of `x`. `apply` computes `A v`,
/// `precond` applies an approximate inverse of `A`.
pub fn gmres<FA, FP>(
    mut apply: FA,
    mut precond: FP,
    b: &[Complex64],
    x: &mut [Complex64],
    opts: GmresOptions,
) -> GmresOutcome
where
    FA: FnMut(&[Complex64], &mut [Complex64]),
    FP: FnMut(&[Complex64], &mut [Complex64]),
{
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let bnorm = norm(b);
    let mut history = Vec::new();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = zero);
        return GmresOutcome { converged: true, iterations: 0, history };
    }
    let m = opts.restart;
    let mut r = vec![zero; n];
    let mut w = vec![zero; n];
    let mut z = vec![zero; n];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut hess = vec![vec![zero; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![zero; m];
    let mut g = vec![zero; m + 1];
    let mut iterations = 0;
    loop {
        apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let beta = norm(&r);
        if beta <= opts.rel_tol * bnorm {
            return GmresOutcome { converged: true, iterations, history };
        }
        if iterations >= opts.max_iter {
            return GmresOutcome { converged: false, iterations, history };
        }
        basis.clear();
        basis.push(r.iter().map(|v| v / beta).collect());
        g.iter_mut().for_each(|v| *v = zero);
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            precond(&basis[k], &mut z);
            apply(&z, &mut w);
            for i in 0..=k {
                let hik = dotc(&basis[i], &w);
                hess[i][k] = hik;
                for (wv, bv) in w.iter_mut().zip(&basis[i]) {
                    *wv -= hik * bv;
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = Complex64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i].conj() * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let (a, bb) = (hess[k][k], hess[k + 1][k]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[k] = 1.0;
                sn[k] = zero;
            } else {
                cs[k] = a.norm() / den;
                let phase = if a.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { a / a.norm() };
                sn[k] = phase * bb.conj() / den;
            }
            hess[k][k] = cs[k] * a + sn[k] * bb;
            hess[k + 1][k] = zero;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k_used = k + 1;
            let rel = g[k + 1].norm() / bnorm;
            history.push(rel);
            if rel <= opts.rel_tol || hn == 0.0 || iterations >= opts.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= hess[i][j] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        w.iter_mut().for_each(|v| *v = zero);
        for (yi, vi) in y.iter().zip(&basis) {
            for (wv, bv) in w.iter_mut().zip(vi) {
                *wv += yi * bv;
            }
        }
        precond(&w, &mut z);
        for (xv, zv) in x.iter_mut().zip(&z) {
            *xv += zv;
        }
    }
}
