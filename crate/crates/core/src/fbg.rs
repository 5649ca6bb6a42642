//! Partial Floquet-Bloch-Gelfand transform along x1.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Samples of `f(x1, y)` on unit cells `k_min..=k_max`, one array per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFunction {
    pub k_min: i64,
    cells: Vec<Vec<Complex64>>,
}

impl CellFunction {
    pub fn new(k_min: i64, cells: Vec<Vec<Complex64>>) -> Result<Self> {
        let Some(first) = cells.first() else {
            return Err(Error::Index("cell function needs at least one cell".into()));
        };
        if cells.iter().any(|c| c.len() != first.len()) {
            return Err(Error::Index("cells must have equal sample counts".into()));
        }
        Ok(CellFunction { k_min, cells })
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.cells.len() as i64 - 1
    }

    /// Number of cells in the declared support.
    pub fn span(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_len(&self) -> usize {
        self.cells[0].len()
    }

    /// Samples on cell `k`; zero outside the support.
    pub fn cell(&self, k: i64) -> Option<&[Complex64]> {
        let i = k - self.k_min;
        (0..self.cells.len() as i64).contains(&i).then(|| self.cells[i as usize].as_slice())
    }

    pub fn norm_sq(&self) -> f64 {
        self.cells.iter().flatten().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberDatum {
    pub theta: f64,
    pub data: Vec<Complex64>,
}

impl FiberDatum {
    pub fn new(theta: f64, data: Vec<Complex64>) -> Result<Self> {
        if !(0.0..2.0 * PI).contains(&theta) {
            return Err(Error::Index(format!("theta = {theta} outside [0, 2 pi)")));
        }
        Ok(FiberDatum { theta, data })
    }
}

/// Uniform grid `2 pi m / n`, `m = 0..n`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|m| 2.0 * PI * m as f64 / n as f64).collect()
}

/// `f_theta(x1, y) = sum_k e^{-ik theta} f(x1 + k, y)`.
pub fn fbg_forward(f: &CellFunction, theta: f64) -> Result<FiberDatum> {
    let mut out = vec![Complex64::new(0.0, 0.0); f.cell_len()];
    for (i, cell) in f.cells.iter().enumerate() {
        let k = (f.k_min + i as i64) as f64;
        let phase = Complex64::from_polar(1.0, -k * theta);
        for (o, v) in out.iter_mut().zip(cell) {
            *o += phase * v;
        }
    }
    FiberDatum::new(theta, out)
}

/// Fibers on the uniform grid of `n` angles, computed in parallel.
pub fn fbg_forward_grid(f: &CellFunction, n: usize) -> Result<Vec<FiberDatum>> {
    theta_grid(n).into_par_iter().map(|t| fbg_forward(f, t)).collect()
}

/// Recovers cell `k` from fibers on a uniform angle grid, where the original
/// function was supported on `span` consecutive cells.
pub fn fbg_inverse(fibers: &[FiberDatum], k: i64, span: usize) -> Result<Vec<Complex64>> {
    let n = fibers.len();
    if n == 0 {
        return Err(Error::Index("no fibers given".into()));
    }
    if n < span {
        return Err(Error::FiberGrid(format!("{n} angles cannot separate {span} cells")));
    }
    let dtheta = 2.0 * PI / n as f64;
    for (m, f) in fibers.iter().enumerate() {
        if (f.theta - m as f64 * dtheta).abs() > 1e-12 {
            return Err(Error::FiberGrid(format!("fiber {m} at theta = {} is off the uniform grid", f.theta)));
        }
    }
    let len = fibers[0].data.len();
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for f in fibers {
        let phase = Complex64::from_polar(1.0 / n as f64, k as f64 * f.theta);
        for (o, v) in out.iter_mut().zip(&f.data) {
            *o += phase * v;
        }
    }
    Ok(out)
}

/// `(1/2 pi) sum_theta ||f_theta||^2 d theta` for a uniform grid.
pub fn fiber_norm_sq(fibers: &[FiberDatum]) -> f64 {
    let n = fibers.len() as f64;
    fibers.iter().map(|f| f.data.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum::<f64>() / n
}
