//! Fibered magnetic Schrodinger solver on the period cell with Crank-Nicolson
//! time stepping.

mod krylov;
mod operator;
mod precond;
mod solver;

use std::sync::Arc;

use num_complex::Complex64;

use crate::domain::WaveguideGrid;
use crate::quad::trapezoid_weights;

pub use krylov::{gmres, GmresOptions, GmresOutcome};
pub use operator::{level_inner, level_norm_sq, MagneticOperator};
pub use precond::Preconditioner;
pub use solver::{cauchy_evolve, solve_dirichlet, solve_source, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Zero initial value at t = 0.
    Forward,
    /// Zero terminal value at t = T.
    Backward,
}

/// A complex field on every time level of a waveguide grid, quasi-periodic in x1.
#[derive(Debug, Clone)]
pub struct FiberField {
    pub theta: f64,
    pub orientation: Orientation,
    grid: Arc<WaveguideGrid>,
    levels: Vec<Vec<Complex64>>,
}

impl FiberField {
    pub fn zeros(grid: Arc<WaveguideGrid>, theta: f64, orientation: Orientation) -> Self {
        let levels = vec![vec![Complex64::new(0.0, 0.0); grid.level_len()]; grid.n_t + 1];
        FiberField { theta, orientation, grid, levels }
    }

    pub fn from_levels(
        grid: Arc<WaveguideGrid>,
        theta: f64,
        orientation: Orientation,
        levels: Vec<Vec<Complex64>>,
    ) -> Self {
        assert_eq!(levels.len(), grid.n_t + 1);
        assert!(levels.iter().all(|l| l.len() == grid.level_len()));
        FiberField { theta, orientation, grid, levels }
    }

    pub fn grid(&self) -> &Arc<WaveguideGrid> {
        &self.grid
    }

    pub fn level(&self, n: usize) -> &[Complex64] {
        &self.levels[n]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.levels[n]
    }

    pub fn levels(&self) -> &[Vec<Complex64>] {
        &self.levels
    }

    /// Value at time level `n`, x1 index `i1` (which may equal `n1`, read
    /// through the quasi-periodic wrap), cross-section node `j`.
    pub fn value(&self, n: usize, i1: usize, j: usize) -> Complex64 {
        let n1 = self.grid.n1;
        let ncs = self.grid.cs.len();
        let wraps = (i1 / n1) as f64;
        self.levels[n][(i1 % n1) * ncs + j] * Complex64::from_polar(1.0, wraps * self.theta)
    }

    pub fn level_norm(&self, n: usize) -> f64 {
        level_norm_sq(&self.grid, &self.levels[n]).sqrt()
    }

    /// Discrete `L2((0,T) x cell)` norm, trapezoid in time.
    pub fn norm(&self) -> f64 {
        let w = trapezoid_weights(self.grid.n_t, self.grid.dt());
        w.iter().enumerate().map(|(n, w)| w * level_norm_sq(&self.grid, &self.levels[n])).sum::<f64>().sqrt()
    }

    pub fn max_level_norm(&self) -> f64 {
        (0..self.levels.len()).map(|n| self.level_norm(n)).fold(0.0, f64::max)
    }

    /// `self - other`, keeping the tags of `self`.
    pub fn sub(&self, other: &FiberField) -> FiberField {
        let levels =
            self.levels.iter().zip(&other.levels).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        FiberField { levels, ..self.clone_empty() }
    }

    pub fn scale(&mut self, s: Complex64) {
        self.levels.iter_mut().flatten().for_each(|v| *v *= s);
    }

    fn clone_empty(&self) -> FiberField {
        FiberField { theta: self.theta, orientation: self.orientation, grid: self.grid.clone(), levels: Vec::new() }
    }
}

/// Right-hand side `f(t, x)` of `(i d_t + Delta_A) w = f`.
pub trait SourceTerm: Sync {
    /// Samples at time `t` on every node of one level (only interior values are used).
    fn eval(&self, t: f64, grid: &WaveguideGrid, out: &mut [Complex64]);

    /// Time derivative samples.
    fn eval_dt(&self, t: f64, grid: &WaveguideGrid, out: &mut [Complex64]);

    /// Value used by the step from level `n` to `n + 1`.
    fn half_step(&self, n: usize, grid: &WaveguideGrid, out: &mut [Complex64]) {
        let mut b = vec![Complex64::new(0.0, 0.0); out.len()];
        self.eval(grid.time(n), grid, out);
        self.eval(grid.time(n + 1), grid, &mut b);
        for (o, v) in out.iter_mut().zip(&b) {
            *o = (*o + v) * 0.5;
        }
    }
}

/// `f(t, x) = g(t) s(x)` with a fixed spatial profile.
pub struct SeparableSource {
    pub profile: Vec<Complex64>,
    pub time: Box<dyn Fn(f64) -> Complex64 + Sync + Send>,
    pub time_dt: Box<dyn Fn(f64) -> Complex64 + Sync + Send>,
}

impl SeparableSource {
    pub fn constant(profile: Vec<Complex64>) -> Self {
        SeparableSource {
            profile,
            time: Box::new(|_| Complex64::new(1.0, 0.0)),
            time_dt: Box::new(|_| Complex64::new(0.0, 0.0)),
        }
    }
}

impl SourceTerm for SeparableSource {
    fn eval(&self, t: f64, _grid: &WaveguideGrid, out: &mut [Complex64]) {
        let g = (self.time)(t);
        for (o, v) in out.iter_mut().zip(&self.profile) {
            *o = g * v;
        }
    }

    fn eval_dt(&self, t: f64, _grid: &WaveguideGrid, out: &mut [Complex64]) {
        let g = (self.time_dt)(t);
        for (o, v) in out.iter_mut().zip(&self.profile) {
            *o = g * v;
        }
    }
}

pub struct ZeroSource;

impl SourceTerm for ZeroSource {
    fn eval(&self, _t: f64, _grid: &WaveguideGrid, out: &mut [Complex64]) {
        out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    }
    fn eval_dt(&self, t: f64, grid: &WaveguideGrid, out: &mut [Complex64]) {
        self.eval(t, grid, out)
    }
}

/// A smooth field `W` carrying the Dirichlet data, sampled on all nodes.
pub trait Lift: Sync {
    fn level(&self, n: usize, grid: &WaveguideGrid, out: &mut [Complex64]);
}

impl Lift for FiberField {
    fn level(&self, n: usize, _grid: &WaveguideGrid, out: &mut [Complex64]) {
        out.copy_from_slice(&self.levels[n]);
    }
}

#[cfg(test)]
mod tests;
