use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::amplitude::build_amplitude;
use super::{GOComponents, Side};
use crate::dn::LateralTrace;
use crate::domain::{discrete_gradient_sq, discrete_l2_sq, WaveguideGrid};
use crate::error::{Error, Result};
use crate::fields::MagneticPotential;
use crate::pde::{FiberField, Solver};
use crate::quad::trapezoid_weights;

/// GO main part `Phi(2 sigma t, x) b(2 sigma t, x) E_sigma(t, x')` on the lateral
/// boundary and on the whole grid.
pub struct GoData {
    pub trace: LateralTrace,
    pub lift: FiberField,
}

/// Rejects grids that cannot carry the phase `E_sigma`.
pub fn check_resolution(sigma: f64, grid: &WaveguideGrid) -> Result<()> {
    let h = grid.cs.h();
    if sigma * h > 0.5 {
        return Err(Error::Resolution { sigma, reason: format!("sigma h = {} exceeds 0.5", sigma * h) });
    }
    if grid.dt() > 0.2 / (sigma * sigma) {
        return Err(Error::Resolution { sigma, reason: format!("dt = {} exceeds 0.2 / sigma^2", grid.dt()) });
    }
    Ok(())
}

pub fn go_boundary_data(
    c: &GOComponents,
    side: Side,
    a: &MagneticPotential,
    grid: Arc<WaveguideGrid>,
) -> Result<GoData> {
    let spec = &c.spec;
    if side == Side::Backward && spec.theta.sin().abs() > 1e-12 {
        return Err(Error::Probe(format!("backward profile is not quasi-periodic for theta = {}", spec.theta)));
    }
    let ncs = grid.cs.len();
    let taus: Vec<f64> = (0..=grid.n_t).map(|n| 2.0 * spec.sigma * grid.time(n)).collect();
    let amp = build_amplitude(a, spec.omega);
    let columns = (0..grid.level_len())
        .into_par_iter()
        .map(|p| {
            let x = grid.point(p / ncs, p % ncs);
            let mut col = taus.iter().map(|&t| c.transported(side, t, x)).collect::<Result<Vec<_>>>()?;
            if col.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                return Ok(col);
            }
            let phase = amp.phase_series(x, &taus)?;
            for (n, v) in col.iter_mut().enumerate() {
                *v *= Complex64::from_polar(1.0, -phase[n]) * c.e_sigma(grid.time(n), [x[1], x[2]]);
            }
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    let levels = (0..=grid.n_t).map(|n| columns.iter().map(|col| col[n]).collect()).collect();
    let lift = FiberField::from_levels(grid, spec.theta, side.orientation(), levels);
    Ok(GoData { trace: LateralTrace::restrict(&lift), lift })
}

/// Remainder `psi = u - main part` of a GO solution, with its norms on the cell.
pub struct Remainder {
    pub main: GoData,
    pub u: FiberField,
    pub psi: FiberField,
    pub l2: f64,
    pub grad_l2: f64,
}

pub fn go_remainder(
    c: &GOComponents,
    side: Side,
    a: &MagneticPotential,
    grid: Arc<WaveguideGrid>,
) -> Result<Remainder> {
    check_resolution(c.spec.sigma, &grid)?;
    let main = go_boundary_data(c, side, a, grid.clone())?;
    let u = Solver::new(a, c.spec.theta, grid.clone()).solve_dirichlet(&main.lift, side.orientation())?;
    let psi = u.sub(&main.lift);
    let (l2, grad_l2) = cell_norms(&psi);
    Ok(Remainder { main, u, psi, l2, grad_l2 })
}

/// `(||u||, ||grad u||)` over the space-time cell, for `u` vanishing on the lateral boundary.
pub fn cell_norms(u: &FiberField) -> (f64, f64) {
    let g = u.grid();
    let (cs, ncs, h1) = (&g.cs, g.cs.len(), g.h1());
    let wrap = Complex64::from_polar(1.0, u.theta);
    let w = trapezoid_weights(g.n_t, g.dt());
    let (mut l2, mut grad) = (0.0, 0.0);
    for (n, wn) in w.iter().enumerate() {
        let lv = u.level(n);
        let slice = |i: usize| &lv[(i % g.n1) * ncs..(i % g.n1 + 1) * ncs];
        for i1 in 0..g.n1 {
            let s = slice(i1);
            l2 += wn * h1 * discrete_l2_sq(cs, s);
            grad += wn * h1 * discrete_gradient_sq(cs, s);
            let next = slice(i1 + 1);
            let phase = if i1 + 1 == g.n1 { wrap } else { Complex64::new(1.0, 0.0) };
            let d: Vec<Complex64> = next.iter().zip(s).map(|(b, a)| (b * phase - a) / h1).collect();
            grad += wn * h1 * discrete_l2_sq(cs, &d);
        }
    }
    (l2.sqrt(), grad.sqrt())
}
