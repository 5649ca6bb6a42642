use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::krylov::{gmres, GmresOptions};
use super::operator::{level_norm_sq, MagneticOperator};
use super::precond::Preconditioner;
use super::{FiberField, Lift, Orientation, SourceTerm};
use crate::domain::{NodeKind, WaveguideGrid};
use crate::error::{Error, Result};
use crate::fields::MagneticPotential;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Crank-Nicolson stepper for `(i d_t + Delta_A) u = f` on one fiber.
pub struct Solver {
    op: MagneticOperator,
    opts: GmresOptions,
    forward: OnceLock<Preconditioner>,
    backward: OnceLock<Preconditioner>,
}

impl Solver {
    pub fn new(a: &MagneticPotential, theta: f64, grid: Arc<WaveguideGrid>) -> Self {
        Solver {
            op: MagneticOperator::new(a, theta, grid),
            opts: GmresOptions::default(),
            forward: OnceLock::new(),
            backward: OnceLock::new(),
        }
    }

    pub fn with_tolerance(mut self, rel_tol: f64) -> Self {
        self.opts.rel_tol = rel_tol;
        self
    }

    pub fn operator(&self) -> &MagneticOperator {
        &self.op
    }

    pub fn grid(&self) -> &Arc<WaveguideGrid> {
        self.op.grid()
    }

    fn tau(&self) -> f64 {
        0.5 * self.grid().dt()
    }

    fn preconditioner(&self, orientation: Orientation) -> &Preconditioner {
        let zeta = self.zeta(orientation);
        match orientation {
            Orientation::Forward => self.forward.get_or_init(|| Preconditioner::new(&self.op, zeta)),
            Orientation::Backward => self.backward.get_or_init(|| Preconditioner::new(&self.op, zeta)),
        }
    }

    /// The implicit system is `I + zeta Delta_A`.
    fn zeta(&self, orientation: Orientation) -> Complex64 {
        match orientation {
            Orientation::Forward => -I * self.tau(),
            Orientation::Backward => I * self.tau(),
        }
    }

    /// Steps through all levels; `half(n, out)` supplies the source between
    /// levels `n` and `n + 1`. The starting level is taken from `field`.
    fn march<F>(&self, field: &mut FiberField, orientation: Orientation, mut half: F) -> Result<()>
    where
        F: FnMut(usize, &mut [Complex64]),
    {
        let g = self.grid().clone();
        let len = g.level_len();
        let dt = g.dt();
        let zeta = self.zeta(orientation);
        let pre = self.preconditioner(orientation);
        let zero = Complex64::new(0.0, 0.0);
        let mut lap = vec![zero; len];
        let mut rhs = vec![zero; len];
        let mut f = vec![zero; len];
        let interior = interior_mask(&g);
        for step in 0..g.n_t {
            let (from, to) = match orientation {
                Orientation::Forward => (step, step + 1),
                Orientation::Backward => (g.n_t - step, g.n_t - step - 1),
            };
            half(from.min(to), &mut f);
            self.op.apply(field.level(from), &mut lap);
            // forward: (I - i tau D) u+ = (I + i tau D) u - i dt f, backward mirrors it
            let src = match orientation {
                Orientation::Forward => -I * dt,
                Orientation::Backward => I * dt,
            };
            let known = field.level(from);
            for p in 0..len {
                rhs[p] = if interior[p] { known[p] - zeta * lap[p] + src * f[p] } else { zero };
            }
            let mut x: Vec<Complex64> = known.iter().zip(&interior).map(|(v, m)| if *m { *v } else { zero }).collect();
            let mut scratch = vec![zero; len];
            let outcome = gmres(
                |v, out| {
                    self.op.apply(v, &mut scratch);
                    for p in 0..len {
                        out[p] = v[p] + zeta * scratch[p];
                    }
                },
                |v, out| pre.apply(v, out),
                &rhs,
                &mut x,
                self.opts,
            );
            if !outcome.converged {
                return Err(Error::SolverStagnation { step, history: outcome.history });
            }
            let target = field.level_mut(to);
            for p in 0..len {
                if interior[p] {
                    target[p] = x[p];
                }
            }
        }
        Ok(())
    }

    pub fn solve_source(&self, f: &dyn SourceTerm, orientation: Orientation) -> Result<FiberField> {
        let g = self.grid().clone();
        let mut field = FiberField::zeros(g.clone(), self.op.theta(), orientation);
        self.march(&mut field, orientation, |n, out| f.half_step(n, &g, out))?;
        Ok(field)
    }

    /// Solve with zero Cauchy data, given the source directly at half steps.
    pub fn solve_half_steps<F>(&self, orientation: Orientation, half: F) -> Result<FiberField>
    where
        F: FnMut(usize, &mut [Complex64]),
    {
        let mut field = FiberField::zeros(self.grid().clone(), self.op.theta(), orientation);
        self.march(&mut field, orientation, half)?;
        Ok(field)
    }

    /// Free evolution from `u0` (boundary entries are ignored).
    pub fn cauchy_evolve(&self, u0: &[Complex64]) -> Result<FiberField> {
        let g = self.grid().clone();
        let mut field = FiberField::zeros(g.clone(), self.op.theta(), Orientation::Forward);
        let mask = interior_mask(&g);
        for (p, v) in field.level_mut(0).iter_mut().enumerate() {
            if mask[p] {
                *v = u0[p];
            }
        }
        self.march(&mut field, Orientation::Forward, |_, out| {
            out.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0))
        })?;
        Ok(field)
    }

    /// Solution equal to `W` on the lateral boundary and at the starting time
    /// (t = 0 forward, t = T backward), built as `W - psi` with `psi` driven by
    /// the discrete residual of `W`.
    pub fn solve_dirichlet(&self, lift: &dyn Lift, orientation: Orientation) -> Result<FiberField> {
        let g = self.grid().clone();
        let mut w = FiberField::zeros(g.clone(), self.op.theta(), orientation);
        for n in 0..=g.n_t {
            lift.level(n, &g, w.level_mut(n));
        }
        if w.levels().iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Lift("lift produced non-finite samples".into()));
        }
        let psi = self.solve_half_steps(orientation, |n, out| self.lift_residual(&w, n, out))?;
        Ok(w.sub(&psi))
    }

    /// `i (W^{n+1} - W^n)/dt + Delta_A (W^{n+1} + W^n)/2` on interior nodes.
    pub fn lift_residual(&self, w: &FiberField, n: usize, out: &mut [Complex64]) {
        let g = self.grid();
        let len = g.level_len();
        let dt = g.dt();
        let mut lap = vec![Complex64::new(0.0, 0.0); len];
        self.op.apply(w.level(n), out);
        self.op.apply(w.level(n + 1), &mut lap);
        let mask = interior_mask(g);
        let (a, b) = (w.level(n), w.level(n + 1));
        for p in 0..len {
            out[p] = if mask[p] { I * (b[p] - a[p]) / dt + (out[p] + lap[p]) * 0.5 } else { Complex64::new(0.0, 0.0) };
        }
    }

    /// Discrete L2 norm of the Crank-Nicolson residual at every half step.
    pub fn residual(&self, u: &FiberField, f: Option<&dyn SourceTerm>) -> Vec<f64> {
        let g = self.grid().clone();
        let len = g.level_len();
        let mut r = vec![Complex64::new(0.0, 0.0); len];
        let mut fv = vec![Complex64::new(0.0, 0.0); len];
        let mask = interior_mask(&g);
        (0..g.n_t)
            .map(|n| {
                self.lift_residual(u, n, &mut r);
                if let Some(f) = f {
                    f.half_step(n, &g, &mut fv);
                    for p in 0..len {
                        if mask[p] {
                            r[p] -= fv[p];
                        }
                    }
                }
                level_norm_sq(&g, &r).sqrt()
            })
            .collect()
    }
}

pub(crate) fn interior_mask(g: &WaveguideGrid) -> Vec<bool> {
    let ncs = g.cs.len();
    (0..g.level_len()).map(|p| g.cs.kind(p % ncs) == NodeKind::Interior).collect()
}

pub fn solve_source(
    a: &MagneticPotential,
    theta: f64,
    grid: Arc<WaveguideGrid>,
    f: &dyn SourceTerm,
    orientation: Orientation,
) -> Result<FiberField> {
    Solver::new(a, theta, grid).solve_source(f, orientation)
}

pub fn cauchy_evolve(
    a: &MagneticPotential,
    theta: f64,
    grid: Arc<WaveguideGrid>,
    u0: &[Complex64],
) -> Result<FiberField> {
    Solver::new(a, theta, grid).cauchy_evolve(u0)
}

pub fn solve_dirichlet(
    a: &MagneticPotential,
    theta: f64,
    grid: Arc<WaveguideGrid>,
    lift: &dyn Lift,
    orientation: Orientation,
) -> Result<FiberField> {
    Solver::new(a, theta, grid).solve_dirichlet(lift, orientation)
}
