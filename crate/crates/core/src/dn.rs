//! Fibered Dirichlet-to-Neumann traces, boundary pairings and norm surrogates.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::domain::WaveguideGrid;
use crate::error::Result;
use crate::fields::{MagneticPotential, PotentialPair};
use crate::pde::{level_inner, FiberField, Lift, Orientation, Solver, SourceTerm};
use crate::probes::{check_resolution, go_boundary_data, GOComponents, ProbeSpec, Side};
use crate::quad::trapezoid_weights;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Samples on `(0,T) x [0,1) x` boundary nodes, flat as `[n][i1][b]`.
#[derive(Debug, Clone)]
pub struct LateralTrace {
    grid: Arc<WaveguideGrid>,
    values: Vec<Complex64>,
}

impl LateralTrace {
    pub fn zeros(grid: Arc<WaveguideGrid>) -> Self {
        let len = (grid.n_t + 1) * grid.n1 * grid.cs.boundary().len();
        LateralTrace { grid, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    /// Restriction of a field to the lateral boundary.
    pub fn restrict(u: &FiberField) -> Self {
        let g = u.grid().clone();
        let mut tr = Self::zeros(g.clone());
        let ncs = g.cs.len();
        let mut k = 0;
        for n in 0..=g.n_t {
            let level = u.level(n);
            for i1 in 0..g.n1 {
                for b in g.cs.boundary() {
                    tr.values[k] = level[i1 * ncs + b.node];
                    k += 1;
                }
            }
        }
        tr
    }

    pub fn grid(&self) -> &Arc<WaveguideGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Quadrature weight of every sample: trapezoid in t, `h1` in x1, arc length.
    pub fn weights(&self) -> Vec<f64> {
        let g = &self.grid;
        let wt = trapezoid_weights(g.n_t, g.dt());
        let mut w = Vec::with_capacity(self.values.len());
        for wn in &wt {
            for _ in 0..g.n1 {
                for b in g.cs.boundary() {
                    w.push(wn * g.h1() * b.weight);
                }
            }
        }
        w
    }

    /// `<a, b> = sum w a conj(b)`.
    pub fn inner(&self, other: &LateralTrace) -> Complex64 {
        self.weights().iter().zip(&self.values).zip(&other.values).map(|((w, a), b)| a * b.conj() * *w).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.max(0.0).sqrt()
    }

    pub fn sub(&self, other: &LateralTrace) -> LateralTrace {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        LateralTrace { grid: self.grid.clone(), values }
    }
}

/// `(d_nu + i A . nu) u` on the lateral boundary.
pub fn dn_apply(a: &MagneticPotential, u: &FiberField) -> LateralTrace {
    let g = u.grid().clone();
    let mut tr = LateralTrace::zeros(g.clone());
    let ncs = g.cs.len();
    let nb = g.cs.boundary().len();
    let coupling: Vec<f64> = (0..g.n1)
        .flat_map(|i1| {
            let g = &g;
            g.cs.boundary().iter().map(move |b| {
                let v = a.eval(g.point(i1, b.node));
                v[1] * b.normal[0] + v[2] * b.normal[1]
            })
        })
        .collect();
    for n in 0..=g.n_t {
        let level = u.level(n);
        for i1 in 0..g.n1 {
            let slice = &level[i1 * ncs..(i1 + 1) * ncs];
            for (bi, b) in g.cs.boundary().iter().enumerate() {
                let k = (n * g.n1 + i1) * nb + bi;
                let c = coupling[i1 * nb + bi];
                tr.values[k] = g.cs.normal_derivative(b, slice) + I * c * slice[b.node];
            }
        }
    }
    tr
}

/// Volume and boundary sides of the Green identity for a source-driven
/// forward solution `w` (zero on the boundary) and a homogeneous solution `u1`
/// vanishing at `t = T`: `int F conj(u1)` and `int (d_nu + i A.nu) w conj(u1)`.
pub fn green_identity(
    a: &MagneticPotential,
    w: &FiberField,
    f: &dyn SourceTerm,
    u1: &FiberField,
) -> (Complex64, Complex64) {
    let g = w.grid().clone();
    let mut fv = vec![Complex64::new(0.0, 0.0); g.level_len()];
    let mut half_u = vec![Complex64::new(0.0, 0.0); g.level_len()];
    let mut volume = Complex64::new(0.0, 0.0);
    for n in 0..g.n_t {
        f.half_step(n, &g, &mut fv);
        for p in 0..g.level_len() {
            half_u[p] = (u1.level(n)[p] + u1.level(n + 1)[p]) * 0.5;
        }
        volume += level_inner(&g, &half_u, &fv) * g.dt();
    }
    let boundary = dn_apply(a, w).inner(&LateralTrace::restrict(u1));
    (volume, boundary)
}

/// `(Lambda_{A1} - Lambda_{A2}) h` for the Dirichlet datum carried by `lift`.
pub fn dn_difference(
    pair: &PotentialPair,
    theta: f64,
    grid: Arc<WaveguideGrid>,
    lift: &dyn Lift,
) -> Result<LateralTrace> {
    dn_difference_oriented(pair, theta, grid, lift, Orientation::Forward)
}

/// `(Lambda_1 - Lambda_2) h` for solutions vanishing at `t = 0` (forward) or `t = T` (backward).
pub fn dn_difference_oriented(
    pair: &PotentialPair,
    theta: f64,
    grid: Arc<WaveguideGrid>,
    lift: &dyn Lift,
    orientation: Orientation,
) -> Result<LateralTrace> {
    let u1 = Solver::new(&pair.a1, theta, grid.clone()).solve_dirichlet(lift, orientation)?;
    let t1 = dn_apply(&pair.a1, &u1);
    drop(u1);
    let u2 = Solver::new(&pair.a2, theta, grid).solve_dirichlet(lift, orientation)?;
    Ok(t1.sub(&dn_apply(&pair.a2, &u2)))
}

/// Finite-difference `H^2(0,T; H^2)` norm of a lift on the interior nodes.
pub fn xtheta_norm_surrogate(lift: &dyn Lift, grid: &WaveguideGrid, theta: f64) -> f64 {
    let len = grid.level_len();
    let zero = Complex64::new(0.0, 0.0);
    let mut levels = vec![vec![zero; len]; 3];
    let dt = grid.dt();
    let wt = trapezoid_weights(grid.n_t, dt);
    let mut total = 0.0;
    let mut d1 = vec![zero; len];
    let mut d2 = vec![zero; len];
    lift.level(0, grid, &mut levels[1]);
    if grid.n_t >= 1 {
        lift.level(1, grid, &mut levels[2]);
    }
    for n in 0..=grid.n_t {
        if n > 0 {
            levels.rotate_left(1);
            if n < grid.n_t {
                lift.level(n + 1, grid, &mut levels[2]);
            }
        }
        let (prev, cur, next) = (&levels[0], &levels[1], &levels[2]);
        // one-sided stencils at the ends of the time interval
        for p in 0..len {
            if n == 0 {
                d1[p] = (next[p] - cur[p]) / dt;
                d2[p] = zero;
            } else if n == grid.n_t {
                d1[p] = (cur[p] - prev[p]) / dt;
                d2[p] = zero;
            } else {
                d1[p] = (next[p] - prev[p]) / (2.0 * dt);
                d2[p] = (next[p] - cur[p] * 2.0 + prev[p]) / (dt * dt);
            }
        }
        if grid.n_t >= 2 && (n == 0 || n == grid.n_t) {
            let inner = if n == 0 { 1 } else { grid.n_t - 1 };
            let mut a = vec![zero; len];
            let mut b = vec![zero; len];
            let mut c = vec![zero; len];
            lift.level(inner - 1, grid, &mut a);
            lift.level(inner, grid, &mut b);
            lift.level(inner + 1, grid, &mut c);
            for p in 0..len {
                d2[p] = (c[p] - b[p] * 2.0 + a[p]) / (dt * dt);
            }
        }
        let s = spatial_h2_sq(grid, theta, cur) + spatial_h2_sq(grid, theta, &d1) + spatial_h2_sq(grid, theta, &d2);
        total += wt[n] * s;
    }
    total.sqrt()
}

/// Squared `H^2` norm of one level by centered differences at interior nodes.
pub fn spatial_h2_sq(grid: &WaveguideGrid, theta: f64, u: &[Complex64]) -> f64 {
    let ncs = grid.cs.len();
    let (n2, _) = grid.cs.dims();
    let n1 = grid.n1;
    let (h1, h) = (grid.h1(), grid.cs.h());
    let wrap = Complex64::from_polar(1.0, theta);
    let at = |i1: isize, j: usize| -> Complex64 {
        let k = i1.rem_euclid(n1 as isize) as usize;
        let turns = i1.div_euclid(n1 as isize) as f64;
        u[k * ncs + j] * wrap.powf(turns)
    };
    let mut acc = 0.0;
    for i1 in 0..n1 as isize {
        for &j in grid.cs.interior() {
            let c = at(i1, j);
            let offs: [(isize, isize, f64); 3] = [(1, 0, h1), (0, 1, h), (0, n2 as isize, h)];
            let shifted = |d: (isize, isize), s: isize| at(i1 + s * d.0, (j as isize + s * d.1) as usize);
            let mut sum = c.norm_sqr();
            for (a, &(da1, daj, ha)) in offs.iter().enumerate() {
                let p = shifted((da1, daj), 1);
                let m = shifted((da1, daj), -1);
                sum += ((p - m) / (2.0 * ha)).norm_sqr();
                sum += ((p - c * 2.0 + m) / (ha * ha)).norm_sqr();
                for &(db1, dbj, hb) in offs.iter().skip(a + 1) {
                    let pp = at(i1 + da1 + db1, (j as isize + daj + dbj) as usize);
                    let pm = at(i1 + da1 - db1, (j as isize + daj - dbj) as usize);
                    let mp = at(i1 - da1 + db1, (j as isize - daj + dbj) as usize);
                    let mm = at(i1 - da1 - db1, (j as isize - daj - dbj) as usize);
                    // mixed derivatives appear twice in the Hessian
                    sum += 2.0 * ((pp - pm - mp + mm) / (4.0 * ha * hb)).norm_sqr();
                }
            }
            acc += sum * h1 * h * h;
        }
    }
    acc
}

/// One entry of a boundary-data battery: a lift and its norm surrogate.
pub struct BatteryEntry<'a> {
    pub lift: &'a dyn Lift,
    pub norm: f64,
}

/// Max over the battery of `||(Lambda_1 - Lambda_2) h|| / ||h||`, with the per-entry ratios.
pub fn dn_norm_estimate(
    pair: &PotentialPair,
    theta: f64,
    grid: Arc<WaveguideGrid>,
    battery: &[BatteryEntry<'_>],
) -> Result<(f64, Vec<f64>)> {
    let mut ratios = Vec::with_capacity(battery.len());
    for e in battery {
        let d = dn_difference(pair, theta, grid.clone(), e.lift)?;
        ratios.push(if e.norm > 0.0 { d.norm() / e.norm } else { 0.0 });
    }
    Ok((ratios.iter().cloned().fold(0.0, f64::max), ratios))
}

/// Estimates at each sampled `theta` and their maximum; `battery(theta)` supplies the data.
pub fn dn_norm_over_theta<B>(
    pair: &PotentialPair,
    thetas: &[f64],
    grid: Arc<WaveguideGrid>,
    battery: B,
) -> Result<(f64, Vec<f64>)>
where
    B: Fn(f64) -> Vec<(FiberField, f64)>,
{
    let mut per = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let data = battery(theta);
        let entries: Vec<BatteryEntry<'_>> =
            data.iter().map(|(lift, norm)| BatteryEntry { lift, norm: *norm }).collect();
        per.push(dn_norm_estimate(pair, theta, grid.clone(), &entries)?.0);
    }
    Ok((per.iter().cloned().fold(0.0, f64::max), per))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingPath {
    Pde,
    Oracle,
}

impl PairingPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            PairingPath::Pde => "pde",
            PairingPath::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingRecord {
    pub theta: f64,
    pub omega: [f64; 2],
    pub xi: [f64; 2],
    pub k: i64,
    pub j: usize,
    pub sigma: f64,
    /// Window center along `omega'^perp`; not serialized.
    pub z0: f64,
    pub value: Complex64,
    pub path: PairingPath,
}

impl PairingRecord {
    pub fn new(spec: &ProbeSpec, value: Complex64, path: PairingPath) -> Self {
        PairingRecord {
            theta: spec.theta,
            omega: spec.omega,
            xi: spec.xi,
            k: spec.k,
            j: spec.j,
            sigma: spec.sigma,
            z0: spec.z0,
            value,
            path,
        }
    }
}

/// PDE estimate of `int sigma omega.A' (phi_2 conj phi_1)(x1, x' - 2 sigma t omega) b dx dt`:
/// `-(1/2) <(Lambda_1 - Lambda_2) f_2, f_1>` with `f_2` the forward GO datum for `A_2`
/// and `f_1` the backward GO datum for `A_1`.
pub fn dn_pair(pair: &PotentialPair, probe: &GOComponents, grid: Arc<WaveguideGrid>) -> Result<PairingRecord> {
    check_resolution(probe.spec.sigma, &grid)?;
    let f2 = go_boundary_data(probe, Side::Forward, &pair.a2, grid.clone())?;
    let f1 = go_boundary_data(probe, Side::Backward, &pair.a1, grid.clone())?;
    let d = dn_difference(pair, probe.spec.theta, grid, &f2.lift)?;
    Ok(PairingRecord::new(&probe.spec, d.inner(&f1.trace) * -0.5, PairingPath::Pde))
}

pub const PAIRING_CSV_HEADER: &str = "theta,omega2,omega3,xi2,xi3,k,j,sigma,re,im,path";

pub fn write_pairing_csv<W: Write>(mut out: W, records: &[PairingRecord]) -> std::io::Result<()> {
    writeln!(out, "{PAIRING_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{}",
            r.theta,
            r.omega[0],
            r.omega[1],
            r.xi[0],
            r.xi[1],
            r.k,
            r.j,
            r.sigma,
            r.value.re,
            r.value.im,
            r.path.as_str()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CrossSection;

    fn closed_form(g: Arc<WaveguideGrid>, theta: f64, f: impl Fn(f64, [f64; 3]) -> Complex64) -> FiberField {
        let ncs = g.cs.len();
        let levels = (0..=g.n_t)
            .map(|n| (0..g.level_len()).map(|p| f(g.time(n), g.point(p / ncs, p % ncs))).collect())
            .collect();
        FiberField::from_levels(g, theta, Orientation::Forward, levels)
    }

    fn grid(h: f64) -> Arc<WaveguideGrid> {
        Arc::new(WaveguideGrid::new(CrossSection::rectangle(0.25, 0.25, h).unwrap(), 4, 3, 0.3).unwrap())
    }

    #[test]
    fn zero_field_has_zero_trace() {
        let g = grid(1.0 / 16.0);
        let u = FiberField::zeros(g, 0.0, Orientation::Forward);
        assert_eq!(dn_apply(&MagneticPotential::Zero, &u).norm(), 0.0);
    }

    #[test]
    fn normal_derivative_is_second_order() {
        let f = |t: f64, x: [f64; 3]| Complex64::new((3.0 * x[1] + t).sin() * (2.0 * x[2]).cos(), 0.0);
        let df = |t: f64, x: [f64; 3], nu: [f64; 2]| {
            3.0 * (3.0 * x[1] + t).cos() * (2.0 * x[2]).cos() * nu[0]
                - 2.0 * (3.0 * x[1] + t).sin() * (2.0 * x[2]).sin() * nu[1]
        };
        let mut errs = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let g = grid(h);
            let u = closed_form(g.clone(), 0.0, f);
            let tr = dn_apply(&MagneticPotential::Zero, &u);
            let nb = g.cs.boundary().len();
            let mut e: f64 = 0.0;
            for (k, v) in tr.values().iter().enumerate() {
                let n = k / (g.n1 * nb);
                let i1 = (k / nb) % g.n1;
                let b = &g.cs.boundary()[k % nb];
                e = e.max((v.re - df(g.time(n), g.point(i1, b.node), b.normal)).abs());
            }
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn boundary_inner_product_is_hermitian() {
        let g = grid(1.0 / 8.0);
        let a = LateralTrace::restrict(&closed_form(g.clone(), 0.0, |t, x| Complex64::new(x[1] + t, x[2])));
        let b = LateralTrace::restrict(&closed_form(g.clone(), 0.0, |t, x| Complex64::new(x[2] * t, 1.0 + x[0])));
        assert!((a.inner(&b) - b.inner(&a).conj()).norm() < 1e-15);
        // perimeter x x1-length x time
        let one = LateralTrace::restrict(&closed_form(g.clone(), 0.0, |_, _| Complex64::new(1.0, 0.0)));
        assert!((one.norm().powi(2) - 2.0 * 0.3).abs() < 1e-12);
    }

    #[test]
    fn surrogate_of_static_datum_is_spatial_norm() {
        let g = grid(1.0 / 16.0);
        let w = closed_form(g.clone(), 0.0, |_, x| {
            Complex64::new((x[1] * 4.0).cos() * x[2], (2.0 * std::f64::consts::PI * x[0]).sin())
        });
        let s = xtheta_norm_surrogate(&w, &g, 0.0);
        let expect = (spatial_h2_sq(&g, 0.0, w.level(0)) * g.t_final).sqrt();
        assert!((s - expect).abs() < 1e-12 * expect);
        let zero = FiberField::zeros(g.clone(), 0.0, Orientation::Forward);
        assert_eq!(xtheta_norm_surrogate(&zero, &g, 0.0), 0.0);
    }

    #[test]
    fn pairing_csv_layout() {
        let r = PairingRecord {
            theta: 0.0,
            omega: [1.0, 0.0],
            xi: [0.0, 2.0],
            k: -1,
            j: 3,
            sigma: 6.0,
            z0: 0.125,
            value: Complex64::new(0.5, -0.25),
            path: PairingPath::Oracle,
        };
        let mut buf = Vec::new();
        write_pairing_csv(&mut buf, &[r]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], PAIRING_CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), 11);
        assert!(lines[1].ends_with(",-1,3,6.0000000000000000e0,5.0000000000000000e-1,-2.5000000000000000e-1,oracle"));
    }
}
