//! Identity suites shared by `verify` and the acceptance tests.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dn::{dn_apply, green_identity};
use crate::domain::{CrossSection, NodeKind, Shape, WaveguideGrid};
use crate::error::Result;
use crate::fbg::{fbg_forward_grid, fiber_norm_sq, CellFunction};
use crate::fields::{gauge_transform, ExtendedDifference, GaugeFunction, MagneticPotential};
use crate::pde::{level_norm_sq, solve_source, FiberField, Orientation, SeparableSource, Solver};
use crate::probes::build_amplitude;
use crate::xray::{fourier_2d, slice_fourier, telescope_check};

fn random_direction(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let t = rng.gen_range(0.0..2.0 * PI);
    [t.cos(), t.sin()]
}

fn random_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Largest relative Parseval defect over `draws` random two-cell functions.
pub fn fbg_parseval(seed: u64, draws: usize, thetas: usize, cell_len: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let k_min = rng.gen_range(-3..3);
        let cells = (0..2).map(|_| (0..cell_len).map(|_| random_c(&mut rng)).collect()).collect();
        let f = CellFunction::new(k_min, cells)?;
        let fibers = fbg_forward_grid(&f, thetas)?;
        let n = f.norm_sq();
        worst = worst.max((fiber_norm_sq(&fibers) - n).abs() / n);
    }
    Ok(worst)
}

/// Random data vanishing on the lateral boundary.
pub fn random_interior(g: &WaveguideGrid, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let ncs = g.cs.len();
    (0..g.level_len())
        .map(|p| if g.cs.kind(p % ncs) == NodeKind::Interior { random_c(rng) } else { Complex64::new(0.0, 0.0) })
        .collect()
}

/// Largest relative drift of the level norm along a Crank-Nicolson Cauchy evolution.
pub fn cn_unitarity(a: &MagneticPotential, theta: f64, g: Arc<WaveguideGrid>, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u0 = random_interior(&g, &mut rng);
    let u = Solver::new(a, theta, g.clone()).with_tolerance(1e-14).cauchy_evolve(&u0)?;
    let n0 = u.level_norm(0);
    Ok((0..=g.n_t).map(|n| (u.level_norm(n) - n0).abs() / n0).fold(0.0, f64::max))
}

/// Relative errors of a free source solve driven by the lowest Dirichlet eigenmode, against the
/// Crank-Nicolson recurrence with the discrete eigenvalue and against the continuum Duhamel formula.
pub fn duhamel_errors(g: Arc<WaveguideGrid>, theta: f64) -> Result<(f64, f64)> {
    let (n2, n3) = g.cs.dims();
    let (m2, m3) = ((n2 - 1) as f64, (n3 - 1) as f64);
    let ncs = g.cs.len();
    let kappa = theta / g.n1 as f64;
    let mut e = vec![Complex64::new(0.0, 0.0); g.level_len()];
    for i1 in 0..g.n1 {
        for j in 0..ncs {
            let s = (PI * (j % n2) as f64 / m2).sin() * (PI * (j / n2) as f64 / m3).sin();
            e[i1 * ncs + j] = Complex64::from_polar(s, kappa * i1 as f64);
        }
    }
    let (h1, h) = (g.h1(), g.cs.h());
    let lambda = 4.0 / (h1 * h1) * (0.5 * kappa).sin().powi(2)
        + 4.0 / (h * h) * ((PI / (2.0 * m2)).sin().powi(2) + (PI / (2.0 * m3)).sin().powi(2));
    let (w2, w3) = (m2 * h, m3 * h);
    let continuum = theta * theta + (PI / w2).powi(2) + (PI / w3).powi(2);
    let w = solve_source(
        &MagneticPotential::Zero,
        theta,
        g.clone(),
        &SeparableSource::constant(e.clone()),
        Orientation::Forward,
    )?;
    let i = Complex64::new(0.0, 1.0);
    let dt = g.dt();
    let mut c = Complex64::new(0.0, 0.0);
    for _ in 0..g.n_t {
        c = ((i / dt + lambda * 0.5) * c + 1.0) / (i / dt - lambda * 0.5);
    }
    let exact = ((-i * continuum * g.t_final).exp() - 1.0) / continuum;
    let last = w.level(g.n_t);
    let diff = |coef: Complex64| {
        let d: Vec<Complex64> = last.iter().zip(&e).map(|(u, v)| u - coef * v).collect();
        (level_norm_sq(&g, &d) / (coef.norm_sqr() * level_norm_sq(&g, &e))).sqrt()
    };
    Ok((diff(c), diff(exact)))
}

/// Smooth datum `t^2 (1 + x2 - x3^2 + 0.3 cos 2 pi x1 + i sin(mode x3))` times the Bloch phase.
pub fn ramp_lift(g: &Arc<WaveguideGrid>, theta: f64, mode: f64) -> FiberField {
    let ncs = g.cs.len();
    let levels = (0..=g.n_t)
        .map(|n| {
            let t = g.time(n);
            (0..g.level_len())
                .map(|p| {
                    let x = g.point(p / ncs, p % ncs);
                    Complex64::from_polar(t * t, theta * x[0])
                        * Complex64::new(1.0 + x[1] - x[2] * x[2] + 0.3 * (2.0 * PI * x[0]).cos(), (mode * x[2]).sin())
                })
                .collect()
        })
        .collect();
    FiberField::from_levels(g.clone(), theta, Orientation::Forward, levels)
}

/// `||Lambda_A h - Lambda_{A + grad psi} h|| / ||Lambda_A h||` for the ramp datum.
pub fn gauge_mismatch(a: &MagneticPotential, psi: &GaugeFunction, theta: f64, g: Arc<WaveguideGrid>) -> Result<f64> {
    let lift = ramp_lift(&g, theta, 2.0);
    let shifted = gauge_transform(a, psi);
    let u = Solver::new(a, theta, g.clone()).solve_dirichlet(&lift, Orientation::Forward)?;
    let base = dn_apply(a, &u);
    drop(u);
    let v = Solver::new(&shifted, theta, g).solve_dirichlet(&lift, Orientation::Forward)?;
    Ok(base.sub(&dn_apply(&shifted, &v)).norm() / base.norm())
}

/// Largest residual of `(d_t + omega . grad') b + i (omega . A') b = 0` by central differences.
pub fn transport_residual(a: &MagneticPotential, seed: u64, draws: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 1e-4;
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let w = random_direction(&mut rng);
        let amp = build_amplitude(a, w);
        let t = rng.gen_range(0.0..1.5);
        let x = [rng.gen_range(0.0..1.0), rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)];
        let b = amp.eval(t, x)?;
        let dt = (amp.eval(t + d, x)? - amp.eval(t - d, x)?) / (2.0 * d);
        let shift = |s: f64| [x[0], x[1] + s * w[0], x[2] + s * w[1]];
        let dw = (amp.eval(t, shift(d))? - amp.eval(t, shift(-d))?) / (2.0 * d);
        let ap = a.transverse(x);
        worst = worst.max((dt + dw + Complex64::new(0.0, w[0] * ap[0] + w[1] * ap[1]) * b).norm());
    }
    Ok(worst)
}

/// Largest telescoping defect over random rays entering the support.
pub fn telescoping_residual(a: &MagneticPotential, sigma: f64, t_final: f64, seed: u64, draws: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let w = random_direction(&mut rng);
        let p = rng.gen_range(-0.3..0.3);
        let back = rng.gen_range(0.3..0.6);
        let x = [rng.gen_range(0.0..1.0), -p * w[1] - back * w[0], p * w[0] - back * w[1]];
        let (lhs, rhs) = telescope_check(a, w, sigma, t_final, x)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Largest Fourier-slice defect for `beta23` of the difference over random slices.
pub fn fourier_slice_residual(diff: &ExtendedDifference, seed: u64, draws: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = diff.shape().half_extent();
    let r = half[0].hypot(half[1]);
    let f = |x: [f64; 3]| diff.beta23(x);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let w = random_direction(&mut rng);
        let eta = rng.gen_range(-12.0..12.0);
        let x1 = rng.gen_range(0.0..1.0);
        let lhs = slice_fourier(&f, x1, w, eta, r)?;
        let rhs = fourier_2d(&f, x1, [-eta * w[1], eta * w[0]], r);
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Relative gap between the volume and boundary sides of the Green identity at spacing `h`.
pub fn green_mismatch(a: &MagneticPotential, shape: Shape, h: f64) -> Result<f64> {
    let t_f = 0.05;
    let cs = CrossSection::new(shape, h)?;
    let half = shape.half_extent()[1];
    let n_t = ((0.1 / (h * h)) as usize).max(20);
    let g = Arc::new(WaveguideGrid::new(cs, ((0.5 / h) as usize).max(2), n_t, t_f)?);
    let ncs = g.cs.len();
    let x = |p: usize| g.point(p / ncs, p % ncs);
    let q = 1.0 / (half * half);
    let profile = (0..g.level_len())
        .map(|p| {
            let x = x(p);
            Complex64::new((3.0 * x[1]).cos() * (1.0 - q * x[2] * x[2]), (2.0 * PI * x[0]).sin())
        })
        .collect();
    let f = SeparableSource {
        profile,
        time: Box::new(|t| Complex64::new(t, 0.0)),
        time_dt: Box::new(|_| Complex64::new(1.0, 0.0)),
    };
    let w = solve_source(a, 0.0, g.clone(), &f, Orientation::Forward)?;
    let levels = (0..=g.n_t)
        .map(|n| {
            let s = 400.0 * (t_f - g.time(n)).powi(3);
            (0..g.level_len())
                .map(|p| {
                    let x = x(p);
                    Complex64::new(1.0 + x[1] + 3.0 * x[1] * x[2], 0.5 * x[2]) * s
                })
                .collect()
        })
        .collect();
    let lift = FiberField::from_levels(g.clone(), 0.0, Orientation::Backward, levels);
    let u1 = Solver::new(a, 0.0, g.clone()).solve_dirichlet(&lift, Orientation::Backward)?;
    let (v, b) = green_identity(a, &w, &f, &u1);
    Ok((v - b).norm() / v.norm())
}

/// `log2` of successive error ratios.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
