use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::domain::{CrossSection, NodeKind, WaveguideGrid};
use crate::fields::{Cutoff, MagneticPotential};

fn potential() -> MagneticPotential {
    MagneticPotential::sum(
        MagneticPotential::Swirl {
            strength: 2.0,
            cutoff: Cutoff { center: [0.01, 0.0], plateau: 0.05, radius: 0.18 },
            modulation: 0.3,
            axial: 0.5,
        },
        MagneticPotential::Drift {
            alpha: [0.6, -0.4],
            cutoff: Cutoff { center: [0.0, 0.02], plateau: 0.03, radius: 0.15 },
            modulation: 0.2,
        },
    )
}

fn grid(cs: CrossSection, n1: usize, n_t: usize, t: f64) -> Arc<WaveguideGrid> {
    Arc::new(WaveguideGrid::new(cs, n1, n_t, t).unwrap())
}

fn rect_grid(n_t: usize, t: f64) -> Arc<WaveguideGrid> {
    grid(CrossSection::rectangle(0.25, 0.25, 1.0 / 16.0).unwrap(), 8, n_t, t)
}

fn random_interior(g: &WaveguideGrid, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let ncs = g.cs.len();
    (0..g.level_len())
        .map(|p| {
            if g.cs.kind(p % ncs) == NodeKind::Interior {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Discrete Dirichlet eigenfunction `e^{i kappa i1} sin(pi p2 i2/M) sin(pi p3 i3/M)` and its eigenvalue `-lambda`.
fn eigenmode(g: &WaveguideGrid, theta: f64, m: i64, p2: usize, p3: usize) -> (Vec<Complex64>, f64) {
    let (n2, n3) = g.cs.dims();
    let (m2, m3) = ((n2 - 1) as f64, (n3 - 1) as f64);
    let kappa = (theta + 2.0 * PI * m as f64) / g.n1 as f64;
    let ncs = g.cs.len();
    let mut u = vec![Complex64::new(0.0, 0.0); g.level_len()];
    for i1 in 0..g.n1 {
        for j in 0..ncs {
            let (i2, i3) = ((j % n2) as f64, (j / n2) as f64);
            let s = (PI * p2 as f64 * i2 / m2).sin() * (PI * p3 as f64 * i3 / m3).sin();
            u[i1 * ncs + j] = Complex64::from_polar(s, kappa * i1 as f64);
        }
    }
    let h1 = g.h1();
    let h = g.cs.h();
    let lambda = 4.0 / (h1 * h1) * (0.5 * kappa).sin().powi(2)
        + 4.0 / (h * h) * ((PI * p2 as f64 / (2.0 * m2)).sin().powi(2) + (PI * p3 as f64 / (2.0 * m3)).sin().powi(2));
    (u, lambda)
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn free_operator_matches_discrete_symbol() {
    let g = rect_grid(1, 1.0);
    let op = MagneticOperator::new(&MagneticPotential::Zero, 0.0, g.clone());
    let (u, lambda) = eigenmode(&g, 0.0, 1, 1, 1);
    let mut out = vec![Complex64::new(0.0, 0.0); u.len()];
    op.apply(&u, &mut out);
    let expect: Vec<Complex64> = u.iter().map(|v| -lambda * v).collect();
    assert!(max_diff(&out, &expect) < 1e-12 * lambda);
    let continuum = 4.0 * PI * PI + 2.0 * 4.0 * PI * PI;
    assert!((lambda - continuum).abs() / continuum < 0.05);
}

#[test]
fn operator_is_self_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for cs in [CrossSection::rectangle(0.25, 0.25, 1.0 / 16.0).unwrap(), CrossSection::disk(0.25, 1.0 / 16.0).unwrap()]
    {
        let g = grid(cs, 8, 1, 1.0);
        let op = MagneticOperator::new(&potential(), 0.7, g.clone());
        for _ in 0..10 {
            let (u, v) = (random_interior(&g, &mut rng), random_interior(&g, &mut rng));
            let (mut au, mut av) = (vec![Complex64::new(0.0, 0.0); u.len()], vec![Complex64::new(0.0, 0.0); u.len()]);
            op.apply(&u, &mut au);
            op.apply(&v, &mut av);
            let lhs = op.inner(&au, &v);
            let rhs = op.inner(&u, &av);
            let scale = level_norm_sq(&g, &au).sqrt() * level_norm_sq(&g, &v).sqrt();
            assert!((lhs - rhs).norm() <= 1e-12 * scale, "{}", (lhs - rhs).norm() / scale);
        }
    }
}

#[test]
fn spectral_preconditioner_inverts_free_system() {
    let g = rect_grid(10, 0.1);
    let op = MagneticOperator::new(&MagneticPotential::Zero, 1.1, g.clone());
    let zeta = Complex64::new(0.0, -0.005);
    let pre = Preconditioner::new(&op, zeta);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_interior(&g, &mut rng);
    let mut ax = vec![Complex64::new(0.0, 0.0); x.len()];
    op.apply(&x, &mut ax);
    let sys: Vec<Complex64> = x.iter().zip(&ax).map(|(a, b)| a + zeta * b).collect();
    let mut back = vec![Complex64::new(0.0, 0.0); x.len()];
    pre.apply(&sys, &mut back);
    assert!(max_diff(&back, &x) < 1e-12);
}

#[test]
fn zero_source_gives_zero() {
    let g = rect_grid(20, 0.1);
    let w = solve_source(&potential(), 0.4, g, &ZeroSource, Orientation::Forward).unwrap();
    assert_eq!(w.max_level_norm(), 0.0);
}

#[test]
fn duhamel_scalar_recurrence() {
    let (theta, n_t, t) = (0.3, 64, 0.02);
    let g = rect_grid(n_t, t);
    let (e, lambda) = eigenmode(&g, theta, 0, 1, 1);
    let f = SeparableSource::constant(e.clone());
    let w = solve_source(&MagneticPotential::Zero, theta, g.clone(), &f, Orientation::Forward).unwrap();
    // i (c+ - c)/dt - lambda (c+ + c)/2 = 1
    let dt = g.dt();
    let mut c = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let e_norm = level_norm_sq(&g, &e);
    for n in 0..n_t {
        c = ((i / dt + lambda * 0.5) * c + 1.0) / (i / dt - lambda * 0.5);
        let coeff = level_inner(&g, &e, w.level(n + 1)) / e_norm;
        assert!((coeff - c).norm() <= 1e-8 * c.norm(), "step {n}");
    }
    let exact = ((-i * lambda * t).exp() - 1.0) / lambda;
    assert!((c - exact).norm() < 0.05 * exact.norm());
    let f_max = e_norm.sqrt();
    assert!(w.max_level_norm() <= t * f_max);
    assert!(w.norm() <= t * f_max);
}

#[test]
fn cauchy_evolution_is_unitary() {
    let g = rect_grid(200, 0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u0 = random_interior(&g, &mut rng);
    let solver = Solver::new(&potential(), 2.0, g.clone()).with_tolerance(1e-14);
    let u = solver.cauchy_evolve(&u0).unwrap();
    let n0 = u.level_norm(0);
    for n in 0..=g.n_t {
        assert!((u.level_norm(n) - n0).abs() <= 1e-11 * n0, "level {n}");
    }
}

#[test]
fn backward_solve_has_terminal_zero_and_small_residual() {
    let g = grid(CrossSection::disk(0.25, 1.0 / 16.0).unwrap(), 8, 30, 0.03);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let profile = random_interior(&g, &mut rng);
    let f = SeparableSource {
        profile,
        time: Box::new(|t| Complex64::new((20.0 * t).cos(), t)),
        time_dt: Box::new(|t| Complex64::new(-20.0 * (20.0 * t).sin(), 1.0)),
    };
    let solver = Solver::new(&potential(), PI, g.clone());
    let w = solver.solve_source(&f, Orientation::Backward).unwrap();
    assert_eq!(w.level_norm(g.n_t), 0.0);
    assert!(w.level_norm(0) > 0.0);
    let r = solver.residual(&w, Some(&f));
    let scale = (0..g.n_t)
        .map(|n| {
            let mut v = vec![Complex64::new(0.0, 0.0); g.level_len()];
            f.half_step(n, &g, &mut v);
            level_norm_sq(&g, &v).sqrt()
        })
        .fold(0.0, f64::max);
    assert!(r.iter().all(|x| *x <= 1e-8 * scale));
}

#[test]
fn exact_lift_is_reproduced() {
    // cosine modes do not vanish on the boundary; evolve one with the Cayley phase
    let g = rect_grid(40, 0.01);
    let theta = 0.9;
    let ncs = g.cs.len();
    let h = g.cs.h();
    let kappa = theta / g.n1 as f64;
    let q = 3.0;
    let lambda =
        4.0 / (g.h1() * g.h1()) * (0.5 * kappa).sin().powi(2) + 2.0 * 4.0 / (h * h) * (0.5 * q * h).sin().powi(2);
    let tau = 0.5 * g.dt();
    let i = Complex64::new(0.0, 1.0);
    let cayley = (1.0 - i * tau * lambda) / (1.0 + i * tau * lambda);
    let levels: Vec<Vec<Complex64>> = (0..=g.n_t)
        .map(|n| {
            (0..g.level_len())
                .map(|p| {
                    let (i1, j) = (p / ncs, p % ncs);
                    let x = g.cs.coords(j);
                    cayley.powi(n as i32)
                        * Complex64::from_polar((q * x[0]).cos() * (q * x[1]).cos(), kappa * i1 as f64)
                })
                .collect()
        })
        .collect();
    let w = FiberField::from_levels(g.clone(), theta, Orientation::Forward, levels);
    let u = solve_dirichlet(&MagneticPotential::Zero, theta, g.clone(), &w, Orientation::Forward).unwrap();
    for n in 0..=g.n_t {
        assert!(max_diff(u.level(n), w.level(n)) < 1e-10);
    }
}

#[test]
fn lift_boundary_values_are_kept() {
    let g = rect_grid(20, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let base: Vec<Complex64> = (0..g.level_len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
    let levels = (0..=g.n_t).map(|n| base.iter().map(|v| v * (n as f64 * 0.1).sin()).collect()).collect();
    let w = FiberField::from_levels(g.clone(), 0.0, Orientation::Forward, levels);
    let solver = Solver::new(&potential(), 0.0, g.clone());
    let u = solver.solve_dirichlet(&w, Orientation::Forward).unwrap();
    let ncs = g.cs.len();
    for n in 0..=g.n_t {
        for p in 0..g.level_len() {
            if g.cs.kind(p % ncs) == NodeKind::Boundary {
                assert_eq!(u.level(n)[p], w.level(n)[p]);
            }
        }
    }
    let r = solver.residual(&u, None);
    assert!(r.iter().all(|x| *x < 1e-8 * w.max_level_norm() / g.dt()));
}

#[test]
fn wrap_reads_quasi_periodic_value() {
    let g = rect_grid(2, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u0 = random_interior(&g, &mut rng);
    let u = cauchy_evolve(&potential(), 1.3, g.clone(), &u0).unwrap();
    for j in 0..g.cs.len() {
        let expect = Complex64::from_polar(1.0, 1.3) * u.value(1, 0, j);
        assert_eq!(u.value(1, g.n1, j), expect);
    }
}
