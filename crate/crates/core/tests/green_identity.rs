use std::f64::consts::PI;
use std::sync::Arc;

use magwave::dn::green_identity;
use magwave::domain::{CrossSection, WaveguideGrid};
use magwave::fields::{Cutoff, MagneticPotential};
use magwave::pde::{solve_dirichlet, solve_source, FiberField, Orientation, SeparableSource};
use num_complex::Complex64;

fn mismatch(a: &MagneticPotential, h: f64) -> f64 {
    let t_f = 0.05;
    let cs = CrossSection::rectangle(0.25, 0.25, h).unwrap();
    let n_t = ((0.1 / (h * h)) as usize).max(20);
    let g = Arc::new(WaveguideGrid::new(cs, (0.5 / h) as usize, n_t, t_f).unwrap());
    let ncs = g.cs.len();
    let x = |p: usize| g.point(p / ncs, p % ncs);
    let profile = (0..g.level_len())
        .map(|p| {
            let x = x(p);
            Complex64::new((3.0 * x[1]).cos() * (1.0 - 16.0 * x[2] * x[2]), (2.0 * PI * x[0]).sin())
        })
        .collect();
    let f = SeparableSource {
        profile,
        time: Box::new(|t| Complex64::new(t, 0.0)),
        time_dt: Box::new(|_| Complex64::new(1.0, 0.0)),
    };
    let w = solve_source(a, 0.0, g.clone(), &f, Orientation::Forward).unwrap();
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
    let u1 = solve_dirichlet(a, 0.0, g.clone(), &lift, Orientation::Backward).unwrap();
    let (v, b) = green_identity(a, &w, &f, &u1);
    (v - b).norm() / v.norm()
}

#[test]
fn volume_and_boundary_pairings_agree_at_second_order() {
    let swirl = MagneticPotential::Swirl {
        strength: 2.0,
        cutoff: Cutoff { center: [0.0, 0.0], plateau: 0.05, radius: 0.2 },
        modulation: 0.3,
        axial: 0.5,
    };
    for a in [MagneticPotential::Zero, swirl] {
        let coarse = mismatch(&a, 1.0 / 32.0);
        let fine = mismatch(&a, 1.0 / 64.0);
        let order = (coarse / fine).log2();
        assert!(fine <= 0.01, "mismatch {fine}");
        assert!(order >= 1.5, "order {order} ({coarse} -> {fine})");
    }
}
