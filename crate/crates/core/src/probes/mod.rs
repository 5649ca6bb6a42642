//! Geometric-optics probes: a beam entering the waveguide from outside the
//! cross-section, moving along `omega'` at speed `2 sigma`.

mod amplitude;
mod go;
mod phi;

use crate::error::{Error, Result};
use crate::fields::bump;
use crate::pde::Orientation;
use crate::quad::CompositeRule;

pub use amplitude::{build_amplitude, chord, full_ray_integral, line_integral, Amplitude, TransverseField, RAY_TOL};
pub use go::{check_resolution, go_boundary_data, go_remainder, GoData, Remainder};
pub use phi::{h2_parts, lemma54_phi, n_omega_norm, GOComponents, H2Parts};

/// Spacing of the window lattice on `omega'^perp`.
pub const WINDOW_SPACING: f64 = 0.125;
/// Half-width of a single window.
pub const WINDOW_HALF_WIDTH: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSpec {
    pub omega: [f64; 2],
    pub sigma: f64,
    pub theta: f64,
    /// Dual frequency, orthogonal to `omega`.
    pub xi: [f64; 2],
    pub k: i64,
    /// Transverse derivative index, 2 or 3.
    pub j: usize,
    /// Window center as a coordinate along `perp()`.
    pub z0: f64,
    pub r_enc: f64,
    pub t_final: f64,
}

/// Which GO solution a boundary datum belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `u_1`, vanishing remainder at `t = T`.
    Backward,
    /// `u_2`, vanishing remainder at `t = 0`.
    Forward,
}

impl Side {
    pub fn orientation(self) -> Orientation {
        match self {
            Side::Backward => Orientation::Backward,
            Side::Forward => Orientation::Forward,
        }
    }
}

impl ProbeSpec {
    /// `omega` rotated by a quarter turn.
    pub fn perp(&self) -> [f64; 2] {
        [-self.omega[1], self.omega[0]]
    }

    pub fn sigma0(&self) -> f64 {
        2.0 * (self.r_enc + 1.0) / self.t_final
    }

    pub fn z0_point(&self) -> [f64; 2] {
        let e = self.perp();
        [self.z0 * e[0], self.z0 * e[1]]
    }

    pub fn r_z0(&self) -> f64 {
        ((self.r_enc + 0.75).powi(2) - self.z0 * self.z0).sqrt()
    }

    /// `z1 = z0 - r omega`, the center of the launch region.
    pub fn z1(&self) -> [f64; 2] {
        let (z, r) = (self.z0_point(), self.r_z0());
        [z[0] - r * self.omega[0], z[1] - r * self.omega[1]]
    }

    /// `xi . perp`.
    pub fn eta(&self) -> f64 {
        let e = self.perp();
        self.xi[0] * e[0] + self.xi[1] * e[1]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Probe(m));
        let w = self.omega;
        if ((w[0] * w[0] + w[1] * w[1]).sqrt() - 1.0).abs() > 1e-12 {
            return bad(format!("direction {w:?} is not a unit vector"));
        }
        if !(self.t_final > 0.0 && self.r_enc > 0.0) {
            return bad("final time and enclosing radius must be positive".into());
        }
        if self.sigma <= self.sigma0() {
            return bad(format!("sigma = {} must exceed 2(R+1)/T = {}", self.sigma, self.sigma0()));
        }
        let dot = self.xi[0] * w[0] + self.xi[1] * w[1];
        if dot.abs() > 1e-14 {
            return bad(format!("xi . omega = {dot:e} is not zero"));
        }
        if self.j != 2 && self.j != 3 {
            return bad(format!("derivative index {} is not 2 or 3", self.j));
        }
        if self.z0.abs() >= self.r_enc + 0.5 {
            return bad(format!("window center {} lies outside B(0, R + 1/2)", self.z0));
        }
        let z1 = self.z1();
        let n = (z1[0] * z1[0] + z1[1] * z1[1]).sqrt();
        let reach = z1[0] * w[0] + z1[1] * w[1] + 0.25;
        if n - 0.25 < self.r_enc || n + 0.25 > self.r_enc + 1.0 + 1e-12 || reach > 0.0 {
            return bad(format!("B(z1, 1/4) with z1 = {z1:?} is not inside the incoming half-annulus"));
        }
        Ok(())
    }
}

/// Window centers on `omega'^perp` covering `[-R, R]`.
pub fn window_centers(r_enc: f64) -> Vec<f64> {
    let m = ((r_enc + WINDOW_HALF_WIDTH) / WINDOW_SPACING).ceil() as i64;
    (-m..=m).map(|i| i as f64 * WINDOW_SPACING).collect()
}

fn window_sum(s: f64) -> (f64, f64) {
    let scale = 1.0 / WINDOW_HALF_WIDTH;
    let m0 = (s / WINDOW_SPACING).round() as i64;
    let reach = (WINDOW_HALF_WIDTH / WINDOW_SPACING).ceil() as i64 + 1;
    let (mut v, mut d) = (0.0, 0.0);
    for m in m0 - reach..=m0 + reach {
        let (c, c1, _) = bump(scale * (s - m as f64 * WINDOW_SPACING));
        v += c;
        d += scale * c1;
    }
    (v, d)
}

/// Partition-of-unity window centered at `c`.
pub fn window(s: f64, c: f64) -> f64 {
    bump((s - c) / WINDOW_HALF_WIDTH).0 / window_sum(s).0
}

/// Square root of [`window`] and its derivative.
pub fn sqrt_window(s: f64, c: f64) -> (f64, f64) {
    let u = (s - c) / WINDOW_HALF_WIDTH;
    if u.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - u * u;
    let root = (0.5 * (1.0 - 1.0 / q)).exp();
    let droot = -root * u / (q * q) / WINDOW_HALF_WIDTH;
    let (sv, sd) = window_sum(s);
    let ss = sv.sqrt();
    (root / ss, droot / ss - 0.5 * root * sd / (sv * ss))
}

/// Largest deviation of the window sum from 1 on `[-R, R]`.
pub fn partition_defect(r_enc: f64, samples: usize) -> f64 {
    let centers = window_centers(r_enc);
    (0..=samples)
        .map(|i| {
            let s = -r_enc + 2.0 * r_enc * i as f64 / samples as f64;
            (centers.iter().map(|&c| window(s, c)).sum::<f64>() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// The bump `h` supported in `(0, 1/8)` with `int h^2 = 1`.
#[derive(Debug, Clone, Copy)]
pub struct ProfileH {
    scale: f64,
}

pub const PROFILE_SUPPORT: f64 = 0.125;

impl Default for ProfileH {
    fn default() -> Self {
        let rule = CompositeRule::new(-1.0, 1.0, 64, 12);
        let chi_sq = rule.integrate(|u| bump(u).0.powi(2));
        ProfileH { scale: (2.0 / (PROFILE_SUPPORT * chi_sq)).sqrt() }
    }
}

impl ProfileH {
    /// `(h, h', h'')` at `t`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let a = 2.0 / PROFILE_SUPPORT;
        let (c, c1, c2) = bump(a * t - 1.0);
        (self.scale * c, self.scale * a * c1, self.scale * a * a * c2)
    }
}
