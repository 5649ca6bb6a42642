use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use super::rho_j;
use std::sync::Arc;

use crate::dn::{dn_pair, PairingPath, PairingRecord};
use crate::domain::WaveguideGrid;
use crate::error::{Error, Result};
use crate::fields::{ExtendedDifference, PotentialPair};
use crate::probes::{
    lemma54_phi, partition_defect, window, window_centers, ProbeSpec, TransverseField, WINDOW_HALF_WIDTH,
};
use crate::quad::CompositeRule;

/// Divisor of the slice relation: `rho_j^ = d_j beta23^` with `d_2 = -omega_3`, `d_3 = omega_2`.
pub fn divisor(omega: [f64; 2], j: usize) -> f64 {
    if j == 2 {
        -omega[1]
    } else {
        omega[0]
    }
}

/// The index `j` with the larger divisor.
pub fn pick_j(omega: [f64; 2]) -> Result<usize> {
    let j = if omega[1].abs() >= omega[0].abs() { 2 } else { 3 };
    if divisor(omega, j).abs() < FRAC_1_SQRT_2 - 1e-12 {
        return Err(Error::Index(format!("no divisor of magnitude >= 1/sqrt(2) for omega = {omega:?}")));
    }
    Ok(j)
}

/// Probe direction for a frequency: `omega = (xi3, -xi2)/|xi|`, so that `perp(omega) = xi/|xi|`.
pub fn probe_direction(xi: [f64; 2]) -> [f64; 2] {
    let n = xi[0].hypot(xi[1]);
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        [xi[1] / n, -xi[0] / n]
    }
}

/// Probe index `k` that samples the Fourier mode `m` at quasi-momentum `theta`.
pub fn probe_k(m: i64, theta: f64) -> i64 {
    m + (theta / PI).round() as i64
}

/// Cartesian lattice `(pi/r_supp) (m2, m3)`, `|m2|, |m3| <= m_max`, in row-major order.
pub fn lattice(r_supp: f64, m_max: i64) -> Vec<[f64; 2]> {
    let d = PI / r_supp;
    let mut out = Vec::new();
    for m2 in -m_max..=m_max {
        for m3 in -m_max..=m_max {
            out.push([m2 as f64 * d, m3 as f64 * d]);
        }
    }
    out
}

/// Sums the pairings of a complete window sweep and divides out `-(pi/2) d_j`.
pub fn extract_beta_hat(records: &[PairingRecord], r_enc: f64) -> Result<Complex64> {
    let first = records.first().ok_or_else(|| Error::Probe("empty window sweep".into()))?;
    let same = |r: &PairingRecord| {
        r.omega == first.omega && r.xi == first.xi && r.k == first.k && r.j == first.j && r.theta == first.theta
    };
    if !records.iter().all(same) {
        return Err(Error::Probe("window sweep mixes probe families".into()));
    }
    let mut got: Vec<f64> = records.iter().map(|r| r.z0).collect();
    got.sort_by(f64::total_cmp);
    let want = window_centers(r_enc);
    if got.len() != want.len() || got.iter().zip(&want).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Probe(format!("window centers {got:?} do not form the sweep {want:?}")));
    }
    let defect = partition_defect(r_enc, 4000);
    if defect > 1e-10 {
        return Err(Error::Probe(format!("windows miss a partition of unity by {defect}")));
    }
    let d = divisor(first.omega, first.j);
    if d.abs() < FRAC_1_SQRT_2 - 1e-12 {
        return Err(Error::Index(format!("divisor {d} below 1/sqrt(2)")));
    }
    let total: Complex64 = records.iter().map(|r| r.value).sum();
    Ok(total / (-0.5 * PI * d))
}

/// `(P rho_j)(omega, x1, p perp)` on a uniform `(x1, p)` grid, shared by every window and `k`.
pub struct RayTable {
    pub omega: [f64; 2],
    pub j: usize,
    pub n1: usize,
    pub p: Vec<f64>,
    pub dp: f64,
    values: Vec<f64>,
}

impl RayTable {
    pub fn new(diff: &ExtendedDifference, omega: [f64; 2], j: usize, n1: usize, dp: f64) -> Result<RayTable> {
        let rho = rho_j(diff, omega, j)?;
        let r = diff.radius();
        let half = (r / dp).ceil() as usize;
        let p: Vec<f64> = (0..=2 * half).map(|l| (l as f64 - half as f64) * dp).collect();
        let e = [-omega[1], omega[0]];
        let mut values = Vec::with_capacity(n1 * p.len());
        for i in 0..n1 {
            let x1 = i as f64 / n1 as f64;
            for &pl in &p {
                values.push(rho.xray([x1, pl * e[0], pl * e[1]])?);
            }
        }
        Ok(RayTable { omega, j, n1, p, dp, values })
    }

    /// Windowed pairing in the reduced form for the probe `spec`.
    pub fn pairing(&self, spec: &ProbeSpec) -> Complex64 {
        let eta = spec.eta();
        let np = self.p.len();
        let weights: Vec<Complex64> = self
            .p
            .iter()
            .map(|&p| {
                if (p - spec.z0).abs() >= WINDOW_HALF_WIDTH {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(window(p, spec.z0) * self.dp, -eta * p)
                }
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.n1 {
            let x1 = i as f64 / self.n1 as f64;
            let row = &self.values[i * np..(i + 1) * np];
            let inner: Complex64 = row.iter().zip(&weights).map(|(v, w)| w * *v).sum();
            acc += inner * Complex64::from_polar(1.0, (2.0 * spec.theta - 2.0 * PI * spec.k as f64) * x1);
        }
        acc * (-0.25 / self.n1 as f64)
    }

    /// Oracle-path records for the whole window sweep.
    pub fn sweep(&self, template: &ProbeSpec) -> Result<Vec<PairingRecord>> {
        window_centers(template.r_enc)
            .into_iter()
            .map(|z0| {
                let spec = ProbeSpec { z0, omega: self.omega, j: self.j, ..*template };
                spec.validate()?;
                Ok(PairingRecord::new(&spec, self.pairing(&spec), PairingPath::Oracle))
            })
            .collect()
    }
}

/// `b^(xi, m) = (2 pi)^{-1} int_0^1 int e^{-2 i m pi x1} e^{-i x'.xi} beta23 dx` by tensor quadrature.
pub fn beta_hat_direct(diff: &ExtendedDifference, xi: [f64; 2], m: i64, n1: usize, panels: usize) -> Complex64 {
    let r = diff.radius();
    let rule = CompositeRule::new(-r, r, panels, 10);
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n1 {
        let x1 = i as f64 / n1 as f64;
        let mut s = Complex64::new(0.0, 0.0);
        for (&y2, &w2) in rule.nodes.iter().zip(&rule.weights) {
            for (&y3, &w3) in rule.nodes.iter().zip(&rule.weights) {
                let b = diff.beta23([x1, y2, y3]);
                if b != 0.0 {
                    s += Complex64::from_polar(b * w2 * w3, -(y2 * xi[0] + y3 * xi[1]));
                }
            }
        }
        acc += s * Complex64::from_polar(1.0, -2.0 * PI * m as f64 * x1);
    }
    acc / (2.0 * PI * n1 as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierSample {
    pub xi: [f64; 2],
    pub m: i64,
    pub value: Complex64,
    pub path: PairingPath,
    pub probe_id: String,
}

/// Samples `b^(xi, m)` on the lattice `(pi/r_supp) Z^2`, `|m| <= k_max`.
#[derive(Debug, Clone)]
pub struct FourierSampleGrid {
    pub r_supp: f64,
    pub m_max: i64,
    pub k_max: i64,
    pub samples: Vec<FourierSample>,
}

pub const SAMPLES_CSV_HEADER: &str = "xi2,xi3,k,re,im,path,probe_id";

impl FourierSampleGrid {
    pub fn spacing(&self) -> f64 {
        PI / self.r_supp
    }

    pub fn get(&self, xi: [f64; 2], m: i64) -> Option<&FourierSample> {
        let d = self.spacing();
        self.samples
            .iter()
            .find(|s| s.m == m && ((s.xi[0] - xi[0]) / d).abs() < 1e-6 && ((s.xi[1] - xi[1]) / d).abs() < 1e-6)
    }

    /// `max |b^(-xi, -m) - conj b^(xi, m)|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.samples
            .iter()
            .filter_map(|s| self.get([-s.xi[0], -s.xi[1]], -s.m).map(|t| (t.value - s.value.conj()).norm()))
            .fold(0.0, f64::max)
    }

    /// `sum |b^|^2 dxi^2`, equal to `||beta23||^2` on the cell up to lattice truncation.
    pub fn parseval_sum(&self) -> f64 {
        let d = self.spacing();
        self.samples.iter().map(|s| s.value.norm_sqr()).sum::<f64>() * d * d
    }
}

pub fn write_samples_csv<W: Write>(mut out: W, grid: &FourierSampleGrid) -> std::io::Result<()> {
    writeln!(out, "{SAMPLES_CSV_HEADER}")?;
    for s in &grid.samples {
        writeln!(
            out,
            "{:.16e},{:.16e},{},{:.16e},{:.16e},{},{}",
            s.xi[0],
            s.xi[1],
            s.m,
            s.value.re,
            s.value.im,
            s.path.as_str(),
            s.probe_id
        )?;
    }
    Ok(())
}

/// Oracle-path samples for the whole lattice.
///
/// `template` fixes `theta`, `sigma`, `r_enc` and `t_final`; direction, frequency,
/// `k`, `j` and the window come from the lattice point.
pub fn oracle_samples(
    diff: &ExtendedDifference,
    template: &ProbeSpec,
    m_max: i64,
    k_max: i64,
    n1: usize,
    dp: f64,
) -> Result<FourierSampleGrid> {
    let r_supp = diff.radius();
    let points = lattice(r_supp, m_max);
    let per_point = points
        .par_iter()
        .enumerate()
        .map(|(idx, &xi)| {
            let omega = probe_direction(xi);
            let j = pick_j(omega)?;
            let table = RayTable::new(diff, omega, j, n1, dp)?;
            (-k_max..=k_max)
                .map(|m| {
                    let spec = ProbeSpec { omega, xi, j, k: probe_k(m, template.theta), ..*template };
                    let records = table.sweep(&spec)?;
                    let value = extract_beta_hat(&records, template.r_enc)?;
                    Ok(FourierSample { xi, m, value, path: PairingPath::Oracle, probe_id: format!("p{idx}k{m}j{j}") })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FourierSampleGrid { r_supp, m_max, k_max, samples: per_point.into_iter().flatten().collect() })
}

/// Same lattice as [`oracle_samples`], with every window pairing taken from the DN maps on `grid`.
pub fn pde_samples(
    pair: &PotentialPair,
    grid: Arc<WaveguideGrid>,
    template: &ProbeSpec,
    m_max: i64,
    k_max: i64,
) -> Result<FourierSampleGrid> {
    let diff = Arc::new(pair.extend_by_zero(grid.cs.shape()));
    let r_supp = diff.radius();
    let points = lattice(r_supp, m_max);
    let per_point = points
        .par_iter()
        .enumerate()
        .map(|(idx, &xi)| {
            let omega = probe_direction(xi);
            let j = pick_j(omega)?;
            (-k_max..=k_max)
                .map(|m| {
                    let records = window_centers(template.r_enc)
                        .into_iter()
                        .map(|z0| {
                            let spec = ProbeSpec { omega, xi, j, z0, k: probe_k(m, template.theta), ..*template };
                            let c = lemma54_phi(spec, diff.clone())?;
                            dn_pair(pair, &c, grid.clone())
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let value = extract_beta_hat(&records, template.r_enc)?;
                    Ok(FourierSample { xi, m, value, path: PairingPath::Pde, probe_id: format!("p{idx}k{m}j{j}") })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FourierSampleGrid { r_supp, m_max, k_max, samples: per_point.into_iter().flatten().collect() })
}
