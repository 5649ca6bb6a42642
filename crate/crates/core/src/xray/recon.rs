use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use super::FourierSampleGrid;
use crate::error::{Error, Result};

/// `<(xi, k)> = (1 + k^2 + |xi|^2)^{1/2}`.
pub fn japanese(xi: [f64; 2], k: i64) -> f64 {
    (1.0 + (k * k) as f64 + xi[0] * xi[0] + xi[1] * xi[1]).sqrt()
}

/// Uniform node grid `x1 = i/n1`, `x2, x3` cell-centred in `[-half, half]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconGrid {
    pub n: [usize; 3],
    pub half: [f64; 2],
}

impl ReconGrid {
    pub fn spacing(&self) -> [f64; 3] {
        [1.0 / self.n[0] as f64, 2.0 * self.half[0] / self.n[1] as f64, 2.0 * self.half[1] / self.n[2] as f64]
    }

    pub fn axis(&self, d: usize) -> Vec<f64> {
        let h = self.spacing()[d];
        (0..self.n[d]).map(|i| if d == 0 { i as f64 * h } else { -self.half[d - 1] + (i as f64 + 0.5) * h }).collect()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub grid: ReconGrid,
    pub gamma: f64,
    pub retained: usize,
    /// `(sum over retained samples |b^|^2 dxi^2)^{1/2}`.
    pub parseval_norm: f64,
    /// Row-major `(x1, x2, x3)` values.
    pub values: Vec<f64>,
}

impl Reconstruction {
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// `(||truth - self||, ||truth||)` on the node grid.
    pub fn l2_error<F: Fn([f64; 3]) -> f64 + Sync>(&self, truth: F) -> (f64, f64) {
        let [a1, a2, a3] = [0, 1, 2].map(|d| self.grid.axis(d));
        let (n2, n3) = (a2.len(), a3.len());
        let (e, t) = (0..self.values.len())
            .map(|idx| {
                let x = [a1[idx / (n2 * n3)], a2[(idx / n3) % n2], a3[idx % n3]];
                let b = truth(x);
                ((b - self.values[idx]).powi(2), b * b)
            })
            .fold((0.0, 0.0), |(e, t), (de, dt)| (e + de, t + dt));
        let v = self.grid.cell_volume();
        ((e * v).sqrt(), (t * v).sqrt())
    }
}

/// Synthesizes `beta23 = sum_k e^{2 i k pi x1} (2 pi)^{-1} int e^{i x'.xi} b^ dxi` from the
/// samples with `<(xi, k)> <= gamma`, by lattice sums.
pub fn reconstruct_beta23(samples: &FourierSampleGrid, gamma: f64, grid: ReconGrid) -> Result<Reconstruction> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::Config(format!("cutoff gamma = {gamma} must be positive")));
    }
    let d = samples.spacing();
    let kept: Vec<_> = samples.samples.iter().filter(|s| japanese(s.xi, s.m) <= gamma).collect();
    let parseval_norm = (kept.iter().map(|s| s.value.norm_sqr()).sum::<f64>() * d * d).sqrt();
    if kept.is_empty() {
        log::warn!("no lattice sample inside the cutoff gamma = {gamma}; returning the zero field");
        return Ok(Reconstruction { grid, gamma, retained: 0, parseval_norm, values: vec![0.0; grid.len()] });
    }
    let [a1, a2, a3] = [0, 1, 2].map(|d| grid.axis(d));
    let scale = d * d / (2.0 * PI);
    let phases = |axis: &[f64], f: &dyn Fn(&super::FourierSample) -> f64| -> Vec<Vec<Complex64>> {
        kept.iter().map(|s| axis.iter().map(|&x| Complex64::from_polar(1.0, f(s) * x)).collect()).collect()
    };
    let p1 = phases(&a1, &|s| 2.0 * PI * s.m as f64);
    let p2 = phases(&a2, &|s| s.xi[0]);
    let p3 = phases(&a3, &|s| s.xi[1]);
    let (n2, n3) = (a2.len(), a3.len());
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let (i1, i2, i3) = (idx / (n2 * n3), (idx / n3) % n2, idx % n3);
            let mut acc = Complex64::new(0.0, 0.0);
            for (q, s) in kept.iter().enumerate() {
                acc += s.value * p1[q][i1] * p2[q][i2] * p3[q][i3];
            }
            acc.re * scale
        })
        .collect();
    Ok(Reconstruction { grid, gamma, retained: kept.len(), parseval_norm, values })
}

/// Writes `<stem>.bin` (little-endian `f64`, row-major `x1, x2, x3`) and the text header `<stem>.txt`.
pub fn write_field(stem: &Path, rec: &Reconstruction) -> std::io::Result<()> {
    let mut bin = BufWriter::new(File::create(stem.with_extension("bin"))?);
    for v in &rec.values {
        bin.write_all(&v.to_le_bytes())?;
    }
    bin.flush()?;
    let h = rec.grid.spacing();
    let mut txt = File::create(stem.with_extension("txt"))?;
    writeln!(txt, "dims = {} {} {}", rec.grid.n[0], rec.grid.n[1], rec.grid.n[2])?;
    writeln!(txt, "spacing = {:.16e} {:.16e} {:.16e}", h[0], h[1], h[2])?;
    writeln!(
        txt,
        "domain = [0, 1) x [{:.16e}, {:.16e}] x [{:.16e}, {:.16e}]",
        -rec.grid.half[0], rec.grid.half[0], -rec.grid.half[1], rec.grid.half[1]
    )?;
    writeln!(txt, "layout = f64 little-endian, x3 fastest")?;
    writeln!(txt, "gamma = {:.16e}", rec.gamma)?;
    writeln!(txt, "retained = {}", rec.retained)?;
    writeln!(txt, "parseval_norm = {:.16e}", rec.parseval_norm)?;
    Ok(())
}
