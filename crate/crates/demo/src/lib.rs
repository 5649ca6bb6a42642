//! Three page operations over a swirl-plus-drift difference `A2 - A1` with `A1 = 0`:
//! the aligned field `beta23` on a cross-section, its X-ray sinogram, and the
//! band-limited reconstruction from oracle Fourier samples.

use magwave::domain::Shape;
use magwave::fields::{Cutoff, ExtendedDifference, MagneticPotential, PotentialPair};
use magwave::probes::ProbeSpec;
use magwave::xray::{oracle_samples, reconstruct_beta23, xray_transform, ReconGrid};
use wasm_bindgen::prelude::*;

const HALF: f64 = 0.25;

fn difference(strength: f64, drift: f64) -> ExtendedDifference {
    let swirl = MagneticPotential::Swirl {
        strength,
        cutoff: Cutoff { center: [0.02, -0.01], plateau: 0.04, radius: 0.17 },
        modulation: 0.5,
        axial: 0.2,
    };
    let push = MagneticPotential::Drift {
        alpha: [drift, -0.5 * drift],
        cutoff: Cutoff { center: [-0.05, 0.03], plateau: 0.03, radius: 0.15 },
        modulation: 0.7,
    };
    PotentialPair::new(MagneticPotential::Zero, MagneticPotential::sum(swirl, push))
        .extend_by_zero(Shape::Rectangle { half_width_2: HALF, half_width_3: HALF })
}

fn cell_centres(n: usize) -> Vec<f64> {
    (0..n).map(|i| -HALF + (i as f64 + 0.5) * 2.0 * HALF / n as f64).collect()
}

/// `beta23(x1, x2, x3)` on an `n x n` cell-centred grid, `x3` fastest.
pub fn field_slice(strength: f64, drift: f64, x1: f64, n: usize) -> Vec<f64> {
    let diff = difference(strength, drift);
    let axis = cell_centres(n);
    axis.iter().flat_map(|&a| axis.iter().map(move |&b| (a, b))).map(|(a, b)| diff.beta23([x1, a, b])).collect()
}

/// `P beta23` at `angles` directions in `[0, pi)` (rows) and `n` offsets along the normal (columns).
pub fn sinogram(strength: f64, drift: f64, x1: f64, angles: usize, n: usize) -> Vec<f64> {
    let diff = difference(strength, drift);
    let rho = HALF * 2f64.sqrt();
    let offsets: Vec<f64> = (0..n).map(|i| -rho + (i as f64 + 0.5) * 2.0 * rho / n as f64).collect();
    (0..angles)
        .flat_map(|k| {
            let t = std::f64::consts::PI * k as f64 / angles as f64;
            let w = [t.cos(), t.sin()];
            let diff = &diff;
            offsets.iter().map(move |&p| {
                xray_transform(|x| diff.beta23(x), rho, w, [x1, -p * w[1], p * w[0]]).unwrap_or(f64::NAN)
            })
        })
        .collect()
}

/// Reconstruction at `x1 = 0` from lattice samples with `|m| <= m_max` and cutoff `gamma`;
/// the last entry is the relative `L^2` error over the full period cell.
pub fn reconstruct(strength: f64, drift: f64, gamma: f64, m_max: i64, n: usize) -> Result<Vec<f64>, String> {
    let diff = difference(strength, drift);
    let template = ProbeSpec {
        omega: [1.0, 0.0],
        sigma: 8.0,
        theta: 0.0,
        xi: [0.0, 0.0],
        k: 0,
        j: 3,
        z0: 0.0,
        r_enc: HALF * 2f64.sqrt(),
        t_final: 0.6,
    };
    let samples = oracle_samples(&diff, &template, m_max, 1, 4, 1.0 / 64.0).map_err(|e| e.to_string())?;
    let rec = reconstruct_beta23(&samples, gamma, ReconGrid { n: [4, n, n], half: [HALF, HALF] })
        .map_err(|e| e.to_string())?;
    let (err, truth) = rec.l2_error(|x| diff.beta23(x));
    let mut out = rec.values[..n * n].to_vec();
    out.push(if truth > 0.0 { err / truth } else { err });
    Ok(out)
}

#[wasm_bindgen(js_name = fieldSlice)]
pub fn field_slice_js(strength: f64, drift: f64, x1: f64, n: usize) -> Vec<f64> {
    field_slice(strength, drift, x1, n)
}

#[wasm_bindgen(js_name = sinogram)]
pub fn sinogram_js(strength: f64, drift: f64, x1: f64, angles: usize, n: usize) -> Vec<f64> {
    sinogram(strength, drift, x1, angles, n)
}

#[wasm_bindgen(js_name = reconstruct)]
pub fn reconstruct_js(strength: f64, drift: f64, gamma: f64, m_max: i32, n: usize) -> Result<Vec<f64>, JsError> {
    reconstruct(strength, drift, gamma, m_max as i64, n).map_err(|e| JsError::new(&e))
}
