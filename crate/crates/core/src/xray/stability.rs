use std::path::Path;
use std::sync::Arc;

use super::recon::{reconstruct_beta23, ReconGrid};
use super::{oracle_samples, write_field};
use crate::dn::{dn_norm_estimate, BatteryEntry};
use crate::domain::{Shape, WaveguideGrid};
use crate::error::Result;
use crate::fields::{MagneticPotential, PotentialPair};
use crate::probes::ProbeSpec;

/// Everything fixed across the perturbation family.
pub struct StabilitySetup<'a> {
    pub a1: MagneticPotential,
    pub shape: Shape,
    pub theta: f64,
    pub grid: Arc<WaveguideGrid>,
    pub battery: &'a [BatteryEntry<'a>],
    /// `theta`, `r_enc` and `t_final` of every probe.
    pub template: ProbeSpec,
    pub gamma_cap: f64,
    pub sigma_cap: f64,
    pub m_max: i64,
    pub k_max: i64,
    pub n1: usize,
    pub dp: f64,
    pub recon: ReconGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub eps: f64,
    pub delta: f64,
    pub gamma: f64,
    pub gamma_capped: bool,
    pub sigma: f64,
    pub sigma_capped: bool,
    pub retained: usize,
    pub true_norm: f64,
    pub recon_norm: f64,
    pub error: f64,
}

pub const STABILITY_CSV_HEADER: &str =
    "eps,delta,gamma,gamma_capped,sigma,sigma_capped,retained,true_norm,recon_norm,error,slope";

/// Runs estimate, extraction and reconstruction for each member `A2 = family(eps)`.
pub fn stability_experiment(
    setup: &StabilitySetup<'_>,
    family: &[(f64, MagneticPotential)],
) -> Result<Vec<StabilityRow>> {
    family.iter().map(|(eps, a2)| stability_row(setup, *eps, a2, None)).collect()
}

/// One row; when `dump` is given, the reconstructed field is written there.
pub fn stability_row(
    setup: &StabilitySetup<'_>,
    eps: f64,
    a2: &MagneticPotential,
    dump: Option<&Path>,
) -> Result<StabilityRow> {
    let pair = PotentialPair::new(setup.a1.clone(), a2.clone());
    let (delta, _) = dn_norm_estimate(&pair, setup.theta, setup.grid.clone(), setup.battery)?;
    let rule = if delta > 0.0 { delta.powf(-2.0 / 45.0) } else { f64::INFINITY };
    let gamma_capped = rule > setup.gamma_cap;
    let gamma = rule.min(setup.gamma_cap);
    if gamma_capped {
        log::info!("eps = {eps}: gamma capped at {gamma}");
    }
    let floor = setup.template.sigma0() * (1.0 + 1e-9);
    let sigma_rule = gamma.powf(7.5).max(floor);
    let sigma_capped = sigma_rule > setup.sigma_cap;
    let sigma = sigma_rule.min(setup.sigma_cap).max(floor);
    if sigma_capped {
        log::info!("eps = {eps}: sigma capped at {sigma}");
    }
    let diff = pair.extend_by_zero(setup.shape);
    let spacing = std::f64::consts::PI / diff.potential().support_radius();
    let m_lim = ((gamma / spacing).floor() as i64).min(setup.m_max);
    let k_lim = (((gamma * gamma - 1.0).max(0.0)).sqrt().floor() as i64).min(setup.k_max);
    let template = ProbeSpec { sigma, theta: setup.theta, ..setup.template };
    let samples = oracle_samples(&diff, &template, m_lim, k_lim, setup.n1, setup.dp)?;
    let rec = reconstruct_beta23(&samples, gamma, setup.recon)?;
    if let Some(stem) = dump {
        write_field(stem, &rec)?;
    }
    let (error, true_norm) = rec.l2_error(|x| diff.beta23(x));
    Ok(StabilityRow {
        eps,
        delta,
        gamma,
        gamma_capped,
        sigma,
        sigma_capped,
        retained: rec.retained,
        true_norm,
        recon_norm: rec.l2_norm(),
        error,
    })
}

/// Least-squares slope of `log error` against `log delta` over rows where both are positive.
pub fn fitted_slope(rows: &[StabilityRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.delta > 0.0 && r.error > 0.0).map(|r| (r.delta.ln(), r.error.ln())).collect();
    log_slope(&pts)
}

/// Least-squares slope through `(x, y)` points; `None` with fewer than two distinct `x`.
pub fn log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CrossSection;
    use crate::fields::Cutoff;
    use crate::pde::{FiberField, Orientation};

    fn setup_parts() -> (Arc<WaveguideGrid>, FiberField) {
        let cs = CrossSection::rectangle(0.25, 0.25, 1.0 / 8.0).unwrap();
        let g = Arc::new(WaveguideGrid::new(cs, 3, 8, 0.6).unwrap());
        let ncs = g.cs.len();
        let levels = (0..=g.n_t)
            .map(|n| {
                let t = g.time(n);
                (0..g.level_len())
                    .map(|p| {
                        let x = g.point(p / ncs, p % ncs);
                        num_complex::Complex64::new(t * t * (1.0 + x[1] + x[2]), 0.0)
                    })
                    .collect()
            })
            .collect();
        let lift = FiberField::from_levels(g.clone(), 0.0, Orientation::Forward, levels);
        (g, lift)
    }

    #[test]
    fn unperturbed_member_has_zero_columns() {
        let (g, lift) = setup_parts();
        let battery = [BatteryEntry { lift: &lift, norm: 1.0 }];
        let a1 = MagneticPotential::Swirl {
            strength: 1.0,
            cutoff: Cutoff { center: [0.0, 0.0], plateau: 0.05, radius: 0.2 },
            modulation: 0.3,
            axial: 0.0,
        };
        let setup = StabilitySetup {
            a1: a1.clone(),
            shape: g.cs.shape(),
            theta: 0.0,
            grid: g.clone(),
            battery: &battery,
            template: ProbeSpec {
                omega: [1.0, 0.0],
                sigma: 6.0,
                theta: 0.0,
                xi: [0.0, 0.0],
                k: 0,
                j: 3,
                z0: 0.0,
                r_enc: g.cs.r_enc(),
                t_final: 0.6,
            },
            gamma_cap: 30.0,
            sigma_cap: 8.0,
            m_max: 2,
            k_max: 1,
            n1: 4,
            dp: 1.0 / 64.0,
            recon: ReconGrid { n: [4, 8, 8], half: [0.25, 0.25] },
        };
        let row = stability_row(&setup, 0.0, &a1, None).unwrap();
        assert_eq!((row.delta, row.error, row.true_norm, row.recon_norm), (0.0, 0.0, 0.0, 0.0));
        assert!(row.gamma_capped && row.sigma_capped);
        assert_eq!((row.gamma, row.sigma), (30.0, 8.0));
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (1..5).map(|i| (i as f64, 0.5 * i as f64 + 2.0)).collect();
        assert!((log_slope(&pts).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(log_slope(&pts[..1]), None);
    }
}
