use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::checks::*;
use super::config::{ExperimentConfig, RecoverPath};
use super::manifest::RunManifest;
use crate::dn::BatteryEntry;
use crate::domain::{CrossSection, WaveguideGrid};
use crate::error::{Error, Result};
use crate::fields::PotentialPair;
use crate::probes::{go_remainder, lemma54_phi, n_omega_norm, ProbeSpec, Side};
use crate::xray::{
    fitted_slope, log_slope, oracle_samples, pde_samples, reconstruct_beta23, stability_row, write_field,
    write_samples_csv, StabilitySetup, STABILITY_CSV_HEADER,
};

pub const VERIFY_CSV_HEADER: &str = "name,measured,tolerance,pass";
pub const GO_DECAY_CSV_HEADER: &str = "sigma,psi_l2,grad_psi_l2,n_norm,slope";
pub const RECOVER_CSV_HEADER: &str = "path,gamma,retained,parseval_norm,recon_norm,true_norm,rel_error";

/// Result of one command: overall verdict and the manifest written next to the outputs.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub measured: f64,
    pub tolerance: f64,
}

impl CheckRow {
    pub fn pass(&self) -> bool {
        self.measured <= self.tolerance
    }
}

/// Seventeen significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Creates the output directory, runs `body` on a pool of `cfg.workers` threads and writes the manifest.
fn run<F>(cfg: &ExperimentConfig, command: &str, body: F) -> Result<Outcome>
where
    F: FnOnce(&Path) -> Result<(bool, Vec<String>)> + Send,
{
    let dir = cfg.out_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut manifest = RunManifest::new(command, cfg.to_text());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("run.workers: {e}")))?;
    let (pass, files) = pool.install(|| body(&dir))?;
    for name in &files {
        manifest.record(&dir, name)?;
    }
    manifest.write(&dir)?;
    log::info!("{command}: wrote {} files to {}", files.len(), dir.display());
    Ok(Outcome { pass, dir, manifest })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn template(cfg: &ExperimentConfig, grid: &WaveguideGrid, sigma: f64) -> ProbeSpec {
    ProbeSpec {
        omega: [1.0, 0.0],
        sigma,
        theta: cfg.theta,
        xi: [0.0, 0.0],
        k: 0,
        j: 3,
        z0: 0.0,
        r_enc: grid.cs.r_enc(),
        t_final: cfg.t_final,
    }
}

/// The identity suites, in report order.
pub fn verify_rows(cfg: &ExperimentConfig) -> Result<Vec<CheckRow>> {
    let a = cfg.a2(cfg.eps);
    let grid = Arc::new(cfg.grid()?);
    let seed = cfg.seed;
    let row = |name, measured, key: &str| CheckRow { name, measured, tolerance: cfg.tolerance(key) };
    let gauge_grid = Arc::new(WaveguideGrid::new(
        CrossSection::new(cfg.shape, cfg.gauge_h)?,
        ((0.25 / cfg.gauge_h).round() as usize).max(2),
        ((3.0 / cfg.gauge_h).round() as usize).max(8),
        0.2,
    )?);
    let diff = PotentialPair::new(cfg.a1.clone(), a.clone()).extend_by_zero(cfg.shape);
    Ok(vec![
        row("fbg_parseval", fbg_parseval(seed, 10, 64, 16)?, "parseval"),
        row("cn_unitarity", cn_unitarity(&a, cfg.theta, grid, seed)?, "unitarity"),
        row("gauge_invariance", gauge_mismatch(&a, &cfg.gauge, cfg.theta, gauge_grid)?, "gauge"),
        row("transport", transport_residual(&a, seed, cfg.draws)?, "transport"),
        row("telescoping", telescoping_residual(&a, cfg.sigmas[0], cfg.t_final, seed, cfg.draws)?, "telescoping"),
        row("fourier_slice", fourier_slice_residual(&diff, seed, cfg.draws.div_ceil(2))?, "slice"),
        row("green_identity", green_mismatch(&a, cfg.shape, cfg.green_h)?, "green"),
    ])
}

/// Runs the identity suites and writes `verify.csv`; fails when any row exceeds its tolerance.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<Outcome> {
    run(cfg, "verify", |dir| {
        let rows = verify_rows(cfg)?;
        let mut out = create(dir, "verify.csv")?;
        writeln!(out, "{VERIFY_CSV_HEADER}")?;
        for r in &rows {
            writeln!(out, "{},{},{},{}", r.name, fmt(r.measured), fmt(r.tolerance), r.pass())?;
            if !r.pass() {
                log::warn!("check {} failed: {} > {}", r.name, r.measured, r.tolerance);
            }
        }
        out.flush()?;
        Ok((rows.iter().all(CheckRow::pass), vec!["verify.csv".into()]))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoDecayRow {
    pub sigma: f64,
    pub psi_l2: f64,
    pub grad_psi_l2: f64,
    pub n_norm: f64,
}

/// Remainder norms of the forward GO solution for `A1` over the configured sigma list.
pub fn go_decay_rows(cfg: &ExperimentConfig) -> Result<(Vec<GoDecayRow>, Option<f64>)> {
    let grid = Arc::new(cfg.grid()?);
    let field = Arc::new(cfg.a1.clone());
    let rows = cfg
        .sigmas
        .iter()
        .map(|&sigma| {
            let c = lemma54_phi(template(cfg, &grid, sigma), field.clone())?;
            let rem = go_remainder(&c, Side::Forward, &cfg.a1, grid.clone())?;
            Ok(GoDecayRow { sigma, psi_l2: rem.l2, grad_psi_l2: rem.grad_l2, n_norm: n_omega_norm(&c, false)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.psi_l2 > 0.0).map(|r| (r.sigma.ln(), r.psi_l2.ln())).collect();
    Ok((rows, log_slope(&pts)))
}

pub fn cmd_go_decay(cfg: &ExperimentConfig) -> Result<Outcome> {
    run(cfg, "go-decay", |dir| {
        let (rows, slope) = go_decay_rows(cfg)?;
        let mut out = create(dir, "go_decay.csv")?;
        writeln!(out, "{GO_DECAY_CSV_HEADER}")?;
        for r in &rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt(r.sigma),
                fmt(r.psi_l2),
                fmt(r.grad_psi_l2),
                fmt(r.n_norm),
                fmt_opt(slope)
            )?;
        }
        out.flush()?;
        Ok((true, vec!["go_decay.csv".into()]))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverSummary {
    pub path: RecoverPath,
    pub gamma: f64,
    pub retained: usize,
    pub parseval_norm: f64,
    pub recon_norm: f64,
    pub true_norm: f64,
    pub rel_error: f64,
}

/// Samples, reconstructs and compares `beta23` of `A2 - A1`; writes samples, field and summary.
pub fn cmd_recover(cfg: &ExperimentConfig) -> Result<Outcome> {
    run(cfg, "recover", |dir| {
        let grid = Arc::new(cfg.grid()?);
        let pair = PotentialPair::new(cfg.a1.clone(), cfg.a2(cfg.eps));
        let diff = pair.extend_by_zero(cfg.shape);
        let sigma = *cfg.sigmas.last().expect("validated non-empty");
        let tpl = template(cfg, &grid, sigma);
        let samples = match cfg.recover_path {
            RecoverPath::Oracle => oracle_samples(&diff, &tpl, cfg.m_max, cfg.k_max, cfg.probe_n1, cfg.dp)?,
            RecoverPath::Pde => pde_samples(&pair, grid.clone(), &tpl, cfg.m_max, cfg.k_max)?,
        };
        let mut out = create(dir, "samples.csv")?;
        write_samples_csv(&mut out, &samples)?;
        out.flush()?;
        let rec = reconstruct_beta23(&samples, cfg.gamma, cfg.recon_grid())?;
        write_field(&dir.join("beta23"), &rec)?;
        let (err, true_norm) = rec.l2_error(|x| diff.beta23(x));
        let s = RecoverSummary {
            path: cfg.recover_path,
            gamma: cfg.gamma,
            retained: rec.retained,
            parseval_norm: rec.parseval_norm,
            recon_norm: rec.l2_norm(),
            true_norm,
            rel_error: if true_norm > 0.0 { err / true_norm } else { err },
        };
        let mut out = create(dir, "recover.csv")?;
        writeln!(out, "{RECOVER_CSV_HEADER}")?;
        let path = match s.path {
            RecoverPath::Oracle => "oracle",
            RecoverPath::Pde => "pde",
        };
        writeln!(
            out,
            "{path},{},{},{},{},{},{}",
            fmt(s.gamma),
            s.retained,
            fmt(s.parseval_norm),
            fmt(s.recon_norm),
            fmt(s.true_norm),
            fmt(s.rel_error)
        )?;
        out.flush()?;
        Ok((true, ["samples.csv", "beta23.bin", "beta23.txt", "recover.csv"].map(String::from).to_vec()))
    })
}

/// Reads the single summary row back from `recover.csv`.
pub fn read_recover_summary(dir: &Path) -> Result<RecoverSummary> {
    let text = fs::read_to_string(dir.join("recover.csv"))?;
    let line = text.lines().nth(1).ok_or_else(|| Error::Io("recover.csv has no data row".into()))?;
    let f: Vec<&str> = line.split(',').collect();
    let num = |i: usize| {
        f.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| Error::Io(format!("recover.csv column {i}")))
    };
    Ok(RecoverSummary {
        path: if f[0] == "pde" { RecoverPath::Pde } else { RecoverPath::Oracle },
        gamma: num(1)?,
        retained: num(2)? as usize,
        parseval_norm: num(3)?,
        recon_norm: num(4)?,
        true_norm: num(5)?,
        rel_error: num(6)?,
    })
}

/// Perturbation-family table: estimate, cutoffs and reconstruction error per member.
pub fn cmd_stability(cfg: &ExperimentConfig) -> Result<Outcome> {
    run(cfg, "stability", |dir| {
        let grid = Arc::new(cfg.grid()?);
        let lifts: Vec<_> = (0..cfg.battery).map(|i| ramp_lift(&grid, cfg.theta, 1.0 + 2.0 * i as f64)).collect();
        let norms: Vec<f64> = lifts.iter().map(|l| crate::dn::xtheta_norm_surrogate(l, &grid, cfg.theta)).collect();
        let battery: Vec<BatteryEntry> =
            lifts.iter().zip(&norms).map(|(lift, &norm)| BatteryEntry { lift, norm }).collect();
        let setup = StabilitySetup {
            a1: cfg.a1.clone(),
            shape: cfg.shape,
            theta: cfg.theta,
            grid: grid.clone(),
            battery: &battery,
            template: template(cfg, &grid, cfg.sigmas[0]),
            gamma_cap: cfg.gamma_cap,
            sigma_cap: cfg.sigma_cap,
            m_max: cfg.m_max,
            k_max: cfg.k_max,
            n1: cfg.probe_n1,
            dp: cfg.dp,
            recon: cfg.recon_grid(),
        };
        let rows =
            cfg.family.iter().map(|&eps| stability_row(&setup, eps, &cfg.a2(eps), None)).collect::<Result<Vec<_>>>()?;
        let slope = fitted_slope(&rows);
        let mut out = create(dir, "stability.csv")?;
        writeln!(out, "{STABILITY_CSV_HEADER}")?;
        for r in &rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                fmt(r.eps),
                fmt(r.delta),
                fmt(r.gamma),
                r.gamma_capped,
                fmt(r.sigma),
                r.sigma_capped,
                r.retained,
                fmt(r.true_norm),
                fmt(r.recon_norm),
                fmt(r.error),
                fmt_opt(slope)
            )?;
        }
        out.flush()?;
        Ok((true, vec!["stability.csv".into()]))
    })
}
