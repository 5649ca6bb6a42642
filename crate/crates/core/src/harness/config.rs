use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::domain::{CrossSection, Shape, WaveguideGrid};
use crate::error::{Error, Result};
use crate::fields::{Cutoff, GaugeFunction, MagneticPotential};
use crate::xray::ReconGrid;

/// Every recognised key with its default value.
const DEFAULTS: &[(&str, &str)] = &[
    ("geometry.shape", "rectangle"),
    ("geometry.half_width_2", "0.25"),
    ("geometry.half_width_3", "0.25"),
    ("geometry.radius", "0.25"),
    ("geometry.h", "0.0625"),
    ("geometry.n1", "4"),
    ("geometry.n_t", "192"),
    ("time.t_final", "0.6"),
    ("potentials.a1.kind", "swirl"),
    ("potentials.a1.strength", "1.0"),
    ("potentials.a1.plateau", "0.05"),
    ("potentials.a1.radius", "0.2"),
    ("potentials.a1.center2", "0.0"),
    ("potentials.a1.center3", "0.0"),
    ("potentials.a1.modulation", "0.3"),
    ("potentials.a1.axial", "0.4"),
    ("potentials.a1.alpha2", "0.0"),
    ("potentials.a1.alpha3", "0.0"),
    ("potentials.b.kind", "swirl"),
    ("potentials.b.strength", "1.2"),
    ("potentials.b.plateau", "0.04"),
    ("potentials.b.radius", "0.17"),
    ("potentials.b.center2", "0.02"),
    ("potentials.b.center3", "-0.01"),
    ("potentials.b.modulation", "0.5"),
    ("potentials.b.axial", "0.2"),
    ("potentials.b.alpha2", "0.0"),
    ("potentials.b.alpha3", "0.0"),
    ("potentials.eps", "1.0"),
    ("potentials.family", "0.05, 0.1, 0.2"),
    ("potentials.gauge", "bump"),
    ("probes.theta", "0"),
    ("probes.sigma", "5, 6.5, 8"),
    ("probes.omega_count", "1"),
    ("probes.k_max", "1"),
    ("probes.m_max", "7"),
    ("probes.n1", "8"),
    ("probes.dp", "0.00390625"),
    ("recover.path", "oracle"),
    ("recover.gamma", "100"),
    ("recover.grid", "8, 48, 48"),
    ("stability.gamma_cap", "100"),
    ("stability.sigma_cap", "8"),
    ("stability.battery", "3"),
    ("verify.gauge_h", "0.03125"),
    ("verify.green_h", "0.015625"),
    ("verify.draws", "20"),
    ("tolerances.parseval", "1e-10"),
    ("tolerances.unitarity", "1e-11"),
    ("tolerances.gauge", "0.02"),
    ("tolerances.transport", "1e-6"),
    ("tolerances.telescoping", "1e-8"),
    ("tolerances.slice", "1e-8"),
    ("tolerances.green", "0.01"),
    ("output.dir", "out"),
    ("run.workers", "1"),
    ("run.seed", "7"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoverPath {
    Oracle,
    Pde,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    table: BTreeMap<String, String>,
    pub shape: Shape,
    pub h: f64,
    pub n1: usize,
    pub n_t: usize,
    pub t_final: f64,
    pub a1: MagneticPotential,
    pub b: MagneticPotential,
    pub eps: f64,
    pub family: Vec<f64>,
    pub gauge: GaugeFunction,
    pub theta: f64,
    pub sigmas: Vec<f64>,
    pub omega_count: usize,
    pub k_max: i64,
    pub m_max: i64,
    pub probe_n1: usize,
    pub dp: f64,
    pub recover_path: RecoverPath,
    pub gamma: f64,
    pub recon: [usize; 3],
    pub gamma_cap: f64,
    pub sigma_cap: f64,
    pub battery: usize,
    pub gauge_h: f64,
    pub green_h: f64,
    pub draws: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key}: {msg}"))
}

fn parse_table(text: &str) -> Result<BTreeMap<String, String>> {
    let mut table: BTreeMap<String, String> = DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
        let k = k.trim();
        if !table.contains_key(k) {
            return Err(Error::Config(format!("line {}: unknown key {k}", no + 1)));
        }
        table.insert(k.to_string(), v.trim().to_string());
    }
    Ok(table)
}

struct Reader<'a>(&'a BTreeMap<String, String>);

impl Reader<'_> {
    fn raw(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("")
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).parse().map_err(|e| bad(key, e))
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| bad(key, e)))
            .collect()
    }

    fn potential(&self, prefix: &str) -> Result<MagneticPotential> {
        let f = |name: &str| self.num::<f64>(&format!("{prefix}.{name}"));
        let cutoff = || -> Result<Cutoff> {
            Ok(Cutoff { center: [f("center2")?, f("center3")?], plateau: f("plateau")?, radius: f("radius")? })
        };
        let kind_key = format!("{prefix}.kind");
        match self.raw(&kind_key) {
            "zero" => Ok(MagneticPotential::Zero),
            "swirl" => Ok(MagneticPotential::Swirl {
                strength: f("strength")?,
                cutoff: cutoff()?,
                modulation: f("modulation")?,
                axial: f("axial")?,
            }),
            "drift" => Ok(MagneticPotential::Drift {
                alpha: [f("alpha2")?, f("alpha3")?],
                cutoff: cutoff()?,
                modulation: f("modulation")?,
            }),
            other => Err(bad(&kind_key, format!("unknown preset {other:?} (zero, swirl, drift)"))),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_table(parse_table(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Replaces one value and re-validates.
    pub fn with(&self, key: &str, value: &str) -> Result<Self> {
        let mut table = self.table.clone();
        if !table.contains_key(key) {
            return Err(Error::Config(format!("unknown key {key}")));
        }
        table.insert(key.to_string(), value.to_string());
        Self::from_table(table)
    }

    fn from_table(table: BTreeMap<String, String>) -> Result<Self> {
        let r = Reader(&table);
        let shape = match r.raw("geometry.shape") {
            "rectangle" => Shape::Rectangle {
                half_width_2: r.num("geometry.half_width_2")?,
                half_width_3: r.num("geometry.half_width_3")?,
            },
            "disk" => Shape::Disk { radius: r.num("geometry.radius")? },
            other => return Err(bad("geometry.shape", format!("unknown shape {other:?}"))),
        };
        let gauge = match r.raw("potentials.gauge") {
            "none" => GaugeFunction::Zero,
            "bump" => GaugeFunction::Bump { amplitude: 0.05, center: [0.01, -0.02], radius: 0.15, modulation: 0.4 },
            "linear" => GaugeFunction::Linear { g2: 0.3, g3: -0.2, offset: 0.1 },
            other => return Err(bad("potentials.gauge", format!("unknown gauge {other:?} (none, bump, linear)"))),
        };
        let recover_path = match r.raw("recover.path") {
            "oracle" => RecoverPath::Oracle,
            "pde" => RecoverPath::Pde,
            other => return Err(bad("recover.path", format!("unknown path {other:?}"))),
        };
        let mut sigmas = r.list("probes.sigma")?;
        sigmas.sort_by(f64::total_cmp);
        sigmas.dedup();
        let recon = r.list("recover.grid")?;
        if recon.len() != 3 || recon.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
            return Err(bad("recover.grid", "expected three positive integers"));
        }
        let tolerances = table
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("tolerances.").map(|n| (n.to_string(), v)))
            .map(|(n, v)| v.parse().map(|x| (n.clone(), x)).map_err(|e| bad(&format!("tolerances.{n}"), e)))
            .collect::<Result<_>>()?;
        let cfg = ExperimentConfig {
            shape,
            h: r.num("geometry.h")?,
            n1: r.num("geometry.n1")?,
            n_t: r.num("geometry.n_t")?,
            t_final: r.num("time.t_final")?,
            a1: r.potential("potentials.a1")?,
            b: r.potential("potentials.b")?,
            eps: r.num("potentials.eps")?,
            family: r.list("potentials.family")?,
            gauge,
            theta: r.num("probes.theta")?,
            sigmas,
            omega_count: r.num("probes.omega_count")?,
            k_max: r.num("probes.k_max")?,
            m_max: r.num("probes.m_max")?,
            probe_n1: r.num("probes.n1")?,
            dp: r.num("probes.dp")?,
            recover_path,
            gamma: r.num("recover.gamma")?,
            recon: [recon[0] as usize, recon[1] as usize, recon[2] as usize],
            gamma_cap: r.num("stability.gamma_cap")?,
            sigma_cap: r.num("stability.sigma_cap")?,
            battery: r.num("stability.battery")?,
            gauge_h: r.num("verify.gauge_h")?,
            green_h: r.num("verify.green_h")?,
            draws: r.num("verify.draws")?,
            tolerances,
            out_dir: PathBuf::from(r.raw("output.dir")),
            workers: r.num("run.workers")?,
            seed: r.num("run.seed")?,
            table,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let grid = self.grid().map_err(|e| bad("geometry", e))?;
        for (key, h) in [("verify.gauge_h", self.gauge_h), ("verify.green_h", self.green_h)] {
            CrossSection::new(self.shape, h).map_err(|e| bad(key, e))?;
        }
        if self.workers == 0 {
            return Err(bad("run.workers", "must be at least 1"));
        }
        if self.omega_count == 0
            || self.probe_n1 < 2
            || self.dp.is_nan()
            || self.dp <= 0.0
            || self.k_max < 0
            || self.m_max < 0
        {
            return Err(bad("probes", "omega_count >= 1, n1 >= 2, dp > 0, k_max >= 0 and m_max >= 0 required"));
        }
        if self.sigmas.is_empty() {
            return Err(bad("probes.sigma", "empty list"));
        }
        let (sin, cos) = self.theta.sin_cos();
        if sin.abs() > 1e-12 || (cos.abs() - 1.0).abs() > 1e-12 {
            return Err(bad("probes.theta", "backward probes need theta in {0, pi}"));
        }
        let sigma0 = 2.0 * (grid.cs.r_enc() + 1.0) / self.t_final;
        for &s in &self.sigmas {
            if s <= sigma0 {
                return Err(bad("probes.sigma", format!("sigma = {s} must exceed 2(R+1)/T = {sigma0}")));
            }
            crate::probes::check_resolution(s, &grid).map_err(|e| bad("probes.sigma", e))?;
        }
        if !(self.gamma > 0.0 && self.gamma_cap > 0.0 && self.sigma_cap > sigma0) {
            return Err(bad("recover.gamma", "gamma and gamma_cap must be positive, sigma_cap above 2(R+1)/T"));
        }
        Ok(())
    }

    pub fn cross_section(&self) -> Result<CrossSection> {
        CrossSection::new(self.shape, self.h)
    }

    pub fn grid(&self) -> Result<WaveguideGrid> {
        WaveguideGrid::new(self.cross_section()?, self.n1, self.n_t, self.t_final)
    }

    /// `A2 = A1 + eps B`.
    pub fn a2(&self, eps: f64) -> MagneticPotential {
        MagneticPotential::sum(self.a1.clone(), MagneticPotential::scaled(eps, self.b.clone()))
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn recon_grid(&self) -> ReconGrid {
        let half = self.shape.half_extent();
        ReconGrid { n: self.recon, half }
    }

    /// Canonical `key = value` listing of every setting.
    pub fn to_text(&self) -> String {
        self.table.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::parse("").expect("built-in defaults are valid")
    }
}
