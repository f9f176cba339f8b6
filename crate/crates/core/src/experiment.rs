//! Experiment configuration, presets and the sweep driver.
//!
//! A run solves the reference once, builds every requested basis at the largest
//! `m`, evaluates each `(family, h, m)` point in a work pool and writes
//! `errors.csv`, `summary.json` and the basis/corrector dumps into the output
//! directory.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corrector::{compute_correctors, taylor_dispersion, CorrectorSet, EffectiveCoefficients};
use crate::error::{Error, Result};
use crate::fem1d::build_mesh;
use crate::geometry::{ChannelDomain, ProblemData, Table, VelocityProfile};
use crate::metrics::{compare, eoc, fitted_rate, pre_plateau_len, ErrorRecord, Lattice, CSV_HEADER};
use crate::modal_basis::{
    educated_basis, hiphome_basis_partial, legendre_basis, BasisFamily, ModalBasis, DEFAULT_PANELS,
};
use crate::reduced::{assemble, ReducedSolution};
use crate::reference::{
    snapshot_file_name, solve_effective, solve_leading_order, solve_reference_2d, ReferenceField2D, TimeMode,
};

const BASIS_DUMP_POINTS: usize = 201;
/// Large-m errors of two families at the same `h` must agree within this factor.
const PLATEAU_AGREEMENT: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PoiseuilleSteady,
    LoglawSteady,
    LoglawUnsteady,
    Custom,
}

impl Preset {
    pub const NAMED: [Preset; 3] = [Preset::PoiseuilleSteady, Preset::LoglawSteady, Preset::LoglawUnsteady];

    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::PoiseuilleSteady => "poiseuille-steady",
            Preset::LoglawSteady => "loglaw-steady",
            Preset::LoglawUnsteady => "loglaw-unsteady",
            Preset::Custom => "custom",
        }
    }

    fn source(&self) -> Option<&'static str> {
        match self {
            Preset::PoiseuilleSteady => Some(include_str!("../presets/poiseuille-steady.json")),
            Preset::LoglawSteady => Some(include_str!("../presets/loglaw-steady.json")),
            Preset::LoglawUnsteady => Some(include_str!("../presets/loglaw-unsteady.json")),
            Preset::Custom => None,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poiseuille-steady" => Ok(Preset::PoiseuilleSteady),
            "loglaw-steady" => Ok(Preset::LoglawSteady),
            "loglaw-unsteady" => Ok(Preset::LoglawUnsteady),
            "custom" => Ok(Preset::Custom),
            _ => Err(Error::Config(format!("unknown preset '{s}'"))),
        }
    }
}

fn default_preset() -> Preset {
    Preset::Custom
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub length: f64,
    pub width: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant {
        speed: f64,
    },
    LinearShear {
        rate: f64,
    },
    Poiseuille {
        mean: f64,
    },
    /// `offset` defaults to `−ln(d)/k`.
    Loglaw {
        karman: f64,
        roughness: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<f64>,
    },
    /// Two-column `z,u` CSV; relative paths resolve against the config file.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub diffusion: f64,
    pub reaction: f64,
    pub forcing: f64,
    pub inlet: f64,
    #[serde(default)]
    pub initial: f64,
}

fn default_n_y() -> usize {
    2048
}

fn default_panels() -> usize {
    DEFAULT_PANELS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretisationConfig {
    pub h: Vec<f64>,
    pub m: Vec<usize>,
    #[serde(default = "default_n_y")]
    pub n_y: usize,
    #[serde(default = "default_panels")]
    pub panels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub theta: f64,
    pub dt: f64,
    pub final_time: f64,
    pub snapshots: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub nx: usize,
    pub nz: usize,
}

fn default_lattice() -> LatticeConfig {
    let l = Lattice::default();
    LatticeConfig { nx: l.nx, nz: l.nz }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_preset")]
    pub preset: Preset,
    pub domain: DomainConfig,
    pub profile: ProfileConfig,
    pub problem: ProblemConfig,
    pub discretisation: DiscretisationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
    pub families: Vec<BasisFamily>,
    pub reference: LatticeConfig,
    #[serde(default = "default_lattice")]
    pub lattice: LatticeConfig,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// Also write reference and reduced fields (large).
    #[serde(default)]
    pub dump_fields: bool,
    /// Record wall-clock times; off by default so outputs are reproducible.
    #[serde(default)]
    pub timings: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(v: f64, name: &str) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_error(format!("{name} must be positive (got {v})")))
    }
}

impl ExperimentConfig {
    /// Parses and validates a JSON document; `origin` names it in messages.
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json_str(&text, &path.display().to_string())?;
        if let ProfileConfig::Tabulated { path: table } = &mut config.profile {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        Ok(config)
    }

    pub fn preset(preset: Preset) -> Result<Self> {
        let text = preset
            .source()
            .ok_or_else(|| config_error("the custom preset needs a config file"))?;
        Self::from_json_str(text, preset.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Checks everything that can be checked without touching the file system.
    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        ChannelDomain::new(d.length, d.width, d.epsilon).map_err(|e| config_error(e.to_string()))?;
        match &self.profile {
            ProfileConfig::Constant { speed } if !speed.is_finite() => {
                return Err(config_error("constant speed must be finite"))
            }
            ProfileConfig::LinearShear { rate } if !rate.is_finite() => {
                return Err(config_error("shear rate must be finite"))
            }
            ProfileConfig::Poiseuille { mean } if !mean.is_finite() => {
                return Err(config_error("Poiseuille mean speed must be finite"))
            }
            ProfileConfig::Loglaw {
                karman,
                roughness,
                offset,
            } => {
                positive(*karman, "log-law constant k")?;
                positive(*roughness, "log-law roughness d")?;
                if offset.is_some_and(|c| !c.is_finite()) {
                    return Err(config_error("log-law offset must be finite"));
                }
            }
            _ => {}
        }
        self.problem_data().map_err(|e| config_error(e.to_string()))?;

        let disc = &self.discretisation;
        if disc.h.is_empty() {
            return Err(config_error("the h sweep is empty"));
        }
        if disc.m.is_empty() {
            return Err(config_error("the m sweep is empty"));
        }
        for &h in &disc.h {
            positive(h, "h")?;
            if h > d.length {
                return Err(config_error(format!("h = {h} exceeds the channel length")));
            }
        }
        if disc.m.iter().any(|&m| m == 0 || m > 64) {
            return Err(config_error("every m must lie in 1..=64"));
        }
        let unique_h: BTreeSet<u64> = disc.h.iter().map(|h| h.to_bits()).collect();
        let unique_m: BTreeSet<usize> = disc.m.iter().copied().collect();
        if unique_h.len() != disc.h.len() || unique_m.len() != disc.m.len() {
            return Err(config_error("sweep lists must not repeat values"));
        }
        if disc.n_y < 64 || disc.n_y % 4 != 0 {
            return Err(config_error(format!(
                "n_y must be a multiple of 4 and at least 64 (got {})",
                disc.n_y
            )));
        }
        if disc.panels == 0 {
            return Err(config_error("panels must be positive"));
        }
        if self.families.is_empty() {
            return Err(config_error("no basis family selected"));
        }
        let fams: BTreeSet<BasisFamily> = self.families.iter().copied().collect();
        if fams.len() != self.families.len() {
            return Err(config_error("basis families must not repeat"));
        }
        if self.reference.nx < 3 || self.reference.nz < 3 {
            return Err(config_error("reference lattice needs at least 3 × 3 nodes"));
        }
        Lattice::new(self.lattice.nx, self.lattice.nz).map_err(|e| config_error(e.to_string()))?;
        if let Some(t) = &self.time {
            if !(0.0..=1.0).contains(&t.theta) {
                return Err(config_error(format!("theta must lie in [0, 1] (got {})", t.theta)));
            }
            positive(t.dt, "dt")?;
            positive(t.final_time, "final_time")?;
            if t.snapshots.is_empty() {
                return Err(config_error("the snapshot list is empty"));
            }
            crate::fem1d::snapshot_steps(
                &t.snapshots,
                t.dt,
                crate::fem1d::time_steps(t.dt, t.final_time).map_err(|e| config_error(e.to_string()))?,
            )
            .map_err(|e| config_error(e.to_string()))?;
        }
        if self.threads == Some(0) {
            return Err(config_error("threads must be positive"));
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<ChannelDomain> {
        ChannelDomain::new(self.domain.length, self.domain.width, self.domain.epsilon)
    }

    pub fn profile(&self) -> Result<VelocityProfile> {
        let eps = self.domain.epsilon;
        match &self.profile {
            ProfileConfig::Constant { speed } => Ok(VelocityProfile::constant(*speed)),
            ProfileConfig::LinearShear { rate } => VelocityProfile::linear_shear(*rate, eps),
            ProfileConfig::Poiseuille { mean } => VelocityProfile::poiseuille(*mean, eps),
            ProfileConfig::Loglaw {
                karman,
                roughness,
                offset: None,
            } => VelocityProfile::loglaw(*karman, *roughness, eps),
            ProfileConfig::Loglaw {
                karman,
                roughness,
                offset: Some(c),
            } => VelocityProfile::loglaw_with_offset(*karman, *roughness, *c, eps),
            ProfileConfig::Tabulated { path } => Ok(VelocityProfile::tabulated(Table::from_csv_path(path)?)),
        }
    }

    pub fn problem_data(&self) -> Result<ProblemData> {
        let p = &self.problem;
        let mut data = ProblemData::new(p.diffusion, p.reaction, p.forcing, p.inlet)?;
        data.initial = p.initial;
        data.validate()?;
        Ok(data)
    }

    pub fn time_mode(&self) -> TimeMode {
        match &self.time {
            None => TimeMode::Steady,
            Some(t) => TimeMode::Theta {
                dt: t.dt,
                theta: t.theta,
                final_time: t.final_time,
                snapshots: t.snapshots.clone(),
            },
        }
    }

    pub fn max_modes(&self) -> usize {
        self.discretisation.m.iter().copied().max().unwrap_or(1)
    }

    fn evaluation_lattice(&self) -> Lattice {
        Lattice {
            nx: self.lattice.nx,
            nz: self.lattice.nz,
        }
    }
}

/// A sweep point that could not be evaluated.
#[derive(Debug)]
pub struct PointFailure {
    pub family: BasisFamily,
    pub m: usize,
    pub h: f64,
    pub error: Error,
}

impl std::fmt::Display for PointFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} m={} h={}: {}", self.family, self.m, self.h, self.error)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModalRate {
    pub family: BasisFamily,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub m: Vec<usize>,
    pub l2_errors: Vec<f64>,
    pub eoc: Vec<f64>,
    pub pre_plateau: usize,
    pub fitted_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshRate {
    pub family: BasisFamily,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub h: Vec<f64>,
    pub l2_errors: Vec<f64>,
    pub qoi_errors: Vec<f64>,
    pub eoc: Vec<f64>,
    pub pre_plateau: usize,
    pub fitted_rate: Option<f64>,
    pub qoi_fitted_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineError {
    pub model: &'static str,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub l2_error: Option<f64>,
    pub qoi_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub preset: Preset,
    pub config: ExperimentConfig,
    pub coefficients: EffectiveCoefficients,
    pub basis_sizes: Vec<(BasisFamily, usize)>,
    pub basis_errors: Vec<String>,
    pub records: usize,
    pub modal_rates: Vec<ModalRate>,
    pub mesh_rates: Vec<MeshRate>,
    pub baselines: Vec<BaselineError>,
    pub failures: Vec<String>,
    pub invariant_failures: Vec<String>,
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub records: Vec<ErrorRecord>,
    pub summary: Summary,
    pub failures: Vec<PointFailure>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    /// 0 on success, 1 on invariant failure, 3 on numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.failures.iter().any(|f| !matches!(f.error, Error::Invariant(_))) {
            3
        } else if !self.failures.is_empty() || !self.summary.invariant_failures.is_empty() {
            1
        } else {
            0
        }
    }

    pub fn records_for(&self, family: BasisFamily) -> impl Iterator<Item = &ErrorRecord> {
        self.records.iter().filter(move |r| r.family == family.as_str())
    }
}

/// Exit code for an error raised before any sweep point ran.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Config(_) | Error::Parse { .. } => 2,
        Error::Invariant(_) => 1,
        _ => 3,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, body: &[u8]) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Basis of `m` modes plus the error that stopped construction early, if any.
pub fn build_basis(
    family: BasisFamily,
    m: usize,
    problem: &ProblemData,
    correctors: Option<&CorrectorSet>,
    panels: usize,
) -> Result<(ModalBasis, Option<Error>)> {
    match family {
        BasisFamily::Hiphome => {
            let set = correctors.ok_or_else(|| Error::invalid("hiphome basis needs correctors"))?;
            hiphome_basis_partial(set, m, panels)
        }
        BasisFamily::Educated => Ok((educated_basis(m, problem.diffusion, panels)?, None)),
        BasisFamily::Legendre => Ok((legendre_basis(m, panels)?, None)),
    }
}

fn replicate(e: &Error) -> Error {
    match e {
        Error::Degenerate {
            index,
            residual,
            threshold,
        } => Error::Degenerate {
            index: *index,
            residual: *residual,
            threshold: *threshold,
        },
        other => Error::invalid(other.to_string()),
    }
}

fn correctors_for(config: &ExperimentConfig, profile: &VelocityProfile, domain: &ChannelDomain) -> Result<CorrectorSet> {
    let k_max = config.max_modes().saturating_sub(1).max(1);
    compute_correctors(
        profile,
        domain,
        config.problem.diffusion,
        k_max,
        config.discretisation.n_y,
    )
}

/// Writes `basis_{family}.csv` for every configured family; construction errors
/// are returned alongside the files (the dump then holds the modes built so far).
pub fn emit_basis_dump(config: &ExperimentConfig) -> Result<(Vec<PathBuf>, Vec<String>)> {
    config.validate()?;
    let domain = config.domain()?;
    let profile = config.profile()?;
    let problem = config.problem_data()?;
    create_dir(&config.output)?;
    let set = if config.families.contains(&BasisFamily::Hiphome) {
        Some(correctors_for(config, &profile, &domain)?)
    } else {
        None
    };
    let mut files = Vec::new();
    let mut errors = Vec::new();
    for &family in &config.families {
        let (basis, err) = build_basis(family, config.max_modes(), &problem, set.as_ref(), config.discretisation.panels)?;
        let path = config.output.join(format!("basis_{family}.csv"));
        basis.write_csv(&path, BASIS_DUMP_POINTS)?;
        files.push(path);
        if let Some(e) = err {
            errors.push(format!("{family}: {e}"));
        }
    }
    Ok((files, errors))
}

/// Writes `correctors.csv` and returns the effective coefficients.
pub fn emit_corrector_dump(config: &ExperimentConfig) -> Result<(PathBuf, EffectiveCoefficients)> {
    config.validate()?;
    let domain = config.domain()?;
    let profile = config.profile()?;
    create_dir(&config.output)?;
    let set = correctors_for(config, &profile, &domain)?;
    let path = config.output.join("correctors.csv");
    set.write_csv(&path)?;
    Ok((path, taylor_dispersion(&set, &domain)?))
}

struct Shared<'a> {
    config: &'a ExperimentConfig,
    domain: ChannelDomain,
    profile: VelocityProfile,
    problem: ProblemData,
    reference: Vec<ReferenceField2D>,
    lattice: Lattice,
}

impl Shared<'_> {
    fn dt(&self) -> Option<f64> {
        self.config.time.as_ref().map(|t| t.dt)
    }

    fn time_of(&self, t: f64) -> Option<f64> {
        self.config.time.as_ref().map(|_| t)
    }

    fn evaluate_point(
        &self,
        family: BasisFamily,
        full: &ModalBasis,
        limit: Option<&Error>,
        h: f64,
        m: usize,
    ) -> Result<(Vec<ErrorRecord>, Vec<ReducedSolution>)> {
        let start = Instant::now();
        if m > full.len() {
            return Err(limit.map_or_else(|| Error::invalid("basis too short"), replicate));
        }
        let mesh = build_mesh(self.domain.length(), h)?;
        let basis = Arc::new(full.truncated(m)?);
        let system = assemble(&self.problem, basis, &mesh, &self.profile, &self.domain)?;
        let solutions = match &self.config.time {
            None => vec![system.solve_steady()?],
            Some(t) => system.trajectory(t.dt, t.theta, t.final_time, &t.snapshots)?,
        };
        let wall_ms = if self.config.timings {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        let mut records = Vec::with_capacity(solutions.len());
        for (sol, reference) in solutions.iter().zip(&self.reference) {
            let cmp = compare(reference, sol, &self.domain, self.lattice)?;
            records.push(ErrorRecord::new(
                self.config.preset.as_str(),
                family.as_str(),
                m,
                h,
                self.dt(),
                self.time_of(sol.time()),
                &cmp,
                wall_ms,
            )?);
        }
        Ok((records, solutions))
    }

    fn baselines(&self, coefficients: &EffectiveCoefficients) -> Vec<BaselineError> {
        let mode = self.config.time_mode();
        let mut out = Vec::new();
        for &h in &self.config.discretisation.h {
            for model in ["effective", "leading_order"] {
                let fields = build_mesh(self.domain.length(), h).and_then(|mesh| match model {
                    "effective" => solve_effective(&self.problem, coefficients, &mesh, &self.domain, &mode),
                    _ => solve_leading_order(&self.problem, coefficients.mean_speed, &mesh, &self.domain, &mode),
                });
                match fields {
                    Ok(fields) => {
                        for (f, r) in fields.iter().zip(&self.reference) {
                            let cmp = compare(r, f, &self.domain, self.lattice);
                            out.push(BaselineError {
                                model,
                                h,
                                t: self.time_of(f.time()),
                                l2_error: cmp.as_ref().ok().map(|c| c.l2_error),
                                qoi_error: cmp.as_ref().ok().map(|c| c.qoi_error),
                                error: cmp.err().map(|e| e.to_string()),
                            });
                        }
                    }
                    Err(e) => out.push(BaselineError {
                        model,
                        h,
                        t: None,
                        l2_error: None,
                        qoi_error: None,
                        error: Some(e.to_string()),
                    }),
                }
            }
        }
        out
    }
}

fn write_lattice_field(path: &Path, xs: &[f64], zs: &[f64], values: &[f64]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "x,z,c")?;
        for (i, x) in xs.iter().enumerate() {
            for (j, z) in zs.iter().enumerate() {
                writeln!(w, "{x:.16e},{z:.16e},{:.16e}", values[i * zs.len() + j])?;
            }
        }
        w.flush()
    };
    body().map_err(|e| Error::io(path, e))
}

fn time_keys(records: &[ErrorRecord]) -> Vec<Option<f64>> {
    let mut keys: Vec<Option<f64>> = Vec::new();
    for r in records {
        if !keys.iter().any(|k| k.map(f64::to_bits) == r.time.map(f64::to_bits)) {
            keys.push(r.time);
        }
    }
    keys
}

fn modal_rates(config: &ExperimentConfig, records: &[ErrorRecord]) -> Vec<ModalRate> {
    let mut out = Vec::new();
    for &family in &config.families {
        for &h in &config.discretisation.h {
            for t in time_keys(records) {
                let mut series: Vec<(usize, f64)> = records
                    .iter()
                    .filter(|r| r.family == family.as_str() && r.h == h && r.time == t)
                    .map(|r| (r.m, r.l2_error))
                    .collect();
                series.sort_by_key(|p| p.0);
                if series.len() < 2 {
                    continue;
                }
                let ms: Vec<f64> = series.iter().map(|p| p.0 as f64).collect();
                let es: Vec<f64> = series.iter().map(|p| p.1).collect();
                out.push(ModalRate {
                    family,
                    h,
                    t,
                    m: series.iter().map(|p| p.0).collect(),
                    eoc: eoc(&es, &ms).unwrap_or_default(),
                    pre_plateau: pre_plateau_len(&es),
                    fitted_rate: fitted_rate(&es, &ms).ok().flatten(),
                    l2_errors: es,
                });
            }
        }
    }
    out
}

fn mesh_rates(config: &ExperimentConfig, records: &[ErrorRecord]) -> Vec<MeshRate> {
    let mut out = Vec::new();
    let mut ms = config.discretisation.m.clone();
    ms.sort_unstable();
    for &family in &config.families {
        for &m in &ms {
            for t in time_keys(records) {
                let mut series: Vec<(f64, f64, f64)> = records
                    .iter()
                    .filter(|r| r.family == family.as_str() && r.m == m && r.time == t)
                    .map(|r| (r.h, r.l2_error, r.qoi_error))
                    .collect();
                // coarse to fine
                series.sort_by(|a, b| b.0.total_cmp(&a.0));
                if series.len() < 2 {
                    continue;
                }
                let hs: Vec<f64> = series.iter().map(|p| p.0).collect();
                let es: Vec<f64> = series.iter().map(|p| p.1).collect();
                let js: Vec<f64> = series.iter().map(|p| p.2).collect();
                out.push(MeshRate {
                    family,
                    m,
                    t,
                    eoc: eoc(&es, &hs).unwrap_or_default(),
                    pre_plateau: pre_plateau_len(&es),
                    fitted_rate: fitted_rate(&es, &hs).ok().flatten(),
                    qoi_fitted_rate: fitted_rate(&js, &hs).ok().flatten(),
                    h: hs,
                    l2_errors: es,
                    qoi_errors: js,
                });
            }
        }
    }
    out
}

fn plateau_failures(config: &ExperimentConfig, rates: &[ModalRate]) -> Vec<String> {
    if config.time.is_some() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for &h in &config.discretisation.h {
        let find = |f: BasisFamily| rates.iter().find(|r| r.family == f && r.h == h);
        let (Some(a), Some(b)) = (find(BasisFamily::Hiphome), find(BasisFamily::Educated)) else {
            continue;
        };
        let plateaued = |r: &ModalRate| r.pre_plateau < r.l2_errors.len();
        if !(plateaued(a) && plateaued(b)) {
            continue;
        }
        let (ea, eb) = (*a.l2_errors.last().unwrap(), *b.l2_errors.last().unwrap());
        if ea.max(eb) > PLATEAU_AGREEMENT * ea.min(eb) {
            out.push(format!(
                "plateau mismatch at h = {h}: hiphome {ea:.3e} vs educated {eb:.3e}"
            ));
        }
    }
    out
}

/// Runs every sweep point of `config` and writes the outputs. Point failures are
/// collected in the report after the partial results are flushed.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(|| run_in_pool(config)),
        None => run_in_pool(config),
    }
}

fn run_in_pool(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let out_dir = &config.output;
    create_dir(out_dir)?;
    let domain = config.domain()?;
    let profile = config.profile()?;
    let problem = config.problem_data()?;
    let mut files = Vec::new();

    let set = correctors_for(config, &profile, &domain)?;
    let coefficients = taylor_dispersion(&set, &domain)?;
    let path = out_dir.join("correctors.csv");
    set.write_csv(&path)?;
    files.push(path);

    let reference = solve_reference_2d(
        &problem,
        &profile,
        &domain,
        config.reference.nx,
        config.reference.nz,
        &config.time_mode(),
    )?;
    let shared = Shared {
        config,
        domain,
        profile,
        problem,
        reference,
        lattice: config.evaluation_lattice(),
    };
    if config.dump_fields {
        for r in &shared.reference {
            let path = out_dir.join(snapshot_file_name(r.time()));
            r.write_csv(&path)?;
            files.push(path);
        }
    }

    let mut bases = Vec::new();
    let mut basis_errors = Vec::new();
    for &family in &config.families {
        let (basis, err) = build_basis(family, config.max_modes(), &problem, Some(&set), config.discretisation.panels)?;
        let path = out_dir.join(format!("basis_{family}.csv"));
        basis.write_csv(&path, BASIS_DUMP_POINTS)?;
        files.push(path);
        if let Some(e) = &err {
            basis_errors.push(format!("{family}: {e}"));
        }
        bases.push((family, basis, err));
    }

    let mut ms = config.discretisation.m.clone();
    ms.sort_unstable();
    let mut hs = config.discretisation.h.clone();
    hs.sort_by(|a, b| b.total_cmp(a));
    let mut points: Vec<(usize, f64, usize)> = Vec::new();
    for b in 0..bases.len() {
        for &h in &hs {
            points.extend(ms.iter().map(|&m| (b, h, m)));
        }
    }
    let results: Vec<Result<(Vec<ErrorRecord>, Vec<ReducedSolution>)>> = points
        .par_iter()
        .map(|&(b, h, m)| {
            let (family, basis, err) = &bases[b];
            shared.evaluate_point(*family, basis, err.as_ref(), h, m)
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let (xs, zs) = shared.lattice.points(&shared.domain);
    for (&(b, h, m), result) in points.iter().zip(results) {
        let family = bases[b].0;
        match result {
            Ok((recs, sols)) => {
                if config.dump_fields {
                    for s in &sols {
                        let path = out_dir.join(format!("field_{family}_m{m}_h{h}_t{}.csv", s.time()));
                        write_lattice_field(&path, &xs, &zs, &s.evaluate_lattice(&xs, &zs)?)?;
                        files.push(path);
                    }
                }
                records.extend(recs);
            }
            Err(error) => failures.push(PointFailure { family, m, h, error }),
        }
    }

    let mut csv = String::with_capacity(64 * (records.len() + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for r in &records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    let path = out_dir.join("errors.csv");
    write_file(&path, csv.as_bytes())?;
    files.push(path);

    let modal = modal_rates(config, &records);
    let summary = Summary {
        preset: config.preset,
        config: config.clone(),
        coefficients,
        basis_sizes: bases.iter().map(|(f, b, _)| (*f, b.len())).collect(),
        basis_errors,
        records: records.len(),
        invariant_failures: plateau_failures(config, &modal),
        mesh_rates: mesh_rates(config, &records),
        modal_rates: modal,
        baselines: shared.baselines(&coefficients),
        failures: failures.iter().map(|f| f.to_string()).collect(),
    };
    let path = out_dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serialises");
    json.push('\n');
    write_file(&path, json.as_bytes())?;
    files.push(path);

    Ok(ExperimentReport {
        records,
        summary,
        failures,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_match_the_published_setup() {
        let p = ExperimentConfig::preset(Preset::PoiseuilleSteady).unwrap();
        assert_eq!(p.domain, DomainConfig { length: 2.0, width: 0.2, epsilon: 0.2 });
        assert_eq!(p.profile, ProfileConfig::Poiseuille { mean: 10.0 });
        assert_eq!(
            (p.problem.reaction, p.problem.forcing, p.problem.inlet, p.problem.diffusion),
            (1.0, 0.0, 1.0, 1.0)
        );
        assert_eq!(p.discretisation.h, vec![0.0125]);
        let l = ExperimentConfig::preset(Preset::LoglawSteady).unwrap();
        assert_eq!(
            l.profile,
            ProfileConfig::Loglaw { karman: 0.41, roughness: 0.001, offset: None }
        );
        let u = ExperimentConfig::preset(Preset::LoglawUnsteady).unwrap();
        let t = u.time.as_ref().unwrap();
        assert_eq!((t.final_time, t.dt, u.problem.reaction), (0.4, 0.005, 0.0));
        assert_eq!(t.snapshots, vec![0.01, 0.05, 0.1, 0.15, 0.2, 0.3]);
        assert!(ExperimentConfig::preset(Preset::Custom).is_err());
    }

    #[test]
    fn validation_rejects_bad_sweeps() {
        let base = ExperimentConfig::preset(Preset::PoiseuilleSteady).unwrap();
        let mut c = base.clone();
        c.discretisation.m.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = base.clone();
        c.discretisation.h = vec![];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = base.clone();
        c.discretisation.m = vec![1, 1];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.discretisation.n_y = 66;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.families.clear();
        assert!(c.validate().is_err());
        let mut c = base;
        c.time = Some(TimeConfig { theta: 1.0, dt: 0.01, final_time: 0.1, snapshots: vec![0.5] });
        assert!(c.validate().is_err());
    }

    #[test]
    fn parse_errors_name_the_origin() {
        let e = ExperimentConfig::from_json_str("{\"preset\": 3}", "cfg.json").unwrap_err();
        assert!(matches!(&e, Error::Parse { path, .. } if path == "cfg.json"));
        assert_eq!(exit_code_for(&e), 2);
        let base = ExperimentConfig::preset(Preset::LoglawUnsteady).unwrap();
        let text = base.to_json().replace("\"theta\": 1.0", "\"theta\": 1.0, \"bogus\": 1");
        assert!(ExperimentConfig::from_json_str(&text, "x").is_err());
        let round = ExperimentConfig::from_json_str(&base.to_json(), "x").unwrap();
        assert_eq!(round, base);
    }

    #[test]
    fn small_run_writes_every_point_once() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::preset(Preset::PoiseuilleSteady).unwrap();
        c.discretisation.m = vec![1, 2, 3];
        c.discretisation.h = vec![0.025];
        c.reference = LatticeConfig { nx: 401, nz: 21 };
        c.lattice = LatticeConfig { nx: 201, nz: 21 };
        c.output = dir.path().to_path_buf();
        let report = run(&c).unwrap();
        assert_eq!(report.exit_code(), 0, "{:?}", report.summary.failures);
        assert_eq!(report.records.len(), 6);
        let csv = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv.lines().count(), 7);
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("basis_hiphome.csv").exists());
        let m1: Vec<f64> = report.records.iter().filter(|r| r.m == 1).map(|r| r.l2_error).collect();
        assert_eq!(m1[0], m1[1]);
    }
}
