//! Run configuration: flat dotted keys (`torus.a1 = 1.0`) in a TOML file.

use std::path::{Path, PathBuf};

use gsp_core::exact::AlgebraicInput;
use gsp_core::lattice::Mode;
use gsp_core::solvers::{InitialKind, SolverConfig};
use gsp_core::{ExactCarriers, TorusSpec};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub torus: TorusConfig,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub initial: InitialConfig,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Each side may be given as a float, as an exact square, or both.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    pub a1: Option<f64>,
    pub a2: Option<f64>,
    pub a3: Option<f64>,
    #[serde(rename = "F")]
    pub froude: Option<f64>,
    pub a1_sq: Option<String>,
    pub a2_sq: Option<String>,
    pub a3_sq: Option<String>,
    #[serde(rename = "F2")]
    pub froude_sq: Option<String>,
    #[serde(default = "one")]
    pub nu_h: f64,
    #[serde(default = "one")]
    pub nu_h_prime: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(rename = "N", default = "default_n")]
    pub n_max: usize,
}

fn default_n() -> usize {
    8
}

impl Default for LatticeConfig {
    fn default() -> Self {
        LatticeConfig { n_max: default_n() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub eps: f64,
    pub cfl: f64,
    pub phase_resolution: f64,
    pub n_cut: Option<f64>,
    /// Interval between recorded rows of the time series.
    pub sample_dt: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            dt: d.dt,
            t_final: d.t_final,
            eps: d.eps,
            cfl: d.cfl_safety,
            phase_resolution: d.phase_resolution,
            n_cut: None,
            sample_dt: 0.01,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    pub kind: String,
    pub seed: u64,
    pub amplitude: f64,
    pub s: f64,
    pub mode: Mode,
    pub branch: usize,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig { kind: "random-div-free".into(), seed: 1, amplitude: 1.0, s: 2.0, mode: [1, 0, 1], branch: 1 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: String,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_method")]
    pub method: String,
    /// Truncation used to certify non-resonance; defaults to the lattice N.
    pub n_cert: Option<usize>,
}

fn default_eps_list() -> Vec<f64> {
    vec![1e-1, 3e-2, 1e-2, 3e-3]
}

fn default_method() -> String {
    "exact".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write a snapshot every this many recorded rows; 0 writes only the final state.
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("gsp-out"), snapshot_every: 0 }
    }
}

pub const EXPERIMENT_KINDS: [&str; 4] = ["resonance", "pe", "limit", "converge"];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if !EXPERIMENT_KINDS.contains(&cfg.experiment.kind.as_str()) {
            return Err(CliError::Config(format!("experiment.kind must be one of {EXPERIMENT_KINDS:?}, got '{}'", cfg.experiment.kind)));
        }
        if cfg.lattice.n_max == 0 {
            return Err(CliError::Config("lattice.N must be positive".into()));
        }
        Ok(cfg)
    }

    /// The output directory, overridden by `GSP_OUT` when set.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os("GSP_OUT") {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.output.dir.clone(),
        }
    }

    pub fn torus(&self) -> Result<TorusSpec, CliError> {
        let t = &self.torus;
        let parse = |name: &str, s: &Option<String>| -> Result<Option<AlgebraicInput>, CliError> {
            s.as_deref().map(|v| v.parse::<AlgebraicInput>().map_err(|e| CliError::Config(format!("torus.{name}: {e}")))).transpose()
        };
        let a_sq = [parse("a1_sq", &t.a1_sq)?, parse("a2_sq", &t.a2_sq)?, parse("a3_sq", &t.a3_sq)?];
        let f2 = parse("F2", &t.froude_sq)?;
        let side = |name: &str, float: Option<f64>, exact: &Option<AlgebraicInput>| -> Result<f64, CliError> {
            match (float, exact) {
                (Some(v), _) => Ok(v),
                (None, Some(e)) => Ok(e.to_f64().sqrt()),
                (None, None) => Err(CliError::Config(format!("torus.{name} (or its exact square) is required"))),
            }
        };
        let a = [side("a1", t.a1, &a_sq[0])?, side("a2", t.a2, &a_sq[1])?, side("a3", t.a3, &a_sq[2])?];
        let froude = side("F", t.froude, &f2)?;
        let spec = TorusSpec::new(a, froude, t.nu_h, t.nu_h_prime)?;
        if a_sq.iter().any(Option::is_some) || f2.is_some() {
            Ok(spec.with_exact(ExactCarriers { a_sq, froude_sq: f2 })?)
        } else {
            Ok(spec)
        }
    }

    pub fn solver(&self) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let cfg = SolverConfig {
            dt: s.dt,
            t_final: s.t_final,
            eps: s.eps,
            n_cut: s.n_cut,
            cfl_safety: s.cfl,
            phase_resolution: s.phase_resolution,
            linear_only: false,
        };
        cfg.validate()?;
        if !(s.sample_dt > 0.0) {
            return Err(CliError::Config("solver.sample_dt must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn initial_kind(&self) -> Result<InitialKind, CliError> {
        let kind: InitialKind = self.initial.kind.parse()?;
        Ok(match kind {
            InitialKind::SingleEigenmode { .. } => {
                if self.initial.branch > 2 {
                    return Err(CliError::Config("initial.branch must be 0, 1 or 2".into()));
                }
                InitialKind::SingleEigenmode { mode: self.initial.mode, branch: self.initial.branch }
            }
            k => k,
        })
    }

    /// Key/value echo for reports.
    pub fn echo(&self) -> Vec<(String, String)> {
        let t = &self.torus;
        let mut v = vec![];
        let mut push = |k: &str, val: String| v.push((k.to_string(), val));
        for (k, x) in [("torus.a1", t.a1), ("torus.a2", t.a2), ("torus.a3", t.a3), ("torus.F", t.froude)] {
            if let Some(x) = x {
                push(k, x.to_string());
            }
        }
        for (k, x) in [("torus.a1_sq", &t.a1_sq), ("torus.a2_sq", &t.a2_sq), ("torus.a3_sq", &t.a3_sq), ("torus.F2", &t.froude_sq)] {
            if let Some(x) = x {
                push(k, x.clone());
            }
        }
        push("torus.nu_h", t.nu_h.to_string());
        push("torus.nu_h_prime", t.nu_h_prime.to_string());
        push("lattice.N", self.lattice.n_max.to_string());
        let s = &self.solver;
        push("solver.dt", s.dt.to_string());
        push("solver.T", s.t_final.to_string());
        push("solver.eps", s.eps.to_string());
        push("solver.cfl", s.cfl.to_string());
        push("solver.phase_resolution", s.phase_resolution.to_string());
        push("solver.sample_dt", s.sample_dt.to_string());
        if let Some(c) = s.n_cut {
            push("solver.n_cut", c.to_string());
        }
        let i = &self.initial;
        push("initial.kind", i.kind.clone());
        push("initial.seed", i.seed.to_string());
        push("initial.amplitude", i.amplitude.to_string());
        push("initial.s", i.s.to_string());
        push("experiment.kind", self.experiment.kind.clone());
        v
    }
}
