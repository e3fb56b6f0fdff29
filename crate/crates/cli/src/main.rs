use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gsp_core::diagnostics::{
    emit_convergence_table, record_step, resonance_gap_histogram, write_histogram_csv, write_series_csv, RunReport, StepRecord,
};
use gsp_core::limit::{LimitStencil, Operators};
use gsp_core::resonance::{check_condition_p, enumerate_resonances_exact, enumerate_resonances_float, TAU_RES};
use gsp_core::snapshot::write_snapshot;
use gsp_core::solvers::{integrate_filtered, integrate_limit, make_initial_data, run_convergence_experiment, ConvergenceSetup};
use gsp_core::SpectralField4;

mod config;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] gsp_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("gap did not decrease monotonically in eps")]
    NonMonotone,
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use gsp_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::NonMonotone => 4,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::Cfl { .. } | E::NonFinite { .. } => 3,
                E::InvalidTorus(_)
                | E::MalformedAlgebraic(_)
                | E::MissingExact(_)
                | E::Precondition(_)
                | E::CostGuard(_)
                | E::GridTooSmall { .. }
                | E::NotDivergenceFree { .. } => 2,
                _ => 1,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "gsp", version, about = "Rotating stratified primitive equations on anisotropic tori")]
struct Cli {
    /// Worker threads; 1 gives the reference deterministic mode, 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resonant sets, condition (P) and frequency gaps.
    Resonance {
        #[command(subcommand)]
        action: ResonanceAction,
    },
    /// Run one solver and write its time series, snapshots and report.
    Simulate {
        /// Defaults to experiment.kind.
        #[arg(value_enum)]
        system: Option<System>,
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare the filtered system with the limit system over a list of eps.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize the time series written by an earlier run.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum ResonanceAction {
    Enumerate {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to experiment.method.
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    CheckP {
        #[arg(long)]
        config: PathBuf,
    },
    Gaps {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Pe,
    Limit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Float,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Resonance { action } => match action {
            ResonanceAction::Enumerate { config, method } => cmd_enumerate(&RunConfig::load(&config)?, method),
            ResonanceAction::CheckP { config } => cmd_check_p(&RunConfig::load(&config)?),
            ResonanceAction::Gaps { config } => cmd_gaps(&RunConfig::load(&config)?),
        },
        Command::Simulate { system, config } => cmd_simulate(&RunConfig::load(&config)?, system),
        Command::Converge { config } => cmd_converge(&RunConfig::load(&config)?),
        Command::Report { config } => cmd_report(&RunConfig::load(&config)?),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_enumerate(cfg: &RunConfig, method: Option<Method>) -> Result<(), CliError> {
    let spec = cfg.torus()?;
    let method = match method {
        Some(m) => m,
        None => match cfg.experiment.method.as_str() {
            "exact" => Method::Exact,
            "float" => Method::Float,
            other => return Err(CliError::Config(format!("experiment.method must be exact or float, got '{other}'"))),
        },
    };
    let n = cfg.lattice.n_max;
    let set = match method {
        Method::Exact => enumerate_resonances_exact(&spec, n)?,
        Method::Float => enumerate_resonances_float(&spec, n, TAU_RES)?,
    };
    let path = out_dir(cfg)?.join("resonances.txt");
    let mut w = create(&path)?;
    w.write_all(set.to_text().as_bytes())?;
    w.flush()?;
    println!("{} resonant triples up to N={n}, written to {}", set.len(), path.display());
    Ok(())
}

fn cmd_check_p(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.torus()?;
    let n_cert = cfg.experiment.n_cert.unwrap_or(cfg.lattice.n_max);
    let verdict = check_condition_p(&spec, n_cert)?;
    let path = out_dir(cfg)?.join("condition_p.txt");
    fs::write(&path, format!("{verdict}\n"))?;
    println!("{verdict}");
    Ok(())
}

fn cmd_gaps(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.torus()?;
    let hist = resonance_gap_histogram(&spec, cfg.lattice.n_max)?;
    let path = out_dir(cfg)?.join("gaps.csv");
    let mut w = create(&path)?;
    write_histogram_csv(&mut w, &hist)?;
    w.flush()?;
    println!("{} sign triples, {} resonant, min nonzero gap {:.6e}", hist.total, hist.resonant, hist.min_nonzero_gap);
    Ok(())
}

fn snapshot(dir: &Path, index: usize, f: &SpectralField4, froude: f64) -> Result<(), CliError> {
    let mut w = create(&dir.join(format!("snapshot_{index:05}.gsp")))?;
    write_snapshot(&mut w, f, froude)?;
    w.flush()?;
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, system: Option<System>) -> Result<(), CliError> {
    let system = match system {
        Some(s) => s,
        None => match cfg.experiment.kind.as_str() {
            "pe" => System::Pe,
            "limit" => System::Limit,
            other => return Err(CliError::Config(format!("simulate needs pe or limit, experiment.kind is '{other}'"))),
        },
    };
    let spec = cfg.torus()?;
    let solver = cfg.solver()?;
    let ops = Operators::new(&spec, cfg.lattice.n_max);
    let v0 = make_initial_data(cfg.initial_kind()?, cfg.initial.seed, cfg.initial.amplitude, cfg.initial.s, &ops);
    let dir = out_dir(cfg)?;
    let s = cfg.initial.s;
    let every = cfg.output.snapshot_every;
    let mut series: Vec<StepRecord> = Vec::new();
    let mut ledger: Vec<f64> = Vec::new();
    let mut last: Option<SpectralField4> = None;
    let mut io_error: Option<CliError> = None;
    let mut keep = |index: usize, f: SpectralField4| {
        if every > 0 && index.is_multiple_of(every) && io_error.is_none() {
            if let Err(e) = snapshot(&dir, index, &f, spec.froude) {
                io_error = Some(e);
            }
        }
        last = Some(f);
    };
    let outcome = match system {
        System::Pe => integrate_filtered(&v0, &solver, cfg.solver.sample_dt, &ops, |st| {
            series.push(record_step(st.t, &st.u, s, &ops));
            keep(series.len() - 1, ops.basis.propagate(&st.u, st.t / solver.eps));
        })
        .map(|_| ()),
        System::Limit => {
            let stencil = LimitStencil::load_or_build(&dir.join("cache"), &ops)?;
            integrate_limit(&v0, &solver, cfg.solver.sample_dt, &stencil, &ops, |st| {
                let f = st.field(&ops);
                series.push(record_step(st.t, &f, s, &ops));
                ledger.push(st.dissipated);
                keep(series.len() - 1, f);
            })
            .map(|_| ())
        }
    };
    let mut w = create(&dir.join("timeseries.csv"))?;
    write_series_csv(&mut w, &series)?;
    w.flush()?;
    if let Some(e) = io_error {
        return Err(e);
    }
    if let Some(f) = &last {
        snapshot(&dir, series.len().saturating_sub(1), f, spec.froude)?;
    }
    if !series.is_empty() {
        let ledger = matches!(system, System::Limit).then_some(ledger.as_slice());
        let report = RunReport::summarize(cfg.echo(), series, ledger)?;
        fs::write(dir.join("report.txt"), report.to_text())?;
        print!("{}", report.to_text());
    }
    outcome?;
    Ok(())
}

fn cmd_converge(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.experiment.eps_list.len() < 2 {
        return Err(CliError::Config("experiment.eps_list needs at least two values".into()));
    }
    let spec = cfg.torus()?;
    let solver = cfg.solver()?;
    let ops = Operators::new(&spec, cfg.lattice.n_max);
    let v0 = make_initial_data(cfg.initial_kind()?, cfg.initial.seed, cfg.initial.amplitude, cfg.initial.s, &ops);
    let dir = out_dir(cfg)?;
    let stencil = LimitStencil::load_or_build(&dir.join("cache"), &ops)?;
    let setup = ConvergenceSetup { sigma: cfg.experiment.sigma, sample_dt: cfg.solver.sample_dt };
    let rows = run_convergence_experiment(&v0, &cfg.experiment.eps_list, &setup, &solver, &stencil, &ops)?;
    let mut w = create(&dir.join("convergence.csv"))?;
    let table = emit_convergence_table(&mut w, rows, setup.sigma)?;
    w.flush()?;
    print!("{}", table.summary());
    if table.monotone {
        Ok(())
    } else {
        Err(CliError::NonMonotone)
    }
}

fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    let path = cfg.output_dir().join("timeseries.csv");
    let text = fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut series = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if v.len() != 7 {
            return Err(CliError::Config(format!("{}: expected 7 columns, got {}", path.display(), v.len())));
        }
        series.push(StepRecord {
            t: v[0],
            energy: v[1],
            grad_h_sq: v[2],
            omega_norm: v[3],
            osc_norm: v[4],
            horizontal_average: v[5],
            divergence_residual: v[6],
        });
    }
    let report = RunReport::summarize(cfg.echo(), series, None)?;
    print!("{}", report.to_text());
    Ok(())
}
