//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 I/O failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calibration::{calibrate, CalibrationOptions, CalibrationReport};
use crate::config::{OutputFormat, RunConfig};
use crate::dynamics::{evolve, tracking_fidelity, StateVector2, TimeConvention, Trajectory};
use crate::error::{Error, Result};
use crate::model::DiagonalSign;
use crate::presets::preset_registry;
use crate::robustness::{ep_locus, phase_diagram, resolve_jobs, sweep, PhaseDiagram, SweepGrid};

pub const THREADS_ENV: &str = "NHS_NUM_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "magnon-sta",
    version,
    about = "Shortcut state transfer in a driven non-Hermitian cavity-magnon pair"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration; merged over the preset when both are given.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,

    /// Worker threads for sweeps and calibration; NHS_NUM_THREADS takes precedence.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, global = true)]
    pub preset: Option<String>,

    #[arg(long = "time-convention", global = true, value_enum)]
    pub time_convention: Option<TimeArg>,

    #[arg(long = "diagonal-sign", global = true, value_enum)]
    pub diagonal_sign: Option<SignArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the photon state and write the trajectory.
    Simulate,
    /// Transition probability over one or two sweep axes.
    Sweep,
    /// Symmetry/stability codes over the (g/κ_c, κ_m/κ_c) plane and the EP line.
    PhaseDiagram,
    /// Endpoints of every preset under every convention pair.
    Calibrate,
    /// Preset registry.
    Presets {
        #[command(subcommand)]
        action: PresetsCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum PresetsCommand {
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TimeArg {
    Raw,
    Period,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    AsPrinted,
    LossLoss,
    GainLoss,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

impl From<SignArg> for DiagonalSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::AsPrinted => DiagonalSign::AsPrinted,
            SignArg::LossLoss => DiagonalSign::LossLoss,
            SignArg::GainLoss => DiagonalSign::GainLoss,
        }
    }
}

impl TimeArg {
    fn conventions(self) -> Vec<TimeConvention> {
        match self {
            TimeArg::Raw => vec![TimeConvention::Raw],
            TimeArg::Period => vec![TimeConvention::Period],
            TimeArg::Both => TimeConvention::ALL.to_vec(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        e if e.is_numeric() => EXIT_NUMERIC,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let env = std::env::var(THREADS_ENV).ok();
    match execute(&cli, env.as_deref()) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli, threads_env: Option<&str>) -> Result<()> {
    match &cli.command {
        Command::Simulate => simulate(cli),
        Command::Sweep => run_sweep(cli, threads_env),
        Command::PhaseDiagram => run_phase_diagram(cli),
        Command::Calibrate => run_calibrate(cli, threads_env),
        Command::Presets {
            action: PresetsCommand::List,
        } => list_presets(cli),
    }
}

/// Preset (or default) config with the config file applied as a merge patch.
pub fn base_config(preset: Option<&str>, config: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match preset {
        Some(name) => preset_registry().lookup(name)?.to_run_config(),
        None => RunConfig::default(),
    };
    if let Some(path) = config {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let patch: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg = cfg.patched(&patch)?;
    }
    Ok(cfg)
}

/// [`base_config`] with the command-line flags applied on top.
pub fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = base_config(cli.preset.as_deref(), cli.config.as_deref())?;
    if let Some(s) = cli.diagonal_sign {
        cfg.params.diagonal_sign = s.into();
    }
    match cli.time_convention {
        Some(TimeArg::Raw) => cfg.integrator.time_convention = TimeConvention::Raw,
        Some(TimeArg::Period) => cfg.integrator.time_convention = TimeConvention::Period,
        Some(TimeArg::Both) => {
            return Err(Error::Config(
                "--time-convention both is only valid for calibrate".into(),
            ));
        }
        None => {}
    }
    if let Some(f) = cli.format {
        cfg.output.format = f.into();
    }
    if let Some(p) = &cli.out {
        cfg.output.path = Some(p.to_string_lossy().into_owned());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serialises");
    s.push('\n');
    s
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())?;
            Ok(())
        }
    }
}

fn out_path(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.output.path.as_ref().map(PathBuf::from)
}

/// `<path>` with `suffix` appended to the full file name.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::from("t,re_a,im_a,re_m,im_m,p0r,p1r,log_scale,tracking_fidelity\n");
    for i in 0..traj.len() {
        let st = &traj.states[i];
        let fid = traj
            .tracking_fidelity
            .as_ref()
            .and_then(|f| f[i])
            .unwrap_or(f64::NAN);
        let row = [
            traj.times[i],
            st.a.re,
            st.a.im,
            st.m.re,
            st.m.im,
            traj.p0r[i],
            traj.p1r[i],
            traj.log_scale[i],
            fid,
        ];
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        writeln!(s, "{}", cells.join(",")).unwrap();
    }
    s
}

fn simulate(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let mut traj = evolve(
        &cfg.params,
        cfg.protocol,
        &cfg.errors,
        StateVector2::photon(),
        &cfg.integrator,
    )?;
    traj.tracking_fidelity = Some(tracking_fidelity(&cfg.params, cfg.protocol, &traj)?);
    let content = match cfg.output.format {
        OutputFormat::Csv => trajectory_csv(&traj),
        OutputFormat::Json => to_json(&traj),
    };
    write_output(out_path(&cfg).as_deref(), &content)
}

pub fn grid_csv(grid: &SweepGrid) -> String {
    let mut s = String::new();
    match grid.y_axis {
        None => {
            s.push_str("x,probability\n");
            for (ix, &x) in grid.x_values.iter().enumerate() {
                writeln!(s, "{},{}", num(x), num(grid.get(ix, 0))).unwrap();
            }
        }
        Some(y_axis) => {
            writeln!(
                s,
                "{},{},probability",
                grid.x_axis.as_str(),
                y_axis.as_str()
            )
            .unwrap();
            for (ix, &x) in grid.x_values.iter().enumerate() {
                for (iy, &y) in grid.y_values.iter().enumerate() {
                    writeln!(s, "{},{},{}", num(x), num(y), num(grid.get(ix, iy))).unwrap();
                }
            }
        }
    }
    s
}

pub fn failures_csv(grid: &SweepGrid) -> String {
    let mut s = String::from("index,x,y,message\n");
    let ny = grid.ny();
    for f in &grid.failures {
        let x = grid.x_values[f.index / ny];
        let y = grid.y_values.get(f.index % ny).copied().unwrap_or(f64::NAN);
        writeln!(
            s,
            "{},{},{},\"{}\"",
            f.index,
            num(x),
            num(y),
            f.message.replace('"', "\"\"")
        )
        .unwrap();
    }
    s
}

fn run_sweep(cli: &Cli, threads_env: Option<&str>) -> Result<()> {
    let cfg = load_config(cli)?;
    let spec = cfg.sweep_spec()?;
    let jobs = resolve_jobs(cli.jobs, threads_env)?;
    let grid = sweep(&spec, jobs)?;
    let content = match cfg.output.format {
        OutputFormat::Csv => grid_csv(&grid),
        OutputFormat::Json => to_json(&grid),
    };
    let path = out_path(&cfg);
    write_output(path.as_deref(), &content)?;
    match &path {
        Some(p) => {
            let side = sidecar(p, ".errors");
            if grid.failures.is_empty() {
                if side.exists() {
                    fs::remove_file(&side)
                        .map_err(|e| Error::Io(format!("{}: {e}", side.display())))?;
                }
            } else {
                write_output(Some(&side), &failures_csv(&grid))?;
            }
        }
        None if !grid.failures.is_empty() => eprint!("{}", failures_csv(&grid)),
        None => {}
    }
    if !grid.failures.is_empty() {
        eprintln!(
            "warning: {} of {} cells failed",
            grid.failures.len(),
            grid.values.len()
        );
    }
    Ok(())
}

pub fn phase_csv(pd: &PhaseDiagram) -> String {
    let mut s = String::from("g_over_kc,km_over_kc,symmetry_code,stability_code\n");
    for (ig, &g) in pd.g_over_kc.iter().enumerate() {
        for (ik, &k) in pd.km_over_kc.iter().enumerate() {
            let c = pd.get(ig, ik);
            writeln!(
                s,
                "{},{},{},{}",
                num(g),
                num(k),
                c.symmetry.code(),
                c.stability.code()
            )
            .unwrap();
        }
    }
    s
}

pub fn ep_locus_csv(locus: &[(f64, f64)]) -> String {
    let mut s = String::from("km_over_kc,g_over_kc\n");
    for &(k, g) in locus {
        writeln!(s, "{},{}", num(k), num(g)).unwrap();
    }
    s
}

/// EP-locus file written next to the phase-diagram file.
pub fn ep_locus_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}.ep_locus.{ext}"))
}

fn run_phase_diagram(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let path = out_path(&cfg)
        .ok_or_else(|| Error::Config("phase-diagram needs --out for its two files".into()))?;
    let pd = phase_diagram(&cfg.phase_diagram.unwrap_or_default())?;
    let locus = ep_locus(&pd.km_over_kc);
    let (grid, line) = match cfg.output.format {
        OutputFormat::Csv => (phase_csv(&pd), ep_locus_csv(&locus)),
        OutputFormat::Json => (to_json(&pd), to_json(&locus)),
    };
    write_output(Some(&path), &grid)?;
    write_output(Some(&ep_locus_path(&path)), &line)
}

pub fn calibration_csv(report: &CalibrationReport) -> String {
    let mut s = String::from("preset,protocol,time_convention,diagonal_sign,p1r,target,deviation,within_tolerance,error\n");
    let opt = |v: Option<f64>| v.map_or_else(String::new, num);
    for e in &report.entries {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},\"{}\"",
            e.preset,
            e.protocol,
            e.time_convention.as_str(),
            e.diagonal_sign,
            opt(e.p1r),
            opt(e.target),
            opt(e.deviation),
            e.within_tolerance
                .map_or_else(String::new, |b| b.to_string()),
            e.error.as_deref().unwrap_or("").replace('"', "\"\"")
        )
        .unwrap();
    }
    s
}

fn run_calibrate(cli: &Cli, threads_env: Option<&str>) -> Result<()> {
    if cli.preset.is_some() {
        return Err(Error::Config(
            "calibrate always runs every preset; drop --preset".into(),
        ));
    }
    let base = base_config(None, cli.config.as_deref())?;
    let opts = CalibrationOptions {
        time_conventions: cli.time_convention.unwrap_or(TimeArg::Both).conventions(),
        diagonal_signs: cli
            .diagonal_sign
            .map_or_else(|| DiagonalSign::ALL.to_vec(), |s| vec![s.into()]),
        integrator: base.integrator,
        jobs: resolve_jobs(cli.jobs, threads_env)?,
    };
    let report = calibrate(&opts)?;
    let format = cli.format.map_or(OutputFormat::Json, Into::into);
    let content = match format {
        OutputFormat::Json => to_json(&report),
        OutputFormat::Csv => calibration_csv(&report),
    };
    write_output(cli.out.as_deref(), &content)
}

#[derive(Serialize)]
struct PresetListing<'a> {
    name: &'a str,
    description: &'a str,
    expected: Option<&'a crate::presets::ExpectedEndpoint>,
    config: RunConfig,
}

fn list_presets(cli: &Cli) -> Result<()> {
    let format = cli.format.map_or(OutputFormat::Csv, Into::into);
    let content = match format {
        OutputFormat::Json => {
            let listing: Vec<PresetListing> = preset_registry()
                .iter()
                .map(|p| PresetListing {
                    name: &p.name,
                    description: &p.description,
                    expected: p.expected.as_ref(),
                    config: p.to_run_config(),
                })
                .collect();
            to_json(&listing)
        }
        OutputFormat::Csv => {
            let mut s = String::from("name,protocol,g_m,kappa_c,kappa_m,t_start,t_end,target\n");
            for p in preset_registry().iter() {
                let target = p
                    .expected
                    .as_ref()
                    .map_or_else(String::new, |e| e.value.to_string());
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    p.name,
                    p.protocol,
                    p.params.g_m,
                    p.params.kappa_c,
                    p.params.kappa_m,
                    p.time_span[0],
                    p.time_span[1],
                    target
                )
                .unwrap();
            }
            s
        }
    };
    write_output(cli.out.as_deref(), &content)
}
