//! Command-line driver: SNR sweeps with or without precoding, per-group
//! experiments, self-tests and timing reports.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use precoder_core::Pairing;

use crate::commands::{gnuplot_script, run_sweep, selftest, sweep_csv, timing, trajectory_csv};
use crate::config::{parse_grid, PrecoderMode, SweepConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "precoder-forge",
    version,
    about = "Mutual information and linear precoder design for MIMO links with QAM inputs",
    after_help = "SNR_b is the SNR per information bit: SNR = SNR_b * log2(M) and sigma^2 = 1/SNR. \
                  Both columns are written to every CSV.\n\
                  Exit codes: 1 usage, 2 numerical, 3 i/o. \
                  PRECODER_FORGE_BUDGET overrides the per-evaluation term cap."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MI over an SNR_b grid, written as CSV.
    Sweep(SweepArgs),
    /// Optimal precoder at each grid point; like `sweep --precoder optimal`.
    Optimize {
        #[command(flatten)]
        args: SweepArgs,
        /// Write the optimizer trajectories here.
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Per-group precoding at each grid point; like `sweep --precoder pgp`.
    Pgp {
        #[command(flatten)]
        args: SweepArgs,
        /// Write the group plan used for the first channel here (JSON).
        #[arg(long)]
        plan_out: Option<PathBuf>,
    },
    /// Quadrature, MI, gradient and cost-model checks; exit 0 iff all pass.
    Selftest {
        #[arg(long, default_value_t = 3)]
        gh_order: usize,
        #[arg(long, default_value_t = 20_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Mean wall time of one MI and one gradient evaluation.
    Timing {
        #[arg(long = "mod", default_value_t = 16)]
        modulation: usize,
        #[arg(long, default_value_t = 2)]
        nt: usize,
        #[arg(long, default_value_t = 2)]
        nr: usize,
        #[arg(long, default_value_t = 3)]
        gh_order: usize,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Sweep settings given on the command line; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    /// JSON config file with the same keys as the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// h1, h2, h4x4, gaussian:NRxNT or kronecker:NRxNT:RHO_R:RHO_T.
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub channel_file: Option<PathBuf>,
    /// QAM order: 4, 16, 32 or 64.
    #[arg(long = "mod")]
    pub modulation: Option<usize>,
    /// SNR_b grid in dB: start:stop:step or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub snrb: Option<String>,
    #[arg(long, value_enum)]
    pub precoder: Option<PrecoderMode>,
    #[arg(long)]
    pub gh_order: Option<usize>,
    /// Report Monte-Carlo MI with this many samples instead of quadrature.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Group size for per-group precoding.
    #[arg(long)]
    pub groups: Option<usize>,
    /// consecutive or max_min.
    #[arg(long)]
    pub pairing: Option<String>,
    #[arg(long)]
    pub plan_file: Option<PathBuf>,
    /// Channel draws for random ensembles.
    #[arg(long)]
    pub draws: Option<usize>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fill the wall_ms column (makes output time dependent).
    #[arg(long)]
    pub record_time: bool,
    /// Also write a gnuplot script for the CSV (requires --out).
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

impl SweepArgs {
    pub fn resolve(&self) -> CliResult<SweepConfig> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::load(path)?,
            None => SweepConfig::default(),
        };
        if let Some(v) = &self.channel {
            cfg.channel = v.clone();
            cfg.channel_file = None;
        }
        if let Some(v) = &self.channel_file {
            cfg.channel_file = Some(v.clone());
        }
        if let Some(v) = self.modulation {
            cfg.modulation = v;
        }
        if let Some(v) = &self.snrb {
            cfg.snr_b_db = parse_grid(v)?;
        }
        if let Some(v) = self.precoder {
            cfg.precoder = v;
        }
        if let Some(v) = self.gh_order {
            cfg.gh_order = v;
        }
        if let Some(v) = self.mc_samples {
            cfg.mc_samples = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.groups {
            cfg.group_size = v;
        }
        if let Some(v) = &self.pairing {
            cfg.pairing = v.parse::<Pairing>()?;
        }
        if let Some(v) = &self.plan_file {
            cfg.plan_file = Some(v.clone());
        }
        if let Some(v) = self.draws {
            cfg.draws = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if self.record_time {
            cfg.record_time = true;
        }
        if self.plot.is_some() && cfg.out.is_none() {
            return Err(CliError::Usage("--plot needs --out".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_file(path: &std::path::Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(cfg: &SweepConfig, text: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match &cfg.out {
        Some(path) => write_file(path, text),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn sweep_command(
    args: &SweepArgs,
    forced: Option<PrecoderMode>,
    stdout: &mut dyn Write,
) -> CliResult<(SweepConfig, Vec<commands::PointResult>)> {
    let mut cfg = args.resolve()?;
    if let Some(mode) = forced {
        cfg.precoder = mode;
    }
    let points = run_sweep(&cfg)?;
    emit(&cfg, &sweep_csv(&points), stdout)?;
    if let (Some(plot), Some(out)) = (&args.plot, &cfg.out) {
        write_file(plot, &gnuplot_script(out, &cfg))?;
    }
    Ok((cfg, points))
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    match cli.command {
        Command::Sweep(args) => {
            sweep_command(&args, None, stdout)?;
        }
        Command::Optimize { args, trajectory } => {
            let (_, points) = sweep_command(&args, Some(PrecoderMode::Optimal), stdout)?;
            if let Some(path) = trajectory {
                write_file(&path, &trajectory_csv(&points))?;
            }
        }
        Command::Pgp { args, plan_out } => {
            let (_, points) = sweep_command(&args, Some(PrecoderMode::Pgp), stdout)?;
            if let (Some(path), Some(plan)) = (plan_out, points.first().and_then(|p| p.plan.as_ref())) {
                write_file(&path, &(plan.to_json() + "\n"))?;
            }
        }
        Command::Selftest {
            gh_order,
            mc_samples,
            seed,
        } => {
            let checks = selftest(gh_order, mc_samples, seed)?;
            for c in &checks {
                writeln!(stdout, "{}", c.line())?;
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            writeln!(stdout, "{} checks, {} failed", checks.len(), failed)?;
            if failed > 0 {
                return Ok(2);
            }
        }
        Command::Timing {
            modulation,
            nt,
            nr,
            gh_order,
            reps,
            seed,
        } => {
            let t = timing(modulation, nt, nr, gh_order, reps, seed)?;
            writeln!(stdout, "config: M={modulation} n_t={nt} n_r={nr} L={gh_order} reps={reps}")?;
            writeln!(stdout, "mi_gh: {:.6} s per evaluation", t.mi_secs)?;
            writeln!(stdout, "grad_w: {:.6} s per evaluation", t.grad_secs)?;
            writeln!(stdout, "op_count: {}", t.op_count)?;
            writeln!(stdout, "reference (M=16, 2x2, L=3): mi 0.25 s, gradient 0.54 s")?;
        }
    }
    Ok(0)
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
