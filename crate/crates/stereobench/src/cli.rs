//! Argument parsing and dispatch. Exit codes: 0 success, 1 domain error,
//! 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stereobench_core::degrade::Track2Order;
use stereobench_core::selftest::{Fault, SelftestOptions};

use crate::commands::{cmd_budget, cmd_degrade, cmd_ensemble, cmd_score, cmd_selftest, CommandError, DegradeRequest};
use crate::config::{resolve_degradation, DegradeOverrides};
use crate::report::ReportFormat;

#[derive(Debug, Parser)]
#[command(name = "stereobench", version, about = "Stereo super-resolution benchmark toolkit")]
pub struct Cli {
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize low-resolution pairs from a directory of HR pairs.
    Degrade(DegradeArgs),
    /// Score super-resolved pairs against ground truth.
    Score(ScoreArgs),
    /// Count parameters and MACs of a graph and check them against the limits.
    Budget {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Run the embedded invariant suites.
    Selftest {
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// Average parameter files into one.
    Ensemble {
        /// Input parameter file; repeat for each model.
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        /// Comma-separated weights summing to 1 (default: uniform).
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub track: Option<u8>,
    #[arg(long)]
    pub scale: Option<usize>,
    /// Directory of `<id>_L.png` / `<id>_R.png` pairs.
    #[arg(long)]
    pub hr: PathBuf,
    /// Dataset root; pairs go to `<out>/lr_x<scale>_track<track>/`.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON degradation config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub blur_sigma: Option<f64>,
    #[arg(long)]
    pub blur_kernel_size: Option<usize>,
    /// Noise standard deviation on the 0-255 scale.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub jpeg_quality: Option<u32>,
    #[arg(long, hide = true)]
    pub inject_fault: Option<FaultArg>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub sr: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Report file; without it only the summary line is printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    #[value(alias = "markdown")]
    Md,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FaultArg {
    /// Apply Track 2 noise before blur.
    Order,
}

fn run_command(cmd: Command, stdout: &mut (dyn Write + Send)) -> Result<(), CommandError> {
    match cmd {
        Command::Degrade(a) => {
            let flags = DegradeOverrides {
                track: a.track,
                scale: a.scale,
                seed: a.seed,
                blur_sigma: a.blur_sigma,
                blur_kernel_size: a.blur_kernel_size,
                noise_sigma: a.noise_sigma,
                jpeg_quality: a.jpeg_quality,
            };
            let config =
                resolve_degradation(a.config.as_deref(), &flags).map_err(|e| CommandError::Usage(e.to_string()))?;
            let mut req = DegradeRequest::new(a.hr, a.out, config);
            if a.inject_fault.is_some() {
                req.track2_order = Track2Order::NoiseBeforeBlur;
            }
            let outcome = cmd_degrade(&req)?;
            writeln!(
                stdout,
                "wrote {} scenes to {}",
                outcome.manifest.scenes.len(),
                outcome.output_dir.display()
            )
            .ok();
        }
        Command::Score(a) => {
            let format = match a.format {
                FormatArg::Csv => ReportFormat::Csv,
                FormatArg::Md => ReportFormat::Markdown,
            };
            cmd_score(&a.gt, &a.sr, format, a.out.as_deref(), stdout)?;
        }
        Command::Budget { graph } => {
            cmd_budget(&graph, stdout)?;
        }
        Command::Selftest { inject_fault } => {
            let opts = SelftestOptions {
                fault: inject_fault.map(|_| Fault::SwapTrack2Order),
            };
            cmd_selftest(&opts, stdout)?;
        }
        Command::Ensemble { models, weights, out } => {
            let merged = cmd_ensemble(&models, weights.as_deref(), &out)?;
            writeln!(
                stdout,
                "wrote {} tensors ({} values) to {}",
                merged.len(),
                merged.param_count(),
                out.display()
            )
            .ok();
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render();
            if e.use_stderr() {
                write!(stderr, "{text}").ok();
            } else {
                write!(stdout, "{text}").ok();
            }
            return code;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            writeln!(stderr, "error: --threads must be at least 1").ok();
            return 2;
        }
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            writeln!(stderr, "error: {e}").ok();
            return 1;
        }
    };
    match pool.install(|| run_command(cli.command, stdout)) {
        Ok(()) => 0,
        Err(e) => {
            writeln!(stderr, "error: {e}").ok();
            e.exit_code()
        }
    }
}
