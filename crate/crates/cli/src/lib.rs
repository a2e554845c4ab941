//! `tbp` command-line tool: threshold breakdown points, m-sensitivity
//! curves, test audits, bootstrap bands and population curves.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod ingest;
pub mod output;
pub mod replicate;
pub mod settings;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Ctx;
use crate::error::{CliError, CliResult};
use crate::output::write_text;
use crate::settings::Settings;

#[derive(Debug, Parser)]
#[command(
    name = "tbp",
    version,
    about = "Threshold breakdown and m-sensitivity analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Opts,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Location, scale and two-stage fits.
    Fit,
    /// m-sensitivity curve.
    Sensitivity,
    /// Threshold breakdown points over an eta grid.
    Breakdown,
    /// Breakdown bracket of a test decision.
    TestAudit,
    /// Weighted bootstrap of a sensitivity or breakdown point.
    Bootstrap,
    /// Population maxbias curve and asymptotic variances.
    Population,
    /// PIT uniformity check of the bootstrap.
    Pit,
    /// Brute-force comparison on small samples.
    Oracle,
    /// Regenerate one of the simulation experiments.
    Replicate {
        /// Experiment id (see `tbp replicate list`).
        id: String,
    },
}

/// Every option can also be given in the `--config` file as `key = value`.
#[derive(Debug, Args, Default)]
pub struct Opts {
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub input: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub input2: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub column: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub group_col: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub group_order: Option<String>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub mad_normalize: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub loss: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub efficiency: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alphas: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub m_grid: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eta_grid: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub side: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub test: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sided: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta0: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub sigma0: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub estimator: Option<String>,
    #[arg(long = "boot-B", global = true, allow_hyphen_values = true)]
    pub boot_b: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ci_method: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ci_levels: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub seed: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub format: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub out: Option<String>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub oracle: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub threads: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub model: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps_max: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub step: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub n: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub outer: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub preset: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub reps: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub budget: Option<String>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub a_grid: Option<String>,
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub envelope: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub bounds: Option<String>,
}

impl Opts {
    fn to_settings(&self) -> Settings {
        let mut s = Settings::default();
        let pairs: [(&str, &Option<String>); 41] = [
            ("input", &self.input),
            ("input2", &self.input2),
            ("column", &self.column),
            ("group_col", &self.group_col),
            ("group_order", &self.group_order),
            ("mad_normalize", &self.mad_normalize),
            ("loss", &self.loss),
            ("delta", &self.delta),
            ("efficiency", &self.efficiency),
            ("alpha", &self.alpha),
            ("alphas", &self.alphas),
            ("m", &self.m),
            ("m_grid", &self.m_grid),
            ("eta", &self.eta),
            ("eta_grid", &self.eta_grid),
            ("side", &self.side),
            ("test", &self.test),
            ("sided", &self.sided),
            ("theta0", &self.theta0),
            ("sigma0", &self.sigma0),
            ("estimator", &self.estimator),
            ("boot_b", &self.boot_b),
            ("ci_method", &self.ci_method),
            ("ci_levels", &self.ci_levels),
            ("seed", &self.seed),
            ("format", &self.format),
            ("out", &self.out),
            ("oracle", &self.oracle),
            ("threads", &self.threads),
            ("model", &self.model),
            ("eps", &self.eps),
            ("eps_max", &self.eps_max),
            ("step", &self.step),
            ("n", &self.n),
            ("outer", &self.outer),
            ("preset", &self.preset),
            ("reps", &self.reps),
            ("budget", &self.budget),
            ("a_grid", &self.a_grid),
            ("envelope", &self.envelope),
            ("bounds", &self.bounds),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, v.clone());
            }
        }
        s
    }
}

/// Config file (if any) overlaid with command-line flags.
pub fn resolve_settings(opts: &Opts) -> CliResult<Settings> {
    let mut s = match &opts.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    s.overlay(&opts.to_settings());
    Ok(s)
}

pub fn execute(cli: Cli) -> CliResult<()> {
    let settings = resolve_settings(&cli.opts)?;
    let ctx = Ctx::new(settings);
    let threads: usize = ctx.s.get_or("threads", 0usize)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &ctx))
}

fn dispatch(cmd: &Command, ctx: &Ctx) -> CliResult<()> {
    let report = match cmd {
        Command::Fit => commands::fit(ctx)?,
        Command::Sensitivity => commands::sensitivity(ctx)?,
        Command::Breakdown => commands::breakdown(ctx)?,
        Command::TestAudit => commands::test_audit(ctx)?,
        Command::Bootstrap => commands::bootstrap(ctx)?,
        Command::Population => commands::population(ctx)?,
        Command::Pit => commands::pit(ctx)?,
        Command::Oracle => commands::oracle(ctx)?,
        Command::Replicate { id } => return replicate::run_cli(id, ctx),
    };
    let text = report.render(ctx.format()?);
    write_text(ctx.out().as_deref(), &text)
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            let _ = e.print();
            std::process::exit(0)
        }
        _ => CliError::Config(e.to_string()),
    })?;
    execute(cli)
}
