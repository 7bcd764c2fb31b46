use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand};
use tsmtl::data::{generate_synthetic, write_portable};

use crate::config::{ConfigBuilder, DatasetSource, ExperimentConfig, KEYS};
use crate::error::{HarnessError, Result};
use crate::experiment::{grid_search, run_sweep, SUMMARY_FILE};
use crate::io::{parse_summary_csv, write_file};
use crate::report::render_report;
use crate::svg::plot_dir;

const BOOL_KEYS: [&str; 5] = ["strict_hours", "validation", "zscore", "serial", "timing"];

/// One `--key value` flag per configuration key.
#[derive(Debug, Clone, Default)]
pub struct Overrides(pub Vec<(&'static str, String)>);

impl FromArgMatches for Overrides {
    fn from_arg_matches(m: &ArgMatches) -> std::result::Result<Self, clap::Error> {
        let mut out = Vec::new();
        for &key in KEYS {
            if let Some(v) = m.get_one::<String>(key) {
                out.push((key, v.clone()));
            }
        }
        Ok(Overrides(out))
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> std::result::Result<(), clap::Error> {
        *self = Self::from_arg_matches(m)?;
        Ok(())
    }
}

impl Args for Overrides {
    fn augment_args(mut cmd: Command) -> Command {
        for &key in KEYS {
            let long: &'static str = Box::leak(key.replace('_', "-").into_boxed_str());
            let mut arg = Arg::new(key)
                .long(long)
                .value_name("VALUE")
                .action(ArgAction::Set)
                .help_heading("Settings (override the config file)");
            if long != key {
                arg = arg.alias(key);
            }
            if BOOL_KEYS.contains(&key) {
                arg = arg.num_args(0..=1).default_missing_value("true");
            }
            cmd = cmd.arg(arg);
        }
        cmd
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut b = match &self.config {
            Some(path) => ConfigBuilder::from_file(path)?,
            None => ConfigBuilder::new(),
        };
        for (k, v) in &self.overrides.0 {
            b.set(k, v)?;
        }
        b.build()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tsmtl",
    version,
    about = "Temporally smooth multi-task regression experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate a synthetic dataset in the portable text format.
    Gen {
        #[arg(long, short = 'o')]
        output: PathBuf,
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Choose the λ's on the validation split (multi-block, ρ = 1).
    Gridsearch {
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Run every (variant, ρ, repeat) and write traces plus summary.csv.
    Sweep {
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Render SVG charts from a sweep output directory.
    Plot {
        #[arg(long, short = 'd')]
        dir: PathBuf,
        /// Defaults to `<dir>/plots`.
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
    /// Print a markdown table of a sweep and save it as report.md.
    Report {
        #[arg(long, short = 'd')]
        dir: PathBuf,
    },
}

pub fn execute(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Gen { output, args } => {
            let config = args.resolve()?;
            let DatasetSource::Synthetic(spec) = &config.source else {
                return Err(HarnessError::Config("gen needs source = synthetic".into()));
            };
            let (data, _) = generate_synthetic::<f64>(spec)?;
            write_portable(&data, Some(spec.seed), &output).map_err(|e| match e {
                tsmtl::Error::Io(source) => HarnessError::Io {
                    path: output.clone(),
                    source,
                },
                other => other.into(),
            })?;
            println!("wrote {}", output.display());
        }
        Cmd::Gridsearch { args } => {
            let config = args.resolve()?;
            let g = grid_search(&config)?;
            let (a, b, c) = g.chosen;
            println!("lambda1 = {a}\nlambda2 = {b}\nlambda3 = {c}");
        }
        Cmd::Sweep { args } => {
            let config = args.resolve()?;
            let sweep = run_sweep(&config)?;
            let (a, b, c) = sweep.lambdas;
            println!(
                "{} runs, lambdas ({a}, {b}, {c}), summary in {}",
                sweep.rows.len(),
                config.out_dir.join(SUMMARY_FILE).display()
            );
        }
        Cmd::Plot { dir, output } => {
            let out = output.unwrap_or_else(|| dir.join("plots"));
            for path in plot_dir(&dir, &out)? {
                println!("{}", path.display());
            }
        }
        Cmd::Report { dir } => {
            let rows = parse_summary_csv(&dir.join(SUMMARY_FILE))?;
            let text = render_report(&rows)?;
            write_file(&dir.join("report.md"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
