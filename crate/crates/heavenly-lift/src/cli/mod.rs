//! Command-line driver. Exit codes: 0 pass, 1 tolerance failure, 2 usage or
//! configuration error, 3 invariance direction found.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use commands::{error_code, Outcome, EXIT_USAGE};
use config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML run configuration
    #[arg(long)]
    spec: PathBuf,
    /// number of sample points (noninv: per degree)
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads (0 = all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// PDE and constraint residuals, Bäcklund compatibility, Legendre round trip
    Verify(Common),
    /// metrics, co-frames, Ricci-flatness, closed-form curvature, frame two-forms
    Curvature {
        #[command(flatten)]
        common: Common,
        /// points per axis of a regular grid (thinned to at most 10⁴ rows)
        #[arg(long)]
        grid: Option<usize>,
    },
    /// sampled-rank test for point symmetries
    Noninv(Common),
}

#[derive(Debug, Parser)]
#[command(name = "heavenly-lift", version, about = "Verification engine for lifted Boyer-Finley solutions of the hyperbolic complex Monge-Ampère equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())
        }
    }
}

fn execute(which: &str, cfg: &RunConfig) -> crate::Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match which {
        "verify" => commands::cmd_verify(cfg),
        "curvature" => commands::cmd_curvature(cfg),
        _ => commands::cmd_noninv(cfg),
    })
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let (which, common, grid) = match cli.command {
        Command::Verify(c) => ("verify", c, None),
        Command::Curvature { common, grid } => ("curvature", common, grid),
        Command::Noninv(c) => ("noninv", c, None),
    };
    let mut cfg = match RunConfig::load(&common.spec) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Some(n) = common.points {
        cfg.n_points = Some(n);
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    if let Some(g) = grid {
        cfg.grid = g;
    }
    let out = match execute(which, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return error_code(&e);
        }
    };
    let json = report::to_json(&out.json);
    let primary = match common.format {
        Format::Json => &json,
        Format::Csv => &out.csv,
    };
    let mut writes = vec![(common.out.as_deref(), primary.as_str())];
    if let Some(p) = cfg.json_out.as_deref() {
        writes.push((Some(p), json.as_str()));
    }
    if let Some(p) = cfg.csv_out.as_deref() {
        writes.push((Some(p), out.csv.as_str()));
    }
    for (path, text) in writes {
        if let Err(e) = emit(path, text) {
            eprintln!("error: cannot write output: {e}");
            return EXIT_USAGE;
        }
    }
    eprintln!("{}", out.summary);
    out.code
}
