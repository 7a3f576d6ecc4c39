//! `qpnls`: configuration-driven runner for the verification suites.
//!
//! Every subcommand reads one JSON config (all sections optional), writes its
//! artifacts plus a `manifest.json` with the full config echo into the output
//! directory, and prints the suite report to stdout.  Exit codes: 0 success,
//! 1 I/O failure, 2 config/schema violation, 3 numerical divergence,
//! 4 domain-precondition failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpnls_core::config::{Resolved, RunConfig};
use qpnls_core::error::{Error, Result};
use qpnls_core::experiments;
use qpnls_core::io::Manifest;

#[derive(Parser)]
#[command(
    name = "qpnls",
    version,
    about = "Verification suites for weakly nonlinear Schrödinger dynamics \
             with random quasi-periodic data"
)]
struct Cli {
    /// JSON configuration; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Artifact directory, created if missing (default qpnls-out/<suite>).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Root seed override for sampling.root_seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker thread count.  Results are identical for any value; this only
    /// trades wall-clock time.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Kolmogorov-Smirnov check of the squared-height law of the free field.
    DistCheck,
    /// ε·log P curve for the free flow with rate and upper bound.
    LinearLdp,
    /// Chernoff domination suite for box-energy tails.
    Chernoff,
    /// Branch-set identities, counts, and majorant boundedness.
    TreeCheck {
        /// Expansion depth k.
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// One cubic-flow trajectory: mass, sup, decay constant, Duhamel gap.
    Simulate,
    /// Paired linear/nonlinear ε·log P curves at a horizon fraction.
    NonlinearLdp,
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::DistCheck => "dist-check",
            Cmd::LinearLdp => "linear-ldp",
            Cmd::Chernoff => "chernoff",
            Cmd::TreeCheck { .. } => "tree-check",
            Cmd::Simulate => "simulate",
            Cmd::NonlinearLdp => "nonlinear-ldp",
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.sampling.root_seed = seed;
    }
    let resolved: Resolved = config.resolve()?;

    let out = match (&cli.out, &config.output.dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => PathBuf::from(dir),
        (None, None) => PathBuf::from("qpnls-out").join(cli.cmd.name()),
    };
    std::fs::create_dir_all(&out)?;
    Manifest::new(cli.cmd.name(), &config, cli.threads).write(&out.join("manifest.json"))?;

    let body = || match &cli.cmd {
        Cmd::DistCheck => experiments::run_dist_check(&resolved, &out),
        Cmd::LinearLdp => experiments::run_linear_ldp(&resolved, &out),
        Cmd::Chernoff => experiments::run_chernoff(&resolved, &out),
        Cmd::TreeCheck { k } => experiments::run_tree_check(&resolved, &out, *k),
        Cmd::Simulate => experiments::run_simulate(&resolved, &out),
        Cmd::NonlinearLdp => experiments::run_nonlinear_ldp(&resolved, &out),
    };
    let report = match cli.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("threads: {e}")))?
            .install(body),
        None => body(),
    }?;

    println!(
        "{}",
        serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Config(format!("report print failed: {e}")))?
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
