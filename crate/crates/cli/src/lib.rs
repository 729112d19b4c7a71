//! `spadfusion`: render scenes, simulate SPAD/CCD measurement pairs,
//! reconstruct high-resolution transient cubes, and analyze the results.
//!
//! Every command writes a manifest next to its primary output; `replay`
//! re-runs a command from one.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod files;
mod geometry;
mod manifest;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    Analysis, AnalyzeArgs, AnalyzeJob, AnalyzeMode, EvalArgs, EvalJob, Job, ReconstructArgs, ReconstructJob,
    RenderArgs, RenderJob, SimulateArgs, SimulateJob,
};
pub use error::{CliError, CliResult};
pub use geometry::GeometrySpec;
pub use manifest::{manifest_path, Manifest};

#[derive(Debug, Parser)]
#[command(name = "spadfusion", version, about = "SPAD/CCD transient image fusion pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a ground-truth cube from a scene file.
    Render(RenderArgs),
    /// Simulate a noisy SPAD measurement and CCD image from a ground-truth cube.
    Simulate(SimulateArgs),
    /// Reconstruct a high-resolution cube from a SPAD measurement and a CCD image.
    Reconstruct(ReconstructArgs),
    /// Extract a depth or lifetime map from a cube.
    Analyze(AnalyzeArgs),
    /// Compare a reconstruction against the ground truth.
    Eval(EvalArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let (job, threads) = match cli.command {
        Command::Render(a) => (Job::render(&a)?, a.common.threads),
        Command::Simulate(a) => (Job::simulate(&a)?, a.common.threads),
        Command::Reconstruct(a) => (Job::reconstruct(&a)?, a.common.threads),
        Command::Analyze(a) => (Job::analyze(&a)?, a.common.threads),
        Command::Eval(a) => (Job::eval(&a)?, a.common.threads),
        Command::Replay(a) => {
            let manifest = Manifest::parse(&files::read_text(&a.manifest)?)?;
            let threads = a.common.threads.or(manifest.threads);
            (Job::from_manifest(&manifest)?, threads)
        }
    };
    execute(&job, threads).map(|_| ())
}

/// Runs a resolved job on a pool of `threads` workers and writes its manifest.
pub fn execute(job: &Job, threads: Option<usize>) -> CliResult<Manifest> {
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be ≥ 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    let start = Instant::now();
    let manifest = pool.install(|| job.run())?;
    let manifest = Manifest { threads, wall_time: start.elapsed(), ..manifest };
    if let Some(primary) = job.primary_output() {
        manifest.write(&manifest_path(primary))?;
    }
    Ok(manifest)
}
