mod analyze;
mod eval;
mod reconstruct;
mod render;
mod simulate;

use std::path::Path;

pub use analyze::{Analysis, AnalyzeArgs, AnalyzeJob, AnalyzeMode};
pub use eval::{EvalArgs, EvalJob};
pub use reconstruct::{ReconstructArgs, ReconstructJob};
pub use render::{RenderArgs, RenderJob};
pub use simulate::{SimulateArgs, SimulateJob};

use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

/// A fully resolved command, ready to run.
#[derive(Debug, Clone)]
pub enum Job {
    Render(RenderJob),
    Simulate(SimulateJob),
    Reconstruct(ReconstructJob),
    Analyze(AnalyzeJob),
    Eval(EvalJob),
}

impl Job {
    pub fn render(args: &RenderArgs) -> CliResult<Self> {
        RenderJob::from_args(args).map(Job::Render)
    }

    pub fn simulate(args: &SimulateArgs) -> CliResult<Self> {
        SimulateJob::from_args(args).map(Job::Simulate)
    }

    pub fn reconstruct(args: &ReconstructArgs) -> CliResult<Self> {
        ReconstructJob::from_args(args).map(Job::Reconstruct)
    }

    pub fn analyze(args: &AnalyzeArgs) -> CliResult<Self> {
        AnalyzeJob::from_args(args).map(Job::Analyze)
    }

    pub fn eval(args: &EvalArgs) -> CliResult<Self> {
        EvalJob::from_args(args).map(Job::Eval)
    }

    pub fn from_manifest(m: &Manifest) -> CliResult<Self> {
        match m.command.as_str() {
            "render" => RenderJob::from_manifest(m).map(Job::Render),
            "simulate" => SimulateJob::from_manifest(m).map(Job::Simulate),
            "reconstruct" => ReconstructJob::from_manifest(m).map(Job::Reconstruct),
            "analyze" => AnalyzeJob::from_manifest(m).map(Job::Analyze),
            "eval" => EvalJob::from_manifest(m).map(Job::Eval),
            other => Err(CliError::Usage(format!("manifest names unknown command `{other}`"))),
        }
    }

    /// Runs the command; the returned manifest lacks thread count and wall time.
    pub fn run(&self) -> CliResult<Manifest> {
        match self {
            Job::Render(j) => j.run(),
            Job::Simulate(j) => j.run(),
            Job::Reconstruct(j) => j.run(),
            Job::Analyze(j) => j.run(),
            Job::Eval(j) => j.run(),
        }
    }

    /// The output the manifest is written next to, if any.
    pub fn primary_output(&self) -> Option<&Path> {
        match self {
            Job::Render(j) => Some(&j.out),
            Job::Simulate(j) => Some(&j.out),
            Job::Reconstruct(j) => Some(&j.out),
            Job::Analyze(j) => Some(&j.out),
            Job::Eval(j) => j.out.as_deref(),
        }
    }
}

fn required_path<'a>(m: &'a Manifest, kind: &str, name: &str) -> CliResult<&'a Path> {
    m.path_of(kind, name).ok_or_else(|| CliError::Usage(format!("manifest for `{}` lacks `{kind}.{name}`", m.command)))
}
