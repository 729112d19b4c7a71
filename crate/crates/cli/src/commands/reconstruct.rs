use std::path::{Path, PathBuf};

use clap::Args;
use spadfusion_core::config::KeyValues;
use spadfusion_core::solver::{self, CcdNormalization, Preset, SolveReport};
use spadfusion_core::{Error, Image64, Measurement64, SolverConfig};

use super::required_path;
use crate::error::{file_err, in_file, CliError, CliResult};
use crate::files;
use crate::geometry::GeometrySpec;
use crate::manifest::Manifest;
use crate::Common;

#[derive(Debug, Clone, Args)]
pub struct ReconstructArgs {
    /// SPAD measurement (TRCB).
    #[arg(long)]
    pub spad: PathBuf,
    /// CCD image (single-bin TRCB).
    #[arg(long)]
    pub ccd: PathBuf,
    /// Geometry, `model_dead_pixels`, `ccd_normalization`, `preset` and solver keys.
    #[arg(long)]
    pub config: PathBuf,
    /// Weight preset; config keys override individual weights.
    #[arg(long)]
    pub preset: Option<String>,
    /// Dead-pixel CSV (default `<spad>.dead.csv` when present).
    #[arg(long)]
    pub dead: Option<PathBuf>,
    /// Reconstructed cube (TRCB); the report goes to `<out>.report.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone)]
pub struct ReconstructJob {
    pub spad: PathBuf,
    pub ccd: PathBuf,
    pub dead: Option<PathBuf>,
    pub geometry: GeometrySpec,
    /// Feed the measurement's dead pixels into the forward model.
    pub model_dead_pixels: bool,
    pub ccd_normalization: CcdNormalization,
    pub preset: Option<Preset>,
    pub solver: SolverConfig,
    pub out: PathBuf,
}

fn parse_preset(value: &str) -> CliResult<Preset> {
    Preset::parse(value).ok_or_else(|| CliError::Usage(format!("preset must be `lidar` or `flim`, got `{value}`")))
}

fn resolve(kv: &mut KeyValues, flag_preset: Option<&str>) -> CliResult<ReconstructJobParts> {
    let geometry = GeometrySpec::from_key_values(kv)?;
    let model_dead_pixels = kv.optional("model_dead_pixels")?.unwrap_or(true);
    let ccd_normalization = match kv.take_raw("ccd_normalization") {
        None => CcdNormalization::default(),
        Some((value, line)) => CcdNormalization::parse(&value).ok_or_else(|| Error::Config {
            line,
            message: format!("ccd_normalization must be `none`, `match_sum` or `efficiency`, got `{value}`"),
        })?,
    };
    let file_preset = kv.take_raw("preset");
    let preset =
        match (flag_preset, file_preset) {
            (Some(v), _) => Some(parse_preset(v)?),
            (None, Some((v, line))) => Some(Preset::parse(&v).ok_or_else(|| Error::Config {
                line,
                message: format!("preset must be `lidar` or `flim`, got `{v}`"),
            })?),
            (None, None) => None,
        };
    let base = preset.map(SolverConfig::preset).unwrap_or_default();
    let solver = base.update_from(kv)?;
    Ok(ReconstructJobParts { geometry, model_dead_pixels, ccd_normalization, preset, solver })
}

struct ReconstructJobParts {
    geometry: GeometrySpec,
    model_dead_pixels: bool,
    ccd_normalization: CcdNormalization,
    preset: Option<Preset>,
    solver: SolverConfig,
}

impl ReconstructJob {
    fn assemble(parts: ReconstructJobParts, spad: &Path, ccd: &Path, dead: Option<&Path>, out: &Path) -> Self {
        Self {
            spad: spad.to_path_buf(),
            ccd: ccd.to_path_buf(),
            dead: dead.map(Path::to_path_buf),
            geometry: parts.geometry,
            model_dead_pixels: parts.model_dead_pixels,
            ccd_normalization: parts.ccd_normalization,
            preset: parts.preset,
            solver: parts.solver,
            out: out.to_path_buf(),
        }
    }

    pub fn from_args(args: &ReconstructArgs) -> CliResult<Self> {
        let mut kv = files::read_config(&args.config)?;
        let parts = resolve(&mut kv, args.preset.as_deref()).map_err(in_file(&args.config))?;
        kv.finish().map_err(file_err(&args.config))?;
        Ok(Self::assemble(parts, &args.spad, &args.ccd, args.dead.as_deref(), &args.out))
    }

    pub fn from_manifest(m: &Manifest) -> CliResult<Self> {
        let mut kv = m.config_values()?;
        let parts = resolve(&mut kv, None)?;
        kv.finish()?;
        let (spad, ccd) = (required_path(m, "in", "spad")?, required_path(m, "in", "ccd")?);
        Ok(Self::assemble(parts, spad, ccd, m.path_of("in", "dead"), required_path(m, "out", "cube")?))
    }

    pub fn report_path(&self) -> PathBuf {
        self.out.with_extension("report.csv")
    }

    pub fn trace_path(&self) -> PathBuf {
        self.out.with_extension("trace.csv")
    }

    pub fn run(&self) -> CliResult<Manifest> {
        let (d, dead_used) = files::read_measurement(&self.spad, self.dead.as_deref())?;
        let c = files::read_image(&self.ccd)?;
        let mut geometry = self.geometry.build(c.height(), c.width())?;
        if self.model_dead_pixels {
            geometry = geometry.with_dead_pixels(d.dead_pixels().clone())?;
        }
        let d: Measurement64 = d.cast();
        let c: Image64 = c.cast();
        let c = match self.ccd_normalization {
            CcdNormalization::None => c,
            CcdNormalization::MatchSum => solver::normalize_ccd(&c, &d)?,
            CcdNormalization::Efficiency => solver::normalize_ccd_to_geometry(&c, &d, &geometry)?,
        };

        let (cube, report) = solver::reconstruct(&d, &c, &geometry, &self.solver)?;
        let cube = cube.cast::<f32>();
        files::write_cube(&cube, &self.out)?;

        // objective of what was written, not of the in-memory f64 iterate
        let terms = solver::objective(&cube.cast::<f64>(), &d, &c, &geometry, &self.solver)?;
        if !terms.total(&self.solver).is_finite() {
            return Err(Error::Numerical("reconstruction diverged".into()).into());
        }
        files::write_text(&self.report_path(), &report_csv(&report, &terms, &self.solver))?;
        if !report.converged {
            eprintln!(
                "warning: not converged after {} iterations (relative change {:.3e})",
                report.iterations, report.rel_change
            );
        }

        let mut m = Manifest::new("reconstruct").input("spad", &self.spad).input("ccd", &self.ccd);
        if let Some(dead) = &dead_used {
            m = m.input("dead", dead);
        }
        m = m.output("cube", &self.out).output("report", &self.report_path());
        if self.solver.record_trace {
            files::write_text(&self.trace_path(), &trace_csv(&report.trace))?;
            m = m.output("trace", &self.trace_path());
        }
        m.config = self.geometry.to_entries();
        m.config.push(("model_dead_pixels".into(), self.model_dead_pixels.to_string()));
        m.config.push(("ccd_normalization".into(), self.ccd_normalization.name().into()));
        if let Some(p) = self.preset {
            m.config.push(("preset".into(), preset_name(p).into()));
        }
        m.config.extend(self.solver.to_entries());
        Ok(m)
    }
}

fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Lidar => "lidar",
        Preset::Flim => "flim",
    }
}

fn report_csv(report: &SolveReport, terms: &solver::ObjectiveTerms, config: &SolverConfig) -> String {
    let w = terms.weighted(config);
    files::metrics_csv(&[
        ("converged", report.converged.to_string()),
        ("iterations", report.iterations.to_string()),
        ("objective", format!("{:e}", terms.total(config))),
        ("initial_objective", format!("{:e}", report.initial_objective)),
        ("data_term", format!("{:e}", w[0])),
        ("ccd_term", format!("{:e}", w[1])),
        ("histogram_term", format!("{:e}", w[2])),
        ("l1_term", format!("{:e}", w[3])),
        ("tv_term", format!("{:e}", w[4])),
        ("rel_change", format!("{:e}", report.rel_change)),
        ("operator_norm", format!("{:e}", report.operator_norm)),
        ("primal_step", format!("{:e}", report.primal_step)),
        ("dual_step", format!("{:e}", report.dual_step)),
    ])
}

fn trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("iteration,objective\n");
    for (k, v) in trace.iter().enumerate() {
        out.push_str(&format!("{},{v:e}\n", k + 1));
    }
    out
}
