use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use spadfusion_core::analysis::{
    depth_map, fit_lifetimes, lifetime_histogram, summarize, FitFlag, Histogram, LifetimeFitConfig, Summary,
    DEFAULT_SNR_THRESHOLD,
};
use spadfusion_core::config::KeyValues;
use spadfusion_core::datacube::{self, MapFormat};
use spadfusion_core::{Error, ScalarMap};

use super::required_path;
use crate::error::{file_err, in_file, io_err, CliError, CliResult};
use crate::files;
use crate::manifest::Manifest;
use crate::Common;

const DEFAULT_HIST_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeMode {
    /// Argmax time bin per pixel.
    Depth,
    /// Mono-exponential lifetime per pixel, ns.
    Flim,
}

impl AnalyzeMode {
    fn name(self) -> &'static str {
        match self {
            AnalyzeMode::Depth => "depth",
            AnalyzeMode::Flim => "flim",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Cube or measurement (TRCB); a `<input>.dead.csv` sidecar marks dead pixels.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: AnalyzeMode,
    /// Optional analysis keys (`snr_threshold` for depth; fit bounds and `hist_bins` for flim).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Depth detection threshold, overriding the config.
    #[arg(long)]
    pub snr_threshold: Option<f64>,
    /// Map output; the format follows the extension unless `--format` is given.
    #[arg(long)]
    pub out: PathBuf,
    /// `csv` or `pgm16`.
    #[arg(long)]
    pub format: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    Depth { snr_threshold: f64 },
    Flim { fit: LifetimeFitConfig, hist_bins: usize },
}

#[derive(Debug, Clone)]
pub struct AnalyzeJob {
    pub input: PathBuf,
    pub analysis: Analysis,
    pub format: MapFormat,
    pub out: PathBuf,
}

fn parse_format(value: &str) -> CliResult<MapFormat> {
    MapFormat::parse(value)
        .ok_or_else(|| CliError::Usage(format!("map format must be `csv` or `pgm16`, got `{value}`")))
}

fn format_name(f: MapFormat) -> &'static str {
    match f {
        MapFormat::Csv => "csv",
        MapFormat::Pgm16 => "pgm16",
    }
}

fn resolve(mode: &str, kv: &mut KeyValues, snr_flag: Option<f64>) -> CliResult<Analysis> {
    match mode {
        "depth" => {
            let snr_threshold = match snr_flag {
                Some(v) => v,
                None => kv.optional("snr_threshold")?.unwrap_or(DEFAULT_SNR_THRESHOLD),
            };
            if !(snr_threshold >= 0.0) {
                return Err(CliError::Usage(format!("snr_threshold must be ≥ 0, got {snr_threshold}")));
            }
            Ok(Analysis::Depth { snr_threshold })
        }
        "flim" => {
            if snr_flag.is_some() {
                return Err(CliError::Usage("--snr-threshold applies to depth mode only".into()));
            }
            let fit = LifetimeFitConfig::default().update_from(kv)?;
            let hist_bins = match kv.take_raw("hist_bins") {
                None => DEFAULT_HIST_BINS,
                Some((v, line)) => match v.parse::<usize>() {
                    Ok(n) if n >= 2 => n,
                    _ => {
                        return Err(Error::Config { line, message: format!("hist_bins must be ≥ 2, got `{v}`") }.into())
                    }
                },
            };
            Ok(Analysis::Flim { fit, hist_bins })
        }
        other => Err(CliError::Usage(format!("mode must be `depth` or `flim`, got `{other}`"))),
    }
}

impl AnalyzeJob {
    pub fn from_args(args: &AnalyzeArgs) -> CliResult<Self> {
        let mut kv = match &args.config {
            Some(p) => files::read_config(p)?,
            None => KeyValues::default(),
        };
        let at = args.config.as_deref().unwrap_or(Path::new("<flags>"));
        let analysis = resolve(args.mode.name(), &mut kv, args.snr_threshold).map_err(in_file(at))?;
        kv.finish().map_err(file_err(at))?;
        let format = match &args.format {
            Some(f) => parse_format(f)?,
            None => match args.out.extension().and_then(|e| e.to_str()) {
                Some("pgm") | Some("pgm16") => MapFormat::Pgm16,
                _ => MapFormat::Csv,
            },
        };
        Ok(Self { input: args.input.clone(), analysis, format, out: args.out.clone() })
    }

    pub fn from_manifest(m: &Manifest) -> CliResult<Self> {
        let mut kv = m.config_values()?;
        let mode: String = kv.required("mode")?;
        let format = parse_format(&kv.required::<String>("format")?)?;
        let analysis = resolve(&mode, &mut kv, None)?;
        kv.finish()?;
        Ok(Self {
            input: required_path(m, "in", "cube")?.to_path_buf(),
            analysis,
            format,
            out: required_path(m, "out", "map")?.to_path_buf(),
        })
    }

    pub fn summary_path(&self) -> PathBuf {
        self.out.with_extension("summary.csv")
    }

    pub fn hist_path(&self) -> PathBuf {
        self.out.with_extension("hist.csv")
    }

    pub fn run(&self) -> CliResult<Manifest> {
        let (meas, sidecar) = files::read_measurement(&self.input, None)?;
        let mut m = Manifest::new("analyze").input("cube", &self.input);
        if let Some(p) = &sidecar {
            m = m.input("dead", p);
        }
        m = m.output("map", &self.out).output("summary", &self.summary_path());

        let (map, mut rows) = match &self.analysis {
            Analysis::Depth { snr_threshold } => {
                let map = depth_map(&meas, *snr_threshold);
                m.config.push(("mode".into(), "depth".into()));
                m.config.push(("snr_threshold".into(), snr_threshold.to_string()));
                (map, Vec::new())
            }
            Analysis::Flim { fit, hist_bins } => {
                let mut result = fit_lifetimes(meas.cube(), fit)?;
                mask_dead(&mut result.map, &mut result.flags, &meas)?;
                let hist = lifetime_histogram(&result.map, *hist_bins).map_err(empty_map)?;
                files::write_text(&self.hist_path(), &hist_csv(&hist))?;
                m = m.output("hist", &self.hist_path());
                m.config.push(("mode".into(), "flim".into()));
                m.config.extend(fit.to_entries());
                m.config.push(("hist_bins".into(), hist_bins.to_string()));
                (result.map, flag_counts(&result.flags))
            }
        };
        m.config.push(("format".into(), format_name(self.format).into()));

        let file = std::fs::File::create(&self.out).map_err(io_err(&self.out))?;
        datacube::export_map(&map, std::io::BufWriter::new(file), self.format)
            .map_err(empty_map)
            .map_err(in_file(&self.out))?;

        let mut summary = summary_rows(&summarize(&map).map_err(empty_map)?, &map);
        summary.append(&mut rows);
        files::write_text(&self.summary_path(), &files::metrics_csv(&summary))?;
        Ok(m)
    }
}

fn empty_map(e: Error) -> CliError {
    match e {
        Error::EmptyMap => CliError::Usage("no pixel produced a value; nothing to summarize".into()),
        other => other.into(),
    }
}

fn mask_dead(map: &mut ScalarMap, flags: &mut [FitFlag], meas: &spadfusion_core::Measurement) -> CliResult<()> {
    if meas.dead_pixels().is_empty() {
        return Ok(());
    }
    let mut values = map.values().to_vec();
    for &(r, c) in meas.dead_pixels() {
        let i = r * map.width() + c;
        values[i] = None;
        flags[i] = FitFlag::BelowThreshold;
    }
    *map = ScalarMap::new(map.height(), map.width(), map.unit(), values)?;
    Ok(())
}

fn summary_rows(s: &Summary, map: &ScalarMap) -> Vec<(&'static str, String)> {
    vec![
        ("unit", map.unit().name().into()),
        ("pixels", map.values().len().to_string()),
        ("valid", s.count.to_string()),
        ("mean", s.mean.to_string()),
        ("std", s.std.to_string()),
        ("min", s.min.to_string()),
        ("max", s.max.to_string()),
    ]
}

fn flag_counts(flags: &[FitFlag]) -> Vec<(&'static str, String)> {
    [FitFlag::Fitted, FitFlag::Clamped, FitFlag::BelowThreshold, FitFlag::TooFewBins, FitFlag::NonFinite]
        .into_iter()
        .map(|f| (f.name(), flags.iter().filter(|&&g| g == f).count().to_string()))
        .collect()
}

fn hist_csv(h: &Histogram) -> String {
    let mut out = String::from("lower,upper,count\n");
    for (i, n) in h.counts.iter().enumerate() {
        out.push_str(&format!("{},{},{n}\n", h.edges[i], h.edges[i + 1]));
    }
    out
}
