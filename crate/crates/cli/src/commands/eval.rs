use std::path::PathBuf;

use clap::Args;
use spadfusion_core::analysis::{metrics_with_threshold, Metrics, DEFAULT_SNR_THRESHOLD};

use super::required_path;
use crate::error::{CliError, CliResult};
use crate::files;
use crate::manifest::Manifest;
use crate::Common;

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Reconstructed cube (TRCB).
    #[arg(long)]
    pub recon: PathBuf,
    /// Ground-truth cube (TRCB).
    #[arg(long)]
    pub truth: PathBuf,
    /// Depth detection threshold for the depth RMSE.
    #[arg(long)]
    pub snr_threshold: Option<f64>,
    /// Rescale the truth to this many total counts first, as `simulate` does.
    #[arg(long)]
    pub photon_scale: Option<f64>,
    /// Also write the metrics CSV (and a manifest) here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone)]
pub struct EvalJob {
    pub recon: PathBuf,
    pub truth: PathBuf,
    pub snr_threshold: f64,
    pub photon_scale: Option<f64>,
    pub out: Option<PathBuf>,
}

impl EvalJob {
    pub fn from_args(args: &EvalArgs) -> CliResult<Self> {
        let snr_threshold = args.snr_threshold.unwrap_or(DEFAULT_SNR_THRESHOLD);
        if !(snr_threshold >= 0.0) {
            return Err(CliError::Usage(format!("snr_threshold must be ≥ 0, got {snr_threshold}")));
        }
        if args.photon_scale.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return Err(CliError::Usage("photon_scale must be > 0".into()));
        }
        Ok(Self {
            recon: args.recon.clone(),
            truth: args.truth.clone(),
            snr_threshold,
            photon_scale: args.photon_scale,
            out: args.out.clone(),
        })
    }

    pub fn from_manifest(m: &Manifest) -> CliResult<Self> {
        let mut kv = m.config_values()?;
        let snr_threshold = kv.required("snr_threshold")?;
        let photon_scale = kv.optional("photon_scale")?;
        kv.finish()?;
        Ok(Self {
            recon: required_path(m, "in", "recon")?.to_path_buf(),
            truth: required_path(m, "in", "truth")?.to_path_buf(),
            snr_threshold,
            photon_scale,
            out: m.path_of("out", "metrics").map(PathBuf::from),
        })
    }

    pub fn run(&self) -> CliResult<Manifest> {
        let recon = files::read_cube(&self.recon)?;
        let mut truth = files::read_cube(&self.truth)?.cast::<f64>();
        if let Some(scale) = self.photon_scale {
            let total = truth.sum();
            if !(total > 0.0) {
                return Err(CliError::Usage(format!("{}: truth is empty, cannot rescale", self.truth.display())));
            }
            truth = truth.scaled(scale / total)?;
        }
        let metrics = metrics_with_threshold(&recon.cast::<f64>(), &truth, self.snr_threshold)?;
        let csv = metrics_csv(&metrics);
        print!("{csv}");
        let mut m = Manifest::new("eval").input("recon", &self.recon).input("truth", &self.truth);
        if let Some(out) = &self.out {
            files::write_text(out, &csv)?;
            m = m.output("metrics", out);
        }
        m.config.push(("snr_threshold".into(), self.snr_threshold.to_string()));
        if let Some(scale) = self.photon_scale {
            m.config.push(("photon_scale".into(), scale.to_string()));
        }
        Ok(m)
    }
}

pub fn metrics_csv(m: &Metrics) -> String {
    files::metrics_csv(&[
        ("psnr_db", m.psnr.to_string()),
        ("rmse", m.rmse.to_string()),
        ("depth_rmse_bins", m.depth_rmse_bins.map(|v| v.to_string()).unwrap_or_default()),
    ])
}
