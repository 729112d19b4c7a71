use std::path::PathBuf;

use clap::Args;
use spadfusion_core::config::KeyValues;
use spadfusion_core::sensor_sim::{simulate_pair, NoiseSpec};
use spadfusion_core::{Image, Measurement};

use super::required_path;
use crate::error::{file_err, in_file, CliResult};
use crate::files;
use crate::geometry::GeometrySpec;
use crate::manifest::Manifest;
use crate::Common;

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Ground-truth cube (TRCB).
    #[arg(long)]
    pub truth: PathBuf,
    /// Geometry and noise keys.
    #[arg(long)]
    pub config: PathBuf,
    /// SPAD measurement output (TRCB); dead pixels go to `<out>.dead.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// CCD image output (default `<out>.ccd.trcb`).
    #[arg(long)]
    pub ccd_out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write expected counts instead of Poisson samples.
    #[arg(long)]
    pub noiseless: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone)]
pub struct SimulateJob {
    pub truth: PathBuf,
    pub geometry: GeometrySpec,
    pub noise: NoiseSpec,
    pub out: PathBuf,
    pub ccd_out: PathBuf,
}

fn resolve(kv: &mut KeyValues) -> CliResult<(GeometrySpec, NoiseSpec)> {
    let geometry = GeometrySpec::from_key_values(kv)?;
    let noise = NoiseSpec::from_key_values(kv)?;
    Ok((geometry, noise))
}

impl SimulateJob {
    pub fn from_args(args: &SimulateArgs) -> CliResult<Self> {
        let mut kv = files::read_config(&args.config)?;
        let (geometry, mut noise) = resolve(&mut kv).map_err(in_file(&args.config))?;
        kv.finish().map_err(file_err(&args.config))?;
        if let Some(seed) = args.seed {
            noise.seed = seed;
        }
        if args.noiseless {
            noise.poisson = false;
        }
        Ok(Self {
            truth: args.truth.clone(),
            geometry,
            noise,
            out: args.out.clone(),
            ccd_out: args.ccd_out.clone().unwrap_or_else(|| args.out.with_extension("ccd.trcb")),
        })
    }

    pub fn from_manifest(m: &Manifest) -> CliResult<Self> {
        let mut kv = m.config_values()?;
        let (geometry, noise) = resolve(&mut kv)?;
        kv.finish()?;
        Ok(Self {
            truth: required_path(m, "in", "truth")?.to_path_buf(),
            geometry,
            noise,
            out: required_path(m, "out", "spad")?.to_path_buf(),
            ccd_out: required_path(m, "out", "ccd")?.to_path_buf(),
        })
    }

    pub fn run(&self) -> CliResult<Manifest> {
        let truth = files::read_cube(&self.truth)?;
        let geometry = self.geometry.build(truth.height(), truth.width())?;
        let (d, c) = simulate_pair(&truth.cast::<f64>(), &geometry, &self.noise)?;
        let (d, c): (Measurement, Image) = (d.cast(), c.cast());
        let sidecar = files::write_measurement(&d, &self.out)?;
        files::write_image(&c, &self.ccd_out)?;

        let mut m = Manifest::new("simulate")
            .input("truth", &self.truth)
            .output("spad", &self.out)
            .output("dead", &sidecar)
            .output("ccd", &self.ccd_out);
        m.seed = Some(self.noise.seed);
        m.config = self.geometry.to_entries();
        m.config.extend(self.noise.to_entries());
        Ok(m)
    }
}
