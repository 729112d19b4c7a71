use std::path::PathBuf;

use clap::Args;
use spadfusion_core::config::KeyValues;
use spadfusion_core::sensor_sim::{render_scene, SceneSpec};
use spadfusion_core::Cube;

use super::required_path;
use crate::error::{file_err, CliResult};
use crate::files;
use crate::manifest::Manifest;
use crate::Common;

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// Scene file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output cube (TRCB).
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone)]
pub struct RenderJob {
    pub scene: SceneSpec,
    pub out: PathBuf,
}

impl RenderJob {
    pub fn from_args(args: &RenderArgs) -> CliResult<Self> {
        let kv = files::read_config(&args.config)?;
        let scene = SceneSpec::from_key_values(kv).map_err(file_err(&args.config))?;
        Ok(Self { scene, out: args.out.clone() })
    }

    pub fn from_manifest(m: &Manifest) -> CliResult<Self> {
        let kv: KeyValues = m.config_values()?;
        Ok(Self { scene: SceneSpec::from_key_values(kv)?, out: required_path(m, "out", "cube")?.to_path_buf() })
    }

    pub fn run(&self) -> CliResult<Manifest> {
        let cube: Cube = render_scene(&self.scene)?;
        files::write_cube(&cube, &self.out)?;
        let mut m = Manifest::new("render").output("cube", &self.out);
        m.config = self.scene.to_entries();
        Ok(m)
    }
}
