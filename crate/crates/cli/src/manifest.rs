//! Run manifests: everything needed to repeat a command.
//!
//! ```text
//! command = simulate
//! version = 0.1.0
//! threads = 1
//! seed = 7
//! wall_time_s = 0.031
//! in.truth = truth.trcb
//! out.spad = d.trcb
//! cfg.factor = 12
//! ```
//!
//! `cfg.*` holds the fully resolved configuration in the same grammar the
//! command's `--config` file accepts.

use std::path::{Path, PathBuf};
use std::time::Duration;

use spadfusion_core::config::{render, KeyValues};

use crate::error::{CliError, CliResult};
use crate::files;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub inputs: Vec<(String, PathBuf)>,
    pub outputs: Vec<(String, PathBuf)>,
    pub config: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub wall_time: Duration,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: Vec::new(),
            seed: None,
            threads: None,
            wall_time: Duration::ZERO,
        }
    }

    pub fn input(mut self, name: &str, path: &Path) -> Self {
        self.inputs.push((name.into(), path.to_path_buf()));
        self
    }

    pub fn output(mut self, name: &str, path: &Path) -> Self {
        self.outputs.push((name.into(), path.to_path_buf()));
        self
    }

    pub fn path_of(&self, kind: &str, name: &str) -> Option<&Path> {
        let list = if kind == "in" { &self.inputs } else { &self.outputs };
        list.iter().find(|(n, _)| n == name).map(|(_, p)| p.as_path())
    }

    pub fn to_text(&self) -> String {
        let mut entries: Vec<(String, String)> = vec![
            ("command".into(), self.command.clone()),
            ("version".into(), VERSION.into()),
            ("threads".into(), self.threads.map_or_else(|| "auto".into(), |n| n.to_string())),
        ];
        if let Some(seed) = self.seed {
            entries.push(("seed".into(), seed.to_string()));
        }
        entries.push(("wall_time_s".into(), format!("{:.6}", self.wall_time.as_secs_f64())));
        for (k, p) in &self.inputs {
            entries.push((format!("in.{k}"), p.display().to_string()));
        }
        for (k, p) in &self.outputs {
            entries.push((format!("out.{k}"), p.display().to_string()));
        }
        for (k, v) in &self.config {
            entries.push((format!("cfg.{k}"), v.clone()));
        }
        format!("# spadfusion run manifest\n{}", render(&entries))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut kv = KeyValues::parse(text)?;
        let mut manifest = Manifest::new(&kv.required::<String>("command")?);
        kv.take_raw("version");
        kv.take_raw("wall_time_s");
        manifest.seed = kv.optional("seed")?;
        manifest.threads = match kv.take_raw("threads") {
            Some((v, _)) if v == "auto" => None,
            Some((v, line)) => Some(v.parse().map_err(|_| {
                CliError::Core(spadfusion_core::Error::Config { line, message: format!("bad thread count `{v}`") })
            })?),
            None => None,
        };
        let keys: Vec<String> = kv.keys().map(str::to_string).collect();
        for key in keys {
            let (value, line) = kv.take_raw(&key).expect("listed key");
            if let Some(name) = key.strip_prefix("in.") {
                manifest.inputs.push((name.into(), value.into()));
            } else if let Some(name) = key.strip_prefix("out.") {
                manifest.outputs.push((name.into(), value.into()));
            } else if let Some(name) = key.strip_prefix("cfg.") {
                manifest.config.push((name.into(), value));
            } else {
                return Err(
                    spadfusion_core::Error::Config { line, message: format!("unknown manifest key `{key}`") }.into()
                );
            }
        }
        Ok(manifest)
    }

    /// The resolved configuration as a parsed config file.
    pub fn config_values(&self) -> CliResult<KeyValues> {
        Ok(KeyValues::parse(&render(&self.config))?)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        files::write_text(path, &self.to_text())
    }
}

/// Where the manifest for a primary output goes.
pub fn manifest_path(primary_output: &Path) -> PathBuf {
    primary_output.with_extension("manifest")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let mut m = Manifest::new("simulate").input("truth", Path::new("a/t.trcb")).output("spad", Path::new("d.trcb"));
        m.config = vec![("factor".into(), "3".into()), ("blur_sigma".into(), "1.5".into())];
        m.seed = Some(9);
        m.threads = Some(1);
        m.wall_time = Duration::from_millis(5);
        let parsed = Manifest::parse(&m.to_text()).unwrap();
        assert_eq!(parsed.command, "simulate");
        assert_eq!(parsed.seed, Some(9));
        assert_eq!(parsed.threads, Some(1));
        assert_eq!(parsed.path_of("in", "truth"), Some(Path::new("a/t.trcb")));
        let mut cfg = parsed.config_values().unwrap();
        assert_eq!(cfg.required::<usize>("factor").unwrap(), 3);
    }

    #[test]
    fn rejects_stray_keys() {
        assert!(Manifest::parse("command = eval\nfoo = 1\n").is_err());
    }
}
