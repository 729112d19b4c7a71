use crate::config::{render, KeyValues};
use crate::error::{invalid, Error, Result};

/// How the three L2 terms enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormMode {
    /// `‖·‖₂`, as in the second-order-cone form of the problem.
    #[default]
    Unsquared,
    /// `‖·‖₂²`, the least-squares reading.
    Squared,
}

impl NormMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "unsquared" => Some(NormMode::Unsquared),
            "squared" => Some(NormMode::Squared),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NormMode::Unsquared => "unsquared",
            NormMode::Squared => "squared",
        }
    }
}

/// Published weight sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Lidar,
    Flim,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "lidar" => Some(Preset::Lidar),
            "flim" => Some(Preset::Flim),
            _ => None,
        }
    }

    /// `(α, β, γ, δ)`
    pub fn weights(self) -> (f64, f64, f64, f64) {
        match self {
            Preset::Lidar => (1.0, 1e-4, 1e-2, 0.0),
            Preset::Flim => (1.0, 1e-3, 1e-7, 1e-5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// CCD term weight.
    pub alpha: f64,
    /// Temporal-histogram term weight.
    pub beta: f64,
    /// Sparsity (L1) weight.
    pub gamma: f64,
    /// Total-variation weight.
    pub delta: f64,
    pub norm_mode: NormMode,
    pub max_iters: usize,
    /// Stop once `‖x_{k+1} − x_k‖ / ‖x_{k+1}‖` falls below this.
    pub tol: f64,
    /// Primal/dual step balance: `τ = ratio/‖L‖`, `σ = 1/(ratio·‖L‖)`.
    pub step_ratio: f64,
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::preset(Preset::Lidar)
    }
}

impl SolverConfig {
    pub fn preset(preset: Preset) -> Self {
        let (alpha, beta, gamma, delta) = preset.weights();
        Self {
            alpha,
            beta,
            gamma,
            delta,
            norm_mode: NormMode::Unsquared,
            max_iters: 2000,
            tol: 1e-5,
            step_ratio: 1.0,
            record_trace: false,
        }
    }

    pub fn with_weights(mut self, alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        (self.alpha, self.beta, self.gamma, self.delta) = (alpha, beta, gamma, delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma), ("delta", self.delta)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(invalid(format!("{name} must be ≥ 0, got {w}")));
            }
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be ≥ 1"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        if !(self.step_ratio.is_finite() && self.step_ratio > 0.0) {
            return Err(invalid(format!("step_ratio must be > 0, got {}", self.step_ratio)));
        }
        Ok(())
    }

    /// Overrides fields present in `kv`, starting from `self`.
    pub fn update_from(mut self, kv: &mut KeyValues) -> Result<Self> {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = kv.optional(stringify!($field))? {
                    self.$field = v;
                }
            };
        }
        take!(alpha);
        take!(beta);
        take!(gamma);
        take!(delta);
        take!(max_iters);
        take!(tol);
        take!(step_ratio);
        take!(record_trace);
        if let Some((value, line)) = kv.take_raw("norm_mode") {
            self.norm_mode = NormMode::parse(&value).ok_or_else(|| Error::Config {
                line,
                message: format!("norm_mode must be `unsquared` or `squared`, got `{value}`"),
            })?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn to_entries(&self) -> Vec<(String, String)> {
        vec![
            ("alpha".into(), self.alpha.to_string()),
            ("beta".into(), self.beta.to_string()),
            ("gamma".into(), self.gamma.to_string()),
            ("delta".into(), self.delta.to_string()),
            ("norm_mode".into(), self.norm_mode.name().into()),
            ("max_iters".into(), self.max_iters.to_string()),
            ("tol".into(), self.tol.to_string()),
            ("step_ratio".into(), self.step_ratio.to_string()),
            ("record_trace".into(), self.record_trace.to_string()),
        ]
    }

    pub fn to_config(&self) -> String {
        render(&self.to_entries())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let lidar = SolverConfig::preset(Preset::Lidar);
        assert_eq!((lidar.alpha, lidar.beta, lidar.gamma, lidar.delta), (1.0, 1e-4, 1e-2, 0.0));
        let flim = SolverConfig::preset(Preset::Flim);
        assert_eq!((flim.alpha, flim.beta, flim.gamma, flim.delta), (1.0, 1e-3, 1e-7, 1e-5));
    }

    #[test]
    fn config_roundtrip_and_validation() {
        let cfg = SolverConfig { norm_mode: NormMode::Squared, max_iters: 17, ..SolverConfig::preset(Preset::Flim) };
        let mut kv = KeyValues::parse(&cfg.to_config()).unwrap();
        let back = SolverConfig::default().update_from(&mut kv).unwrap();
        kv.finish().unwrap();
        assert_eq!(back, cfg);

        let mut kv = KeyValues::parse("gamma = -1\n").unwrap();
        assert!(SolverConfig::default().update_from(&mut kv).is_err());
        let mut kv = KeyValues::parse("max_iters = 0\n").unwrap();
        assert!(SolverConfig::default().update_from(&mut kv).is_err());
        let mut kv = KeyValues::parse("\nnorm_mode = cubic\n").unwrap();
        assert!(matches!(SolverConfig::default().update_from(&mut kv), Err(Error::Config { line: 2, .. })));
    }
}
