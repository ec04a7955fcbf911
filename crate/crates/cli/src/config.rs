//! The run-configuration document.
//!
//! One self-contained JSON document per run; unknown keys are rejected and
//! the seed is mandatory (reproducibility is a contract, not a default).

use jumpflow_core::error::{Error, Result};
use jumpflow_core::expr::Expr;
use jumpflow_core::model::{Coefficient, ConditionMode, ModelConfig, ModulusSpec};
use jumpflow_core::yamada::ModulusFamily;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum RhoKind {
    Sqrt,
    SqrtLog,
    SqrtLogLog,
}

impl RhoKind {
    pub fn family(self, scale: f64) -> ModulusFamily {
        match self {
            RhoKind::Sqrt => ModulusFamily::Sqrt { scale },
            RhoKind::SqrtLog => ModulusFamily::SqrtLog,
            RhoKind::SqrtLogLog => ModulusFamily::SqrtLogLog,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoConfig {
    pub kind: RhoKind,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

/// Settings of the `validate` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationConfig {
    #[serde(default = "default_mode")]
    pub mode: ConditionMode,
    /// Gauge ρ; defaults to c·√z with c² = growth_K·(1 + m), which
    /// dominates the builtin kernels on [0, m].
    #[serde(default)]
    pub rho: Option<RhoConfig>,
    /// State bound m for the pair checks (default 4).
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub pairs: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub state_grid: Option<Vec<f64>>,
    /// Mark weight f_m(u) for the factored modes, as an expression in x.
    #[serde(default)]
    pub f_expr: Option<String>,
    #[serde(default)]
    pub divergence_threshold: Option<f64>,
    #[serde(default)]
    pub strict_growth: bool,
}

fn default_mode() -> ConditionMode {
    ConditionMode::C3a
}

impl ValidationConfig {
    pub fn bound_m(&self) -> f64 {
        self.m.unwrap_or(4.0)
    }

    pub fn rho_family(&self, growth_k: f64) -> ModulusFamily {
        match &self.rho {
            Some(cfg) => cfg.kind.family(cfg.scale),
            None => ModulusFamily::Sqrt {
                scale: (growth_k * (1.0 + self.bound_m())).sqrt().max(1.0),
            },
        }
    }

    pub fn modulus_spec(&self, growth_k: f64) -> Result<ModulusSpec> {
        let mut spec = ModulusSpec::new(self.rho_family(growth_k));
        if let Some(text) = &self.f_expr {
            spec = spec.with_mark_weight(Coefficient::Expr(Expr::parse(text)?));
        }
        Ok(spec)
    }

    pub fn pair_grid(&self) -> Vec<(f64, f64)> {
        match &self.pairs {
            Some(p) => p.clone(),
            None => {
                let m = self.bound_m();
                let knots: Vec<f64> = (0..=4).map(|i| m * i as f64 / 4.0).collect();
                let mut pairs = Vec::new();
                for (i, &x) in knots.iter().enumerate() {
                    for &y in &knots[i + 1..] {
                        pairs.push((x, y));
                    }
                }
                pairs
            }
        }
    }

    pub fn states(&self) -> Vec<f64> {
        match &self.state_grid {
            Some(g) => g.clone(),
            None => {
                let m = self.bound_m();
                (0..=8).map(|i| m * i as f64 / 8.0).collect()
            }
        }
    }
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            mode: default_mode(),
            rho: None,
            m: None,
            pairs: None,
            state_grid: None,
            f_expr: None,
            divergence_threshold: None,
            strict_growth: false,
        }
    }
}

/// The full run document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub horizon: f64,
    /// Master-grid steps over [0, T]; defaults to 4096 per unit horizon.
    #[serde(default)]
    pub master_resolution: Option<usize>,
    /// Study meshes as step counts; each must divide the master resolution.
    pub study_meshes: Vec<usize>,
    pub reference_mesh: usize,
    pub n_paths: usize,
    /// Mandatory: runs never draw entropy from the environment.
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_true")]
    pub deterministic_reduction: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Net used by the `simulate` command (defaults to the reference mesh).
    #[serde(default)]
    pub simulate_steps: Option<usize>,
    #[serde(default)]
    pub validation: Option<ValidationConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn master_steps(&self) -> usize {
        self.master_resolution
            .unwrap_or(((self.horizon * 4096.0).round() as usize).max(1))
    }

    fn check(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".to_string()));
        }
        let master = self.master_steps();
        if self.study_meshes.is_empty() {
            return Err(Error::Config("study_meshes must be non-empty".to_string()));
        }
        for &steps in &self.study_meshes {
            if steps == 0 || !master.is_multiple_of(steps) {
                return Err(Error::Config(format!(
                    "study mesh {steps} does not divide the master resolution {master}"
                )));
            }
        }
        if self.reference_mesh == 0 || !master.is_multiple_of(self.reference_mesh) {
            return Err(Error::Config(format!(
                "reference mesh {} does not divide the master resolution {master}",
                self.reference_mesh
            )));
        }
        if let Some(steps) = self.simulate_steps {
            if steps == 0 || !master.is_multiple_of(steps) {
                return Err(Error::Config(format!(
                    "simulate_steps {steps} does not divide the master resolution {master}"
                )));
            }
        }
        Ok(())
    }
}
