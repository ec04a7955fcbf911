//! The model-configuration document.
//!
//! A JSON-compatible structure describing one model; unknown keys are
//! rejected. Example:
//!
//! ```json
//! {
//!   "family": "cir_jump",
//!   "beta": -1.0,
//!   "sigma0": 0.5,
//!   "jump": { "rate": 2.0, "mark_law": { "exponential": { "mean": 0.5 } } },
//!   "drift": { "constant": { "value": 0.5 } },
//!   "x0": { "constant": { "value": 1.0 } }
//! }
//! ```

use super::{
    CirJumpParams, CirParams, Coefficient, DriftProcess, InitialLaw, LevyParams, MarkLaw,
    ModelSpec,
};
use crate::error::{Error, Result};
use crate::expr::Expr;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Cir,
    CirJump,
    LevyOnesided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MarkLawConfig {
    Exponential { mean: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl MarkLawConfig {
    fn build(&self) -> MarkLaw {
        match *self {
            MarkLawConfig::Exponential { mean } => MarkLaw::Exponential { mean },
            MarkLawConfig::Uniform { lo, hi } => MarkLaw::Uniform { lo, hi },
            MarkLawConfig::Constant { value } => MarkLaw::Constant { value },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub rate: f64,
    pub mark_law: MarkLawConfig,
    #[serde(default)]
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftConfig {
    Constant { value: f64 },
    Table { times: Vec<f64>, values: Vec<f64> },
}

impl DriftConfig {
    fn build(&self) -> DriftProcess {
        match self {
            DriftConfig::Constant { value } => DriftProcess::Constant { value: *value },
            DriftConfig::Table { times, values } => DriftProcess::Table {
                times: times.clone(),
                values: values.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Constant { value: f64 },
    Lognormal { mu: f64, sigma: f64 },
}

impl InitialConfig {
    fn build(&self) -> InitialLaw {
        match *self {
            InitialConfig::Constant { value } => InitialLaw::Constant { value },
            InitialConfig::Lognormal { mu, sigma } => InitialLaw::LogNormal { mu, sigma },
        }
    }
}

/// The model document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    pub beta: f64,
    /// σ(x) = sigma0·√(x⁺) (cir, cir_jump).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
    /// σ(x) as an expression in x (levy_onesided).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_expr: Option<String>,
    /// φ(x) as an expression in x (levy_onesided).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump: Option<JumpConfig>,
    pub drift: DriftConfig,
    pub x0: InitialConfig,
    #[serde(default, rename = "growth_K", skip_serializing_if = "Option::is_none")]
    pub growth_k: Option<f64>,
}

impl ModelConfig {
    /// Parse a JSON document, rejecting unknown keys.
    pub fn from_json(text: &str) -> Result<ModelConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model document: {e}")))
    }

    /// Construct the model this document describes.
    pub fn build(&self) -> Result<ModelSpec> {
        match self.family {
            Family::Cir => {
                let sigma0 = self.sigma0.ok_or_else(|| {
                    Error::Config("family 'cir' needs the field sigma0".to_string())
                })?;
                self.forbid("cir", self.sigma_expr.is_some(), "sigma_expr")?;
                self.forbid("cir", self.phi_expr.is_some(), "phi_expr")?;
                self.forbid("cir", self.jump.is_some(), "jump")?;
                ModelSpec::builtin_cir(CirParams {
                    sigma0,
                    beta: self.beta,
                    drift: self.drift.build(),
                    initial: self.x0.build(),
                    growth_k: self.growth_k,
                })
            }
            Family::CirJump => {
                let sigma0 = self.sigma0.ok_or_else(|| {
                    Error::Config("family 'cir_jump' needs the field sigma0".to_string())
                })?;
                self.forbid("cir_jump", self.sigma_expr.is_some(), "sigma_expr")?;
                self.forbid("cir_jump", self.phi_expr.is_some(), "phi_expr")?;
                let jump = self.jump.as_ref().ok_or_else(|| {
                    Error::Config("family 'cir_jump' needs the jump block".to_string())
                })?;
                ModelSpec::builtin_cir_jump(CirJumpParams {
                    sigma0,
                    beta: self.beta,
                    drift: self.drift.build(),
                    initial: self.x0.build(),
                    rate: jump.rate,
                    mark_law: jump.mark_law.build(),
                    truncation: jump.truncation,
                    growth_k: self.growth_k,
                })
            }
            Family::LevyOnesided => {
                self.forbid("levy_onesided", self.sigma0.is_some(), "sigma0")?;
                let sigma = match &self.sigma_expr {
                    Some(text) => Coefficient::Expr(Expr::parse(text)?),
                    None => Coefficient::Zero,
                };
                let phi_text = self.phi_expr.as_ref().ok_or_else(|| {
                    Error::Config("family 'levy_onesided' needs the field phi_expr".to_string())
                })?;
                let phi = Coefficient::Expr(Expr::parse(phi_text)?);
                let jump = self.jump.as_ref().ok_or_else(|| {
                    Error::Config("family 'levy_onesided' needs the jump block".to_string())
                })?;
                ModelSpec::builtin_levy_onesided(LevyParams {
                    sigma,
                    phi,
                    beta: self.beta,
                    drift: self.drift.build(),
                    initial: self.x0.build(),
                    rate: jump.rate,
                    mark_law: jump.mark_law.build(),
                    truncation: jump.truncation,
                    growth_k: self.growth_k,
                })
            }
        }
    }

    fn forbid(&self, family: &str, present: bool, field: &str) -> Result<()> {
        if present {
            Err(Error::Config(format!(
                "family '{family}' does not accept the field {field}"
            )))
        } else {
            Ok(())
        }
    }
}
