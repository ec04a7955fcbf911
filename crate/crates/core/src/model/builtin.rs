//! Builtin model families.

use super::{
    Coefficient, DriftProcess, InitialLaw, JumpKernel, JumpMeasure, MarkLaw, ModelSpec,
};
use crate::error::{Error, Result};

/// Extended CIR: dx = (b(t) + βx)dt + σ₀√(x⁺) dB, no jumps.
#[derive(Debug, Clone)]
pub struct CirParams {
    pub sigma0: f64,
    pub beta: f64,
    pub drift: DriftProcess,
    pub initial: InitialLaw,
    /// Growth constant; σ₀² when omitted.
    pub growth_k: Option<f64>,
}

/// CIR with jumps: kernel g(x,u) = u·min(x,1) under a finite-activity
/// measure.
#[derive(Debug, Clone)]
pub struct CirJumpParams {
    pub sigma0: f64,
    pub beta: f64,
    pub drift: DriftProcess,
    pub initial: InitialLaw,
    pub rate: f64,
    pub mark_law: MarkLaw,
    pub truncation: Option<f64>,
    /// Growth constant; σ₀² + m₂ when omitted (which makes the growth
    /// condition hold for every state: σ₀²x + m₂·min(x,1)² ≤ (σ₀²+m₂)(1+x)).
    pub growth_k: Option<f64>,
}

/// One-sided Lévy drive: dx = (b+βx)dt + σ(x)dB + φ(x(t−))dz with z a
/// centered pure-jump Lévy process, realized as g(x,u) = φ(x)·u against the
/// compensated point measure.
#[derive(Debug, Clone)]
pub struct LevyParams {
    pub sigma: Coefficient,
    pub phi: Coefficient,
    pub beta: f64,
    pub drift: DriftProcess,
    pub initial: InitialLaw,
    pub rate: f64,
    pub mark_law: MarkLaw,
    pub truncation: Option<f64>,
    /// Growth constant; when omitted, fitted numerically as the tightest
    /// admissible constant on a reference state grid [0, 100] with a 5%
    /// margin (the growth condition for unbounded φ holds only locally).
    pub growth_k: Option<f64>,
}

impl ModelSpec {
    /// The extended CIR family.
    pub fn builtin_cir(params: CirParams) -> Result<ModelSpec> {
        if !(params.sigma0.is_finite() && params.sigma0 >= 0.0) {
            return Err(Error::invalid_model(format!(
                "sigma0 must be non-negative, got {}",
                params.sigma0
            )));
        }
        let growth_k = params.growth_k.unwrap_or(params.sigma0 * params.sigma0);
        ModelSpec::new(
            params.beta,
            Coefficient::SqrtScaled(params.sigma0),
            JumpKernel::None,
            params.drift,
            JumpMeasure::none(),
            growth_k,
            params.initial,
        )
    }

    /// CIR with capped-linear jumps.
    pub fn builtin_cir_jump(params: CirJumpParams) -> Result<ModelSpec> {
        if !(params.sigma0.is_finite() && params.sigma0 >= 0.0) {
            return Err(Error::invalid_model(format!(
                "sigma0 must be non-negative, got {}",
                params.sigma0
            )));
        }
        let measure = JumpMeasure::new(params.rate, params.mark_law, params.truncation)?;
        let growth_k = params
            .growth_k
            .unwrap_or(params.sigma0 * params.sigma0 + measure.second_moment());
        ModelSpec::new(
            params.beta,
            Coefficient::SqrtScaled(params.sigma0),
            JumpKernel::CappedLinear,
            params.drift,
            measure,
            growth_k,
            params.initial,
        )
    }

    /// The one-sided Lévy family, g(x,u) = φ(x)·u with compensator φ(x)·m₁.
    pub fn builtin_levy_onesided(params: LevyParams) -> Result<ModelSpec> {
        let measure = JumpMeasure::new(params.rate, params.mark_law, params.truncation)?;
        if measure.rate() > 0.0 && measure.law().support_min() < 0.0 {
            return Err(Error::invalid_model(
                "one-sided Lévy marks must live on (0, ∞)".to_string(),
            ));
        }
        let growth_k = match params.growth_k {
            Some(k) => k,
            None => {
                // Tightest K on [0, 100] with a safety margin.
                let m2 = measure.second_moment();
                let mut k = 0.0_f64;
                for i in 0..=400 {
                    let x = 100.0 * i as f64 / 400.0;
                    let s = params.sigma.eval(x);
                    let p = params.phi.eval(x);
                    k = k.max((s * s + p * p * m2) / (1.0 + x));
                }
                k * 1.05
            }
        };
        ModelSpec::new(
            params.beta,
            params.sigma,
            JumpKernel::Proportional { phi: params.phi },
            params.drift,
            measure,
            growth_k,
            params.initial,
        )
    }
}
