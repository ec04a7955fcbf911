//! Model definitions: coefficient bundles, jump measures and the truncated
//! coefficient evaluations the Euler scheme consumes.
//!
//! A model is the data of
//!
//! ```text
//! dx(t) = (b(t) + β x(t)) dt + σ(x(t)) dB(t) + ∫ g(x(t−), u) Ñ(dt, du)
//! ```
//!
//! with β < 0, σ continuous and vanishing on x ≤ 0, g(x,u) + x ≥ 0 for
//! x > 0 and g(x,u) = 0 for x ≤ 0, and a finite-activity mark measure
//! μ(du) = λ · law(du). Approximating paths may go negative, so the scheme
//! only ever sees the truncated coefficients σ′(x) = σ(x)·1{x≥0} and
//! g′(x,u) = g(x,u)·1{x≥0}, together with the matching compensator
//! c′(x) = ∫ g′(x,u) μ(du).

mod builtin;
mod config;
mod validate;

pub use builtin::{CirJumpParams, CirParams, LevyParams};
pub use config::ModelConfig;
pub use validate::{
    validate_growth, validate_modulus, ConditionMode, GrowthCheck, GrowthReport,
    ModulusPairCheck, ModulusReport, ValidateOptions,
};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{self, QuadTol};
use crate::yamada::ModulusFamily;
use rand::Rng;
use rand_distr::{Distribution, Exp as ExpDistr, Uniform as UniformDistr};
use std::fmt;
use std::sync::Arc;

/// Relative accuracy target for compensators obtained by quadrature.
pub const COMPENSATOR_TOL: f64 = 1e-8;

/// Law of a single jump mark (a probability measure on the real line).
#[derive(Debug, Clone, PartialEq)]
pub enum MarkLaw {
    /// Exp(mean), density e^{-u/mean}/mean on (0, ∞).
    Exponential { mean: f64 },
    /// An exponential conditioned on exceeding `floor`; by memorylessness
    /// this is `floor + Exp(mean)`.
    ShiftedExponential { floor: f64, mean: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl MarkLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            MarkLaw::Exponential { mean } => mean > 0.0 && mean.is_finite(),
            MarkLaw::ShiftedExponential { floor, mean } => {
                mean > 0.0 && mean.is_finite() && floor >= 0.0
            }
            MarkLaw::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            MarkLaw::Constant { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid_model(format!("invalid mark law {self:?}")))
        }
    }

    /// E[U].
    pub fn mean(&self) -> f64 {
        match *self {
            MarkLaw::Exponential { mean } => mean,
            MarkLaw::ShiftedExponential { floor, mean } => floor + mean,
            MarkLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            MarkLaw::Constant { value } => value,
        }
    }

    /// E[U²].
    pub fn second_moment(&self) -> f64 {
        match *self {
            MarkLaw::Exponential { mean } => 2.0 * mean * mean,
            MarkLaw::ShiftedExponential { floor, mean } => {
                floor * floor + 2.0 * floor * mean + 2.0 * mean * mean
            }
            MarkLaw::Uniform { lo, hi } => (lo * lo + lo * hi + hi * hi) / 3.0,
            MarkLaw::Constant { value } => value * value,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MarkLaw::Exponential { mean } => ExpDistr::new(1.0 / mean).unwrap().sample(rng),
            MarkLaw::ShiftedExponential { floor, mean } => {
                floor + ExpDistr::new(1.0 / mean).unwrap().sample(rng)
            }
            MarkLaw::Uniform { lo, hi } => UniformDistr::new(lo, hi).unwrap().sample(rng),
            MarkLaw::Constant { value } => value,
        }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        match *self {
            MarkLaw::Exponential { mean } => {
                if u <= 0.0 {
                    0.0
                } else {
                    1.0 - (-u / mean).exp()
                }
            }
            MarkLaw::ShiftedExponential { floor, mean } => {
                if u <= floor {
                    0.0
                } else {
                    1.0 - (-(u - floor) / mean).exp()
                }
            }
            MarkLaw::Uniform { lo, hi } => ((u - lo) / (hi - lo)).clamp(0.0, 1.0),
            MarkLaw::Constant { value } => {
                if u >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Quantile function, used to place deterministic mark grids.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0 - 1e-12);
        match *self {
            MarkLaw::Exponential { mean } => -mean * (1.0 - p).ln(),
            MarkLaw::ShiftedExponential { floor, mean } => floor - mean * (1.0 - p).ln(),
            MarkLaw::Uniform { lo, hi } => lo + (hi - lo) * p,
            MarkLaw::Constant { value } => value,
        }
    }

    /// E[f(U)] by adaptive quadrature (exact for point masses).
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, rel_tol: f64, context: &str) -> Result<f64> {
        match *self {
            MarkLaw::Constant { value } => Ok(f(value)),
            MarkLaw::Uniform { lo, hi } => {
                let v = quad::integrate(&f, lo, hi, &[], QuadTol { abs: 0.0, rel: rel_tol })
                    .map_err(|e| tag_quadrature(e, context))?;
                Ok(v / (hi - lo))
            }
            MarkLaw::Exponential { mean } => exp_expectation(0.0, mean, f, rel_tol, context),
            MarkLaw::ShiftedExponential { floor, mean } => {
                exp_expectation(floor, mean, f, rel_tol, context)
            }
        }
    }

    /// Smallest point of the support.
    pub fn support_min(&self) -> f64 {
        match *self {
            MarkLaw::Exponential { .. } => 0.0,
            MarkLaw::ShiftedExponential { floor, .. } => floor,
            MarkLaw::Uniform { lo, .. } => lo,
            MarkLaw::Constant { value } => value,
        }
    }
}

fn tag_quadrature(e: Error, context: &str) -> Error {
    match e {
        Error::Quadrature { reason, .. } => Error::Quadrature {
            context: context.to_string(),
            reason,
        },
        other => other,
    }
}

/// E[f(floor + Exp(mean))] = ∫₀^∞ f(floor + mean·t) e^{−t} dt, integrated
/// over [0, 60]: the clipped tail carries weight e^{−60} ≈ 9e−27, far below
/// any tolerance used here for polynomially bounded integrands.
fn exp_expectation<F: Fn(f64) -> f64>(
    floor: f64,
    mean: f64,
    f: F,
    rel_tol: f64,
    context: &str,
) -> Result<f64> {
    quad::integrate(
        |t: f64| f(floor + mean * t) * (-t).exp(),
        0.0,
        60.0,
        &[],
        QuadTol {
            abs: 0.0,
            rel: rel_tol,
        },
    )
    .map_err(|e| tag_quadrature(e, context))
}

/// The jump measure μ(du) = rate · law(du), after optional truncation of
/// marks below a floor ε.
///
/// Truncation keeps the simulated model explicit: discarded small jumps are
/// dropped entirely (their compensator is not folded into the drift), and
/// the effective rate/law here describe exactly what is simulated.
#[derive(Debug, Clone)]
pub struct JumpMeasure {
    rate: f64,
    law: MarkLaw,
    truncation: Option<f64>,
    requested_rate: f64,
}

impl JumpMeasure {
    /// The zero measure (no jumps).
    pub fn none() -> Self {
        JumpMeasure {
            rate: 0.0,
            law: MarkLaw::Constant { value: 0.0 },
            truncation: None,
            requested_rate: 0.0,
        }
    }

    pub fn new(rate: f64, law: MarkLaw, truncation: Option<f64>) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::invalid_model(format!(
                "jump rate must be finite and non-negative, got {rate}"
            )));
        }
        law.validate()?;
        if let Some(eps) = truncation {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::invalid_model(format!(
                    "truncation floor must be positive, got {eps}"
                )));
            }
        }
        let (eff_rate, eff_law) = match truncation {
            None => (rate, law),
            Some(eps) => match law {
                MarkLaw::Exponential { mean } => (
                    rate * (-eps / mean).exp(),
                    MarkLaw::ShiftedExponential { floor: eps, mean },
                ),
                MarkLaw::ShiftedExponential { floor, mean } => {
                    if eps <= floor {
                        (rate, MarkLaw::ShiftedExponential { floor, mean })
                    } else {
                        (
                            rate * (-(eps - floor) / mean).exp(),
                            MarkLaw::ShiftedExponential { floor: eps, mean },
                        )
                    }
                }
                MarkLaw::Uniform { lo, hi } => {
                    if hi <= eps {
                        (0.0, MarkLaw::Uniform { lo, hi })
                    } else {
                        let lo2 = lo.max(eps);
                        (
                            rate * (hi - lo2) / (hi - lo),
                            MarkLaw::Uniform { lo: lo2, hi },
                        )
                    }
                }
                MarkLaw::Constant { value } => {
                    if value < eps {
                        (0.0, MarkLaw::Constant { value })
                    } else {
                        (rate, MarkLaw::Constant { value })
                    }
                }
            },
        };
        let m2 = eff_rate * eff_law.second_moment();
        if !m2.is_finite() {
            return Err(Error::invalid_model(
                "second mark moment m2 is not finite".to_string(),
            ));
        }
        Ok(JumpMeasure {
            rate: eff_rate,
            law: eff_law,
            truncation,
            requested_rate: rate,
        })
    }

    /// Effective event rate λ (after truncation).
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Effective mark law (after truncation).
    pub fn law(&self) -> &MarkLaw {
        &self.law
    }

    pub fn truncation(&self) -> Option<f64> {
        self.truncation
    }

    pub fn requested_rate(&self) -> f64 {
        self.requested_rate
    }

    /// First measure moment m₁ = ∫ u μ(du) = λ·E[U].
    pub fn first_moment(&self) -> f64 {
        self.rate * self.law.mean()
    }

    /// Second measure moment m₂ = ∫ u² μ(du) = λ·E[U²].
    pub fn second_moment(&self) -> f64 {
        self.rate * self.law.second_moment()
    }

    /// ∫ f(u) μ(du) = λ·E[f(U)], zero for the empty measure.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, rel_tol: f64, context: &str) -> Result<f64> {
        if self.rate == 0.0 {
            return Ok(0.0);
        }
        Ok(self.rate * self.law.expectation(f, rel_tol, context)?)
    }
}

/// The non-negative drift process b(·).
#[derive(Clone)]
pub enum DriftProcess {
    Constant {
        value: f64,
    },
    /// A step path: value `values[j]` on `[times[j], times[j+1])`, the last
    /// value extending to the horizon. Used for adapted sample paths
    /// supplied on the master grid.
    Table {
        times: Vec<f64>,
        values: Vec<f64>,
    },
    /// A deterministic rate function; interval integrals are exact when an
    /// antiderivative is supplied and use the left-endpoint rule on the
    /// master grid otherwise.
    Function {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        antiderivative: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    },
}

impl fmt::Debug for DriftProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DriftProcess::Constant { value } => write!(f, "Constant({value})"),
            DriftProcess::Table { times, .. } => write!(f, "Table({} knots)", times.len()),
            DriftProcess::Function { antiderivative, .. } => write!(
                f,
                "Function(antiderivative: {})",
                antiderivative.is_some()
            ),
        }
    }
}

impl DriftProcess {
    pub fn constant(value: f64) -> Self {
        DriftProcess::Constant { value }
    }

    pub fn function<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        DriftProcess::Function {
            f: Arc::new(f),
            antiderivative: None,
        }
    }

    pub fn function_with_antiderivative<F, G>(f: F, antiderivative: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        DriftProcess::Function {
            f: Arc::new(f),
            antiderivative: Some(Arc::new(antiderivative)),
        }
    }

    fn validate(&self, horizon_hint: f64) -> Result<()> {
        match self {
            DriftProcess::Constant { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(Error::invalid_model(format!(
                        "drift must be non-negative, got b ≡ {value}"
                    )));
                }
            }
            DriftProcess::Table { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(Error::invalid_model(
                        "drift table needs matching, non-empty times/values".to_string(),
                    ));
                }
                if times[0] != 0.0 {
                    return Err(Error::invalid_model(
                        "drift table must start at time 0".to_string(),
                    ));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid_model(
                        "drift table times must be strictly increasing".to_string(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::invalid_model(
                        "drift table values must be non-negative".to_string(),
                    ));
                }
            }
            DriftProcess::Function { f, .. } => {
                // The non-negativity requirement cannot be checked everywhere;
                // spot-check a coarse grid so obvious mistakes fail fast.
                let t_max = if horizon_hint > 0.0 { horizon_hint } else { 1.0 };
                for i in 0..=32 {
                    let t = t_max * i as f64 / 32.0;
                    let v = f(t);
                    if !v.is_finite() || v < 0.0 {
                        return Err(Error::invalid_model(format!(
                            "drift function is negative or non-finite at t = {t}: b(t) = {v}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Is this a deterministic rate (as opposed to one sampled path)?
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, DriftProcess::Table { .. })
    }

    /// Pointwise value b(t).
    pub fn value(&self, t: f64) -> f64 {
        match self {
            DriftProcess::Constant { value } => *value,
            DriftProcess::Table { times, values } => {
                let idx = match times.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
                    Ok(i) => i,
                    Err(0) => 0,
                    Err(i) => i - 1,
                };
                values[idx]
            }
            DriftProcess::Function { f, .. } => f(t),
        }
    }

    /// ∫_{t0}^{t1} b(s) ds, exact for constants, tables and functions with a
    /// supplied antiderivative; adaptive quadrature otherwise.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        debug_assert!(t1 >= t0);
        match self {
            DriftProcess::Constant { value } => value * (t1 - t0),
            DriftProcess::Table { times, values } => {
                let mut total = 0.0;
                for j in 0..times.len() {
                    let seg_lo = times[j].max(t0);
                    let seg_hi = if j + 1 < times.len() {
                        times[j + 1].min(t1)
                    } else {
                        t1
                    };
                    if seg_hi > seg_lo {
                        total += values[j] * (seg_hi - seg_lo);
                    }
                }
                total
            }
            DriftProcess::Function { f, antiderivative } => match antiderivative {
                Some(big_f) => big_f(t1) - big_f(t0),
                None => quad::integrate_smooth(|s| f(s), t0, t1, 1e-12)
                    .expect("drift quadrature failed"),
            },
        }
    }

    /// Interval integral as consumed by the Euler scheme: exact when an
    /// exact form exists, otherwise the left-endpoint rule on the master
    /// grid cells covering `[t0, t1]`.
    pub fn integral_on_master(&self, t0: f64, t1: f64, master_points: &[f64]) -> f64 {
        match self {
            DriftProcess::Function {
                f,
                antiderivative: None,
            } => {
                let mut total = 0.0;
                // Left-endpoint rule over each master cell overlapping [t0, t1].
                let start = match master_points.binary_search_by(|p| p.partial_cmp(&t0).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.saturating_sub(1),
                };
                let mut j = start;
                while j < master_points.len() {
                    let cell_lo = master_points[j];
                    let cell_hi = if j + 1 < master_points.len() {
                        master_points[j + 1]
                    } else {
                        f64::INFINITY
                    };
                    let lo = cell_lo.max(t0);
                    let hi = cell_hi.min(t1);
                    if hi > lo {
                        total += f(cell_lo) * (hi - lo);
                    }
                    if cell_hi >= t1 {
                        break;
                    }
                    j += 1;
                }
                total
            }
            _ => self.integral(t0, t1),
        }
    }
}

/// A scalar state coefficient such as σ(·) or the Lévy factor φ(·).
#[derive(Clone)]
pub enum Coefficient {
    Zero,
    /// c·√(x⁺).
    SqrtScaled(f64),
    /// A parsed expression in `x`, evaluated on x ≥ 0 (zero below).
    Expr(Expr),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Zero => write!(f, "0"),
            Coefficient::SqrtScaled(c) => write!(f, "{c}*sqrt(x)"),
            Coefficient::Expr(e) => write!(f, "{e}"),
            Coefficient::Custom(_) => write!(f, "<fn>"),
        }
    }
}

impl Coefficient {
    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Coefficient::Custom(Arc::new(f))
    }

    /// Evaluate on x ≥ 0; all coefficients vanish for x ≤ 0 by convention.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Coefficient::Zero => 0.0,
            Coefficient::SqrtScaled(c) => c * x.sqrt(),
            Coefficient::Expr(e) => e.eval(x),
            Coefficient::Custom(f) => f(x),
        }
    }

    fn vanishes_at_origin(&self) -> bool {
        match self {
            Coefficient::Zero | Coefficient::SqrtScaled(_) => true,
            Coefficient::Expr(e) => e.eval(0.0).abs() <= 1e-12,
            Coefficient::Custom(f) => f(0.0).abs() <= 1e-12,
        }
    }
}

/// The jump kernel g(x, u) together with its compensator provisioning.
#[derive(Clone)]
pub enum JumpKernel {
    /// No jump term.
    None,
    /// g(x,u) = u · min(x, 1); compensator m₁·min(x, 1).
    CappedLinear,
    /// g(x,u) = φ(x) · u; compensator φ(x)·m₁ (the one-sided Lévy form).
    Proportional { phi: Coefficient },
    /// Library-supplied kernel; the compensator is evaluated analytically
    /// when given and by mark-law quadrature otherwise.
    Custom {
        g: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        compensator: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
        name: String,
    },
}

impl fmt::Debug for JumpKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpKernel::None => write!(f, "None"),
            JumpKernel::CappedLinear => write!(f, "u*min(x,1)"),
            JumpKernel::Proportional { phi } => write!(f, "phi(x)*u with phi = {phi:?}"),
            JumpKernel::Custom { name, .. } => write!(f, "custom kernel '{name}'"),
        }
    }
}

impl JumpKernel {
    /// Raw kernel value for x > 0 (zero on x ≤ 0 by the model conditions).
    fn g(&self, x: f64, u: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            JumpKernel::None => 0.0,
            JumpKernel::CappedLinear => u * x.min(1.0),
            JumpKernel::Proportional { phi } => phi.eval(x) * u,
            JumpKernel::Custom { g, .. } => g(x, u),
        }
    }

    fn analytic_compensator(&self, x: f64, measure: &JumpMeasure) -> Option<f64> {
        match self {
            JumpKernel::None => Some(0.0),
            JumpKernel::CappedLinear => Some(measure.first_moment() * x.clamp(0.0, 1.0)),
            JumpKernel::Proportional { phi } => Some(phi.eval(x) * measure.first_moment()),
            JumpKernel::Custom { compensator, .. } => compensator.as_ref().map(|c| c(x)),
        }
    }
}

/// Distribution of the non-negative initial value x(0).
#[derive(Debug, Clone, PartialEq)]
pub enum InitialLaw {
    Constant { value: f64 },
    /// exp(mu + sigma·Z), Z standard normal.
    LogNormal { mu: f64, sigma: f64 },
}

impl InitialLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            InitialLaw::Constant { value } => {
                if value.is_finite() && value >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid_model(format!(
                        "initial value must be non-negative, got {value}"
                    )))
                }
            }
            InitialLaw::LogNormal { mu, sigma } => {
                if mu.is_finite() && sigma.is_finite() && sigma >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid_model(
                        "lognormal initial law needs finite mu and sigma >= 0".to_string(),
                    ))
                }
            }
        }
    }

    /// Map one standard-normal draw to a sample of the law.
    pub fn sample(&self, gauss: f64) -> f64 {
        match *self {
            InitialLaw::Constant { value } => value,
            InitialLaw::LogNormal { mu, sigma } => (mu + sigma * gauss).exp(),
        }
    }

    /// E[x(0)].
    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::Constant { value } => value,
            InitialLaw::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
        }
    }
}

/// Modulus-of-continuity data for the condition validators: the gauge ρ_m,
/// an optional mark weight f_m(u), and whether ρ² is asserted concave.
#[derive(Debug, Clone)]
pub struct ModulusSpec {
    pub rho: ModulusFamily,
    /// Mark weight f_m(u) for the factored conditions; user-supplied, no
    /// constructive recipe exists.
    pub f: Option<Coefficient>,
    pub concave_square: bool,
}

impl ModulusSpec {
    pub fn new(rho: ModulusFamily) -> Self {
        ModulusSpec {
            rho,
            f: None,
            concave_square: true,
        }
    }

    pub fn with_mark_weight(mut self, f: Coefficient) -> Self {
        self.f = Some(f);
        self
    }
}

/// The full coefficient bundle of one model.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    beta: f64,
    sigma: Coefficient,
    kernel: JumpKernel,
    drift: DriftProcess,
    measure: JumpMeasure,
    growth_constant: f64,
    initial_law: InitialLaw,
}

impl ModelSpec {
    pub fn new(
        beta: f64,
        sigma: Coefficient,
        kernel: JumpKernel,
        drift: DriftProcess,
        measure: JumpMeasure,
        growth_constant: f64,
        initial_law: InitialLaw,
    ) -> Result<Self> {
        if !(beta.is_finite() && beta < 0.0) {
            return Err(Error::invalid_model(format!(
                "mean-reversion coefficient must satisfy beta < 0, got beta = {beta}"
            )));
        }
        if !(growth_constant.is_finite() && growth_constant >= 0.0) {
            return Err(Error::invalid_model(format!(
                "growth constant K must be non-negative, got {growth_constant}"
            )));
        }
        if !sigma.vanishes_at_origin() {
            return Err(Error::invalid_model(
                "sigma must vanish at the origin (sigma(0) = 0)".to_string(),
            ));
        }
        if let JumpKernel::Proportional { phi } = &kernel {
            if !phi.vanishes_at_origin() {
                return Err(Error::invalid_model(
                    "the jump factor phi must vanish at the origin (phi(0) = 0)".to_string(),
                ));
            }
        }
        drift.validate(1.0)?;
        initial_law.validate()?;
        Ok(ModelSpec {
            beta,
            sigma,
            kernel,
            drift,
            measure,
            growth_constant,
            initial_law,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn drift(&self) -> &DriftProcess {
        &self.drift
    }

    pub fn measure(&self) -> &JumpMeasure {
        &self.measure
    }

    pub fn initial_law(&self) -> &InitialLaw {
        &self.initial_law
    }

    pub fn kernel(&self) -> &JumpKernel {
        &self.kernel
    }

    /// σ′(x) = σ(x)·1{x ≥ 0}.
    pub fn sigma_trunc(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.sigma.eval(x)
        } else {
            0.0
        }
    }

    /// g′(x,u) = g(x,u)·1{x ≥ 0}.
    pub fn g_trunc(&self, x: f64, u: f64) -> f64 {
        if x >= 0.0 {
            self.kernel.g(x, u)
        } else {
            0.0
        }
    }

    /// The truncated compensator c′(x) = ∫ g′(x,u) μ(du).
    ///
    /// Analytic for the builtin kernels; mark-law quadrature (relative
    /// tolerance [`COMPENSATOR_TOL`]) otherwise.
    pub fn compensator_trunc(&self, x: f64) -> Result<f64> {
        if x < 0.0 || self.measure.rate() == 0.0 {
            return Ok(0.0);
        }
        if let Some(v) = self.kernel.analytic_compensator(x, &self.measure) {
            return Ok(v);
        }
        self.compensator_by_quadrature(x)
    }

    /// Always-quadrature compensator, used to cross-check the analytic path.
    pub fn compensator_by_quadrature(&self, x: f64) -> Result<f64> {
        if x < 0.0 || self.measure.rate() == 0.0 {
            return Ok(0.0);
        }
        let context = format!("compensator of {:?}", self.kernel);
        self.measure
            .integrate(|u| self.kernel.g(x, u), COMPENSATOR_TOL, &context)
    }

    /// ∫ g²(x,u) μ(du), by quadrature against the mark law.
    pub fn jump_second_moment_at(&self, x: f64, rel_tol: f64) -> Result<f64> {
        let context = format!("second moment of {:?}", self.kernel);
        self.measure.integrate(
            |u| {
                let v = self.kernel.g(x, u);
                v * v
            },
            rel_tol,
            &context,
        )
    }
}
