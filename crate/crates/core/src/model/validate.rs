//! Numeric validators for the growth and modulus conditions.
//!
//! These checks are falsifiable numeric proxies on finite grids, not
//! proofs: mark integrals are evaluated by quadrature against the mark law,
//! the divergence of ∫₀₊ ρ⁻² is attested by a closed form or a threshold
//! proxy, and concavity/monotonicity are sampled pointwise.

use super::{ModelSpec, ModulusSpec};
use crate::error::{Error, Result};
use crate::yamada::{self, DivergenceReport};
use serde::{Deserialize, Serialize};

/// Which condition family a modulus check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConditionMode {
    /// |σ(x)−σ(y)|² + ∫ (|l| ∧ l²) dμ ≤ ρ²(|x−y|).
    #[serde(rename = "2c")]
    C2c,
    /// |σ(x)−σ(y)| ≤ ρ and |g(x,u)−g(y,u)| ≤ ρ·f(u), ∫ (f ∧ f²) dμ < ∞.
    #[serde(rename = "2d")]
    C2d,
    /// |σ(x)−σ(y)|² + ∫ l² dμ ≤ ρ²(|x−y|), ρ² concave.
    #[serde(rename = "3a")]
    C3a,
    /// The factored form of 3a: ∫ f² dμ < ∞, ρ² concave.
    #[serde(rename = "3b")]
    C3b,
}

impl ConditionMode {
    pub fn needs_concavity(self) -> bool {
        matches!(self, ConditionMode::C3a | ConditionMode::C3b)
    }

    pub fn needs_mark_weight(self) -> bool {
        matches!(self, ConditionMode::C2d | ConditionMode::C3b)
    }

    pub fn name(self) -> &'static str {
        match self {
            ConditionMode::C2c => "2c",
            ConditionMode::C2d => "2d",
            ConditionMode::C3a => "3a",
            ConditionMode::C3b => "3b",
        }
    }
}

/// Knobs of the validators.
#[derive(Debug, Clone)]
pub struct ValidateOptions {
    /// Relative slack when comparing the two sides of an inequality (the
    /// left side carries quadrature error).
    pub rel_tol: f64,
    /// Relative tolerance of the mark-law quadrature.
    pub quad_rel_tol: f64,
    /// Divergence-proxy threshold.
    pub divergence_threshold: f64,
    /// Divergence-proxy floor.
    pub divergence_floor: f64,
    /// Check the growth integrand as sup over y ∈ [0, x] of g²(y, u)
    /// instead of g²(x, u).
    pub strict_growth_sup: bool,
    /// Mark quantiles sampled for pointwise-in-u checks.
    pub mark_quantiles: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            rel_tol: 1e-6,
            quad_rel_tol: 1e-9,
            divergence_threshold: 1e3,
            divergence_floor: 1e-12,
            strict_growth_sup: false,
            mark_quantiles: 33,
        }
    }
}

/// One state's growth check.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthCheck {
    pub x: f64,
    /// σ²(x) + ∫ g²(x,u) μ(du).
    pub lhs: f64,
    /// K(1+x).
    pub rhs: f64,
    pub pass: bool,
}

/// Outcome of the linear-growth validation.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub growth_k: f64,
    pub strict_sup: bool,
    pub checks: Vec<GrowthCheck>,
    /// max over the grid of lhs/(1+x): the smallest K the grid admits.
    pub tightest_k: f64,
    /// Standard error of the mark integrals (zero: quadrature, not Monte
    /// Carlo, is used against the mark law).
    pub integral_se: f64,
    pub all_pass: bool,
}

/// Check σ²(x) + ∫ g²(x,u) μ(du) ≤ K(1+x) on a state grid.
pub fn validate_growth(
    spec: &ModelSpec,
    grid: &[f64],
    options: &ValidateOptions,
) -> Result<GrowthReport> {
    if grid.is_empty() {
        return Err(Error::invalid_argument(
            "growth validation needs a non-empty state grid".to_string(),
        ));
    }
    if let Some(bad) = grid.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::invalid_argument(format!(
            "growth grid states must be non-negative, got {bad}"
        )));
    }
    let k = spec.growth_constant();
    let mut checks = Vec::with_capacity(grid.len());
    let mut tightest = 0.0_f64;
    let mut all_pass = true;
    for &x in grid {
        let sigma = spec.sigma_trunc(x);
        let jump_part = if options.strict_growth_sup {
            // sup over y ∈ [0, x] of g²(y, u), sampled on a y-subgrid
            // inside the integrand.
            let ys: Vec<f64> = (0..=32).map(|i| x * i as f64 / 32.0).collect();
            spec.measure().integrate(
                |u| {
                    ys.iter()
                        .map(|&y| {
                            let g = spec.g_trunc(y, u);
                            g * g
                        })
                        .fold(0.0, f64::max)
                },
                options.quad_rel_tol,
                "growth integrand (strict sup)",
            )?
        } else {
            spec.jump_second_moment_at(x, options.quad_rel_tol)?
        };
        let lhs = sigma * sigma + jump_part;
        let rhs = k * (1.0 + x);
        let pass = lhs <= rhs + options.rel_tol * rhs.abs().max(1.0);
        all_pass &= pass;
        tightest = tightest.max(lhs / (1.0 + x));
        checks.push(GrowthCheck { x, lhs, rhs, pass });
    }
    Ok(GrowthReport {
        growth_k: k,
        strict_sup: options.strict_growth_sup,
        checks,
        tightest_k: tightest,
        integral_se: 0.0,
        all_pass,
    })
}

/// One state pair's modulus check.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusPairCheck {
    pub x: f64,
    pub y: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// For the factored modes: the worst |l|/(ρ·f) ratio over sampled marks.
    pub worst_mark_ratio: Option<f64>,
}

/// Outcome of the modulus-of-continuity validation.
#[derive(Debug, Clone, Serialize)]
pub struct ModulusReport {
    pub mode: ConditionMode,
    pub bound_m: f64,
    pub pair_checks: Vec<ModulusPairCheck>,
    /// x ↦ g(x, u) non-decreasing on the sampled mark quantiles.
    pub kernel_monotone: bool,
    /// ρ non-decreasing on a sampled grid over (0, m].
    pub rho_nondecreasing: bool,
    pub divergence: DivergenceReport,
    /// Midpoint concavity of ρ² on sampled triples (3a/3b only).
    pub concavity_ok: Option<bool>,
    /// ∫ (f ∧ f²) dμ (mode 2d) or ∫ f² dμ (mode 3b).
    pub mark_weight_integral: Option<f64>,
    pub all_pass: bool,
}

/// Check the selected modulus condition on a grid of state pairs in [0, m].
pub fn validate_modulus(
    spec: &ModelSpec,
    modulus: &ModulusSpec,
    mode: ConditionMode,
    pairs: &[(f64, f64)],
    bound_m: f64,
    options: &ValidateOptions,
) -> Result<ModulusReport> {
    for &(x, y) in pairs {
        if !(0.0..=bound_m).contains(&x) || !(0.0..=bound_m).contains(&y) {
            return Err(Error::invalid_argument(format!(
                "pair ({x}, {y}) outside [0, {bound_m}]"
            )));
        }
    }
    if mode.needs_mark_weight() && modulus.f.is_none() {
        return Err(Error::invalid_argument(format!(
            "mode {} needs the mark weight f_m(u) in the modulus data",
            mode.name()
        )));
    }
    let rho = &modulus.rho;
    let measure = spec.measure();
    let quantiles: Vec<f64> = (1..=options.mark_quantiles)
        .map(|i| {
            measure
                .law()
                .quantile(i as f64 / (options.mark_quantiles + 1) as f64)
        })
        .collect();

    let mut pair_checks = Vec::with_capacity(pairs.len());
    let mut all_pass = true;
    for &(x, y) in pairs {
        let dz = (x - y).abs();
        let ds = (spec.sigma_trunc(x) - spec.sigma_trunc(y)).abs();
        let l = |u: f64| spec.g_trunc(x, u) - spec.g_trunc(y, u);
        let (lhs, rhs, worst_ratio) = match mode {
            ConditionMode::C2c => {
                let li = measure.integrate(
                    |u| {
                        let v = l(u);
                        v.abs().min(v * v)
                    },
                    options.quad_rel_tol,
                    "modulus 2c mark integral",
                )?;
                (ds * ds + li, rho.rho_sq(dz), None)
            }
            ConditionMode::C3a => {
                let li = measure.integrate(
                    |u| {
                        let v = l(u);
                        v * v
                    },
                    options.quad_rel_tol,
                    "modulus 3a mark integral",
                )?;
                (ds * ds + li, rho.rho_sq(dz), None)
            }
            ConditionMode::C2d | ConditionMode::C3b => {
                // σ part plus the pointwise-in-u factored bound on sampled
                // mark quantiles: |l(u)| ≤ ρ(|x−y|)·f(u).
                let f = modulus.f.as_ref().unwrap();
                let rho_dz = rho.rho(dz);
                let mut worst = 0.0_f64;
                for &u in &quantiles {
                    let bound = rho_dz * f.eval(u);
                    let v = l(u).abs();
                    if bound > 0.0 {
                        worst = worst.max(v / bound);
                    } else if v > options.rel_tol {
                        worst = f64::INFINITY;
                    }
                }
                (ds.max(worst * rho_dz), rho_dz, Some(worst))
            }
        };
        let pass = lhs <= rhs + options.rel_tol * rhs.abs().max(1e-12);
        all_pass &= pass;
        pair_checks.push(ModulusPairCheck {
            x,
            y,
            lhs,
            rhs,
            pass,
            worst_mark_ratio: worst_ratio,
        });
    }

    // Monotonicity of x ↦ g(x,u) on sampled marks.
    let mut kernel_monotone = true;
    if measure.rate() > 0.0 {
        'outer: for &u in &quantiles {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=64 {
                let x = bound_m * i as f64 / 64.0;
                let g = spec.g_trunc(x, u);
                if g < prev - 1e-12 {
                    kernel_monotone = false;
                    break 'outer;
                }
                prev = g;
            }
        }
    }
    all_pass &= kernel_monotone;

    // ρ itself must be non-decreasing on the sampled range.
    let mut rho_nondecreasing = true;
    let mut prev = 0.0_f64;
    for i in 1..=256 {
        let z = bound_m * i as f64 / 256.0;
        let r = rho.rho(z);
        if r < prev - 1e-12 {
            rho_nondecreasing = false;
            break;
        }
        prev = r;
    }
    all_pass &= rho_nondecreasing;

    let divergence = yamada::check_divergence(
        rho,
        options.divergence_threshold,
        options.divergence_floor,
    )?;
    all_pass &= divergence.pass;

    // Midpoint concavity of ρ² on sampled triples.
    let concavity_ok = if mode.needs_concavity() {
        let mut ok = true;
        let zs: Vec<f64> = (1..=64).map(|i| bound_m * i as f64 / 64.0).collect();
        for (i, &a) in zs.iter().enumerate() {
            for &b in &zs[i..] {
                let mid = rho.rho_sq(0.5 * (a + b));
                let avg = 0.5 * (rho.rho_sq(a) + rho.rho_sq(b));
                if mid < avg - options.rel_tol * avg.abs().max(1e-12) {
                    ok = false;
                }
            }
        }
        all_pass &= ok;
        Some(ok)
    } else {
        None
    };

    // Finiteness of the mark-weight integral (reported; quadrature failure
    // or a non-finite value fails the check).
    let mark_weight_integral = if mode.needs_mark_weight() {
        let f = modulus.f.as_ref().unwrap();
        let integral = match mode {
            ConditionMode::C2d => measure.integrate(
                |u| {
                    let v = f.eval(u);
                    v.min(v * v)
                },
                options.quad_rel_tol,
                "mark weight f ∧ f²",
            )?,
            _ => measure.integrate(
                |u| {
                    let v = f.eval(u);
                    v * v
                },
                options.quad_rel_tol,
                "mark weight f²",
            )?,
        };
        all_pass &= integral.is_finite();
        Some(integral)
    } else {
        None
    };

    Ok(ModulusReport {
        mode,
        bound_m,
        pair_checks,
        kernel_monotone,
        rho_nondecreasing,
        divergence,
        concavity_ok,
        mark_weight_integral,
        all_pass,
    })
}
