//! Estimators and explicit bounds for the Euler scheme.
//!
//! The strong error E[sup_{t≤T} |x_n(t) − x(t)|] is estimated with the
//! finest mesh standing in for the unavailable exact solution: all meshes
//! of one path ride one shared noise realization, so per-path sup distances
//! are measured pathwise and averaged. Moment curves are compared against
//! the explicit bounds
//!
//! ```text
//! G_t = (E[x(0)] + ∫₀ᵗ E b(s) ds + 2 + K t) · e^{(K−β)t}
//! H_t = E[x(0)] + ∫₀ᵗ E b(s) ds + 2 + K t + (K−β) t G_t
//! E|x_n(t) − x_n(η_n(t))| ≤ γ(‖Δ‖) − β G_T ‖Δ‖ + 2 √(K (G_T + 1) ‖Δ‖)
//! ```
//!
//! with γ(ν) = sup over windows of length ≤ ν of ∫ E b. All Monte Carlo
//! reductions use the fixed-shape pairwise tree from [`crate::stats`], so
//! results are bit-identical across runs and worker counts.

use crate::error::{Error, Result};
use crate::euler::{self, MasterEval};
use crate::model::{DriftProcess, ModelSpec};
use crate::noise::{Net, NoiseRealization};
use crate::quad;
use crate::stats;
use serde::Serialize;
use std::sync::Arc;

/// G_t: uniform bound on E|x_n(η_n(t))|.
pub fn bound_g(spec: &ModelSpec, t: f64) -> f64 {
    let k = spec.growth_constant();
    let base = spec.initial_law().mean() + spec.drift().integral(0.0, t) + 2.0 + k * t;
    base * ((k - spec.beta()) * t).exp()
}

/// H_t: uniform bound on E|x_n(t)|.
pub fn bound_h(spec: &ModelSpec, t: f64) -> f64 {
    let k = spec.growth_constant();
    let base = spec.initial_law().mean() + spec.drift().integral(0.0, t) + 2.0 + k * t;
    base + (k - spec.beta()) * t * bound_g(spec, t)
}

/// γ(ν) = sup_{0≤s≤t≤s+ν≤T} ∫ₛᵗ E b(u) du.
///
/// Since b ≥ 0, the supremum is attained on windows of full length ν; the
/// start point is searched on a doubling grid until two refinements agree
/// to 1e−8. For a table drift (one adapted sample path) the path itself
/// stands in for the mean.
pub fn gamma(spec: &ModelSpec, horizon: f64, nu: f64) -> Result<f64> {
    if !(0.0..=horizon).contains(&nu) {
        return Err(Error::invalid_argument(format!(
            "window length {nu} outside [0, {horizon}]"
        )));
    }
    if nu == 0.0 {
        return Ok(0.0);
    }
    let drift = spec.drift();
    let sup_on_grid = |m: usize| -> f64 {
        let mut sup = f64::NEG_INFINITY;
        for i in 0..=m {
            let s = (horizon - nu) * i as f64 / m as f64;
            sup = sup.max(drift.integral(s, s + nu));
        }
        sup
    };
    let mut m = 64;
    let mut prev = sup_on_grid(m);
    loop {
        m *= 2;
        let cur = sup_on_grid(m);
        if (cur - prev).abs() < 1e-8 * cur.abs().max(1.0) || m >= (1 << 20) {
            return Ok(cur);
        }
        prev = cur;
    }
}

/// The mesh-increment bound γ(h) − β·G_T·h + 2√(K(G_T+1)h).
pub fn bound_increment(spec: &ModelSpec, horizon: f64, mesh: f64) -> Result<f64> {
    let g_t = bound_g(spec, horizon);
    let k = spec.growth_constant();
    Ok(gamma(spec, horizon, mesh)? - spec.beta() * g_t * mesh
        + 2.0 * (k * (g_t + 1.0) * mesh).sqrt())
}

/// Exact mean E x(t) = E x(0)·e^{βt} + ∫₀ᵗ e^{β(t−s)} b(s) ds.
///
/// The martingale terms of the dynamics have zero mean, so the mean obeys
/// the linear ODE dE x = (b(t) + β E x) dt. Closed form for constant b,
/// quadrature (absolute tolerance 1e−10) for deterministic b, unsupported
/// for a sampled drift path.
pub fn mean_oracle(spec: &ModelSpec, t: f64) -> Result<f64> {
    let beta = spec.beta();
    let x0 = spec.initial_law().mean();
    match spec.drift() {
        DriftProcess::Constant { value } => {
            Ok(x0 * (beta * t).exp() + value / (-beta) * (1.0 - (beta * t).exp()))
        }
        DriftProcess::Function { f, .. } => {
            let convolution =
                quad::integrate_smooth(|s| (beta * (t - s)).exp() * f(s), 0.0, t, 1e-10)?;
            Ok(x0 * (beta * t).exp() + convolution)
        }
        DriftProcess::Table { .. } => Err(Error::Unsupported(
            "the mean oracle needs a deterministic drift, not a sampled path".to_string(),
        )),
    }
}

/// Moment curves of one mesh, evaluated at every master point.
#[derive(Debug, Clone, Serialize)]
pub struct MomentCurve {
    /// Master-grid times.
    pub times: Vec<f64>,
    /// E|x_n(t)| with standard errors.
    pub mean_state: Vec<f64>,
    pub se_state: Vec<f64>,
    /// E|x_n(η_n(t))| with standard errors.
    pub mean_frozen: Vec<f64>,
    pub se_frozen: Vec<f64>,
    /// E|x_n(t) − x_n(η_n(t))| with standard errors.
    pub mean_increment: Vec<f64>,
    pub se_increment: Vec<f64>,
    pub n_paths: usize,
}

/// Running curve sums over one block of paths.
#[derive(Clone)]
struct CurveAcc {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
}

impl CurveAcc {
    fn new(len: usize) -> Self {
        CurveAcc {
            sum: vec![0.0; len],
            sumsq: vec![0.0; len],
        }
    }

    fn add(&mut self, j: usize, v: f64) {
        self.sum[j] += v;
        self.sumsq[j] += v * v;
    }

    fn merge(mut self, other: CurveAcc) -> CurveAcc {
        for j in 0..self.sum.len() {
            self.sum[j] += other.sum[j];
            self.sumsq[j] += other.sumsq[j];
        }
        self
    }

    fn mean_se(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let nf = n as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / nf).collect();
        let se: Vec<f64> = self
            .sumsq
            .iter()
            .zip(mean.iter())
            .map(|(&sq, &m)| {
                if n < 2 {
                    0.0
                } else {
                    let var = ((sq - nf * m * m) / (nf - 1.0)).max(0.0);
                    (var / nf).sqrt()
                }
            })
            .collect();
        (mean, se)
    }
}

fn accumulate_curves(acc: &mut [CurveAcc; 3], eval: &MasterEval) {
    for j in 0..eval.values.len() {
        acc[0].add(j, eval.values[j].abs());
        acc[1].add(j, eval.frozen[j].abs());
        acc[2].add(j, (eval.values[j] - eval.frozen[j]).abs());
    }
}

/// Monte Carlo moment curves for one net, on the master grid.
pub fn moment_curve(
    spec: &Arc<ModelSpec>,
    net: &Net,
    master: &Net,
    n_paths: usize,
    seed: u64,
    deterministic: bool,
) -> Result<MomentCurve> {
    if n_paths == 0 {
        return Err(Error::invalid_argument("need at least one path".to_string()));
    }
    net.nested_indices(master)?;
    let len = master.n_intervals() + 1;
    let worker = |range: std::ops::Range<usize>| -> Result<[CurveAcc; 3]> {
        let mut acc = [CurveAcc::new(len), CurveAcc::new(len), CurveAcc::new(len)];
        for idx in range {
            let noise = Arc::new(NoiseRealization::sample(
                master,
                spec.measure(),
                seed,
                idx as u64,
            ));
            let path = euler::simulate_path(spec, net, &noise)?;
            let eval = path.evaluate_on_master();
            accumulate_curves(&mut acc, &eval);
        }
        Ok(acc)
    };
    let combine = |a: Result<[CurveAcc; 3]>, b: Result<[CurveAcc; 3]>| -> Result<[CurveAcc; 3]> {
        let [a0, a1, a2] = a?;
        let [b0, b1, b2] = b?;
        Ok([a0.merge(b0), a1.merge(b1), a2.merge(b2)])
    };
    let acc = stats::parallel_blocks(n_paths, worker, combine, deterministic).unwrap()?;
    let (mean_state, se_state) = acc[0].mean_se(n_paths);
    let (mean_frozen, se_frozen) = acc[1].mean_se(n_paths);
    let (mean_increment, se_increment) = acc[2].mean_se(n_paths);
    Ok(MomentCurve {
        times: master.points().to_vec(),
        mean_state,
        se_state,
        mean_frozen,
        se_frozen,
        mean_increment,
        se_increment,
        n_paths,
    })
}

/// Monte Carlo estimate of E[sup_t |x_coarse(t) − x_ref(t)|] with shared
/// noise; returns (estimate, standard error).
pub fn l1_supnorm_error(
    spec: &Arc<ModelSpec>,
    coarse: &Net,
    reference: &Net,
    master: &Net,
    n_paths: usize,
    seed: u64,
    deterministic: bool,
) -> Result<(f64, f64)> {
    if n_paths == 0 {
        return Err(Error::invalid_argument("need at least one path".to_string()));
    }
    coarse.nested_indices(master)?;
    reference.nested_indices(master)?;
    if coarse.points() != reference.points() && reference.mesh() > coarse.mesh() {
        return Err(Error::invalid_argument(format!(
            "reference mesh {} is coarser than the study mesh {}",
            reference.mesh(),
            coarse.mesh()
        )));
    }
    let worker = |range: std::ops::Range<usize>| -> Result<Vec<f64>> {
        let mut sups = Vec::with_capacity(range.len());
        for idx in range {
            let noise = Arc::new(NoiseRealization::sample(
                master,
                spec.measure(),
                seed,
                idx as u64,
            ));
            let a = euler::simulate_path(spec, coarse, &noise)?;
            let b = euler::simulate_path(spec, reference, &noise)?;
            sups.push(euler::sup_distance(&a, &b)?);
        }
        Ok(sups)
    };
    let combine = |a: Result<Vec<f64>>, b: Result<Vec<f64>>| -> Result<Vec<f64>> {
        let mut a = a?;
        a.extend(b?);
        Ok(a)
    };
    let sups = stats::parallel_blocks(n_paths, worker, combine, deterministic).unwrap()?;
    Ok(stats::mean_se(&sups))
}

/// Inputs of a convergence study.
#[derive(Debug, Clone)]
pub struct StudySetup {
    pub spec: Arc<ModelSpec>,
    pub horizon: f64,
    /// Master-grid steps over [0, T]; every other step count must divide it.
    pub master_steps: usize,
    /// Study meshes as step counts, strictly increasing (mesh decreasing).
    pub study_steps: Vec<usize>,
    /// Reference (proxy-solution) steps, strictly finer than every study mesh.
    pub reference_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Fixed-tree reductions (bit-identical across worker counts).
    pub deterministic: bool,
}

/// Bound checks of one mesh against G_T, H_T and the increment bound.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub mesh: f64,
    pub g_bound: f64,
    pub max_mean_frozen: f64,
    pub g_ok: bool,
    pub h_bound: f64,
    pub max_mean_state: f64,
    pub h_ok: bool,
    pub increment_bound: f64,
    pub max_mean_increment: f64,
    pub increment_ok: bool,
}

impl BoundCheck {
    pub fn all_ok(&self) -> bool {
        self.g_ok && self.h_ok && self.increment_ok
    }
}

/// Result of a coupled-mesh convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Study mesh sizes, strictly decreasing.
    pub meshes: Vec<f64>,
    /// Estimated E[sup_t |x_mesh − x_ref|] per mesh, with standard errors.
    pub errors: Vec<f64>,
    pub errors_se: Vec<f64>,
    /// Log-log slope of error against mesh.
    pub fitted_rate: f64,
    pub fitted_rate_se: f64,
    /// fitted_rate ± 2·se.
    pub fitted_rate_ci: [f64; 2],
    pub errors_nonincreasing_within_2se: bool,
    /// Per mesh (study meshes first, reference last).
    pub bound_checks: Vec<BoundCheck>,
    /// E[sup_t max(−x_n(t), 0)] per study mesh.
    pub negative_part: Vec<f64>,
    pub negative_part_se: Vec<f64>,
    pub reference_mesh: f64,
    pub reference_negative_part: f64,
    pub reference_negative_part_se: f64,
    /// Reference-mesh terminal statistics.
    pub terminal_mean: f64,
    pub terminal_se: f64,
    /// Accumulated jump-minus-compensator term at T (reference mesh).
    pub compensated_jump_mean: f64,
    pub compensated_jump_se: f64,
    pub all_bounds_ok: bool,
}

struct MeshAcc {
    sup_err: Vec<f64>,
    neg_sup: Vec<f64>,
    curves: [CurveAcc; 3],
}

impl MeshAcc {
    fn new(len: usize) -> Self {
        MeshAcc {
            sup_err: Vec::new(),
            neg_sup: Vec::new(),
            curves: [CurveAcc::new(len), CurveAcc::new(len), CurveAcc::new(len)],
        }
    }

    fn merge(mut self, other: MeshAcc) -> MeshAcc {
        self.sup_err.extend(other.sup_err);
        self.neg_sup.extend(other.neg_sup);
        let [a0, a1, a2] = self.curves;
        let [b0, b1, b2] = other.curves;
        self.curves = [a0.merge(b0), a1.merge(b1), a2.merge(b2)];
        self
    }
}

struct StudyAcc {
    per_mesh: Vec<MeshAcc>,
    reference: MeshAcc,
    terminal: Vec<f64>,
    compensated: Vec<f64>,
}

impl StudyAcc {
    fn merge(mut self, other: StudyAcc) -> StudyAcc {
        self.per_mesh = self
            .per_mesh
            .into_iter()
            .zip(other.per_mesh)
            .map(|(a, b)| a.merge(b))
            .collect();
        self.reference = self.reference.merge(other.reference);
        self.terminal.extend(other.terminal);
        self.compensated.extend(other.compensated);
        self
    }
}

/// sup over all master points and jump instants of |a − b|.
fn sup_from_evals(a: &MasterEval, b: &MasterEval) -> f64 {
    let mut sup = 0.0_f64;
    for (va, vb) in a.values.iter().zip(b.values.iter()) {
        sup = sup.max((va - vb).abs());
    }
    for (ja, jb) in a.jump_values.iter().zip(b.jump_values.iter()) {
        sup = sup.max((ja.pre - jb.pre).abs());
        sup = sup.max((ja.post - jb.post).abs());
    }
    sup
}

/// Run the coupled-mesh convergence study.
pub fn convergence_study(setup: &StudySetup) -> Result<ConvergenceReport> {
    let StudySetup {
        spec,
        horizon,
        master_steps,
        study_steps,
        reference_steps,
        n_paths,
        seed,
        deterministic,
    } = setup;
    let (horizon, master_steps, reference_steps, n_paths, seed, deterministic) = (
        *horizon,
        *master_steps,
        *reference_steps,
        *n_paths,
        *seed,
        *deterministic,
    );

    if study_steps.len() < 2 {
        return Err(Error::invalid_argument(
            "a convergence study needs at least two study meshes".to_string(),
        ));
    }
    if n_paths == 0 {
        return Err(Error::invalid_argument("need at least one path".to_string()));
    }
    if study_steps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid_argument(
            "study step counts must be strictly increasing".to_string(),
        ));
    }
    for &steps in study_steps {
        if steps == 0 || master_steps % steps != 0 {
            return Err(Error::invalid_argument(format!(
                "study step count {steps} does not divide the master resolution {master_steps}"
            )));
        }
    }
    if reference_steps == 0 || master_steps % reference_steps != 0 {
        return Err(Error::invalid_argument(format!(
            "reference step count {reference_steps} does not divide the master resolution"
        )));
    }
    if reference_steps <= *study_steps.last().unwrap() {
        return Err(Error::invalid_argument(
            "the reference mesh must be strictly finer than every study mesh".to_string(),
        ));
    }

    let master = Net::uniform(horizon, master_steps)?;
    let ref_net = Net::uniform(horizon, reference_steps)?;
    let nets: Vec<Net> = study_steps
        .iter()
        .map(|&n| Net::uniform(horizon, n))
        .collect::<Result<_>>()?;
    let len = master.n_intervals() + 1;
    let n_meshes = nets.len();

    let worker = |range: std::ops::Range<usize>| -> Result<StudyAcc> {
        let mut acc = StudyAcc {
            per_mesh: (0..n_meshes).map(|_| MeshAcc::new(len)).collect(),
            reference: MeshAcc::new(len),
            terminal: Vec::with_capacity(range.len()),
            compensated: Vec::with_capacity(range.len()),
        };
        for idx in range {
            let noise = Arc::new(NoiseRealization::sample(
                &master,
                spec.measure(),
                seed,
                idx as u64,
            ));
            let ref_path = euler::simulate_path(spec, &ref_net, &noise)?;
            let ref_eval = ref_path.evaluate_on_master();
            for (i, net) in nets.iter().enumerate() {
                let path = euler::simulate_path(spec, net, &noise)?;
                let eval = path.evaluate_on_master();
                let mesh_acc = &mut acc.per_mesh[i];
                mesh_acc.sup_err.push(sup_from_evals(&eval, &ref_eval));
                mesh_acc.neg_sup.push(eval.sup_negative_part());
                accumulate_curves(&mut mesh_acc.curves, &eval);
            }
            acc.reference.neg_sup.push(ref_eval.sup_negative_part());
            accumulate_curves(&mut acc.reference.curves, &ref_eval);
            acc.terminal.push(*ref_path.states().last().unwrap());
            acc.compensated.push(ref_path.compensated_jump_total());
        }
        Ok(acc)
    };
    let combine = |a: Result<StudyAcc>, b: Result<StudyAcc>| -> Result<StudyAcc> {
        Ok(a?.merge(b?))
    };
    let acc = stats::parallel_blocks(n_paths, worker, combine, deterministic).unwrap()?;

    // Per-mesh error statistics and bound checks.
    let g_t = bound_g(spec, horizon);
    let h_t = bound_h(spec, horizon);
    let mut meshes = Vec::with_capacity(n_meshes);
    let mut errors = Vec::with_capacity(n_meshes);
    let mut errors_se = Vec::with_capacity(n_meshes);
    let mut negative_part = Vec::with_capacity(n_meshes);
    let mut negative_part_se = Vec::with_capacity(n_meshes);
    let mut bound_checks = Vec::with_capacity(n_meshes + 1);

    let check_mesh = |mesh: f64, curves: &[CurveAcc; 3]| -> Result<BoundCheck> {
        let (mean_state, se_state) = curves[0].mean_se(n_paths);
        let (mean_frozen, se_frozen) = curves[1].mean_se(n_paths);
        let (mean_inc, se_inc) = curves[2].mean_se(n_paths);
        let inc_bound = bound_increment(spec, horizon, mesh)?;
        let mut g_ok = true;
        let mut h_ok = true;
        let mut inc_ok = true;
        let mut max_frozen = 0.0_f64;
        let mut max_state = 0.0_f64;
        let mut max_inc = 0.0_f64;
        for j in 0..mean_state.len() {
            g_ok &= mean_frozen[j] <= g_t + 3.0 * se_frozen[j];
            h_ok &= mean_state[j] <= h_t + 3.0 * se_state[j];
            inc_ok &= mean_inc[j] <= inc_bound + 3.0 * se_inc[j];
            max_frozen = max_frozen.max(mean_frozen[j]);
            max_state = max_state.max(mean_state[j]);
            max_inc = max_inc.max(mean_inc[j]);
        }
        Ok(BoundCheck {
            mesh,
            g_bound: g_t,
            max_mean_frozen: max_frozen,
            g_ok,
            h_bound: h_t,
            max_mean_state: max_state,
            h_ok,
            increment_bound: inc_bound,
            max_mean_increment: max_inc,
            increment_ok: inc_ok,
        })
    };

    for (i, &steps) in study_steps.iter().enumerate() {
        let mesh = horizon / steps as f64;
        let (err, se) = stats::mean_se(&acc.per_mesh[i].sup_err);
        let (neg, neg_se) = stats::mean_se(&acc.per_mesh[i].neg_sup);
        meshes.push(mesh);
        errors.push(err);
        errors_se.push(se);
        negative_part.push(neg);
        negative_part_se.push(neg_se);
        bound_checks.push(check_mesh(mesh, &acc.per_mesh[i].curves)?);
    }
    let reference_mesh = horizon / reference_steps as f64;
    bound_checks.push(check_mesh(reference_mesh, &acc.reference.curves)?);

    // Log-log rate fit over meshes with positive error.
    let mut log_h = Vec::new();
    let mut log_e = Vec::new();
    for (&h, &e) in meshes.iter().zip(errors.iter()) {
        if e > 0.0 {
            log_h.push(h.ln());
            log_e.push(e.ln());
        }
    }
    let (fitted_rate, fitted_rate_se) = if log_h.len() >= 2 {
        stats::ols_slope(&log_h, &log_e)
    } else {
        (f64::NAN, f64::NAN)
    };

    let mut nonincreasing = true;
    for i in 1..errors.len() {
        let slack = 2.0 * (errors_se[i - 1].powi(2) + errors_se[i].powi(2)).sqrt();
        nonincreasing &= errors[i] <= errors[i - 1] + slack;
    }

    let (terminal_mean, terminal_se) = stats::mean_se(&acc.terminal);
    let (comp_mean, comp_se) = stats::mean_se(&acc.compensated);
    let (ref_neg, ref_neg_se) = stats::mean_se(&acc.reference.neg_sup);
    let all_bounds_ok = bound_checks.iter().all(BoundCheck::all_ok);

    Ok(ConvergenceReport {
        horizon,
        n_paths,
        seed,
        meshes,
        errors,
        errors_se,
        fitted_rate,
        fitted_rate_se,
        fitted_rate_ci: [
            fitted_rate - 2.0 * fitted_rate_se,
            fitted_rate + 2.0 * fitted_rate_se,
        ],
        errors_nonincreasing_within_2se: nonincreasing,
        bound_checks,
        negative_part,
        negative_part_se,
        reference_mesh,
        reference_negative_part: ref_neg,
        reference_negative_part_se: ref_neg_se,
        terminal_mean,
        terminal_se,
        compensated_jump_mean: comp_mean,
        compensated_jump_se: comp_se,
        all_bounds_ok,
    })
}

/// One histogram bin of terminal states.
#[derive(Debug, Clone, Serialize)]
pub struct HistBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Summary statistics of a plain simulation run on one net.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    /// Net points.
    pub times: Vec<f64>,
    /// Mean state at each net point, with standard errors.
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
    /// E[sup_t max(−x, 0)].
    pub negative_part_mean: f64,
    pub negative_part_se: f64,
    /// Accumulated jump-minus-compensator term at T.
    pub compensated_jump_mean: f64,
    pub compensated_jump_se: f64,
    pub terminal_mean: f64,
    pub terminal_se: f64,
    pub terminal_histogram: Vec<HistBin>,
    pub n_paths: usize,
    pub seed: u64,
}

/// Simulate `n_paths` paths on `net` and summarize.
pub fn simulate_summary(
    spec: &Arc<ModelSpec>,
    net: &Net,
    master: &Net,
    n_paths: usize,
    seed: u64,
    deterministic: bool,
) -> Result<SimulationSummary> {
    if n_paths == 0 {
        return Err(Error::invalid_argument("need at least one path".to_string()));
    }
    net.nested_indices(master)?;
    let n_points = net.n_intervals() + 1;

    struct Acc {
        curve: CurveAcc,
        neg: Vec<f64>,
        comp: Vec<f64>,
        terminal: Vec<f64>,
    }
    let worker = |range: std::ops::Range<usize>| -> Result<Acc> {
        let mut acc = Acc {
            curve: CurveAcc::new(n_points),
            neg: Vec::with_capacity(range.len()),
            comp: Vec::with_capacity(range.len()),
            terminal: Vec::with_capacity(range.len()),
        };
        for idx in range {
            let noise = Arc::new(NoiseRealization::sample(
                master,
                spec.measure(),
                seed,
                idx as u64,
            ));
            let path = euler::simulate_path(spec, net, &noise)?;
            for (j, &x) in path.states().iter().enumerate() {
                acc.curve.add(j, x);
            }
            acc.neg.push(path.evaluate_on_master().sup_negative_part());
            acc.comp.push(path.compensated_jump_total());
            acc.terminal.push(*path.states().last().unwrap());
        }
        Ok(acc)
    };
    let combine = |a: Result<Acc>, b: Result<Acc>| -> Result<Acc> {
        let mut a = a?;
        let b = b?;
        a.curve = a.curve.merge(b.curve);
        a.neg.extend(b.neg);
        a.comp.extend(b.comp);
        a.terminal.extend(b.terminal);
        Ok(a)
    };
    let acc = stats::parallel_blocks(n_paths, worker, combine, deterministic).unwrap()?;

    let (mean, se) = acc.curve.mean_se(n_paths);
    let (neg_mean, neg_se) = stats::mean_se(&acc.neg);
    let (comp_mean, comp_se) = stats::mean_se(&acc.comp);
    let (terminal_mean, terminal_se) = stats::mean_se(&acc.terminal);

    // Fixed 50-bin histogram over the observed range.
    let lo = acc.terminal.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = acc
        .terminal
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let bins = 50usize;
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in &acc.terminal {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let terminal_histogram = counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistBin {
            lo: lo + width * i as f64,
            hi: lo + width * (i + 1) as f64,
            count,
        })
        .collect();

    Ok(SimulationSummary {
        times: net.points().to_vec(),
        mean,
        se,
        negative_part_mean: neg_mean,
        negative_part_se: neg_se,
        compensated_jump_mean: comp_mean,
        compensated_jump_se: comp_se,
        terminal_mean,
        terminal_se,
        terminal_histogram,
        n_paths,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Coefficient, DriftProcess, InitialLaw, JumpKernel, JumpMeasure, MarkLaw, ModelSpec,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn linear_spec(beta: f64, b: f64, x0: f64) -> Arc<ModelSpec> {
        Arc::new(
            ModelSpec::new(
                beta,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::constant(b),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: x0 },
            )
            .unwrap(),
        )
    }

    fn cir_jump_spec() -> Arc<ModelSpec> {
        // σ0 = 0.5, β = −1, b ≡ 0.5, x0 = 1, λ = 2, exp(0.5) marks.
        let measure = JumpMeasure::new(2.0, MarkLaw::Exponential { mean: 0.5 }, None).unwrap();
        let k = 0.25 + measure.second_moment();
        Arc::new(
            ModelSpec::new(
                -1.0,
                Coefficient::SqrtScaled(0.5),
                JumpKernel::CappedLinear,
                DriftProcess::constant(0.5),
                measure,
                k,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        )
    }

    #[test]
    fn bound_g_closed_form_values() {
        // Ex0=1, b≡0, K=1, β=−1, t=1: G = 4e².
        let spec = Arc::new(
            ModelSpec::new(
                -1.0,
                Coefficient::SqrtScaled(1.0),
                JumpKernel::None,
                DriftProcess::constant(0.0),
                JumpMeasure::none(),
                1.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        assert_relative_eq!(
            bound_g(&spec, 1.0),
            4.0 * (2.0_f64).exp(),
            max_relative = 1e-12
        );
        assert_abs_diff_eq!(bound_g(&spec, 0.0), 3.0, epsilon = 1e-12);
        // H at t: base + (K−β) t G.
        let g1 = bound_g(&spec, 1.0);
        assert_relative_eq!(bound_h(&spec, 1.0), 4.0 + 2.0 * g1, max_relative = 1e-12);
    }

    #[test]
    fn bound_increment_vanishes_with_mesh() {
        let spec = linear_spec(-1.0, 0.0, 1.0);
        let b = bound_increment(&spec, 1.0, 0.0).unwrap();
        assert_eq!(b, 0.0);
        let b_small = bound_increment(&spec, 1.0, 1e-10).unwrap();
        assert!(b_small < 1e-4);
    }

    #[test]
    fn gamma_constant_and_ramp_drift() {
        let spec = linear_spec(-1.0, 0.7, 1.0);
        assert_abs_diff_eq!(gamma(&spec, 1.0, 0.25).unwrap(), 0.7 * 0.25, epsilon = 1e-10);
        assert_eq!(gamma(&spec, 1.0, 0.0).unwrap(), 0.0);
        assert!(gamma(&spec, 1.0, 1.5).is_err());

        // b(s) = s on [0,1], ν = 0.5: rightmost window, ∫_{1/2}^{1} s ds = 0.375.
        let ramp = Arc::new(
            ModelSpec::new(
                -1.0,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::function_with_antiderivative(|s| s, |s| 0.5 * s * s),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        assert_abs_diff_eq!(gamma(&ramp, 1.0, 0.5).unwrap(), 0.375, epsilon = 1e-9);
    }

    #[test]
    fn gamma_is_nondecreasing_and_vanishes_at_zero() {
        let ramp = Arc::new(
            ModelSpec::new(
                -1.0,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::function_with_antiderivative(
                    |s| (6.4 * s).sin().abs(),
                    |s| {
                        // antiderivative of |sin(ω s)| with ω = 6.4
                        let omega = 6.4_f64;
                        let period = std::f64::consts::PI / omega;
                        let n = (s / period).floor();
                        let frac = s - n * period;
                        (2.0 * n + 1.0 - (omega * frac).cos()) / omega
                    },
                ),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let mut prev = 0.0;
        for i in 0..=8 {
            let nu = i as f64 / 8.0;
            let g = gamma(&ramp, 1.0, nu).unwrap();
            assert!(g >= prev - 1e-10, "gamma must be non-decreasing");
            prev = g;
        }
        assert!(gamma(&ramp, 1.0, 1.0 / 1024.0).unwrap() < 2e-3);
    }

    #[test]
    fn mean_oracle_closed_forms() {
        // x0=1, b≡0.5, β=−1, t=1: 0.5 + 0.5/e.
        let spec = linear_spec(-1.0, 0.5, 1.0);
        assert_relative_eq!(
            mean_oracle(&spec, 1.0).unwrap(),
            0.5 + 0.5 * (-1.0_f64).exp(),
            max_relative = 1e-12
        );
        assert_abs_diff_eq!(mean_oracle(&spec, 0.0).unwrap(), 1.0, epsilon = 1e-12);
        // Pure decay: x0=1, b≡0, t=ln 2 → 1/2.
        let decay = linear_spec(-1.0, 0.0, 1.0);
        assert_relative_eq!(
            mean_oracle(&decay, (2.0_f64).ln()).unwrap(),
            0.5,
            max_relative = 1e-12
        );
        // Quadrature route for a deterministic drift function.
        let ramp = Arc::new(
            ModelSpec::new(
                -1.0,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::function(|s| s),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 0.0 },
            )
            .unwrap(),
        );
        // ∫0^t e^{-(t-s)} s ds = t - 1 + e^{-t}.
        let t = 1.3;
        assert_abs_diff_eq!(
            mean_oracle(&ramp, t).unwrap(),
            t - 1.0 + (-t).exp(),
            epsilon = 1e-9
        );
        // Sampled drift paths are not supported.
        let table = Arc::new(
            ModelSpec::new(
                -1.0,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::Table {
                    times: vec![0.0],
                    values: vec![1.0],
                },
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 0.0 },
            )
            .unwrap(),
        );
        assert!(mean_oracle(&table, 1.0).is_err());
    }

    #[test]
    fn l1_error_trivial_and_deterministic_cases() {
        let spec = linear_spec(-1.0, 0.0, 1.0);
        let master = Net::uniform(1.0, 4096).unwrap();
        let coarse = Net::uniform(1.0, 2).unwrap();
        // Identical nets: exactly (0, 0).
        let (e, se) =
            l1_supnorm_error(&spec, &coarse, &coarse, &master, 4, 7, true).unwrap();
        assert_eq!((e, se), (0.0, 0.0));
        // Reference coarser than the study mesh is rejected.
        let fine = Net::uniform(1.0, 4).unwrap();
        assert!(l1_supnorm_error(&spec, &fine, &coarse, &master, 4, 7, true).is_err());
        // Deterministic linear model: the sup against a near-exact fine grid
        // is |e^{-1} - 0.25| up to the fine grid's own O(h) error.
        let reference = Net::uniform(1.0, 4096).unwrap();
        let (e, se) =
            l1_supnorm_error(&spec, &coarse, &reference, &master, 2, 7, true).unwrap();
        assert_eq!(se, 0.0); // no randomness in this model
        assert_abs_diff_eq!(e, ((-1.0_f64).exp() - 0.25).abs(), epsilon = 1e-3);
    }

    #[test]
    fn moment_curve_deterministic_and_initial() {
        let spec = linear_spec(-1.0, 0.0, 1.0);
        let master = Net::uniform(1.0, 64).unwrap();
        let net = Net::uniform(1.0, 8).unwrap();
        let curve = moment_curve(&spec, &net, &master, 3, 5, true).unwrap();
        // t = 0: the mean of the initial law, zero increment.
        assert_abs_diff_eq!(curve.mean_state[0], 1.0, epsilon = 1e-15);
        assert_eq!(curve.mean_increment[0], 0.0);
        // Deterministic model: E|x_n(t_k)| is the explicit-Euler iterate.
        let dt = 1.0 / 8.0;
        let mut x = 1.0;
        for k in 0..8 {
            x *= 1.0 - dt;
            assert_abs_diff_eq!(curve.mean_state[(k + 1) * 8], x, epsilon = 1e-13);
        }
        // Between net points the frozen curve holds the left state.
        assert_abs_diff_eq!(curve.mean_frozen[4], 1.0, epsilon = 1e-15);
        assert!(curve.mean_increment[4] > 0.0);
    }

    #[test]
    fn study_validates_inputs() {
        let spec = cir_jump_spec();
        let base = StudySetup {
            spec: Arc::clone(&spec),
            horizon: 1.0,
            master_steps: 64,
            study_steps: vec![4, 8],
            reference_steps: 64,
            n_paths: 16,
            seed: 3,
            deterministic: true,
        };
        let mut s = base.clone();
        s.study_steps = vec![4];
        assert!(convergence_study(&s).is_err());
        let mut s = base.clone();
        s.n_paths = 0;
        assert!(convergence_study(&s).is_err());
        let mut s = base.clone();
        s.reference_steps = 8;
        assert!(convergence_study(&s).is_err());
        let mut s = base.clone();
        s.study_steps = vec![5, 8];
        assert!(convergence_study(&s).is_err());
        assert!(convergence_study(&base).is_ok());
    }

    #[test]
    fn deterministic_linear_model_has_first_order_rate() {
        let spec = linear_spec(-1.0, 0.3, 1.0);
        let setup = StudySetup {
            spec,
            horizon: 1.0,
            master_steps: 4096,
            study_steps: vec![4, 8, 16, 32, 64],
            reference_steps: 4096,
            n_paths: 2,
            seed: 1,
            deterministic: true,
        };
        let report = convergence_study(&setup).unwrap();
        assert!(
            (report.fitted_rate - 1.0).abs() <= 0.1,
            "fitted rate {} not within 1.0 ± 0.1",
            report.fitted_rate
        );
        assert!(report.errors_nonincreasing_within_2se);
        assert!(report.all_bounds_ok);
    }

    #[test]
    fn mean_recursion_holds_within_monte_carlo_error() {
        // E x_{k+1} = E x_k (1 + βΔt) + ∫b: the defect per step is the mean
        // of martingale terms, which must sit within 4 SE of zero.
        let spec = cir_jump_spec();
        let master = Net::uniform(1.0, 8).unwrap();
        let n_paths = 4000usize;
        let dt = 1.0 / 8.0;
        let mut defects: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(n_paths)).collect();
        for idx in 0..n_paths {
            let noise = Arc::new(NoiseRealization::sample(
                &master,
                spec.measure(),
                41,
                idx as u64,
            ));
            let path = euler::simulate_path(&spec, &master, &noise).unwrap();
            for (k, defect_bin) in defects.iter_mut().enumerate() {
                let drift = 0.5 * dt;
                let defect =
                    path.states()[k + 1] - path.states()[k] * (1.0 + spec.beta() * dt) - drift;
                defect_bin.push(defect);
            }
        }
        for (k, bin) in defects.iter().enumerate() {
            let (m, se) = stats::mean_se(bin);
            assert!(
                m.abs() <= 4.0 * se.max(1e-12),
                "step {k}: mean defect {m} exceeds 4 se = {}",
                4.0 * se
            );
        }
    }

    #[test]
    fn compensated_martingale_mean_near_zero() {
        let spec = cir_jump_spec();
        let setup = StudySetup {
            spec,
            horizon: 1.0,
            master_steps: 256,
            study_steps: vec![8, 16],
            reference_steps: 256,
            n_paths: 4000,
            seed: 23,
            deterministic: true,
        };
        let report = convergence_study(&setup).unwrap();
        assert!(
            report.compensated_jump_mean.abs() <= 4.0 * report.compensated_jump_se,
            "compensated mean {} exceeds 4 se {}",
            report.compensated_jump_mean,
            4.0 * report.compensated_jump_se
        );
        // Moment bounds hold with slack on this model.
        assert!(report.all_bounds_ok);
    }

    #[test]
    fn monte_carlo_mean_matches_oracle_with_richardson_bias() {
        let spec = cir_jump_spec();
        let master = Net::uniform(1.0, 64).unwrap();
        let run = |steps: usize| -> (f64, f64) {
            let net = Net::uniform(1.0, steps).unwrap();
            let summary = simulate_summary(&spec, &net, &master, 4000, 99, true).unwrap();
            (summary.terminal_mean, summary.terminal_se)
        };
        let (m_coarse, _) = run(32);
        let (m_fine, se) = run(64);
        let bias = (m_fine - m_coarse).abs();
        let oracle = mean_oracle(&spec, 1.0).unwrap();
        assert!(
            (m_fine - oracle).abs() <= 3.0 * se + 2.0 * bias,
            "mean {m_fine} vs oracle {oracle}: tolerance {}",
            3.0 * se + 2.0 * bias
        );
    }

    #[test]
    fn summary_mean_curve_of_linear_model_is_the_euler_iterate() {
        // λ=0, σ≡0: the per-point mean curve is the deterministic iterate.
        let spec = linear_spec(-2.0, 0.3, 1.5);
        let master = Net::uniform(1.0, 32).unwrap();
        let net = Net::uniform(1.0, 16).unwrap();
        let summary = simulate_summary(&spec, &net, &master, 5, 1, true).unwrap();
        let dt = 1.0 / 16.0;
        let mut x = 1.5_f64;
        assert_abs_diff_eq!(summary.mean[0], 1.5, epsilon = 1e-15);
        for k in 0..16 {
            x = x + 0.3 * dt + (-2.0) * x * dt;
            assert_abs_diff_eq!(summary.mean[k + 1], x, epsilon = 1e-13);
            // Curve SEs come from running sums of squares, so an exactly
            // degenerate sample leaves a cancellation residue of ~1e-9·|x|.
            assert!(summary.se[k + 1] < 1e-8);
        }
        assert_eq!(summary.negative_part_mean, 0.0);
    }

    #[test]
    fn summary_statistics_deterministic_across_thread_counts() {
        let spec = cir_jump_spec();
        let master = Net::uniform(1.0, 64).unwrap();
        let net = Net::uniform(1.0, 16).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                serde_json::to_string(
                    &simulate_summary(&spec, &net, &master, 600, 17, true).unwrap(),
                )
                .unwrap()
            })
        };
        assert_eq!(run(1), run(8));
    }
}
