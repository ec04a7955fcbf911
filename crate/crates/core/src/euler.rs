//! The frozen-coefficient Euler scheme.
//!
//! On a net 0 = t₀ ≤ … ≤ t_N = T the approximating path is
//!
//! ```text
//! x(t_{k+1}) = x(t_k) + ∫ b ds + β x(t_k) Δt + σ′(x(t_k)) ΔB
//!              + Σ_{jumps in (t_k, t_{k+1}]} g′(x(t_k), u_i) − Δt·c′(x(t_k))
//! ```
//!
//! with every coefficient frozen at the left net point — in particular all
//! jumps of one interval use the same frozen state, and the compensator
//! c′ = ∫ g′ μ(du) is accrued linearly in time. Between net points the path
//! is reconstructed from the frozen coefficients exactly (the drift and
//! compensator parts are linear in t, the Brownian term moves at master
//! points, and jumps arrive at their sampled times), so suprema over time
//! are evaluated on net points, master points and jump instants.
//!
//! Approximating paths may go negative; the truncations σ′, g′, c′ keep the
//! scheme well defined there with no reflection or absorption added.

use crate::error::{Error, Result};
use crate::model::{DriftProcess, JumpKernel, ModelSpec};
use crate::noise::{Net, NoiseRealization};
use std::sync::Arc;

/// One simulated path: states at net points plus the frozen-coefficient
/// data needed to reconstruct the path between them.
#[derive(Debug, Clone)]
pub struct EulerPath {
    net: Net,
    /// Master index of every net point.
    master_indices: Vec<usize>,
    /// States x(t₀), …, x(t_N).
    states: Vec<f64>,
    /// σ′(x(t_k)) per interval.
    sigma_frozen: Vec<f64>,
    /// c′(x(t_k)) per interval.
    comp_frozen: Vec<f64>,
    /// Applied jump sizes g′(x(t_k), u), aligned with the noise's events.
    jump_applied: Vec<f64>,
    /// Total of all jump contributions minus accrued compensator — the
    /// compensated-martingale term at the horizon.
    compensated_jump_total: f64,
    spec: Arc<ModelSpec>,
    noise: Arc<NoiseRealization>,
}

/// The shared step arithmetic: used both to advance the scheme over a full
/// interval and to reconstruct the path inside one, so the two agree
/// bit-for-bit at net points.
#[inline]
#[allow(clippy::too_many_arguments)]
fn segment_value(
    x_k: f64,
    beta: f64,
    drift_int: f64,
    dt: f64,
    sigma_k: f64,
    d_brownian: f64,
    jump_sum: f64,
    comp_k: f64,
) -> f64 {
    x_k + drift_int + beta * x_k * dt + sigma_k * d_brownian + jump_sum - dt * comp_k
}

/// Advance one interval of the scheme.
///
/// `interval` endpoints must be master-net points; every jump of the noise
/// inside `(t_k, t_{k+1}]` is applied with the frozen state `x_k`.
pub fn euler_step(
    spec: &ModelSpec,
    x_k: f64,
    interval: (f64, f64),
    noise: &NoiseRealization,
) -> Result<f64> {
    let (t0, t1) = interval;
    if t1 < t0 || t1.is_nan() || t0.is_nan() {
        return Err(Error::invalid_argument(format!(
            "interval endpoints out of order: [{t0}, {t1}]"
        )));
    }
    let locate = |t: f64| {
        noise.master().index_of(t).map_err(|_| {
            Error::invalid_argument(format!(
                "interval [{t0}, {t1}] is not aligned with the master net"
            ))
        })
    };
    let (mi0, mi1) = (locate(t0)?, locate(t1)?);
    let dt = t1 - t0;
    let drift_int = spec
        .drift()
        .integral_on_master(t0, t1, noise.master().points());
    let sigma_k = spec.sigma_trunc(x_k);
    let comp_k = spec.compensator_trunc(x_k)?;
    let d_brownian = noise.brownian_at(mi1) - noise.brownian_at(mi0);
    let mut jump_sum = 0.0;
    for e in noise.jumps() {
        if e.master_interval >= mi0 && e.master_interval < mi1 {
            jump_sum += spec.g_trunc(x_k, e.mark);
        }
    }
    Ok(segment_value(
        x_k, spec.beta(), drift_int, dt, sigma_k, d_brownian, jump_sum, comp_k,
    ))
}

/// How the jump term of one interval is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum JumpRoute {
    /// Per-event kernel evaluation minus accrued compensator.
    PointMeasure,
    /// The one-sided Lévy form: φ′(x_k) times the compensated increment
    /// Σu − Δt·m₁ of the driving Lévy process. Algebraically identical for
    /// proportional kernels; kept as a separate route so the equivalence is
    /// testable.
    LevyIncrement,
}

fn simulate_route(
    spec: &Arc<ModelSpec>,
    net: &Net,
    noise: &Arc<NoiseRealization>,
    route: JumpRoute,
) -> Result<EulerPath> {
    let master_indices = net.nested_indices(noise.master())?;
    if route == JumpRoute::LevyIncrement
        && !matches!(
            spec.kernel(),
            JumpKernel::Proportional { .. } | JumpKernel::None
        )
    {
        return Err(Error::Unsupported(
            "the Lévy-increment route needs a proportional jump kernel".to_string(),
        ));
    }

    let n = net.n_intervals();
    let points = net.points();
    let events = noise.jumps();
    let m1 = spec.measure().first_moment();

    let mut states = Vec::with_capacity(n + 1);
    let mut sigma_frozen = Vec::with_capacity(n);
    let mut comp_frozen = Vec::with_capacity(n);
    let mut jump_applied = vec![0.0; events.len()];
    let mut compensated_total = 0.0;

    let mut x = spec.initial_law().sample(noise.initial_gauss());
    states.push(x);
    let mut ev = 0usize;
    for k in 0..n {
        let (t0, t1) = (points[k], points[k + 1]);
        let (mi0, mi1) = (master_indices[k], master_indices[k + 1]);
        let dt = t1 - t0;
        let drift_int = spec.drift().integral_on_master(t0, t1, noise.master().points());
        let sigma_k = spec.sigma_trunc(x);
        let comp_k = spec.compensator_trunc(x)?;
        let d_brownian = noise.brownian_at(mi1) - noise.brownian_at(mi0);

        // Jumps with master interval in [mi0, mi1) have t0 < time <= t1.
        let mut mark_sum = 0.0;
        let mut applied_sum = 0.0;
        while ev < events.len() && events[ev].master_interval < mi1 {
            debug_assert!(events[ev].master_interval >= mi0);
            let applied = spec.g_trunc(x, events[ev].mark);
            jump_applied[ev] = applied;
            applied_sum += applied;
            mark_sum += events[ev].mark;
            ev += 1;
        }

        let (jump_sum, comp_eff) = match route {
            JumpRoute::PointMeasure => (applied_sum, comp_k),
            JumpRoute::LevyIncrement => {
                // φ′(x_k)·(Σu − Δt·m₁), with the compensator inside the
                // compensated Lévy increment.
                let phi_k = if x >= 0.0 {
                    match spec.kernel() {
                        JumpKernel::Proportional { phi } => phi.eval(x),
                        _ => 0.0,
                    }
                } else {
                    0.0
                };
                (phi_k * (mark_sum - dt * m1), 0.0)
            }
        };
        compensated_total += jump_sum - dt * comp_eff;

        x = segment_value(
            x, spec.beta(), drift_int, dt, sigma_k, d_brownian, jump_sum, comp_eff,
        );
        states.push(x);
        sigma_frozen.push(sigma_k);
        comp_frozen.push(comp_k);
    }

    Ok(EulerPath {
        net: net.clone(),
        master_indices,
        states,
        sigma_frozen,
        comp_frozen,
        jump_applied,
        compensated_jump_total: compensated_total,
        spec: Arc::clone(spec),
        noise: Arc::clone(noise),
    })
}

/// Simulate the scheme over `net`, drawing x(0) from the model's initial
/// law through the noise's dedicated initial-value substream.
pub fn simulate_path(
    spec: &Arc<ModelSpec>,
    net: &Net,
    noise: &Arc<NoiseRealization>,
) -> Result<EulerPath> {
    simulate_route(spec, net, noise, JumpRoute::PointMeasure)
}

/// Simulate with the jump term accumulated as φ′(x_k)·(Σu − Δt·m₁), the
/// compensated-increment form of a one-sided Lévy drive.
pub fn simulate_path_levy_form(
    spec: &Arc<ModelSpec>,
    net: &Net,
    noise: &Arc<NoiseRealization>,
) -> Result<EulerPath> {
    simulate_route(spec, net, noise, JumpRoute::LevyIncrement)
}

/// One path per net, all driven by the identical noise realization
/// (including the identical initial value).
pub fn simulate_coupled(
    spec: &Arc<ModelSpec>,
    nets: &[Net],
    noise: &Arc<NoiseRealization>,
) -> Result<Vec<EulerPath>> {
    nets.iter()
        .map(|net| simulate_path(spec, net, noise))
        .collect()
}

/// Pre/post values of one jump event on one path.
#[derive(Debug, Clone, Copy)]
pub struct JumpValue {
    pub time: f64,
    pub pre: f64,
    pub post: f64,
}

/// A path evaluated at every master point (and at its jump instants).
#[derive(Debug, Clone)]
pub struct MasterEval {
    /// x(t_j) at every master point, via the frozen-coefficient
    /// reconstruction (bit-identical with the stored states at net points).
    pub values: Vec<f64>,
    /// x(η(t_j)): the frozen state of the interval containing t_j; at the
    /// horizon the frozen state of the last interval.
    pub frozen: Vec<f64>,
    /// Pre-/post-jump values at the path's jump instants.
    pub jump_values: Vec<JumpValue>,
}

impl MasterEval {
    /// sup over all evaluation points of max(−x, 0).
    pub fn sup_negative_part(&self) -> f64 {
        let mut sup = 0.0_f64;
        for &v in &self.values {
            sup = sup.max(-v);
        }
        for jv in &self.jump_values {
            sup = sup.max(-jv.pre).max(-jv.post);
        }
        sup.max(0.0)
    }
}

impl EulerPath {
    pub fn net(&self) -> &Net {
        &self.net
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn master_indices(&self) -> &[usize] {
        &self.master_indices
    }

    pub fn jump_applied(&self) -> &[f64] {
        &self.jump_applied
    }

    /// The accumulated jump-plus-compensator term at the horizon.
    pub fn compensated_jump_total(&self) -> f64 {
        self.compensated_jump_total
    }

    pub fn noise(&self) -> &Arc<NoiseRealization> {
        &self.noise
    }

    pub fn spec(&self) -> &Arc<ModelSpec> {
        &self.spec
    }

    /// Interval index of the net containing master index `mi`.
    fn net_interval_of_master(&self, mi: usize) -> usize {
        // Last net point with master index <= mi; the horizon belongs to
        // the final interval.
        let idx = self.master_indices.partition_point(|&m| m <= mi);
        (idx - 1).min(self.net.n_intervals() - 1)
    }

    /// Reconstruct x(t) at an arbitrary master point.
    ///
    /// `events` must be the noise's jump slice; `upto_event` counts how many
    /// events lie at or before the evaluation time.
    fn value_at_master(&self, mi: usize, drift: &DriftProcess, upto_event: usize) -> f64 {
        // Net points carry the stored state.
        if let Ok(pos) = self.master_indices.binary_search(&mi) {
            return self.states[pos];
        }
        let k = self.net_interval_of_master(mi);
        let t_k = self.net.points()[k];
        let t = self.noise.master().points()[mi];
        let mi_k = self.master_indices[k];
        let dt = t - t_k;
        let drift_int = drift.integral_on_master(t_k, t, self.noise.master().points());
        let d_brownian = self.noise.brownian_at(mi) - self.noise.brownian_at(mi_k);
        let mut jump_sum = 0.0;
        for (i, e) in self.noise.jumps().iter().enumerate() {
            if i >= upto_event {
                break;
            }
            if e.master_interval >= mi_k && e.master_interval < mi {
                jump_sum += self.jump_applied[i];
            }
        }
        segment_value(
            self.states[k],
            self.spec.beta(),
            drift_int,
            dt,
            self.sigma_frozen[k],
            d_brownian,
            jump_sum,
            self.comp_frozen[k],
        )
    }

    /// Evaluate the path at every master point and at its jump instants.
    pub fn evaluate_on_master(&self) -> MasterEval {
        let master = self.noise.master();
        let mp = master.points();
        let n_master = master.n_intervals();
        let events = self.noise.jumps();
        let drift = self.spec.drift().clone();

        let mut values = vec![0.0; n_master + 1];
        let mut frozen = vec![0.0; n_master + 1];

        // Sweep master points interval by interval of the coarse net.
        let mut k = 0usize;
        let mut ev_cursor = 0usize; // events with master_interval < current mi
        let mut jump_sum_in_interval = 0.0;
        for mi in 0..=n_master {
            while k + 1 < self.master_indices.len() && self.master_indices[k + 1] <= mi {
                k += 1;
            }
            // k now indexes the last net point with master index <= mi.
            let interval = k.min(self.net.n_intervals() - 1);
            frozen[mi] = self.states[interval];
            if self.master_indices.get(k) == Some(&mi) && k <= self.net.n_intervals() {
                values[mi] = self.states[k];
                // Reset the within-interval jump accumulator at net points.
                jump_sum_in_interval = 0.0;
                // Advance the event cursor past events in previous intervals.
                while ev_cursor < events.len() && events[ev_cursor].master_interval < mi {
                    ev_cursor += 1;
                }
                continue;
            }
            // Accumulate jumps since the interval's left net point.
            while ev_cursor < events.len() && events[ev_cursor].master_interval < mi {
                jump_sum_in_interval += self.jump_applied[ev_cursor];
                ev_cursor += 1;
            }
            let t_k = self.net.points()[interval];
            let mi_k = self.master_indices[interval];
            let t = mp[mi];
            let dt = t - t_k;
            let drift_int = drift.integral_on_master(t_k, t, mp);
            let d_brownian = self.noise.brownian_at(mi) - self.noise.brownian_at(mi_k);
            values[mi] = segment_value(
                self.states[interval],
                self.spec.beta(),
                drift_int,
                dt,
                self.sigma_frozen[interval],
                d_brownian,
                jump_sum_in_interval,
                self.comp_frozen[interval],
            );
        }
        // The frozen state at the horizon is the last interval's left state.
        frozen[n_master] = self.states[self.net.n_intervals() - 1];

        // Jump instants: evaluate one-sided limits with the frozen state of
        // the enclosing net interval and the Brownian value at the last
        // master point at or before the jump.
        let mut jump_values = Vec::with_capacity(events.len());
        for (i, e) in events.iter().enumerate() {
            let k = self.net_interval_of_master(e.master_interval);
            let t_k = self.net.points()[k];
            let mi_k = self.master_indices[k];
            let dt = e.time - t_k;
            let drift_int = drift.integral_on_master(t_k, e.time, mp);
            let d_brownian = self.noise.brownian_at(e.master_interval) - self.noise.brownian_at(mi_k);
            let mut jump_sum = 0.0;
            for (j, other) in events.iter().enumerate().take(i) {
                if other.master_interval >= mi_k && other.time <= e.time {
                    jump_sum += self.jump_applied[j];
                }
            }
            let pre = segment_value(
                self.states[k],
                self.spec.beta(),
                drift_int,
                dt,
                self.sigma_frozen[k],
                d_brownian,
                jump_sum,
                self.comp_frozen[k],
            );
            jump_values.push(JumpValue {
                time: e.time,
                pre,
                post: pre + self.jump_applied[i],
            });
        }

        MasterEval {
            values,
            frozen,
            jump_values,
        }
    }
}

/// Do two paths ride the same noise realization?
fn same_noise(a: &EulerPath, b: &EulerPath) -> bool {
    Arc::ptr_eq(&a.noise, &b.noise)
        || (a.noise.seed_record() == b.noise.seed_record()
            && a.noise.master().points() == b.noise.master().points())
}

/// sup_t |a(t) − b(t)| over the union of both nets' points and the jump
/// instants (both one-sided limits), with each path evaluated by its
/// frozen-coefficient reconstruction.
pub fn sup_distance(a: &EulerPath, b: &EulerPath) -> Result<f64> {
    if (a.net.horizon() - b.net.horizon()).abs() > 1e-12 * a.net.horizon().max(1.0) {
        return Err(Error::invalid_argument(format!(
            "mismatched horizons: {} vs {}",
            a.net.horizon(),
            b.net.horizon()
        )));
    }
    if !same_noise(a, b) {
        return Err(Error::invalid_argument(
            "sup distance needs paths driven by one shared noise realization".to_string(),
        ));
    }

    // Union of both nets' master indices.
    let mut union: Vec<usize> = Vec::with_capacity(a.master_indices.len() + b.master_indices.len());
    union.extend_from_slice(&a.master_indices);
    union.extend_from_slice(&b.master_indices);
    union.sort_unstable();
    union.dedup();

    let drift = a.spec.drift().clone();
    let events = a.noise.jumps();
    let mut sup = 0.0_f64;
    for &mi in &union {
        let upto = events.partition_point(|e| e.master_interval < mi);
        let va = a.value_at_master(mi, &drift, upto);
        let vb = b.value_at_master(mi, &drift, upto);
        sup = sup.max((va - vb).abs());
    }
    if !events.is_empty() {
        let ja = a.evaluate_on_master();
        let jb = b.evaluate_on_master();
        for (ea, eb) in ja.jump_values.iter().zip(jb.jump_values.iter()) {
            sup = sup.max((ea.pre - eb.pre).abs());
            sup = sup.max((ea.post - eb.post).abs());
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Coefficient, DriftProcess, InitialLaw, JumpKernel, JumpMeasure, MarkLaw, ModelSpec,
    };
    use crate::noise::JumpEvent;
    use approx::assert_abs_diff_eq;

    fn arc(spec: ModelSpec) -> Arc<ModelSpec> {
        Arc::new(spec)
    }

    fn zero_noise(master: &Net) -> Arc<NoiseRealization> {
        Arc::new(NoiseRealization::for_test(
            master.clone(),
            vec![0.0; master.n_intervals()],
            Vec::new(),
            0.0,
        ))
    }

    #[test]
    fn euler_step_arithmetic() {
        // x=1, β=−1, Δt=0.25, ∫b=0.125, σ'(1)=0.5, ΔB=0.1, no jumps,
        // c'(1)=0.2 → 1 + 0.125 − 0.25 + 0.05 − 0.05 = 0.875.
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::SqrtScaled(0.5),
                JumpKernel::Proportional {
                    phi: Coefficient::custom(|x| 0.1 * x),
                },
                DriftProcess::constant(0.5),
                JumpMeasure::new(2.0, MarkLaw::Exponential { mean: 1.0 }, None).unwrap(),
                1.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 4).unwrap();
        let noise = Arc::new(NoiseRealization::for_test(
            master,
            vec![0.1, 0.0, 0.0, 0.0],
            Vec::new(),
            0.0,
        ));
        let x1 = euler_step(&spec, 1.0, (0.0, 0.25), &noise).unwrap();
        assert_abs_diff_eq!(x1, 0.875, epsilon = 1e-15);
    }

    #[test]
    fn euler_step_zero_state_is_absorbing_for_coefficients() {
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::SqrtScaled(0.5),
                JumpKernel::CappedLinear,
                DriftProcess::constant(0.0),
                JumpMeasure::new(2.0, MarkLaw::Exponential { mean: 1.0 }, None).unwrap(),
                1.0,
                InitialLaw::Constant { value: 0.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 4).unwrap();
        let noise = Arc::new(NoiseRealization::for_test(
            master,
            vec![0.3, -0.2, 0.1, 0.0],
            vec![JumpEvent {
                time: 0.1,
                mark: 2.0,
                master_interval: 0,
            }],
            0.0,
        ));
        // σ'(0) = g'(0,·) = c'(0) = 0 and βx = 0: nothing moves.
        let x1 = euler_step(&spec, 0.0, (0.0, 0.25), &noise).unwrap();
        assert_eq!(x1, 0.0);
    }

    #[test]
    fn euler_step_single_jump_bookkeeping() {
        // x=1, one jump u=2 with kernel u·(x∧1): x + 2 − Δt·c'(1).
        let spec = arc(
            ModelSpec::new(
                -1e-12,
                Coefficient::Zero,
                JumpKernel::CappedLinear,
                DriftProcess::constant(0.0),
                JumpMeasure::new(2.0, MarkLaw::Exponential { mean: 1.0 }, None).unwrap(),
                1.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 4).unwrap();
        let noise = Arc::new(NoiseRealization::for_test(
            master,
            vec![0.0; 4],
            vec![JumpEvent {
                time: 0.1,
                mark: 2.0,
                master_interval: 0,
            }],
            0.0,
        ));
        let c1 = spec.compensator_trunc(1.0).unwrap(); // m1·1 = 2
        let x1 = euler_step(&spec, 1.0, (0.0, 0.25), &noise).unwrap();
        assert_abs_diff_eq!(x1, 1.0 + 2.0 - 0.25 * c1 + 1e-12 * 0.25, epsilon = 1e-12);
    }

    #[test]
    fn zero_coefficients_reduce_to_explicit_euler() {
        // σ≡0, g≡0, b≡0, β=−1, x0=1 on {0,1}: x(1) = 1 + (−1)·1·1 = 0.
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::constant(0.0),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 1).unwrap();
        let noise = zero_noise(&master);
        let path = simulate_path(&spec, &master, &noise).unwrap();
        assert_eq!(path.states(), &[1.0, 0.0]);
    }

    #[test]
    fn deterministic_ode_limit() {
        // λ=0, σ≡0, b≡c, β≈0: states track 1 + c·t within 1e−9.
        let c = 0.7;
        let spec = arc(
            ModelSpec::new(
                -1e-12,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::constant(c),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 64).unwrap();
        let noise = zero_noise(&master);
        let path = simulate_path(&spec, &master, &noise).unwrap();
        for (k, &x) in path.states().iter().enumerate() {
            let t = k as f64 / 64.0;
            assert_abs_diff_eq!(x, 1.0 + c * t, epsilon = 1e-9);
        }
    }

    #[test]
    fn classical_euler_iterate_matches_exactly() {
        // With σ≡0, λ=0, deterministic b, the path equals the classical
        // explicit-Euler iterate of dx = (b+βx)dt step for step.
        let spec = arc(
            ModelSpec::new(
                -2.0,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::constant(0.3),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 1.5 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 16).unwrap();
        let noise = zero_noise(&master);
        let path = simulate_path(&spec, &master, &noise).unwrap();
        let dt = 1.0 / 16.0;
        let mut x = 1.5_f64;
        for k in 0..16 {
            // Same arithmetic shape as the scheme's segment accumulation.
            x = x + 0.3 * dt + (-2.0) * x * dt;
            assert_abs_diff_eq!(path.states()[k + 1], x, epsilon = 1e-14);
        }
    }

    #[test]
    fn determinism_same_inputs_same_path() {
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::SqrtScaled(0.5),
                JumpKernel::CappedLinear,
                DriftProcess::constant(0.5),
                JumpMeasure::new(2.0, MarkLaw::Exponential { mean: 0.5 }, None).unwrap(),
                1.25,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 64).unwrap();
        let noise = Arc::new(NoiseRealization::sample(&master, spec.measure(), 21, 5));
        let net = Net::uniform(1.0, 16).unwrap();
        let a = simulate_path(&spec, &net, &noise).unwrap();
        let b = simulate_path(&spec, &net, &noise).unwrap();
        assert_eq!(a.states(), b.states());
    }

    #[test]
    fn coupled_identical_nets_are_identical() {
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::SqrtScaled(0.5),
                JumpKernel::CappedLinear,
                DriftProcess::constant(0.5),
                JumpMeasure::new(2.0, MarkLaw::Exponential { mean: 0.5 }, None).unwrap(),
                1.25,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 32).unwrap();
        let noise = Arc::new(NoiseRealization::sample(&master, spec.measure(), 3, 9));
        let paths =
            simulate_coupled(&spec, &[master.clone(), master.clone()], &noise).unwrap();
        assert_eq!(paths[0].states(), paths[1].states());
        assert_eq!(sup_distance(&paths[0], &paths[1]).unwrap(), 0.0);
    }

    #[test]
    fn non_nested_net_is_rejected() {
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::constant(0.0),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 4).unwrap();
        let noise = zero_noise(&master);
        let bad = Net::from_points(vec![0.0, 0.33, 1.0]).unwrap();
        assert!(simulate_path(&spec, &bad, &noise).is_err());
    }

    #[test]
    fn frozen_coefficient_jump_permutation_invariance() {
        // Swapping which mark arrives at which within-interval time leaves
        // the step unchanged up to float association (all jumps use the
        // frozen state).
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::Zero,
                JumpKernel::CappedLinear,
                DriftProcess::constant(0.0),
                JumpMeasure::new(1.0, MarkLaw::Exponential { mean: 1.0 }, None).unwrap(),
                2.25,
                InitialLaw::Constant { value: 0.8 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 2).unwrap();
        let mk = |marks: [f64; 3]| {
            Arc::new(NoiseRealization::for_test(
                master.clone(),
                vec![0.0, 0.0],
                vec![
                    JumpEvent { time: 0.1, mark: marks[0], master_interval: 0 },
                    JumpEvent { time: 0.2, mark: marks[1], master_interval: 0 },
                    JumpEvent { time: 0.3, mark: marks[2], master_interval: 0 },
                ],
                0.0,
            ))
        };
        let a = simulate_path(&spec, &master, &mk([0.4, 1.1, 2.3])).unwrap();
        let b = simulate_path(&spec, &master, &mk([2.3, 0.4, 1.1])).unwrap();
        assert_abs_diff_eq!(a.states()[2], b.states()[2], epsilon = 1e-14);
        // Two jumps commute exactly in IEEE arithmetic.
        let mk2 = |m0: f64, m1: f64| {
            Arc::new(NoiseRealization::for_test(
                master.clone(),
                vec![0.0, 0.0],
                vec![
                    JumpEvent { time: 0.1, mark: m0, master_interval: 0 },
                    JumpEvent { time: 0.2, mark: m1, master_interval: 0 },
                ],
                0.0,
            ))
        };
        let a = simulate_path(&spec, &master, &mk2(0.4, 1.1)).unwrap();
        let b = simulate_path(&spec, &master, &mk2(1.1, 0.4)).unwrap();
        assert_eq!(a.states()[2], b.states()[2]);
    }

    #[test]
    fn sup_distance_synthetic_paths() {
        // Fabricated fixtures sharing one noise: a constant offset and an
        // extra applied jump.
        let spec = arc(
            ModelSpec::new(
                -1e-12,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::constant(0.0),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 2).unwrap();
        let noise = zero_noise(&master);
        let base = simulate_path(&spec, &master, &noise).unwrap();
        // Identical paths.
        assert_eq!(sup_distance(&base, &base).unwrap(), 0.0);

        // Constant offset 0.1 at every evaluation point.
        let mut shifted = base.clone();
        for s in &mut shifted.states {
            *s += 0.1;
        }
        assert_abs_diff_eq!(sup_distance(&base, &shifted).unwrap(), 0.1, epsilon = 1e-12);

        // One extra applied jump of size 0.4 at t* = 0.3, otherwise equal:
        // the sup sees the post-jump value.
        let noise_j = Arc::new(NoiseRealization::for_test(
            master.clone(),
            vec![0.0, 0.0],
            vec![JumpEvent { time: 0.3, mark: 1.0, master_interval: 0 }],
            0.0,
        ));
        let flat = simulate_path(&spec, &master, &noise_j).unwrap();
        let mut jumped = flat.clone();
        jumped.jump_applied = vec![0.4];
        for s in &mut jumped.states[1..] {
            *s += 0.4;
        }
        let d = sup_distance(&flat, &jumped).unwrap();
        assert!(d >= 0.4, "sup {d} must include the post-jump value");
    }

    #[test]
    fn mismatched_horizons_error() {
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::Zero,
                JumpKernel::None,
                DriftProcess::constant(0.0),
                JumpMeasure::none(),
                0.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let m1 = Net::uniform(1.0, 2).unwrap();
        let m2 = Net::uniform(2.0, 2).unwrap();
        let a = simulate_path(&spec, &m1, &zero_noise(&m1)).unwrap();
        let b = simulate_path(&spec, &m2, &zero_noise(&m2)).unwrap();
        assert!(sup_distance(&a, &b).is_err());
    }

    #[test]
    fn master_eval_consistency_at_net_points() {
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::SqrtScaled(0.5),
                JumpKernel::CappedLinear,
                DriftProcess::constant(0.5),
                JumpMeasure::new(3.0, MarkLaw::Exponential { mean: 0.5 }, None).unwrap(),
                1.75,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 64).unwrap();
        let noise = Arc::new(NoiseRealization::sample(&master, spec.measure(), 17, 2));
        let net = Net::uniform(1.0, 8).unwrap();
        let path = simulate_path(&spec, &net, &noise).unwrap();
        let eval = path.evaluate_on_master();
        // Net-point values match stored states bitwise.
        for (k, &mi) in path.master_indices().iter().enumerate() {
            assert_eq!(eval.values[mi], path.states()[k]);
        }
        // Frozen curve: left state of the containing interval.
        assert_eq!(eval.frozen[0], path.states()[0]);
        assert_eq!(eval.frozen[4], path.states()[0]); // t=4/64 inside [0, 1/8)
        assert_eq!(eval.frozen[8], path.states()[1]);
        assert_eq!(*eval.frozen.last().unwrap(), path.states()[7]);
        // The fine-grid evaluation of a path on its own net is the identity.
        let fine = simulate_path(&spec, &master, &noise).unwrap();
        let fine_eval = fine.evaluate_on_master();
        assert_eq!(fine_eval.values, fine.states);
    }

    #[test]
    fn levy_route_matches_point_measure_route() {
        let spec = arc(
            ModelSpec::new(
                -1.0,
                Coefficient::SqrtScaled(0.3),
                JumpKernel::Proportional {
                    phi: Coefficient::custom(|x| 0.1 * x),
                },
                DriftProcess::constant(0.5),
                JumpMeasure::new(2.0, MarkLaw::Exponential { mean: 1.0 }, None).unwrap(),
                1.0,
                InitialLaw::Constant { value: 1.0 },
            )
            .unwrap(),
        );
        let master = Net::uniform(1.0, 256).unwrap();
        for path_idx in 0..20 {
            let noise = Arc::new(NoiseRealization::sample(&master, spec.measure(), 31, path_idx));
            let a = simulate_path(&spec, &master, &noise).unwrap();
            let b = simulate_path_levy_form(&spec, &master, &noise).unwrap();
            for (x, y) in a.states().iter().zip(b.states().iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }
}
