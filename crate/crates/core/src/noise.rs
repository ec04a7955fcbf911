//! Driving randomness on a master grid.
//!
//! Strong-error measurement needs every mesh of one path to consume the
//! same noise. A [`NoiseRealization`] therefore samples Brownian increments
//! on the finest ("master") net and the full list of jump events once; any
//! net whose points are a subset of the master's is served exactly from it.
//! Realizations are fully determined by `(seed, path_index)` through
//! counter-keyed substreams, so path-level parallelism is reproducible
//! regardless of scheduling.

use crate::error::{Error, Result};
use crate::model::JumpMeasure;
use crate::rng::{self, StreamId};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

/// Matching tolerance when locating a net point on the master grid.
const NEST_REL_TOL: f64 = 1e-9;

/// A time discretization 0 = t₀ ≤ t₁ ≤ … ≤ t_N = T.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    points: Vec<f64>,
}

impl Net {
    /// The uniform net with points k·T/n.
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Net> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::invalid_argument(
                "a net needs at least one step".to_string(),
            ));
        }
        let mut points: Vec<f64> = (0..=n_steps)
            .map(|k| k as f64 * horizon / n_steps as f64)
            .collect();
        // Pin the endpoint exactly.
        points[0] = 0.0;
        points[n_steps] = horizon;
        Ok(Net { points })
    }

    /// A net from explicit points (first must be 0, last is the horizon).
    pub fn from_points(points: Vec<f64>) -> Result<Net> {
        if points.len() < 2 {
            return Err(Error::invalid_argument(
                "a net needs at least two points".to_string(),
            ));
        }
        if points[0] != 0.0 {
            return Err(Error::invalid_argument(format!(
                "first net point must be 0, got {}",
                points[0]
            )));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid_argument(
                "net points must be non-decreasing".to_string(),
            ));
        }
        let last = *points.last().unwrap();
        if !(last > 0.0 && last.is_finite()) {
            return Err(Error::invalid_argument(format!(
                "net horizon must be positive and finite, got {last}"
            )));
        }
        Ok(Net { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Number of intervals N.
    pub fn n_intervals(&self) -> usize {
        self.points.len() - 1
    }

    /// mesh = max interval length.
    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index k of the interval [t_k, t_{k+1}) containing t; at the horizon,
    /// the last interval (the scheme integrates over [0, T)).
    pub fn eta_index(&self, t: f64) -> Result<usize> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::invalid_argument(format!(
                "time {t} outside [0, {horizon}]"
            )));
        }
        if t >= horizon {
            return Ok(self.n_intervals() - 1);
        }
        // First point strictly greater than t, minus one.
        let idx = self.points.partition_point(|&p| p <= t);
        Ok(idx - 1)
    }

    /// η(t): the left grid point of the interval containing t.
    pub fn eta(&self, t: f64) -> Result<f64> {
        Ok(self.points[self.eta_index(t)?])
    }

    /// Index of the net point equal to `t` (within a relative tolerance).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = NEST_REL_TOL * self.horizon().max(1.0);
        let idx = self.points.partition_point(|&m| m < t - tol);
        if idx >= self.points.len() || (self.points[idx] - t).abs() > tol {
            return Err(Error::invalid_argument(format!(
                "net point {t} is not a point of the master net"
            )));
        }
        Ok(idx)
    }

    /// Map every point of this net to its index on `master`, failing with
    /// the first point that is not a master point.
    pub fn nested_indices(&self, master: &Net) -> Result<Vec<usize>> {
        if (self.horizon() - master.horizon()).abs() > NEST_REL_TOL * master.horizon() {
            return Err(Error::invalid_argument(format!(
                "net horizon {} does not match master horizon {}",
                self.horizon(),
                master.horizon()
            )));
        }
        self.points.iter().map(|&p| master.index_of(p)).collect()
    }
}

/// One jump of the driving Poisson random measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpEvent {
    pub time: f64,
    pub mark: f64,
    /// Index j of the master interval (master_j, master_{j+1}] containing
    /// the event time.
    pub master_interval: usize,
}

/// The `(seed, path_index)` pair a realization was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub path_index: u64,
}

/// One path's driving randomness on the master grid.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    master: Net,
    increments: Vec<f64>,
    /// Brownian path at master points (prefix sums of `increments` in index
    /// order); serving coarse increments as prefix differences keeps all
    /// meshes on one shared Brownian path.
    prefix: Vec<f64>,
    jumps: Vec<JumpEvent>,
    initial_gauss: f64,
    seed_record: SeedRecord,
}

impl NoiseRealization {
    /// Draw the realization for `(seed, path_index)`.
    ///
    /// Brownian increments are i.i.d. Normal(0, Δt) per master interval;
    /// the jump count over [0, T] is Poisson(λT) with event times uniform
    /// on (0, T] and marks i.i.d. from the mark law; the Brownian, jump and
    /// initial-value streams are independent substreams.
    pub fn sample(master: &Net, measure: &JumpMeasure, seed: u64, path_index: u64) -> Self {
        let mut brownian_rng = rng::stream(seed, path_index, StreamId::Brownian);
        let n = master.n_intervals();
        let mut increments = Vec::with_capacity(n);
        for w in master.points().windows(2) {
            let dt = w[1] - w[0];
            let z: f64 = StandardNormal.sample(&mut brownian_rng);
            increments.push(z * dt.sqrt());
        }
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for &inc in &increments {
            prefix.push(prefix.last().unwrap() + inc);
        }

        let mut jump_rng = rng::stream(seed, path_index, StreamId::Jumps);
        let horizon = master.horizon();
        let lambda_t = measure.rate() * horizon;
        let mut jumps = Vec::new();
        if lambda_t > 0.0 {
            let count = Poisson::new(lambda_t).unwrap().sample(&mut jump_rng) as usize;
            let mut times = Vec::with_capacity(count);
            for _ in 0..count {
                // (0, T]: flip the half-open unit sample.
                let u: f64 = jump_rng.random();
                times.push(horizon - u * horizon);
            }
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mp = master.points();
            for time in times {
                let mark = measure.law().sample(&mut jump_rng);
                // Interval (master_j, master_{j+1}] containing the time.
                let master_interval = mp.partition_point(|&p| p < time).saturating_sub(1);
                jumps.push(JumpEvent {
                    time,
                    mark,
                    master_interval,
                });
            }
        }

        let mut init_rng = rng::stream(seed, path_index, StreamId::Initial);
        let initial_gauss: f64 = StandardNormal.sample(&mut init_rng);

        NoiseRealization {
            master: master.clone(),
            increments,
            prefix,
            jumps,
            initial_gauss,
            seed_record: SeedRecord { seed, path_index },
        }
    }

    pub fn master(&self) -> &Net {
        &self.master
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// B at the master point with index `idx`.
    pub fn brownian_at(&self, idx: usize) -> f64 {
        self.prefix[idx]
    }

    pub fn jumps(&self) -> &[JumpEvent] {
        &self.jumps
    }

    /// The standard-normal draw backing the initial value.
    pub fn initial_gauss(&self) -> f64 {
        self.initial_gauss
    }

    pub fn seed_record(&self) -> SeedRecord {
        self.seed_record
    }

    /// Brownian increments over the intervals of a coarser net nested in
    /// the master net; each increment is the sum of the master increments
    /// inside the interval, served as a prefix difference so every mesh
    /// reads the same Brownian path.
    pub fn aggregate_brownian(&self, coarse: &Net) -> Result<Vec<f64>> {
        let idx = coarse.nested_indices(&self.master)?;
        Ok(idx
            .windows(2)
            .map(|w| self.prefix[w[1]] - self.prefix[w[0]])
            .collect())
    }

    #[cfg(test)]
    pub(crate) fn for_test(
        master: Net,
        increments: Vec<f64>,
        jumps: Vec<JumpEvent>,
        initial_gauss: f64,
    ) -> Self {
        let mut prefix = Vec::with_capacity(increments.len() + 1);
        prefix.push(0.0);
        for &inc in &increments {
            prefix.push(prefix.last().unwrap() + inc);
        }
        NoiseRealization {
            master,
            increments,
            prefix,
            jumps,
            initial_gauss,
            seed_record: SeedRecord {
                seed: 0,
                path_index: 0,
            },
        }
    }
}
