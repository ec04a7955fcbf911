//! Command implementations.
//!
//! Exit codes are a stable contract: 0 all checks pass, 1 a check failed,
//! 2 usage/config error, 3 I/O error.

use crate::config::RunConfig;
use crate::output::{fmt, OutDir};
use jumpflow_core::analysis::{self, StudySetup};
use jumpflow_core::error::Error;
use jumpflow_core::euler;
use jumpflow_core::model::{self, ModelSpec, ValidateOptions};
use jumpflow_core::noise::{Net, NoiseRealization};
use jumpflow_core::yamada::{self, LevelReport, ModulusFamily, MollifierCheckConfig,
    MollifierSequence};
use serde::Serialize;
use std::path::Path;
use std::sync::Arc;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// A command outcome: the semantic exit code, or a hard error.
pub type CmdResult = Result<u8, CmdError>;

#[derive(Debug)]
pub enum CmdError {
    Config(String),
    Io(String),
}

impl CmdError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) => EXIT_CONFIG,
            CmdError::Io(_) => EXIT_IO,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Config(m) | CmdError::Io(m) => m,
        }
    }
}

impl From<Error> for CmdError {
    fn from(e: Error) -> Self {
        CmdError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e.to_string())
    }
}

impl From<csv::Error> for CmdError {
    fn from(e: csv::Error) -> Self {
        CmdError::Io(e.to_string())
    }
}

fn build_model(config: &RunConfig) -> Result<Arc<ModelSpec>, CmdError> {
    Ok(Arc::new(config.model.build()?))
}

// ---------------------------------------------------------------------
// validate

#[derive(Serialize)]
struct ValidateReport {
    growth: model::GrowthReport,
    modulus: model::ModulusReport,
    all_pass: bool,
}

pub fn cmd_validate(config: &RunConfig, out: &Path) -> CmdResult {
    let spec = build_model(config)?;
    let vcfg = config.validation.clone().unwrap_or_default();
    let options = ValidateOptions {
        strict_growth_sup: vcfg.strict_growth,
        divergence_threshold: vcfg
            .divergence_threshold
            .unwrap_or(ValidateOptions::default().divergence_threshold),
        ..ValidateOptions::default()
    };

    let growth = model::validate_growth(&spec, &vcfg.states(), &options)?;
    let modulus_spec = vcfg.modulus_spec(spec.growth_constant())?;
    let modulus = model::validate_modulus(
        &spec,
        &modulus_spec,
        vcfg.mode,
        &vcfg.pair_grid(),
        vcfg.bound_m(),
        &options,
    )?;

    let all_pass = growth.all_pass && modulus.all_pass;
    let report = ValidateReport {
        growth,
        modulus,
        all_pass,
    };
    let dir = OutDir::create(out)?;
    dir.write_json("report.json", &report)?;
    let mut w = dir.csv_writer("report.csv")?;
    w.write_record(["check", "x", "y", "lhs", "rhs", "pass"])?;
    for c in &report.growth.checks {
        w.write_record([
            "growth",
            &fmt(c.x),
            "",
            &fmt(c.lhs),
            &fmt(c.rhs),
            &c.pass.to_string(),
        ])?;
    }
    for c in &report.modulus.pair_checks {
        w.write_record([
            &format!("modulus_{}", report.modulus.mode.name()),
            &fmt(c.x),
            &fmt(c.y),
            &fmt(c.lhs),
            &fmt(c.rhs),
            &c.pass.to_string(),
        ])?;
    }
    w.flush()?;

    for c in report.growth.checks.iter().filter(|c| !c.pass) {
        eprintln!(
            "growth check failed at x = {}: {} > {}",
            c.x, c.lhs, c.rhs
        );
    }
    for c in report.modulus.pair_checks.iter().filter(|c| !c.pass) {
        eprintln!(
            "modulus ({}) check failed at pair ({}, {}): {} > {}",
            report.modulus.mode.name(),
            c.x,
            c.y,
            c.lhs,
            c.rhs
        );
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------------
// simulate

pub fn cmd_simulate(
    config: &RunConfig,
    out: &Path,
    dump_paths: bool,
    dump_noise: bool,
) -> CmdResult {
    let spec = build_model(config)?;
    let master = Net::uniform(config.horizon, config.master_steps())?;
    let steps = config.simulate_steps.unwrap_or(config.reference_mesh);
    let net = Net::uniform(config.horizon, steps)?;
    let summary = analysis::simulate_summary(
        &spec,
        &net,
        &master,
        config.n_paths,
        config.seed,
        config.deterministic_reduction,
    )?;

    let dir = OutDir::create(out)?;
    dir.write_json("report.json", &summary)?;
    let mut w = dir.csv_writer("report.csv")?;
    w.write_record(["time", "mean", "se"])?;
    for i in 0..summary.times.len() {
        w.write_record([
            &fmt(summary.times[i]),
            &fmt(summary.mean[i]),
            &fmt(summary.se[i]),
        ])?;
    }
    w.flush()?;

    if dump_paths {
        let mut w = dir.csv_writer("paths.csv")?;
        w.write_record(["path_index", "time", "state", "flag"])?;
        for idx in 0..config.n_paths {
            let noise = Arc::new(NoiseRealization::sample(
                &master,
                spec.measure(),
                config.seed,
                idx as u64,
            ));
            let path = euler::simulate_path(&spec, &net, &noise)?;
            let eval = path.evaluate_on_master();
            let mut jumps = eval.jump_values.iter().peekable();
            for (k, &t) in net.points().iter().enumerate() {
                while let Some(j) = jumps.peek() {
                    if j.time <= t {
                        w.write_record([
                            &idx.to_string(),
                            &fmt(j.time),
                            &fmt(j.post),
                            "post_jump",
                        ])?;
                        jumps.next();
                    } else {
                        break;
                    }
                }
                w.write_record([&idx.to_string(), &fmt(t), &fmt(path.states()[k]), "grid"])?;
            }
        }
        w.flush()?;
    }

    if dump_noise {
        let mut w = dir.csv_writer("noise.csv")?;
        w.write_record(["path_index", "kind", "time_or_interval_index", "value"])?;
        for idx in 0..config.n_paths {
            let noise =
                NoiseRealization::sample(&master, spec.measure(), config.seed, idx as u64);
            for (i, &inc) in noise.increments().iter().enumerate() {
                w.write_record([&idx.to_string(), "dW", &i.to_string(), &fmt(inc)])?;
            }
            for e in noise.jumps() {
                w.write_record([&idx.to_string(), "jump", &fmt(e.time), &fmt(e.mark)])?;
            }
        }
        w.flush()?;
    }

    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------
// converge

pub fn cmd_converge(config: &RunConfig, out: &Path) -> CmdResult {
    if config.study_meshes.len() < 2 {
        return Err(CmdError::Config(
            "converge needs at least two study meshes".to_string(),
        ));
    }
    if config.reference_mesh <= *config.study_meshes.iter().max().unwrap() {
        return Err(CmdError::Config(
            "the reference mesh must be strictly finer than every study mesh".to_string(),
        ));
    }
    let spec = build_model(config)?;
    let mut study_steps = config.study_meshes.clone();
    study_steps.sort_unstable();
    let setup = StudySetup {
        spec,
        horizon: config.horizon,
        master_steps: config.master_steps(),
        study_steps,
        reference_steps: config.reference_mesh,
        n_paths: config.n_paths,
        seed: config.seed,
        deterministic: config.deterministic_reduction,
    };
    let report = analysis::convergence_study(&setup)?;

    let dir = OutDir::create(out)?;
    dir.write_json("report.json", &report)?;
    let mut w = dir.csv_writer("report.csv")?;
    w.write_record(["mesh", "error", "se", "rate_fit"])?;
    for i in 0..report.meshes.len() {
        w.write_record([
            &fmt(report.meshes[i]),
            &fmt(report.errors[i]),
            &fmt(report.errors_se[i]),
            &fmt(report.fitted_rate),
        ])?;
    }
    w.flush()?;

    let pass = report.errors_nonincreasing_within_2se && report.all_bounds_ok;
    if !report.errors_nonincreasing_within_2se {
        eprintln!("convergence check failed: errors increase beyond 2 SE across refinements");
    }
    for c in report.bound_checks.iter().filter(|c| !c.all_ok()) {
        eprintln!(
            "bound check failed at mesh {}: G {} H {} increment {}",
            c.mesh, c.g_ok, c.h_ok, c.increment_ok
        );
    }
    Ok(if pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

// ---------------------------------------------------------------------
// mollifier

#[derive(Serialize)]
struct MollifierReport {
    family: String,
    levels: usize,
    cutoffs: Vec<f64>,
    divergence: yamada::DivergenceReport,
    level_reports: Vec<LevelReport>,
    construction_ok: bool,
    strict_constants_ok: bool,
}

pub struct MollifierArgs {
    pub family: ModulusFamily,
    pub levels: usize,
    pub grid_points: usize,
    pub h_points: usize,
    pub range: f64,
    pub divergence_threshold: f64,
}

pub fn cmd_mollifier(args: &MollifierArgs, out: &Path) -> CmdResult {
    if args.levels == 0 {
        return Err(CmdError::Config("levels must be at least 1".to_string()));
    }
    let seq = match MollifierSequence::build(args.family.clone(), args.levels) {
        Ok(seq) => seq,
        Err(Error::MollifierRange {
            requested,
            max_achievable,
        }) => {
            eprintln!(
                "level {requested} unreachable: the cutoff sequence underflows; \
                 max achievable level is {max_achievable}"
            );
            return Ok(EXIT_CHECK_FAILED);
        }
        Err(e) => return Err(e.into()),
    };
    let divergence = yamada::check_divergence(seq.rho(), args.divergence_threshold, 1e-12)?;
    let cfg = MollifierCheckConfig::symmetric(args.range, args.grid_points, args.h_points);
    let level_reports: Vec<LevelReport> =
        (1..=seq.max_level()).map(|k| seq.verify(k, &cfg)).collect();
    let construction_ok =
        divergence.pass && level_reports.iter().all(LevelReport::construction_ok);
    let strict_constants_ok = level_reports.iter().all(|r| {
        r.strict_second_derivative_le_4 && r.strict_cutoff_ratio_le_2 && r.strict_dh_le_2h2
    });

    let report = MollifierReport {
        family: format!("{:?}", seq.rho()),
        levels: args.levels,
        cutoffs: seq.cutoffs().to_vec(),
        divergence,
        level_reports,
        construction_ok,
        strict_constants_ok,
    };
    let dir = OutDir::create(out)?;
    dir.write_json("report.json", &report)?;
    let mut w = dir.csv_writer("report.csv")?;
    w.write_record(["k", "a_k", "sup_psi_k", "max_dh_over_h2"])?;
    for r in &report.level_reports {
        w.write_record([
            &r.k.to_string(),
            &fmt(r.a_lo),
            &fmt(r.sup_psi),
            &fmt(r.max_dh_over_h2),
        ])?;
    }
    w.flush()?;

    if !report.construction_ok {
        eprintln!("mollifier construction checks failed; see report.json");
    }
    if !report.strict_constants_ok {
        eprintln!(
            "note: the per-level constants (phi'' <= 4, k^-1 rho^-2(a_k) <= 2, D_h phi <= 2h^2) \
             do not hold for this gauge at higher levels; the report carries the observed \
             maxima. The construction-level bounds are what the exit code gates."
        );
    }
    Ok(if report.construction_ok {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
