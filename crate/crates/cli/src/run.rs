//! Experiment dispatch and report assembly.

use std::time::Instant;

use ontolab::chain::{self, ChainSearch};
use ontolab::coarse::{self, CoarseProfile, VarianceReport};
use ontolab::entropy::{self, EntropySpec};
use ontolab::ontic::{self, ModelKind, ModelRecord, OnticModel, Wing};
use ontolab::qm::{self, EntangledState, MeasurementDirection};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, Format, RunConfig};
use crate::error::CliError;

/// Bumped whenever a column or key changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

/// Second direction used by the non-signaling check of `verify-model`.
const NONSIGNALING_OFFSET_DEG: f64 = 60.0;

/// A header row plus data rows, all already formatted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(std::iter::once("schema_version").chain(self.headers.iter().map(String::as_str)))?;
        let version = SCHEMA_VERSION.to_string();
        for row in &self.rows {
            w.write_record(std::iter::once(version.as_str()).chain(row.iter().map(String::as_str)))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io {
            context: "flushing csv".into(),
            source: e.into_error(),
        })?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// What one experiment produced, before formatting.
#[derive(Debug)]
pub struct Outcome {
    pub results: Value,
    pub diagnostics: Value,
    pub table: Table,
    /// Set when the experiment ran but its check failed.
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct Metadata {
    library_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
    diagnostics: Value,
}

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    experiment: Experiment,
    config: &'a RunConfig,
    results: &'a Value,
    metadata: Metadata,
}

/// Formatted output of a run plus an optional failure to report after writing it.
#[derive(Debug)]
pub struct RunOutput {
    pub text: String,
    pub failure: Option<CliError>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values always serialize")
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let started = cfg.timing.then(Instant::now);
    let outcome = dispatch(cfg)?;
    let text = match cfg.output_format {
        Format::Csv => outcome.table.to_csv()?,
        Format::Json => {
            let report = Report {
                schema_version: SCHEMA_VERSION,
                experiment: cfg.experiment,
                config: cfg,
                results: &outcome.results,
                metadata: Metadata {
                    library_version: ontolab::VERSION,
                    wall_time_ms: started.map(|t| t.elapsed().as_secs_f64() * 1e3),
                    diagnostics: outcome.diagnostics,
                },
            };
            let mut s = serde_json::to_string_pretty(&report).expect("reports always serialize");
            s.push('\n');
            s
        }
    };
    Ok(RunOutput {
        text,
        failure: outcome.failure.map(CliError::Verification),
    })
}

pub fn dispatch(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.experiment {
        Experiment::Qm => run_qm(cfg),
        Experiment::VerifyModel => run_verify(cfg),
        Experiment::Variance => run_variance(cfg),
        Experiment::ChainBound => run_chain_bound(cfg),
        Experiment::Entropy => run_entropy(cfg),
        Experiment::Sweep => run_sweep(cfg),
        Experiment::Obstruction => run_obstruction(cfg),
    }
}

fn state_of(theta: f64) -> Result<EntangledState, CliError> {
    EntangledState::new(theta).map_err(CliError::core("state"))
}

fn theta(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.theta
        .ok_or_else(|| CliError::Usage("missing required --theta-deg".into()))
}

fn search(cfg: &RunConfig) -> ChainSearch {
    ChainSearch {
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..ChainSearch::default()
    }
}

fn run_qm(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let state = state_of(theta(cfg)?)?;
    let (a, b) = (MeasurementDirection::new(cfg.alpha_meas), MeasurementDirection::new(cfg.beta_meas));
    let closed = qm::joint_stats(&state, &a, &b).map_err(CliError::core("qm"))?;
    let oracle = qm::density_matrix_oracle(&state, &a, &b);
    let deviation = (closed.expectation_a - oracle.expectation_a)
        .abs()
        .max((closed.expectation_b - oracle.expectation_b).abs())
        .max((closed.correlation - oracle.correlation).abs());
    let j = &closed.joint;
    let mut table = Table::new(&[
        "theta",
        "alpha",
        "beta",
        "expectation_a",
        "expectation_b",
        "correlation",
        "p_plus_plus",
        "p_plus_minus",
        "p_minus_plus",
        "p_minus_minus",
        "oracle_deviation",
    ]);
    table.push(vec![
        num(state.theta()),
        num(cfg.alpha_meas),
        num(cfg.beta_meas),
        num(closed.expectation_a),
        num(closed.expectation_b),
        num(closed.correlation),
        num(j.plus_plus),
        num(j.plus_minus),
        num(j.minus_plus),
        num(j.minus_minus),
        num(deviation),
    ]);
    Ok(Outcome {
        results: json!({ "closed_form": closed, "oracle": oracle }),
        diagnostics: json!({ "oracle_max_deviation": deviation }),
        table,
        failure: None,
    })
}

fn calibrate(cfg: &RunConfig, kind: ModelKind, state: &EntangledState, beta: f64) -> Result<OnticModel, CliError> {
    let (a, b) = (MeasurementDirection::new(cfg.alpha_meas), MeasurementDirection::new(beta));
    OnticModel::calibrate(kind, state, &a, &b, cfg.tol).map_err(CliError::core(format!(
        "calibrating {} model at θ = {}, a = {}, b = {}",
        model_name(kind),
        state.theta(),
        cfg.alpha_meas,
        beta
    )))
}

fn model_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Cap => "cap",
        ModelKind::Belt => "belt",
    }
}

fn run_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let state = state_of(theta(cfg)?)?;
    let kind = ModelKind::from(cfg.model);
    let model = calibrate(cfg, kind, &state, cfg.beta_meas)?;
    let report = ontic::verify_model(&model, cfg.samples, cfg.seed).map_err(CliError::core("verify-model"))?;
    let b2 = cfg.beta_meas + NONSIGNALING_OFFSET_DEG.to_radians();
    let signaling = coarse::check_nonsignaling(
        kind,
        &state,
        &MeasurementDirection::new(cfg.alpha_meas),
        &MeasurementDirection::new(cfg.beta_meas),
        &MeasurementDirection::new(b2),
        cfg.grid_size,
        cfg.tol,
    )
    .map_err(CliError::core("non-signaling check"))?;
    let record = ModelRecord::new(model);
    if let Some(path) = &cfg.save_model {
        std::fs::write(path, record.to_json()).map_err(|e| CliError::Io {
            context: format!("writing model record {}", path.display()),
            source: e,
        })?;
    }

    let mut failures = Vec::new();
    if report.failed {
        failures.push(format!(
            "quadrature residual {:e}, max |z| {:.3}",
            report.residuals.max_abs(),
            report.monte_carlo.max_abs_z()
        ));
    }
    if signaling.signaling {
        failures.push(format!("signaling discrepancy {:e}", signaling.max_discrepancy));
    }
    let mc = &report.monte_carlo;
    let mut table = Table::new(&[
        "model",
        "theta",
        "alpha",
        "beta",
        "seed",
        "samples",
        "max_quadrature_residual",
        "mc_expectation_a",
        "mc_expectation_b",
        "mc_correlation",
        "max_abs_z",
        "nonsignaling_discrepancy",
        "failed",
    ]);
    table.push(vec![
        model_name(kind).into(),
        num(state.theta()),
        num(cfg.alpha_meas),
        num(cfg.beta_meas),
        cfg.seed.to_string(),
        cfg.samples.to_string(),
        num(report.residuals.max_abs()),
        num(mc.expectation_a),
        num(mc.expectation_b),
        num(mc.correlation),
        num(mc.max_abs_z()),
        num(signaling.max_discrepancy),
        (!failures.is_empty()).to_string(),
    ]);
    Ok(Outcome {
        results: json!({ "model": record, "verification": report, "nonsignaling": signaling }),
        diagnostics: json!({
            "sphere_quadrature_tol": ontic::SPHERE_QUAD_TOL,
            "quadrature_residual_limit": ontic::QUADRATURE_RESIDUAL_LIMIT,
            "z_score_limit": ontic::Z_SCORE_LIMIT,
            "signaling_limit": coarse::SIGNALING_LIMIT,
            "nonsignaling_b2": b2,
        }),
        table,
        failure: (!failures.is_empty()).then(|| failures.join("; ")),
    })
}

/// Variance of wing A together with the chain bound at the largest requested `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariancePoint {
    pub theta: f64,
    pub n: usize,
    pub report: VarianceReport,
    #[serde(skip)]
    pub profile: CoarseProfile,
}

/// Shared by `variance` and every row of `sweep`.
pub fn variance_point(cfg: &RunConfig, kind: ModelKind, theta: f64) -> Result<VariancePoint, CliError> {
    let state = state_of(theta)?;
    let a = MeasurementDirection::new(cfg.alpha_meas);
    let model = calibrate(cfg, kind, &state, cfg.beta_meas)?;
    let profile = coarse::coarse_grain(&model, Wing::A, cfg.grid_size).map_err(CliError::core("coarse-graining"))?;
    let rows = chain::bound_convergence(&state, &a, &cfg.n, &search(cfg), false)
        .map_err(CliError::core("chain bound"))?;
    let last = rows.last().expect("n list is never empty");
    let report = coarse::variance_delta(&profile, qm::expectation_a(&state, &a)).with_qm_bound(last.qm_bound);
    Ok(VariancePoint {
        theta,
        n: last.n,
        report,
        profile,
    })
}

fn run_variance(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let point = variance_point(cfg, cfg.model.into(), theta(cfg)?)?;
    let mut table = Table::new(&["tau", "f", "weight"]);
    for r in point.profile.rows() {
        table.push(vec![num(r.tau), num(r.f), num(r.weight)]);
    }
    let profile: Vec<_> = point
        .profile
        .rows()
        .map(|r| json!({ "tau": r.tau, "f": r.f, "weight": r.weight }))
        .collect();
    Ok(Outcome {
        results: json!({ "variance": point, "profile": profile }),
        diagnostics: json!({
            "profile_nodes": point.profile.len(),
            "profile_mean": point.profile.mean(),
            "mean_residual": point.profile.mean() - point.report.expectation,
        }),
        table,
        failure: None,
    })
}

fn run_chain_bound(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let state = state_of(theta(cfg)?)?;
    let a = MeasurementDirection::new(cfg.alpha_meas);
    let rows = chain::bound_convergence(&state, &a, &cfg.n, &search(cfg), cfg.timing)
        .map_err(CliError::core("chain-bound"))?;
    let mut table = Table::new(&["n", "omega_min", "qm_bound", "wall_time_ms"]);
    for r in &rows {
        table.push(vec![r.n.to_string(), num(r.omega_min), num(r.qm_bound), opt(r.wall_time_ms)]);
    }
    let unconverged: Vec<usize> = rows.iter().filter(|r| !r.converged).map(|r| r.n).collect();
    Ok(Outcome {
        results: to_value(&rows),
        diagnostics: json!({
            "restarts": cfg.restarts,
            "unconverged_n": unconverged,
            "monotone_slack": chain::MONOTONE_SLACK,
        }),
        table,
        failure: None,
    })
}

fn run_entropy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let expectation = match cfg.theta {
        Some(t) => Some(qm::expectation_a(&state_of(t)?, &MeasurementDirection::new(cfg.alpha_meas))),
        None => None,
    };
    let p_psi = match (cfg.p_psi, expectation) {
        (Some(p), _) => p,
        (None, Some(e)) => 0.5 * (1.0 + e),
        (None, None) => return Err(CliError::Usage("entropy needs --p-psi or --theta-deg".into())),
    };
    let delta = match (cfg.delta, expectation) {
        (Some(d), _) => d,
        // the belt model saturates δ = |⟨A⟩| − ⟨A⟩²
        (None, Some(e)) => e.abs() - e * e,
        (None, None) => return Err(CliError::Usage("entropy needs --delta or --theta-deg".into())),
    };
    let spec = EntropySpec::new(cfg.renyi_order()).map_err(CliError::core("entropy"))?;
    let report = entropy::minimize_average_entropy(p_psi, delta, &spec, cfg.lp_grid)
        .map_err(CliError::core(format!("entropy at p = {p_psi}, δ = {delta}")))?;
    let critical = if cfg.critical {
        let p = p_psi.min(1.0 - p_psi);
        Some(
            entropy::critical_variance(p, &spec, cfg.scan_tol, cfg.lp_grid)
                .map_err(CliError::core("critical variance"))?,
        )
    } else {
        None
    };
    let atoms: Vec<String> = report
        .minimizer
        .atoms
        .iter()
        .map(|a| format!("{}:{}", a.p, a.weight))
        .collect();
    let mut table = Table::new(&[
        "p_psi",
        "delta",
        "alpha",
        "h_bar",
        "candidate_h_bar",
        "is_bilocal",
        "atoms",
        "delta_c",
    ]);
    table.push(vec![
        num(p_psi),
        num(delta),
        num(cfg.renyi_order()),
        num(report.h_bar),
        num(report.candidate_h_bar),
        report.is_bilocal.to_string(),
        atoms.join(";"),
        opt(critical.as_ref().map(|c| c.delta_c)),
    ]);
    Ok(Outcome {
        results: json!({
            "p_psi": p_psi,
            "delta": delta,
            "alpha": cfg.renyi_alpha,
            "grid_size": report.grid_size,
            "h_bar": report.h_bar,
            "is_bilocal": report.is_bilocal,
            "atoms": report.minimizer.atoms,
            "candidate_h_bar": report.candidate_h_bar,
            "critical": critical,
        }),
        diagnostics: json!({
            "lp_grid": report.grid_size,
            "lp_pivots": report.lp_pivots,
            "mean_residual": report.mean_residual,
            "variance_residual": report.variance_residual,
        }),
        table,
        failure: None,
    })
}

/// θ values of a sweep in degrees: `0, step, 2·step, …` and always 90.
pub fn sweep_degrees(step: f64) -> Vec<f64> {
    let count = (90.0 / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=count).map(|i| i as f64 * step).filter(|d| *d < 90.0).collect();
    out.push(90.0);
    out
}

fn run_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let degrees = sweep_degrees(cfg.theta_step_deg);
    let points: Vec<VariancePoint> = degrees
        .par_iter()
        .map(|d| variance_point(cfg, ModelKind::Belt, d.to_radians()))
        .collect::<Result<_, _>>()?;
    let n = *cfg.n.last().expect("n list is never empty");
    let bound_col = format!("qm_bound_n{n}");
    let mut table = Table::new(&["theta", "expectation", "delta_belt", "bound3", &bound_col]);
    for p in &points {
        table.push(vec![
            num(p.theta),
            num(p.report.expectation),
            num(p.report.delta),
            num(p.report.bound3),
            opt(p.report.qm_bound),
        ]);
    }
    let max_gap = points
        .iter()
        .map(|p| (p.report.delta - p.report.bound3).abs())
        .fold(0.0, f64::max);
    Ok(Outcome {
        results: to_value(&points),
        diagnostics: json!({ "points": points.len(), "max_delta_bound3_gap": max_gap }),
        table,
        failure: None,
    })
}

fn run_obstruction(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let state = state_of(theta(cfg)?)?;
    let a = MeasurementDirection::new(cfg.alpha_meas);
    let grid = coarse::direction_grid(cfg.b_grid);
    let report = coarse::obstruction_check(cfg.arc_a, cfg.arc_b, &state, &a, &grid)
        .map_err(CliError::core("obstruction"))?;
    let mut table = Table::new(&[
        "arc_extent_a",
        "arc_extent_b",
        "conditioning",
        "model_min",
        "model_max",
        "quantum_min",
        "quantum_max",
        "case1_excluded",
        "case2_excluded",
    ]);
    table.push(vec![
        num(report.arc_extent_a),
        num(report.arc_extent_b),
        match report.conditioning {
            Wing::A => "A".into(),
            Wing::B => "B".into(),
        },
        num(report.model_min),
        num(report.model_max),
        num(report.quantum_min),
        num(report.quantum_max),
        report.case1_excluded.to_string(),
        report.case2_excluded.to_string(),
    ]);
    Ok(Outcome {
        results: to_value(&report),
        diagnostics: json!({ "b_grid": grid.len(), "excluded": report.excluded() }),
        table,
        failure: None,
    })
}
