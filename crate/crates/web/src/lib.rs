//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; on bad input it returns
//! `{"error": "..."}` instead of throwing.

use ontolab::chain::{self, ChainSearch};
use ontolab::coarse;
use ontolab::entropy::{self, EntropySpec};
use ontolab::ontic::{ModelKind, OnticModel, Wing};
use ontolab::qm::{self, EntangledState, MeasurementDirection};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct Curve {
    pub model: &'static str,
    pub tau: Vec<f64>,
    pub f: Vec<f64>,
    pub delta: f64,
}

#[derive(Debug, Serialize)]
pub struct Profiles {
    pub expectation: f64,
    pub bound3: f64,
    pub curves: Vec<Curve>,
}

/// Coarse-grained `f(τ)` of wing A for both models.
pub fn profiles(theta_deg: f64, a_deg: f64, b_deg: f64, grid_size: usize) -> ontolab::Result<Profiles> {
    let state = EntangledState::from_degrees(theta_deg)?;
    let a = MeasurementDirection::from_degrees(a_deg);
    let b = MeasurementDirection::from_degrees(b_deg);
    let expectation = qm::expectation_a(&state, &a);
    let mut curves = Vec::new();
    for (kind, name) in [(ModelKind::Cap, "cap"), (ModelKind::Belt, "belt")] {
        let model = OnticModel::calibrate(kind, &state, &a, &b, 1e-6)?;
        let profile = coarse::coarse_grain(&model, Wing::A, grid_size)?;
        let delta = coarse::variance_delta(&profile, expectation).delta;
        curves.push(Curve {
            model: name,
            tau: profile.tau_grid,
            f: profile.f_values,
            delta,
        });
    }
    Ok(Profiles {
        expectation,
        bound3: expectation.abs() - expectation * expectation,
        curves,
    })
}

#[derive(Debug, Serialize)]
pub struct BoundTable {
    pub delta_belt: f64,
    pub rows: Vec<chain::BoundRow>,
}

/// `qm_bound(n)` for `n = 1, 2, 5, 10, …` up to `n_max`, next to the belt-model variance.
pub fn bound_table(theta_deg: f64, a_deg: f64, n_max: usize) -> ontolab::Result<BoundTable> {
    let state = EntangledState::from_degrees(theta_deg)?;
    let a = MeasurementDirection::from_degrees(a_deg);
    let n_list: Vec<usize> = [1, 2, 5, 10, 20, 30, 40]
        .into_iter()
        .filter(|n| *n <= n_max.max(1))
        .collect();
    let search = ChainSearch {
        restarts: 2,
        ..ChainSearch::default()
    };
    let rows = chain::bound_convergence(&state, &a, &n_list, &search, false)?;
    let model = OnticModel::calibrate(ModelKind::Belt, &state, &a, &a, 1e-6)?;
    let profile = coarse::coarse_grain(&model, Wing::A, coarse::DEFAULT_GRID_SIZE)?;
    let delta_belt = coarse::variance_delta(&profile, qm::expectation_a(&state, &a)).delta;
    Ok(BoundTable { delta_belt, rows })
}

#[derive(Debug, Serialize)]
pub struct EntropyPoint {
    pub delta: f64,
    pub h_bar: f64,
    pub is_bilocal: bool,
}

/// Minimum averaged entropy as a function of `δ` at fixed `p_ψ`.
pub fn entropy_curve(p_psi: f64, alpha: f64, points: usize) -> ontolab::Result<Vec<EntropyPoint>> {
    let spec = EntropySpec::new(alpha)?;
    let points = points.clamp(2, 200);
    let top = entropy::max_variance(p_psi);
    (0..points)
        .map(|i| {
            let delta = top * i as f64 / (points - 1) as f64;
            let r = entropy::minimize_average_entropy(p_psi, delta, &spec, entropy::MIN_LP_GRID)?;
            Ok(EntropyPoint {
                delta,
                h_bar: r.h_bar,
                is_bilocal: r.is_bilocal,
            })
        })
        .collect()
}

fn to_json<T: Serialize>(r: ontolab::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[wasm_bindgen(js_name = profileCurves)]
pub fn profile_curves(theta_deg: f64, a_deg: f64, b_deg: f64, grid_size: usize) -> String {
    to_json(profiles(theta_deg, a_deg, b_deg, grid_size))
}

#[wasm_bindgen(js_name = boundTable)]
pub fn bound_table_json(theta_deg: f64, a_deg: f64, n_max: usize) -> String {
    to_json(bound_table(theta_deg, a_deg, n_max))
}

#[wasm_bindgen(js_name = entropyCurve)]
pub fn entropy_curve_json(p_psi: f64, alpha: f64, points: usize) -> String {
    to_json(entropy_curve(p_psi, alpha, points))
}
