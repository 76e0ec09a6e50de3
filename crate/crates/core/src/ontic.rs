//! Deterministic ontological models on the unit sphere.
//!
//! Both shipped models use the uniform ontic density `ρ(λ) = 1/4π` and assign
//! each wing a ±1 outcome from the position of `λ`:
//!
//! - [`CapModel`]: `A = +1` on the cap `ã·λ ≥ cos ξ` with `cos ξ = −⟨A(a)⟩`,
//!   `B = +1` on the cap `b̂·λ ≥ cos χ` with `cos χ = −⟨B(b)⟩`. Both cap
//!   centres sit on the equator; their azimuth separation is calibrated so that
//!   the joint statistics match quantum mechanics.
//! - [`BeltModel`]: `A = −sign⟨A(a)⟩` on the half-equator belt
//!   `|μ − μ_ã′| < π/2, |τ − π/2| < η_a` and `sign⟨A(a)⟩` elsewhere, with
//!   `sin η_a = 1 − |⟨A(a)⟩|`.
//!
//! Sphere averages are computed in `z = cos τ`, where the uniform density is
//! `dz dμ / 4π`: the azimuth integral is the exact length of the +1 arc at each
//! `z` and the `z` integral is adaptive Gauss–Kronrod, split at the support
//! boundaries of the model.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qm::{self, EntangledState, JointStats, MeasurementDirection, Outcome};
use crate::quad;
use crate::rng;
use crate::sphere::{self, AzimuthSet, OnticPoint};

/// Target accuracy of the sphere-average quadratures.
pub const SPHERE_QUAD_TOL: f64 = 1e-12;

/// Width of the final bracket when root-finding the azimuth separation.
pub const AZIMUTH_BISECTION_TOL: f64 = 1e-10;

/// Quadrature residual above which [`verify_model`] flags a failure.
pub const QUADRATURE_RESIDUAL_LIMIT: f64 = 1e-6;

/// Monte Carlo |z| above which [`verify_model`] flags a failure.
pub const Z_SCORE_LIMIT: f64 = 5.0;

const MC_CHUNK: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wing {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseSample {
    pub a_value: Outcome,
    pub b_value: Outcome,
}

impl ResponseSample {
    pub fn get(&self, wing: Wing) -> Outcome {
        match wing {
            Wing::A => self.a_value,
            Wing::B => self.b_value,
        }
    }
}

/// A calibrated deterministic response model with uniform ontic density.
pub trait ResponseModel {
    fn state(&self) -> EntangledState;
    fn direction(&self, wing: Wing) -> MeasurementDirection;

    /// Outcome pair at `λ`, evaluated from the support geometry.
    fn respond(&self, lambda: &OnticPoint) -> ResponseSample;

    /// Azimuths at height `z = cos τ` where `wing` answers +1.
    fn plus_set(&self, wing: Wing, z: f64) -> AzimuthSet;

    /// Heights `z` where the support of `wing` changes shape.
    fn wing_breakpoints(&self, wing: Wing) -> Vec<f64>;

    /// Breakpoints of both wings.
    fn z_breakpoints(&self) -> Vec<f64> {
        let mut z = self.wing_breakpoints(Wing::A);
        z.extend(self.wing_breakpoints(Wing::B));
        z
    }
}

/// `(1/4π) ∫∫ h(S_A(z), S_B(z)) dμ dz` where `h` returns an azimuth length.
fn sphere_average<M, H>(model: &M, mut arc_length: H) -> f64
where
    M: ResponseModel + ?Sized,
    H: FnMut(&AzimuthSet, &AzimuthSet) -> f64,
{
    let pts = quad::breakpoints(-1.0, 1.0, model.z_breakpoints().into_iter().chain([0.0]));
    let integrand = |z: f64| {
        let sa = model.plus_set(Wing::A, z);
        let sb = model.plus_set(Wing::B, z);
        arc_length(&sa, &sb) / TAU
    };
    0.5 * quad::integrate_pieces(integrand, &pts, SPHERE_QUAD_TOL).value
}

/// Exact-level (quadrature) statistics of a model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub plus_a: f64,
    pub plus_b: f64,
    pub plus_plus: f64,
    pub expectation_a: f64,
    pub expectation_b: f64,
    pub correlation: f64,
}

pub fn model_stats<M: ResponseModel + ?Sized>(model: &M) -> ModelStats {
    let plus_a = sphere_average(model, |sa, _| sa.measure());
    let plus_b = sphere_average(model, |_, sb| sb.measure());
    let plus_plus = sphere_average(model, |sa, sb| sa.overlap(sb));
    ModelStats {
        plus_a,
        plus_b,
        plus_plus,
        expectation_a: 2.0 * plus_a - 1.0,
        expectation_b: 2.0 * plus_b - 1.0,
        correlation: 4.0 * plus_plus - 2.0 * plus_a - 2.0 * plus_b + 1.0,
    }
}

/// +1 arc of an equator-centred cap of half-angle `half_angle` at height `z`.
fn cap_slice(center: f64, half_angle: f64, z: f64) -> AzimuthSet {
    let cos_half = half_angle.cos();
    let sin_tau = (1.0 - z * z).max(0.0).sqrt();
    if sin_tau == 0.0 {
        // at the poles c·λ = 0
        return if cos_half <= 0.0 { AzimuthSet::Full } else { AzimuthSet::Empty };
    }
    let ratio = (cos_half / sin_tau).clamp(-1.0, 1.0);
    AzimuthSet::arc(center, ratio.acos())
}

/// Normalised area of the intersection of two caps centred on the equator,
/// with half-angles `xi`, `chi` and azimuth separation `delta_azimuth`.
pub fn cap_overlap_probability(xi: f64, chi: f64, delta_azimuth: f64) -> f64 {
    let pts = quad::breakpoints(-1.0, 1.0, [-xi.sin(), xi.sin(), -chi.sin(), chi.sin(), 0.0]);
    let integrand = |z: f64| cap_slice(0.0, xi, z).overlap(&cap_slice(delta_azimuth, chi, z)) / TAU;
    0.5 * quad::integrate_pieces(integrand, &pts, SPHERE_QUAD_TOL).value
}

/// Side of `b` on which the partner support centre is placed, so that it lies
/// between `b` and `a` in the measurement plane.
fn side_towards(b: &MeasurementDirection, a: &MeasurementDirection) -> f64 {
    if sphere::azimuth_difference(b.angle(), a.angle()) >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Find `Δ ∈ [0, π]` with `p(Δ) = target` for a monotone `p`.
fn solve_separation<F: Fn(f64) -> f64>(p: F, target: f64, tol: f64) -> Result<f64> {
    let at_zero = p(0.0);
    let at_pi = p(PI);
    let (min, max) = (at_zero.min(at_pi), at_zero.max(at_pi));
    if target > max + tol || target < min - tol {
        return Err(Error::UnreachableCorrelation { target, min, max });
    }
    let decreasing = at_zero >= at_pi;
    if (decreasing && target >= at_zero) || (!decreasing && target <= at_zero) {
        return Ok(0.0);
    }
    if (decreasing && target <= at_pi) || (!decreasing && target >= at_pi) {
        return Ok(PI);
    }
    let (mut lo, mut hi) = (0.0, PI);
    while hi - lo > AZIMUTH_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        let above = p(mid) > target;
        if above == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("calibration tolerance must be positive, got {tol}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapModel {
    pub state: EntangledState,
    pub a: MeasurementDirection,
    pub b: MeasurementDirection,
    /// Half-angle of A's cap, `cos ξ = −⟨A(a)⟩`.
    pub xi: f64,
    /// Half-angle of B's cap, `cos χ = −⟨B(b)⟩`.
    pub chi: f64,
    pub a_tilde_azimuth: f64,
    pub b_cap_azimuth: f64,
    pub tol: f64,
}

pub fn calibrate_cap(
    state: &EntangledState,
    a: &MeasurementDirection,
    b: &MeasurementDirection,
    tol: f64,
) -> Result<CapModel> {
    check_tol(tol)?;
    let stats = qm::joint_stats(state, a, b)?;
    let xi = (-stats.expectation_a).clamp(-1.0, 1.0).acos();
    let chi = (-stats.expectation_b).clamp(-1.0, 1.0).acos();
    let delta = solve_separation(|d| cap_overlap_probability(xi, chi, d), stats.joint.plus_plus, tol)?;
    let b_cap_azimuth = b.angle();
    Ok(CapModel {
        state: *state,
        a: *a,
        b: *b,
        xi,
        chi,
        a_tilde_azimuth: qm::wrap_angle(b_cap_azimuth + side_towards(b, a) * delta),
        b_cap_azimuth,
        tol,
    })
}

impl CapModel {
    pub fn recalibrate(&self) -> Result<Self> {
        calibrate_cap(&self.state, &self.a, &self.b, self.tol)
    }

    /// Azimuth separation of the two cap centres, in `[0, π]`.
    pub fn separation(&self) -> f64 {
        sphere::azimuth_difference(self.b_cap_azimuth, self.a_tilde_azimuth).abs()
    }
}

impl ResponseModel for CapModel {
    fn state(&self) -> EntangledState {
        self.state
    }

    fn direction(&self, wing: Wing) -> MeasurementDirection {
        match wing {
            Wing::A => self.a,
            Wing::B => self.b,
        }
    }

    fn respond(&self, lambda: &OnticPoint) -> ResponseSample {
        let v = lambda.unit_vector();
        let a_dot = sphere::dot(&sphere::equatorial_vector(self.a_tilde_azimuth), &v);
        let b_dot = sphere::dot(&sphere::equatorial_vector(self.b_cap_azimuth), &v);
        ResponseSample {
            a_value: if a_dot >= self.xi.cos() { Outcome::Plus } else { Outcome::Minus },
            b_value: if b_dot >= self.chi.cos() { Outcome::Plus } else { Outcome::Minus },
        }
    }

    fn plus_set(&self, wing: Wing, z: f64) -> AzimuthSet {
        match wing {
            Wing::A => cap_slice(self.a_tilde_azimuth, self.xi, z),
            Wing::B => cap_slice(self.b_cap_azimuth, self.chi, z),
        }
    }

    fn wing_breakpoints(&self, wing: Wing) -> Vec<f64> {
        let s = match wing {
            Wing::A => self.xi.sin(),
            Wing::B => self.chi.sin(),
        };
        vec![-s, s]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeltModel {
    pub state: EntangledState,
    pub a: MeasurementDirection,
    pub b: MeasurementDirection,
    /// Half polar width of A's belt, `sin η_a = 1 − |⟨A(a)⟩|`.
    pub eta_a: f64,
    pub eta_b: f64,
    pub a_belt_azimuth: f64,
    pub b_belt_azimuth: f64,
    /// Value assigned inside A's belt: `−sign⟨A(a)⟩`, +1 when `⟨A(a)⟩ = 0`.
    pub sign_a: Outcome,
    pub sign_b: Outcome,
    pub tol: f64,
}

/// Belt half-width matching the marginal `⟨A⟩`.
pub fn belt_half_width(expectation: f64) -> f64 {
    (1.0 - expectation.abs()).clamp(0.0, 1.0).asin()
}

fn belt_sign(expectation: f64) -> Outcome {
    if expectation > 0.0 {
        Outcome::Minus
    } else {
        Outcome::Plus
    }
}

fn belt_slice(center: f64, eta: f64, sign: Outcome, z: f64) -> AzimuthSet {
    let inside = z.abs() < eta.sin();
    match (inside, sign) {
        (true, Outcome::Plus) => AzimuthSet::arc(center, FRAC_PI_2),
        (true, Outcome::Minus) => AzimuthSet::arc(center, FRAC_PI_2).complement(),
        (false, Outcome::Plus) => AzimuthSet::Empty,
        (false, Outcome::Minus) => AzimuthSet::Full,
    }
}

fn belt_response(center: f64, eta: f64, sign: Outcome, lambda: &OnticPoint) -> Outcome {
    let in_arc = sphere::azimuth_difference(center, lambda.mu).abs() < FRAC_PI_2;
    let in_band = (lambda.tau - FRAC_PI_2).abs() < eta;
    if in_arc && in_band {
        sign
    } else {
        Outcome::from_sign(-sign.value())
    }
}

pub fn calibrate_belt(
    state: &EntangledState,
    a: &MeasurementDirection,
    b: &MeasurementDirection,
    tol: f64,
) -> Result<BeltModel> {
    check_tol(tol)?;
    let stats = qm::joint_stats(state, a, b)?;
    let mut model = BeltModel {
        state: *state,
        a: *a,
        b: *b,
        eta_a: belt_half_width(stats.expectation_a),
        eta_b: belt_half_width(stats.expectation_b),
        a_belt_azimuth: b.angle(),
        b_belt_azimuth: b.angle(),
        sign_a: belt_sign(stats.expectation_a),
        sign_b: belt_sign(stats.expectation_b),
        tol,
    };
    let side = side_towards(b, a);
    let trial = |d: f64| {
        let mut m = model;
        m.a_belt_azimuth = qm::wrap_angle(m.b_belt_azimuth + side * d);
        sphere_average(&m, |sa, sb| sa.overlap(sb))
    };
    let delta = solve_separation(trial, stats.joint.plus_plus, tol)?;
    model.a_belt_azimuth = qm::wrap_angle(model.b_belt_azimuth + side * delta);
    Ok(model)
}

impl BeltModel {
    pub fn recalibrate(&self) -> Result<Self> {
        calibrate_belt(&self.state, &self.a, &self.b, self.tol)
    }

    pub fn separation(&self) -> f64 {
        sphere::azimuth_difference(self.b_belt_azimuth, self.a_belt_azimuth).abs()
    }
}

impl ResponseModel for BeltModel {
    fn state(&self) -> EntangledState {
        self.state
    }

    fn direction(&self, wing: Wing) -> MeasurementDirection {
        match wing {
            Wing::A => self.a,
            Wing::B => self.b,
        }
    }

    fn respond(&self, lambda: &OnticPoint) -> ResponseSample {
        ResponseSample {
            a_value: belt_response(self.a_belt_azimuth, self.eta_a, self.sign_a, lambda),
            b_value: belt_response(self.b_belt_azimuth, self.eta_b, self.sign_b, lambda),
        }
    }

    fn plus_set(&self, wing: Wing, z: f64) -> AzimuthSet {
        match wing {
            Wing::A => belt_slice(self.a_belt_azimuth, self.eta_a, self.sign_a, z),
            Wing::B => belt_slice(self.b_belt_azimuth, self.eta_b, self.sign_b, z),
        }
    }

    fn wing_breakpoints(&self, wing: Wing) -> Vec<f64> {
        let s = match wing {
            Wing::A => self.eta_a.sin(),
            Wing::B => self.eta_b.sin(),
        };
        vec![-s, s]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cap,
    Belt,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cap" => Ok(ModelKind::Cap),
            "belt" => Ok(ModelKind::Belt),
            other => Err(Error::InvalidInput(format!("unknown model kind `{other}` (expected cap or belt)"))),
        }
    }
}

/// Either shipped model, tagged for serialization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OnticModel {
    Cap(CapModel),
    Belt(BeltModel),
}

impl OnticModel {
    pub fn calibrate(
        kind: ModelKind,
        state: &EntangledState,
        a: &MeasurementDirection,
        b: &MeasurementDirection,
        tol: f64,
    ) -> Result<Self> {
        Ok(match kind {
            ModelKind::Cap => OnticModel::Cap(calibrate_cap(state, a, b, tol)?),
            ModelKind::Belt => OnticModel::Belt(calibrate_belt(state, a, b, tol)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            OnticModel::Cap(_) => ModelKind::Cap,
            OnticModel::Belt(_) => ModelKind::Belt,
        }
    }

    pub fn recalibrate(&self) -> Result<Self> {
        Ok(match self {
            OnticModel::Cap(m) => OnticModel::Cap(m.recalibrate()?),
            OnticModel::Belt(m) => OnticModel::Belt(m.recalibrate()?),
        })
    }

    fn inner(&self) -> &dyn ResponseModel {
        match self {
            OnticModel::Cap(m) => m,
            OnticModel::Belt(m) => m,
        }
    }
}

impl ResponseModel for OnticModel {
    fn state(&self) -> EntangledState {
        self.inner().state()
    }
    fn direction(&self, wing: Wing) -> MeasurementDirection {
        self.inner().direction(wing)
    }
    fn respond(&self, lambda: &OnticPoint) -> ResponseSample {
        self.inner().respond(lambda)
    }
    fn plus_set(&self, wing: Wing, z: f64) -> AzimuthSet {
        self.inner().plus_set(wing, z)
    }
    fn wing_breakpoints(&self, wing: Wing) -> Vec<f64> {
        self.inner().wing_breakpoints(wing)
    }
}

/// Serialized form of a calibrated model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub library_version: String,
    pub model: OnticModel,
}

impl ModelRecord {
    pub fn new(model: OnticModel) -> Self {
        Self {
            library_version: crate::VERSION.to_string(),
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model records always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub samples: u64,
    pub expectation_a: f64,
    pub expectation_b: f64,
    pub correlation: f64,
    pub z_expectation_a: f64,
    pub z_expectation_b: f64,
    pub z_correlation: f64,
}

impl MonteCarloEstimate {
    pub fn max_abs_z(&self) -> f64 {
        self.z_expectation_a
            .abs()
            .max(self.z_expectation_b.abs())
            .max(self.z_correlation.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub expectation_a: f64,
    pub expectation_b: f64,
    pub correlation: f64,
    pub plus_plus: f64,
}

impl Residuals {
    pub fn max_abs(&self) -> f64 {
        self.expectation_a
            .abs()
            .max(self.expectation_b.abs())
            .max(self.correlation.abs())
            .max(self.plus_plus.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub quantum: JointStats,
    pub quadrature: ModelStats,
    pub residuals: Residuals,
    pub monte_carlo: MonteCarloEstimate,
    /// Set when a quadrature residual exceeds 1e−6 or a Monte Carlo |z| exceeds 5.
    pub failed: bool,
}

/// Standard score of a ±1 sample mean against its predicted value.
fn z_score(estimate: f64, expected: f64, n: u64) -> f64 {
    let sigma = ((1.0 - expected * expected).max(0.0) / n as f64).sqrt();
    let diff = estimate - expected;
    if sigma > 0.0 {
        diff / sigma
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn sample_chunk<M: ResponseModel + ?Sized>(model: &M, seed: u64, chunk: u64, count: usize) -> [i64; 3] {
    let mut rng = rng::stream(seed, chunk);
    let mut sums = [0i64; 3];
    for _ in 0..count {
        let r = model.respond(&OnticPoint::sample(&mut rng));
        let (x, y) = (r.a_value.sign() as i64, r.b_value.sign() as i64);
        sums[0] += x;
        sums[1] += y;
        sums[2] += x * y;
    }
    sums
}

/// Monte Carlo estimate of `⟨A⟩`, `⟨B⟩`, `⟨AB⟩` from uniform samples.
///
/// Samples are split into fixed-size chunks, chunk `i` drawing from stream
/// `(seed, i)`, so the estimate does not depend on the thread count.
pub fn monte_carlo<M: ResponseModel + Sync + ?Sized>(
    model: &M,
    samples: u64,
    seed: u64,
    quantum: &JointStats,
) -> MonteCarloEstimate {
    let chunks = (samples as usize).div_ceil(MC_CHUNK);
    let size_of = |i: usize| MC_CHUNK.min(samples as usize - i * MC_CHUNK);
    #[cfg(feature = "parallel")]
    let partial: Vec<[i64; 3]> = {
        use rayon::prelude::*;
        (0..chunks)
            .into_par_iter()
            .map(|i| sample_chunk(model, seed, i as u64, size_of(i)))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partial: Vec<[i64; 3]> = (0..chunks)
        .map(|i| sample_chunk(model, seed, i as u64, size_of(i)))
        .collect();
    let mut sums = [0i64; 3];
    for p in partial {
        for k in 0..3 {
            sums[k] += p[k];
        }
    }
    let n = samples.max(1);
    let mean = |s: i64| s as f64 / n as f64;
    let (ea, eb, eab) = (mean(sums[0]), mean(sums[1]), mean(sums[2]));
    MonteCarloEstimate {
        samples,
        expectation_a: ea,
        expectation_b: eb,
        correlation: eab,
        z_expectation_a: z_score(ea, quantum.expectation_a, n),
        z_expectation_b: z_score(eb, quantum.expectation_b, n),
        z_correlation: z_score(eab, quantum.correlation, n),
    }
}

/// Compare a model against quantum mechanics by quadrature and by Monte Carlo.
pub fn verify_model<M: ResponseModel + Sync + ?Sized>(model: &M, n_samples: u64, seed: u64) -> Result<VerificationReport> {
    if n_samples < 10_000 {
        return Err(Error::InvalidInput(format!("verification needs at least 10^4 samples, got {n_samples}")));
    }
    let quantum = qm::joint_stats(&model.state(), &model.direction(Wing::A), &model.direction(Wing::B))?;
    let quadrature = model_stats(model);
    let residuals = Residuals {
        expectation_a: quadrature.expectation_a - quantum.expectation_a,
        expectation_b: quadrature.expectation_b - quantum.expectation_b,
        correlation: quadrature.correlation - quantum.correlation,
        plus_plus: quadrature.plus_plus - quantum.joint.plus_plus,
    };
    let monte_carlo = monte_carlo(model, n_samples, seed, &quantum);
    let failed = residuals.max_abs() > QUADRATURE_RESIDUAL_LIMIT || monte_carlo.max_abs_z() > Z_SCORE_LIMIT;
    Ok(VerificationReport {
        seed,
        quantum,
        quadrature,
        residuals,
        monte_carlo,
        failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn dir(alpha: f64) -> MeasurementDirection {
        MeasurementDirection::new(alpha)
    }

    #[test]
    fn cap_overlap_examples() {
        assert!((cap_overlap_probability(FRAC_PI_2, FRAC_PI_2, 0.0) - 0.5).abs() < 1e-12);
        assert!(cap_overlap_probability(FRAC_PI_2, FRAC_PI_2, PI).abs() < 1e-12);
        assert!((cap_overlap_probability(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn cap_overlap_is_non_increasing_in_separation() {
        for &(xi, chi) in &[(0.4, 1.1), (FRAC_PI_2, 2.5), (2.0, 2.8), (1.2, 1.2)] {
            let mut prev = f64::INFINITY;
            for k in 0..=40 {
                let p = cap_overlap_probability(xi, chi, PI * k as f64 / 40.0);
                assert!(p <= prev + 1e-12, "xi={xi} chi={chi} k={k}");
                prev = p;
            }
        }
    }

    #[test]
    fn cap_overlap_endpoints_are_frechet_bounds() {
        for &(xi, chi) in &[(0.4, 1.1), (FRAC_PI_2, 2.5), (2.0, 2.8)] {
            let (pa, pb) = ((1.0 - f64::cos(xi)) / 2.0, (1.0 - f64::cos(chi)) / 2.0);
            assert!((cap_overlap_probability(xi, chi, 0.0) - pa.min(pb)).abs() < 1e-12);
            assert!((cap_overlap_probability(xi, chi, PI) - (pa + pb - 1.0).max(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn respond_cap_examples() {
        let s = EntangledState::new(FRAC_PI_3).unwrap();
        let m = calibrate_cap(&s, &dir(0.0), &dir(1.0), 1e-9).unwrap();
        let center = OnticPoint::equatorial(m.a_tilde_azimuth);
        assert_eq!(m.respond(&center).a_value, Outcome::Plus);
        let opposite = OnticPoint::equatorial(m.a_tilde_azimuth + PI);
        assert_eq!(m.respond(&opposite).a_value, Outcome::Minus);
    }

    #[test]
    fn calibrate_cap_examples() {
        let z = MeasurementDirection::z();
        let m = calibrate_cap(&EntangledState::product(), &z, &z, 1e-9).unwrap();
        assert!((m.xi - PI).abs() < 1e-12);
        let m = calibrate_cap(&EntangledState::maximally_entangled(), &z, &z, 1e-9).unwrap();
        assert!((m.xi - FRAC_PI_2).abs() < 1e-12 && (m.chi - FRAC_PI_2).abs() < 1e-12);
        assert!(m.separation() < 1e-9);
        let s = EntangledState::new(FRAC_PI_3).unwrap();
        let m = calibrate_cap(&s, &z, &z, 1e-6).unwrap();
        let stats = model_stats(&m);
        assert!((stats.plus_plus - 0.75).abs() < 1e-6);
        assert!((stats.correlation - 1.0).abs() < 1e-6);
    }

    #[test]
    fn calibrate_belt_examples() {
        let z = MeasurementDirection::z();
        // ⟨A⟩ = −1: θ = 0 measured along −z
        let m = calibrate_belt(&EntangledState::product(), &dir(PI), &z, 1e-9).unwrap();
        assert_eq!(m.eta_a, 0.0);
        for i in 0..20 {
            let p = OnticPoint::new(i as f64 * 0.31, i as f64 * 0.157);
            assert_eq!(m.respond(&p).a_value, Outcome::Minus);
        }
        let m = calibrate_belt(&EntangledState::maximally_entangled(), &z, &z, 1e-9).unwrap();
        assert!((m.eta_a - FRAC_PI_2).abs() < 1e-12);
        assert_eq!(m.sign_a, Outcome::Plus);
        let s = EntangledState::new(FRAC_PI_3).unwrap();
        let m = calibrate_belt(&s, &z, &z, 1e-9).unwrap();
        assert!((m.eta_a - PI / 6.0).abs() < 1e-12);
        assert_eq!(m.sign_a, Outcome::Minus);
    }

    #[test]
    fn respond_belt_examples() {
        let s = EntangledState::new(FRAC_PI_3).unwrap();
        // a = π/2 + 0.3 gives ⟨A⟩ < 0 so the belt carries +1
        let m = calibrate_belt(&s, &dir(FRAC_PI_2 + 0.3), &dir(0.2), 1e-9).unwrap();
        assert_eq!(m.sign_a, Outcome::Plus);
        assert_eq!(m.respond(&OnticPoint::equatorial(m.a_belt_azimuth)).a_value, Outcome::Plus);
        assert_eq!(m.respond(&OnticPoint::new(0.0, 0.0)).a_value, Outcome::Minus);

        let z = MeasurementDirection::z();
        let m = calibrate_belt(&s, &z, &z, 1e-9).unwrap();
        let report = verify_model(&m, 200_000, 3).unwrap();
        let p_plus = 0.5 * (1.0 + report.monte_carlo.expectation_a);
        let sigma = (0.75f64 * 0.25 / 200_000.0).sqrt();
        assert!((p_plus - 0.75).abs() < 3.0 * sigma);
    }

    #[test]
    fn hemisphere_marginal_by_monte_carlo() {
        let me = EntangledState::maximally_entangled();
        let m = calibrate_cap(&me, &dir(0.0), &dir(0.0), 1e-9).unwrap();
        let report = verify_model(&m, 200_000, 9).unwrap();
        assert!(report.monte_carlo.z_expectation_a.abs() < 3.0);
    }

    #[test]
    fn verify_model_examples() {
        let me = EntangledState::maximally_entangled();
        let m = calibrate_cap(&me, &dir(0.0), &dir(FRAC_PI_3), 1e-9).unwrap();
        let r = verify_model(&m, 100_000, 1).unwrap();
        assert!((r.quadrature.correlation - 0.5).abs() < 1e-6);
        assert!(!r.failed);

        let z = MeasurementDirection::z();
        for kind in [ModelKind::Cap, ModelKind::Belt] {
            let m = OnticModel::calibrate(kind, &EntangledState::product(), &z, &dir(0.4), 1e-9).unwrap();
            let r = verify_model(&m, 20_000, 1).unwrap();
            assert!(r.residuals.expectation_a.abs() < 1e-12);
            assert!(r.residuals.expectation_b.abs() < 1e-12);
            assert_eq!(r.monte_carlo.z_expectation_a, 0.0);
        }

        let s = EntangledState::new(FRAC_PI_3).unwrap();
        let m = calibrate_belt(&s, &z, &z, 1e-9).unwrap();
        let r = verify_model(&m, 20_000, 1).unwrap();
        assert!((r.quadrature.plus_plus - 0.75).abs() < 1e-6);
    }

    #[test]
    fn verify_rejects_small_sample_counts() {
        let z = MeasurementDirection::z();
        let m = calibrate_cap(&EntangledState::product(), &z, &z, 1e-9).unwrap();
        assert!(matches!(verify_model(&m, 100, 0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn calibration_rejects_bad_tolerance() {
        let z = MeasurementDirection::z();
        assert!(calibrate_cap(&EntangledState::product(), &z, &z, 0.0).is_err());
        assert!(calibrate_belt(&EntangledState::product(), &z, &z, -1.0).is_err());
    }

    #[test]
    fn unreachable_target_is_reported() {
        let p = |d: f64| 0.25 - 0.1 * d / PI;
        assert!(matches!(solve_separation(p, 0.3, 1e-9), Err(Error::UnreachableCorrelation { .. })));
        assert!(matches!(solve_separation(p, 0.1, 1e-9), Err(Error::UnreachableCorrelation { .. })));
        let d = solve_separation(p, 0.2, 1e-9).unwrap();
        assert!((d - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn respond_agrees_with_plus_sets() {
        let s = EntangledState::new(0.9).unwrap();
        let mut rng = rng::stream(5, 0);
        for kind in [ModelKind::Cap, ModelKind::Belt] {
            let m = OnticModel::calibrate(kind, &s, &dir(0.7), &dir(2.2), 1e-9).unwrap();
            for _ in 0..20_000 {
                let p = OnticPoint::sample(&mut rng);
                let r = m.respond(&p);
                let z = p.tau.cos();
                for wing in [Wing::A, Wing::B] {
                    let set = m.plus_set(wing, z);
                    assert_eq!(set.contains(p.mu), r.get(wing) == Outcome::Plus, "{kind:?} {wing:?} {p:?}");
                }
            }
        }
    }

    #[test]
    fn record_round_trip() {
        let s = EntangledState::new(0.9).unwrap();
        let m = OnticModel::calibrate(ModelKind::Belt, &s, &dir(0.7), &dir(2.2), 1e-9).unwrap();
        let rec = ModelRecord::new(m);
        let back = ModelRecord::from_json(&rec.to_json()).unwrap();
        assert_eq!(back, rec);
        assert!(rec.to_json().contains("\"kind\": \"belt\""));
        assert!(ModelRecord::from_json("{}").is_err());
    }

    #[test]
    fn recalibration_is_idempotent() {
        let s = EntangledState::new(1.1).unwrap();
        for kind in [ModelKind::Cap, ModelKind::Belt] {
            let m = OnticModel::calibrate(kind, &s, &dir(0.3), &dir(4.0), 1e-9).unwrap();
            assert_eq!(m.recalibrate().unwrap(), m);
        }
    }
}
