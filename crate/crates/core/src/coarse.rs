//! Integration over the inaccessible azimuth `μ`.
//!
//! At fixed polar angle `τ` every shipped model answers +1 on a single arc of
//! azimuths, so the `μ` average is an exact arc length. What remains are
//! functions of `τ` weighted by `ρ(τ) = sin τ / 2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontic::{ModelKind, OnticModel, ResponseModel, Wing};
use crate::qm::{self, EntangledState, MeasurementDirection, Outcome};
use crate::quad::TauGrid;
use crate::sphere::AzimuthSet;

pub const MIN_GRID_SIZE: usize = 64;
pub const DEFAULT_GRID_SIZE: usize = 256;

/// Discrepancy above which [`check_nonsignaling`] reports signaling.
pub const SIGNALING_LIMIT: f64 = 1e-8;

/// Effective prediction `f(τ)` on a quadrature grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseProfile {
    pub wing: Wing,
    pub tau_grid: Vec<f64>,
    pub f_values: Vec<f64>,
    /// Quadrature weight of each node with `ρ(τ) = sin τ / 2` folded in, so
    /// that `Σ weight · h(τ) ≈ ∫ h ρ dτ`.
    pub weight: Vec<f64>,
}

/// One CSV row of a profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub tau: f64,
    pub f: f64,
    pub weight: f64,
}

impl CoarseProfile {
    pub fn len(&self) -> usize {
        self.tau_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau_grid.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = ProfileRow> + '_ {
        self.tau_grid
            .iter()
            .zip(&self.f_values)
            .zip(&self.weight)
            .map(|((&tau, &f), &weight)| ProfileRow { tau, f, weight })
    }

    /// `∫ f ρ dτ`.
    pub fn mean(&self) -> f64 {
        self.integrate(|_, f| f)
    }

    pub fn integrate<H: Fn(f64, f64) -> f64>(&self, h: H) -> f64 {
        self.tau_grid
            .iter()
            .zip(&self.f_values)
            .zip(&self.weight)
            .map(|((&t, &f), &w)| w * h(t, f))
            .sum()
    }
}

/// `f(τ)` from the +1 arc length at height `cos τ`.
pub fn profile_value<M: ResponseModel + ?Sized>(model: &M, wing: Wing, tau: f64) -> f64 {
    arc_value(&model.plus_set(wing, tau.cos()))
}

fn arc_value(set: &AzimuthSet) -> f64 {
    (set.measure() / PI - 1.0).clamp(-1.0, 1.0)
}

/// Closed form of the cap profile with half-angle `xi`.
pub fn cap_profile(xi: f64, tau: f64) -> f64 {
    let sin_tau = tau.sin();
    let c = xi.cos();
    let ratio = if sin_tau > 1e-12 {
        (c / sin_tau).clamp(-1.0, 1.0)
    } else if c > 0.0 {
        1.0
    } else if c < 0.0 {
        -1.0
    } else {
        0.0
    };
    2.0 * ratio.acos() / PI - 1.0
}

fn tau_splits<M: ResponseModel + ?Sized>(model: &M, wing: Wing) -> Vec<f64> {
    model
        .wing_breakpoints(wing)
        .into_iter()
        .filter(|z| z.abs() < 1.0)
        .map(f64::acos)
        .collect()
}

pub fn coarse_grain<M: ResponseModel + ?Sized>(model: &M, wing: Wing, grid_size: usize) -> Result<CoarseProfile> {
    if grid_size < MIN_GRID_SIZE {
        return Err(Error::InvalidInput(format!(
            "grid size must be at least {MIN_GRID_SIZE}, got {grid_size}"
        )));
    }
    let grid = TauGrid::new(&tau_splits(model, wing), grid_size);
    let f_values = grid.nodes.iter().map(|&t| profile_value(model, wing, t)).collect();
    Ok(CoarseProfile {
        wing,
        tau_grid: grid.nodes,
        f_values,
        weight: grid.weights,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub expectation: f64,
    pub delta: f64,
    /// `∫ |f| ρ dτ − ⟨A⟩²`.
    pub bound1: f64,
    /// `|⟨A⟩| − ⟨A⟩²`.
    pub bound3: f64,
    pub qm_bound: Option<f64>,
}

impl VarianceReport {
    pub fn with_qm_bound(mut self, qm_bound: f64) -> Self {
        self.qm_bound = Some(qm_bound);
        self
    }
}

pub fn variance_delta(profile: &CoarseProfile, expectation: f64) -> VarianceReport {
    let e2 = expectation * expectation;
    VarianceReport {
        expectation,
        delta: profile.integrate(|_, f| (f - expectation).powi(2)).max(0.0),
        bound1: profile.integrate(|_, f| f.abs()) - e2,
        bound3: expectation.abs() - e2,
        qm_bound: None,
    }
}

/// `E(τ) = (1/2π) ∫ A·B dμ` at fixed `τ`.
pub fn conditional_correlation<M: ResponseModel + ?Sized>(model: &M, tau: f64) -> f64 {
    let z = tau.cos();
    let sa = model.plus_set(Wing::A, z);
    let sb = model.plus_set(Wing::B, z);
    let disagree = sa.measure() + sb.measure() - 2.0 * sa.overlap(&sb);
    (1.0 - disagree / PI).clamp(-1.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonSignalingReport {
    pub max_discrepancy: f64,
    pub signaling: bool,
}

/// Calibrate the model for `(a, b1)` and `(a, b2)` and compare wing A's
/// profiles on the nodes of both grids.
pub fn check_nonsignaling(
    kind: ModelKind,
    state: &EntangledState,
    a: &MeasurementDirection,
    b1: &MeasurementDirection,
    b2: &MeasurementDirection,
    grid_size: usize,
    tol: f64,
) -> Result<NonSignalingReport> {
    let m1 = OnticModel::calibrate(kind, state, a, b1, tol)?;
    let m2 = OnticModel::calibrate(kind, state, a, b2, tol)?;
    let p1 = coarse_grain(&m1, Wing::A, grid_size)?;
    let p2 = coarse_grain(&m2, Wing::A, grid_size)?;
    let max_discrepancy = p1
        .tau_grid
        .iter()
        .zip(&p1.f_values)
        .map(|(&t, &f)| (f - profile_value(&m2, Wing::A, t)).abs())
        .chain(
            p2.tau_grid
                .iter()
                .zip(&p2.f_values)
                .map(|(&t, &f)| (f - profile_value(&m1, Wing::A, t)).abs()),
        )
        .fold(0.0, f64::max);
    Ok(NonSignalingReport {
        max_discrepancy,
        signaling: max_discrepancy > SIGNALING_LIMIT,
    })
}

/// Hypothetical belt-type model whose +1 region on each wing is an equatorial
/// arc of the given extent times a band `|z| < sin η`, with `η` fixed by the
/// quantum marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub arc_extent_a: f64,
    pub arc_extent_b: f64,
    /// Wing whose +1 outcome is conditioned on.
    pub conditioning: Wing,
    pub b_angles: Vec<f64>,
    pub model_min: f64,
    pub model_max: f64,
    pub quantum_min: f64,
    pub quantum_max: f64,
    /// Every arrangement keeps the conditional above zero where quantum mechanics reaches zero.
    pub case1_excluded: bool,
    /// Every arrangement keeps the conditional below one where quantum mechanics reaches one.
    pub case2_excluded: bool,
}

impl ObstructionReport {
    pub fn excluded(&self) -> bool {
        self.case1_excluded || self.case2_excluded
    }
}

const OBSTRUCTION_EPS: f64 = 1e-9;

fn band_height(expectation: f64, extent: f64) -> f64 {
    ((1.0 + expectation) * PI / extent).clamp(0.0, 1.0)
}

/// `P(X = +1 on the other wing | X = +1 on the conditioning wing)` for arcs
/// whose centres are `offset` apart.
fn arc_conditional(extent_c: f64, height_c: f64, extent_o: f64, height_o: f64, offset: f64) -> f64 {
    let sc = AzimuthSet::arc(0.0, 0.5 * extent_c);
    let so = AzimuthSet::arc(offset, 0.5 * extent_o);
    let denom = extent_c * height_c;
    if denom <= 0.0 {
        return 0.0;
    }
    (sc.overlap(&so) * height_c.min(height_o) / denom).clamp(0.0, 1.0)
}

pub fn obstruction_check(
    arc_extent_a: f64,
    arc_extent_b: f64,
    state: &EntangledState,
    a: &MeasurementDirection,
    b_grid: &[MeasurementDirection],
) -> Result<ObstructionReport> {
    for e in [arc_extent_a, arc_extent_b] {
        if !(e > 0.0 && e <= 2.0 * PI) {
            return Err(Error::InvalidInput(format!("arc extent must lie in (0, 2π], got {e}")));
        }
    }
    if b_grid.is_empty() {
        return Err(Error::InvalidInput("empty b grid".into()));
    }
    let conditioning = if arc_extent_b > arc_extent_a { Wing::B } else { Wing::A };
    let (mut model_min, mut model_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut quantum_min, mut quantum_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for b in b_grid {
        let stats = qm::joint_stats(state, a, b)?;
        let ha = band_height(stats.expectation_a, arc_extent_a);
        let hb = band_height(stats.expectation_b, arc_extent_b);
        let (ec, hc, eo, ho) = match conditioning {
            Wing::A => (arc_extent_a, ha, arc_extent_b, hb),
            Wing::B => (arc_extent_b, hb, arc_extent_a, ha),
        };
        // the overlap of two centred arcs is non-increasing in the offset
        model_max = model_max.max(arc_conditional(ec, hc, eo, ho, 0.0));
        model_min = model_min.min(arc_conditional(ec, hc, eo, ho, PI));
        let q = match conditioning {
            Wing::A => stats.conditional(Outcome::Plus, Outcome::Plus)?,
            Wing::B => {
                let pb = stats.joint.marginal_b(Outcome::Plus);
                if pb <= 0.0 {
                    return Err(Error::UndefinedConditional { given: 1 });
                }
                stats.joint.plus_plus / pb
            }
        };
        quantum_min = quantum_min.min(q);
        quantum_max = quantum_max.max(q);
    }
    Ok(ObstructionReport {
        arc_extent_a,
        arc_extent_b,
        conditioning,
        b_angles: b_grid.iter().map(|b| b.angle()).collect(),
        model_min,
        model_max,
        quantum_min,
        quantum_max,
        case1_excluded: model_min > OBSTRUCTION_EPS && quantum_min <= OBSTRUCTION_EPS,
        case2_excluded: model_max < 1.0 - OBSTRUCTION_EPS && quantum_max >= 1.0 - OBSTRUCTION_EPS,
    })
}

/// `count` directions equally spaced over the full circle, starting at 0.
pub fn direction_grid(count: usize) -> Vec<MeasurementDirection> {
    (0..count)
        .map(|k| MeasurementDirection::new(2.0 * PI * k as f64 / count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontic::{calibrate_belt, calibrate_cap};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

    const TOL: f64 = 1e-12;

    fn state(theta: f64) -> EntangledState {
        EntangledState::new(theta).unwrap()
    }

    fn dir(alpha: f64) -> MeasurementDirection {
        MeasurementDirection::new(alpha)
    }

    #[test]
    fn belt_profile_vanishes_inside_band_and_saturates_outside() {
        let m = calibrate_belt(&state(FRAC_PI_3), &dir(0.0), &dir(1.0), TOL).unwrap();
        let p = coarse_grain(&m, Wing::A, 256).unwrap();
        for (t, f) in p.tau_grid.iter().zip(&p.f_values) {
            if (t - FRAC_PI_2).abs() < m.eta_a {
                assert_eq!(*f, 0.0);
            } else {
                // ⟨A⟩ = 1/2 > 0, so the value outside the belt is +1
                assert_eq!(*f, 1.0);
            }
        }
    }

    #[test]
    fn cap_profile_saturates_outside_band() {
        // a at π/2 with θ = π/3: ⟨A⟩ = 0, so use a = 2π/3 where ⟨A⟩ < 0
        let m = calibrate_cap(&state(FRAC_PI_3), &dir(2.0 * FRAC_PI_3), &dir(0.0), TOL).unwrap();
        assert!(m.xi < FRAC_PI_2);
        let p = coarse_grain(&m, Wing::A, 256).unwrap();
        let mut outside = 0;
        for (t, f) in p.tau_grid.iter().zip(&p.f_values) {
            if (t - FRAC_PI_2).abs() > m.xi {
                assert_eq!(*f, -1.0);
                outside += 1;
            }
        }
        assert!(outside > 0);
    }

    #[test]
    fn hemisphere_profile_is_zero_on_equator() {
        assert!(cap_profile(FRAC_PI_2, FRAC_PI_2).abs() < 1e-15);
        let m = calibrate_cap(&state(FRAC_PI_2), &dir(0.3), &dir(1.2), TOL).unwrap();
        assert!(profile_value(&m, Wing::A, FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn cap_closed_form_matches_arc_length() {
        for &(theta, alpha) in &[(FRAC_PI_3, 0.0), (FRAC_PI_6, 2.5), (0.4, 1.1), (FRAC_PI_2, 0.2)] {
            let m = calibrate_cap(&state(theta), &dir(alpha), &dir(0.7), TOL).unwrap();
            for k in 0..=400 {
                let t = PI * k as f64 / 400.0;
                let d = (cap_profile(m.xi, t) - profile_value(&m, Wing::A, t)).abs();
                assert!(d < 1e-8, "θ={theta} α={alpha} τ={t}: {d}");
            }
        }
    }

    #[test]
    fn profiles_integrate_to_quantum_expectation() {
        for &theta in &[0.0, 0.3, FRAC_PI_3, 1.3, FRAC_PI_2] {
            for &alpha in &[0.0, 0.8, FRAC_PI_2, 2.4, PI, 4.0] {
                let s = state(theta);
                let a = dir(alpha);
                for kind in [ModelKind::Cap, ModelKind::Belt] {
                    let m = OnticModel::calibrate(kind, &s, &a, &dir(1.0), TOL).unwrap();
                    let p = coarse_grain(&m, Wing::A, 256).unwrap();
                    let e = qm::expectation_a(&s, &a);
                    assert!((p.mean() - e).abs() < 1e-8, "{kind:?} θ={theta} α={alpha}: {} vs {e}", p.mean());
                    assert!(p.f_values.iter().all(|f| (-1.0..=1.0).contains(f)));
                    let g = coarse_grain(&m, Wing::B, 256).unwrap();
                    assert!((g.mean() - qm::expectation_b(&s, &dir(1.0))).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn weights_sum_to_one() {
        let m = calibrate_cap(&state(0.9), &dir(0.4), &dir(2.0), TOL).unwrap();
        let p = coarse_grain(&m, Wing::A, 128).unwrap();
        assert!((p.weight.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn variance_examples() {
        let s = state(FRAC_PI_3);
        let a = MeasurementDirection::z();
        let m = calibrate_belt(&s, &a, &dir(0.5), TOL).unwrap();
        let e = qm::expectation_a(&s, &a);
        let r = variance_delta(&coarse_grain(&m, Wing::A, 256).unwrap(), e);
        assert!((r.delta - 0.25).abs() < 1e-8);
        assert!((r.bound1 - r.bound3).abs() < 1e-8);

        let c = calibrate_cap(&s, &a, &dir(0.5), TOL).unwrap();
        let rc = variance_delta(&coarse_grain(&c, Wing::A, 256).unwrap(), e);
        assert!(rc.delta < rc.bound1 - 1e-6 && rc.delta >= 0.0);

        let me = EntangledState::maximally_entangled();
        for kind in [ModelKind::Cap, ModelKind::Belt] {
            for &alpha in &[0.0, 1.0, 2.0, 3.0] {
                let m = OnticModel::calibrate(kind, &me, &dir(alpha), &dir(0.4), TOL).unwrap();
                let r = variance_delta(&coarse_grain(&m, Wing::A, 256).unwrap(), 0.0);
                assert!(r.delta < 1e-8, "{kind:?} {alpha}: {}", r.delta);
            }
        }
    }

    #[test]
    fn conditional_correlation_examples() {
        let product = EntangledState::product();
        let m = calibrate_cap(&product, &dir(0.0), &dir(0.0), TOL).unwrap();
        for k in 0..=10 {
            assert_eq!(conditional_correlation(&m, PI * k as f64 / 10.0), 1.0);
        }
        let me = EntangledState::maximally_entangled();
        let anti = calibrate_cap(&me, &dir(0.0), &dir(PI), TOL).unwrap();
        assert!((conditional_correlation(&anti, FRAC_PI_2) + 1.0).abs() < 1e-8);

        let s = state(FRAC_PI_3);
        let b = calibrate_belt(&s, &dir(0.0), &dir(0.0), TOL).unwrap();
        assert_eq!(b.eta_a, b.eta_b);
        assert!((conditional_correlation(&b, FRAC_PI_2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pointwise_inequality_holds() {
        for &theta in &[0.2, FRAC_PI_3, FRAC_PI_2] {
            for kind in [ModelKind::Cap, ModelKind::Belt] {
                let m = OnticModel::calibrate(kind, &state(theta), &dir(0.3), &dir(2.2), TOL).unwrap();
                let f = coarse_grain(&m, Wing::A, 128).unwrap();
                for &t in &f.tau_grid {
                    let lhs = (profile_value(&m, Wing::A, t) - profile_value(&m, Wing::B, t)).abs();
                    assert!(lhs <= 1.0 - conditional_correlation(&m, t) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn no_signaling_examples() {
        let s = state(FRAC_PI_3);
        for kind in [ModelKind::Cap, ModelKind::Belt] {
            let r = check_nonsignaling(kind, &s, &MeasurementDirection::z(), &dir(0.0), &dir(FRAC_PI_3), 256, TOL).unwrap();
            assert!(!r.signaling && r.max_discrepancy <= 1e-8);
        }
        let r = check_nonsignaling(ModelKind::Cap, &EntangledState::product(), &dir(0.5), &dir(0.0), &dir(2.0), 64, TOL)
            .unwrap();
        assert_eq!(r.max_discrepancy, 0.0);
    }

    #[test]
    fn brute_force_azimuth_average_matches_profile() {
        let m = calibrate_cap(&state(0.7), &dir(0.9), &dir(2.6), TOL).unwrap();
        let samples = 100_000;
        for &t in &[0.3, 1.0, FRAC_PI_2, 2.2] {
            let sum: f64 = (0..samples)
                .map(|k| {
                    let mu = (k as f64 + 0.5) * 2.0 * PI / samples as f64;
                    m.respond(&crate::sphere::OnticPoint::new(mu, t)).a_value.value()
                })
                .sum();
            assert!((sum / samples as f64 - profile_value(&m, Wing::A, t)).abs() < 1e-4);
        }
    }

    #[test]
    fn obstruction_cases() {
        let s = state(FRAC_PI_3);
        let a = MeasurementDirection::z();
        let grid = direction_grid(72);
        let r1 = obstruction_check(1.5 * PI, 1.5 * PI, &s, &a, &grid).unwrap();
        assert!(r1.case1_excluded && r1.model_min > 0.05 && r1.quantum_min < 1e-9);

        let r2 = obstruction_check(1.5 * PI, PI, &s, &a, &grid).unwrap();
        assert!(r2.case2_excluded && r2.model_max < 1.0 && (r2.quantum_max - 1.0).abs() < 1e-9);

        let r0 = obstruction_check(PI, PI, &s, &a, &grid).unwrap();
        assert!(!r0.excluded());
    }

    #[test]
    fn rejects_small_grid() {
        let m = calibrate_cap(&state(0.7), &dir(0.9), &dir(2.6), TOL).unwrap();
        assert!(coarse_grain(&m, Wing::A, 10).is_err());
    }
}
