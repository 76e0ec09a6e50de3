//! Quantum-mechanical predictions for the state family
//! `|ψ⟩ = sin(θ/2)|00⟩ + cos(θ/2)|11⟩` measured along directions in the Bloch
//! x–z plane.
//!
//! Conventions: `σ_z|1⟩ = +|1⟩`, `σ_z|0⟩ = −|0⟩`; a direction with angle `α`
//! from the z axis is the Bloch vector `(sin α, 0, cos α)`. The propagation
//! axis, which is the pole of the ontic sphere, is the Bloch y axis.
//!
//! The closed forms are
//!
//! ```text
//! ⟨A(a)⟩    = cos α · cos θ
//! ⟨A(a)B(b)⟩ = cos α cos β + sin θ sin α sin β
//! ```
//!
//! and [`density_matrix_oracle`] recomputes everything from 4×4 matrices.

use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when validating a user-supplied θ against `[0, π/2]`.
const THETA_SLACK: f64 = 1e-12;

/// Joint entries more negative than this indicate a broken closed form.
const NEGATIVE_JOINT_LIMIT: f64 = -1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntangledState {
    theta: f64,
}

impl EntangledState {
    /// `theta` must lie in `[0, π/2]`.
    pub fn new(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta < -THETA_SLACK || theta > FRAC_PI_2 + THETA_SLACK {
            return Err(Error::InvalidInput(format!(
                "theta = {theta} outside [0, π/2]"
            )));
        }
        Ok(Self {
            theta: theta.clamp(0.0, FRAC_PI_2),
        })
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn maximally_entangled() -> Self {
        Self { theta: FRAC_PI_2 }
    }

    /// The product state `|11⟩`.
    pub fn product() -> Self {
        Self { theta: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Amplitudes of `|00⟩` and `|11⟩`.
    /// `cos θ`, exactly zero for the maximally entangled state.
    pub fn cos_theta(&self) -> f64 {
        (FRAC_PI_2 - self.theta).sin()
    }

    pub fn amplitudes(&self) -> (f64, f64) {
        let half = 0.5 * self.theta;
        (half.sin(), half.cos())
    }
}

/// In-plane spin measurement axis, stored as its angle from the z axis in
/// `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDirection {
    alpha: f64,
}

impl MeasurementDirection {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha: wrap_angle(alpha),
        }
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::new(deg.to_radians())
    }

    /// The σ_z axis.
    pub fn z() -> Self {
        Self { alpha: 0.0 }
    }

    pub fn angle(&self) -> f64 {
        self.alpha
    }

    pub fn antipode(&self) -> Self {
        Self::new(self.alpha + std::f64::consts::PI)
    }

    /// Bloch vector `(x, y, z)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        [self.alpha.sin(), 0.0, self.alpha.cos()]
    }
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Measurement outcome of a ±1 observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

/// Joint outcome probabilities keyed by `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointProbabilities {
    pub plus_plus: f64,
    pub plus_minus: f64,
    pub minus_plus: f64,
    pub minus_minus: f64,
}

impl JointProbabilities {
    pub fn get(&self, x: Outcome, y: Outcome) -> f64 {
        match (x, y) {
            (Outcome::Plus, Outcome::Plus) => self.plus_plus,
            (Outcome::Plus, Outcome::Minus) => self.plus_minus,
            (Outcome::Minus, Outcome::Plus) => self.minus_plus,
            (Outcome::Minus, Outcome::Minus) => self.minus_minus,
        }
    }

    fn get_mut(&mut self, x: Outcome, y: Outcome) -> &mut f64 {
        match (x, y) {
            (Outcome::Plus, Outcome::Plus) => &mut self.plus_plus,
            (Outcome::Plus, Outcome::Minus) => &mut self.plus_minus,
            (Outcome::Minus, Outcome::Plus) => &mut self.minus_plus,
            (Outcome::Minus, Outcome::Minus) => &mut self.minus_minus,
        }
    }

    pub fn total(&self) -> f64 {
        self.plus_plus + self.plus_minus + self.minus_plus + self.minus_minus
    }

    pub fn marginal_a(&self, x: Outcome) -> f64 {
        self.get(x, Outcome::Plus) + self.get(x, Outcome::Minus)
    }

    pub fn marginal_b(&self, y: Outcome) -> f64 {
        self.get(Outcome::Plus, y) + self.get(Outcome::Minus, y)
    }

    /// Build the table from first and second moments:
    /// `P(x, y) = (1 + x⟨A⟩ + y⟨B⟩ + xy⟨AB⟩) / 4`.
    pub fn from_moments(ea: f64, eb: f64, eab: f64) -> Self {
        let mut table = Self {
            plus_plus: 0.0,
            plus_minus: 0.0,
            minus_plus: 0.0,
            minus_minus: 0.0,
        };
        for x in Outcome::BOTH {
            for y in Outcome::BOTH {
                let (xv, yv) = (x.value(), y.value());
                *table.get_mut(x, y) = 0.25 * (1.0 + xv * ea + yv * eb + xv * yv * eab);
            }
        }
        table
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointStats {
    pub expectation_a: f64,
    pub expectation_b: f64,
    pub correlation: f64,
    pub joint: JointProbabilities,
}

impl JointStats {
    /// `P(X_b = y | X_a = given_x)`.
    pub fn conditional(&self, given_x: Outcome, y: Outcome) -> Result<f64> {
        let marginal = self.joint.marginal_a(given_x);
        if marginal <= 0.0 {
            return Err(Error::UndefinedConditional {
                given: given_x.sign(),
            });
        }
        Ok((self.joint.get(given_x, y) / marginal).clamp(0.0, 1.0))
    }
}

/// `⟨A(a)⟩_ψ`.
pub fn expectation_a(state: &EntangledState, a: &MeasurementDirection) -> f64 {
    a.angle().cos() * state.cos_theta()
}

/// `⟨B(b)⟩_ψ`; the two reduced states coincide on in-plane axes.
pub fn expectation_b(state: &EntangledState, b: &MeasurementDirection) -> f64 {
    b.angle().cos() * state.cos_theta()
}

/// `⟨A(a)B(b)⟩_ψ`.
pub fn correlation(state: &EntangledState, a: &MeasurementDirection, b: &MeasurementDirection) -> f64 {
    let (al, be) = (a.angle(), b.angle());
    al.cos() * be.cos() + state.theta().sin() * al.sin() * be.sin()
}

/// Assemble the four joint probabilities from the closed-form moments.
pub fn joint_stats(
    state: &EntangledState,
    a: &MeasurementDirection,
    b: &MeasurementDirection,
) -> Result<JointStats> {
    let ea = expectation_a(state, a);
    let eb = expectation_b(state, b);
    let eab = correlation(state, a, b);
    let mut joint = JointProbabilities::from_moments(ea, eb, eab);
    for x in Outcome::BOTH {
        for y in Outcome::BOTH {
            let p = joint.get_mut(x, y);
            if *p < NEGATIVE_JOINT_LIMIT {
                return Err(Error::Consistency {
                    x: x.sign(),
                    y: y.sign(),
                    value: *p,
                });
            }
            *p = p.max(0.0);
        }
    }
    Ok(JointStats {
        expectation_a: ea,
        expectation_b: eb,
        correlation: eab,
        joint,
    })
}

/// `P(X_b = y | X_a = given_x)` from [`joint_stats`].
pub fn conditional_probability(
    state: &EntangledState,
    a: &MeasurementDirection,
    b: &MeasurementDirection,
    given_x: Outcome,
    y: Outcome,
) -> Result<f64> {
    joint_stats(state, a, b)?.conditional(given_x, y)
}

type Mat2 = [[f64; 2]; 2];
type Mat4 = [[f64; 4]; 4];

const IDENTITY2: Mat2 = [[1.0, 0.0], [0.0, 1.0]];
// Single-qubit basis order: index 0 = |1⟩ (σ_z = +1), index 1 = |0⟩.
const SIGMA_Z: Mat2 = [[1.0, 0.0], [0.0, -1.0]];
const SIGMA_X: Mat2 = [[0.0, 1.0], [1.0, 0.0]];

fn spin_observable(dir: &MeasurementDirection) -> Mat2 {
    let [nx, _, nz] = dir.bloch_vector();
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = nx * SIGMA_X[i][j] + nz * SIGMA_Z[i][j];
        }
    }
    m
}

fn projector(obs: &Mat2, outcome: Outcome) -> Mat2 {
    let s = outcome.value();
    let mut p = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            p[i][j] = 0.5 * (IDENTITY2[i][j] + s * obs[i][j]);
        }
    }
    p
}

fn kron(left: &Mat2, right: &Mat2) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = left[i][j] * right[k][l];
                }
            }
        }
    }
    out
}

fn expectation_value(psi: &[f64; 4], op: &Mat4) -> f64 {
    let mut acc = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            acc += psi[i] * op[i][j] * psi[j];
        }
    }
    acc
}

/// Two-qubit state vector in the basis `|q_A q_B⟩`, index `2·i_A + i_B`.
fn state_vector(state: &EntangledState) -> [f64; 4] {
    let (amp00, amp11) = state.amplitudes();
    // |11⟩ is index (0, 0), |00⟩ is index (1, 1)
    [amp11, 0.0, 0.0, amp00]
}

/// Brute-force joint statistics from the state vector and the 4×4 spectral
/// projectors of `a·σ ⊗ I` and `I ⊗ b·σ`.
pub fn density_matrix_oracle(
    state: &EntangledState,
    a: &MeasurementDirection,
    b: &MeasurementDirection,
) -> JointStats {
    let psi = state_vector(state);
    let obs_a = spin_observable(a);
    let obs_b = spin_observable(b);

    let expectation_a = expectation_value(&psi, &kron(&obs_a, &IDENTITY2));
    let expectation_b = expectation_value(&psi, &kron(&IDENTITY2, &obs_b));
    let correlation = expectation_value(&psi, &kron(&obs_a, &obs_b));

    let mut joint = JointProbabilities::from_moments(0.0, 0.0, 0.0);
    for x in Outcome::BOTH {
        for y in Outcome::BOTH {
            let proj = kron(&projector(&obs_a, x), &projector(&obs_b, y));
            *joint.get_mut(x, y) = expectation_value(&psi, &proj);
        }
    }
    JointStats {
        expectation_a,
        expectation_b,
        correlation,
        joint,
    }
}
