//! Geometry of the ontic sphere.
//!
//! The pole is the propagation axis; the equator holds the in-plane
//! measurement directions, a direction with angle `α` sitting at azimuth
//! `μ = α`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A hidden variable `λ` in spherical coordinates: `mu` is the inaccessible
/// azimuth, `tau` the accessible polar angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnticPoint {
    pub mu: f64,
    pub tau: f64,
}

impl OnticPoint {
    pub fn new(mu: f64, tau: f64) -> Self {
        Self {
            mu: crate::qm::wrap_angle(mu),
            tau: tau.clamp(0.0, PI),
        }
    }

    /// Point on the equator at the given azimuth.
    pub fn equatorial(mu: f64) -> Self {
        Self::new(mu, std::f64::consts::FRAC_PI_2)
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.tau.sin_cos();
        let (sm, cm) = self.mu.sin_cos();
        [st * cm, st * sm, ct]
    }

    /// Draw a point from the uniform density `1/4π`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let mu: f64 = rng.gen_range(0.0..TAU);
        Self {
            mu,
            tau: z.acos(),
        }
    }
}

pub fn dot(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// Unit vector on the equator at azimuth `mu`.
pub fn equatorial_vector(mu: f64) -> [f64; 3] {
    let (s, c) = mu.sin_cos();
    [c, s, 0.0]
}

/// Signed azimuth difference reduced to `(-π, π]`.
pub fn azimuth_difference(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Set of azimuths, at fixed `τ`, on which a response takes the value +1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AzimuthSet {
    Empty,
    Full,
    /// Closed arc `[center − half_width, center + half_width]`, `0 < half_width < π`.
    Arc { center: f64, half_width: f64 },
}

impl AzimuthSet {
    pub fn arc(center: f64, half_width: f64) -> Self {
        if half_width <= 0.0 {
            AzimuthSet::Empty
        } else if half_width >= PI {
            AzimuthSet::Full
        } else {
            AzimuthSet::Arc { center, half_width }
        }
    }

    pub fn complement(&self) -> Self {
        match *self {
            AzimuthSet::Empty => AzimuthSet::Full,
            AzimuthSet::Full => AzimuthSet::Empty,
            AzimuthSet::Arc { center, half_width } => AzimuthSet::arc(center + PI, PI - half_width),
        }
    }

    pub fn measure(&self) -> f64 {
        match *self {
            AzimuthSet::Empty => 0.0,
            AzimuthSet::Full => TAU,
            AzimuthSet::Arc { half_width, .. } => 2.0 * half_width,
        }
    }

    pub fn contains(&self, mu: f64) -> bool {
        match *self {
            AzimuthSet::Empty => false,
            AzimuthSet::Full => true,
            AzimuthSet::Arc { center, half_width } => azimuth_difference(center, mu).abs() <= half_width,
        }
    }

    /// Length of the intersection of two azimuth sets.
    pub fn overlap(&self, other: &AzimuthSet) -> f64 {
        match (*self, *other) {
            (AzimuthSet::Empty, _) | (_, AzimuthSet::Empty) => 0.0,
            (AzimuthSet::Full, s) | (s, AzimuthSet::Full) => s.measure(),
            (
                AzimuthSet::Arc { center: c1, half_width: w1 },
                AzimuthSet::Arc { center: c2, half_width: w2 },
            ) => {
                // place arc 1 at [-w1, w1]; arc 2 and its 2π images
                let d = azimuth_difference(c1, c2);
                [-TAU, 0.0, TAU]
                    .iter()
                    .map(|shift| {
                        let lo = (d + shift - w2).max(-w1);
                        let hi = (d + shift + w2).min(w1);
                        (hi - lo).max(0.0)
                    })
                    .sum::<f64>()
                    .min(2.0 * w1.min(w2))
            }
        }
    }
}
