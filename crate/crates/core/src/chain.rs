//! Chained correlations and the quantum upper bound on the variance `δ`.
//!
//! A chain of `2n+1` in-plane directions runs from `γ_0 = a` to
//! `γ_2n = −a`. Wing A measures the even nodes and wing B the odd ones, and
//!
//! ```text
//! Ω(a, n) = n − ½ Σ_{k<n} [⟨A(γ_2k) B(γ_2k+1)⟩ + ⟨A(γ_2k+2) B(γ_2k+1)⟩]
//! ```
//!
//! For any non-signaling model `δ(a) ≤ min Ω(a, n) − ⟨A(a)⟩²`.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qm::{self, EntangledState, MeasurementDirection};
use crate::rng;
use crate::simplex::{nelder_mead, NelderMeadOptions};

/// Random restarts used when the caller does not choose.
pub const DEFAULT_RESTARTS: usize = 8;

/// Nelder–Mead rounds per start; each round rebuilds the simplex at the incumbent.
const MAX_ROUNDS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub n: usize,
    /// `γ_0 … γ_2n`, unwrapped so that `γ_2n = γ_0 + π` exactly.
    pub angles: Vec<f64>,
}

impl Chain {
    pub fn from_interior(a: &MeasurementDirection, interior: &[f64]) -> Result<Self> {
        if interior.is_empty() || interior.len() % 2 == 0 {
            return Err(Error::InvalidInput(format!(
                "a chain needs an odd number (2n−1) of interior angles, got {}",
                interior.len()
            )));
        }
        let start = a.angle();
        let mut angles = Vec::with_capacity(interior.len() + 2);
        angles.push(start);
        angles.extend_from_slice(interior);
        angles.push(start + PI);
        Ok(Self {
            n: (interior.len() + 1) / 2,
            angles,
        })
    }

    /// Chain with consecutive nodes `π/2n` apart.
    pub fn equally_spaced(a: &MeasurementDirection, n: usize) -> Self {
        assert!(n >= 1, "chain length must be positive");
        let step = PI / (2 * n) as f64;
        let start = a.angle();
        Self {
            n,
            angles: (0..=2 * n).map(|j| start + step * j as f64).collect(),
        }
    }

    pub fn interior(&self) -> &[f64] {
        &self.angles[1..self.angles.len() - 1]
    }

    /// Resample the node path onto a chain of length `n` by linear
    /// interpolation in the node index.
    pub fn resampled(&self, n: usize) -> Self {
        let old = self.angles.len() - 1;
        let new = 2 * n;
        let angles = (0..=new)
            .map(|j| {
                let s = j as f64 * old as f64 / new as f64;
                let i = (s.floor() as usize).min(old - 1);
                let t = s - i as f64;
                self.angles[i] * (1.0 - t) + self.angles[i + 1] * t
            })
            .collect();
        Self { n, angles }
    }

    /// Extend to `n + 1` by repeating one node twice. Ω grows by exactly
    /// `1 − ⟨A(γ)B(γ)⟩`, so the node with the largest self-correlation is used.
    pub fn padded(&self, state: &EntangledState) -> Self {
        let self_corr = |g: f64| {
            let d = MeasurementDirection::new(g);
            qm::correlation(state, &d, &d)
        };
        let (best, _) = self
            .angles
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| self_corr(**x).total_cmp(&self_corr(**y)))
            .expect("chains are never empty");
        let mut angles = self.angles.clone();
        let g = angles[best];
        // insert after `best`, or before it when `best` is the final node
        let at = if best + 1 == angles.len() { best } else { best + 1 };
        angles.insert(at, g);
        angles.insert(at, g);
        Self { n: self.n + 1, angles }
    }

    pub fn check(&self, a: &MeasurementDirection) -> Result<()> {
        let ok = self.n >= 1
            && self.angles.len() == 2 * self.n + 1
            && (self.angles[0] - a.angle()).abs() <= 1e-12
            && (self.angles[2 * self.n] - self.angles[0] - PI).abs() <= 1e-12;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("chain must run from a to −a through 2n+1 nodes".into()))
        }
    }
}

fn omega_of_angles(state: &EntangledState, angles: &[f64]) -> f64 {
    let n = (angles.len() - 1) / 2;
    let s = state.theta().sin();
    let trig: Vec<(f64, f64)> = angles.iter().map(|g| g.sin_cos()).collect();
    // ⟨A(x)B(y)⟩ = cos x cos y + sin θ sin x sin y
    let corr = |i: usize, j: usize| trig[i].1 * trig[j].1 + s * trig[i].0 * trig[j].0;
    let sum: f64 = (0..n).map(|k| corr(2 * k, 2 * k + 1) + corr(2 * k + 2, 2 * k + 1)).sum();
    n as f64 - 0.5 * sum
}

/// `Ω(a, n)` for a given chain, using the closed-form correlations.
pub fn omega(state: &EntangledState, a: &MeasurementDirection, chain: &Chain) -> Result<f64> {
    chain.check(a)?;
    let n = chain.n;
    let g = &chain.angles;
    let dir = MeasurementDirection::new;
    let sum: f64 = (0..n)
        .map(|k| {
            qm::correlation(state, &dir(g[2 * k]), &dir(g[2 * k + 1]))
                + qm::correlation(state, &dir(g[2 * k + 2]), &dir(g[2 * k + 1]))
        })
        .sum();
    Ok(n as f64 - 0.5 * sum)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaResult {
    pub omega: f64,
    pub chain: Chain,
    /// `Ω_min − ⟨A(a)⟩²`.
    pub qm_bound: f64,
    pub converged: bool,
    pub restarts_used: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSearch {
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_evaluations_per_dim: usize,
}

impl Default for ChainSearch {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            tol: 1e-10,
            seed: rng::DEFAULT_SEED,
            max_evaluations_per_dim: 4_000,
        }
    }
}

struct LocalRun {
    value: f64,
    interior: Vec<f64>,
    converged: bool,
    evaluations: usize,
}

fn local_search(state: &EntangledState, start: &[f64], end: f64, x0: &[f64], search: &ChainSearch, step: f64) -> LocalRun {
    let mut buf = Vec::with_capacity(x0.len() + 2);
    let mut objective = |x: &[f64]| {
        buf.clear();
        buf.extend_from_slice(start);
        buf.extend_from_slice(x);
        buf.push(end);
        omega_of_angles(state, &buf)
    };
    let mut x = x0.to_vec();
    let mut value = objective(&x);
    let mut evaluations = 1;
    let mut converged = false;
    let mut step = step;
    for _ in 0..MAX_ROUNDS {
        let opts = NelderMeadOptions {
            initial_step: step,
            x_tol: search.tol,
            max_evaluations: search.max_evaluations_per_dim * x.len().max(1),
        };
        let m = nelder_mead(&mut objective, &x, &opts);
        evaluations += m.evaluations;
        converged = m.converged;
        let improved = value - m.value;
        if m.value < value {
            value = m.value;
            x = m.x;
        }
        if improved <= 1e-15 && converged {
            break;
        }
        step = (step * 0.5).max(10.0 * search.tol);
    }
    LocalRun {
        value,
        interior: x,
        converged,
        evaluations,
    }
}

/// Minimize `Ω(a, n)` over the `2n−1` interior chain angles.
///
/// Starts from the equally spaced chain, from each chain in `warm_starts`, and
/// from `search.restarts` random perturbations of the equal spacing (stream
/// `(seed, r)`). The best result wins, ties going to the earliest start.
pub fn minimize_omega_from(
    state: &EntangledState,
    a: &MeasurementDirection,
    n: usize,
    search: &ChainSearch,
    warm_starts: &[Chain],
) -> Result<OmegaResult> {
    if n == 0 {
        return Err(Error::InvalidInput("chain length n must be at least 1".into()));
    }
    if !(search.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", search.tol)));
    }
    let base = Chain::equally_spaced(a, n);
    let spacing = PI / (2 * n) as f64;
    let mut starts: Vec<Vec<f64>> = vec![base.interior().to_vec()];
    for w in warm_starts.iter().filter(|w| w.n == n && w.check(a).is_ok()) {
        starts.push(w.interior().to_vec());
    }
    for r in 0..search.restarts {
        let mut rng = rng::stream(search.seed, r as u64);
        starts.push(
            base.interior()
                .iter()
                .map(|g| g + rng.gen_range(-0.5..0.5) * spacing)
                .collect(),
        );
    }
    let origin = [a.angle()];
    let end = a.angle() + PI;
    let step = 0.25 * spacing;
    let run = |x0: &Vec<f64>| local_search(state, &origin, end, x0, search, step);

    #[cfg(feature = "parallel")]
    let runs: Vec<LocalRun> = {
        use rayon::prelude::*;
        starts.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<LocalRun> = starts.iter().map(run).collect();

    let evaluations = runs.iter().map(|r| r.evaluations).sum();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value < runs[best].value {
            best = i;
        }
    }
    let winner = &runs[best];
    let chain = Chain::from_interior(a, &winner.interior)?;
    let omega = omega_of_angles(state, &chain.angles);
    let ea = qm::expectation_a(state, a);
    Ok(OmegaResult {
        omega,
        qm_bound: omega - ea * ea,
        chain,
        converged: winner.converged,
        restarts_used: starts.len() - 1,
        evaluations,
    })
}

pub fn minimize_omega(
    state: &EntangledState,
    a: &MeasurementDirection,
    n: usize,
    restarts: usize,
    tol: f64,
) -> Result<OmegaResult> {
    let search = ChainSearch {
        restarts,
        tol,
        ..ChainSearch::default()
    };
    minimize_omega_from(state, a, n, &search, &[])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub omega_min: f64,
    pub qm_bound: f64,
    pub converged: bool,
    pub wall_time_ms: Option<f64>,
}

/// Slack allowed in the non-increasing check of `qm_bound(n)`.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// `(n, Ω_min, qm_bound)` for an increasing list of chain lengths.
///
/// Each length is warm-started from the previous optimum, both resampled and
/// padded by a repeated node. If the bound still rises by more than
/// [`MONOTONE_SLACK`], the search is repeated with twice the restarts.
pub fn bound_convergence(
    state: &EntangledState,
    a: &MeasurementDirection,
    n_list: &[usize],
    search: &ChainSearch,
    record_time: bool,
) -> Result<Vec<BoundRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list.first() == Some(&0) {
        return Err(Error::InvalidInput("n list must be strictly increasing and positive".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    let mut previous: Option<OmegaResult> = None;
    for &n in n_list {
        // no clock is read unless asked for (wasm32 has none)
        let started = record_time.then(std::time::Instant::now);
        let mut warm = Vec::new();
        if let Some(prev) = &previous {
            warm.push(prev.chain.resampled(n));
            let mut padded = prev.chain.clone();
            while padded.n < n {
                padded = padded.padded(state);
            }
            warm.push(padded);
        }
        let mut result = minimize_omega_from(state, a, n, search, &warm)?;
        if let Some(prev) = &previous {
            let mut extra = search.clone();
            for _ in 0..2 {
                if result.qm_bound <= prev.qm_bound + MONOTONE_SLACK {
                    break;
                }
                extra.restarts = 2 * extra.restarts.max(1);
                extra.seed = extra.seed.wrapping_add(1);
                let retry = minimize_omega_from(state, a, n, &extra, &warm)?;
                if retry.omega < result.omega {
                    result = retry;
                }
            }
        }
        rows.push(BoundRow {
            n,
            omega_min: result.omega,
            qm_bound: result.qm_bound,
            converged: result.converged,
            wall_time_ms: started.map(|t| t.elapsed().as_secs_f64() * 1e3),
        });
        previous = Some(result);
    }
    Ok(rows)
}
