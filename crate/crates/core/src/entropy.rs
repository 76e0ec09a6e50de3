//! Rényi entropies of binary outcomes and the minimum averaged entropy of an
//! outcome distribution with prescribed mean and variance.
//!
//! Entropies are in bits. A distribution is a finite list of atoms
//! `(weight, p)` where `p = P(X = +1)` at a value of the accessible variable;
//! the variance constraint is imposed on `f = 2p − 1`, i.e.
//! `4 Σ w (p − p̄)² = δ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp;

/// Smallest accepted LP grid.
pub const MIN_LP_GRID: usize = 2001;

/// Tolerance on the mean and variance of reported minimizers.
pub const MOMENT_TOL: f64 = 1e-9;

const WEIGHT_EPS: f64 = 1e-12;

/// Coarse steps of the critical-variance scan before bisection.
const SCAN_STEPS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropySpec {
    /// Rényi order; `f64::INFINITY` selects the min-entropy.
    pub alpha: f64,
}

impl EntropySpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_nan() || alpha < 0.0 {
            return Err(Error::InvalidInput(format!("Rényi order must be ≥ 0, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn shannon() -> Self {
        Self { alpha: 1.0 }
    }

    pub fn min_entropy() -> Self {
        Self { alpha: f64::INFINITY }
    }
}

/// Base-2 Rényi entropy of the binary distribution `(p, 1 − p)`.
pub fn renyi_entropy(p: f64, spec: &EntropySpec) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let q = 1.0 - p;
    let alpha = spec.alpha;
    if alpha == 0.0 {
        let support = (p > 0.0) as u32 + (q > 0.0) as u32;
        (support as f64).log2()
    } else if alpha == 1.0 {
        let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
        term(p) + term(q)
    } else if alpha.is_infinite() {
        -p.max(q).log2()
    } else {
        let s = p.powf(alpha) + q.powf(alpha);
        (s.log2() / (1.0 - alpha)).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub atoms: Vec<Atom>,
}

impl OutcomeDistribution {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.iter().any(|a| !(a.weight >= 0.0) || !(0.0..=1.0).contains(&a.p)) {
            return Err(Error::InvalidInput("atoms need weight ≥ 0 and p in [0, 1]".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("atom weights sum to {total}, not 1")));
        }
        Ok(Self { atoms })
    }

    pub fn point(p: f64) -> Self {
        Self {
            atoms: vec![Atom { weight: 1.0, p }],
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight * a.p).sum()
    }

    /// `4 Σ w (p − mean)²`, the variance of `f = 2p − 1`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        4.0 * self.atoms.iter().map(|a| a.weight * (a.p - m).powi(2)).sum::<f64>()
    }

    fn reflected(&self) -> Self {
        let mut atoms: Vec<Atom> = self.atoms.iter().map(|a| Atom { weight: a.weight, p: 1.0 - a.p }).collect();
        atoms.sort_by(|x, y| x.p.total_cmp(&y.p));
        Self { atoms }
    }
}

pub fn average_entropy(dist: &OutcomeDistribution, spec: &EntropySpec) -> f64 {
    dist.atoms.iter().map(|a| a.weight * renyi_entropy(a.p, spec)).sum()
}

/// Largest variance of `f = 2p − 1` compatible with mean `p_psi`.
pub fn max_variance(p_psi: f64) -> f64 {
    4.0 * p_psi * (1.0 - p_psi)
}

/// Lower bound `4 p (½ − p)` on the critical variance, for `p ≤ ½`.
pub fn critical_lower_bound(p_psi: f64) -> f64 {
    let p = p_psi.min(1.0 - p_psi);
    4.0 * p * (0.5 - p)
}

fn check_moments(p_psi: f64, delta: f64) -> Result<()> {
    let max = max_variance(p_psi);
    if !(0.0..=1.0).contains(&p_psi) || !(delta >= 0.0) || delta > max + 1e-12 {
        return Err(Error::InfeasibleVariance { p_psi, delta, max });
    }
    Ok(())
}

/// Two-atom distribution with a deterministic atom: weight `1 − p/q` at 0
/// and `p/q` at `q = p + δ/4p` (mirrored for `p > ½`).
pub fn bilocal_candidate(p_psi: f64, delta: f64) -> Result<OutcomeDistribution> {
    check_moments(p_psi, delta)?;
    if p_psi > 0.5 {
        return Ok(bilocal_candidate(1.0 - p_psi, delta)?.reflected());
    }
    if delta == 0.0 || p_psi == 0.0 {
        return Ok(OutcomeDistribution::point(p_psi));
    }
    let q = (p_psi + delta / (4.0 * p_psi)).min(1.0);
    let w = p_psi / q;
    let mut atoms = Vec::with_capacity(2);
    if 1.0 - w > 0.0 {
        atoms.push(Atom { weight: 1.0 - w, p: 0.0 });
    }
    atoms.push(Atom { weight: w, p: q });
    Ok(OutcomeDistribution { atoms })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub p_psi: f64,
    pub delta: f64,
    pub alpha: f64,
    pub grid_size: usize,
    pub h_bar: f64,
    pub minimizer: OutcomeDistribution,
    pub is_bilocal: bool,
    /// Averaged entropy of [`bilocal_candidate`].
    pub candidate_h_bar: f64,
    /// `|mean − p_psi|` of the minimizer.
    pub mean_residual: f64,
    /// `|variance − delta|` of the minimizer.
    pub variance_residual: f64,
    pub lp_pivots: usize,
}

impl EntropyReport {
    /// Grid spacing of the LP.
    pub fn resolution(&self) -> f64 {
        1.0 / (self.grid_size - 1) as f64
    }
}

fn lp_grid(p_psi: f64, grid_size: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..grid_size).map(|i| i as f64 / (grid_size - 1) as f64).collect();
    grid.extend([p_psi, 0.5]);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Group sorted atoms whose `p` values are within `gap` of a neighbour.
fn clusters(atoms: &[Atom], gap: f64) -> Vec<Vec<Atom>> {
    let mut out: Vec<Vec<Atom>> = Vec::new();
    for a in atoms.iter().filter(|a| a.weight > WEIGHT_EPS) {
        match out.last_mut() {
            Some(c) if a.p - c.last().unwrap().p <= gap => c.push(*a),
            _ => out.push(vec![*a]),
        }
    }
    out
}

/// Two groups of atoms, one of them at the deterministic end `p = 0`, for a
/// distribution with mean at most ½.
fn bilocal_form(dist: &OutcomeDistribution, resolution: f64) -> bool {
    let groups = clusters(&dist.atoms, 1.5 * resolution);
    groups.len() == 2 && groups[0].iter().any(|a| a.p == 0.0)
}

/// Minimize `Σ w H_α(p)` over distributions on a `p` grid with the given mean
/// and variance, by linear programming.
pub fn minimize_average_entropy(
    p_psi: f64,
    delta: f64,
    spec: &EntropySpec,
    grid_size: usize,
) -> Result<EntropyReport> {
    if grid_size < MIN_LP_GRID {
        return Err(Error::InvalidInput(format!(
            "entropy grid must have at least {MIN_LP_GRID} nodes, got {grid_size}"
        )));
    }
    check_moments(p_psi, delta)?;
    let delta = delta.min(max_variance(p_psi));
    let mirrored = p_psi > 0.5;
    let p = if mirrored { 1.0 - p_psi } else { p_psi };

    let grid = lp_grid(p, grid_size);
    let cost: Vec<f64> = grid.iter().map(|&x| renyi_entropy(x, spec)).collect();
    let rows = vec![
        vec![1.0; grid.len()],
        grid.clone(),
        grid.iter().map(|x| x * x).collect(),
    ];
    let second = p * p + delta / 4.0;
    let sol = lp::solve(&cost, &rows, &[1.0, p, second])?;

    let mut atoms: Vec<Atom> = sol
        .basis
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|&(j, w)| Atom { weight: w, p: grid[j] })
        .collect();
    atoms.sort_by(|x, y| x.p.total_cmp(&y.p));
    let reduced = OutcomeDistribution { atoms };
    let resolution = 1.0 / (grid_size - 1) as f64;
    let is_bilocal = delta > 0.0 && bilocal_form(&reduced, resolution);
    let minimizer = if mirrored { reduced.reflected() } else { reduced };

    let h_bar = average_entropy(&minimizer, spec);
    let candidate_h_bar = average_entropy(&bilocal_candidate(p_psi, delta)?, spec);
    let report = EntropyReport {
        p_psi,
        delta,
        alpha: spec.alpha,
        grid_size,
        h_bar,
        mean_residual: (minimizer.mean() - p_psi).abs(),
        variance_residual: (minimizer.variance() - delta).abs(),
        minimizer,
        is_bilocal,
        candidate_h_bar,
        lp_pivots: sol.pivots,
    };
    if report.mean_residual > MOMENT_TOL || report.variance_residual > MOMENT_TOL {
        return Err(Error::Infeasible(format!(
            "minimizer misses the moments by {:e} (mean) and {:e} (variance)",
            report.mean_residual, report.variance_residual
        )));
    }
    Ok(report)
}

/// Scanned critical variance: the largest `δ` at which the LP minimizer keeps
/// the bi-local form with a deterministic atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalVariance {
    pub p_psi: f64,
    pub alpha: f64,
    /// Largest scanned `δ` with a bi-local minimizer.
    pub delta_c: f64,
    /// Smallest scanned `δ` without one (`None` if the form persists up to the maximum).
    pub upper: Option<f64>,
    pub scan_tol: f64,
    pub lower_bound: f64,
    pub max_variance: f64,
    pub grid_size: usize,
}

pub fn critical_variance(p_psi: f64, spec: &EntropySpec, scan_tol: f64, grid_size: usize) -> Result<CriticalVariance> {
    if !(p_psi > 0.0 && p_psi < 0.5) {
        return Err(Error::InvalidInput(format!("critical variance needs 0 < p < 1/2, got {p_psi}")));
    }
    if spec.alpha > 1.0 {
        return Err(Error::InvalidInput(format!("critical variance needs α ≤ 1, got {}", spec.alpha)));
    }
    if !(scan_tol > 0.0) {
        return Err(Error::InvalidInput(format!("scan tolerance must be positive, got {scan_tol}")));
    }
    let max = max_variance(p_psi);
    let bilocal = |d: f64| minimize_average_entropy(p_psi, d, spec, grid_size).map(|r| r.is_bilocal);
    let mut result = CriticalVariance {
        p_psi,
        alpha: spec.alpha,
        delta_c: max,
        upper: None,
        scan_tol,
        lower_bound: critical_lower_bound(p_psi),
        max_variance: max,
        grid_size,
    };
    // forward scan for the first δ without the form, then bisection; the
    // endpoint δ_max is degenerate (atoms at 0 and 1 only) and is not probed
    let mut lo = 0.0;
    let mut hi = None;
    for k in 1..SCAN_STEPS {
        let d = max * k as f64 / SCAN_STEPS as f64;
        if bilocal(d)? {
            lo = d;
        } else {
            hi = Some(d);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return Ok(result);
    };
    while hi - lo > scan_tol {
        let mid = 0.5 * (lo + hi);
        if bilocal(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    result.delta_c = lo;
    result.upper = Some(hi);
    Ok(result)
}
