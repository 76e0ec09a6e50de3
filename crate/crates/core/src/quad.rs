//! One-dimensional quadrature: Gauss–Legendre rules, a globally adaptive
//! Gauss–Kronrod (7/15) integrator, and the polar-angle grids used for
//! coarse-graining.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (pn, pn1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * pn - pn1) / (x * x - 1.0);
    (pn, d)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of per-interval |Kronrod − Gauss| differences.
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const MAX_INTERVALS: usize = 20_000;

/// Globally adaptive integration of `f` over the pieces delimited by
/// `breakpoints` (sorted, including both ends). Bisects the interval with the
/// largest error estimate until the summed estimate is at most `abs_tol`.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breakpoints: &[f64], abs_tol: f64) -> Integral {
    let mut heap = BinaryHeap::new();
    let mut total_err = 0.0;
    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (value, error) = kronrod15(&mut f, a, b);
        total_err += error;
        heap.push(Segment { a, b, value, error });
    }
    while total_err > abs_tol && heap.len() < MAX_INTERVALS {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable in floating point
            heap.push(Segment { error: 0.0, ..worst });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Sum in a fixed order so the result does not depend on heap layout.
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segments.iter().map(|s| s.value).sum();
    let error = segments.iter().map(|s| s.error).sum();
    Integral {
        value,
        error,
        intervals: segments.len(),
    }
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Integral {
    integrate_pieces(f, &[a, b], abs_tol)
}

/// Sorted, de-duplicated breakpoint list for `[lo, hi]` with the interior
/// points that fall strictly inside.
pub fn breakpoints(lo: f64, hi: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = interior
        .into_iter()
        .filter(|x| x.is_finite() && *x > lo && *x < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
    pts
}

/// Quadrature grid over the polar angle `τ ∈ [0, π]` with the uniform-sphere
/// density `ρ(τ) = sin τ / 2` folded into the weights.
///
/// The range is split at the supplied breakpoints (support boundaries of a
/// response model). Each piece carries a Gauss–Legendre rule composed with the
/// endpoint-flattening map `τ = m + h·sin(πt/2)`, which removes the
/// square-root behaviour of cap profiles at their edges.
#[derive(Clone, Debug, PartialEq)]
pub struct TauGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Fewest nodes any piece receives.
const MIN_NODES_PER_PIECE: usize = 8;

impl TauGrid {
    pub fn new(splits: &[f64], grid_size: usize) -> Self {
        let pts = breakpoints(0.0, PI, splits.iter().copied());
        let pieces: Vec<(f64, f64)> = pts
            .windows(2)
            .map(|w| (w[0], w[1]))
            .filter(|(a, b)| b - a > 1e-14)
            .collect();
        let counts = allocate_nodes(&pieces, grid_size);
        let mut nodes = Vec::with_capacity(grid_size);
        let mut weights = Vec::with_capacity(grid_size);
        for (&(a, b), &m) in pieces.iter().zip(&counts) {
            let (t, w) = gauss_legendre(m);
            let center = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (ti, wi) in t.iter().zip(&w) {
                let arg = FRAC_PI_2 * ti;
                let tau = center + half * arg.sin();
                let jac = half * FRAC_PI_2 * arg.cos();
                nodes.push(tau);
                weights.push(wi * jac * 0.5 * tau.sin());
            }
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫ h(τ) ρ(τ) dτ` for values sampled at the nodes.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

fn allocate_nodes(pieces: &[(f64, f64)], grid_size: usize) -> Vec<usize> {
    let total: f64 = pieces.iter().map(|(a, b)| b - a).sum();
    let mut counts: Vec<usize> = pieces
        .iter()
        .map(|(a, b)| {
            // half the nodes split evenly, half by length: short pieces next
            // to a square-root edge still get enough
            let even = 0.5 * grid_size as f64 / pieces.len() as f64;
            let share = (even + 0.5 * grid_size as f64 * (b - a) / total).round() as usize;
            share.max(MIN_NODES_PER_PIECE)
        })
        .collect();
    // trim the largest pieces until the total matches, never below the floor
    loop {
        let sum: usize = counts.iter().sum();
        if sum <= grid_size {
            break;
        }
        let Some((idx, _)) = counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > MIN_NODES_PER_PIECE)
            .max_by_key(|(_, c)| **c)
        else {
            break;
        };
        counts[idx] -= 1;
    }
    counts
}
