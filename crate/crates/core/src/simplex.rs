//! Nelder–Mead simplex minimization with dimension-adaptive coefficients
//! (Gao & Han), used for the chain-angle search.

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Converged once every vertex lies within this distance (max-norm) of the best one.
    pub x_tol: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            x_tol: 1e-10,
            max_evaluations: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum {
    let dim = x0.len();
    if dim == 0 {
        return Minimum {
            x: Vec::new(),
            value: f(&[]),
            evaluations: 1,
            converged: true,
        };
    }
    let d = dim as f64;
    let (reflect, expand) = (1.0, 1.0 + 2.0 / d);
    let contract = 0.75 - 1.0 / (2.0 * d);
    let shrink = 1.0 - 1.0 / d;

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        f(x)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();

    // running vertex sum, refreshed after shrinks and periodically against drift
    let refresh = |simplex: &[Vec<f64>], sum: &mut Vec<f64>| {
        sum.iter_mut().for_each(|s| *s = 0.0);
        for v in simplex {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    };
    let mut sum = vec![0.0; dim];
    refresh(&simplex, &mut sum);

    let mut order: Vec<usize> = (0..=dim).collect();
    let mut converged = false;
    let mut centroid = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut trial2 = vec![0.0; dim];
    let mut iterations = 0usize;
    loop {
        // order vertices best → worst; ties broken by vertex index
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
        let (best, worst, second_worst) = (order[0], order[dim], order[dim - 1]);

        // the spread costs O(dim²), so it is checked once every `dim` iterations
        if iterations % dim == 0 && converged_spread(&simplex, best) <= opts.x_tol {
            converged = true;
            break;
        }
        if evaluations >= opts.max_evaluations {
            break;
        }
        iterations += 1;
        if iterations % 1024 == 0 {
            refresh(&simplex, &mut sum);
        }

        for k in 0..dim {
            centroid[k] = (sum[k] - simplex[worst][k]) / d;
            trial[k] = centroid[k] + reflect * (centroid[k] - simplex[worst][k]);
        }
        let f_reflect = eval(&trial, &mut evaluations);

        let replace = |simplex: &mut Vec<Vec<f64>>, values: &mut Vec<f64>, sum: &mut Vec<f64>, x: &[f64], fx: f64| {
            for k in 0..dim {
                sum[k] += x[k] - simplex[worst][k];
            }
            simplex[worst].copy_from_slice(x);
            values[worst] = fx;
        };

        if f_reflect < values[best] {
            for k in 0..dim {
                trial2[k] = centroid[k] + expand * (trial[k] - centroid[k]);
            }
            let f_expand = eval(&trial2, &mut evaluations);
            if f_expand < f_reflect {
                replace(&mut simplex, &mut values, &mut sum, &trial2, f_expand);
            } else {
                replace(&mut simplex, &mut values, &mut sum, &trial, f_reflect);
            }
            continue;
        }
        if f_reflect < values[second_worst] {
            replace(&mut simplex, &mut values, &mut sum, &trial, f_reflect);
            continue;
        }
        // contraction: outside if the reflection beat the worst vertex, inside otherwise
        let outside = f_reflect < values[worst];
        for k in 0..dim {
            trial2[k] = if outside {
                centroid[k] + contract * (trial[k] - centroid[k])
            } else {
                centroid[k] - contract * (centroid[k] - simplex[worst][k])
            };
        }
        let f_contract = eval(&trial2, &mut evaluations);
        let accept = if outside {
            f_contract <= f_reflect
        } else {
            f_contract < values[worst]
        };
        if accept {
            replace(&mut simplex, &mut values, &mut sum, &trial2, f_contract);
            continue;
        }
        let anchor = simplex[best].clone();
        for i in (0..=dim).filter(|&i| i != best) {
            for k in 0..dim {
                simplex[i][k] = anchor[k] + shrink * (simplex[i][k] - anchor[k]);
            }
            values[i] = eval(&simplex[i], &mut evaluations);
        }
        refresh(&simplex, &mut sum);
    }

    let best = order[0];
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        evaluations,
        converged,
    }
}

/// Largest max-norm distance of any vertex from vertex `best`.
fn converged_spread(simplex: &[Vec<f64>], best: usize) -> f64 {
    simplex
        .iter()
        .flat_map(|v| v.iter().zip(&simplex[best]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 0.5 * x[0] * x[1];
        let m = nelder_mead(f, &[0.0, 0.0], &NelderMeadOptions::default());
        assert!(m.converged);
        // stationary point of the quadratic, solved by hand
        let (x, y) = (1.5319148936170213, -2.1276595744680851);
        assert!((m.x[0] - x).abs() < 1e-8 && (m.x[1] - y).abs() < 1e-8, "{:?}", m.x);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reports_non_convergence_on_budget_exhaustion() {
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let opts = NelderMeadOptions {
            max_evaluations: 20,
            ..Default::default()
        };
        let m = nelder_mead(f, &[1.0; 6], &opts);
        assert!(!m.converged);
    }

    #[test]
    fn never_worse_than_start() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (v - i as f64).cos()).sum::<f64>();
        let x0 = [0.3; 9];
        let m = nelder_mead(f, &x0, &NelderMeadOptions::default());
        assert!(m.value <= f(&x0));
    }
}
