//! Nelder–Mead downhill simplex.

/// Stopping rules for one local run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop once `f_worst − f_best` falls below this...
    pub f_tol: f64,
    /// ...and every vertex is within this distance (max norm) of the best.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 4000,
            f_tol: 1e-15,
            x_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalMinimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimize `f` from `x0`, building the initial simplex with per-coordinate
/// offsets `step`. Non-finite values are treated as `+∞`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> LocalMinimum
where
    F: FnMut(&[f64]) -> f64,
{
    let d = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for k in 0..d {
        let mut v = x0.to_vec();
        v[k] += step[k];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    loop {
        // Stable sort keeps the earlier vertex first on ties.
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[d] - values[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (spread <= opts.f_tol && size <= opts.x_tol) || evals >= opts.max_evaluations {
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|v| v[k]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[d])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = eval(&xr, &mut evals);
        if fr < values[0] {
            let xe = along(EXPAND);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[d] = xe;
                values[d] = fe;
            } else {
                simplex[d] = xr;
                values[d] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[d] = xr;
            values[d] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[d] {
            let xc = along(CONTRACT * REFLECT);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < values[d].min(fr) {
            simplex[d] = xc;
            values[d] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=d {
            for k in 0..d {
                simplex[i][k] = best[k] + SHRINK * (simplex[i][k] - best[k]);
            }
            values[i] = eval(&simplex[i], &mut evals);
        }
    }

    LocalMinimum {
        x: simplex.swap_remove(0),
        value: values[0],
        evaluations: evals,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2);
        let m = nelder_mead(f, &[0.0, 0.0], &[0.5, 0.5], &NelderMeadOptions::default());
        assert!((m.x[0] - 1.0).abs() < 1e-6 && (m.x[1] + 2.0).abs() < 1e-6);
        assert!(m.value < 1e-12);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let opts = NelderMeadOptions {
            max_evaluations: 20_000,
            ..Default::default()
        };
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], &opts);
        assert!(m.value < 1e-10, "{m:?}");
    }

    #[test]
    fn kinked_valley() {
        let f = |x: &[f64]| 100.0 * (x[0] - 0.3).abs() + (x[1] - 0.7).powi(2) - x[0];
        let m = nelder_mead(f, &[0.0, 0.0], &[0.2, 0.2], &NelderMeadOptions::default());
        assert!((m.x[0] - 0.3).abs() < 1e-9, "{m:?}");
    }

    #[test]
    fn respects_the_evaluation_budget() {
        let mut calls = 0;
        let opts = NelderMeadOptions {
            max_evaluations: 50,
            ..Default::default()
        };
        nelder_mead(
            |x: &[f64]| {
                calls += 1;
                x.iter().map(|v| v.sin()).sum()
            },
            &[0.0; 4],
            &[1.0; 4],
            &opts,
        );
        assert!(calls <= 50 + 4);
    }
}
