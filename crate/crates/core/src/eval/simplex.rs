//! Derivative-free Nelder–Mead minimisation.
//!
//! Standard coefficients (reflection 1, expansion 2, contraction ½, shrink ½)
//! with the initial simplex built the usual way: each vertex perturbs one
//! coordinate by 5%, or by 0.00025 when that coordinate is zero.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Stop when `f_worst − f_best ≤ rel_tol · |f_best| + abs_tol` and every
    /// vertex lies within `x_tol · (1 + |x|)` of the best one, per coordinate.
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub x_tol: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-30,
            x_tol: 1e-8,
            max_iterations: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Whether the tolerance was met before the iteration limit.
    pub converged: bool,
}

fn eval(f: &mut impl FnMut(&[f64]) -> f64, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimises `f` starting from `start`. NaN objective values count as +∞.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] = if v[i] != 0.0 { v[i] * 1.05 } else { 0.00025 };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(&mut f, x)).collect();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let (best, worst) = (values[0], values[n]);
        let flat = worst - best <= opts.rel_tol * best.abs() + opts.abs_tol;
        let tight = simplex[1..].iter().all(|v| {
            v.iter()
                .zip(&simplex[0])
                .all(|(a, b)| (a - b).abs() <= opts.x_tol * (1.0 + b.abs()))
        });
        if best.is_finite() && flat && tight {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let fr = eval(&mut f, &reflected);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = eval(&mut f, &expanded);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(0.5);
            let fc = eval(&mut f, &c);
            (c, fc)
        } else {
            let c = along(-0.5);
            let fc = eval(&mut f, &c);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        let best_point = simplex[0].clone();
        for i in 1..=n {
            for (x, b) in simplex[i].iter_mut().zip(&best_point) {
                *x = b + 0.5 * (*x - b);
            }
            values[i] = eval(&mut f, &simplex[i]);
        }
    }

    SimplexResult {
        point: simplex[0].clone(),
        value: values[0],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &SimplexOptions::default(),
        );
        assert!(r.converged);
        assert!((r.point[0] - 1.0).abs() < 1e-4, "{:?}", r.point);
        assert!((r.point[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn quadratic_from_zero_start() {
        let r = nelder_mead(
            |x| (x[0] - 3.0).powi(2) + (x[1] + 2.0).powi(2) + (x[2] - 0.5).powi(2),
            &[0.0, 0.0, 0.0],
            &SimplexOptions::default(),
        );
        assert!(r.value < 1e-12);
    }

    #[test]
    fn nan_is_avoided() {
        let r = nelder_mead(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 2.0).powi(2)
                }
            },
            &[1.0],
            &SimplexOptions::default(),
        );
        assert!((r.point[0] - 2.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn iteration_limit() {
        let opts = SimplexOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let r = nelder_mead(|x| (x[0] - 100.0).powi(2), &[0.0], &opts);
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }
}
