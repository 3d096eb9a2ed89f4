//! Derivative-free Nelder-Mead minimisation.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex along each axis.
    pub initial_step: f64,
    pub max_iterations: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tol: f64,
    /// ...and the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_iterations: 5_000,
            f_tol: 1e-14,
            x_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimises `f` from `start`. Non-finite objective values are treated as `+inf`,
/// so infeasible regions can be signalled by returning `NaN` or `inf`.
pub fn nelder_mead<F>(f: F, start: &[f64], opts: NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += opts.initial_step;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();

    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol && diameter <= opts.x_tol {
            converged = true;
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for p in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();

        for i in 0..n {
            trial[i] = centroid[i] + (centroid[i] - worst[i]);
        }
        let f_reflect = eval(&trial);

        if f_reflect < values[0] {
            for i in 0..n {
                trial2[i] = centroid[i] + 2.0 * (centroid[i] - worst[i]);
            }
            let f_expand = eval(&trial2);
            if f_expand < f_reflect {
                simplex[n].copy_from_slice(&trial2);
                values[n] = f_expand;
            } else {
                simplex[n].copy_from_slice(&trial);
                values[n] = f_reflect;
            }
            continue;
        }
        if f_reflect < values[n - 1] {
            simplex[n].copy_from_slice(&trial);
            values[n] = f_reflect;
            continue;
        }

        // Contract towards the better of the reflected and worst points.
        let (toward, f_toward) = if f_reflect < values[n] {
            (trial.clone(), f_reflect)
        } else {
            (worst.clone(), values[n])
        };
        for i in 0..n {
            trial2[i] = centroid[i] + 0.5 * (toward[i] - centroid[i]);
        }
        let f_contract = eval(&trial2);
        if f_contract < f_toward {
            simplex[n].copy_from_slice(&trial2);
            values[n] = f_contract;
            continue;
        }

        let best = simplex[0].clone();
        for j in 1..=n {
            for i in 0..n {
                simplex[j][i] = best[i] + 0.5 * (simplex[j][i] - best[i]);
            }
            values[j] = eval(&simplex[j]);
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    NelderMeadResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let res = nelder_mead(rosen, &[-1.2, 1.0], NelderMeadOptions::default());
        assert!(res.converged);
        assert!((res.x[0] - 1.0).abs() < 1e-6 && (res.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn treats_non_finite_as_infeasible() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) };
        let res = nelder_mead(f, &[2.0], NelderMeadOptions::default());
        assert!((res.x[0] - 0.5).abs() < 1e-6);
    }
}
