//! Levenberg–Marquardt for small dense least-squares problems.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative cost decrease of an accepted step falls below this.
    pub cost_tolerance: f64,
    /// Stop when the step norm falls below this.
    pub step_tolerance: f64,
    /// Central-difference step for the Jacobian.
    pub diff_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions { max_iterations: 400, cost_tolerance: 1e-12, step_tolerance: 1e-12, diff_step: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: Vec<f64>,
    /// Half the squared residual norm at `params`.
    pub cost: f64,
    pub iterations: usize,
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

/// Minimizes `½‖r(x)‖²`. `residuals` fills its output slice and returns
/// `false` if the point is not admissible (non-finite values), in which case
/// the step is rejected. Returns `None` if the starting point is inadmissible.
pub fn levenberg_marquardt<F>(residuals: F, x0: &[f64], m: usize, opts: &LmOptions) -> Option<LmReport>
where
    F: Fn(&[f64], &mut [f64]) -> bool,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = vec![0.0; m];
    if !residuals(&x, &mut r) || r.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut cost = cost_of(&r);
    let mut mu = 1e-3;
    let mut jac = DMatrix::<f64>::zeros(m, n);
    let mut rp = vec![0.0; m];
    let mut rm = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut iterations = 0;

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        for k in 0..n {
            let h = opts.diff_step * x[k].abs().max(1.0);
            let mut xp = x.clone();
            xp[k] += h;
            let mut xm = x.clone();
            xm[k] -= h;
            let ok = residuals(&xp, &mut rp) && residuals(&xm, &mut rm);
            for i in 0..m {
                jac[(i, k)] = if ok { (rp[i] - rm[i]) / (2.0 * h) } else { 0.0 };
            }
        }
        let a = jac.transpose() * &jac;
        let g = jac.transpose() * DVector::from_column_slice(&r);
        let max_diag = (0..n).map(|k| a[(k, k)]).fold(0.0, f64::max);
        if max_diag == 0.0 || !max_diag.is_finite() {
            break;
        }

        loop {
            let mut damped = a.clone();
            for k in 0..n {
                damped[(k, k)] += mu * a[(k, k)].max(1e-12 * max_diag);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    mu *= 10.0;
                    if mu > 1e16 {
                        break 'outer;
                    }
                    continue;
                }
            };
            let candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let ok = residuals(&candidate, &mut trial) && trial.iter().all(|v| v.is_finite());
            let new_cost = if ok { cost_of(&trial) } else { f64::INFINITY };
            if new_cost < cost {
                let rel = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
                x = candidate;
                std::mem::swap(&mut r, &mut trial);
                cost = new_cost;
                mu = (mu / 3.0).max(1e-12);
                if rel < opts.cost_tolerance || step.norm() < opts.step_tolerance {
                    break 'outer;
                }
                break;
            }
            mu *= 4.0;
            if mu > 1e16 || step.norm() < opts.step_tolerance {
                break 'outer;
            }
        }
    }
    Some(LmReport { params: x, cost, iterations })
}
