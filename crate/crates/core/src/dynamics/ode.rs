//! Dormand–Prince 5(4) with step-size control, stepping exactly onto the
//! requested output times.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Initial step; chosen from the output spacing when `None`.
    pub first_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-9, atol: 1e-12, max_steps: 5_000_000, first_step: None }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates `y' = f(t, y)` from `times[0]` and returns the state at every
/// entry of `times` (which must be non-decreasing).
pub fn integrate<F>(mut f: F, y0: &[f64], times: &[f64], opts: &OdeOptions) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Grid("output times must be non-decreasing".into()));
    }
    let n = y0.len();
    let mut out = Vec::with_capacity(times.len());
    let Some(&t0) = times.first() else {
        return Ok(out);
    };
    let mut t = t0;
    let mut y = y0.to_vec();
    out.push(y.clone());

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    f(t, &y, &mut k[0]);
    let span = times[times.len() - 1] - t0;
    let mut h = opts.first_step.unwrap_or_else(|| {
        let spacing = if times.len() > 1 { span / (times.len() - 1) as f64 } else { 1.0 };
        (spacing * 1e-3).max(f64::MIN_POSITIVE)
    });
    let mut steps = 0usize;

    for &target in &times[1..] {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Step { t, h });
            }
            steps += 1;
            let last = t + h >= target;
            let step = if last { target - t } else { h };

            stage(&y, &k, &mut tmp, step, &[A21]);
            f(t + C2 * step, &tmp, &mut k[1]);
            stage(&y, &k, &mut tmp, step, &[A31, A32]);
            f(t + C3 * step, &tmp, &mut k[2]);
            stage(&y, &k, &mut tmp, step, &[A41, A42, A43]);
            f(t + C4 * step, &tmp, &mut k[3]);
            stage(&y, &k, &mut tmp, step, &[A51, A52, A53, A54]);
            f(t + C5 * step, &tmp, &mut k[4]);
            stage(&y, &k, &mut tmp, step, &[A61, A62, A63, A64, A65]);
            f(t + step, &tmp, &mut k[5]);
            for i in 0..n {
                y_new[i] = y[i] + step * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
            }
            f(t + step, &y_new, &mut k[6]);

            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
                let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                return Err(Error::Step { t, h: step });
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a shortened final step says nothing about the natural step
                if !last || step >= h {
                    h = step * grow;
                }
            } else {
                h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            }
            if h <= f64::EPSILON * t.abs().max(1.0) * 4.0 {
                return Err(Error::Step { t, h });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

fn stage(y: &[f64], k: &[Vec<f64>], out: &mut [f64], h: f64, a: &[f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (j, aj) in a.iter().enumerate() {
            acc += aj * k[j][i];
        }
        out[i] = y[i] + h * acc;
    }
}
