//! Least-squares decomposition of a temperature-dependent spectral density
//! into damped oscillators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{c_osc, Oscillator, OscillatorSet, TemperatureSd};
use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};
use crate::par;

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Multi-start attempts per round.
    pub starts: usize,
    /// Additional rounds tried when no start of a round converges.
    pub max_restarts: usize,
    pub seed: u64,
    /// Shared roll-off α in cm⁻¹; defaults to ten times the grid maximum.
    pub roll_off: Option<f64>,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { starts: 8, max_restarts: 3, seed: 0, roll_off: None, max_iterations: 400 }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub set: OscillatorSet,
    /// Relative RMS deviation between the oscillator sum and the target.
    pub residual: f64,
    /// Index of the winning multi-start.
    pub start_index: usize,
    pub grid: Vec<f64>,
    pub target: Vec<f64>,
    pub fitted: Vec<f64>,
}

/// `sqrt(mean((model − target)²)) / sqrt(mean(target²))`.
pub fn relative_rms(model: &[f64], target: &[f64]) -> f64 {
    let num: f64 = model.iter().zip(target).map(|(m, t)| (m - t) * (m - t)).sum();
    let den: f64 = target.iter().map(|t| t * t).sum();
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

/// Weighted 1-D k-means on the grid, weights given by the positive part of
/// the target. Returns `k` ascending centroids.
fn peak_centroids(grid: &[f64], target: &[f64], k: usize) -> Vec<f64> {
    let weights: Vec<f64> = target.iter().map(|t| t.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    // initial centroids at the weighted quantiles (k+1 equal-mass bins)
    let mut centroids: Vec<f64> = if total > 0.0 {
        let mut out = Vec::with_capacity(k);
        let mut acc = 0.0;
        let mut next = 1;
        for (x, w) in grid.iter().zip(&weights) {
            acc += w;
            while next <= k && acc >= total * next as f64 / (k + 1) as f64 {
                out.push(*x);
                next += 1;
            }
        }
        while out.len() < k {
            out.push(hi);
        }
        out
    } else {
        (1..=k).map(|i| lo + (hi - lo) * i as f64 / (k + 1) as f64).collect()
    };
    for _ in 0..50 {
        let mut sum = vec![0.0; k];
        let mut mass = vec![0.0; k];
        for (x, w) in grid.iter().zip(&weights) {
            let nearest = (0..k)
                .min_by(|&a, &b| (x - centroids[a]).abs().total_cmp(&(x - centroids[b]).abs()))
                .unwrap_or(0);
            sum[nearest] += w * x;
            mass[nearest] += w;
        }
        let mut moved = false;
        for i in 0..k {
            if mass[i] > 0.0 {
                let c = sum[i] / mass[i];
                moved |= (c - centroids[i]).abs() > 1e-9;
                centroids[i] = c;
            }
        }
        if !moved {
            break;
        }
    }
    centroids.sort_by(f64::total_cmp);
    let floor = (hi - lo) * 1e-3;
    centroids.iter().map(|c| c.max(floor).max(1e-6)).collect()
}

fn unpack(params: &[f64]) -> Vec<Oscillator> {
    params
        .chunks(3)
        .map(|p| Oscillator { frequency: p[0].exp(), coupling: p[1].exp(), damping: p[2].exp() })
        .collect()
}

fn initial_guess(
    centroids: &[f64],
    grid: &[f64],
    target: &[f64],
    thermal: f64,
    roll_off: f64,
    attempt: u64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    let hi = grid[grid.len() - 1];
    let lookup = |w: f64| {
        let k = grid.partition_point(|&x| x < w).min(grid.len() - 1);
        target[k].max(0.0)
    };
    let mut params = Vec::with_capacity(centroids.len() * 3);
    for &c in centroids {
        let (w0, q) = if attempt == 0 {
            (c, 1.0)
        } else {
            let jitter: f64 = rng.sample(StandardNormal);
            let q = (rng.random_range(0.3f64.ln()..5.0f64.ln())).exp();
            ((c * (0.25 * jitter).exp()).clamp(hi * 1e-3, hi), q)
        };
        let unit = Oscillator { frequency: w0, coupling: 1.0, damping: w0 / q };
        let peak = c_osc(&unit, roll_off, thermal, w0).max(1e-300);
        let eta = (0.5 * lookup(w0) / peak).sqrt().max(1e-3);
        params.extend_from_slice(&[w0.ln(), eta.ln(), (w0 / q).ln()]);
    }
    params
}

/// Scales all couplings by one factor so the starting sum best matches the
/// target in amplitude; `C_osc` is quadratic in `η`.
fn rescale_couplings(params: &mut [f64], grid: &[f64], target: &[f64], thermal: f64, roll_off: f64) {
    let oscs = unpack(params);
    let model: Vec<f64> = grid.iter().map(|&w| oscs.iter().map(|o| c_osc(o, roll_off, thermal, w)).sum()).collect();
    let mm: f64 = model.iter().map(|m| m * m).sum();
    let mt: f64 = model.iter().zip(target).map(|(m, t)| m * t).sum();
    if mm > 0.0 && mt > 0.0 && (mt / mm).is_finite() {
        let shift = 0.5 * (mt / mm).ln();
        params.chunks_mut(3).for_each(|p| p[1] += shift);
    }
}

/// Fits `count` damped oscillators to `target` sampled on `grid`.
///
/// Levenberg–Marquardt on log-parameters `(ln ω₀, ln η, ln κ₀)` with a shared,
/// fixed roll-off. Starts are seeded from weighted k-means centroids of the
/// target curve (start 0 unperturbed, later starts jittered) and the lowest
/// residual wins, ties going to the lowest start index.
pub fn fit_oscillators(target: &TemperatureSd, count: usize, grid: &[f64], opts: &FitOptions) -> Result<FitResult> {
    if count == 0 {
        return Err(Error::Validation("oscillator count must be at least 1".into()));
    }
    if grid.len() < 3 * count {
        return Err(Error::Validation(format!(
            "fit grid of {} points cannot determine {} parameters",
            grid.len(),
            3 * count
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation("fit grid must be strictly ascending".into()));
    }
    let thermal = target.thermal;
    let grid_max = grid[grid.len() - 1].abs().max(grid[0].abs());
    let roll_off = opts.roll_off.unwrap_or(10.0 * grid_max);
    if !(roll_off > 0.0) {
        return Err(Error::Domain(format!("roll-off alpha must be positive, got {roll_off}")));
    }
    let values: Vec<f64> = grid.iter().map(|&w| target.eval(w)).collect();
    let centroids = peak_centroids(grid, &values, count);
    let lm = LmOptions { max_iterations: opts.max_iterations, ..LmOptions::default() };

    // steps leaving this box are rejected; outside it an oscillator stops
    // contributing on the grid and its gradient vanishes
    let (lo, hi) = ((1e-4 * grid_max).ln(), (1e2 * grid_max).ln());
    let admissible = |p: &[f64]| {
        p.chunks(3).all(|q| (lo..=hi).contains(&q[0]) && (-30.0..=15.0).contains(&q[1]) && (lo..=hi).contains(&q[2]))
    };
    let residual_fn = |p: &[f64], out: &mut [f64]| {
        if !admissible(p) {
            return false;
        }
        let oscs = unpack(p);
        for (i, &w) in grid.iter().enumerate() {
            let m: f64 = oscs.iter().map(|o| c_osc(o, roll_off, thermal, w)).sum();
            out[i] = m - values[i];
        }
        out.iter().all(|v| v.is_finite())
    };

    let starts = opts.starts.max(1);
    for round in 0..=opts.max_restarts {
        let base = (round * starts) as u64;
        let outcomes = par::map_indexed(starts, |i| {
            let attempt = base + i as u64;
            let mut x0 = initial_guess(&centroids, grid, &values, thermal, roll_off, attempt, opts.seed);
            rescale_couplings(&mut x0, grid, &values, thermal, roll_off);
            levenberg_marquardt(residual_fn, &x0, grid.len(), &lm).map(|rep| {
                let oscs = unpack(&rep.params);
                let model: Vec<f64> = grid
                    .iter()
                    .map(|&w| oscs.iter().map(|o| c_osc(o, roll_off, thermal, w)).sum())
                    .collect();
                (relative_rms(&model, &values), oscs, model)
            })
        });
        let best = outcomes
            .into_iter()
            .enumerate()
            .filter_map(|(i, o)| o.filter(|(r, _, _)| r.is_finite()).map(|o| (i, o)))
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.0.cmp(&b.0)));
        if let Some((i, (residual, mut oscs, fitted))) = best {
            oscs.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
            return Ok(FitResult {
                set: OscillatorSet::new(oscs, roll_off)?,
                residual,
                start_index: round * starts + i,
                grid: grid.to_vec(),
                target: values,
                fitted,
            });
        }
    }
    Err(Error::FitConvergence { attempts: starts * (opts.max_restarts + 1) })
}

/// Uniform grid of `points` samples over `[0, upper]`.
pub fn uniform_grid(upper: f64, points: usize) -> Vec<f64> {
    let n = points.max(2);
    (0..n).map(|i| upper * i as f64 / (n - 1) as f64).collect()
}
