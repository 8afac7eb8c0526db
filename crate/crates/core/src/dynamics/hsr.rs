//! Stochastic Haken–Strobl–Reineker trajectories and their ensembles.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{check_time_grid, dephasing_rate, ensemble_efficiency, EnsembleResult, SinkSpec, Trajectory};
use crate::error::{Error, Result};
use crate::exciton::ExcitonModel;
use crate::linalg::CMatrix;
use crate::par;
use crate::units::{angular_frequency, SPEED_OF_LIGHT_CM_PER_PS};

/// Fraction of the shortest physical time scale used as the stochastic step.
const STEP_FRACTION: f64 = 1.0 / 500.0;

/// Per-site energy fluctuations `δε_j(t)` (cm⁻¹) sampled on a uniform grid (ps).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSeries {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl NoiseSeries {
    /// `values[k][site]` is the shift at `times[k]`.
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::Shape(format!(
                "noise series needs at least 2 rows and one value row per time (got {} times, {} rows)",
                times.len(),
                values.len()
            )));
        }
        let width = values[0].len();
        if width == 0 || values.iter().any(|r| r.len() != width) {
            return Err(Error::Shape("noise series rows must all have the same number of sites".into()));
        }
        if times.iter().chain(values.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::Validation("noise series has non-finite entries".into()));
        }
        check_uniform(&times)?;
        Ok(NoiseSeries { times, values })
    }

    /// Whitespace or comma separated columns: time in ps, then one column per
    /// site in cm⁻¹. Lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
            let row = row.map_err(|e| Error::Parse(format!("noise series line {}: {e}", lineno + 1)))?;
            if row.len() < 2 {
                return Err(Error::Parse(format!("noise series line {}: need time and at least one site", lineno + 1)));
            }
            times.push(row[0]);
            values.push(row[1..].to_vec());
        }
        NoiseSeries::new(times, values)
    }

    pub fn read(path: &Path) -> Result<Self> {
        NoiseSeries::parse(&std::fs::read_to_string(path)?)
    }

    pub fn n_sites(&self) -> usize {
        self.values[0].len()
    }

    fn covers(&self, start: f64, end: f64) -> bool {
        let slack = 1e-9 * (self.times[1] - self.times[0]);
        start >= self.times[0] - slack && end <= self.times[self.times.len() - 1] + slack
    }

    fn eval(&self, t: f64, out: &mut [f64]) {
        let k = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.values[k - 1][j] * (1.0 - w) + self.values[k][j] * w;
        }
    }
}

fn check_uniform(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("time grid must be strictly increasing".into()));
    }
    if times.len() > 2 {
        let span = times[times.len() - 1] - times[0];
        let step = span / (times.len() - 1) as f64;
        for (k, &t) in times.iter().enumerate() {
            if (t - (times[0] + k as f64 * step)).abs() > 1e-9 * span {
                return Err(Error::Grid(format!("time grid is not uniform at index {k}")));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSource {
    /// Independent white noise per site; dephasing strengths in cm⁻¹.
    White { gamma: Vec<f64> },
    TimeSeries(NoiseSeries),
}

impl NoiseSource {
    pub fn uniform_white(n_sites: usize, gamma: f64) -> Self {
        NoiseSource::White { gamma: vec![gamma; n_sites] }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            NoiseSource::White { gamma } => {
                if gamma.len() != n {
                    return Err(Error::Shape(format!("{} dephasing strengths for {n} sites", gamma.len())));
                }
                if gamma.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
                    return Err(Error::Domain("dephasing strengths must be finite and >= 0".into()));
                }
            }
            NoiseSource::TimeSeries(s) => {
                if s.n_sites() != n {
                    return Err(Error::Shape(format!("noise series has {} sites, model {n}", s.n_sites())));
                }
            }
        }
        Ok(())
    }
}

/// Non-Hermitian generator `−i·2πc·H − (k/2)|s⟩⟨s|` (ps⁻¹).
fn generator(h: &DMatrix<f64>, sink: Option<SinkSpec>) -> CMatrix {
    let mut a = h.map(|x| Complex64::new(0.0, -angular_frequency(x)));
    if let Some(s) = sink {
        a[(s.site, s.site)] -= Complex64::new(0.5 * s.rate, 0.0);
    }
    a
}

fn apply(u: &CMatrix, psi: &mut [Complex64], scratch: &mut [Complex64]) {
    let n = psi.len();
    for i in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += u[(i, j)] * psi[j];
        }
        scratch[i] = acc;
    }
    psi.copy_from_slice(scratch);
}

fn record(traj: &mut Trajectory, t: f64, psi: &[Complex64]) {
    let n = psi.len();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    traj.times.push(t);
    traj.populations.push(psi.iter().map(|z| z.norm_sqr()).collect());
    traj.coherences.push(super::coherence_pairs(n).into_iter().map(|(i, j)| psi[i] * psi[j].conj()).collect());
    traj.sink.push((1.0 - norm).max(0.0));
}

/// Largest stochastic step (ps) for the given model and noise.
fn max_step(model: &ExcitonModel, noise: &NoiseSource) -> f64 {
    let mut scale = f64::INFINITY;
    let v = model.max_coupling();
    if v > 0.0 {
        scale = scale.min(1.0 / (2.0 * SPEED_OF_LIGHT_CM_PER_PS * v));
    }
    if let NoiseSource::White { gamma } = noise {
        let g = gamma.iter().fold(0.0f64, |m, &x| m.max(dephasing_rate(x)));
        if g > 0.0 {
            scale = scale.min(1.0 / g);
        }
    }
    scale * STEP_FRACTION
}

fn substeps(interval: f64, max: f64) -> usize {
    if max.is_finite() {
        ((interval / max) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    } else {
        1
    }
}

/// One noise realization of the time-dependent Schrödinger equation with
/// fluctuating site energies and an optional anti-Hermitian sink.
///
/// White noise uses a symmetric splitting: a random phase with variance
/// `2πc·γ_j·dt/2` on each site, the exact short-time propagator, and a second
/// independent half-step phase. Averaged over noise this reproduces the
/// Lindblad dephasing map to second order in `dt`.
pub fn hsr_trajectory(
    model: &ExcitonModel,
    noise: &NoiseSource,
    sink: Option<SinkSpec>,
    psi0: &[Complex64],
    t_grid: &[f64],
    seed: u64,
) -> Result<Trajectory> {
    let n = model.n_sites();
    if psi0.len() != n {
        return Err(Error::Shape(format!("initial state has {} amplitudes for {n} sites", psi0.len())));
    }
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("initial state must be normalized, |psi|^2 = {norm}")));
    }
    if let Some(s) = sink {
        s.check(n)?;
    }
    noise.check(n)?;
    check_time_grid(t_grid)?;

    let dt_max = max_step(model, noise);
    let h = model.hamiltonian();
    let a = generator(&h, sink);
    let mut psi = psi0.to_vec();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut traj = Trajectory::empty();
    record(&mut traj, t_grid[0], &psi);

    match noise {
        NoiseSource::White { gamma } => {
            check_uniform(t_grid)?;
            if t_grid.len() < 2 {
                return Ok(traj);
            }
            let interval = t_grid[1] - t_grid[0];
            let m = substeps(interval, dt_max);
            let dt = interval / m as f64;
            let u = (&a * Complex64::new(dt, 0.0)).exp();
            let sigma: Vec<f64> = gamma.iter().map(|&g| (0.5 * dephasing_rate(g) * dt).sqrt()).collect();
            let noisy = sigma.iter().any(|&s| s > 0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let kick = |psi: &mut [Complex64], rng: &mut ChaCha8Rng| {
                for (z, &s) in psi.iter_mut().zip(&sigma) {
                    if s > 0.0 {
                        let phi: f64 = rng.sample::<f64, _>(StandardNormal) * s;
                        *z *= Complex64::from_polar(1.0, phi);
                    }
                }
            };
            for &t in &t_grid[1..] {
                for _ in 0..m {
                    if noisy {
                        kick(&mut psi, &mut rng);
                    }
                    apply(&u, &mut psi, &mut scratch);
                    if noisy {
                        kick(&mut psi, &mut rng);
                    }
                }
                record(&mut traj, t, &psi);
            }
        }
        NoiseSource::TimeSeries(series) => {
            if !series.covers(t_grid[0], t_grid[t_grid.len() - 1]) {
                return Err(Error::Grid("noise series does not cover the simulation window".into()));
            }
            let sample = series.times[1] - series.times[0];
            let dt_max = dt_max.min(sample);
            let mut shift = vec![0.0; n];
            for w in t_grid.windows(2) {
                let m = substeps(w[1] - w[0], dt_max);
                let dt = (w[1] - w[0]) / m as f64;
                for k in 0..m {
                    series.eval(w[0] + (k as f64 + 0.5) * dt, &mut shift);
                    let mut ak = a.clone();
                    for (j, s) in shift.iter().enumerate() {
                        ak[(j, j)] += Complex64::new(0.0, -angular_frequency(*s));
                    }
                    let u = (ak * Complex64::new(dt, 0.0)).exp();
                    apply(&u, &mut psi, &mut scratch);
                }
                record(&mut traj, w[1], &psi);
            }
        }
    }
    Ok(traj)
}

/// Mean and standard error over `n_traj` trajectories with seeds
/// `base_seed + index`, reduced in index order.
pub fn ensemble_average(
    model: &ExcitonModel,
    noise: &NoiseSource,
    sink: Option<SinkSpec>,
    psi0: &[Complex64],
    t_grid: &[f64],
    n_traj: usize,
    base_seed: u64,
) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(Error::Validation("n_traj must be at least 1".into()));
    }
    let runs = par::map_indexed(n_traj, |i| {
        hsr_trajectory(model, noise, sink, psi0, t_grid, base_seed.wrapping_add(i as u64))
    });
    let runs: Vec<Trajectory> = runs.into_iter().collect::<Result<_>>()?;
    Ok(reduce(runs, base_seed))
}

fn reduce(runs: Vec<Trajectory>, base_seed: u64) -> EnsembleResult {
    let count = runs.len();
    let nf = count as f64;
    let first = &runs[0];
    let (nt, ns, nc) = (first.times.len(), first.n_sites(), first.coherences.first().map_or(0, Vec::len));
    let mut pop_sum = vec![vec![0.0; ns]; nt];
    let mut pop_sq = vec![vec![0.0; ns]; nt];
    let mut coh_sum = vec![vec![Complex64::new(0.0, 0.0); nc]; nt];
    let mut coh_sq = vec![vec![Complex64::new(0.0, 0.0); nc]; nt];
    let mut sink_sum = vec![0.0; nt];
    let mut sink_sq = vec![0.0; nt];
    for r in &runs {
        for t in 0..nt {
            for s in 0..ns {
                let x = r.populations[t][s];
                pop_sum[t][s] += x;
                pop_sq[t][s] += x * x;
            }
            for c in 0..nc {
                let z = r.coherences[t][c];
                coh_sum[t][c] += z;
                coh_sq[t][c] += Complex64::new(z.re * z.re, z.im * z.im);
            }
            sink_sum[t] += r.sink[t];
            sink_sq[t] += r.sink[t] * r.sink[t];
        }
    }
    let se = |sum: f64, sq: f64| {
        if count < 2 {
            return 0.0;
        }
        let mean = sum / nf;
        ((sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0) / nf).sqrt()
    };
    let mean = Trajectory {
        times: first.times.clone(),
        populations: pop_sum.iter().map(|r| r.iter().map(|x| x / nf).collect()).collect(),
        coherences: coh_sum.iter().map(|r| r.iter().map(|z| z / nf).collect()).collect(),
        sink: sink_sum.iter().map(|x| x / nf).collect(),
        exciton_populations: Vec::new(),
    };
    EnsembleResult {
        mean,
        population_stderr: (0..nt).map(|t| (0..ns).map(|s| se(pop_sum[t][s], pop_sq[t][s])).collect()).collect(),
        coherence_stderr: (0..nt)
            .map(|t| {
                (0..nc)
                    .map(|c| {
                        Complex64::new(se(coh_sum[t][c].re, coh_sq[t][c].re), se(coh_sum[t][c].im, coh_sq[t][c].im))
                    })
                    .collect()
            })
            .collect(),
        sink_stderr: (0..nt).map(|t| se(sink_sum[t], sink_sq[t])).collect(),
        n_traj: count,
        base_seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnaqtPoint {
    /// Dephasing strength in cm⁻¹.
    pub gamma: f64,
    pub efficiency: f64,
    pub stderr: f64,
}

/// Transfer efficiency at `horizon` (ps) for each uniform dephasing strength
/// in `gammas` (cm⁻¹, ascending). Every point uses the same seeds.
pub fn enaqt_sweep(
    model: &ExcitonModel,
    gammas: &[f64],
    sink: SinkSpec,
    psi0: &[Complex64],
    horizon: f64,
    n_traj: usize,
    base_seed: u64,
) -> Result<Vec<EnaqtPoint>> {
    if gammas.is_empty() {
        return Err(Error::Validation("dephasing list is empty".into()));
    }
    if gammas.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) || gammas.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Validation("dephasing list must be finite, >= 0 and ascending".into()));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::Horizon { horizon, start: 0.0, end: f64::INFINITY });
    }
    let grid = if horizon > 0.0 { vec![0.0, horizon] } else { vec![0.0] };
    gammas
        .iter()
        .map(|&g| {
            let noise = NoiseSource::uniform_white(model.n_sites(), g);
            let ens = ensemble_average(model, &noise, Some(sink), psi0, &grid, n_traj, base_seed)?;
            let (efficiency, stderr) = ensemble_efficiency(&ens, horizon)?;
            Ok(EnaqtPoint { gamma: g, efficiency, stderr })
        })
        .collect()
}
