//! Reduced dynamics of the exciton system.
//!
//! Three propagators share one result type: secular Redfield (eigenbasis,
//! Pauli populations plus analytically decaying coherences), stochastic
//! Haken–Strobl–Reineker trajectories with classical site-energy noise, and a
//! deterministic Lindblad pure-dephasing solver whose solution is the exact
//! white-noise average of the trajectories.
//!
//! Dephasing strengths `γ` are given in cm⁻¹ and enter as the rate
//! `2πc·γ` ps⁻¹; site coherences `ρ_ij` decay at the mean of the two site
//! rates. Sinks are anti-Hermitian drains with rates in ps⁻¹.

mod hsr;
mod lindblad;
pub mod ode;
mod redfield;

use num_complex::Complex64;
use serde::Serialize;

pub use hsr::{enaqt_sweep, ensemble_average, hsr_trajectory, EnaqtPoint, NoiseSeries, NoiseSource};
pub use lindblad::lindblad_dephasing_propagate;
pub use redfield::{redfield_propagate, redfield_rates, RateMatrix, DEGENERACY_TOLERANCE};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_hermitian, CMatrix};
use crate::units::angular_frequency;

/// Dephasing strength in cm⁻¹ to rate in ps⁻¹.
pub fn dephasing_rate(gamma: f64) -> f64 {
    angular_frequency(gamma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    rho: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity (1e-12), trace in `[0, 1 + 1e-9]` and positivity
    /// (eigenvalues above −1e-9).
    pub fn new(rho: CMatrix) -> Result<Self> {
        if !rho.is_square() || rho.nrows() == 0 {
            return Err(Error::Shape(format!("density matrix must be square, got {}x{}", rho.nrows(), rho.ncols())));
        }
        if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("density matrix has non-finite entries".into()));
        }
        let herm = (&rho - rho.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if herm > 1e-12 {
            return Err(Error::Validation(format!("density matrix not Hermitian (deviation {herm:e})")));
        }
        let tr = rho.trace().re;
        if !(-1e-12..=1.0 + 1e-9).contains(&tr) {
            return Err(Error::Validation(format!("density matrix trace {tr} outside [0, 1]")));
        }
        let eig = jacobi_hermitian(&rho)?;
        if let Some(&low) = eig.values.first() {
            if low < -1e-9 {
                return Err(Error::Validation(format!("density matrix not positive (eigenvalue {low:e})")));
            }
        }
        Ok(DensityMatrix { rho })
    }

    /// `|ψ⟩⟨ψ|`; `ψ` must be normalized to 1e-9.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if psi.is_empty() || (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("initial state must be normalized, |psi|^2 = {norm}")));
        }
        let n = psi.len();
        let rho = CMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj());
        DensityMatrix::new(rho)
    }

    /// Excitation localized on one site.
    pub fn site(n_sites: usize, site: usize) -> Result<Self> {
        DensityMatrix::pure(&site_state(n_sites, site)?)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }
}

/// Basis vector `|site⟩`.
pub fn site_state(n_sites: usize, site: usize) -> Result<Vec<Complex64>> {
    if site >= n_sites {
        return Err(Error::Index { index: site, len: n_sites });
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); n_sites];
    psi[site] = Complex64::new(1.0, 0.0);
    Ok(psi)
}

/// Trapping site and rate (ps⁻¹).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SinkSpec {
    pub site: usize,
    pub rate: f64,
}

impl SinkSpec {
    pub fn new(site: usize, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::Domain(format!("sink rate must be finite and >= 0, got {rate}")));
        }
        Ok(SinkSpec { site, rate })
    }

    pub(crate) fn check(&self, n_sites: usize) -> Result<()> {
        SinkSpec::new(self.site, self.rate)?;
        if self.site >= n_sites {
            return Err(Error::Index { index: self.site, len: n_sites });
        }
        Ok(())
    }
}

/// Site populations, site coherences (all pairs `i < j` in row-major order)
/// and sink capture on a time grid (ps).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `populations[t][site]`.
    pub populations: Vec<Vec<f64>>,
    /// `coherences[t][pair]`, pairs as listed by [`coherence_pairs`].
    pub coherences: Vec<Vec<Complex64>>,
    pub sink: Vec<f64>,
    /// Exciton-state populations; filled by the Redfield propagator only.
    pub exciton_populations: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn n_sites(&self) -> usize {
        self.populations.first().map_or(0, Vec::len)
    }

    /// Total population in the system plus the sink at each time.
    pub fn total(&self) -> Vec<f64> {
        self.populations.iter().zip(&self.sink).map(|(p, s)| p.iter().sum::<f64>() + s).collect()
    }

    pub(crate) fn push_density(&mut self, t: f64, rho: &CMatrix, sink: f64) {
        let n = rho.nrows();
        self.times.push(t);
        self.populations.push((0..n).map(|i| rho[(i, i)].re).collect());
        self.coherences.push(coherence_pairs(n).into_iter().map(|(i, j)| rho[(i, j)]).collect());
        self.sink.push(sink);
    }

    pub(crate) fn empty() -> Self {
        Trajectory {
            times: Vec::new(),
            populations: Vec::new(),
            coherences: Vec::new(),
            sink: Vec::new(),
            exciton_populations: Vec::new(),
        }
    }
}

/// Site pairs `(i, j)`, `i < j`, in the order used by trajectory coherences.
pub fn coherence_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Trajectory mean with per-entry standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub mean: Trajectory,
    pub population_stderr: Vec<Vec<f64>>,
    /// Standard errors of the real and imaginary parts, packed as a complex.
    pub coherence_stderr: Vec<Vec<Complex64>>,
    pub sink_stderr: Vec<f64>,
    pub n_traj: usize,
    pub base_seed: u64,
}

/// Anything carrying a sink-capture record on a time grid.
pub trait SinkRecord {
    fn times(&self) -> &[f64];
    fn sink(&self) -> &[f64];
}

impl SinkRecord for Trajectory {
    fn times(&self) -> &[f64] {
        &self.times
    }
    fn sink(&self) -> &[f64] {
        &self.sink
    }
}

impl SinkRecord for EnsembleResult {
    fn times(&self) -> &[f64] {
        &self.mean.times
    }
    fn sink(&self) -> &[f64] {
        &self.mean.sink
    }
}

/// Sink-captured population at `horizon` (ps), linearly interpolated.
pub fn efficiency<R: SinkRecord + ?Sized>(result: &R, horizon: f64) -> Result<f64> {
    interpolate(result.times(), result.sink(), horizon)
}

/// Efficiency of an ensemble with its standard error.
pub fn ensemble_efficiency(result: &EnsembleResult, horizon: f64) -> Result<(f64, f64)> {
    Ok((efficiency(result, horizon)?, interpolate(&result.mean.times, &result.sink_stderr, horizon)?))
}

fn interpolate(times: &[f64], values: &[f64], at: f64) -> Result<f64> {
    let (Some(&start), Some(&end)) = (times.first(), times.last()) else {
        return Err(Error::Horizon { horizon: at, start: f64::NAN, end: f64::NAN });
    };
    let slack = 1e-12 * end.abs().max(1.0);
    if !(at >= start - slack && at <= end + slack) {
        return Err(Error::Horizon { horizon: at, start, end });
    }
    let k = times.partition_point(|&t| t < at);
    if k == 0 {
        return Ok(values[0]);
    }
    if k == times.len() {
        return Ok(values[times.len() - 1]);
    }
    let (t0, t1) = (times[k - 1], times[k]);
    if t1 == t0 {
        return Ok(values[k]);
    }
    let w = (at - t0) / (t1 - t0);
    Ok(values[k - 1] * (1.0 - w) + values[k] * w)
}

pub(crate) fn check_time_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Grid("time grid is empty".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Grid("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// `n` evenly spaced output times `0, dt, …` up to and including `t_max`.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_max >= 0.0) || !(dt > 0.0) || !t_max.is_finite() {
        return Err(Error::Grid(format!("need t_max >= 0 and dt > 0, got {t_max}, {dt}")));
    }
    let steps = (t_max / dt - 1e-9).ceil().max(0.0) as usize;
    Ok((0..=steps).map(|k| (k as f64 * dt).min(t_max)).collect())
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::site(3, 1).is_ok());
        assert!(DensityMatrix::site(3, 3).is_err());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure(&[Complex64::new(s, 0.0), Complex64::new(0.0, s)]).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-15);
        assert!(DensityMatrix::pure(&[Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).is_err());
        let bad = CMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.2].map(|x| Complex64::new(x, 0.0)));
        assert!(DensityMatrix::new(bad).is_err());
        let nonherm = CMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.5].map(|x| Complex64::new(x, 0.0)));
        assert!(DensityMatrix::new(nonherm).is_err());
    }

    #[test]
    fn efficiency_interpolates_and_checks_horizon() {
        let mut t = Trajectory::empty();
        let rho = CMatrix::identity(1, 1);
        t.push_density(0.0, &rho, 0.0);
        t.push_density(1.0, &rho, 0.4);
        assert!((efficiency(&t, 0.5).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(efficiency(&t, 1.0).unwrap(), 0.4);
        assert!(matches!(efficiency(&t, 1.5), Err(Error::Horizon { .. })));
        assert!(matches!(efficiency(&t, -0.1), Err(Error::Horizon { .. })));
    }

    #[test]
    fn grids() {
        assert_eq!(time_grid(1.0, 0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(time_grid(0.0, 0.1).unwrap(), vec![0.0]);
        assert_eq!(*time_grid(1.0, 0.3).unwrap().last().unwrap(), 1.0);
        assert!(time_grid(1.0, 0.0).is_err());
        assert_eq!(coherence_pairs(3), vec![(0, 1), (0, 2), (1, 2)]);
    }
}
