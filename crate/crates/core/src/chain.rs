//! Star-to-chain mapping of a discrete bath.
//!
//! A set of modes each coupled directly to one site (a star) is rotated into
//! a nearest-neighbour chain in which only the first mode touches the site.
//! The rotation is the Lanczos tridiagonalization of `diag(ω_k)` started from
//! the normalized coupling vector. Damping does not enter: chains describe the
//! undamped coupling structure only.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BathStar {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl BathStar {
    pub fn new(frequencies: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        if frequencies.len() != couplings.len() {
            return Err(Error::Shape(format!(
                "star has {} frequencies but {} couplings",
                frequencies.len(),
                couplings.len()
            )));
        }
        if frequencies.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Validation("star frequencies must be positive".into()));
        }
        if couplings.iter().any(|c| !c.is_finite()) || !couplings.iter().any(|c| c.abs() > 0.0) {
            return Err(Error::Validation("star needs at least one nonzero finite coupling".into()));
        }
        Ok(BathStar { frequencies, couplings })
    }

    pub fn total_weight(&self) -> f64 {
        self.couplings.iter().map(|c| c * c).sum()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BathChain {
    pub site_frequencies: Vec<f64>,
    /// Couplings between chain neighbours, one fewer than sites.
    pub nn_couplings: Vec<f64>,
    /// Coupling of the system to the first chain mode.
    pub head_coupling: f64,
    /// True when Lanczos terminated before exhausting the star (degenerate
    /// modes with dependent couplings); the chain is then shorter but exact.
    pub truncated: bool,
}

impl BathChain {
    pub fn len(&self) -> usize {
        self.site_frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_frequencies.is_empty()
    }
}

const BREAKDOWN_TOL: f64 = 1e-10;

/// Lanczos tridiagonalization with full reorthogonalization.
pub fn to_chain(star: &BathStar) -> Result<BathChain> {
    let star = BathStar::new(star.frequencies.clone(), star.couplings.clone())?;
    let k = star.frequencies.len();
    let head = star.total_weight().sqrt();
    let scale = star.frequencies.iter().fold(0.0f64, |m, w| m.max(w.abs()));

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut alphas = Vec::with_capacity(k);
    let mut betas = Vec::with_capacity(k.saturating_sub(1));
    let mut v: Vec<f64> = star.couplings.iter().map(|c| c / head).collect();
    let mut truncated = false;

    for step in 0..k {
        let mut w: Vec<f64> = v.iter().zip(&star.frequencies).map(|(x, f)| x * f).collect();
        let alpha: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        basis.push(v.clone());
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= alpha * vi;
        }
        if let (Some(&beta_prev), Some(prev)) = (betas.last(), basis.len().checked_sub(2).map(|i| &basis[i])) {
            for (wi, pi) in w.iter_mut().zip(prev) {
                *wi -= beta_prev * pi;
            }
        }
        for _ in 0..2 {
            for q in &basis {
                let overlap: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= overlap * qi;
                }
            }
        }
        if step + 1 == k {
            break;
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if beta <= BREAKDOWN_TOL * scale.max(1.0) {
            truncated = true;
            break;
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();
    }

    Ok(BathChain { site_frequencies: alphas, nn_couplings: betas, head_coupling: head, truncated })
}

/// Lorentzian-broadened spectral weight `Σ_k η_k² L_b(ω − ω_k)` of a star.
pub fn star_spectral_weight(star: &BathStar, omega: f64, broadening: f64) -> f64 {
    star.frequencies
        .iter()
        .zip(&star.couplings)
        .map(|(w, c)| c * c * broadening / std::f64::consts::PI / ((omega - w).powi(2) + broadening * broadening))
        .sum()
}

/// The same weight seen through the chain: `−head²·Im G₀₀(ω + ib)/π`, with
/// the head-site resolvent evaluated as a continued fraction.
pub fn chain_spectral_weight(chain: &BathChain, omega: f64, broadening: f64) -> f64 {
    let z = Complex64::new(omega, broadening);
    let n = chain.site_frequencies.len();
    let mut g = Complex64::new(0.0, 0.0);
    for k in (0..n).rev() {
        let tail = if k + 1 < n { chain.nn_couplings[k].powi(2) * g } else { Complex64::new(0.0, 0.0) };
        g = 1.0 / (z - chain.site_frequencies[k] - tail);
    }
    -chain.head_coupling.powi(2) * g.im / std::f64::consts::PI
}

/// Maximum absolute difference between star and chain spectral weights on
/// `grid`, both broadened by `broadening` (cm⁻¹).
pub fn chain_spectral_check(star: &BathStar, chain: &BathChain, grid: &[f64], broadening: f64) -> f64 {
    grid.iter()
        .map(|&w| (star_spectral_weight(star, w, broadening) - chain_spectral_weight(chain, w, broadening)).abs())
        .fold(0.0, f64::max)
}
