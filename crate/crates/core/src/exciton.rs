//! Site-basis exciton Hamiltonian, its eigenbasis, and transfer pathways.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_hermitian, CMatrix};
use crate::spectral::SpectralDensity;

/// Range of site-energy differences regarded as typical, cm⁻¹.
pub const SITE_GAP_RANGE: (f64, f64) = (10.0, 500.0);
/// Range of inter-site coupling magnitudes regarded as typical, cm⁻¹.
pub const COUPLING_RANGE: (f64, f64) = (10.0, 122.0);

/// Raw model input: energies and a list of couplings, 0-based site indices.
#[derive(Debug, Clone, Default)]
pub struct ModelConfig {
    pub site_energies: Vec<f64>,
    /// `(i, j, V_ij)` entries. Each unordered pair may appear once or twice;
    /// when twice, both values must agree.
    pub couplings: Vec<(usize, usize, f64)>,
    pub disorder_sigma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RangeWarning {
    SiteGap { i: usize, j: usize, gap: f64 },
    Coupling { i: usize, j: usize, value: f64 },
}

impl std::fmt::Display for RangeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RangeWarning::SiteGap { i, j, gap } => write!(
                f,
                "|e_{} - e_{}| = {gap:.2} cm^-1 outside [{}, {}] cm^-1",
                i + 1,
                j + 1,
                SITE_GAP_RANGE.0,
                SITE_GAP_RANGE.1
            ),
            RangeWarning::Coupling { i, j, value } => write!(
                f,
                "|V_{}{}| = {:.2} cm^-1 outside [{}, {}] cm^-1",
                i + 1,
                j + 1,
                value.abs(),
                COUPLING_RANGE.0,
                COUPLING_RANGE.1
            ),
        }
    }
}

/// Electronic Hamiltonian in the single-excitation site basis (cm⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonModel {
    site_energies: Vec<f64>,
    couplings: DMatrix<f64>,
    disorder_sigma: Option<Vec<f64>>,
}

impl ExcitonModel {
    pub fn n_sites(&self) -> usize {
        self.site_energies.len()
    }

    pub fn site_energies(&self) -> &[f64] {
        &self.site_energies
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[(i, j)]
    }

    pub fn couplings(&self) -> &DMatrix<f64> {
        &self.couplings
    }

    pub fn disorder_sigma(&self) -> Option<&[f64]> {
        self.disorder_sigma.as_deref()
    }

    pub fn with_disorder(mut self, sigma: Vec<f64>) -> Result<Self> {
        check_sigma(&sigma, self.n_sites())?;
        self.disorder_sigma = Some(sigma);
        Ok(self)
    }

    /// Same couplings, new site energies.
    pub fn with_site_energies(&self, energies: Vec<f64>) -> Result<Self> {
        if energies.len() != self.n_sites() {
            return Err(Error::Shape(format!("expected {} site energies, got {}", self.n_sites(), energies.len())));
        }
        Ok(ExcitonModel { site_energies: energies, ..self.clone() })
    }

    /// Largest |V_ij|.
    pub fn max_coupling(&self) -> f64 {
        self.couplings.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn hamiltonian(&self) -> DMatrix<f64> {
        let mut h = self.couplings.clone();
        for (i, e) in self.site_energies.iter().enumerate() {
            h[(i, i)] = *e;
        }
        h
    }

    pub fn hamiltonian_complex(&self) -> CMatrix {
        self.hamiltonian().map(|x| Complex64::new(x, 0.0))
    }

    pub fn range_warnings(&self) -> Vec<RangeWarning> {
        let n = self.n_sites();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let gap = (self.site_energies[i] - self.site_energies[j]).abs();
                if gap < SITE_GAP_RANGE.0 || gap > SITE_GAP_RANGE.1 {
                    out.push(RangeWarning::SiteGap { i, j, gap });
                }
                let v = self.couplings[(i, j)];
                if v != 0.0 && (v.abs() < COUPLING_RANGE.0 || v.abs() > COUPLING_RANGE.1) {
                    out.push(RangeWarning::Coupling { i, j, value: v });
                }
            }
        }
        out
    }
}

fn check_sigma(sigma: &[f64], n: usize) -> Result<()> {
    if sigma.len() != n {
        return Err(Error::Shape(format!("disorder sigma has {} entries for {} sites", sigma.len(), n)));
    }
    if sigma.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Validation("disorder sigma must be non-negative".into()));
    }
    Ok(())
}

/// Validates `config` and builds the model, returning any out-of-range
/// warnings alongside it.
pub fn build_model(config: &ModelConfig) -> Result<(ExcitonModel, Vec<RangeWarning>)> {
    let n = config.site_energies.len();
    if n == 0 {
        return Err(Error::Shape("model needs at least one site".into()));
    }
    if config.site_energies.iter().any(|e| !e.is_finite()) {
        return Err(Error::Validation("site energies must be finite".into()));
    }
    let mut v = DMatrix::<f64>::zeros(n, n);
    let mut seen = DMatrix::<bool>::from_element(n, n, false);
    for &(i, j, value) in &config.couplings {
        if i >= n || j >= n {
            return Err(Error::Shape(format!(
                "coupling ({}, {}) refers to a site beyond {}",
                i + 1,
                j + 1,
                n
            )));
        }
        if i == j {
            if value != 0.0 {
                return Err(Error::Validation(format!("diagonal coupling V_{0}{0} must be zero", i + 1)));
            }
            continue;
        }
        if !value.is_finite() {
            return Err(Error::Validation(format!("coupling V_{}{} is not finite", i + 1, j + 1)));
        }
        if seen[(i, j)] && v[(i, j)] != value {
            return Err(Error::Validation(format!(
                "asymmetric coupling: V_{}{} = {} but V_{}{} = {}",
                i + 1,
                j + 1,
                value,
                j + 1,
                i + 1,
                v[(i, j)]
            )));
        }
        v[(i, j)] = value;
        v[(j, i)] = value;
        seen[(i, j)] = true;
        seen[(j, i)] = true;
    }
    if let Some(s) = &config.disorder_sigma {
        check_sigma(s, n)?;
    }
    let model = ExcitonModel {
        site_energies: config.site_energies.clone(),
        couplings: v,
        disorder_sigma: config.disorder_sigma.clone(),
    };
    let warnings = model.range_warnings();
    Ok((model, warnings))
}

/// Builds a model from a full symmetric matrix whose diagonal holds the site
/// energies.
pub fn model_from_matrix(h: &DMatrix<f64>) -> Result<ExcitonModel> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::Shape(format!("Hamiltonian is {}x{}", n, h.ncols())));
    }
    let mut cfg = ModelConfig { site_energies: (0..n).map(|i| h[(i, i)]).collect(), ..Default::default() };
    for i in 0..n {
        for j in 0..n {
            if i != j {
                cfg.couplings.push((i, j, h[(i, j)]));
            }
        }
    }
    build_model(&cfg).map(|(m, _)| m)
}

/// Exciton energies `E_M` (ascending, cm⁻¹) and states `⟨j|M⟩` as columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `|⟨j|M⟩|²`.
    pub fn site_weight(&self, site: usize, state: usize) -> f64 {
        self.vectors[(site, state)].norm_sqr()
    }
}

pub fn eigendecompose(model: &ExcitonModel) -> Result<EigenSystem> {
    let eig = jacobi_hermitian(&model.hamiltonian_complex())?;
    Ok(EigenSystem { energies: eig.values, vectors: eig.vectors })
}

/// `γ_MN = Σ_j |⟨M|j⟩|² |⟨j|N⟩|²`.
pub fn gamma_factor(eig: &EigenSystem, m: usize, n: usize) -> Result<f64> {
    let len = eig.len();
    for idx in [m, n] {
        if idx >= len {
            return Err(Error::Index { index: idx, len });
        }
    }
    Ok((0..len).map(|j| eig.site_weight(j, m) * eig.site_weight(j, n)).sum())
}

/// `Σ_j |⟨M|j⟩|²|⟨j|N⟩|² J_j(ω)`; with one shared density this is `γ_MN J(ω)`.
pub(crate) fn weighted_density(eig: &EigenSystem, sds: &[SpectralDensity], m: usize, n: usize, omega: f64) -> f64 {
    let sites = eig.len();
    if sds.len() == 1 {
        let g: f64 = (0..sites).map(|j| eig.site_weight(j, m) * eig.site_weight(j, n)).sum();
        return g * sds[0].j(omega);
    }
    (0..sites)
        .map(|j| eig.site_weight(j, m) * eig.site_weight(j, n) * sds[j].j(omega))
        .sum()
}

pub(crate) fn check_sd_count(sds: &[SpectralDensity], n: usize) -> Result<()> {
    if sds.len() == 1 || sds.len() == n {
        Ok(())
    } else {
        Err(Error::Shape(format!("expected 1 or {n} spectral densities, got {}", sds.len())))
    }
}

/// A downward transfer channel `M → N` between exciton states.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Pathway {
    pub from_state: usize,
    pub to_state: usize,
    /// `E_M − E_N` in cm⁻¹.
    pub gap: f64,
    /// `γ_MN J(ω_MN)` in cm⁻¹.
    pub weight: f64,
}

/// All downward pairs with `γ_MN J(ω_MN) ≥ threshold`, heaviest first.
pub fn pathways(eig: &EigenSystem, sds: &[SpectralDensity], threshold: f64) -> Result<Vec<Pathway>> {
    check_sd_count(sds, eig.len())?;
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::Domain(format!("pathway threshold must be >= 0, got {threshold}")));
    }
    let k = eig.len();
    let mut out = Vec::new();
    for m in 0..k {
        for n in 0..k {
            let gap = eig.energies[m] - eig.energies[n];
            if gap <= 0.0 {
                continue;
            }
            let weight = weighted_density(eig, sds, m, n, gap);
            if weight >= threshold {
                out.push(Pathway { from_state: m, to_state: n, gap, weight });
            }
        }
    }
    out.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then(a.from_state.cmp(&b.from_state))
            .then(a.to_state.cmp(&b.to_state))
    });
    Ok(out)
}

/// Draws one static-disorder realization: each site energy shifted by an
/// independent Gaussian with the configured σ.
pub fn sample_disorder(model: &ExcitonModel, seed: u64) -> Result<ExcitonModel> {
    let sigma = model.disorder_sigma.as_ref().ok_or(Error::MissingDisorderSpec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut energies = model.site_energies.clone();
    for (e, &s) in energies.iter_mut().zip(sigma) {
        let normal = Normal::new(0.0, s).map_err(|e| Error::Validation(e.to_string()))?;
        *e += normal.sample(&mut rng);
    }
    model.with_site_energies(energies)
}
