//! Secular Redfield rates and propagation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::ode::{integrate, OdeOptions};
use super::{check_time_grid, DensityMatrix, Trajectory};
use crate::error::{Error, Result};
use crate::exciton::{check_sd_count, weighted_density, EigenSystem};
use crate::linalg::CMatrix;
use crate::spectral::{positive_thermal, SpectralDensity};
use crate::units::{angular_frequency, bose_occupation_wavenumber, Quantity};

/// Exciton gaps below this (cm⁻¹) are treated as degenerate: no secular rate.
pub const DEGENERACY_TOLERANCE: f64 = 0.1;

/// Relaxation rates between exciton states (ps⁻¹). For `m > n` (so
/// `E_m ≥ E_n`), `down[(m, n)]` is the rate `m → n` and `up[(m, n)]` the rate
/// `n → m`; other entries are zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateMatrix {
    pub energies: Vec<f64>,
    pub down: DMatrix<f64>,
    pub up: DMatrix<f64>,
}

impl RateMatrix {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `W[(to, from)]`: rate from state `from` into state `to`.
    pub fn transfer(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut w = DMatrix::zeros(n, n);
        for m in 0..n {
            for k in 0..m {
                w[(k, m)] = self.down[(m, k)];
                w[(m, k)] = self.up[(m, k)];
            }
        }
        w
    }

    /// Total rate out of each state.
    pub fn outflow(&self) -> Vec<f64> {
        let w = self.transfer();
        (0..self.len()).map(|from| w.column(from).sum()).collect()
    }
}

/// `Γ↓ = 2π γ_MN J(ω_MN) [n(ω_MN) + 1]`, `Γ↑ = 2π γ_MN J(ω_MN) n(ω_MN)`, with
/// `J` converted from cm⁻¹ to rad/ps.
pub fn redfield_rates(eig: &EigenSystem, sds: &[SpectralDensity], temperature: Quantity) -> Result<RateMatrix> {
    let kt = positive_thermal(temperature)?;
    check_sd_count(sds, eig.len())?;
    let n = eig.len();
    let mut down = DMatrix::zeros(n, n);
    let mut up = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..m {
            let gap = eig.energies[m] - eig.energies[k];
            if gap < DEGENERACY_TOLERANCE {
                continue;
            }
            let weight = weighted_density(eig, sds, m, k, gap);
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::Domain(format!("spectral density not evaluable at gap {gap} cm^-1")));
            }
            let occupation = bose_occupation_wavenumber(gap, kt)?;
            let base = 2.0 * std::f64::consts::PI * angular_frequency(weight);
            down[(m, k)] = base * (occupation + 1.0);
            up[(m, k)] = base * occupation;
        }
    }
    Ok(RateMatrix { energies: eig.energies.clone(), down, up })
}

/// Pauli master equation for exciton populations; coherences `ρ_MN` oscillate
/// at `ω_MN` and decay at half the summed outflow of `M` and `N` plus
/// `dephasing_extra` (ps⁻¹). The result is reported in the site basis.
pub fn redfield_propagate(
    eig: &EigenSystem,
    rates: &RateMatrix,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    dephasing_extra: f64,
) -> Result<Trajectory> {
    let n = eig.len();
    if rates.len() != n || rho0.dim() != n {
        return Err(Error::Shape(format!(
            "eigensystem has {n} states, rates {}, density matrix {}",
            rates.len(),
            rho0.dim()
        )));
    }
    if !(dephasing_extra >= 0.0) {
        return Err(Error::Domain(format!("extra dephasing must be >= 0, got {dephasing_extra}")));
    }
    check_time_grid(t_grid)?;

    let v = &eig.vectors;
    let rho_e: CMatrix = v.adjoint() * rho0.matrix() * v;
    let p0: Vec<f64> = (0..n).map(|m| rho_e[(m, m)].re).collect();
    let w = rates.transfer();
    let out = rates.outflow();
    let pops = integrate(
        |_, p, dp| {
            for to in 0..n {
                let mut acc = -out[to] * p[to];
                for from in 0..n {
                    acc += w[(to, from)] * p[from];
                }
                dp[to] = acc;
            }
        },
        &p0,
        t_grid,
        &OdeOptions::default(),
    )?;

    let t0 = t_grid[0];
    let mut traj = Trajectory::empty();
    for (&t, p) in t_grid.iter().zip(&pops) {
        let dt = t - t0;
        let rho_t = CMatrix::from_fn(n, n, |a, b| {
            if a == b {
                Complex64::new(p[a], 0.0)
            } else {
                let decay = 0.5 * (out[a] + out[b]) + dephasing_extra;
                let phase = angular_frequency(eig.energies[a] - eig.energies[b]);
                rho_e[(a, b)] * Complex64::new(-decay * dt, -phase * dt).exp()
            }
        });
        let site = v * rho_t * v.adjoint();
        traj.push_density(t, &site, 0.0);
        traj.exciton_populations.push(p.clone());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exciton::{eigendecompose, model_from_matrix};
    use crate::units::thermal_wavenumber;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn so() -> Vec<SpectralDensity> {
        vec![SpectralDensity::super_ohmic(35.0, 150.0).unwrap()]
    }

    fn dimer(delta: f64, v: f64) -> EigenSystem {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, v, v, delta]);
        eigendecompose(&model_from_matrix(&h).unwrap()).unwrap()
    }

    fn random_model(seed: u64, n: usize) -> EigenSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = DMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = rng.random_range(0.0..400.0);
            for j in 0..i {
                let v = rng.random_range(-80.0..80.0);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        eigendecompose(&model_from_matrix(&h).unwrap()).unwrap()
    }

    #[test]
    fn zero_density_gives_zero_rates() {
        let r = redfield_rates(&dimer(100.0, 20.0), &[SpectralDensity::Zero], Quantity::kelvin(300.0)).unwrap();
        assert!(r.down.iter().chain(r.up.iter()).all(|&x| x == 0.0));
    }

    #[test]
    fn symmetric_dimer_rate_by_hand() {
        // gap 2V = 200 cm⁻¹, γ = 1/2
        let eig = dimer(0.0, 100.0);
        let r = redfield_rates(&eig, &so(), Quantity::kelvin(300.0)).unwrap();
        let x: f64 = 200.0 / 150.0;
        let j = 35.0 * x * x * (-x).exp();
        let kt = 0.6950348004 * 300.0;
        let n = 1.0 / ((200.0f64 / kt).exp() - 1.0);
        let expected = 2.0 * std::f64::consts::PI * 0.5 * j * (n + 1.0) * 2.0 * std::f64::consts::PI * 0.0299792458;
        assert!((r.down[(1, 0)] / expected - 1.0).abs() < 1e-12, "{} vs {expected}", r.down[(1, 0)]);
        assert!((r.down[(1, 0)] - 15.73).abs() < 0.01, "{}", r.down[(1, 0)]);
    }

    #[test]
    fn detailed_balance_at_thermal_gap() {
        // gap equal to k_B T
        let kt = thermal_wavenumber(300.0);
        let eig = dimer(kt, 0.0);
        let r = redfield_rates(&eig, &so(), Quantity::kelvin(300.0)).unwrap();
        // uncoupled sites: γ = 0, so no transfer
        assert_eq!(r.down[(1, 0)], 0.0);
        let eig = dimer((kt * kt - 4.0 * 25.0f64.powi(2)).sqrt(), 25.0);
        let r = redfield_rates(&eig, &so(), Quantity::kelvin(300.0)).unwrap();
        assert!((eig.energies[1] - eig.energies[0] - kt).abs() < 1e-9);
        assert!((r.down[(1, 0)] / r.up[(1, 0)] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn degenerate_states_have_no_rate() {
        let h = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 30.0, 0.0, 0.05, 30.0, 30.0, 30.0, 200.0]);
        let eig = eigendecompose(&model_from_matrix(&h).unwrap()).unwrap();
        let r = redfield_rates(&eig, &so(), Quantity::kelvin(300.0)).unwrap();
        for m in 0..3 {
            for k in 0..m {
                if eig.energies[m] - eig.energies[k] < DEGENERACY_TOLERANCE {
                    assert_eq!(r.down[(m, k)], 0.0);
                }
            }
        }
        assert!(redfield_rates(&eig, &so(), Quantity::wavenumber(200.0)).is_err());
        assert!(redfield_rates(&eig, &so(), Quantity::kelvin(0.0)).is_err());
    }

    #[test]
    fn two_level_relaxation_closed_form() {
        let eig = dimer(150.0, 40.0);
        let rates = redfield_rates(&eig, &so(), Quantity::kelvin(300.0)).unwrap();
        let (gd, gu) = (rates.down[(1, 0)], rates.up[(1, 0)]);
        // start in the upper exciton state
        let psi: Vec<Complex64> = eig.vectors.column(1).iter().copied().collect();
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.01).collect();
        let traj = redfield_propagate(&eig, &rates, &rho0, &grid, 0.0).unwrap();
        let p_eq = gu / (gu + gd);
        for (t, p) in grid.iter().zip(&traj.exciton_populations) {
            let exact = p_eq + (1.0 - p_eq) * (-(gu + gd) * t).exp();
            assert!((p[1] - exact).abs() < 1e-8, "t={t}: {} vs {exact}", p[1]);
            assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rates_keep_eigenstate() {
        let eig = dimer(150.0, 40.0);
        let rates = redfield_rates(&eig, &[SpectralDensity::Zero], Quantity::kelvin(300.0)).unwrap();
        let psi: Vec<Complex64> = eig.vectors.column(0).iter().copied().collect();
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let traj = redfield_propagate(&eig, &rates, &rho0, &[0.0, 0.5, 1.0], 0.0).unwrap();
        for p in &traj.populations {
            for (a, b) in p.iter().zip(&traj.populations[0]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn coherences_decay_to_exciton_mixture() {
        let eig = dimer(150.0, 40.0);
        let rates = redfield_rates(&eig, &so(), Quantity::kelvin(300.0)).unwrap();
        let rho0 = DensityMatrix::site(2, 0).unwrap();
        let grid: Vec<f64> = (0..=200).map(|k| k as f64 * 0.01).collect();
        let traj = redfield_propagate(&eig, &rates, &rho0, &grid, 5.0).unwrap();
        // once exciton coherences are gone the site matrix is V diag(p) V†
        let mixture = |k: usize| {
            let p = &traj.exciton_populations[k];
            (0..2).map(|m| eig.vectors[(0, m)] * eig.vectors[(1, m)].conj() * p[m]).sum::<Complex64>()
        };
        assert!((traj.coherences[0][0] - mixture(0)).norm() > 0.1);
        assert!((traj.coherences[200][0] - mixture(200)).norm() < 1e-6);
        for tot in traj.total() {
            assert!((tot - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn step_refinement_is_below_tolerance() {
        let eig = random_model(3, 4);
        let rates = redfield_rates(&eig, &so(), Quantity::kelvin(77.0)).unwrap();
        let rho0 = DensityMatrix::site(4, 3).unwrap();
        let coarse: Vec<f64> = (0..=10).map(|k| k as f64 * 0.2).collect();
        let fine: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let a = redfield_propagate(&eig, &rates, &rho0, &coarse, 0.0).unwrap();
        let b = redfield_propagate(&eig, &rates, &rho0, &fine, 0.0).unwrap();
        for (k, p) in a.populations.iter().enumerate() {
            for (x, y) in p.iter().zip(&b.populations[2 * k]) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn boltzmann_fixed_point(seed in 0u64..1000, kelvin in 77.0f64..350.0) {
            let eig = random_model(seed, 4);
            let rates = redfield_rates(&eig, &so(), Quantity::kelvin(kelvin)).unwrap();
            // ratios hold to rounding for every pair
            for m in 0..4 {
                for k in 0..m {
                    if rates.up[(m, k)] > 0.0 {
                        let gap = eig.energies[m] - eig.energies[k];
                        let expected = (gap / thermal_wavenumber(kelvin)).exp();
                        prop_assert!((rates.down[(m, k)] / rates.up[(m, k)] / expected - 1.0).abs() < 1e-12);
                    }
                }
            }
            let slowest = {
                let w = rates.transfer();
                let out = rates.outflow();
                let mut gen = DMatrix::zeros(4, 4);
                for i in 0..4 {
                    for j in 0..4 {
                        gen[(i, j)] = w[(i, j)];
                    }
                    gen[(i, i)] = -out[i];
                }
                let ev = gen.complex_eigenvalues();
                ev.iter().map(|z| -z.re).filter(|r| *r > 1e-9).fold(f64::INFINITY, f64::min)
            };
            prop_assume!(slowest.is_finite() && slowest > 0.05);
            let horizon = 40.0 / slowest;
            let rho0 = DensityMatrix::site(4, 0).unwrap();
            let traj = redfield_propagate(&eig, &rates, &rho0, &[0.0, horizon], 0.0).unwrap();
            let kt = thermal_wavenumber(kelvin);
            let weights: Vec<f64> = eig.energies.iter().map(|e| (-(e - eig.energies[0]) / kt).exp()).collect();
            let z: f64 = weights.iter().sum();
            for (p, w) in traj.exciton_populations[1].iter().zip(&weights) {
                prop_assert!((p - w / z).abs() < 1e-6, "{} vs {}", p, w / z);
            }
        }
    }
}
