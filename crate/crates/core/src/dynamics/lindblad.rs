//! Deterministic pure-dephasing master equation.

use nalgebra::DVector;
use num_complex::Complex64;

use super::ode::{integrate, OdeOptions};
use super::{check_time_grid, dephasing_rate, DensityMatrix, SinkSpec, Trajectory};
use crate::error::{Error, Result};
use crate::exciton::ExcitonModel;
use crate::linalg::{jacobi_hermitian, CMatrix};
use crate::units::angular_frequency;

/// `dρ/dt = −i·2πc[H, ρ] − D∘ρ − (k/2){|s⟩⟨s|, ρ}` where `D_ij` is
/// `(g_i + g_j)/2` off the diagonal and zero on it, `g_j = 2πc·γ_j`. The
/// captured population `∫ k ρ_ss dt` is integrated alongside, so trace plus
/// capture is a linear invariant that the integrator preserves.
pub fn lindblad_dephasing_propagate(
    model: &ExcitonModel,
    gamma: &[f64],
    sink: Option<SinkSpec>,
    rho0: &DensityMatrix,
    t_grid: &[f64],
) -> Result<Trajectory> {
    let n = model.n_sites();
    if gamma.len() != n || rho0.dim() != n {
        return Err(Error::Shape(format!(
            "model has {n} sites, {} dephasing strengths, density matrix {}",
            gamma.len(),
            rho0.dim()
        )));
    }
    if gamma.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
        return Err(Error::Domain("dephasing strengths must be finite and >= 0".into()));
    }
    if let Some(s) = sink {
        s.check(n)?;
    }
    check_time_grid(t_grid)?;

    let rates: Vec<f64> = gamma.iter().map(|&g| dephasing_rate(g)).collect();
    // the coherent part is removed exactly by working in the interaction
    // picture of H, so a dissipation-free run is exact to rounding
    let eig = jacobi_hermitian(&model.hamiltonian_complex())?;
    let omega: Vec<f64> = eig.values.iter().map(|&e| angular_frequency(e)).collect();
    let v = eig.vectors;
    let t0 = t_grid[0];
    let evolution = |t: f64| {
        let phases = CMatrix::from_diagonal(&DVector::from_iterator(
            n,
            omega.iter().map(|w| Complex64::from_polar(1.0, -w * (t - t0))),
        ));
        &v * phases * v.adjoint()
    };
    let dissipative = !rates.iter().all(|&g| g == 0.0) || sink.is_some_and(|s| s.rate > 0.0);

    let nn = n * n;
    let mut y0 = vec![0.0; 2 * nn + 1];
    for (k, z) in rho0.matrix().iter().enumerate() {
        y0[k] = z.re;
        y0[nn + k] = z.im;
    }

    let sols = integrate(
        |t, y, dy| {
            if !dissipative {
                dy.iter_mut().for_each(|d| *d = 0.0);
                return;
            }
            let u = evolution(t);
            let rho = &u * unpack(y, n) * u.adjoint();
            let mut d = CMatrix::zeros(n, n);
            for j in 0..n {
                for i in 0..n {
                    if i != j {
                        d[(i, j)] = -rho[(i, j)] * (0.5 * (rates[i] + rates[j]));
                    }
                }
            }
            if let Some(s) = sink {
                let half = 0.5 * s.rate;
                for k in 0..n {
                    d[(s.site, k)] -= rho[(s.site, k)] * half;
                    d[(k, s.site)] -= rho[(k, s.site)] * half;
                }
            }
            let d = u.adjoint() * d * &u;
            for (k, z) in d.iter().enumerate() {
                dy[k] = z.re;
                dy[nn + k] = z.im;
            }
            dy[2 * nn] = sink.map_or(0.0, |s| s.rate * rho[(s.site, s.site)].re);
        },
        &y0,
        t_grid,
        &OdeOptions::default(),
    )?;

    let mut traj = Trajectory::empty();
    for (&t, y) in t_grid.iter().zip(&sols) {
        let u = evolution(t);
        traj.push_density(t, &(&u * unpack(y, n) * u.adjoint()), y[2 * nn]);
    }
    Ok(traj)
}

fn unpack(y: &[f64], n: usize) -> CMatrix {
    let nn = n * n;
    CMatrix::from_iterator(n, n, (0..nn).map(|k| Complex64::new(y[k], y[nn + k])))
}
