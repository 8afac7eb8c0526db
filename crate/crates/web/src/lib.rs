//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string, so the page
//! needs nothing beyond `JSON.parse`.

use excisim::dynamics::{efficiency, lindblad_dephasing_propagate, time_grid, DensityMatrix, SinkSpec};
use excisim::exciton::{build_model, ExcitonModel, ModelConfig};
use excisim::spectral::{fit_oscillators, temperature_transform, uniform_grid, FitOptions, SpectralDensity};
use excisim::units::Quantity;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct OscillatorRow {
    omega0: f64,
    eta: f64,
    kappa0: f64,
    quality: f64,
}

#[derive(Serialize)]
struct FitOut {
    residual: f64,
    roll_off: f64,
    grid: Vec<f64>,
    target: Vec<f64>,
    fitted: Vec<f64>,
    oscillators: Vec<OscillatorRow>,
}

#[derive(Serialize)]
struct DimerOut {
    times: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    coherence: Vec<f64>,
}

#[derive(Serialize)]
struct EnaqtOut {
    gamma: Vec<f64>,
    efficiency: Vec<f64>,
}

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Fits `count` damped oscillators to a super-Ohmic bath at `temperature` K.
/// Energies in cm⁻¹.
pub fn fit_super_ohmic(
    reorganization: f64,
    cutoff: f64,
    temperature: f64,
    count: usize,
    grid_max: f64,
    points: usize,
) -> excisim::Result<String> {
    let sd = SpectralDensity::super_ohmic(reorganization, cutoff)?;
    let target = temperature_transform(&sd, Quantity::kelvin(temperature))?;
    let grid = uniform_grid(grid_max, points);
    let opts = FitOptions { starts: 4, max_restarts: 1, ..Default::default() };
    let fit = fit_oscillators(&target, count, &grid, &opts)?;
    let oscillators = fit
        .set
        .oscillators
        .iter()
        .map(|o| OscillatorRow { omega0: o.frequency, eta: o.coupling, kappa0: o.damping, quality: o.quality_factor() })
        .collect();
    let out = FitOut {
        residual: fit.residual,
        roll_off: fit.set.roll_off,
        grid: fit.grid,
        target: fit.target,
        fitted: fit.fitted,
        oscillators,
    };
    Ok(serde_json::to_string(&out).expect("plain numeric record"))
}

fn chain(energies: Vec<f64>, coupling: f64) -> excisim::Result<ExcitonModel> {
    let n = energies.len();
    let cfg = ModelConfig {
        site_energies: energies,
        couplings: (1..n).map(|i| (i - 1, i, coupling)).collect(),
        disorder_sigma: None,
    };
    Ok(build_model(&cfg)?.0)
}

/// Dimer populations under uniform pure dephasing `gamma` (cm⁻¹), starting
/// on site 1. `coherence` is `|ρ₁₂|`.
pub fn dimer(gap: f64, coupling: f64, gamma: f64, t_max: f64, dt: f64) -> excisim::Result<String> {
    let model = chain(vec![gap, 0.0], coupling)?;
    let times = time_grid(t_max, dt)?;
    let traj = lindblad_dephasing_propagate(&model, &[gamma; 2], None, &DensityMatrix::site(2, 0)?, &times)?;
    let out = DimerOut {
        p1: traj.populations.iter().map(|p| p[0]).collect(),
        p2: traj.populations.iter().map(|p| p[1]).collect(),
        coherence: traj.coherences.iter().map(|c| c[0].norm()).collect(),
        times: traj.times,
    };
    Ok(serde_json::to_string(&out).expect("plain numeric record"))
}

/// Transfer efficiency along a chain with the sink on the last site, for
/// `points` dephasing strengths spaced logarithmically in `[gamma_min,
/// gamma_max]`. Uses the ensemble-averaged (Lindblad) description of white
/// dephasing noise, so the curve is deterministic.
pub fn enaqt(
    energies: Vec<f64>,
    coupling: f64,
    sink_rate: f64,
    horizon: f64,
    gamma_min: f64,
    gamma_max: f64,
    points: usize,
) -> excisim::Result<String> {
    if !(gamma_min > 0.0 && gamma_max > gamma_min) || points < 2 {
        return Err(excisim::Error::Validation("need 0 < gamma_min < gamma_max and at least 2 points".into()));
    }
    let model = chain(energies, coupling)?;
    let n = model.n_sites();
    let sink = SinkSpec::new(n - 1, sink_rate)?;
    let rho0 = DensityMatrix::site(n, 0)?;
    let times = time_grid(horizon, horizon / 50.0)?;
    let ratio = (gamma_max / gamma_min).ln() / (points - 1) as f64;
    let gamma: Vec<f64> = (0..points).map(|k| gamma_min * (ratio * k as f64).exp()).collect();
    let mut eff = Vec::with_capacity(points);
    for &g in &gamma {
        let traj = lindblad_dephasing_propagate(&model, &vec![g; n], Some(sink), &rho0, &times)?;
        eff.push(efficiency(&traj, horizon)?);
    }
    Ok(serde_json::to_string(&EnaqtOut { gamma, efficiency: eff }).expect("plain numeric record"))
}

#[wasm_bindgen(js_name = fitSuperOhmic)]
pub fn fit_super_ohmic_js(
    reorganization: f64,
    cutoff: f64,
    temperature: f64,
    count: usize,
    grid_max: f64,
    points: usize,
) -> Result<String, JsError> {
    fit_super_ohmic(reorganization, cutoff, temperature, count, grid_max, points).map_err(js)
}

#[wasm_bindgen(js_name = dimerDynamics)]
pub fn dimer_js(gap: f64, coupling: f64, gamma: f64, t_max: f64, dt: f64) -> Result<String, JsError> {
    dimer(gap, coupling, gamma, t_max, dt).map_err(js)
}

#[wasm_bindgen(js_name = enaqtCurve)]
pub fn enaqt_js(
    energies: Vec<f64>,
    coupling: f64,
    sink_rate: f64,
    horizon: f64,
    gamma_min: f64,
    gamma_max: f64,
    points: usize,
) -> Result<String, JsError> {
    enaqt(energies, coupling, sink_rate, horizon, gamma_min, gamma_max, points).map_err(js)
}
