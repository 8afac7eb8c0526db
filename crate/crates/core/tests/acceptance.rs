//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p excisim --test acceptance`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use excisim::chain::{to_chain, BathStar};
use excisim::circuit::{compile, effective_coupling, CouplerSolution, MAX_COUPLING, SPLITTING_RANGE};
use excisim::config::{self, RunConfig};
use excisim::dynamics::{
    ensemble_average, hsr_trajectory, lindblad_dephasing_propagate, redfield_propagate, redfield_rates, site_state,
    time_grid, DensityMatrix, NoiseSource,
};
use excisim::exciton::{eigendecompose, model_from_matrix, pathways, EigenSystem};
use excisim::runner::{self, RunOptions, Subcommand};
use excisim::spectral::{
    eval_c_osc, fit_oscillators, reorganization_energy, relative_rms, temperature_transform, uniform_grid, FitOptions,
    Oscillator, SpectralDensity,
};
use excisim::units::{
    apply_scale, convert, scale_map_from_beats, Quantity, ScaleMap, Unit, BOLTZMANN_WAVENUMBER_PER_K,
    GHZ_PER_WAVENUMBER, SPEED_OF_LIGHT_CM_PER_PS,
};

enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    verdict: Verdict,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Outcome { verdict: if ok { Verdict::Pass } else { Verdict::Fail }, detail }
    }
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load_config(name: &str) -> RunConfig {
    let path = configs_dir().join(name);
    RunConfig::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn kt(kelvin: f64) -> f64 {
    BOLTZMANN_WAVENUMBER_PER_K * kelvin
}

// ---------------------------------------------------------------- tables

/// A table entry on the simulator side as printed: magnitude text and unit.
struct Printed {
    text: &'static str,
    unit: Unit,
}

impl Printed {
    fn value(&self) -> f64 {
        self.text.parse().unwrap()
    }

    /// Half a unit in the last printed digit.
    fn half_ulp(&self) -> f64 {
        let decimals = self.text.split('.').nth(1).map_or(0, str::len);
        0.5 * 10f64.powi(-(decimals as i32))
    }
}

const fn mhz(text: &'static str) -> Printed {
    Printed { text, unit: Unit::MegaHertz }
}

const fn ghz(text: &'static str) -> Printed {
    Printed { text, unit: Unit::GigaHertz }
}

/// (molecular cm⁻¹, simulator as printed) for frequency and coupling columns.
fn table_s2() -> Vec<(f64, Printed)> {
    vec![
        (27.0, mhz("162")),
        (74.0, mhz("444")),
        (140.0, mhz("839")),
        (246.0, ghz("1.5")),
        (380.0, ghz("2")),
        (560.0, ghz("3")),
        (2.42, mhz("14.50")),
        (8.60, mhz("51.56")),
        (11.98, mhz("71.83")),
        (14.10, mhz("84.54")),
        (10.00, mhz("59.95")),
        (5.40, mhz("32.38")),
    ]
}

fn table_s3() -> Vec<(f64, Printed)> {
    let freqs = [
        (20.0, mhz("120")),
        (37.0, mhz("222")),
        (72.0, mhz("432")),
        (118.0, mhz("707")),
        (142.0, mhz("851")),
        (190.0, ghz("1.1")),
        (237.0, ghz("1.4")),
        (260.0, ghz("1.6")),
        (282.0, ghz("1.7")),
        (325.0, ghz("1.9")),
        (363.0, ghz("2.2")),
        (380.0, ghz("2.3")),
        (426.0, ghz("2.6")),
        (478.0, ghz("2.9")),
        (500.0, ghz("3")),
    ];
    let couplings = [
        (3.0, mhz("18.00")),
        (5.9, mhz("35.38")),
        (9.7, mhz("58.16")),
        (7.8, mhz("46.77")),
        (2.8, mhz("16.79")),
        (16.5, mhz("98.93")),
        (10.4, mhz("62.36")),
        (6.1, mhz("36.57")),
        (9.9, mhz("59.36")),
        (4.8, mhz("28.78")),
        (6.3, mhz("37.77")),
        (5.3, mhz("31.79")),
        (4.4, mhz("26.38")),
        (3.4, mhz("20.39")),
        (1.3, mhz("7.79")),
    ];
    freqs.into_iter().chain(couplings).collect()
}

fn unit_scale_consistency() -> Outcome {
    let rows: Vec<(f64, Printed)> = table_s2().into_iter().chain(table_s3()).collect();
    // each row's implied factor: molecular in GHz over simulator in GHz
    let implied: Vec<f64> = rows
        .iter()
        .map(|(w, p)| {
            let sim = convert(Quantity::new(p.value(), p.unit), Unit::GigaHertz).unwrap().magnitude;
            w * GHZ_PER_WAVENUMBER / sim
        })
        .collect();
    // the factor is estimated from rows printed to four significant figures
    let mut precise: Vec<f64> =
        rows.iter().zip(&implied).filter(|((_, p), _)| p.text.replace('.', "").len() >= 4).map(|(_, s)| *s).collect();
    precise.sort_by(f64::total_cmp);
    let s_hat = precise[precise.len() / 2];
    let map = ScaleMap::new(s_hat).unwrap();

    let mut strict_misses = 0;
    let mut misses = Vec::new();
    for (w, p) in &rows {
        let predicted = convert(apply_scale(Quantity::wavenumber(*w), map).unwrap(), p.unit).unwrap().magnitude;
        let printed = p.value();
        let rel = (predicted - printed).abs() / printed;
        if rel > 0.02 {
            strict_misses += 1;
            // beyond 2 %, the printed value must still be the rounding of the prediction
            if (predicted - printed).abs() > p.half_ulp() {
                misses.push(format!("{w} cm^-1 -> {} {}", p.text, p.unit));
            }
        }
    }
    let beats = scale_map_from_beats(Quantity::new(200.0, Unit::Femtosecond), Quantity::new(1.0, Unit::Nanosecond))
        .unwrap()
        .factor();
    let ok = misses.is_empty() && (s_hat / beats - 1.0).abs() <= 0.02;
    Outcome::check(
        ok,
        format!(
            "s = {s_hat:.1} from {} four-digit rows vs {beats:.0} from beating times; {} rows; \
             {strict_misses} differ by >2% but match to printed precision; inconsistent: {misses:?}",
            precise.len(),
            rows.len()
        ),
    )
}

fn thermal_conversions() -> Outcome {
    let at = |k: f64| convert(Quantity::kelvin(k), Unit::Wavenumber).unwrap().magnitude;
    let (t300, t77) = (at(300.0), at(77.0));
    let inside = |v: f64, lo: f64, hi: f64| v >= lo * 0.995 && v <= hi * 1.005;
    Outcome::check(inside(t300, 208.0, 209.0) && inside(t77, 53.0, 54.0), format!("300 K = {t300:.4} cm^-1, 77 K = {t77:.4} cm^-1"))
}

fn spectral_fidelity() -> Outcome {
    let sd = SpectralDensity::super_ohmic(35.0, 150.0).unwrap();
    let lambda = reorganization_energy(&sd).unwrap();
    let lambda_rel = (lambda / 35.0 - 1.0).abs();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let w: f64 = rng.random_range(1.0..1500.0);
        let t: f64 = rng.random_range(20.0..400.0);
        let c = temperature_transform(&sd, Quantity::kelvin(t)).unwrap();
        let ratio = c.eval(-w) / c.eval(w);
        worst = worst.max((ratio / (-w / kt(t)).exp() - 1.0).abs());
    }
    Outcome::check(
        lambda_rel <= 1e-6 && worst <= 1e-10,
        format!("lambda = {lambda:.9} cm^-1 (rel {lambda_rel:.1e}); worst detailed-balance deviation {worst:.1e} over 1000 points"),
    )
}

/// Damped-oscillator density written out independently of the library.
fn c_osc_oracle(w0: f64, eta: f64, kappa0: f64, alpha: f64, thermal: f64, w: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let k = kappa0 * (-w.abs() / alpha).exp() * w * w / (w0 * w0);
    let d = (8.0 / std::f64::consts::PI).sqrt() * k * eta * eta / ((w0 / thermal).exp() + 1.0);
    d * ((w / thermal).exp() / (k * k + 4.0 * (w - w0).powi(2)) + 1.0 / (k * k + 4.0 * (w + w0).powi(2)))
}

fn decomposition_reproduction() -> (Outcome, Outcome) {
    let table = [(27.0, 2.42, 0.67), (74.0, 8.60, 0.49), (140.0, 11.98, 0.47), (246.0, 14.10, 0.80), (380.0, 10.00, 1.27), (560.0, 5.40, 1.84)];
    let grid_max = 1.2 * 560.0;
    let alpha = 10.0 * grid_max;
    let grid = uniform_grid(grid_max, 512);
    let t = Quantity::kelvin(300.0);
    let thermal = kt(300.0);
    let sd = SpectralDensity::super_ohmic(35.0, 150.0).unwrap();
    let target_sd = temperature_transform(&sd, t).unwrap();
    let target: Vec<f64> = grid.iter().map(|&w| target_sd.eval(w)).collect();

    let mut library_gap: f64 = 0.0;
    let baseline: Vec<f64> = grid
        .iter()
        .map(|&w| {
            let oracle: f64 = table.iter().map(|&(w0, eta, q)| c_osc_oracle(w0, eta, w0 / q, alpha, thermal, w)).sum();
            let lib: f64 =
                table.iter().map(|&(w0, eta, q)| eval_c_osc(&Oscillator::from_quality(w0, eta, q).unwrap(), alpha, t, w).unwrap()).sum();
            library_gap = library_gap.max((oracle - lib).abs() / oracle.abs().max(1e-300));
            oracle
        })
        .collect();
    let r_raw = relative_rms(&baseline, &target);
    // best single amplitude factor, to leave out the table's coupling normalization
    let a = baseline.iter().zip(&target).map(|(b, t)| b * t).sum::<f64>() / baseline.iter().map(|b| b * b).sum::<f64>();
    let scaled: Vec<f64> = baseline.iter().map(|b| a * b).collect();
    let r_star = relative_rms(&scaled, &target);

    let fit = fit_oscillators(&target_sd, 6, &grid, &FitOptions { roll_off: Some(alpha), ..FitOptions::default() }).unwrap();
    let s2 = Outcome::check(
        fit.residual <= r_star && library_gap < 1e-12,
        format!(
            "K=6 fit residual {:.4} vs table baseline r* = {r_star:.4} (best amplitude x{a:.3}; unscaled {r_raw:.4}); \
             library vs oracle C_osc max rel diff {library_gap:.1e}",
            fit.residual
        ),
    );
    let s3 = Outcome {
        verdict: Verdict::Skip,
        detail: "K=15 protocol needs the tabulated experimental spectral density, which is not supplied; not run".into(),
    };
    (s2, s3)
}

// ---------------------------------------------------------------- dynamics

fn random_eigensystem(seed: u64, n: usize) -> EigenSystem {
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

fn redfield_correctness() -> Outcome {
    let sds = vec![SpectralDensity::super_ohmic(35.0, 150.0).unwrap()];
    let temp = Quantity::kelvin(300.0);
    let thermal = kt(300.0);

    // detailed balance and an independently written rate on a random 4-site model
    let eig = random_eigensystem(4, 4);
    let rates = redfield_rates(&eig, &sds, temp).unwrap();
    let mut ratio_dev: f64 = 0.0;
    let mut rate_dev: f64 = 0.0;
    for m in 0..4 {
        for k in 0..m {
            let gap = eig.energies[m] - eig.energies[k];
            ratio_dev = ratio_dev.max((rates.down[(m, k)] / rates.up[(m, k)] / (gap / thermal).exp() - 1.0).abs());
            let gamma: f64 = (0..4).map(|j| eig.vectors[(j, m)].norm_sqr() * eig.vectors[(j, k)].norm_sqr()).sum();
            let x = gap / 150.0;
            let j = 35.0 * x * x * (-x).exp();
            let n = 1.0 / ((gap / thermal).exp() - 1.0);
            let oracle = 2.0 * std::f64::consts::PI * gamma * (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_PS * j) * (n + 1.0);
            rate_dev = rate_dev.max((rates.down[(m, k)] / oracle - 1.0).abs());
        }
    }

    // two-level relaxation from the upper exciton
    let h = DMatrix::from_row_slice(2, 2, &[0.0, 60.0, 60.0, 150.0]);
    let dimer = eigendecompose(&model_from_matrix(&h).unwrap()).unwrap();
    let r2 = redfield_rates(&dimer, &sds, temp).unwrap();
    let (down, up) = (r2.down[(1, 0)], r2.up[(1, 0)]);
    let upper: Vec<Complex64> = (0..2).map(|j| dimer.vectors[(j, 1)]).collect();
    let grid = time_grid(2.0, 0.01).unwrap();
    let traj = redfield_propagate(&dimer, &r2, &DensityMatrix::pure(&upper).unwrap(), &grid, 0.0).unwrap();
    let p_eq = up / (up + down);
    let two_level_dev = grid
        .iter()
        .zip(&traj.exciton_populations)
        .map(|(t, p)| (p[1] - (p_eq + (1.0 - p_eq) * (-(up + down) * t).exp())).abs())
        .fold(0.0, f64::max);

    // long-time Boltzmann on the 4-site model; the relaxation time comes from
    // the symmetrized rate matrix
    let boltz: Vec<f64> = eig.energies.iter().map(|e| (-(e - eig.energies[0]) / thermal).exp()).collect();
    let z: f64 = boltz.iter().sum();
    let w = rates.transfer();
    let out = rates.outflow();
    let sym = DMatrix::from_fn(4, 4, |a, b| {
        let g = if a == b { w[(a, b)] - out[a] } else { w[(a, b)] };
        g * (boltz[b] / boltz[a]).sqrt()
    });
    let sym = (&sym + sym.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().map(|x| -x).collect();
    ev.sort_by(f64::total_cmp);
    let slowest = ev[1];
    let horizon = 40.0 / slowest;
    let start = DensityMatrix::site(4, 0).unwrap();
    let long = redfield_propagate(&eig, &rates, &start, &[0.0, horizon], 0.0).unwrap();
    let boltz_dev = long.exciton_populations[1].iter().zip(&boltz).map(|(p, b)| (p - b / z).abs()).fold(0.0, f64::max);

    Outcome::check(
        ratio_dev <= 1e-12 && two_level_dev <= 1e-8 && boltz_dev <= 1e-6 && rate_dev <= 1e-12,
        format!(
            "ratio dev {ratio_dev:.1e}; rate vs oracle {rate_dev:.1e}; two-level dev {two_level_dev:.1e}; \
             Boltzmann dev {boltz_dev:.1e} at t = {horizon:.1} ps (slowest mode {slowest:.3} ps^-1)"
        ),
    )
}

fn hsr_lindblad_equivalence() -> Outcome {
    let v = 100.0;
    let model = model_from_matrix(&DMatrix::from_row_slice(2, 2, &[0.0, v, v, 0.0])).unwrap();
    let grid = time_grid(0.5, 0.01).unwrap();
    let psi = site_state(2, 0).unwrap();
    let rho0 = DensityMatrix::site(2, 0).unwrap();
    let n_traj = 10_000;
    // γ = 0 trajectories are identical; their spread is zero and the
    // comparison falls back to this absolute floor
    let floor = 1e-9;
    let mut lines = Vec::new();
    let mut ok = true;
    for (k, gamma) in [0.0, 10.0, 100.0].into_iter().enumerate() {
        let ens = ensemble_average(&model, &NoiseSource::uniform_white(2, gamma), None, &psi, &grid, n_traj, 1000 * k as u64)
            .unwrap();
        let exact = lindblad_dephasing_propagate(&model, &[gamma, gamma], None, &rho0, &grid).unwrap();
        let mut worst: f64 = 0.0;
        for t in 0..grid.len() {
            for s in 0..2 {
                let diff = (ens.mean.populations[t][s] - exact.populations[t][s]).abs();
                let se = ens.population_stderr[t][s].max(floor);
                worst = worst.max(diff / se);
            }
        }
        ok &= worst <= 3.0;
        lines.push(format!("gamma {gamma}: max |diff|/se = {worst:.2}"));
    }

    // Rabi period from the first population minimum, refined by a parabola
    let dt = 1e-4;
    let fine = time_grid(0.25, dt).unwrap();
    let traj = hsr_trajectory(&model, &NoiseSource::uniform_white(2, 0.0), None, &psi, &fine, 0).unwrap();
    let p: Vec<f64> = traj.populations.iter().map(|x| x[0]).collect();
    let i = (1..p.len() - 1).find(|&i| p[i] <= p[i - 1] && p[i] <= p[i + 1]).unwrap();
    let shift = 0.5 * (p[i - 1] - p[i + 1]) / (p[i - 1] - 2.0 * p[i] + p[i + 1]);
    let period = 2.0 * (fine[i] + shift * dt);
    let expected = 1.0 / (2.0 * SPEED_OF_LIGHT_CM_PER_PS * v);
    let rabi_rel = (period / expected - 1.0).abs();
    ok &= rabi_rel <= 0.005;
    lines.push(format!("Rabi period {period:.6} ps vs {expected:.6} ps (rel {rabi_rel:.1e})"));
    Outcome::check(ok, format!("n_traj = {n_traj}, {} output times; {}", grid.len(), lines.join("; ")))
}

fn enaqt_property() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let opts = RunOptions { out: Some(dir.path().to_path_buf()), seed: None };
    runner::run_path(Subcommand::Enaqt, &configs_dir().join("enaqt_chain5.json"), &opts).unwrap();
    let text = std::fs::read_to_string(dir.path().join("enaqt.csv")).unwrap();
    let rows: Vec<[f64; 3]> = text
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    let (imax, best) = rows.iter().enumerate().max_by(|a, b| a.1[1].total_cmp(&b.1[1])).unwrap();
    let first = rows[0];
    let last = rows[rows.len() - 1];
    let z = |end: [f64; 3]| (best[1] - end[1]) / (best[2].powi(2) + end[2].powi(2)).sqrt();
    let interior = imax > 0 && imax < rows.len() - 1;
    let (z_lo, z_hi) = (z(first), z(last));
    let curve: Vec<String> = rows.iter().map(|r| format!("{}:{:.3}+-{:.3}", r[0], r[1], r[2])).collect();
    Outcome::check(
        interior && z_lo >= 3.0 && z_hi >= 3.0,
        format!("peak at gamma = {} cm^-1, {z_lo:.1} and {z_hi:.1} combined se above the ends; [{}]", best[0], curve.join(", ")),
    )
}

fn pathway_extraction() -> Outcome {
    let cfg = load_config("fmo8.json");
    let (model, _) = config::model(&cfg.model).unwrap();
    let sd = SpectralDensity::super_ohmic(35.0, 150.0).unwrap();
    let eig = eigendecompose(&model).unwrap();
    let found = pathways(&eig, std::slice::from_ref(&sd), 0.3).unwrap();

    // oracle: an independent eigensolver and a plain double loop
    let se = SymmetricEigen::new(model.hamiltonian());
    let mut order: Vec<usize> = (0..se.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let n = order.len();
    let mut oracle = Vec::new();
    for m in 0..n {
        for k in 0..n {
            let gap = se.eigenvalues[order[m]] - se.eigenvalues[order[k]];
            if gap <= 0.0 {
                continue;
            }
            let gamma: f64 =
                (0..n).map(|j| se.eigenvectors[(j, order[m])].powi(2) * se.eigenvectors[(j, order[k])].powi(2)).sum();
            let x = gap / 150.0;
            let weight = gamma * 35.0 * x * x * (-x).exp();
            if weight >= 0.3 {
                oracle.push((m, k, weight));
            }
        }
    }
    let mut got: Vec<(usize, usize)> = found.iter().map(|p| (p.from_state, p.to_state)).collect();
    let mut want: Vec<(usize, usize)> = oracle.iter().map(|&(m, k, _)| (m, k)).collect();
    got.sort();
    want.sort();
    let downward = found.iter().all(|p| p.gap > 0.0 && eig.energies[p.from_state] > eig.energies[p.to_state]);
    let weight_dev = found
        .iter()
        .map(|p| {
            let o = oracle.iter().find(|o| (o.0, o.1) == (p.from_state, p.to_state)).map_or(f64::INFINITY, |o| o.2);
            (p.weight / o - 1.0).abs()
        })
        .fold(0.0, f64::max);
    Outcome::check(
        downward && got == want && weight_dev < 1e-9,
        format!("FMO-8, threshold 0.3 cm^-1: {} pathways, oracle {}; max weight rel dev {weight_dev:.1e}", got.len(), want.len()),
    )
}

fn chain_mapping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut eig_dev, mut head_dev): (f64, f64) = (0.0, 0.0);
    let mut truncated = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=15);
        let freqs: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..1000.0)).collect();
        let couplings: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..50.0)).collect();
        let star = BathStar::new(freqs.clone(), couplings.clone()).unwrap();
        let chain = to_chain(&star).unwrap();
        truncated += chain.truncated as usize;
        let n = chain.len();
        let t = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                chain.site_frequencies[i]
            } else if i + 1 == j {
                chain.nn_couplings[i]
            } else if j + 1 == i {
                chain.nn_couplings[j]
            } else {
                0.0
            }
        });
        let mut got: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        let mut want = freqs;
        want.sort_by(f64::total_cmp);
        if got.len() != want.len() {
            eig_dev = f64::INFINITY;
            continue;
        }
        eig_dev = eig_dev.max(got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let total: f64 = couplings.iter().map(|g| g * g).sum();
        head_dev = head_dev.max((chain.head_coupling.powi(2) / total - 1.0).abs());
    }
    Outcome::check(
        eig_dev <= 1e-10 && head_dev <= 1e-12,
        format!("1000 stars, K <= 15, frequencies in [1, 1000) cm^-1: max eigenvalue dev {eig_dev:.1e} cm^-1, head^2 rel dev {head_dev:.1e}, {truncated} truncated"),
    )
}

fn compiler_round_trip() -> Outcome {
    let cfg = load_config("fmo8.json");
    let (model, _) = config::model(&cfg.model).unwrap();
    let scale = config::scale(cfg.scale.as_ref()).unwrap();
    let opts = config::compile_options(cfg.compiler.as_ref()).unwrap();
    let plan = compile(&model, &[], scale, &opts).unwrap();
    let mut worst: f64 = 0.0;
    let mut unsolved = 0;
    for c in &plan.couplers {
        let g = match (c.solution, c.spec) {
            (CouplerSolution::Tuned(_), Some(spec)) => effective_coupling(&spec).unwrap(),
            (CouplerSolution::Parked, _) => opts.direct_coupling,
            _ => {
                unsolved += 1;
                continue;
            }
        };
        worst = worst.max((g - c.target_ghz).abs());
    }
    let pairs = (0..8).flat_map(|i| (i + 1..8).map(move |j| (i, j))).filter(|&(i, j)| model.coupling(i, j) != 0.0).count();
    let splittings_ok = plan.qubits.iter().all(|q| (SPLITTING_RANGE.0..=SPLITTING_RANGE.1).contains(&q.splitting_ghz));
    let couplings_ok = plan.couplers.iter().all(|c| c.target_ghz.abs() <= MAX_COUPLING);
    let (lo, hi) = plan.qubits.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), q| (l.min(q.splitting_ghz), h.max(q.splitting_ghz)));
    let gmax = plan.couplers.iter().map(|c| c.target_ghz.abs()).fold(0.0, f64::max);
    Outcome::check(
        (scale.factor() - 5000.0).abs() < 1e-9 && worst <= 1e-9 && unsolved == 0 && plan.couplers.len() == pairs && splittings_ok && couplings_ok,
        format!(
            "s = {}, {} couplers, max round-trip error {worst:.1e} GHz; qubits in [{lo:.3}, {hi:.3}] GHz; max |g| {gmax:.3} GHz; \
             other report entries: {:?}",
            scale.factor(),
            plan.couplers.len(),
            plan.feasibility
        ),
    )
}

fn main() {
    type Case = (&'static str, Duration, Box<dyn Fn() -> Vec<Outcome>>);
    let cases: Vec<Case> = vec![
        ("unit/scale consistency", Duration::from_secs(1), Box::new(|| vec![unit_scale_consistency()])),
        ("thermal conversions", Duration::from_secs(1), Box::new(|| vec![thermal_conversions()])),
        ("spectral fidelity", Duration::from_secs(5), Box::new(|| vec![spectral_fidelity()])),
        (
            "decomposition reproduction",
            Duration::from_secs(120),
            Box::new(|| {
                let (a, b) = decomposition_reproduction();
                vec![a, b]
            }),
        ),
        ("redfield correctness", Duration::from_secs(10), Box::new(|| vec![redfield_correctness()])),
        ("hsr/lindblad equivalence", Duration::from_secs(300), Box::new(|| vec![hsr_lindblad_equivalence()])),
        ("enaqt property", Duration::from_secs(600), Box::new(|| vec![enaqt_property()])),
        ("pathway extraction", Duration::from_secs(1), Box::new(|| vec![pathway_extraction()])),
        ("chain mapping", Duration::from_secs(30), Box::new(|| vec![chain_mapping()])),
        ("compiler round trip", Duration::from_secs(1), Box::new(|| vec![compiler_round_trip()])),
    ];
    let mut failed = 0;
    for (k, (name, budget, run)) in cases.iter().enumerate() {
        let start = Instant::now();
        let outcomes = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        for (j, o) in outcomes.iter().enumerate() {
            let label = if outcomes.len() > 1 { format!("{}{}", k + 1, (b'a' + j as u8) as char) } else { format!("{}", k + 1) };
            let tag = match (&o.verdict, in_time) {
                (Verdict::Skip, _) => "SKIP",
                (Verdict::Pass, true) => "PASS",
                _ => {
                    failed += 1;
                    "FAIL"
                }
            };
            println!("[{tag}] {label:>3} {name} ({:.2} s of {} s): {}", elapsed.as_secs_f64(), budget.as_secs(), o.detail);
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed or were reported as skipped");
}
