//! Orchestration behind the command-line tool: reads a run configuration,
//! executes one subcommand and writes tables plus a manifest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{chain_spectral_check, to_chain, BathChain, BathStar};
use crate::circuit::compile;
use crate::config::{self, Engine, Format, RunConfig};
use crate::dynamics::{
    coherence_pairs, dephasing_rate, enaqt_sweep, ensemble_average, lindblad_dephasing_propagate, redfield_propagate,
    redfield_rates, site_state, time_grid, DensityMatrix, EnaqtPoint, EnsembleResult, NoiseSeries, NoiseSource,
    Trajectory,
};
use crate::error::Error;
use crate::exciton::{eigendecompose, pathways, sample_disorder, ExcitonModel, Pathway};
use crate::spectral::{
    eval_j, fit_oscillators, temperature_transform, uniform_grid, FitOptions, FitResult, OscillatorSet, SpectralDensity,
};
use crate::units::{Quantity, UnitClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Simulate,
    FitSd,
    Compile,
    Enaqt,
    Pathways,
    Chain,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::Simulate,
        Subcommand::FitSd,
        Subcommand::Compile,
        Subcommand::Enaqt,
        Subcommand::Pathways,
        Subcommand::Chain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::FitSd => "fit-sd",
            Subcommand::Compile => "compile",
            Subcommand::Enaqt => "enaqt",
            Subcommand::Pathways => "pathways",
            Subcommand::Chain => "chain",
        }
    }
}

impl FromStr for Subcommand {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Subcommand::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown subcommand '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub kind: FailureKind,
    pub message: String,
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Io => 1,
            FailureKind::Validation => 2,
            FailureKind::Numerical => 3,
        }
    }

    fn io(message: String) -> Self {
        RunError { kind: FailureKind::Io, message }
    }

    fn validation(key: &str, message: impl fmt::Display) -> Self {
        RunError { kind: FailureKind::Validation, message: format!("{key}: {message}") }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for RunError {}

/// Classifies a library error raised while handling config key `key`.
fn at(key: &'static str) -> impl Fn(Error) -> RunError {
    move |e| match e {
        Error::Io(m) => RunError::io(format!("{key}: {m}")),
        Error::Validation(m) if m.contains(':') => RunError { kind: FailureKind::Validation, message: m },
        e if e.is_numerical() => RunError { kind: FailureKind::Numerical, message: format!("{key}: {e}") },
        e => RunError::validation(key, e),
    }
}

type RunResult<T> = std::result::Result<T, RunError>;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.directory`.
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    pub seed: Option<u64>,
}

/// Record written next to every result set. Passing it back as the config
/// reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: Subcommand,
    pub config_sha256: String,
    pub seed: u64,
    /// Directory that relative paths in the config resolve against.
    pub base_dir: PathBuf,
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

pub const DEFAULT_OUTPUT_DIR: &str = "excisim-out";

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub outputs: Vec<String>,
    /// Human-readable lines for the terminal.
    pub notes: Vec<String>,
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Loads a config or a manifest; returns the config and its base directory.
pub fn load(path: &Path) -> RunResult<(RunConfig, PathBuf)> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| RunError::validation("config", format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if value.get("config_sha256").is_some() {
        let manifest: Manifest =
            serde_json::from_value(value).map_err(|e| RunError::validation("manifest", e))?;
        if sha256_hex(&manifest.config.to_json()) != manifest.config_sha256 {
            return Err(RunError::validation("manifest.config_sha256", "does not match the embedded config"));
        }
        return Ok((manifest.config, manifest.base_dir));
    }
    let cfg = RunConfig::from_json(&text).map_err(at("config"))?;
    Ok((cfg, base))
}

pub fn run_path(sub: Subcommand, config_path: &Path, opts: &RunOptions) -> RunResult<RunSummary> {
    let (cfg, base) = load(config_path)?;
    run(sub, cfg, &base, opts)
}

/// Executes `sub`. Relative paths in `cfg` resolve against `base`.
pub fn run(sub: Subcommand, mut cfg: RunConfig, base: &Path, opts: &RunOptions) -> RunResult<RunSummary> {
    if let Some(seed) = opts.seed {
        cfg.seed = Some(seed);
    }
    cfg.seed = Some(cfg.seed());
    let base = if base.as_os_str().is_empty() { Path::new(".") } else { base };
    let base_dir = fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
    let out_dir = match (&opts.out, cfg.output.as_ref().and_then(|o| o.directory.as_ref())) {
        (Some(p), _) => p.clone(),
        (None, Some(d)) => config::resolve_path(&base_dir, d),
        (None, None) => PathBuf::from(DEFAULT_OUTPUT_DIR),
    };

    let mut sink = Outputs::new(out_dir.clone(), cfg.formats());
    let mut notes = Vec::new();
    let (model, warnings) = config::model(&cfg.model).map_err(at("model"))?;
    notes.extend(warnings.iter().map(|w| format!("warning: {w}")));

    match sub {
        Subcommand::Simulate => simulate(&cfg, &model, &base_dir, &mut sink, &mut notes)?,
        Subcommand::FitSd => fit_sd(&cfg, &base_dir, &mut sink, &mut notes)?,
        Subcommand::Compile => compile_plan(&cfg, &model, &base_dir, &mut sink, &mut notes)?,
        Subcommand::Enaqt => enaqt(&cfg, &model, &mut sink)?,
        Subcommand::Pathways => pathway_table(&cfg, &model, &base_dir, &mut sink)?,
        Subcommand::Chain => chain_table(&cfg, &base_dir, &mut sink, &mut notes)?,
    }

    let config_json = cfg.to_json();
    let mut outputs = sink.written.clone();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "excisim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: sub,
        config_sha256: sha256_hex(&config_json),
        seed: cfg.seed(),
        base_dir,
        outputs: outputs.clone(),
        config: cfg,
    };
    sink.write_text("manifest.json", &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"))?;
    Ok(RunSummary { out_dir, outputs, notes })
}

struct Outputs {
    dir: PathBuf,
    formats: Vec<Format>,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: PathBuf, formats: Vec<Format>) -> Self {
        Outputs { dir, formats, written: Vec::new() }
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn ensure_dir(&self) -> RunResult<()> {
        fs::create_dir_all(&self.dir).map_err(|e| RunError::io(format!("output.directory ({}): {e}", self.dir.display())))
    }

    fn write_text(&mut self, name: &str, text: &str) -> RunResult<()> {
        self.ensure_dir()?;
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|e| RunError::io(format!("{}: {e}", path.display())))?;
        if name != "manifest.json" {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> RunResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| RunError::io(format!("{name}: {e}"));
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.serialize(row).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::io(format!("{name}: {e}")))?;
        self.write_text(name, &String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> RunResult<()> {
        self.write_text(name, &(serde_json::to_string_pretty(value).expect("results serialize") + "\n"))
    }
}

fn header(names: impl IntoIterator<Item = impl Into<String>>) -> Vec<String> {
    names.into_iter().map(Into::into).collect()
}

fn site_columns(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

fn bath(cfg: &RunConfig, base: &Path) -> RunResult<(SpectralDensity, Quantity)> {
    let b = cfg.bath.as_ref().ok_or_else(|| RunError::validation("bath", "block is required for this subcommand"))?;
    let t = config::temperature("bath.temperature", &b.temperature).map_err(at("bath.temperature"))?;
    let sd = config::spectral_density(&b.spectral_density, t, base).map_err(at("bath.spectral_density"))?;
    Ok((sd, t))
}

fn required<'a, T>(block: Option<&'a T>, key: &str) -> RunResult<&'a T> {
    block.ok_or_else(|| RunError::validation(key, "block is required for this subcommand"))
}

fn simulate(
    cfg: &RunConfig,
    model: &ExcitonModel,
    base: &Path,
    out: &mut Outputs,
    notes: &mut Vec<String>,
) -> RunResult<()> {
    let d = required(cfg.dynamics.as_ref(), "dynamics")?;
    let n = model.n_sites();
    let t_max = config::time("dynamics.t_max", &d.t_max).map_err(at("dynamics.t_max"))?;
    let dt = config::time("dynamics.dt_out", &d.dt_out).map_err(at("dynamics.dt_out"))?;
    let grid = time_grid(t_max, dt).map_err(at("dynamics.dt_out"))?;
    let initial = config::site_index("dynamics.initial_site", d.initial_site, n).map_err(at("dynamics.initial_site"))?;
    let sink = d.sink.as_ref().map(|s| config::sink("dynamics.sink", s, n)).transpose().map_err(at("dynamics.sink"))?;
    let gamma = config::dephasing(d.dephasing.as_ref(), n).map_err(at("dynamics.dephasing"))?;
    let seed = cfg.seed();

    let realizations = d.disorder_realizations.unwrap_or(0);
    let models: Vec<ExcitonModel> = if realizations == 0 {
        vec![model.clone()]
    } else {
        if model.disorder_sigma().is_none() {
            return Err(RunError::validation(
                "model.disorder_sigma",
                "required when dynamics.disorder_realizations is set",
            ));
        }
        (0..realizations)
            .map(|r| sample_disorder(model, disorder_seed(seed, r)))
            .collect::<crate::Result<_>>()
            .map_err(at("model.disorder_sigma"))?
    };

    let forbid = |present: bool, key: &str| {
        if present {
            Err(RunError::validation(key, format!("not used by the {:?} engine", d.engine).to_lowercase()))
        } else {
            Ok(())
        }
    };

    let mut runs = Vec::with_capacity(models.len());
    let mut ensemble = None;
    match d.engine {
        Engine::Lindblad => {
            forbid(d.noise_file.is_some(), "dynamics.noise_file")?;
            forbid(d.n_traj.is_some(), "dynamics.n_traj")?;
            forbid(d.extra_dephasing.is_some(), "dynamics.extra_dephasing")?;
            let rho0 = DensityMatrix::site(n, initial).map_err(at("dynamics.initial_site"))?;
            for m in &models {
                runs.push(lindblad_dephasing_propagate(m, &gamma, sink, &rho0, &grid).map_err(at("dynamics"))?);
            }
        }
        Engine::Hsr => {
            forbid(d.extra_dephasing.is_some(), "dynamics.extra_dephasing")?;
            let noise = match &d.noise_file {
                Some(f) => {
                    if d.dephasing.is_some() {
                        return Err(RunError::validation(
                            "dynamics.noise_file",
                            "give either dephasing or a noise file, not both",
                        ));
                    }
                    let path = config::resolve_path(base, f);
                    let series = NoiseSeries::read(&path).map_err(at("dynamics.noise_file"))?;
                    if series.n_sites() != n {
                        return Err(RunError::validation(
                            "dynamics.noise_file",
                            format!("{} noise columns for {n} sites", series.n_sites()),
                        ));
                    }
                    NoiseSource::TimeSeries(series)
                }
                None => NoiseSource::White { gamma: gamma.clone() },
            };
            let n_traj = d.n_traj.unwrap_or(1);
            if n_traj == 0 {
                return Err(RunError::validation("dynamics.n_traj", "must be at least 1"));
            }
            let psi0 = site_state(n, initial).map_err(at("dynamics.initial_site"))?;
            for (r, m) in models.iter().enumerate() {
                let base_seed = seed.wrapping_add((r * n_traj) as u64);
                let ens = ensemble_average(m, &noise, sink, &psi0, &grid, n_traj, base_seed).map_err(at("dynamics"))?;
                runs.push(ens.mean.clone());
                if models.len() == 1 {
                    ensemble = Some(ens);
                }
            }
        }
        Engine::Redfield => {
            forbid(d.sink.is_some(), "dynamics.sink")?;
            forbid(d.noise_file.is_some(), "dynamics.noise_file")?;
            forbid(d.n_traj.is_some(), "dynamics.n_traj")?;
            forbid(d.dephasing.is_some(), "dynamics.dephasing")?;
            let extra = match &d.extra_dephasing {
                None => 0.0,
                Some(s) => extra_dephasing(s)?,
            };
            let (sd, t) = bath(cfg, base)?;
            let rho0 = DensityMatrix::site(n, initial).map_err(at("dynamics.initial_site"))?;
            for m in &models {
                let eig = eigendecompose(m).map_err(at("model"))?;
                let rates = redfield_rates(&eig, std::slice::from_ref(&sd), t).map_err(at("bath"))?;
                runs.push(redfield_propagate(&eig, &rates, &rho0, &grid, extra).map_err(at("dynamics"))?);
            }
        }
    }
    if runs.len() > 1 {
        notes.push(format!("averaged over {} disorder realizations", runs.len()));
    }
    let traj = average(runs);
    write_trajectory(out, &traj, ensemble.as_ref())
}

/// Seeds for disorder draws live far from the trajectory seeds.
fn disorder_seed(seed: u64, realization: usize) -> u64 {
    seed.wrapping_add(1 << 40).wrapping_add(realization as u64)
}

/// Extra exciton dephasing as a rate; energies are taken as `γ` in cm⁻¹.
fn extra_dephasing(text: &str) -> RunResult<f64> {
    let key = "dynamics.extra_dephasing";
    let q: Quantity = text.parse().map_err(|e| RunError::validation(key, e))?;
    let v = match q.class() {
        UnitClass::Rate => config::rate(key, text).map_err(at(key))?,
        UnitClass::Energy if !matches!(q.unit, crate::units::Unit::Kelvin | crate::units::Unit::MilliKelvin) => {
            dephasing_rate(config::energy(key, text).map_err(at(key))?)
        }
        _ => return Err(RunError::validation(key, format!("expected a rate or an energy, got '{text}'"))),
    };
    if !(v >= 0.0) || !v.is_finite() {
        return Err(RunError::validation(key, "must be finite and >= 0"));
    }
    Ok(v)
}

fn average(mut runs: Vec<Trajectory>) -> Trajectory {
    if runs.len() == 1 {
        return runs.pop().expect("one run");
    }
    let w = 1.0 / runs.len() as f64;
    let mut acc = runs[0].clone();
    for r in &runs[1..] {
        for (a, b) in acc.populations.iter_mut().zip(&r.populations) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in acc.coherences.iter_mut().zip(&r.coherences) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in acc.exciton_populations.iter_mut().zip(&r.exciton_populations) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        acc.sink.iter_mut().zip(&r.sink).for_each(|(x, y)| *x += y);
    }
    acc.populations.iter_mut().flatten().for_each(|x| *x *= w);
    acc.coherences.iter_mut().flatten().for_each(|x| *x *= w);
    acc.exciton_populations.iter_mut().flatten().for_each(|x| *x *= w);
    acc.sink.iter_mut().for_each(|x| *x *= w);
    acc
}

fn write_trajectory(out: &mut Outputs, traj: &Trajectory, ens: Option<&EnsembleResult>) -> RunResult<()> {
    let n = traj.n_sites();
    if out.wants(Format::Csv) {
        let h = header(std::iter::once("time_ps".to_string()).chain(site_columns("pop_site_", n)).chain(["sink".into()]));
        let rows = (0..traj.times.len()).map(|k| {
            let mut row = vec![traj.times[k]];
            row.extend(&traj.populations[k]);
            row.push(traj.sink[k]);
            row
        });
        out.csv("populations.csv", &h, rows)?;

        let pairs = coherence_pairs(n);
        if !pairs.is_empty() {
            let h = header(
                std::iter::once("time_ps".to_string())
                    .chain(pairs.iter().flat_map(|(i, j)| [format!("re_rho_{}_{}", i + 1, j + 1), format!("im_rho_{}_{}", i + 1, j + 1)])),
            );
            let rows = (0..traj.times.len()).map(|k| {
                let mut row = vec![traj.times[k]];
                row.extend(traj.coherences[k].iter().flat_map(|z: &Complex64| [z.re, z.im]));
                row
            });
            out.csv("coherences.csv", &h, rows)?;
        }

        if !traj.exciton_populations.is_empty() {
            let h = header(std::iter::once("time_ps".to_string()).chain(site_columns("pop_exciton_", n)));
            let rows = (0..traj.times.len()).map(|k| {
                let mut row = vec![traj.times[k]];
                row.extend(&traj.exciton_populations[k]);
                row
            });
            out.csv("exciton_populations.csv", &h, rows)?;
        }

        if let Some(e) = ens {
            let h = header(
                std::iter::once("time_ps".to_string()).chain(site_columns("stderr_site_", n)).chain(["sink_stderr".into()]),
            );
            let rows = (0..traj.times.len()).map(|k| {
                let mut row = vec![traj.times[k]];
                row.extend(&e.population_stderr[k]);
                row.push(e.sink_stderr[k]);
                row
            });
            out.csv("populations_stderr.csv", &h, rows)?;
        }
    }
    if out.wants(Format::Json) {
        match ens {
            Some(e) => out.json("populations.json", e)?,
            None => out.json("populations.json", traj)?,
        }
    }
    Ok(())
}

fn run_fit(cfg: &RunConfig, base: &Path) -> RunResult<(FitResult, SpectralDensity, Quantity)> {
    let (sd, t) = bath(cfg, base)?;
    let b = cfg.bath.as_ref().expect("bath checked");
    let f = required(b.fit.as_ref(), "bath.fit")?;
    let grid_max = config::energy("bath.fit.grid_max", &f.grid_max).map_err(at("bath.fit.grid_max"))?;
    if !(grid_max > 0.0) {
        return Err(RunError::validation("bath.fit.grid_max", "must be positive"));
    }
    let roll_off = f
        .roll_off
        .as_ref()
        .map(|s| config::energy("bath.fit.roll_off", s))
        .transpose()
        .map_err(at("bath.fit.roll_off"))?;
    let mut opts = FitOptions { seed: cfg.seed(), roll_off, ..FitOptions::default() };
    if let Some(s) = f.starts {
        if s == 0 {
            return Err(RunError::validation("bath.fit.starts", "must be at least 1"));
        }
        opts.starts = s;
    }
    let target = temperature_transform(&sd, t).map_err(at("bath.temperature"))?;
    let grid = uniform_grid(grid_max, f.grid_points);
    let fit = fit_oscillators(&target, f.n_oscillators, &grid, &opts).map_err(at("bath.fit"))?;
    Ok((fit, sd, t))
}

#[derive(Serialize)]
struct FitDocument<'a> {
    temperature_k: f64,
    residual: f64,
    start_index: usize,
    oscillators: &'a OscillatorSet,
    grid: &'a [f64],
    target: &'a [f64],
    fitted: &'a [f64],
}

fn fit_sd(cfg: &RunConfig, base: &Path, out: &mut Outputs, notes: &mut Vec<String>) -> RunResult<()> {
    let (fit, _, t) = run_fit(cfg, base)?;
    notes.push(format!("relative rms residual {:.6}", fit.residual));
    if out.wants(Format::Csv) {
        let h = header(["omega0_cm1", "eta_cm1", "kappa0_cm1", "Q"]);
        let rows = fit.set.oscillators.iter().map(|o| vec![o.frequency, o.coupling, o.damping, o.quality_factor()]);
        out.csv("oscillators.csv", &h, rows)?;
        let h = header(["omega_cm1", "target_cm1", "fitted_cm1"]);
        let rows = (0..fit.grid.len()).map(|k| vec![fit.grid[k], fit.target[k], fit.fitted[k]]);
        out.csv("sd_fit.csv", &h, rows)?;
    }
    if out.wants(Format::Json) {
        let doc = FitDocument {
            temperature_k: crate::units::convert(t, crate::units::Unit::Kelvin).map_err(at("bath.temperature"))?.magnitude,
            residual: fit.residual,
            start_index: fit.start_index,
            oscillators: &fit.set,
            grid: &fit.grid,
            target: &fit.target,
            fitted: &fit.fitted,
        };
        out.json("sd_fit.json", &doc)?;
    }
    Ok(())
}

fn compile_plan(
    cfg: &RunConfig,
    model: &ExcitonModel,
    base: &Path,
    out: &mut Outputs,
    notes: &mut Vec<String>,
) -> RunResult<()> {
    let scale = config::scale(cfg.scale.as_ref()).map_err(at("scale"))?;
    let opts = config::compile_options(cfg.compiler.as_ref()).map_err(at("compiler"))?;
    let sets = match &cfg.bath {
        None => Vec::new(),
        Some(b) => match config::oscillator_set(&b.spectral_density).map_err(at("bath.spectral_density"))? {
            Some(set) => vec![set],
            None if b.fit.is_some() => vec![run_fit(cfg, base)?.0.set],
            None => Vec::new(),
        },
    };
    let plan = compile(model, &sets, scale, &opts).map_err(at("compiler"))?;
    if plan.is_feasible() {
        notes.push("plan is within hardware ranges".into());
    } else {
        notes.push(format!("plan has {} feasibility violations", plan.feasibility.len()));
    }
    out.json("circuit_plan.json", &plan)
}

fn enaqt(cfg: &RunConfig, model: &ExcitonModel, out: &mut Outputs) -> RunResult<()> {
    let e = required(cfg.enaqt.as_ref(), "enaqt")?;
    let n = model.n_sites();
    let gammas = e
        .gamma_list
        .iter()
        .enumerate()
        .map(|(k, s)| config::energy(&format!("enaqt.gamma_list[{k}]"), s))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(at("enaqt.gamma_list"))?;
    let initial = config::site_index("enaqt.initial_site", e.initial_site, n).map_err(at("enaqt.initial_site"))?;
    let sink = config::sink("enaqt.sink", &e.sink, n).map_err(at("enaqt.sink"))?;
    let horizon = config::time("enaqt.horizon", &e.horizon).map_err(at("enaqt.horizon"))?;
    let psi0 = site_state(n, initial).map_err(at("enaqt.initial_site"))?;
    let points: Vec<EnaqtPoint> =
        enaqt_sweep(model, &gammas, sink, &psi0, horizon, e.n_traj, cfg.seed()).map_err(at("enaqt"))?;
    if out.wants(Format::Csv) {
        let rows = points.iter().map(|p| vec![p.gamma, p.efficiency, p.stderr]);
        out.csv("enaqt.csv", &header(["gamma_cm1", "efficiency", "stderr"]), rows)?;
    }
    if out.wants(Format::Json) {
        out.json("enaqt.json", &points)?;
    }
    Ok(())
}

fn pathway_table(cfg: &RunConfig, model: &ExcitonModel, base: &Path, out: &mut Outputs) -> RunResult<()> {
    let p = required(cfg.pathways.as_ref(), "pathways")?;
    let threshold = config::energy("pathways.threshold", &p.threshold).map_err(at("pathways.threshold"))?;
    let (sd, _) = bath(cfg, base)?;
    let eig = eigendecompose(model).map_err(at("model"))?;
    let list: Vec<Pathway> = pathways(&eig, std::slice::from_ref(&sd), threshold).map_err(at("pathways"))?;
    if out.wants(Format::Csv) {
        let h = header(["from_state", "to_state", "gap_cm1", "weight_cm1"]);
        let rows = list.iter().map(|w| vec![(w.from_state + 1) as f64, (w.to_state + 1) as f64, w.gap, w.weight]);
        out.csv("pathways.csv", &h, rows)?;
        let h = header(std::iter::once("energy_cm1".to_string()).chain(site_columns("weight_site_", model.n_sites())));
        let rows = (0..eig.len()).map(|m| {
            let mut row = vec![eig.energies[m]];
            row.extend((0..model.n_sites()).map(|s| eig.site_weight(s, m)));
            row
        });
        out.csv("excitons.csv", &h, rows)?;
    }
    if out.wants(Format::Json) {
        out.json("pathways.json", &list)?;
    }
    Ok(())
}

/// Equally spaced star modes at bin centres with `g_k² = J(ω_k)·Δω`.
pub fn discretize(sd: &SpectralDensity, modes: usize, grid_max: f64) -> crate::Result<BathStar> {
    if modes == 0 || !(grid_max > 0.0) {
        return Err(Error::Validation(format!("need modes >= 1 and grid_max > 0, got {modes}, {grid_max}")));
    }
    let dw = grid_max / modes as f64;
    let freqs: Vec<f64> = (0..modes).map(|k| (k as f64 + 0.5) * dw).collect();
    let couplings = freqs.iter().map(|&w| Ok((eval_j(sd, w)? * dw).sqrt())).collect::<crate::Result<Vec<_>>>()?;
    BathStar::new(freqs, couplings)
}

#[derive(Serialize)]
struct ChainDocument<'a> {
    star: &'a BathStar,
    chain: &'a BathChain,
    spectral_check: f64,
}

fn chain_table(cfg: &RunConfig, base: &Path, out: &mut Outputs, notes: &mut Vec<String>) -> RunResult<()> {
    let c = required(cfg.chain.as_ref(), "chain")?;
    let grid_max = config::energy("chain.grid_max", &c.grid_max).map_err(at("chain.grid_max"))?;
    let (sd, _) = bath(cfg, base)?;
    let star = discretize(&sd, c.modes, grid_max).map_err(at("chain"))?;
    let chain = to_chain(&star).map_err(at("chain"))?;
    let probe = uniform_grid(grid_max, 4 * c.modes.max(64));
    let broadening = 2.0 * grid_max / c.modes as f64;
    let check = chain_spectral_check(&star, &chain, &probe, broadening);
    notes.push(format!("max spectral-weight deviation star vs chain {check:.3e}"));
    if chain.truncated {
        notes.push(format!("chain truncated to {} sites", chain.len()));
    }
    if out.wants(Format::Csv) {
        let h = header(["index", "frequency_cm1", "coupling_cm1"]);
        let rows = (0..chain.len()).map(|k| {
            let g = if k == 0 { chain.head_coupling } else { chain.nn_couplings[k - 1] };
            vec![(k + 1) as f64, chain.site_frequencies[k], g]
        });
        out.csv("chain.csv", &h, rows)?;
    }
    if out.wants(Format::Json) {
        out.json("chain.json", &ChainDocument { star: &star, chain: &chain, spectral_check: check })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommand_names_round_trip() {
        for s in Subcommand::ALL {
            assert_eq!(s.name().parse::<Subcommand>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
        assert!("fit".parse::<Subcommand>().is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(at("k")(Error::Step { t: 0.0, h: 1e-20 }).exit_code(), 3);
        assert_eq!(at("k")(Error::Domain("x".into())).exit_code(), 2);
        assert_eq!(at("k")(Error::Io("x".into())).exit_code(), 1);
        let e = at("outer")(Error::Validation("model.couplings[0]: bad".into()));
        assert_eq!(e.message, "model.couplings[0]: bad");
    }

    #[test]
    fn discretized_star_keeps_weight() {
        let sd = SpectralDensity::super_ohmic(35.0, 150.0).unwrap();
        let star = discretize(&sd, 400, 3000.0).unwrap();
        // ∫ J dω = 2 λ ω_c for the super-Ohmic form
        assert!((star.total_weight() - 2.0 * 35.0 * 150.0).abs() < 1e-3 * 2.0 * 35.0 * 150.0);
    }
}
