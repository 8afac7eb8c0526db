//! Run configuration: a JSON document whose physical values are strings
//! carrying their unit, e.g. `"35 cm^-1"`, `"300 K"`, `"10 fs"`, `"1 ps^-1"`.
//! Unknown keys are rejected. Site indices are 1-based.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circuit::CompileOptions;
use crate::dynamics::SinkSpec;
use crate::error::{Error, Result};
use crate::exciton::{build_model, ExcitonModel, ModelConfig, RangeWarning};
use crate::spectral::{Oscillator, OscillatorSet, SpectralDensity, TabulatedSd};
use crate::units::{convert, scale_map_from_beats, Quantity, ScaleMap, Unit, UnitClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Free text, ignored by the runner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub model: ModelBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enaqt: Option<EnaqtBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathways: Option<PathwaysBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<ScaleBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compiler: Option<CompilerBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub site_energies: Vec<String>,
    #[serde(default)]
    pub couplings: Vec<CouplingEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder_sigma: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub sites: [usize; 2],
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathBlock {
    pub spectral_density: SdBlock,
    pub temperature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum SdBlock {
    SuperOhmic { reorganization: String, cutoff: String },
    Tabulated { file: String },
    Oscillators { oscillators: Vec<OscillatorEntry>, roll_off: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorEntry {
    pub frequency: String,
    pub coupling: String,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitBlock {
    pub n_oscillators: usize,
    pub grid_max: String,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roll_off: Option<String>,
}

fn default_grid_points() -> usize {
    512
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Redfield,
    Hsr,
    Lindblad,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dephasing {
    Uniform(String),
    PerSite(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinkBlock {
    pub site: usize,
    pub rate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsBlock {
    pub engine: Engine,
    pub initial_site: usize,
    pub t_max: String,
    pub dt_out: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<SinkBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<Dephasing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_dephasing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder_realizations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnaqtBlock {
    pub gamma_list: Vec<String>,
    pub initial_site: usize,
    pub sink: SinkBlock,
    pub horizon: String,
    pub n_traj: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathwaysBlock {
    pub threshold: String,
}

/// Discretization of the bath into `modes` equally spaced star modes on
/// `(0, grid_max]` before chain mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    pub modes: usize,
    pub grid_max: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleBlock {
    pub tau_molecule: String,
    pub tau_simulator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompilerBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupler_coupling: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direct_coupling: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_offset: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn formats(&self) -> Vec<Format> {
        self.output.as_ref().and_then(|o| o.formats.clone()).unwrap_or_else(|| vec![Format::Csv])
    }
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Validation(format!("{key}: {msg}"))
}

fn quantity(key: &str, text: &str) -> Result<Quantity> {
    let q: Quantity = text.parse().map_err(|e| invalid(key, e))?;
    if !q.magnitude.is_finite() {
        return Err(invalid(key, "value must be finite"));
    }
    Ok(q)
}

fn in_unit(key: &str, text: &str, class: UnitClass, target: Unit) -> Result<f64> {
    let q = quantity(key, text)?;
    if q.class() != class {
        return Err(invalid(key, format!("expected {} units, got '{text}'", format!("{class:?}").to_lowercase())));
    }
    Ok(convert(q, target).map_err(|e| invalid(key, e))?.magnitude)
}

/// Energy in cm⁻¹.
pub fn energy(key: &str, text: &str) -> Result<f64> {
    in_unit(key, text, UnitClass::Energy, Unit::Wavenumber)
}

pub fn ghz(key: &str, text: &str) -> Result<f64> {
    in_unit(key, text, UnitClass::Energy, Unit::GigaHertz)
}

/// Time in ps.
pub fn time(key: &str, text: &str) -> Result<f64> {
    in_unit(key, text, UnitClass::Time, Unit::Picosecond)
}

/// Rate in ps⁻¹.
pub fn rate(key: &str, text: &str) -> Result<f64> {
    in_unit(key, text, UnitClass::Rate, Unit::PerPicosecond)
}

pub fn temperature(key: &str, text: &str) -> Result<Quantity> {
    let q = quantity(key, text)?;
    if !matches!(q.unit, Unit::Kelvin | Unit::MilliKelvin) {
        return Err(invalid(key, format!("expected a temperature in K or mK, got '{text}'")));
    }
    if !(q.magnitude > 0.0) {
        return Err(invalid(key, "temperature must be positive"));
    }
    Ok(q)
}

/// 1-based site index to 0-based.
pub fn site_index(key: &str, site: usize, n: usize) -> Result<usize> {
    if site == 0 || site > n {
        return Err(invalid(key, format!("site {site} outside 1..={n}")));
    }
    Ok(site - 1)
}

pub fn model(block: &ModelBlock) -> Result<(ExcitonModel, Vec<RangeWarning>)> {
    let site_energies = block
        .site_energies
        .iter()
        .enumerate()
        .map(|(k, s)| energy(&format!("model.site_energies[{k}]"), s))
        .collect::<Result<Vec<_>>>()?;
    let n = site_energies.len();
    let mut couplings = Vec::with_capacity(block.couplings.len());
    for (k, c) in block.couplings.iter().enumerate() {
        let key = format!("model.couplings[{k}]");
        let i = site_index(&format!("{key}.sites"), c.sites[0], n)?;
        let j = site_index(&format!("{key}.sites"), c.sites[1], n)?;
        if i == j {
            return Err(invalid(&format!("{key}.sites"), "a coupling needs two different sites"));
        }
        couplings.push((i, j, energy(&format!("{key}.value"), &c.value)?));
    }
    let disorder_sigma = block
        .disorder_sigma
        .as_ref()
        .map(|v| {
            v.iter()
                .enumerate()
                .map(|(k, s)| energy(&format!("model.disorder_sigma[{k}]"), s))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    build_model(&ModelConfig { site_energies, couplings, disorder_sigma })
        .map_err(|e| invalid("model", e))
}

pub fn spectral_density(block: &SdBlock, reference: Quantity, base: &Path) -> Result<SpectralDensity> {
    let key = "bath.spectral_density";
    match block {
        SdBlock::SuperOhmic { reorganization, cutoff } => SpectralDensity::super_ohmic(
            energy(&format!("{key}.reorganization"), reorganization)?,
            energy(&format!("{key}.cutoff"), cutoff)?,
        )
        .map_err(|e| invalid(key, e)),
        SdBlock::Tabulated { file } => {
            let path = resolve_path(base, file);
            let table = TabulatedSd::read(&path).map_err(|e| match e {
                Error::Io(m) => Error::Io(format!("{key}.file ({}): {m}", path.display())),
                other => invalid(&format!("{key}.file"), other),
            })?;
            Ok(SpectralDensity::Tabulated(table))
        }
        SdBlock::Oscillators { .. } => {
            let set = oscillator_set(block)?.expect("oscillator block");
            SpectralDensity::oscillator_sum(set, reference).map_err(|e| invalid(key, e))
        }
    }
}

/// Oscillators given explicitly in the bath block, if any.
pub fn oscillator_set(block: &SdBlock) -> Result<Option<OscillatorSet>> {
    let SdBlock::Oscillators { oscillators, roll_off } = block else {
        return Ok(None);
    };
    let key = "bath.spectral_density";
    let list = oscillators
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let key = format!("{key}.oscillators[{k}]");
            Oscillator::from_quality(
                energy(&format!("{key}.frequency"), &o.frequency)?,
                energy(&format!("{key}.coupling"), &o.coupling)?,
                o.quality,
            )
            .map_err(|e| invalid(&key, e))
        })
        .collect::<Result<Vec<_>>>()?;
    OscillatorSet::new(list, energy(&format!("{key}.roll_off"), roll_off)?)
        .map(Some)
        .map_err(|e| invalid(key, e))
}

pub fn sink(key: &str, block: &SinkBlock, n: usize) -> Result<SinkSpec> {
    let site = site_index(&format!("{key}.site"), block.site, n)?;
    SinkSpec::new(site, rate(&format!("{key}.rate"), &block.rate)?).map_err(|e| invalid(key, e))
}

/// Per-site dephasing strengths in cm⁻¹ (zero when absent).
pub fn dephasing(block: Option<&Dephasing>, n: usize) -> Result<Vec<f64>> {
    let key = "dynamics.dephasing";
    let values = match block {
        None => vec![0.0; n],
        Some(Dephasing::Uniform(s)) => vec![energy(key, s)?; n],
        Some(Dephasing::PerSite(v)) => {
            if v.len() != n {
                return Err(invalid(key, format!("{} values for {n} sites", v.len())));
            }
            v.iter().enumerate().map(|(k, s)| energy(&format!("{key}[{k}]"), s)).collect::<Result<_>>()?
        }
    };
    if values.iter().any(|g| *g < 0.0) {
        return Err(invalid(key, "dephasing must be >= 0"));
    }
    Ok(values)
}

pub fn scale(block: Option<&ScaleBlock>) -> Result<ScaleMap> {
    let Some(b) = block else {
        return Err(invalid("scale", "block is required for this subcommand"));
    };
    let mol = Quantity::new(time("scale.tau_molecule", &b.tau_molecule)?, Unit::Picosecond);
    let sim = Quantity::new(time("scale.tau_simulator", &b.tau_simulator)?, Unit::Picosecond);
    scale_map_from_beats(mol, sim).map_err(|e| invalid("scale", e))
}

pub fn compile_options(block: Option<&CompilerBlock>) -> Result<CompileOptions> {
    let mut opts = CompileOptions::default();
    if let Some(b) = block {
        if let Some(s) = &b.coupler_coupling {
            opts.coupler_coupling = ghz("compiler.coupler_coupling", s)?;
        }
        if let Some(s) = &b.direct_coupling {
            opts.direct_coupling = ghz("compiler.direct_coupling", s)?;
        }
        if let Some(d) = b.dominance {
            if !(d > 0.0) {
                return Err(invalid("compiler.dominance", "must be positive"));
            }
            opts.dominance = d;
        }
        if let Some(s) = &b.base_offset {
            opts.base_offset = ghz("compiler.base_offset", s)?;
        }
    }
    Ok(opts)
}

pub fn resolve_path(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
