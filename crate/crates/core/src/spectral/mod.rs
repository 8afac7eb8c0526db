//! Spectral densities, their finite-temperature transform, and the
//! damped-oscillator decomposition.
//!
//! All frequencies and spectral values are in cm⁻¹. The thermal factor
//! `ħω/k_BT` is evaluated as `ω / (k_B T)` with both sides in cm⁻¹.

mod fit;

use std::path::Path;

use crate::error::{Error, Result};
use crate::quad;
use crate::units::{Quantity, Unit};

pub use fit::{fit_oscillators, relative_rms, uniform_grid, FitOptions, FitResult};

const SQRT_8_OVER_PI: f64 = 1.595_769_121_605_730_7;

/// One damped oscillator of the bath decomposition.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Oscillator {
    /// Transition frequency ω₀ in cm⁻¹.
    pub frequency: f64,
    /// Coupling η to the site, in cm⁻¹.
    pub coupling: f64,
    /// Damping κ₀ in cm⁻¹.
    pub damping: f64,
}

impl Oscillator {
    pub fn new(frequency: f64, coupling: f64, damping: f64) -> Result<Self> {
        let osc = Oscillator { frequency, coupling, damping };
        osc.validate()?;
        Ok(osc)
    }

    /// Builds an oscillator from its quality factor, using `κ₀ = ω₀/Q`.
    pub fn from_quality(frequency: f64, coupling: f64, quality: f64) -> Result<Self> {
        if !(quality > 0.0) {
            return Err(Error::Domain(format!("quality factor must be positive, got {quality}")));
        }
        Oscillator::new(frequency, coupling, frequency / quality)
    }

    pub fn quality_factor(&self) -> f64 {
        self.frequency / self.damping
    }

    fn validate(&self) -> Result<()> {
        if !(self.frequency > 0.0 && self.coupling >= 0.0 && self.damping > 0.0)
            || !(self.frequency.is_finite() && self.coupling.is_finite() && self.damping.is_finite())
        {
            return Err(Error::Domain(format!(
                "invalid oscillator (omega0 = {}, eta = {}, kappa0 = {})",
                self.frequency, self.coupling, self.damping
            )));
        }
        Ok(())
    }
}

/// A finite set of damped oscillators sharing one roll-off parameter α.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OscillatorSet {
    pub oscillators: Vec<Oscillator>,
    /// Roll-off α of the frequency-dependent damping, in cm⁻¹.
    pub roll_off: f64,
}

impl OscillatorSet {
    pub fn new(oscillators: Vec<Oscillator>, roll_off: f64) -> Result<Self> {
        if !(roll_off > 0.0) {
            return Err(Error::Domain(format!("roll-off alpha must be positive, got {roll_off}")));
        }
        for o in &oscillators {
            o.validate()?;
        }
        Ok(OscillatorSet { oscillators, roll_off })
    }

    pub fn len(&self) -> usize {
        self.oscillators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oscillators.is_empty()
    }

    /// Temperature-dependent spectral density of the whole set at `ω`.
    pub fn eval(&self, thermal: f64, omega: f64) -> f64 {
        self.oscillators
            .iter()
            .map(|o| c_osc(o, self.roll_off, thermal, omega))
            .sum()
    }
}

/// `C_osc(ω, T)` for a single oscillator with thermal energy `thermal`
/// (k_B·T in cm⁻¹). Unchecked inner form of [`eval_c_osc`].
///
/// The expression is evaluated in log space so that the Boltzmann factors
/// cannot overflow at low temperature.
pub(crate) fn c_osc(o: &Oscillator, roll_off: f64, thermal: f64, omega: f64) -> f64 {
    if o.coupling == 0.0 || omega == 0.0 {
        return 0.0;
    }
    let w0 = o.frequency;
    let kappa = o.damping * (-omega.abs() / roll_off).exp() * (omega * omega) / (w0 * w0);
    if kappa == 0.0 {
        return 0.0;
    }
    let k2 = kappa * kappa;
    let ln_pref = (SQRT_8_OVER_PI * kappa * o.coupling * o.coupling).ln() - (-w0 / thermal).exp().ln_1p();
    let emit = (ln_pref + (omega - w0) / thermal - (k2 + 4.0 * (omega - w0).powi(2)).ln()).exp();
    let absorb = (ln_pref - w0 / thermal - (k2 + 4.0 * (omega + w0).powi(2)).ln()).exp();
    emit + absorb
}

/// Evaluates the damped-oscillator spectral density with
/// `κ(ω) = κ₀·exp(−|ω|/α)·ω²/ω₀²`.
pub fn eval_c_osc(osc: &Oscillator, roll_off: f64, temperature: Quantity, omega: f64) -> Result<f64> {
    osc.validate()?;
    if !(roll_off > 0.0) {
        return Err(Error::Domain(format!("roll-off alpha must be positive, got {roll_off}")));
    }
    let thermal = positive_thermal(temperature)?;
    Ok(c_osc(osc, roll_off, thermal, omega))
}

pub(crate) fn positive_thermal(temperature: Quantity) -> Result<f64> {
    if !matches!(temperature.unit, Unit::Kelvin | Unit::MilliKelvin) {
        return Err(Error::IncompatibleUnits {
            from: temperature.unit.symbol().into(),
            to: "K".into(),
        });
    }
    let kt = temperature.in_wavenumber()?;
    if !(kt > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
    }
    Ok(kt)
}

/// A spectral density sampled on an ascending grid; linear in between and
/// zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedSd {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedSd {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Shape(format!(
                "tabulated SD has {} frequencies but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 {
            return Err(Error::Validation("tabulated SD needs at least two points".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("tabulated SD frequencies must be strictly ascending".into()));
        }
        if grid[0] < 0.0 || values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Validation("tabulated SD needs omega >= 0 and finite J >= 0".into()));
        }
        Ok(TabulatedSd { grid, values })
    }

    /// Parses two-column text (`ω J`, both cm⁻¹); `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected 2 columns, found {}", lineno + 1, cols.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: invalid number '{s}'", lineno + 1)))
            };
            grid.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
        }
        TabulatedSd::new(grid, values)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn eval(&self, omega: f64) -> f64 {
        let g = &self.grid;
        if omega < g[0] || omega > g[g.len() - 1] {
            return 0.0;
        }
        let k = g.partition_point(|&x| x <= omega).clamp(1, g.len() - 1);
        let (x0, x1) = (g[k - 1], g[k]);
        let (y0, y1) = (self.values[k - 1], self.values[k]);
        y0 + (y1 - y0) * (omega - x0) / (x1 - x0)
    }
}

/// Spectral density `J(ω)` for `ω ≥ 0`, in cm⁻¹.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralDensity {
    /// `J(ω) = λ (ω/ω_c)² exp(−ω/ω_c)`.
    SuperOhmic { reorganization: f64, cutoff: f64 },
    Tabulated(TabulatedSd),
    /// A damped-oscillator set, read back as `J` through its temperature
    /// transform at the reference thermal energy (cm⁻¹).
    OscillatorSum { set: OscillatorSet, reference_thermal: f64 },
    Zero,
}

impl SpectralDensity {
    pub fn super_ohmic(reorganization: f64, cutoff: f64) -> Result<Self> {
        if !(reorganization >= 0.0) || !(cutoff > 0.0) {
            return Err(Error::Domain(format!(
                "super-Ohmic SD needs lambda >= 0 and cutoff > 0 (got {reorganization}, {cutoff})"
            )));
        }
        Ok(SpectralDensity::SuperOhmic { reorganization, cutoff })
    }

    pub fn oscillator_sum(set: OscillatorSet, reference: Quantity) -> Result<Self> {
        let reference_thermal = positive_thermal(reference)?;
        Ok(SpectralDensity::OscillatorSum { set, reference_thermal })
    }

    /// Unchecked evaluation; negative ω is treated as zero weight.
    pub(crate) fn j(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return match self {
                SpectralDensity::Tabulated(t) if omega == 0.0 => t.eval(0.0),
                _ => 0.0,
            };
        }
        match self {
            SpectralDensity::SuperOhmic { reorganization, cutoff } => {
                let x = omega / cutoff;
                reorganization * x * x * (-x).exp()
            }
            SpectralDensity::Tabulated(t) => t.eval(omega),
            SpectralDensity::OscillatorSum { set, reference_thermal } => {
                // C = 2J/(1 − e^{−ω/kT}) for ω > 0
                0.5 * set.eval(*reference_thermal, omega) * (-(-omega / reference_thermal).exp_m1())
            }
            SpectralDensity::Zero => 0.0,
        }
    }

    /// `lim_{ω→0⁺} J(ω)/ω`.
    fn slope_at_zero(&self) -> f64 {
        match self {
            SpectralDensity::SuperOhmic { .. } | SpectralDensity::OscillatorSum { .. } | SpectralDensity::Zero => 0.0,
            SpectralDensity::Tabulated(t) => {
                if t.grid[0] > 0.0 {
                    0.0
                } else if t.values[0] > 0.0 {
                    f64::INFINITY
                } else {
                    t.values[1] / t.grid[1]
                }
            }
        }
    }

    /// Largest frequency scale of the density, used to map half-line integrals.
    fn frequency_scale(&self) -> f64 {
        match self {
            SpectralDensity::SuperOhmic { cutoff, .. } => *cutoff,
            SpectralDensity::Tabulated(t) => t.grid[t.grid.len() - 1],
            SpectralDensity::OscillatorSum { set, .. } => set
                .oscillators
                .iter()
                .map(|o| o.frequency)
                .fold(1.0, f64::max),
            SpectralDensity::Zero => 1.0,
        }
    }
}

/// Evaluates `J(ω)`; `ω` must be non-negative.
pub fn eval_j(sd: &SpectralDensity, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::Domain(format!("J(omega) is defined for omega >= 0, got {omega}")));
    }
    Ok(sd.j(omega))
}

/// `C(ω,T) = {1 + coth[ω/(2k_BT)]} J^A(ω)`, defined for all real `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureSd {
    pub base: SpectralDensity,
    /// k_B·T in cm⁻¹.
    pub thermal: f64,
}

impl TemperatureSd {
    pub fn eval(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return 2.0 * self.thermal * self.base.slope_at_zero();
        }
        let y = omega.abs();
        let j = self.base.j(y);
        if j == 0.0 {
            return 0.0;
        }
        let a = y / self.thermal;
        // 1 + coth(a/2) = 2/(1 − e^{−a}); coth(a/2) − 1 = 2/(e^{a} − 1)
        if omega > 0.0 {
            2.0 * j / (-(-a).exp_m1())
        } else {
            2.0 * j / a.exp_m1()
        }
    }

    pub fn temperature_kelvin(&self) -> f64 {
        self.thermal / crate::units::BOLTZMANN_WAVENUMBER_PER_K
    }
}

pub fn temperature_transform(sd: &SpectralDensity, temperature: Quantity) -> Result<TemperatureSd> {
    Ok(TemperatureSd { base: sd.clone(), thermal: positive_thermal(temperature)? })
}

/// `λ = ∫₀^∞ J(ω)/ω dω`, to relative tolerance 1e-8.
pub fn reorganization_energy(sd: &SpectralDensity) -> Result<f64> {
    const REL: f64 = 1e-8;
    match sd {
        SpectralDensity::Zero => Ok(0.0),
        SpectralDensity::Tabulated(t) => {
            if t.grid[0] == 0.0 && t.values[0] > 0.0 {
                return Err(Error::Integration { estimate: f64::INFINITY });
            }
            let mut total = 0.0;
            for w in t.grid.windows(2) {
                total += quad::integrate(|x| if x > 0.0 { t.eval(x) / x } else { 0.0 }, w[0], w[1], REL * 1e-2, 0.0)?;
            }
            Ok(total)
        }
        _ => {
            let scale = sd.frequency_scale();
            quad::integrate_half_line(|w| if w > 0.0 { sd.j(w) / w } else { 0.0 }, scale, REL, 1e-300)
        }
    }
}
