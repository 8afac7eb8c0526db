//! Unit-tagged scalars and the molecule-to-circuit scale map.
//!
//! Physics modules work in canonical units: cm⁻¹ for energies, ps for times
//! and ps⁻¹ for rates. An energy `E` in cm⁻¹ corresponds to the angular
//! frequency `2π·c·E` with `c` in cm/ps.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Speed of light in cm/ps.
pub const SPEED_OF_LIGHT_CM_PER_PS: f64 = 0.029_979_245_8;
/// GHz per cm⁻¹ (speed of light in units of 10⁹ cm/s).
pub const GHZ_PER_WAVENUMBER: f64 = 29.979_245_8;
/// Boltzmann constant over h·c, in cm⁻¹ per kelvin (CODATA 2018).
pub const BOLTZMANN_WAVENUMBER_PER_K: f64 = 0.695_034_800_4;

/// Angular frequency in rad/ps of an energy given in cm⁻¹.
#[inline]
pub fn angular_frequency(wavenumber: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_CM_PER_PS * wavenumber
}

/// Thermal energy k_B·T in cm⁻¹.
#[inline]
pub fn thermal_wavenumber(kelvin: f64) -> f64 {
    BOLTZMANN_WAVENUMBER_PER_K * kelvin
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Wavenumber,
    GigaHertz,
    MegaHertz,
    Kelvin,
    MilliKelvin,
    Femtosecond,
    Picosecond,
    Nanosecond,
    PerPicosecond,
    PerNanosecond,
    Dimensionless,
}

/// Dimension class a unit belongs to; conversions stay within a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitClass {
    Energy,
    Time,
    Rate,
    Dimensionless,
}

impl Unit {
    pub const ALL: [Unit; 11] = [
        Unit::Wavenumber,
        Unit::GigaHertz,
        Unit::MegaHertz,
        Unit::Kelvin,
        Unit::MilliKelvin,
        Unit::Femtosecond,
        Unit::Picosecond,
        Unit::Nanosecond,
        Unit::PerPicosecond,
        Unit::PerNanosecond,
        Unit::Dimensionless,
    ];

    pub fn class(self) -> UnitClass {
        match self {
            Unit::Wavenumber | Unit::GigaHertz | Unit::MegaHertz | Unit::Kelvin | Unit::MilliKelvin => {
                UnitClass::Energy
            }
            Unit::Femtosecond | Unit::Picosecond | Unit::Nanosecond => UnitClass::Time,
            Unit::PerPicosecond | Unit::PerNanosecond => UnitClass::Rate,
            Unit::Dimensionless => UnitClass::Dimensionless,
        }
    }

    /// Multiplier taking a magnitude in this unit to the canonical unit of
    /// its class (cm⁻¹, ps, ps⁻¹).
    fn to_canonical(self) -> f64 {
        match self {
            Unit::Wavenumber => 1.0,
            Unit::GigaHertz => 1.0 / GHZ_PER_WAVENUMBER,
            Unit::MegaHertz => 1e-3 / GHZ_PER_WAVENUMBER,
            Unit::Kelvin => BOLTZMANN_WAVENUMBER_PER_K,
            Unit::MilliKelvin => 1e-3 * BOLTZMANN_WAVENUMBER_PER_K,
            Unit::Femtosecond => 1e-3,
            Unit::Picosecond => 1.0,
            Unit::Nanosecond => 1e3,
            Unit::PerPicosecond => 1.0,
            Unit::PerNanosecond => 1e-3,
            Unit::Dimensionless => 1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Wavenumber => "cm^-1",
            Unit::GigaHertz => "GHz",
            Unit::MegaHertz => "MHz",
            Unit::Kelvin => "K",
            Unit::MilliKelvin => "mK",
            Unit::Femtosecond => "fs",
            Unit::Picosecond => "ps",
            Unit::Nanosecond => "ns",
            Unit::PerPicosecond => "ps^-1",
            Unit::PerNanosecond => "ns^-1",
            Unit::Dimensionless => "",
        }
    }

    fn is_temperature(self) -> bool {
        matches!(self, Unit::Kelvin | Unit::MilliKelvin)
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unit = match s.trim() {
            "cm^-1" | "cm-1" | "1/cm" | "cm⁻¹" => Unit::Wavenumber,
            "GHz" => Unit::GigaHertz,
            "MHz" => Unit::MegaHertz,
            "K" => Unit::Kelvin,
            "mK" => Unit::MilliKelvin,
            "fs" => Unit::Femtosecond,
            "ps" => Unit::Picosecond,
            "ns" => Unit::Nanosecond,
            "ps^-1" | "1/ps" | "ps-1" => Unit::PerPicosecond,
            "ns^-1" | "1/ns" | "ns-1" => Unit::PerNanosecond,
            "" => Unit::Dimensionless,
            other => return Err(Error::Parse(format!("unknown unit '{other}'"))),
        };
        Ok(unit)
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A magnitude tagged with its unit. Immutable value type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub magnitude: f64,
    pub unit: Unit,
}

impl Quantity {
    pub const fn new(magnitude: f64, unit: Unit) -> Self {
        Quantity { magnitude, unit }
    }

    pub const fn wavenumber(v: f64) -> Self {
        Quantity::new(v, Unit::Wavenumber)
    }

    pub const fn kelvin(v: f64) -> Self {
        Quantity::new(v, Unit::Kelvin)
    }

    pub const fn picoseconds(v: f64) -> Self {
        Quantity::new(v, Unit::Picosecond)
    }

    pub fn class(&self) -> UnitClass {
        self.unit.class()
    }

    /// Magnitude in the canonical unit of this quantity's class.
    pub fn canonical(&self) -> f64 {
        self.magnitude * self.unit.to_canonical()
    }

    /// Energy in cm⁻¹; errors for non-energy quantities.
    pub fn in_wavenumber(&self) -> Result<f64> {
        convert(*self, Unit::Wavenumber).map(|q| q.magnitude)
    }

    pub fn in_picoseconds(&self) -> Result<f64> {
        convert(*self, Unit::Picosecond).map(|q| q.magnitude)
    }

    pub fn in_per_picosecond(&self) -> Result<f64> {
        convert(*self, Unit::PerPicosecond).map(|q| q.magnitude)
    }
}

impl FromStr for Quantity {
    type Err = Error;

    /// Parses `"<number> <unit>"`, e.g. `"35 cm^-1"` or `"300 K"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_whitespace())
            .unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let magnitude: f64 = num
            .parse()
            .map_err(|_| Error::Parse(format!("invalid magnitude in '{s}'")))?;
        Ok(Quantity::new(magnitude, unit.parse()?))
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.unit == Unit::Dimensionless {
            write!(f, "{}", self.magnitude)
        } else {
            write!(f, "{} {}", self.magnitude, self.unit)
        }
    }
}

/// Expresses `q` in `target`. Energy-like units interconvert through the
/// speed of light and k_B/hc only.
pub fn convert(q: Quantity, target: Unit) -> Result<Quantity> {
    if q.unit == target {
        return Ok(q);
    }
    if q.unit.class() != target.class() {
        return Err(Error::IncompatibleUnits {
            from: q.unit.symbol().to_string(),
            to: target.symbol().to_string(),
        });
    }
    Ok(Quantity::new(
        q.magnitude * q.unit.to_canonical() / target.to_canonical(),
        target,
    ))
}

/// Mean thermal occupation `1/(exp(ħω/k_BT) − 1)` of a mode.
pub fn bose_occupation(energy: Quantity, temperature: Quantity) -> Result<f64> {
    let w = energy.in_wavenumber()?;
    let kt = temperature.in_wavenumber()?;
    bose_occupation_wavenumber(w, kt)
}

/// Same as [`bose_occupation`] with both arguments already in cm⁻¹.
pub fn bose_occupation_wavenumber(energy: f64, thermal: f64) -> Result<f64> {
    if !(energy > 0.0) || !(thermal > 0.0) {
        return Err(Error::Domain(format!(
            "bose occupation needs positive energy and temperature (got {energy}, {thermal} cm^-1)"
        )));
    }
    Ok(1.0 / (energy / thermal).exp_m1())
}

/// Ratio between molecular and simulator magnitudes. Energies, temperatures
/// and rates shrink by `factor`; times stretch by it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleMap {
    factor: f64,
}

impl ScaleMap {
    pub fn new(factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::Domain(format!("scale factor must be positive, got {factor}")));
        }
        Ok(ScaleMap { factor })
    }

    pub fn identity() -> Self {
        ScaleMap { factor: 1.0 }
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// The map undoing this one.
    pub fn inverse(&self) -> Self {
        ScaleMap { factor: 1.0 / self.factor }
    }
}

/// Scale factor from the quantum-beating periods of molecule and simulator.
pub fn scale_map_from_beats(tau_molecule: Quantity, tau_simulator: Quantity) -> Result<ScaleMap> {
    let mol = tau_molecule.in_picoseconds()?;
    let sim = tau_simulator.in_picoseconds()?;
    if !(mol > 0.0) || !(sim > 0.0) {
        return Err(Error::Domain(format!(
            "beating times must be positive (got {mol} ps, {sim} ps)"
        )));
    }
    ScaleMap::new(sim / mol)
}

/// Maps a molecular quantity onto the simulator side.
///
/// Frequencies come back in MHz, temperatures in mK, times in ns and rates
/// in ns⁻¹; callers convert further as needed.
pub fn apply_scale(q: Quantity, map: ScaleMap) -> Result<Quantity> {
    let s = map.factor();
    match q.class() {
        UnitClass::Energy if q.unit.is_temperature() => {
            let k = convert(q, Unit::Kelvin)?.magnitude / s;
            convert(Quantity::new(k, Unit::Kelvin), Unit::MilliKelvin)
        }
        UnitClass::Energy => {
            let ghz = convert(q, Unit::GigaHertz)?.magnitude / s;
            convert(Quantity::new(ghz, Unit::GigaHertz), Unit::MegaHertz)
        }
        UnitClass::Time => {
            let ps = q.canonical() * s;
            convert(Quantity::picoseconds(ps), Unit::Nanosecond)
        }
        UnitClass::Rate => {
            let per_ps = q.canonical() / s;
            convert(Quantity::new(per_ps, Unit::PerPicosecond), Unit::PerNanosecond)
        }
        UnitClass::Dimensionless => Err(Error::IncompatibleUnits {
            from: "dimensionless".into(),
            to: "scaled".into(),
        }),
    }
}
