//! Compilation of an exciton model and its oscillator baths into flux-qubit
//! circuit parameters.
//!
//! All circuit magnitudes are GHz unless a field name says otherwise. Pair
//! couplings are realized through a tunable coupler with the leading-order
//! effective coupling `g = J_ij − 2·J_ic·J_jc / δ`, `δ = Δᶜ − (Δ_i + Δ_j)/2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exciton::ExcitonModel;
use crate::spectral::OscillatorSet;
use crate::units::{apply_scale, convert, Quantity, ScaleMap, Unit};

/// Qubit splittings reachable in hardware (GHz).
pub const SPLITTING_RANGE: (f64, f64) = (0.0, 13.0);
/// Largest pair coupling magnitude reachable in hardware (GHz).
pub const MAX_COUPLING: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplerSpec {
    /// Direct qubit-qubit coupling.
    pub j_ij: f64,
    /// Qubit-coupler couplings.
    pub j_ic: f64,
    pub j_jc: f64,
    pub delta_i: f64,
    pub delta_j: f64,
    /// Coupler splitting.
    pub delta_c: f64,
}

impl CouplerSpec {
    /// `δ = Δᶜ − (Δ_i + Δ_j)/2`.
    pub fn detuning(&self) -> f64 {
        self.delta_c - 0.5 * (self.delta_i + self.delta_j)
    }

    /// True when the coupler detuning dominates the qubit detuning and the
    /// coupler couplings by at least `dominance`, the regime where the
    /// leading-order formula holds.
    pub fn is_valid(&self, dominance: f64) -> bool {
        let scale = (self.delta_i - self.delta_j).abs().max(self.j_ic.abs()).max(self.j_jc.abs());
        self.detuning().abs() >= dominance * scale
    }
}

/// `g = J_ij − 2·J_ic·J_jc / δ` (GHz).
pub fn effective_coupling(spec: &CouplerSpec) -> Result<f64> {
    let delta = spec.detuning();
    if delta == 0.0 {
        return Err(Error::SingularCoupler);
    }
    Ok(spec.j_ij - 2.0 * spec.j_ic * spec.j_jc / delta)
}

/// Everything about a coupler except its own splitting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplerFixed {
    pub j_ij: f64,
    pub j_ic: f64,
    pub j_jc: f64,
    pub delta_i: f64,
    pub delta_j: f64,
}

impl CouplerFixed {
    pub fn with_splitting(&self, delta_c: f64) -> CouplerSpec {
        CouplerSpec {
            j_ij: self.j_ij,
            j_ic: self.j_ic,
            j_jc: self.j_jc,
            delta_i: self.delta_i,
            delta_j: self.delta_j,
            delta_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "delta_c_ghz", rename_all = "snake_case")]
pub enum CouplerSolution {
    Tuned(f64),
    /// The target equals the direct coupling: any far-detuned coupler works.
    Parked,
}

/// Coupler splitting realizing `target` (GHz):
/// `Δᶜ = (Δ_i + Δ_j)/2 + 2·J_ic·J_jc / (J_ij − target)`.
pub fn solve_coupler(target: f64, fixed: &CouplerFixed) -> Result<CouplerSolution> {
    if !target.is_finite() {
        return Err(Error::Domain(format!("target coupling must be finite, got {target}")));
    }
    if target == fixed.j_ij {
        return Ok(CouplerSolution::Parked);
    }
    let product = fixed.j_ic * fixed.j_jc;
    if product == 0.0 {
        return Err(Error::Unreachable { target });
    }
    Ok(CouplerSolution::Tuned(0.5 * (fixed.delta_i + fixed.delta_j) + 2.0 * product / (fixed.j_ij - target)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    /// `J_ic = J_jc` used for every coupler (GHz).
    pub coupler_coupling: f64,
    /// Direct qubit-qubit coupling assumed for every pair (GHz).
    pub direct_coupling: f64,
    pub dominance: f64,
    /// Added to every scaled splitting (GHz).
    pub base_offset: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { coupler_coupling: 0.1, direct_coupling: 0.0, dominance: 10.0, base_offset: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QubitPlan {
    pub site: usize,
    pub splitting_ghz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplerPlan {
    pub site_i: usize,
    pub site_j: usize,
    pub target_ghz: f64,
    pub solution: CouplerSolution,
    pub spec: Option<CouplerSpec>,
    pub effective_ghz: Option<f64>,
    /// Leading-order validity of the coupler formula at this operating point.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillatorPlan {
    pub frequency_ghz: f64,
    pub coupling_mhz: f64,
    pub damping_mhz: f64,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    SplittingOutOfRange { site: usize, value_ghz: f64 },
    CouplingTooLarge { site_i: usize, site_j: usize, value_ghz: f64 },
    CouplerOutOfRange { site_i: usize, site_j: usize, value_ghz: f64 },
    CouplerUnsolved { site_i: usize, site_j: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitPlan {
    pub scale_factor: f64,
    pub qubits: Vec<QubitPlan>,
    pub couplers: Vec<CouplerPlan>,
    /// `oscillators[site]`.
    pub oscillators: Vec<Vec<OscillatorPlan>>,
    pub feasibility: Vec<Violation>,
}

impl CircuitPlan {
    pub fn is_feasible(&self) -> bool {
        self.feasibility.is_empty()
    }
}

fn scaled_ghz(wavenumber: f64, scale: ScaleMap) -> Result<f64> {
    let q = apply_scale(Quantity::wavenumber(wavenumber), scale)?;
    Ok(convert(q, Unit::GigaHertz)?.magnitude)
}

fn scaled_mhz(wavenumber: f64, scale: ScaleMap) -> Result<f64> {
    Ok(apply_scale(Quantity::wavenumber(wavenumber), scale)?.magnitude)
}

/// Scaled oscillator rows; `Q` is unchanged by scaling.
pub fn compile_oscillators(set: &OscillatorSet, scale: ScaleMap) -> Result<Vec<OscillatorPlan>> {
    set.oscillators
        .iter()
        .map(|o| {
            Ok(OscillatorPlan {
                frequency_ghz: scaled_ghz(o.frequency, scale)?,
                coupling_mhz: scaled_mhz(o.coupling, scale)?,
                damping_mhz: scaled_mhz(o.damping, scale)?,
                quality: o.quality_factor(),
            })
        })
        .collect()
}

/// Builds the circuit plan. `oscillators` holds either one set shared by all
/// sites, one set per site, or nothing. Range problems are collected in the
/// feasibility report; only structural problems are errors.
pub fn compile(
    model: &ExcitonModel,
    oscillators: &[OscillatorSet],
    scale: ScaleMap,
    opts: &CompileOptions,
) -> Result<CircuitPlan> {
    let n = model.n_sites();
    if !oscillators.is_empty() && oscillators.len() != 1 && oscillators.len() != n {
        return Err(Error::Shape(format!("expected 0, 1 or {n} oscillator sets, got {}", oscillators.len())));
    }
    if !opts.base_offset.is_finite() || !opts.coupler_coupling.is_finite() || !opts.direct_coupling.is_finite() {
        return Err(Error::Validation("compiler options must be finite".into()));
    }
    if !(opts.dominance > 0.0) {
        return Err(Error::Validation(format!("dominance factor must be positive, got {}", opts.dominance)));
    }
    let mut feasibility = Vec::new();
    let floor = model.site_energies().iter().copied().fold(f64::INFINITY, f64::min);
    let qubits: Vec<QubitPlan> = model
        .site_energies()
        .iter()
        .enumerate()
        .map(|(site, &e)| Ok(QubitPlan { site, splitting_ghz: scaled_ghz(e - floor, scale)? + opts.base_offset }))
        .collect::<Result<_>>()?;
    for q in &qubits {
        if !(SPLITTING_RANGE.0..=SPLITTING_RANGE.1).contains(&q.splitting_ghz) {
            feasibility.push(Violation::SplittingOutOfRange { site: q.site, value_ghz: q.splitting_ghz });
        }
    }

    let mut couplers = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = model.coupling(i, j);
            if v == 0.0 {
                continue;
            }
            let target = scaled_ghz(v, scale)?;
            if target.abs() > MAX_COUPLING {
                feasibility.push(Violation::CouplingTooLarge { site_i: i, site_j: j, value_ghz: target });
            }
            let fixed = CouplerFixed {
                j_ij: opts.direct_coupling,
                j_ic: opts.coupler_coupling,
                j_jc: opts.coupler_coupling,
                delta_i: qubits[i].splitting_ghz,
                delta_j: qubits[j].splitting_ghz,
            };
            match solve_coupler(target, &fixed) {
                Ok(solution) => {
                    let (spec, effective, valid) = match solution {
                        CouplerSolution::Tuned(dc) => {
                            let spec = fixed.with_splitting(dc);
                            if !(SPLITTING_RANGE.0..=SPLITTING_RANGE.1).contains(&dc) {
                                feasibility.push(Violation::CouplerOutOfRange { site_i: i, site_j: j, value_ghz: dc });
                            }
                            (Some(spec), Some(effective_coupling(&spec)?), spec.is_valid(opts.dominance))
                        }
                        CouplerSolution::Parked => (None, Some(fixed.j_ij), true),
                    };
                    couplers.push(CouplerPlan {
                        site_i: i,
                        site_j: j,
                        target_ghz: target,
                        solution,
                        spec,
                        effective_ghz: effective,
                        valid,
                    });
                }
                Err(e) => {
                    feasibility.push(Violation::CouplerUnsolved { site_i: i, site_j: j, reason: e.to_string() });
                }
            }
        }
    }

    let oscillators = match oscillators {
        [] => vec![Vec::new(); n],
        [shared] => vec![compile_oscillators(shared, scale)?; n],
        per_site => per_site.iter().map(|s| compile_oscillators(s, scale)).collect::<Result<_>>()?,
    };
    Ok(CircuitPlan { scale_factor: scale.factor(), qubits, couplers, oscillators, feasibility })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exciton::model_from_matrix;
    use crate::spectral::Oscillator;
    use crate::units::GHZ_PER_WAVENUMBER;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn fixed(j_ij: f64, j: f64, di: f64, dj: f64) -> CouplerFixed {
        CouplerFixed { j_ij, j_ic: j, j_jc: j, delta_i: di, delta_j: dj }
    }

    #[test]
    fn effective_coupling_cases() {
        let direct = fixed(0.3, 0.0, 4.0, 5.0).with_splitting(9.0);
        assert_eq!(effective_coupling(&direct).unwrap(), 0.3);
        let spec = fixed(0.0, 0.1, 4.0, 4.0).with_splitting(6.0);
        assert!((effective_coupling(&spec).unwrap() + 0.01).abs() < 1e-15);
        let below = fixed(0.0, 0.1, 4.0, 4.0).with_splitting(2.0);
        assert!((effective_coupling(&below).unwrap() - 0.01).abs() < 1e-15);
        let singular = fixed(0.0, 0.1, 4.0, 6.0).with_splitting(5.0);
        assert_eq!(effective_coupling(&singular), Err(Error::SingularCoupler));
    }

    #[test]
    fn solve_coupler_cases() {
        let f = fixed(0.0, 0.1, 4.0, 4.0);
        assert_eq!(solve_coupler(-0.010, &f).unwrap(), CouplerSolution::Tuned(6.0));
        assert_eq!(solve_coupler(0.0, &f).unwrap(), CouplerSolution::Parked);
        let dead = CouplerFixed { j_ic: 0.0, ..f };
        assert!(matches!(solve_coupler(0.05, &dead), Err(Error::Unreachable { .. })));
        // inverse of a known detuning
        let g = 0.02 - 2.0 * 0.1 * 0.1 / 3.5;
        let CouplerSolution::Tuned(dc) = solve_coupler(g, &fixed(0.02, 0.1, 4.0, 5.0)).unwrap() else {
            panic!("expected tuned coupler");
        };
        assert!((dc - 4.5 - 3.5).abs() < 1e-12);
    }

    #[test]
    fn validity_flag() {
        let spec = fixed(0.0, 0.1, 4.0, 4.5).with_splitting(10.0);
        assert!(spec.is_valid(10.0));
        assert!(!spec.is_valid(20.0));
    }

    #[test]
    fn identity_scale_keeps_magnitudes() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 0.01, 0.01, 0.05]);
        let model = model_from_matrix(&h).unwrap();
        let opts = CompileOptions { base_offset: 0.0, ..CompileOptions::default() };
        let plan = compile(&model, &[], ScaleMap::identity(), &opts).unwrap();
        assert!((plan.qubits[1].splitting_ghz - 0.05 * GHZ_PER_WAVENUMBER).abs() < 1e-12);
        assert!((plan.couplers[0].target_ghz - 0.01 * GHZ_PER_WAVENUMBER).abs() < 1e-12);
    }

    #[test]
    fn oversized_coupling_is_reported() {
        // 2 GHz at s = 1
        let v = 2.0 / GHZ_PER_WAVENUMBER;
        let model = model_from_matrix(&DMatrix::from_row_slice(2, 2, &[0.0, v, v, 0.0])).unwrap();
        let plan = compile(&model, &[], ScaleMap::identity(), &CompileOptions::default()).unwrap();
        assert!(plan
            .feasibility
            .iter()
            .any(|f| matches!(f, Violation::CouplingTooLarge { value_ghz, .. } if (value_ghz - 2.0).abs() < 1e-12)));
    }

    #[test]
    fn oscillator_rows_keep_quality() {
        let set = OscillatorSet::new(vec![Oscillator::from_quality(140.0, 11.98, 0.47).unwrap()], 6720.0).unwrap();
        let rows = compile_oscillators(&set, ScaleMap::new(5000.0).unwrap()).unwrap();
        assert!((rows[0].quality - 0.47).abs() < 1e-12);
        assert!((rows[0].frequency_ghz - 140.0 * GHZ_PER_WAVENUMBER / 5000.0).abs() < 1e-12);
        assert!((rows[0].coupling_mhz - 11.98 * GHZ_PER_WAVENUMBER / 5.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn round_trip_and_differences(
            energies in proptest::collection::vec(0.0f64..500.0, 2..6),
            coupling in -120.0f64..120.0,
            s in 100.0f64..10000.0,
        ) {
            prop_assume!(coupling.abs() > 1e-3);
            let n = energies.len();
            let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(energies.clone()));
            for i in 0..n - 1 {
                h[(i, i + 1)] = coupling;
                h[(i + 1, i)] = coupling;
            }
            let model = model_from_matrix(&h).unwrap();
            let scale = ScaleMap::new(s).unwrap();
            let plan = compile(&model, &[], scale, &CompileOptions::default()).unwrap();
            for c in &plan.couplers {
                prop_assert!((c.effective_ghz.unwrap() - c.target_ghz).abs() < 1e-9);
            }
            for i in 0..n {
                for j in 0..n {
                    let d = plan.qubits[i].splitting_ghz - plan.qubits[j].splitting_ghz;
                    let expected = (energies[i] - energies[j]) * GHZ_PER_WAVENUMBER / s;
                    prop_assert!((d - expected).abs() < 1e-12);
                }
            }
        }
    }
}
