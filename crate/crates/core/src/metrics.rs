//! Heralding figures of merit: conditional map, fidelity, actuation probability,
//! per-input herald and conditional probabilities.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{single_photon_unitary, transition_amplitude, BasisState, Simulator, State};
use crate::scheme::{dual_rail, dual_rail_decode, HeraldKind, Scheme};
use crate::target::TargetGate;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorModel {
    /// Photon-number resolving: counts must equal the pattern.
    #[default]
    Pnr,
    /// Click/no-click: a pattern entry ≥ 1 needs at least one photon, 0 needs vacuum.
    Threshold,
}

impl DetectorModel {
    pub fn matches(self, pattern: &[u8], observed: &[u8]) -> bool {
        pattern.len() == observed.len()
            && pattern
                .iter()
                .zip(observed)
                .all(|(&want, &got)| match self {
                    DetectorModel::Pnr => want == got,
                    DetectorModel::Threshold => (want == 0) == (got == 0),
                })
    }
}

impl FromStr for DetectorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pnr" => Ok(DetectorModel::Pnr),
            "threshold" => Ok(DetectorModel::Threshold),
            _ => Err(Error::parse(
                "detector",
                format!("unknown detector '{s}', expected pnr or threshold"),
            )),
        }
    }
}

impl fmt::Display for DetectorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorModel::Pnr => "pnr",
            DetectorModel::Threshold => "threshold",
        })
    }
}

/// Acceptance rule applied to an output Fock state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeraldRule {
    pub detector: DetectorModel,
    /// Also require at least one photon in each qubit's rail pair.
    pub coincidence: bool,
}

impl HeraldRule {
    pub fn for_scheme(scheme: &Scheme, detector: DetectorModel) -> Self {
        HeraldRule {
            detector,
            coincidence: scheme.herald_kind == HeraldKind::PatternPlusCoincidence,
        }
    }

    pub fn accepts(&self, scheme: &Scheme, output: &BasisState) -> bool {
        let ancilla = scheme.ancilla_occupations(output);
        if !self.detector.matches(&scheme.herald_pattern, &ancilla) {
            return false;
        }
        !self.coincidence || coincidence_passes(scheme, output)
    }
}

/// At least one photon among (c0, c1) and at least one among (t0, t1).
pub fn coincidence_passes(scheme: &Scheme, output: &BasisState) -> bool {
    let s = &scheme.signal_modes;
    let any = |a: usize, b: usize| output.get(a) + output.get(b) > 0;
    s.len() == 4 && any(s[0], s[1]) && any(s[2], s[3])
}

/// Heralded amplitudes between logical basis states; `M[(out, in)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalMap(pub Matrix4<Complex64>);

impl ConditionalMap {
    /// `|Tr(U†M)|² / (4·Tr(M†M))`, or 0 for a vanishing map.
    pub fn fidelity(&self, target: &TargetGate) -> f64 {
        let norm = self.frobenius_sqr();
        if norm <= f64::MIN_POSITIVE {
            return 0.0;
        }
        let overlap = (target.matrix.adjoint() * self.0).trace();
        (overlap.norm_sqr() / (4.0 * norm)).min(1.0)
    }

    /// `Tr(M†M)/4`.
    pub fn actuation_probability(&self) -> f64 {
        self.frobenius_sqr() / 4.0
    }

    fn frobenius_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fidelity: f64,
    pub p: f64,
    pub pa: [f64; 4],
    /// `None` where the herald never fires for that input.
    pub pb: [Option<f64>; 4],
    pub pa_mean: f64,
    pub pb_mean: Option<f64>,
    pub detector: DetectorModel,
    pub corrected: bool,
}

impl MetricsReport {
    /// Smallest defined per-input Pb.
    pub fn pb_min(&self) -> Option<f64> {
        self.pb.iter().flatten().copied().reduce(f64::min)
    }
}

/// Per-input results of one pass over the four logical inputs.
#[derive(Clone, Debug)]
pub(crate) struct Analysis {
    pub map: ConditionalMap,
    pub pa: [f64; 4],
    pub p_correct: [f64; 4],
}

/// Metric engine; the simulator carries the photon cap.
#[derive(Clone, Copy, Debug, Default)]
pub struct Evaluator {
    pub sim: Simulator,
}

impl Evaluator {
    pub fn new(sim: Simulator) -> Self {
        Evaluator { sim }
    }

    fn require_two_qubit(scheme: &Scheme) -> Result<()> {
        if scheme.is_two_qubit() {
            Ok(())
        } else {
            Err(Error::NotTwoQubit(scheme.signal_modes.len()))
        }
    }

    pub(crate) fn outputs(&self, scheme: &Scheme) -> Result<Vec<State>> {
        Self::require_two_qubit(scheme)?;
        (0..4)
            .map(|x| {
                self.sim
                    .evolve(&scheme.elements, &scheme.dual_rail_encode(x)?)
            })
            .collect()
    }

    pub(crate) fn analyse(
        &self,
        scheme: &Scheme,
        target: &TargetGate,
        rule: HeraldRule,
    ) -> Result<Analysis> {
        let outputs = self.outputs(scheme)?;
        Ok(analyse_outputs(scheme, target, rule, &outputs))
    }

    /// Heralded logical amplitudes using the exact ancilla pattern.
    pub fn conditional_map(&self, scheme: &Scheme) -> Result<ConditionalMap> {
        let outputs = self.outputs(scheme)?;
        Ok(map_from_outputs(scheme, &outputs))
    }

    /// Probability that the herald fires for logical input `input`.
    pub fn herald_probability(
        &self,
        scheme: &Scheme,
        input: usize,
        detector: DetectorModel,
    ) -> Result<f64> {
        Self::require_two_qubit(scheme)?;
        let rule = HeraldRule::for_scheme(scheme, detector);
        let state = self
            .sim
            .evolve(&scheme.elements, &scheme.dual_rail_encode(input)?)?;
        Ok(accepted_weight(scheme, rule, &state))
    }

    /// Herald probability for a superposition `Σ amplitudes[x]·|x⟩` of logical inputs.
    pub fn herald_probability_superposed(
        &self,
        scheme: &Scheme,
        amplitudes: &[Complex64; 4],
        detector: DetectorModel,
    ) -> Result<f64> {
        Self::require_two_qubit(scheme)?;
        let mut input = State::empty(scheme.modes);
        for (x, &a) in amplitudes.iter().enumerate() {
            input.add(scheme.dual_rail_encode(x)?, a)?;
        }
        let state = self.sim.evolve_state(&scheme.elements, input)?;
        Ok(accepted_weight(
            scheme,
            HeraldRule::for_scheme(scheme, detector),
            &state,
        ))
    }

    pub fn metrics_report(
        &self,
        scheme: &Scheme,
        target: &TargetGate,
        detector: DetectorModel,
    ) -> Result<MetricsReport> {
        let rule = HeraldRule::for_scheme(scheme, detector);
        let analysis = self.analyse(scheme, target, rule)?;
        Ok(report_from(
            scheme,
            target,
            &analysis,
            detector,
            rule.coincidence,
        ))
    }

    /// Heralded amplitude `⟨signal_out, pattern| U |signal_in, ancilla_in⟩` for any signal mode count.
    pub fn heralded_amplitude(
        &self,
        scheme: &Scheme,
        signal_in: &[u8],
        signal_out: &[u8],
    ) -> Result<Complex64> {
        let state = self
            .sim
            .evolve(&scheme.elements, &scheme.input_state(signal_in))?;
        Ok(state.amplitude(&scheme.heralded_output(signal_out)))
    }
}

/// Conditional map through permanents of the transfer matrix `u`, skipping state evolution.
pub fn conditional_map_from_unitary(
    scheme: &Scheme,
    u: &DMatrix<Complex64>,
) -> Result<ConditionalMap> {
    Evaluator::require_two_qubit(scheme)?;
    let mut m = Matrix4::zeros();
    if scheme.ancilla_photons()
        != scheme
            .herald_pattern
            .iter()
            .map(|&n| n as usize)
            .sum::<usize>()
    {
        return Ok(ConditionalMap(m));
    }
    for x in 0..4 {
        let input = scheme.dual_rail_encode(x)?;
        for y in 0..4 {
            m[(y, x)] = transition_amplitude(u, &input, &scheme.heralded_output(&dual_rail(y)))?;
        }
    }
    Ok(ConditionalMap(m))
}

/// Same as [`Evaluator::conditional_map`], computed with permanents.
pub fn conditional_map_by_permanents(scheme: &Scheme) -> Result<ConditionalMap> {
    conditional_map_from_unitary(
        scheme,
        &single_photon_unitary(&scheme.elements, scheme.modes)?,
    )
}

pub(crate) fn accepted_weight(scheme: &Scheme, rule: HeraldRule, state: &State) -> f64 {
    state
        .iter()
        .filter(|(b, _)| rule.accepts(scheme, b))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn map_from_outputs(scheme: &Scheme, outputs: &[State]) -> ConditionalMap {
    let mut m = Matrix4::zeros();
    for (x, state) in outputs.iter().enumerate() {
        for y in 0..4 {
            m[(y, x)] = state.amplitude(&scheme.heralded_output(&dual_rail(y)));
        }
    }
    ConditionalMap(m)
}

pub(crate) fn analyse_outputs(
    scheme: &Scheme,
    target: &TargetGate,
    rule: HeraldRule,
    outputs: &[State],
) -> Analysis {
    let mut pa = [0.0; 4];
    let mut p_correct = [0.0; 4];
    for (x, state) in outputs.iter().enumerate() {
        // overlap with target|x⟩ on the signal modes, one entry per ancilla outcome
        let mut overlaps: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
        for (basis, &amp) in state.iter() {
            if !rule.accepts(scheme, basis) {
                continue;
            }
            pa[x] += amp.norm_sqr();
            if let Some(y) = dual_rail_decode(&scheme.signal_occupations(basis)) {
                let weight = target.matrix[(y, x)].conj();
                *overlaps
                    .entry(scheme.ancilla_occupations(basis))
                    .or_insert(ZERO) += weight * amp;
            }
        }
        p_correct[x] = overlaps.values().map(|z| z.norm_sqr()).sum();
    }
    Analysis {
        map: map_from_outputs(scheme, outputs),
        pa,
        p_correct,
    }
}

pub(crate) fn report_from(
    _scheme: &Scheme,
    target: &TargetGate,
    analysis: &Analysis,
    detector: DetectorModel,
    corrected: bool,
) -> MetricsReport {
    let p = analysis.map.actuation_probability();
    let pa_mean = analysis.pa.iter().sum::<f64>() / 4.0;
    let pb: [Option<f64>; 4] = std::array::from_fn(|x| {
        (analysis.pa[x] > 0.0).then(|| (analysis.p_correct[x] / analysis.pa[x]).min(1.0))
    });
    MetricsReport {
        fidelity: analysis.map.fidelity(target),
        p,
        pa: analysis.pa,
        pb,
        pa_mean,
        pb_mean: (pa_mean > 0.0).then(|| p / pa_mean),
        detector,
        corrected,
    }
}

/// Conditional map with the default photon cap.
pub fn conditional_map(scheme: &Scheme) -> Result<ConditionalMap> {
    Evaluator::default().conditional_map(scheme)
}

pub fn fidelity(map: &ConditionalMap, target: &TargetGate) -> f64 {
    map.fidelity(target)
}

pub fn actuation_probability(map: &ConditionalMap) -> f64 {
    map.actuation_probability()
}

pub fn herald_probability(scheme: &Scheme, input: usize, detector: DetectorModel) -> Result<f64> {
    Evaluator::default().herald_probability(scheme, input, detector)
}

pub fn metrics_report(
    scheme: &Scheme,
    target: &TargetGate,
    detector: DetectorModel,
) -> Result<MetricsReport> {
    Evaluator::default().metrics_report(scheme, target, detector)
}
