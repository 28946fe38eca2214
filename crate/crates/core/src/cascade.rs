//! Chains of gates with fresh ancillas per stage, outcome enumeration, the
//! coincidence correction for click detectors and the photon-migration test.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{BasisState, Simulator, State};
use crate::metrics::{report_from, DetectorModel, Evaluator, HeraldRule, MetricsReport};
use crate::scheme::{builtin, dual_rail, dual_rail_decode, Scheme};
use crate::target::TargetGate;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// Weights below this are treated as exact zeros when classifying records.
const WEIGHT_EPS: f64 = 1e-20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalCheck {
    #[default]
    None,
    /// At least one photon in (c0, c1) and at least one in (t0, t1) at the end of the chain.
    Coincidence,
}

/// A stage given inline or as `builtin:NAME`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StageSpec {
    Reference(String),
    Inline(Box<Scheme>),
}

impl StageSpec {
    pub fn resolve(&self) -> Result<Scheme> {
        match self {
            StageSpec::Reference(text) => {
                let name = text.strip_prefix("builtin:").unwrap_or(text);
                builtin(name)
            }
            StageSpec::Inline(s) => {
                s.validate()?;
                Ok((**s).clone())
            }
        }
    }
}

/// Logical input: a basis index or four complex amplitudes as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainInput {
    Basis(usize),
    Amplitudes(Vec<[f64; 2]>),
}

impl ChainInput {
    fn amplitudes(&self) -> Result<[Complex64; 4]> {
        let mut out = [ZERO; 4];
        match self {
            ChainInput::Basis(x) if *x < 4 => out[*x] = Complex64::new(1.0, 0.0),
            ChainInput::Basis(x) => {
                return Err(Error::InvalidConfig(format!(
                    "logical input {x} is out of range 0..4"
                )));
            }
            ChainInput::Amplitudes(v) if v.len() == 4 => {
                let norm: f64 = v.iter().map(|[re, im]| re * re + im * im).sum();
                if norm <= 0.0 {
                    return Err(Error::InvalidConfig("input amplitudes are all zero".into()));
                }
                for (o, [re, im]) in out.iter_mut().zip(v) {
                    *o = Complex64::new(*re, *im) / norm.sqrt();
                }
            }
            ChainInput::Amplitudes(v) => {
                return Err(Error::InvalidConfig(format!(
                    "expected 4 input amplitudes, found {}",
                    v.len()
                )));
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub stages: Vec<StageSpec>,
    pub input: ChainInput,
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default)]
    pub final_check: FinalCheck,
}

impl ChainSpec {
    pub fn new(
        stages: Vec<Scheme>,
        input: ChainInput,
        detector: DetectorModel,
        final_check: FinalCheck,
    ) -> Self {
        ChainSpec {
            stages: stages
                .into_iter()
                .map(|s| StageSpec::Inline(Box::new(s)))
                .collect(),
            input,
            detector,
            final_check,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        crate::error::from_json(text)
    }
}

/// One distinguishable measurement outcome of a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    /// Ancilla photon counts read at each stage that was reached.
    pub ancilla_counts: Vec<Vec<u8>>,
    /// Signal occupations `(c0, c1, t0, t1)` after the last stage reached.
    pub signal: Vec<u8>,
    pub amplitude: Complex64,
    /// Part of the amplitude that passed through a non-logical signal state between stages.
    pub nonlogical_amplitude: Complex64,
    /// Herald passed at every stage and the final check passed.
    pub accepted: bool,
}

impl OutcomeRecord {
    pub fn probability(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    /// Accepted although some contributing path left the code space between stages.
    pub fn is_false_positive(&self) -> bool {
        self.accepted && self.nonlogical_amplitude.norm_sqr() > WEIGHT_EPS
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    counts: Vec<Vec<u8>>,
    signal: Vec<u8>,
}

#[derive(Clone, Copy, Debug, Default)]
struct Split {
    logical: Complex64,
    nonlogical: Complex64,
}

/// Runs the chain, branching on every stage's ancilla readout.
///
/// Branches whose herald fails stop at that stage and become rejected records,
/// so probabilities over all records sum to one.
pub fn run_chain(spec: &ChainSpec) -> Result<Vec<OutcomeRecord>> {
    run_chain_with(spec, Simulator::default())
}

pub fn run_chain_with(spec: &ChainSpec, sim: Simulator) -> Result<Vec<OutcomeRecord>> {
    let stages = spec
        .stages
        .iter()
        .map(StageSpec::resolve)
        .collect::<Result<Vec<_>>>()?;
    if stages.is_empty() {
        return Err(Error::InvalidConfig(
            "a chain needs at least one stage".into(),
        ));
    }
    if let Some(s) = stages.iter().find(|s| !s.is_two_qubit()) {
        return Err(Error::NotTwoQubit(s.signal_modes.len()));
    }
    let input = spec.input.amplitudes()?;

    let mut live: BTreeMap<Key, Split> = BTreeMap::new();
    for (x, &a) in input.iter().enumerate() {
        if a != ZERO {
            let key = Key {
                counts: Vec::new(),
                signal: dual_rail(x).to_vec(),
            };
            live.insert(
                key,
                Split {
                    logical: a,
                    nonlogical: ZERO,
                },
            );
        }
    }

    let mut done: BTreeMap<Key, (Split, bool)> = BTreeMap::new();
    for (index, stage) in stages.iter().enumerate() {
        let last = index + 1 == stages.len();
        let rule = HeraldRule::for_scheme(stage, spec.detector);
        let branches: Vec<(Key, Split)> = live.into_iter().collect();
        let evolved = branches
            .par_iter()
            .map(|(key, split)| {
                let state = sim.evolve(&stage.elements, &stage.input_state(&key.signal))?;
                Ok((key, *split, state))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut next: BTreeMap<Key, Split> = BTreeMap::new();
        for (key, split, state) in evolved {
            for (basis, &amp) in state.iter() {
                let mut counts = key.counts.clone();
                counts.push(stage.ancilla_occupations(basis));
                let signal = stage.signal_occupations(basis);
                let heralded = rule.accepts(stage, basis);
                let child = Key { counts, signal };
                let mut contribution = Split {
                    logical: split.logical * amp,
                    nonlogical: split.nonlogical * amp,
                };
                if heralded && !last && dual_rail_decode(&child.signal).is_none() {
                    contribution.nonlogical += contribution.logical;
                    contribution.logical = ZERO;
                }
                if heralded && !last {
                    let entry = next.entry(child).or_default();
                    entry.logical += contribution.logical;
                    entry.nonlogical += contribution.nonlogical;
                } else {
                    let accepted = heralded
                        && match spec.final_check {
                            FinalCheck::None => true,
                            FinalCheck::Coincidence => coincidence_on_signal(&child.signal),
                        };
                    let entry = done.entry(child).or_insert((Split::default(), accepted));
                    entry.0.logical += contribution.logical;
                    entry.0.nonlogical += contribution.nonlogical;
                }
            }
        }
        live = next;
    }

    Ok(done
        .into_iter()
        .map(|(key, (split, accepted))| OutcomeRecord {
            ancilla_counts: key.counts,
            signal: key.signal,
            amplitude: split.logical + split.nonlogical,
            nonlogical_amplitude: split.nonlogical,
            accepted,
        })
        .collect())
}

fn coincidence_on_signal(signal: &[u8]) -> bool {
    signal.len() == 4 && signal[0] + signal[1] > 0 && signal[2] + signal[3] > 0
}

/// Writes records as CSV, one row per record, stage readouts joined with `;`.
pub fn write_records_csv<W: Write>(records: &[OutcomeRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record([
        "ancilla_counts",
        "signal",
        "re",
        "im",
        "probability",
        "nonlogical_probability",
        "accepted",
        "false_positive",
    ])
    .map_err(csv_err)?;
    for r in records {
        let counts = r
            .ancilla_counts
            .iter()
            .map(|c| c.iter().map(u8::to_string).collect::<Vec<_>>().join(""))
            .collect::<Vec<_>>()
            .join(";");
        let signal = r.signal.iter().map(u8::to_string).collect::<String>();
        w.write_record([
            counts,
            signal,
            r.amplitude.re.to_string(),
            r.amplitude.im.to_string(),
            r.probability().to_string(),
            r.nonlogical_amplitude.norm_sqr().to_string(),
            r.accepted.to_string(),
            r.is_false_positive().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// True when no signal mode that starts empty can be occupied after a successful herald.
///
/// Checked for the four logical inputs with photon-number-resolving detection.
pub fn migration_check(scheme: &Scheme) -> Result<bool> {
    migration_check_with(scheme, &Evaluator::default())
}

pub fn migration_check_with(scheme: &Scheme, eval: &Evaluator) -> Result<bool> {
    let rule = HeraldRule {
        detector: DetectorModel::Pnr,
        coincidence: false,
    };
    let outputs = eval.outputs(scheme)?;
    for (x, state) in outputs.iter().enumerate() {
        let input = dual_rail(x);
        for (basis, amp) in state.iter() {
            if amp.norm_sqr() <= WEIGHT_EPS || !rule.accepts(scheme, basis) {
                continue;
            }
            let signal = scheme.signal_occupations(basis);
            if input.iter().zip(&signal).any(|(&i, &o)| i == 0 && o > 0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Metrics with the coincidence requirement added to the herald.
///
/// The correction is only sound when photons cannot migrate into empty signal
/// modes; otherwise a coincidence may come from a wrong path and the report is
/// returned uncorrected (`corrected == false`).
pub fn corrected_metrics(
    scheme: &Scheme,
    target: &TargetGate,
    detector: DetectorModel,
) -> Result<MetricsReport> {
    corrected_metrics_with(scheme, target, detector, &Evaluator::default())
}

pub fn corrected_metrics_with(
    scheme: &Scheme,
    target: &TargetGate,
    detector: DetectorModel,
    eval: &Evaluator,
) -> Result<MetricsReport> {
    if !migration_check_with(scheme, eval)? {
        return eval.metrics_report(scheme, target, detector);
    }
    let rule = HeraldRule {
        detector,
        coincidence: true,
    };
    let analysis = eval.analyse(scheme, target, rule)?;
    Ok(report_from(scheme, target, &analysis, detector, true))
}

/// Herald-passing output states of one logical input, for inspection.
pub fn heralded_outputs(
    scheme: &Scheme,
    input: usize,
    detector: DetectorModel,
) -> Result<Vec<(BasisState, Complex64)>> {
    let state: State =
        Simulator::default().evolve(&scheme.elements, &scheme.dual_rail_encode(input)?)?;
    let rule = HeraldRule::for_scheme(scheme, detector);
    Ok(state
        .iter()
        .filter(|(b, a)| a.norm_sqr() > WEIGHT_EPS && rule.accepts(scheme, b))
        .map(|(b, a)| (b.clone(), *a))
        .collect())
}
