//! Gate schemes: optical elements plus the roles of their modes, and the
//! reference library.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::element::OpticalElement;
use crate::error::{Error, Result};
use crate::fock::BasisState;

/// How success is announced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeraldKind {
    #[default]
    #[serde(rename = "pattern")]
    Pattern,
    #[serde(rename = "pattern+coincidence")]
    PatternPlusCoincidence,
}

/// Signal modes, ancilla modes with their injected photons, the herald pattern and the circuit.
///
/// Two-qubit schemes list their signal modes as `[c0, c1, t0, t1]`. A single
/// signal mode is also accepted, for photon-number gates such as NSx.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scheme {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub modes: usize,
    pub signal_modes: Vec<usize>,
    pub ancilla_modes: Vec<usize>,
    pub ancilla_input: Vec<u8>,
    pub herald_pattern: Vec<u8>,
    #[serde(default)]
    pub herald_kind: HeraldKind,
    pub elements: Vec<OpticalElement>,
}

impl Scheme {
    /// Checks mode roles, vector lengths and element indices.
    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidScheme(msg));
        if !matches!(self.signal_modes.len(), 1 | 4) {
            return invalid(format!(
                "signal_modes must hold 4 entries (c0, c1, t0, t1) or 1, found {}",
                self.signal_modes.len()
            ));
        }
        let mut seen = vec![false; self.modes];
        for &m in self.signal_modes.iter().chain(&self.ancilla_modes) {
            if m >= self.modes {
                return invalid(format!("mode {m} is out of range for {} modes", self.modes));
            }
            if std::mem::replace(&mut seen[m], true) {
                return invalid(format!("mode {m} is assigned more than one role"));
            }
        }
        if let Some(m) = seen.iter().position(|s| !s) {
            return invalid(format!("mode {m} is neither signal nor ancilla"));
        }
        if self.ancilla_input.len() != self.ancilla_modes.len() {
            return invalid(format!(
                "ancilla_input has {} entries for {} ancilla modes",
                self.ancilla_input.len(),
                self.ancilla_modes.len()
            ));
        }
        if self.herald_pattern.len() != self.ancilla_modes.len() {
            return invalid(format!(
                "herald_pattern has {} entries for {} ancilla modes",
                self.herald_pattern.len(),
                self.ancilla_modes.len()
            ));
        }
        if self.herald_kind == HeraldKind::PatternPlusCoincidence && !self.is_two_qubit() {
            return invalid("coincidence heralding needs 4 signal modes".into());
        }
        for element in &self.elements {
            element.validate(self.modes)?;
        }
        Ok(())
    }

    pub fn is_two_qubit(&self) -> bool {
        self.signal_modes.len() == 4
    }

    /// Total injected ancilla photons.
    pub fn ancilla_photons(&self) -> usize {
        self.ancilla_input.iter().map(|&n| n as usize).sum()
    }

    pub fn beam_splitter_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| e.is_beam_splitter())
            .count()
    }

    pub fn phase_shifter_count(&self) -> usize {
        self.elements.len() - self.beam_splitter_count()
    }

    /// Input Fock state with the given signal occupations and the ancilla photons.
    pub fn input_state(&self, signal: &[u8]) -> BasisState {
        let mut occ = vec![0u8; self.modes];
        for (&m, &n) in self.signal_modes.iter().zip(signal) {
            occ[m] = n;
        }
        for (&m, &n) in self.ancilla_modes.iter().zip(&self.ancilla_input) {
            occ[m] = n;
        }
        BasisState::new(occ)
    }

    /// Output Fock state with the given signal occupations and the herald pattern on the ancillas.
    pub fn heralded_output(&self, signal: &[u8]) -> BasisState {
        let mut occ = vec![0u8; self.modes];
        for (&m, &n) in self.signal_modes.iter().zip(signal) {
            occ[m] = n;
        }
        for (&m, &n) in self.ancilla_modes.iter().zip(&self.herald_pattern) {
            occ[m] = n;
        }
        BasisState::new(occ)
    }

    pub fn signal_occupations(&self, basis: &BasisState) -> Vec<u8> {
        self.signal_modes.iter().map(|&m| basis.get(m)).collect()
    }

    pub fn ancilla_occupations(&self, basis: &BasisState) -> Vec<u8> {
        self.ancilla_modes.iter().map(|&m| basis.get(m)).collect()
    }

    /// Dual-rail input for logical basis index `logical` (0..4, control is the high bit).
    pub fn dual_rail_encode(&self, logical: usize) -> Result<BasisState> {
        if !self.is_two_qubit() {
            return Err(Error::NotTwoQubit(self.signal_modes.len()));
        }
        Ok(self.input_state(&dual_rail(logical)))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scheme: Scheme = crate::error::from_json(text)?;
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme serialization cannot fail")
    }
}

/// Signal occupations `(c0, c1, t0, t1)` of logical basis state `logical`.
pub fn dual_rail(logical: usize) -> [u8; 4] {
    assert!(logical < 4, "logical index {logical} out of range");
    let (c, t) = (logical >> 1, logical & 1);
    let mut occ = [0u8; 4];
    occ[c] = 1;
    occ[2 + t] = 1;
    occ
}

/// Logical index of dual-rail signal occupations, if they are in the code space.
pub fn dual_rail_decode(signal: &[u8]) -> Option<usize> {
    match signal {
        [c0, c1, t0, t1] if c0 + c1 == 1 && t0 + t1 == 1 => Some(2 * (*c1 as usize) + *t1 as usize),
        _ => None,
    }
}

/// Names of the reference gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    Nsx,
    Cz1_16,
    Cx1_9,
    Cz1_9,
    Cz2_27,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::Nsx,
        Builtin::Cz1_16,
        Builtin::Cx1_9,
        Builtin::Cz1_9,
        Builtin::Cz2_27,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Nsx => "NSx",
            Builtin::Cz1_16 => "CZ_1_16",
            Builtin::Cx1_9 => "CX_1_9",
            Builtin::Cz1_9 => "CZ_1_9",
            Builtin::Cz2_27 => "CZ_2_27",
        }
    }

    pub fn scheme(self) -> Scheme {
        let mut scheme = match self {
            Builtin::Nsx => nsx(),
            Builtin::Cz1_16 => cz_1_16(),
            Builtin::Cx1_9 => cx_1_9(),
            Builtin::Cz1_9 => cz_1_9(),
            Builtin::Cz2_27 => cz_2_27(),
        };
        scheme.name = Some(self.name().to_string());
        scheme
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownBuiltin(s.to_string()))
    }
}

/// Looks up a reference gate by name.
pub fn builtin(name: &str) -> Result<Scheme> {
    Ok(name.parse::<Builtin>()?.scheme())
}

/// arccos(1/√3): the 1/3-reflectivity splitter.
pub fn third_angle() -> f64 {
    (1.0 / 3f64.sqrt()).acos().to_degrees()
}

/// arccos(√2 − 1): the middle splitter of the nonlinear sign gate.
pub fn ns_angle() -> f64 {
    (2f64.sqrt() - 1.0).acos().to_degrees()
}

/// Nonlinear sign gate on `signal`, with a one-photon ancilla in `a` and vacuum in `b`.
/// Heralded on one photon in `a` and none in `b`, it maps |n⟩ to ±|n⟩/2 with a sign flip on |2⟩.
pub fn ns_elements(signal: usize, a: usize, b: usize) -> Vec<OpticalElement> {
    vec![
        OpticalElement::ps(signal, 180.0),
        OpticalElement::bs(a, b, 22.5, 0.0),
        OpticalElement::bs(signal, a, ns_angle(), 0.0),
        OpticalElement::bs(a, b, -22.5, 0.0),
    ]
}

fn nsx() -> Scheme {
    Scheme {
        name: None,
        modes: 3,
        signal_modes: vec![0],
        ancilla_modes: vec![1, 2],
        ancilla_input: vec![1, 0],
        herald_pattern: vec![1, 0],
        herald_kind: HeraldKind::Pattern,
        elements: ns_elements(0, 1, 2),
    }
}

fn cz_1_16() -> Scheme {
    let mut elements = vec![OpticalElement::bs(1, 3, 45.0, 0.0)];
    elements.extend(ns_elements(1, 4, 5));
    elements.extend(ns_elements(3, 6, 7));
    elements.push(OpticalElement::bs(1, 3, -45.0, 0.0));
    Scheme {
        name: None,
        modes: 8,
        signal_modes: vec![0, 1, 2, 3],
        ancilla_modes: vec![4, 5, 6, 7],
        ancilla_input: vec![1, 0, 1, 0],
        herald_pattern: vec![1, 0, 1, 0],
        herald_kind: HeraldKind::Pattern,
        elements,
    }
}

fn cz_1_9_elements() -> Vec<OpticalElement> {
    let t = third_angle();
    vec![
        OpticalElement::bs(1, 3, t, 0.0),
        OpticalElement::bs(0, 4, t, 0.0),
        OpticalElement::bs(2, 5, t, 0.0),
    ]
}

fn cz_1_9() -> Scheme {
    Scheme {
        name: None,
        modes: 6,
        signal_modes: vec![0, 1, 2, 3],
        ancilla_modes: vec![4, 5],
        ancilla_input: vec![0, 0],
        herald_pattern: vec![0, 0],
        herald_kind: HeraldKind::Pattern,
        elements: cz_1_9_elements(),
    }
}

fn cx_1_9() -> Scheme {
    let mut elements = vec![OpticalElement::bs(2, 3, -45.0, 0.0)];
    elements.extend(cz_1_9_elements());
    elements.push(OpticalElement::bs(2, 3, 45.0, 0.0));
    Scheme {
        elements,
        ..cz_1_9()
    }
}

fn cz_2_27() -> Scheme {
    let a = third_angle();
    let b = ((3.0 - 6f64.sqrt()) / 6.0).sqrt().acos().to_degrees();
    // modes: c0, c1, ancilla, ancilla, t0, t1
    Scheme {
        name: None,
        modes: 6,
        signal_modes: vec![0, 1, 4, 5],
        ancilla_modes: vec![2, 3],
        ancilla_input: vec![1, 1],
        herald_pattern: vec![1, 1],
        herald_kind: HeraldKind::Pattern,
        elements: vec![
            OpticalElement::bs(1, 3, a, 0.0),
            OpticalElement::bs(2, 5, a - 180.0, 0.0),
            OpticalElement::bs(2, 3, b, 0.0),
            OpticalElement::bs(1, 5, a - 180.0, 0.0),
            OpticalElement::ps(4, -90.0),
            OpticalElement::ps(5, 90.0),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate_and_round_trip() {
        for b in Builtin::ALL {
            let s = b.scheme();
            s.validate().unwrap();
            let back = Scheme::from_json(&s.to_json()).unwrap();
            assert_eq!(back, s, "{b}");
        }
    }

    #[test]
    fn census() {
        let cz9 = builtin("CZ_1_9").unwrap();
        assert_eq!(
            (cz9.beam_splitter_count(), cz9.phase_shifter_count()),
            (3, 0)
        );
        let cz227 = builtin("CZ_2_27").unwrap();
        assert_eq!(
            (cz227.beam_splitter_count(), cz227.phase_shifter_count()),
            (4, 2)
        );
        assert!(matches!(builtin("CZ_1_8"), Err(Error::UnknownBuiltin(_))));
    }

    #[test]
    fn encoding() {
        let cz16 = builtin("CZ_1_16").unwrap();
        let s = cz16.dual_rail_encode(0).unwrap();
        assert_eq!(s.occupations(), &[1, 0, 1, 0, 1, 0, 1, 0]);
        assert_eq!(s.photons(), 4);
        let cx = builtin("CX_1_9").unwrap();
        assert_eq!(
            cx.dual_rail_encode(3).unwrap().occupations(),
            &[0, 1, 0, 1, 0, 0]
        );
        assert_eq!(dual_rail(1), [1, 0, 0, 1]);
        for x in 0..4 {
            assert_eq!(dual_rail_decode(&dual_rail(x)), Some(x));
        }
        assert_eq!(dual_rail_decode(&[2, 0, 0, 0]), None);
        assert!(builtin("NSx").unwrap().dual_rail_encode(0).is_err());
    }

    #[test]
    fn rejects_five_signal_modes_with_path() {
        let mut v: serde_json::Value =
            serde_json::from_str(&builtin("CZ_1_9").unwrap().to_json()).unwrap();
        v["signal_modes"] = serde_json::json!([0, 1, 2, 3, 4]);
        v["ancilla_modes"] = serde_json::json!([5]);
        v["ancilla_input"] = serde_json::json!([0]);
        v["herald_pattern"] = serde_json::json!([0]);
        assert!(matches!(
            Scheme::from_json(&v.to_string()),
            Err(Error::InvalidScheme(_))
        ));

        v["elements"][1]["theta"] = serde_json::json!(12.5);
        let err = Scheme::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("$.elements[1]"), "{err}");
    }

    #[test]
    fn rejects_overlapping_roles() {
        let mut s = builtin("CZ_1_9").unwrap();
        s.ancilla_modes = vec![3, 5];
        assert!(s.validate().is_err());
    }
}
