//! Ideal two-qubit gates on the logical basis |00⟩, |01⟩, |10⟩, |11⟩.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    #[default]
    Cz,
    Cx,
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cz" => Ok(TargetKind::Cz),
            "cx" | "cnot" => Ok(TargetKind::Cx),
            _ => Err(Error::parse(
                "target",
                format!("unknown gate '{s}', expected cz or cx"),
            )),
        }
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::Cz => "cz",
            TargetKind::Cx => "cx",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetGate {
    pub name: String,
    pub matrix: Matrix4<Complex64>,
}

impl TargetGate {
    pub fn cz() -> Self {
        let mut m = Matrix4::identity();
        m[(3, 3)] = Complex64::new(-1.0, 0.0);
        TargetGate {
            name: "CZ".into(),
            matrix: m,
        }
    }

    pub fn cx() -> Self {
        let mut m = Matrix4::<Complex64>::zeros();
        let one = Complex64::new(1.0, 0.0);
        m[(0, 0)] = one;
        m[(1, 1)] = one;
        m[(3, 2)] = one;
        m[(2, 3)] = one;
        TargetGate {
            name: "CX".into(),
            matrix: m,
        }
    }

    pub fn of(kind: TargetKind) -> Self {
        match kind {
            TargetKind::Cz => Self::cz(),
            TargetKind::Cx => Self::cx(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn targets_are_unitary() {
        for t in [TargetGate::cz(), TargetGate::cx()] {
            let err = (t.matrix.adjoint() * t.matrix - Matrix4::identity()).norm();
            assert!(err < 1e-12, "{}", t.name);
        }
    }

    #[test]
    fn cx_flips_target_when_control_set() {
        let cx = TargetGate::cx().matrix;
        assert_eq!(cx[(3, 2)].re, 1.0);
        assert_eq!(cx[(2, 2)].re, 0.0);
        assert_eq!("CNOT".parse::<TargetKind>().unwrap(), TargetKind::Cx);
    }
}
