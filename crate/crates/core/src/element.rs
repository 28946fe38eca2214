//! Linear optical elements: two-mode beam splitters and single-mode phase shifters.
//!
//! Angles are held in degrees. On disk they are written as decimal strings using
//! the shortest representation that parses back to the same `f64`, so a
//! save/load cycle never drifts.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An angle in degrees.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    pub const fn degrees(deg: f64) -> Self {
        Angle(deg)
    }

    pub fn from_radians(rad: f64) -> Self {
        Angle(rad.to_degrees())
    }

    pub fn as_degrees(self) -> f64 {
        self.0
    }

    pub fn to_radians(self) -> f64 {
        self.0.to_radians()
    }

    /// Rounds to `decimals` fractional digits of a degree.
    pub fn quantized(self, decimals: u32) -> Self {
        let scale = 10f64.powi(decimals as i32);
        Angle((self.0 * scale).round() / scale)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::parse("angle", format!("'{s}' is not a decimal number")))?;
        if !value.is_finite() {
            return Err(Error::parse("angle", format!("'{s}' is not finite")));
        }
        Ok(Angle(value))
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(|e: Error| de::Error::custom(e))
    }
}

/// A beam splitter or phase shifter.
///
/// Beam splitter convention on creation operators:
/// `a†_a → cosθ·a†_a + e^{-iφ}·sinθ·a†_b` and `a†_b → −e^{iφ}·sinθ·a†_a + cosθ·a†_b`.
/// A phase shifter multiplies every photon in its mode by `e^{iφ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum OpticalElement {
    #[serde(rename = "bs")]
    BeamSplitter {
        a: usize,
        b: usize,
        theta: Angle,
        phi: Angle,
    },
    #[serde(rename = "ps")]
    PhaseShifter { mode: usize, phi: Angle },
}

impl OpticalElement {
    pub fn bs(a: usize, b: usize, theta_deg: f64, phi_deg: f64) -> Self {
        OpticalElement::BeamSplitter {
            a,
            b,
            theta: Angle::degrees(theta_deg),
            phi: Angle::degrees(phi_deg),
        }
    }

    pub fn ps(mode: usize, phi_deg: f64) -> Self {
        OpticalElement::PhaseShifter {
            mode,
            phi: Angle::degrees(phi_deg),
        }
    }

    pub fn is_beam_splitter(&self) -> bool {
        matches!(self, OpticalElement::BeamSplitter { .. })
    }

    pub fn modes(&self) -> impl Iterator<Item = usize> {
        let (first, second) = match *self {
            OpticalElement::BeamSplitter { a, b, .. } => (a, Some(b)),
            OpticalElement::PhaseShifter { mode, .. } => (mode, None),
        };
        std::iter::once(first).chain(second)
    }

    /// Checks mode indices against a mode count.
    pub fn validate(&self, modes: usize) -> Result<()> {
        for mode in self.modes() {
            if mode >= modes {
                return Err(Error::ModeOutOfRange {
                    element: self.to_string(),
                    mode,
                    modes,
                });
            }
        }
        if let OpticalElement::BeamSplitter { a, b, .. } = *self {
            if a == b {
                return Err(Error::SameMode {
                    element: self.to_string(),
                    mode: a,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for OpticalElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpticalElement::BeamSplitter { a, b, theta, phi } => {
                write!(f, "BS[{a},{b}](θ={theta}°, φ={phi}°)")
            }
            OpticalElement::PhaseShifter { mode, phi } => write!(f, "PS[{mode}](φ={phi}°)"),
        }
    }
}
