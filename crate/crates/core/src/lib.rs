//! Exact simulation and search for heralded linear-optical two-qubit gates.
//!
//! Qubits are dual-rail encoded; ancilla photons enter extra modes and a
//! detection pattern on those modes heralds success. The crate evolves Fock
//! states through beam splitters and phase shifters, scores schemes under
//! photon-number-resolving or threshold detectors, and searches for new schemes
//! with a genetic algorithm or gradient descent over universal meshes.

pub mod cascade;
pub mod element;
pub mod error;
pub mod fock;
pub mod ga;
pub mod genome;
pub mod mesh;
pub mod metrics;
pub mod render;
pub mod scheme;
pub mod target;

pub use element::{Angle, OpticalElement};
pub use error::{Error, Result};
pub use fock::{BasisState, Simulator, State};
pub use metrics::{ConditionalMap, DetectorModel, Evaluator, MetricsReport};
pub use scheme::{builtin, Builtin, HeraldKind, Scheme};
pub use target::{TargetGate, TargetKind};
