#![allow(dead_code)]

use heraldic::{HeraldKind, OpticalElement, Scheme};
use rand::Rng;

pub fn random_elements<R: Rng>(rng: &mut R, modes: usize, depth: usize) -> Vec<OpticalElement> {
    (0..depth)
        .map(|_| {
            if rng.gen_bool(0.7) {
                let a = rng.gen_range(0..modes);
                let b = (a + rng.gen_range(1..modes)) % modes;
                OpticalElement::bs(
                    a,
                    b,
                    rng.gen_range(-180.0..180.0),
                    rng.gen_range(0.0..360.0),
                )
            } else {
                OpticalElement::ps(rng.gen_range(0..modes), rng.gen_range(0.0..360.0))
            }
        })
        .collect()
}

/// Random occupation vector over `modes` modes carrying `photons` photons.
pub fn random_occupation<R: Rng>(rng: &mut R, modes: usize, photons: usize) -> Vec<u8> {
    let mut occ = vec![0u8; modes];
    for _ in 0..photons {
        occ[rng.gen_range(0..modes)] += 1;
    }
    occ
}

/// Random two-qubit scheme: rails on modes 0..4, 1 to 3 ancilla modes with up
/// to 2 photons, and a herald that conserves photon number.
pub fn random_gate<R: Rng>(rng: &mut R) -> Scheme {
    let ancillas = rng.gen_range(1..=3);
    let modes = 4 + ancillas;
    let photons = rng.gen_range(0..=2);
    let ancilla_input = random_occupation(rng, ancillas, photons);
    let herald_pattern = random_occupation(rng, ancillas, photons);
    let depth = rng.gen_range(1..=8);
    let s = Scheme {
        name: None,
        modes,
        signal_modes: vec![0, 1, 2, 3],
        ancilla_modes: (4..modes).collect(),
        ancilla_input,
        herald_pattern,
        herald_kind: HeraldKind::Pattern,
        elements: random_elements(rng, modes, depth),
    };
    s.validate().expect("generated scheme is valid");
    s
}
