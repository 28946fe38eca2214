//! Sparse multimode Fock-space states and their evolution through linear optics.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::element::OpticalElement;
use crate::error::{Error, Result};

pub const DEFAULT_PHOTON_CAP: usize = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

// Amplitudes below this magnitude squared are dropped after each element.
const PRUNE: f64 = 1e-34;

/// Occupation numbers, one entry per mode.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisState(Vec<u8>);

impl BasisState {
    pub fn new(occupations: Vec<u8>) -> Self {
        BasisState(occupations)
    }

    pub fn vacuum(modes: usize) -> Self {
        BasisState(vec![0; modes])
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn photons(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, mode: usize) -> u8 {
        self.0[mode]
    }

    pub fn set(&mut self, mode: usize, n: u8) {
        self.0[mode] = n;
    }

    /// Mode indices repeated by occupation, e.g. `(2,0,1)` gives `[0,0,2]`.
    pub fn mode_list(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(m, &n)| std::iter::repeat_n(m, n as usize))
            .collect()
    }

    fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&n| factorial(n as usize)).product()
    }
}

impl From<Vec<u8>> for BasisState {
    fn from(v: Vec<u8>) -> Self {
        BasisState(v)
    }
}

impl<const N: usize> From<[u8; N]> for BasisState {
    fn from(v: [u8; N]) -> Self {
        BasisState(v.to_vec())
    }
}

impl fmt::Debug for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, "⟩")
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A pure state as a sparse map from basis states to amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    modes: usize,
    amplitudes: BTreeMap<BasisState, Complex64>,
}

impl State {
    pub fn empty(modes: usize) -> Self {
        State {
            modes,
            amplitudes: BTreeMap::new(),
        }
    }

    pub fn basis(basis: BasisState) -> Self {
        let modes = basis.modes();
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(basis, ONE);
        State { modes, amplitudes }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Adds `amp` to the coefficient of `basis`.
    pub fn add(&mut self, basis: BasisState, amp: Complex64) -> Result<()> {
        if basis.modes() != self.modes {
            return Err(Error::ModeMismatch {
                expected: self.modes,
                found: basis.modes(),
            });
        }
        *self.amplitudes.entry(basis).or_insert(ZERO) += amp;
        Ok(())
    }

    pub fn amplitude(&self, basis: &BasisState) -> Complex64 {
        self.amplitudes.get(basis).copied().unwrap_or(ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisState, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Largest photon number carried by any component.
    pub fn max_photons(&self) -> usize {
        self.amplitudes
            .keys()
            .map(BasisState::photons)
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in self.amplitudes.values_mut() {
            *a *= factor;
        }
    }

    /// Keeps only components satisfying `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(&BasisState) -> bool) {
        self.amplitudes.retain(|b, _| keep(b));
    }

    /// Applies one element in place.
    pub fn apply(&mut self, element: &OpticalElement) -> Result<()> {
        element.validate(self.modes)?;
        match *element {
            OpticalElement::PhaseShifter { mode, phi } => {
                let phase = Complex64::from_polar(1.0, phi.to_radians());
                for (basis, amp) in self.amplitudes.iter_mut() {
                    *amp *= phase.powu(basis.get(mode) as u32);
                }
            }
            OpticalElement::BeamSplitter { a, b, theta, phi } => {
                self.amplitudes =
                    beam_splitter(&self.amplitudes, a, b, theta.to_radians(), phi.to_radians());
            }
        }
        Ok(())
    }
}

fn beam_splitter(
    input: &BTreeMap<BasisState, Complex64>,
    a: usize,
    b: usize,
    theta: f64,
    phi: f64,
) -> BTreeMap<BasisState, Complex64> {
    let c = Complex64::new(theta.cos(), 0.0);
    let s = theta.sin();
    // image coefficients: a† -> c a† + t_ab b†,  b† -> t_ba a† + c b†
    let t_ab = Complex64::from_polar(s, -phi);
    let t_ba = -Complex64::from_polar(s, phi);

    let mut out: BTreeMap<BasisState, Complex64> = BTreeMap::new();
    for (basis, &amp) in input {
        let na = basis.get(a) as usize;
        let nb = basis.get(b) as usize;
        if na + nb == 0 {
            *out.entry(basis.clone()).or_insert(ZERO) += amp;
            continue;
        }
        let norm_in = factorial(na) * factorial(nb);
        let total = na + nb;
        let mut acc = vec![ZERO; total + 1];
        for k in 0..=na {
            let ca = binomial(na, k) * c.powu(k as u32) * t_ab.powu((na - k) as u32);
            for l in 0..=nb {
                let cb = binomial(nb, l) * t_ba.powu(l as u32) * c.powu((nb - l) as u32);
                acc[k + l] += ca * cb;
            }
        }
        for (na_out, coef) in acc.into_iter().enumerate() {
            let nb_out = total - na_out;
            let value = coef * (factorial(na_out) * factorial(nb_out) / norm_in).sqrt() * amp;
            if value.norm_sqr() <= PRUNE {
                continue;
            }
            let mut next = basis.clone();
            next.set(a, na_out as u8);
            next.set(b, nb_out as u8);
            *out.entry(next).or_insert(ZERO) += value;
        }
    }
    out.retain(|_, v| v.norm_sqr() > PRUNE);
    out
}

/// Evolution engine with a guard on total photon number.
#[derive(Clone, Copy, Debug)]
pub struct Simulator {
    pub photon_cap: usize,
}

impl Default for Simulator {
    fn default() -> Self {
        Simulator {
            photon_cap: DEFAULT_PHOTON_CAP,
        }
    }
}

impl Simulator {
    pub fn new(photon_cap: usize) -> Self {
        Simulator { photon_cap }
    }

    pub fn check_photons(&self, photons: usize) -> Result<()> {
        if photons > self.photon_cap {
            return Err(Error::PhotonCapExceeded {
                photons,
                cap: self.photon_cap,
            });
        }
        Ok(())
    }

    /// Runs `input` through `elements` in order.
    pub fn evolve(&self, elements: &[OpticalElement], input: &BasisState) -> Result<State> {
        self.evolve_state(elements, State::basis(input.clone()))
    }

    pub fn evolve_state(&self, elements: &[OpticalElement], mut state: State) -> Result<State> {
        self.check_photons(state.max_photons())?;
        for element in elements {
            state.apply(element)?;
        }
        Ok(state)
    }
}

/// Transforms a state by one element; see [`State::apply`].
pub fn apply_element(state: &State, element: &OpticalElement) -> Result<State> {
    let mut next = state.clone();
    next.apply(element)?;
    Ok(next)
}

/// Evolves with the default photon cap.
pub fn evolve(elements: &[OpticalElement], input: &BasisState) -> Result<State> {
    Simulator::default().evolve(elements, input)
}

pub fn amplitude(state: &State, basis: &BasisState) -> Complex64 {
    state.amplitude(basis)
}

/// Single-photon transfer matrix of an element list. Column `j` is the image of `a†_j`.
pub fn single_photon_unitary(
    elements: &[OpticalElement],
    modes: usize,
) -> Result<DMatrix<Complex64>> {
    let mut u = DMatrix::<Complex64>::identity(modes, modes);
    for element in elements {
        element.validate(modes)?;
        match *element {
            OpticalElement::PhaseShifter { mode, phi } => {
                let phase = Complex64::from_polar(1.0, phi.to_radians());
                u.row_mut(mode).iter_mut().for_each(|x| *x *= phase);
            }
            OpticalElement::BeamSplitter { a, b, theta, phi } => {
                let (s, c) = theta.to_radians().sin_cos();
                let phi = phi.to_radians();
                let t_ab = Complex64::from_polar(s, -phi);
                let t_ba = -Complex64::from_polar(s, phi);
                for col in 0..modes {
                    let ua = u[(a, col)];
                    let ub = u[(b, col)];
                    u[(a, col)] = ua * c + ub * t_ba;
                    u[(b, col)] = ua * t_ab + ub * c;
                }
            }
        }
    }
    Ok(u)
}

/// Matrix permanent by Ryser's formula with Gray-code updates.
pub fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "permanent needs a square matrix");
    if n == 0 {
        return ONE;
    }
    let mut row_sums = vec![ZERO; n];
    let mut total = ZERO;
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let flipped = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << flipped) != 0;
        for (i, sum) in row_sums.iter_mut().enumerate() {
            if added {
                *sum += m[(i, flipped)];
            } else {
                *sum -= m[(i, flipped)];
            }
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        if (n - next.count_ones() as usize).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// `⟨output| U |input⟩` for a single-photon matrix `u`.
pub fn transition_amplitude(
    u: &DMatrix<Complex64>,
    input: &BasisState,
    output: &BasisState,
) -> Result<Complex64> {
    let (n_in, n_out) = (input.photons(), output.photons());
    if n_in != n_out {
        return Err(Error::PhotonMismatch {
            input: n_in,
            output: n_out,
        });
    }
    for state in [input, output] {
        if state.modes() != u.nrows() {
            return Err(Error::ModeMismatch {
                expected: u.nrows(),
                found: state.modes(),
            });
        }
    }
    let rows = output.mode_list();
    let cols = input.mode_list();
    let sub = DMatrix::from_fn(n_in, n_in, |i, j| u[(rows[i], cols[j])]);
    let norm = (input.factorial_product() * output.factorial_product()).sqrt();
    Ok(permanent(&sub) / norm)
}

/// Transition amplitude through the permanent of the composed transfer matrix.
/// Independent of the element-by-element evolution in [`Simulator::evolve`].
pub fn permanent_oracle(
    elements: &[OpticalElement],
    input: &BasisState,
    output: &BasisState,
) -> Result<Complex64> {
    let u = single_photon_unitary(elements, input.modes())?;
    transition_amplitude(&u, input, output)
}

/// All occupation vectors of `photons` over `modes`, in lexicographic order.
pub fn fock_basis(modes: usize, photons: usize) -> Vec<BasisState> {
    fn rec(prefix: &mut Vec<u8>, modes: usize, left: usize, out: &mut Vec<BasisState>) {
        if prefix.len() + 1 == modes {
            prefix.push(left as u8);
            out.push(BasisState(prefix.clone()));
            prefix.pop();
            return;
        }
        for n in 0..=left {
            prefix.push(n as u8);
            rec(prefix, modes, left - n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if modes == 0 {
        if photons == 0 {
            out.push(BasisState(Vec::new()));
        }
        return out;
    }
    rec(&mut Vec::with_capacity(modes), modes, photons, &mut out);
    out
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hong_ou_mandel() {
        let out = evolve(&[OpticalElement::bs(0, 1, 45.0, 0.0)], &[1, 1].into()).unwrap();
        assert!(out.amplitude(&[1, 1].into()).norm() < 1e-15);
        assert_relative_eq!(
            out.amplitude(&[2, 0].into()).norm(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            out.amplitude(&[0, 2].into()).norm(),
            0.5f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn single_photon_follows_matrix() {
        let (theta, phi) = (30.0f64, 40.0f64);
        let out = evolve(&[OpticalElement::bs(0, 1, theta, phi)], &[1, 0].into()).unwrap();
        let (t, p) = (theta.to_radians(), phi.to_radians());
        assert_relative_eq!(out.amplitude(&[1, 0].into()).re, t.cos(), epsilon = 1e-15);
        let want = Complex64::from_polar(t.sin(), -p);
        assert!((out.amplitude(&[0, 1].into()) - want).norm() < 1e-15);
    }

    #[test]
    fn phase_shifter_is_per_photon() {
        let out = evolve(&[OpticalElement::ps(0, 90.0)], &[2].into()).unwrap();
        assert!((out.amplitude(&[2].into()) - c(-1.0, 0.0)).norm() < 1e-15);
        let oracle =
            permanent_oracle(&[OpticalElement::ps(0, 90.0)], &[2].into(), &[2].into()).unwrap();
        assert!((oracle - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_cases() {
        let out = evolve(&[], &[1, 0].into()).unwrap();
        assert_eq!(amplitude(&out, &[1, 0].into()), ONE);
        let id = permanent_oracle(&[], &[1, 0, 1].into(), &[1, 0, 1].into()).unwrap();
        assert!((id - ONE).norm() < 1e-15);
        let hom = permanent_oracle(
            &[OpticalElement::bs(0, 1, 45.0, 0.0)],
            &[1, 1].into(),
            &[1, 1].into(),
        )
        .unwrap();
        assert!(hom.norm() < 1e-15);
    }

    #[test]
    fn photon_cap_is_enforced() {
        let err = Simulator::new(2).evolve(&[], &[2, 1].into()).unwrap_err();
        assert!(matches!(
            err,
            Error::PhotonCapExceeded { photons: 3, cap: 2 }
        ));
    }

    #[test]
    fn oracle_rejects_photon_mismatch() {
        assert!(matches!(
            permanent_oracle(&[], &[1, 0].into(), &[1, 1].into()),
            Err(Error::PhotonMismatch { .. })
        ));
    }

    #[test]
    fn invalid_mode_is_reported() {
        let err = evolve(&[OpticalElement::ps(4, 10.0)], &[1, 0].into()).unwrap_err();
        assert!(err.to_string().contains("PS[4]"));
    }

    #[test]
    fn ryser_matches_small_cases() {
        let m =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        assert!((permanent(&m) - c(10.0, 0.0)).norm() < 1e-12);
        let ones = DMatrix::from_element(4, 4, ONE);
        assert!((permanent(&ones) - c(24.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn basis_enumeration_size() {
        assert_eq!(fock_basis(8, 5).len(), 792);
        assert_eq!(fock_basis(4, 2).len(), 10);
        assert!(fock_basis(3, 2).iter().all(|b| b.photons() == 2));
    }

    fn element_strategy(modes: usize) -> impl Strategy<Value = OpticalElement> {
        prop_oneof![
            (0..modes, 1..modes, -360.0..360.0f64, -360.0..360.0f64)
                .prop_map(move |(a, off, t, p)| { OpticalElement::bs(a, (a + off) % modes, t, p) }),
            (0..modes, -360.0..360.0f64).prop_map(|(m, p)| OpticalElement::ps(m, p)),
        ]
    }

    fn scheme_strategy() -> impl Strategy<Value = (usize, Vec<OpticalElement>, Vec<u8>)> {
        (2usize..=6).prop_flat_map(|modes| {
            (
                Just(modes),
                proptest::collection::vec(element_strategy(modes), 0..=6),
                proptest::collection::vec(0u8..=1, modes),
            )
        })
    }

    proptest! {
        #[test]
        fn evolution_matches_permanent_oracle((modes, elements, mut occ) in scheme_strategy(), extra in 0usize..3) {
            occ[extra % modes] += 1;
            let photons: usize = occ.iter().map(|&n| n as usize).sum();
            prop_assume!(photons <= 3);
            let input = BasisState::new(occ);
            let state = evolve(&elements, &input).unwrap();
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
            let u = single_photon_unitary(&elements, modes).unwrap();
            for output in fock_basis(modes, photons) {
                let want = transition_amplitude(&u, &input, &output).unwrap();
                prop_assert!((state.amplitude(&output) - want).norm() < 1e-10);
            }
        }

        #[test]
        fn transfer_matrix_is_unitary((modes, elements, _) in scheme_strategy()) {
            let u = single_photon_unitary(&elements, modes).unwrap();
            let err = (u.adjoint() * &u - DMatrix::identity(modes, modes)).norm();
            prop_assert!(err < 1e-12);
        }

        #[test]
        fn zero_angle_splitter_is_identity(phi in -360.0..360.0f64, occ in proptest::collection::vec(0u8..3, 3)) {
            let input = BasisState::new(occ);
            let out = evolve(&[OpticalElement::bs(0, 2, 0.0, phi)], &input).unwrap();
            prop_assert_eq!(out.len(), 1);
            prop_assert!((out.amplitude(&input) - ONE).norm() < 1e-15);
        }

        #[test]
        fn photon_number_is_conserved((_, elements, occ) in scheme_strategy()) {
            let input = BasisState::new(occ);
            let n = input.photons();
            let state = evolve(&elements, &input).unwrap();
            prop_assert!(state.iter().all(|(b, _)| b.photons() == n));
        }
    }
}
