//! Flat numeric encoding of schemes for crossover and mutation.
//!
//! Gene order: θ (one per beam splitter), φ (one per beam splitter, then one per
//! phase shifter), beam-splitter mode pairs, phase-shifter modes, ancilla input
//! modes, ancilla output modes. Ancilla genes index into the ancilla mode list.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::element::{Angle, OpticalElement};
use crate::error::{Error, Result};
use crate::scheme::{HeraldKind, Scheme};

fn default_signal_modes() -> Vec<usize> {
    vec![0, 1, 2, 3]
}

fn default_decimals() -> u32 {
    2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenomeLayout {
    /// Beam splitter count.
    pub depth: usize,
    #[serde(default)]
    pub ps_count: usize,
    pub modes: usize,
    /// Ancilla photon count.
    #[serde(default)]
    pub ancilla_photons: usize,
    /// Detect ancilla photons in the modes they were injected into.
    #[serde(default)]
    pub fix_ancilla_io: bool,
    #[serde(default = "default_signal_modes")]
    pub signal_modes: Vec<usize>,
    /// Decimal places kept on θ genes; φ genes always keep 2.
    #[serde(default = "default_decimals")]
    pub theta_decimals: u32,
}

/// Which kind of value a gene holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneKind {
    Theta,
    Phi,
    Mode,
    Ancilla,
    /// Ancilla output slot that mirrors the input when `fix_ancilla_io` is set.
    AncillaOut,
}

impl GenomeLayout {
    pub fn new(
        depth: usize,
        ps_count: usize,
        modes: usize,
        ancilla_photons: usize,
        fix_ancilla_io: bool,
    ) -> Self {
        GenomeLayout {
            depth,
            ps_count,
            modes,
            ancilla_photons,
            fix_ancilla_io,
            signal_modes: default_signal_modes(),
            theta_decimals: default_decimals(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.depth == 0 {
            return bad("layout depth must be at least 1".into());
        }
        if self.modes < 4 {
            return bad(format!(
                "layout needs at least 4 modes, found {}",
                self.modes
            ));
        }
        if self.ps_count > 2 * self.depth {
            return bad(format!(
                "ps_count {} exceeds twice the depth {}",
                self.ps_count, self.depth
            ));
        }
        if self.signal_modes.len() != 4 || self.signal_modes.iter().any(|&m| m >= self.modes) {
            return bad("signal_modes must name 4 modes inside the layout".into());
        }
        let mut sorted = self.signal_modes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != 4 {
            return bad("signal_modes must be distinct".into());
        }
        if self.ancilla_photons > 0 && self.ancilla_mode_count() == 0 {
            return bad("ancilla photons need at least one ancilla mode".into());
        }
        if self.ancilla_photons > u8::MAX as usize {
            return bad("too many ancilla photons".into());
        }
        Ok(())
    }

    pub fn ancilla_modes(&self) -> Vec<usize> {
        (0..self.modes)
            .filter(|m| !self.signal_modes.contains(m))
            .collect()
    }

    pub fn ancilla_mode_count(&self) -> usize {
        self.modes.saturating_sub(4)
    }

    pub fn len(&self) -> usize {
        self.depth * 4 + self.ps_count * 2 + self.ancilla_photons * 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn phi_start(&self) -> usize {
        self.depth
    }

    fn pairs_start(&self) -> usize {
        2 * self.depth + self.ps_count
    }

    fn ps_modes_start(&self) -> usize {
        self.pairs_start() + 2 * self.depth
    }

    fn ancilla_in_start(&self) -> usize {
        self.ps_modes_start() + self.ps_count
    }

    fn ancilla_out_start(&self) -> usize {
        self.ancilla_in_start() + self.ancilla_photons
    }

    pub fn gene_kind(&self, index: usize) -> GeneKind {
        if index < self.phi_start() {
            GeneKind::Theta
        } else if index < self.pairs_start() {
            GeneKind::Phi
        } else if index < self.ancilla_in_start() {
            GeneKind::Mode
        } else if index < self.ancilla_out_start() {
            GeneKind::Ancilla
        } else {
            GeneKind::AncillaOut
        }
    }

    /// Genes that mutation may touch.
    pub fn mutable_genes(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !(self.fix_ancilla_io && self.gene_kind(i) == GeneKind::AncillaOut))
            .collect()
    }

    /// A fresh random value for gene `index`.
    pub fn random_gene<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> f64 {
        match self.gene_kind(index) {
            GeneKind::Theta => {
                Angle::degrees(rng.gen_range(0.0..360.0))
                    .quantized(self.theta_decimals)
                    .as_degrees()
                    % 360.0
            }
            GeneKind::Phi => {
                Angle::degrees(rng.gen_range(0.0..360.0))
                    .quantized(2)
                    .as_degrees()
                    % 360.0
            }
            GeneKind::Mode => rng.gen_range(0..self.modes) as f64,
            GeneKind::Ancilla | GeneKind::AncillaOut => {
                rng.gen_range(0..self.ancilla_mode_count().max(1)) as f64
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Genome {
    pub genes: Vec<f64>,
}

/// Genome file: the layout header followed by the flat gene array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenomeFile {
    pub layout: GenomeLayout,
    pub genes: Vec<f64>,
}

fn wrap_index(value: f64, modulus: usize) -> usize {
    if modulus == 0 {
        return 0;
    }
    let v = if value.is_finite() {
        value.round() as i64
    } else {
        0
    };
    v.rem_euclid(modulus as i64) as usize
}

impl Genome {
    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    fn check(&self, layout: &GenomeLayout) -> Result<()> {
        if self.genes.len() != layout.len() {
            return Err(Error::LayoutMismatch(format!(
                "genome has {} genes, layout expects {}",
                self.genes.len(),
                layout.len()
            )));
        }
        Ok(())
    }

    /// Structural repair: wraps indices, separates coincident splitter modes,
    /// sorts ancilla genes and mirrors ancilla outputs when they are fixed.
    pub fn repair(&mut self, layout: &GenomeLayout) {
        let n_a = layout.ancilla_mode_count();
        for i in layout.pairs_start()..layout.ancilla_in_start() {
            self.genes[i] = wrap_index(self.genes[i], layout.modes) as f64;
        }
        for k in 0..layout.depth {
            let ia = layout.pairs_start() + 2 * k;
            if self.genes[ia] == self.genes[ia + 1] {
                self.genes[ia + 1] = ((self.genes[ia] as usize + 1) % layout.modes) as f64;
            }
        }
        let (ai, ao) = (layout.ancilla_in_start(), layout.ancilla_out_start());
        let end = ao + layout.ancilla_photons;
        for i in ai..end {
            self.genes[i] = wrap_index(self.genes[i], n_a) as f64;
        }
        if layout.fix_ancilla_io {
            let (head, tail) = self.genes.split_at_mut(ao);
            tail[..layout.ancilla_photons].copy_from_slice(&head[ai..ao]);
        }
        self.genes[ai..ao].sort_by(f64::total_cmp);
        self.genes[ao..end].sort_by(f64::total_cmp);
    }

    pub fn repaired(mut self, layout: &GenomeLayout) -> Self {
        self.repair(layout);
        self
    }

    /// Builds the scheme; the genome is repaired first.
    pub fn decode(&self, layout: &GenomeLayout) -> Result<Scheme> {
        self.check(layout)?;
        let g = self.clone().repaired(layout);
        let d = layout.depth;
        let mut elements = Vec::with_capacity(d + layout.ps_count);
        for i in 0..d {
            let a = g.genes[layout.pairs_start() + 2 * i] as usize;
            let b = g.genes[layout.pairs_start() + 2 * i + 1] as usize;
            elements.push(OpticalElement::bs(
                a,
                b,
                g.genes[i],
                g.genes[layout.phi_start() + i],
            ));
            for j in (i..layout.ps_count).step_by(d) {
                let mode = g.genes[layout.ps_modes_start() + j] as usize;
                elements.push(OpticalElement::ps(
                    mode,
                    g.genes[layout.phi_start() + d + j],
                ));
            }
        }
        let ancilla_modes = layout.ancilla_modes();
        let counts = |start: usize| {
            let mut c = vec![0u8; ancilla_modes.len()];
            for i in start..start + layout.ancilla_photons {
                c[g.genes[i] as usize] += 1;
            }
            c
        };
        let scheme = Scheme {
            name: None,
            modes: layout.modes,
            signal_modes: layout.signal_modes.clone(),
            ancilla_input: counts(layout.ancilla_in_start()),
            herald_pattern: counts(layout.ancilla_out_start()),
            ancilla_modes,
            herald_kind: HeraldKind::Pattern,
            elements,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    /// Encodes a scheme with at most the layout's element counts, padding with
    /// identity elements (θ = 0 beam splitters, φ = 0 phase shifters) so that
    /// every phase shifter keeps its place in the element order.
    pub fn embed(scheme: &Scheme, layout: &GenomeLayout) -> Result<Genome> {
        layout.validate()?;
        let d = layout.depth;
        let pad_bs = OpticalElement::bs(0, 1, 0.0, 0.0);
        let pad_ps = OpticalElement::ps(0, 0.0);
        let mut bs: Vec<OpticalElement> = Vec::with_capacity(d);
        let mut ps: Vec<Option<OpticalElement>> = vec![None; layout.ps_count];
        let overflow = || {
            Error::LayoutMismatch(format!(
                "scheme does not fit {d} beam splitters and {} phase shifters",
                layout.ps_count
            ))
        };
        for element in &scheme.elements {
            if element.is_beam_splitter() {
                if bs.len() == d {
                    return Err(overflow());
                }
                bs.push(*element);
                continue;
            }
            loop {
                if let Some(i) = bs.len().checked_sub(1) {
                    let free = (i..layout.ps_count).step_by(d).find(|&j| ps[j].is_none());
                    if let Some(j) = free {
                        ps[j] = Some(*element);
                        break;
                    }
                }
                if bs.len() == d {
                    return Err(overflow());
                }
                bs.push(pad_bs);
            }
        }
        bs.resize(d, pad_bs);
        let mut elements = Vec::with_capacity(d + layout.ps_count);
        for (i, b) in bs.into_iter().enumerate() {
            elements.push(b);
            elements.extend(
                (i..layout.ps_count)
                    .step_by(d)
                    .map(|j| ps[j].unwrap_or(pad_ps)),
            );
        }
        let padded = Scheme {
            elements,
            ..scheme.clone()
        };
        Genome::encode(&padded, layout)
    }

    /// Inverse of [`Genome::decode`] for schemes with the layout's structure.
    pub fn encode(scheme: &Scheme, layout: &GenomeLayout) -> Result<Genome> {
        layout.validate()?;
        let mismatch = |m: String| Err(Error::LayoutMismatch(m));
        if scheme.modes != layout.modes || scheme.signal_modes != layout.signal_modes {
            return mismatch("mode count or signal modes differ from the layout".into());
        }
        if scheme.ancilla_modes != layout.ancilla_modes() {
            return mismatch("ancilla modes differ from the layout".into());
        }
        let d = layout.depth;
        let mut genes = vec![0.0; layout.len()];
        let mut elements = scheme.elements.iter();
        for i in 0..d {
            match elements.next() {
                Some(&OpticalElement::BeamSplitter { a, b, theta, phi }) => {
                    genes[i] = theta.as_degrees();
                    genes[layout.phi_start() + i] = phi.as_degrees();
                    genes[layout.pairs_start() + 2 * i] = a as f64;
                    genes[layout.pairs_start() + 2 * i + 1] = b as f64;
                }
                other => return mismatch(format!("expected beam splitter {i}, found {other:?}")),
            }
            for j in (i..layout.ps_count).step_by(d) {
                match elements.next() {
                    Some(&OpticalElement::PhaseShifter { mode, phi }) => {
                        genes[layout.ps_modes_start() + j] = mode as f64;
                        genes[layout.phi_start() + d + j] = phi.as_degrees();
                    }
                    other => {
                        return mismatch(format!("expected phase shifter {j}, found {other:?}"))
                    }
                }
            }
        }
        if let Some(extra) = elements.next() {
            return mismatch(format!("unexpected trailing element {extra}"));
        }
        let indices = |counts: &[u8]| -> Vec<f64> {
            counts
                .iter()
                .enumerate()
                .flat_map(|(m, &n)| std::iter::repeat_n(m as f64, n as usize))
                .collect()
        };
        let a_in = indices(&scheme.ancilla_input);
        let a_out = indices(&scheme.herald_pattern);
        if a_in.len() != layout.ancilla_photons || a_out.len() != layout.ancilla_photons {
            return mismatch(format!(
                "scheme injects {} and heralds {} ancilla photons, layout expects {}",
                a_in.len(),
                a_out.len(),
                layout.ancilla_photons
            ));
        }
        if layout.fix_ancilla_io && a_in != a_out {
            return mismatch("ancilla input and herald differ in a fixed-io layout".into());
        }
        genes[layout.ancilla_in_start()..layout.ancilla_out_start()].copy_from_slice(&a_in);
        genes[layout.ancilla_out_start()..].copy_from_slice(&a_out);
        Ok(Genome { genes })
    }
}

/// Uniform random genome: angles in [0°, 360°), splitter pairs with distinct modes.
pub fn random_genome<R: Rng + ?Sized>(layout: &GenomeLayout, rng: &mut R) -> Genome {
    let mut genes: Vec<f64> = (0..layout.len())
        .map(|i| layout.random_gene(i, rng))
        .collect();
    for k in 0..layout.depth {
        let ia = layout.pairs_start() + 2 * k;
        let a = genes[ia] as usize;
        let b = (a + rng.gen_range(1..layout.modes)) % layout.modes;
        genes[ia + 1] = b as f64;
    }
    Genome { genes }.repaired(layout)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationMode {
    /// With probability R, a quarter of the genes get fresh values.
    #[default]
    PerSpecie,
    /// A quarter of the genes is chosen and each gets a fresh value with probability R.
    PerGene,
}

pub fn mutate<R: Rng + ?Sized>(
    genome: &Genome,
    layout: &GenomeLayout,
    rng: &mut R,
    rate: f64,
    mode: MutationMode,
) -> Genome {
    let mut child = genome.clone();
    let pool = layout.mutable_genes();
    if pool.is_empty() {
        return child;
    }
    let count = pool.len().div_ceil(4);
    match mode {
        MutationMode::PerSpecie => {
            if !rng.gen_bool(rate.clamp(0.0, 1.0)) {
                return child;
            }
            for k in sample(rng, pool.len(), count) {
                child.genes[pool[k]] = layout.random_gene(pool[k], rng);
            }
        }
        MutationMode::PerGene => {
            for k in sample(rng, pool.len(), count).into_vec() {
                if rng.gen_bool(rate.clamp(0.0, 1.0)) {
                    child.genes[pool[k]] = layout.random_gene(pool[k], rng);
                }
            }
        }
    }
    child.repaired(layout)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossoverKind {
    #[default]
    SinglePoint,
    Uniform,
}

pub fn crossover<R: Rng + ?Sized>(
    parent1: &Genome,
    parent2: &Genome,
    layout: &GenomeLayout,
    kind: CrossoverKind,
    rng: &mut R,
) -> Result<Genome> {
    parent1.check(layout)?;
    parent2.check(layout)?;
    let genes = match kind {
        CrossoverKind::SinglePoint => {
            let cut = rng.gen_range(0..=layout.len());
            single_point(parent1, parent2, cut).genes
        }
        CrossoverKind::Uniform => parent1
            .genes
            .iter()
            .zip(&parent2.genes)
            .map(|(&a, &b)| if rng.gen_bool(0.5) { a } else { b })
            .collect(),
    };
    Ok(Genome { genes }.repaired(layout))
}

/// Genes `[0, cut)` from `parent1`, the rest from `parent2`.
pub fn single_point(parent1: &Genome, parent2: &Genome, cut: usize) -> Genome {
    let mut genes = parent1.genes[..cut].to_vec();
    genes.extend_from_slice(&parent2.genes[cut..]);
    Genome { genes }
}
