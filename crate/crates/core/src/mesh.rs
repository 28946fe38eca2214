//! Universal interferometer meshes (Reck and Clements) and finite-difference
//! gradient descent over their parameters.
//!
//! Each mesh cell is a phase shifter on the upper arm followed by a beam
//! splitter `BS(θ, 0)` on neighbouring modes `(j, j+1)`; a column of output
//! phase shifters closes the mesh. Parameters are radians: all θ, then all φ,
//! then the output phases.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::element::OpticalElement;
use crate::error::{Error, Result};
use crate::fock::single_photon_unitary;
use crate::metrics::conditional_map_from_unitary;
use crate::scheme::{HeraldKind, Scheme};
use crate::target::{TargetGate, TargetKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Reck,
    #[default]
    Clements,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshDesign {
    pub kind: MeshKind,
    pub modes: usize,
    /// Upper mode `j` of each cell acting on `(j, j+1)`, in application order.
    pub cells: Vec<usize>,
}

pub fn build_mesh(kind: MeshKind, modes: usize) -> Result<MeshDesign> {
    if modes < 2 {
        return Err(Error::InvalidConfig(format!(
            "a mesh needs at least 2 modes, found {modes}"
        )));
    }
    let mut cells = Vec::with_capacity(modes * (modes - 1) / 2);
    match kind {
        MeshKind::Reck => {
            for i in 1..modes {
                for j in (0..i).rev() {
                    cells.push(j);
                }
            }
        }
        MeshKind::Clements => {
            for layer in 0..modes {
                cells.extend((layer % 2..modes - 1).step_by(2));
            }
        }
    }
    Ok(MeshDesign { kind, modes, cells })
}

impl MeshDesign {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn parameter_count(&self) -> usize {
        2 * self.cells.len() + self.modes
    }

    pub fn elements(&self, params: &[f64]) -> Vec<OpticalElement> {
        assert_eq!(params.len(), self.parameter_count(), "mesh parameter count");
        let n = self.cells.len();
        let mut elements = Vec::with_capacity(2 * n + self.modes);
        for (k, &j) in self.cells.iter().enumerate() {
            elements.push(OpticalElement::ps(j, params[n + k].to_degrees()));
            elements.push(OpticalElement::bs(j, j + 1, params[k].to_degrees(), 0.0));
        }
        for m in 0..self.modes {
            elements.push(OpticalElement::ps(m, params[2 * n + m].to_degrees()));
        }
        elements
    }

    pub fn unitary(&self, params: &[f64]) -> DMatrix<Complex64> {
        single_photon_unitary(&self.elements(params), self.modes)
            .expect("mesh cells stay inside the mesh")
    }

    pub fn random_parameters<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.parameter_count())
            .map(|_| rng.gen_range(0.0..2.0 * PI))
            .collect()
    }
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of R's diagonal removed.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) / 2f64.sqrt()
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        q.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    q
}

/// Central-difference gradient with step `h`.
pub fn central_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = probe[i];
            probe[i] = xi + h;
            let up = f(&probe);
            probe[i] = xi - h;
            let down = f(&probe);
            probe[i] = xi;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Ratio of gradient errors at steps `h` and `h/2`, measured against a
/// Richardson-extrapolated reference built from `h/4` and `h/8`.
/// Second-order differences give a ratio near 4.
pub fn richardson_ratio(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> f64 {
    let g4 = central_gradient(f, x, h / 4.0);
    let g8 = central_gradient(f, x, h / 8.0);
    let reference: Vec<f64> = g4
        .iter()
        .zip(&g8)
        .map(|(a, b)| (4.0 * b - a) / 3.0)
        .collect();
    let err = |g: &[f64]| {
        g.iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    err(&central_gradient(f, x, h)) / err(&central_gradient(f, x, h / 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRule {
    /// Base step; halved until the loss decreases.
    pub learning_rate: f64,
    pub fd_step: f64,
    pub max_iterations: usize,
    #[serde(default = "default_halvings")]
    pub max_halvings: usize,
    /// Stop once the gradient norm drops below this.
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    /// Stop once the loss drops below this.
    #[serde(default)]
    pub loss_tol: f64,
    #[serde(default)]
    pub initial_step: InitialStep,
}

/// Where each iteration's step search starts before halving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialStep {
    /// Always the base learning rate.
    #[default]
    Fixed,
    /// `sᵀs / sᵀy` from the previous accepted step and gradient change,
    /// falling back to the base rate when that is not positive.
    BarzilaiBorwein,
}

fn default_halvings() -> usize {
    40
}

fn default_grad_tol() -> f64 {
    1e-6
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub loss: f64,
    #[serde(rename = "F")]
    pub fidelity: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

/// Gradient descent from `x0`; returns the final point and the accepted losses.
///
/// The first trajectory entry is the starting loss; every later entry is an
/// accepted step, so losses strictly decrease.
pub fn descend(
    f: &dyn Fn(&[f64]) -> f64,
    x0: Vec<f64>,
    rule: &StepRule,
) -> (Vec<f64>, Vec<(usize, f64)>) {
    let mut trajectory = Vec::new();
    let x = descend_observed(f, x0, rule, &mut |i, l, _| trajectory.push((i, l)));
    (x, trajectory)
}

/// Like [`descend`], calling `observe(iteration, loss, params)` at the start and after each accepted step.
pub fn descend_observed(
    f: &dyn Fn(&[f64]) -> f64,
    x0: Vec<f64>,
    rule: &StepRule,
    observe: &mut dyn FnMut(usize, f64, &[f64]),
) -> Vec<f64> {
    let mut x = x0;
    let mut fx = f(&x);
    observe(0, fx, &x);
    let mut candidate = x.clone();
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;
    for iteration in 1..=rule.max_iterations {
        if fx <= rule.loss_tol {
            break;
        }
        let g = central_gradient(f, &x, rule.fd_step);
        if g.iter().map(|v| v * v).sum::<f64>().sqrt() < rule.grad_tol {
            break;
        }
        let mut eta = match (rule.initial_step, &previous) {
            (InitialStep::BarzilaiBorwein, Some((px, pg))) => {
                let (mut ss, mut sy) = (0.0, 0.0);
                for i in 0..x.len() {
                    let si = x[i] - px[i];
                    ss += si * si;
                    sy += si * (g[i] - pg[i]);
                }
                if sy > 0.0 && ss > 0.0 {
                    ss / sy
                } else {
                    rule.learning_rate
                }
            }
            _ => rule.learning_rate,
        };
        let mut accepted = false;
        for _ in 0..=rule.max_halvings {
            for ((c, xi), gi) in candidate.iter_mut().zip(&x).zip(&g) {
                *c = xi - eta * gi;
            }
            let fc = f(&candidate);
            if fc < fx {
                if rule.initial_step == InitialStep::BarzilaiBorwein {
                    previous = Some((x.clone(), g.clone()));
                }
                std::mem::swap(&mut x, &mut candidate);
                fx = fc;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
        observe(iteration, fx, &x);
    }
    x
}

/// Squared Frobenius distance between the mesh transfer matrix and `target`.
pub fn unitary_loss(design: &MeshDesign, target: &DMatrix<Complex64>, params: &[f64]) -> f64 {
    (design.unitary(params) - target).norm_squared()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryFit {
    pub params: Vec<f64>,
    pub distance: f64,
    pub restarts_used: usize,
    pub iterations: usize,
}

/// Fits mesh parameters to `target` by descent from random starts until the
/// Frobenius distance is below `tolerance`.
pub fn fit_unitary(
    design: &MeshDesign,
    target: &DMatrix<Complex64>,
    rule: &StepRule,
    restarts: usize,
    tolerance: f64,
    seed: u64,
) -> UnitaryFit {
    let f = |p: &[f64]| unitary_loss(design, target, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rule = StepRule {
        loss_tol: tolerance * tolerance,
        ..*rule
    };
    let mut best: Option<UnitaryFit> = None;
    let mut iterations = 0;
    for restart in 0..restarts.max(1) {
        let (params, trajectory) = descend(&f, design.random_parameters(&mut rng), &rule);
        iterations += trajectory.len() - 1;
        let distance = f(&params).sqrt();
        if best.as_ref().is_none_or(|b| distance < b.distance) {
            best = Some(UnitaryFit {
                params,
                distance,
                restarts_used: restart + 1,
                iterations,
            });
        }
        if distance < tolerance {
            break;
        }
    }
    let mut fit = best.expect("at least one restart");
    fit.iterations = iterations;
    fit
}

fn default_lambda_f() -> f64 {
    1.0
}

fn default_lambda_p() -> f64 {
    0.1
}

fn default_p_goal() -> f64 {
    2.0 / 27.0
}

fn default_signal() -> Vec<usize> {
    vec![0, 1, 2, 3]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentConfig {
    #[serde(default)]
    pub mesh: MeshKind,
    pub modes: usize,
    #[serde(default = "default_signal")]
    pub signal_modes: Vec<usize>,
    /// Photons injected into each ancilla mode, in mode order.
    pub ancilla_input: Vec<u8>,
    pub herald_pattern: Vec<u8>,
    #[serde(default)]
    pub target: TargetKind,
    #[serde(default = "default_lambda_f")]
    pub lambda_f: f64,
    #[serde(default = "default_lambda_p")]
    pub lambda_p: f64,
    #[serde(default = "default_p_goal")]
    pub p_goal: f64,
    pub step: StepRule,
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        let s = self.scheme_template();
        s.validate()?;
        if !s.is_two_qubit() {
            return Err(Error::NotTwoQubit(s.signal_modes.len()));
        }
        if self.step.fd_step <= 0.0 || self.step.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(
                "fd_step and learning_rate must be positive".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: DescentConfig = crate::error::from_json(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Scheme with the configured roles and no elements.
    pub fn scheme_template(&self) -> Scheme {
        Scheme {
            name: None,
            modes: self.modes,
            signal_modes: self.signal_modes.clone(),
            ancilla_modes: (0..self.modes)
                .filter(|m| !self.signal_modes.contains(m))
                .collect(),
            ancilla_input: self.ancilla_input.clone(),
            herald_pattern: self.herald_pattern.clone(),
            herald_kind: HeraldKind::Pattern,
            elements: Vec::new(),
        }
    }
}

/// `λ_F·(1 − F) + λ_P·max(0, P_goal − P)`.
pub fn gate_loss(fidelity: f64, p: f64, cfg: &DescentConfig) -> f64 {
    cfg.lambda_f * (1.0 - fidelity) + cfg.lambda_p * (cfg.p_goal - p).max(0.0)
}

/// Gate loss of an arbitrary single-photon transfer matrix under the configured herald.
pub fn gate_loss_of_unitary(cfg: &DescentConfig, u: &DMatrix<Complex64>) -> Result<f64> {
    let map = conditional_map_from_unitary(&cfg.scheme_template(), u)?;
    let target = TargetGate::of(cfg.target);
    Ok(gate_loss(
        map.fidelity(&target),
        map.actuation_probability(),
        cfg,
    ))
}

/// Fidelity and actuation probability of mesh parameters under the configured herald.
pub fn mesh_metrics(
    design: &MeshDesign,
    template: &Scheme,
    target: &TargetGate,
    params: &[f64],
) -> (f64, f64) {
    let map = conditional_map_from_unitary(template, &design.unitary(params))
        .expect("template is two-qubit");
    (map.fidelity(target), map.actuation_probability())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartResult {
    pub restart: usize,
    pub loss: f64,
    pub fidelity: f64,
    pub p: f64,
    pub trajectory: Vec<TrajectoryPoint>,
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    pub design: MeshDesign,
    pub best: RestartResult,
    pub restarts: Vec<RestartResult>,
    pub scheme: Scheme,
}

/// Random-restart descent on the gate loss. Restarts run in parallel; each
/// draws its start from its own seeded stream, so results do not depend on scheduling.
pub fn descend_gate(cfg: &DescentConfig) -> Result<DescentReport> {
    cfg.validate()?;
    let design = build_mesh(cfg.mesh, cfg.modes)?;
    let template = cfg.scheme_template();
    let target = TargetGate::of(cfg.target);
    let loss = |p: &[f64]| {
        let (f, pr) = mesh_metrics(&design, &template, &target, p);
        gate_loss(f, pr, cfg)
    };
    let restarts: Vec<RestartResult> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(restart as u64);
            let mut trajectory = Vec::new();
            let params = descend_observed(
                &loss,
                design.random_parameters(&mut rng),
                &cfg.step,
                &mut |iteration, l, x| {
                    let (fidelity, p) = mesh_metrics(&design, &template, &target, x);
                    trajectory.push(TrajectoryPoint {
                        iteration,
                        loss: l,
                        fidelity,
                        p,
                    });
                },
            );
            let (fidelity, p) = mesh_metrics(&design, &template, &target, &params);
            RestartResult {
                restart,
                loss: gate_loss(fidelity, p, cfg),
                fidelity,
                p,
                trajectory,
                params,
            }
        })
        .collect();
    let best = restarts
        .iter()
        .min_by(|a, b| a.loss.total_cmp(&b.loss).then(a.restart.cmp(&b.restart)))
        .cloned()
        .expect("at least one restart");
    let scheme = Scheme {
        elements: design.elements(&best.params),
        ..template
    };
    Ok(DescentReport {
        design,
        best,
        restarts,
        scheme,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::conditional_map;

    fn rule(iters: usize) -> StepRule {
        StepRule {
            learning_rate: 0.5,
            fd_step: 1e-6,
            max_iterations: iters,
            max_halvings: 40,
            grad_tol: 1e-12,
            loss_tol: 0.0,
            initial_step: InitialStep::Fixed,
        }
    }

    #[test]
    fn cell_counts() {
        for kind in [MeshKind::Reck, MeshKind::Clements] {
            assert_eq!(build_mesh(kind, 8).unwrap().cell_count(), 28);
            assert_eq!(build_mesh(kind, 5).unwrap().cell_count(), 10);
        }
        assert_eq!(
            build_mesh(MeshKind::Reck, 2).unwrap().cells,
            build_mesh(MeshKind::Clements, 2).unwrap().cells
        );
        assert!(build_mesh(MeshKind::Reck, 1).is_err());
    }

    #[test]
    fn mesh_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [MeshKind::Reck, MeshKind::Clements] {
            let d = build_mesh(kind, 7).unwrap();
            let u = d.unitary(&d.random_parameters(&mut rng));
            assert!((u.adjoint() * &u - DMatrix::identity(7, 7)).norm() < 1e-12);
        }
        let v = random_unitary(5, &mut rng);
        assert!((v.adjoint() * &v - DMatrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn mesh_map_matches_evolution() {
        let cfg = desk_config(1, 1);
        let design = build_mesh(cfg.mesh, cfg.modes).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = design.random_parameters(&mut rng);
        let scheme = Scheme {
            elements: design.elements(&params),
            ..cfg.scheme_template()
        };
        let direct = conditional_map(&scheme).unwrap();
        let fast = conditional_map_from_unitary(&scheme, &design.unitary(&params)).unwrap();
        assert!((direct.0 - fast.0).norm() < 1e-12);
    }

    #[test]
    fn loss_bounds() {
        let cfg = desk_config(1, 1);
        assert!((gate_loss(1.0, 2.0 / 27.0, &cfg)).abs() < 1e-15);
        assert!((gate_loss(1.0, 0.0, &cfg) - 0.1 * 2.0 / 27.0).abs() < 1e-15);
        let design = build_mesh(cfg.mesh, cfg.modes).unwrap();
        let template = cfg.scheme_template();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let (f, p) = mesh_metrics(
                &design,
                &template,
                &TargetGate::cz(),
                &design.random_parameters(&mut rng),
            );
            let l = gate_loss(f, p, &cfg);
            assert!(l > 0.0 && l <= 1.0 + 0.1 * 2.0 / 27.0);
        }
    }

    #[test]
    fn descent_at_minimum_stays_put() {
        let d = build_mesh(MeshKind::Clements, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = d.random_parameters(&mut rng);
        let target = d.unitary(&p);
        let f = |x: &[f64]| unitary_loss(&d, &target, x);
        let g = central_gradient(&f, &p, 1e-6);
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
        let (_, trajectory) = descend(
            &f,
            p,
            &StepRule {
                grad_tol: 1e-6,
                ..rule(100)
            },
        );
        assert_eq!(trajectory.len(), 1);
    }

    #[test]
    fn accepted_losses_decrease() {
        let d = build_mesh(MeshKind::Reck, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let target = random_unitary(4, &mut rng);
        let f = |x: &[f64]| unitary_loss(&d, &target, x);
        let (_, trajectory) = descend(&f, d.random_parameters(&mut rng), &rule(200));
        assert!(trajectory.len() > 10);
        assert!(trajectory.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn fits_random_four_mode_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let target = random_unitary(4, &mut rng);
        let d = build_mesh(MeshKind::Clements, 4).unwrap();
        let fit = fit_unitary(
            &d,
            &target,
            &StepRule {
                grad_tol: 0.0,
                ..rule(20_000)
            },
            8,
            1e-8,
            3,
        );
        assert!(fit.distance < 1e-8, "{fit:?}");
    }

    #[test]
    fn richardson_on_smooth_function() {
        let f = |x: &[f64]| x[0].sin() * x[1].exp() + x[0] * x[0] * x[1];
        let r = richardson_ratio(&f, &[0.7, -0.3], 0.05);
        assert!((r - 4.0).abs() < 0.5, "{r}");
    }

    fn desk_config(restarts: usize, iterations: usize) -> DescentConfig {
        DescentConfig {
            mesh: MeshKind::Clements,
            modes: 8,
            signal_modes: vec![0, 1, 2, 3],
            ancilla_input: vec![1, 1, 0, 0],
            herald_pattern: vec![1, 1, 0, 0],
            target: TargetKind::Cz,
            lambda_f: 1.0,
            lambda_p: 0.1,
            p_goal: 2.0 / 27.0,
            step: StepRule {
                learning_rate: 0.2,
                fd_step: 1e-5,
                max_iterations: iterations,
                max_halvings: 30,
                grad_tol: 1e-8,
                loss_tol: 0.0,
                initial_step: InitialStep::Fixed,
            },
            restarts,
            seed: 0,
        }
    }

    #[test]
    fn gate_descent_is_deterministic_and_monotone() {
        let cfg = desk_config(3, 25);
        let a = descend_gate(&cfg).unwrap();
        let b = descend_gate(&cfg).unwrap();
        assert_eq!(a, b);
        for r in &a.restarts {
            assert!(r.trajectory.windows(2).all(|w| w[1].loss < w[0].loss));
        }
        a.scheme.validate().unwrap();
    }
}
