use heraldic::fock::single_photon_unitary;
use heraldic::mesh::*;
use heraldic::metrics::metrics_report;
use heraldic::{builtin, DetectorModel, Scheme, TargetGate, TargetKind};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn desk(restarts: usize, iterations: usize) -> DescentConfig {
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
            learning_rate: 0.1,
            fd_step: 1e-5,
            max_iterations: iterations,
            max_halvings: 40,
            grad_tol: 1e-6,
            loss_tol: 0.0,
            initial_step: InitialStep::BarzilaiBorwein,
        },
        restarts,
        seed: 0,
    }
}

/// The six-mode 2/27 gate relabelled onto the desk layout: rails on 0..4,
/// its two ancillas on 4 and 5, and two idle vacuum modes.
fn embedded_cz_2_27() -> DMatrix<Complex64> {
    let s = builtin("CZ_2_27").unwrap();
    let u = single_photon_unitary(&s.elements, s.modes).unwrap();
    let old = [0, 1, 4, 5, 2, 3];
    DMatrix::from_fn(8, 8, |r, c| match (r < 6, c < 6) {
        (true, true) => u[(old[r], old[c])],
        _ if r == c => Complex64::new(1.0, 0.0),
        _ => Complex64::new(0.0, 0.0),
    })
}

#[test]
fn exact_embedding_has_zero_loss() {
    let cfg = desk(1, 1);
    let l = gate_loss_of_unitary(&cfg, &embedded_cz_2_27()).unwrap();
    assert!(l.abs() < 1e-12, "{l}");
}

#[test]
fn mesh_reaches_the_embedding() {
    let cfg = desk(1, 1);
    let design = build_mesh(MeshKind::Clements, 8).unwrap();
    let rule = StepRule {
        max_iterations: 20_000,
        fd_step: 1e-6,
        learning_rate: 0.5,
        grad_tol: 0.0,
        ..cfg.step
    };
    let fit = fit_unitary(&design, &embedded_cz_2_27(), &rule, 10, 1e-7, 1);
    assert!(fit.distance < 1e-7, "{}", fit.distance);
    let scheme = Scheme {
        elements: design.elements(&fit.params),
        ..cfg.scheme_template()
    };
    let r = metrics_report(&scheme, &TargetGate::cz(), DetectorModel::Pnr).unwrap();
    assert!(gate_loss(r.fidelity, r.p, &cfg) < 1e-9);
    assert!((r.p - 2.0 / 27.0).abs() < 1e-9);
}

#[test]
fn desk_descent_finds_high_fidelity() {
    let report = descend_gate(&desk(6, 2000)).unwrap();
    assert!(
        report.restarts.iter().any(|r| r.fidelity >= 0.999),
        "{}",
        report.best.fidelity
    );
    // the exported scheme reproduces the best restart through full evolution
    let r = metrics_report(&report.scheme, &TargetGate::cz(), DetectorModel::Pnr).unwrap();
    assert!((r.fidelity - report.best.fidelity).abs() < 1e-9);
    assert!((r.p - report.best.p).abs() < 1e-9);
}

#[test]
fn config_validation() {
    let mut c = desk(1, 1);
    c.step.fd_step = 0.0;
    assert!(c.validate().is_err());
    let mut c = desk(1, 1);
    c.step.learning_rate = -1.0;
    assert!(c.validate().is_err());
    let mut c = desk(1, 1);
    c.signal_modes = vec![0, 1];
    c.ancilla_input = vec![1, 1, 0, 0, 0, 0];
    c.herald_pattern = vec![1, 1, 0, 0, 0, 0];
    assert!(c.validate().is_err());
    let err = DescentConfig::from_json(
        r#"{"modes": 8, "ancilla_input": [1,1,0,0], "herald_pattern": [1,1,0,0], "restarts": 1,
        "step": {"learning_rate": 0.1, "fd_step": "x", "max_iterations": 1}}"#,
    )
    .unwrap_err();
    assert!(err.to_string().contains("$.step.fd_step"), "{err}");
}
