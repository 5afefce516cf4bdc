//! Propagator verification: stationary states, 4th-order convergence,
//! thermal observables and the frequency-scan oracle for the predicted
//! resonance.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use adce::dressed::{assign_labels, dressed_numeric, nu_corrections, Label, Regime};
use adce::exact::{
    fock_state, propagate, run_simulation, Frame, PropagationControls, SimulationSetup,
    TrackedProjector,
};
use adce::hilbert::{build_basis, hamiltonian_bare, hamiltonian_full};
use adce::modulation::{Drive, ModulationSpec};
use adce::rates::{classify_tones, resonance_frequency, theta_rate};
use adce::SystemParams;

fn rr_params() -> SystemParams {
    SystemParams::from_detunings(0.06, 0.072, -0.48, 0.48)
}

fn two_level_params() -> SystemParams {
    SystemParams::from_detunings(0.06, 0.0, -0.48, 0.48)
}

/// With no modulation, an eigenvector of the full Hamiltonian must keep all
/// its populations constant to the norm tolerance.
#[test]
fn full_hamiltonian_eigenvector_is_stationary() {
    let p = rr_params();
    let basis = build_basis(8).unwrap();
    let spec = ModulationSpec::default();
    let h = hamiltonian_full(&p, &spec, 0.0, &basis);
    let dim = h.dim;
    let mut hm = DMatrix::<f64>::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            hm[(r, c)] = h.get(r, c).re;
        }
    }
    let eig = hm.symmetric_eigen();
    // pick the eigenvector nearest |0,2>; it sits well inside the cutoff
    let target = basis.index_of(0, 2).unwrap();
    let mut best = 0;
    for i in 0..dim {
        if eig.eigenvectors[(target, i)].abs() > eig.eigenvectors[(target, best)].abs() {
            best = i;
        }
    }
    let initial: Vec<C64> = (0..dim)
        .map(|r| C64::new(eig.eigenvectors[(r, best)], 0.0))
        .collect();
    let mut controls = PropagationControls::new(300.0, 10.0);
    controls.track_energy = true;
    // populations of a stationary state are constant only to the integration
    // accuracy; resolve the counter-rotating phases well below 1e-8
    controls.initial_step = Some(0.004);
    let run = propagate(&initial, &p, &spec, &basis, &[], &controls).unwrap();
    assert!(run.norm_err_max <= 1e-8);
    let nph0 = run.n_ph[0];
    let nat0 = run.n_at[0];
    for (a, b) in run.n_ph.iter().zip(&run.n_at) {
        assert!((a - nph0).abs() < 1e-8, "n_ph drifted: {a} vs {nph0}");
        assert!((b - nat0).abs() < 1e-8);
    }
}

/// Halving the step shrinks the observable error by about 2^4.
#[test]
fn rk4_step_halving_is_fourth_order() {
    let p = rr_params();
    let basis = build_basis(10).unwrap();
    let mut spec = ModulationSpec::default();
    spec.e1 = Drive::single(0.05 * p.omega01(), 1.45, 0.0);
    let initial = fock_state(&basis, 0, 4).unwrap();

    let run_with = |h: f64| {
        let mut controls = PropagationControls::new(60.0, 60.0);
        controls.initial_step = Some(h);
        // convergence probe: disable the drift watchdog so every run uses
        // exactly the requested step
        controls.norm_tol = 1.0;
        let run = propagate(&initial, &p, &spec, &basis, &[], &controls).unwrap();
        assert_eq!(run.step, h);
        (
            *run.n_ph.last().unwrap(),
            *run.n_at.last().unwrap(),
        )
    };
    let reference = run_with(60.0 / 24000.0); // h = 0.0025
    let coarse = run_with(60.0 / 3000.0); // h = 0.02
    let fine = run_with(60.0 / 6000.0); // h = 0.01
    let err = |a: (f64, f64)| ((a.0 - reference.0).abs() + (a.1 - reference.1).abs());
    let ratio = err(coarse) / err(fine);
    assert!(
        (10.0..26.0).contains(&ratio),
        "convergence ratio {ratio}, errors {:.3e} / {:.3e}",
        err(coarse),
        err(fine)
    );
}

/// Thermal ensemble at t = 0 reproduces the mean photon number minus the
/// truncation deficit's share.
#[test]
fn thermal_initial_photon_number() {
    let p = rr_params();
    let setup = SimulationSetup {
        params: p,
        spec: ModulationSpec::default(),
        regime: Regime::DoubleResonant,
        nbar: 1.5,
        tail_tol: 1e-4,
        n_max: None,
        controls: PropagationControls::new(5.0, 1.0),
        track: vec![],
    };
    let out = run_simulation(&setup).unwrap();
    let nph0 = out.series.column("n_ph").unwrap()[0];
    assert!(nph0 < 1.5);
    assert!((nph0 - 1.5).abs() < 0.01, "n_ph(0) = {nph0}");
    assert!(out.deficit <= 1e-4);
}

/// Scanning the drive frequency around the predicted resonance, the transfer
/// maximum sits within one |Theta| of the prediction.
#[test]
fn frequency_scan_peaks_at_predicted_resonance() {
    let p = two_level_params();
    let basis = build_basis(12).unwrap();
    let h0 = hamiltonian_bare(&p, &basis);
    let mut db = dressed_numeric(&h0, &basis, &p).unwrap();
    assign_labels(&mut db, Regime::TwoLevel).unwrap();
    nu_corrections(&mut db);
    let plus4 = db.find(4, Label::PlusD).unwrap();
    let minus2 = db.find(2, Label::MinusD).unwrap();
    let (eta_res, warn) = resonance_frequency(&db, 4, plus4.ordinal, minus2.ordinal).unwrap();
    assert!(!warn);
    let eps = 0.05 * p.omega01();
    let spec0 = {
        let mut s = ModulationSpec::default();
        s.e1 = Drive::single(eps, eta_res, 0.0);
        s
    };
    let tones = spec0.merged_tones();
    let classes = classify_tones(&tones, &db, 0..=8).unwrap();
    let theta = theta_rate(&spec0, &tones, &classes, 0, &db, 4, minus2.ordinal, plus4.ordinal)
        .unwrap()
        .norm();

    let proj = TrackedProjector::from_dressed(&basis, minus2).unwrap();
    let initial = fock_state(&basis, 0, 4).unwrap();
    let t_end = std::f64::consts::PI / (2.0 * theta); // half transfer period
    let mut best_k = 0i32;
    let mut best_peak = -1.0;
    for k in -2..=2i32 {
        let mut spec = ModulationSpec::default();
        spec.e1 = Drive::single(eps, eta_res + k as f64 * theta, 0.0);
        let controls = PropagationControls::new(t_end, t_end / 200.0);
        let run = propagate(
            &initial,
            &p,
            &spec,
            &basis,
            std::slice::from_ref(&proj),
            &controls,
        )
        .unwrap();
        let peak = run.pops[0].iter().cloned().fold(0.0, f64::max);
        if peak > best_peak {
            best_peak = peak;
            best_k = k;
        }
    }
    assert!(
        best_k.abs() <= 1,
        "transfer peaks {best_k} Theta away from the predicted resonance"
    );
    assert!(best_peak > 0.8, "resonant transfer too weak: {best_peak}");
}

/// The rotating and lab frames give the same observables on a driven run.
#[test]
fn frames_agree_with_modulation() {
    let p = rr_params();
    let basis = build_basis(10).unwrap();
    let mut spec = ModulationSpec::default();
    spec.e1 = Drive::single(0.05 * p.omega01(), 1.444, 0.0);
    spec.e2 = Drive::single(0.09 * p.omega12(), 1.444, std::f64::consts::PI);
    let initial = fock_state(&basis, 1, 3).unwrap();
    let run = |frame: Frame| {
        let mut controls = PropagationControls::new(40.0, 2.0);
        controls.frame = frame;
        propagate(&initial, &p, &spec, &basis, &[], &controls).unwrap()
    };
    let rot = run(Frame::Rotating);
    let lab = run(Frame::Lab);
    for (a, b) in rot.n_ph.iter().zip(&lab.n_ph) {
        assert!((a - b).abs() < 1e-7);
    }
}
