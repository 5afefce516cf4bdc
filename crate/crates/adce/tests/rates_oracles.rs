//! Independent dense-operator oracles for the dressed-state matrix elements
//! and cross-checks of analytic against numeric coefficient evaluation.

use adce::dressed::{
    analytic_basis, assign_labels, dressed_numeric, lowering_elem, nu_corrections, rotating_elem,
    sigma_kk_elem, DressedBasis, DressedState, Regime,
};
use adce::hilbert::{build_basis, hamiltonian_bare, Basis};
use adce::modulation::{Drive, ModulationSpec};
use adce::rates::{classify_tones, sigma_rate, theta_rate, upsilon_coeff, xi_rate};
use adce::SystemParams;

fn rr_params() -> SystemParams {
    SystemParams::from_detunings(0.06, 0.072, -0.48, 0.48)
}

fn numeric_labeled(params: &SystemParams, n_max: usize, regime: Regime) -> DressedBasis {
    let basis = build_basis(n_max).unwrap();
    let h0 = hamiltonian_bare(params, &basis);
    let mut db = dressed_numeric(&h0, &basis, params).unwrap();
    assign_labels(&mut db, regime).unwrap();
    nu_corrections(&mut db);
    db
}

/// Dense matrix of `a sigma_{k,k+1}` over the full product basis.
fn dense_lowering(k: usize, basis: &Basis) -> Vec<f64> {
    let d = basis.dim();
    let mut mat = vec![0.0; d * d];
    for n in 1..=basis.n_max {
        // a sigma_{k,k+1} |k+1, n> = sqrt(n) |k, n-1>
        if let (Some(col), Some(row)) = (basis.index_of(k + 1, n), basis.index_of(k, n - 1)) {
            mat[row * d + col] = (n as f64).sqrt();
        }
    }
    mat
}

/// Dense matrix of the rotating coupling `a sigma_{k+1,k} + a^dag sigma_{k,k+1}`.
fn dense_rotating(k: usize, basis: &Basis) -> Vec<f64> {
    let d = basis.dim();
    let mut mat = vec![0.0; d * d];
    for n in 1..=basis.n_max {
        if let (Some(col), Some(row)) = (basis.index_of(k, n), basis.index_of(k + 1, n - 1)) {
            mat[row * d + col] = (n as f64).sqrt();
            mat[col * d + row] = (n as f64).sqrt();
        }
    }
    mat
}

fn dense_sigma_kk(k: usize, basis: &Basis) -> Vec<f64> {
    let d = basis.dim();
    let mut mat = vec![0.0; d * d];
    for (i, s) in basis.states().iter().enumerate() {
        if s.atom == k {
            mat[i * d + i] = 1.0;
        }
    }
    mat
}

/// Embed a dressed state into the full basis.
fn embed(state: &DressedState, basis: &Basis) -> Vec<f64> {
    let mut v = vec![0.0; basis.dim()];
    for (a, &c) in state.vector.iter().enumerate() {
        let idx = basis.index_of(a, state.m - a).unwrap();
        v[idx] = c;
    }
    v
}

fn sandwich(bra: &[f64], mat: &[f64], ket: &[f64]) -> f64 {
    let d = bra.len();
    let mut acc = 0.0;
    for r in 0..d {
        let mut row = 0.0;
        for c in 0..d {
            row += mat[r * d + c] * ket[c];
        }
        acc += bra[r] * row;
    }
    acc
}

#[test]
fn lowering_elements_match_dense_oracle() {
    let p = rr_params();
    let db = numeric_labeled(&p, 10, Regime::DoubleResonant);
    let basis = build_basis(10).unwrap();
    for k in 0..2usize {
        let mat = dense_lowering(k, &basis);
        for m in 0..=7usize {
            for t in db.states(m) {
                for s in db.states(m + 2) {
                    let brute = sandwich(&embed(t, &basis), &mat, &embed(s, &basis));
                    let fast = lowering_elem(k, t, s);
                    assert!(
                        (brute - fast).abs() < 1e-12,
                        "k={k} m={m} ({},{}): {brute} vs {fast}",
                        t.ordinal,
                        s.ordinal
                    );
                }
            }
        }
    }
}

#[test]
fn rotating_and_projector_elements_match_dense_oracle() {
    let p = rr_params();
    let db = numeric_labeled(&p, 8, Regime::DoubleResonant);
    let basis = build_basis(8).unwrap();
    for m in 0..=6usize {
        for t in db.states(m) {
            for s in db.states(m) {
                for k in 0..2usize {
                    let brute =
                        sandwich(&embed(t, &basis), &dense_rotating(k, &basis), &embed(s, &basis));
                    assert!((brute - rotating_elem(k, t, s)).abs() < 1e-12);
                }
                for k in 0..3usize {
                    let brute =
                        sandwich(&embed(t, &basis), &dense_sigma_kk(k, &basis), &embed(s, &basis));
                    assert!((brute - sigma_kk_elem(k, t, s)).abs() < 1e-12);
                }
            }
        }
    }
}

/// In the exact regimes every coefficient computed from analytic dressed
/// states agrees with the numeric-basis evaluation to 1e-9.
#[test]
fn analytic_and_numeric_coefficients_agree_in_exact_regimes() {
    for (params, regime) in [
        (SystemParams::from_detunings(0.06, 0.0, -0.48, 0.48), Regime::TwoLevel),
        (rr_params(), Regime::DoubleResonant),
    ] {
        let numeric = numeric_labeled(&params, 10, regime);
        let mut analytic = analytic_basis(&params, regime, 10).unwrap();
        nu_corrections(&mut analytic);

        let mut spec = ModulationSpec::default();
        let eta = 1.47;
        spec.e1 = Drive::single(0.05 * params.omega01(), eta, 0.0);
        spec.g0 = Drive::single(0.02 * params.g00, eta, 0.4);
        let tones = spec.merged_tones();
        let classes = classify_tones(&tones, &numeric, 0..=6).unwrap();

        for m in 2..=6usize {
            // pair analytic and numeric states by label
            for a_state in analytic.states(m) {
                let Some(label) = a_state.label else { continue };
                let n_state = numeric.find(m, label).unwrap();
                assert!(
                    (a_state.lambda - n_state.lambda).abs() <= 1e-10 * n_state.lambda.abs()
                );
                assert!((a_state.nu - n_state.nu).abs() < 1e-9);
                for b_a in analytic.states(m) {
                    let Some(lb) = b_a.label else { continue };
                    let b_n = numeric.find(m, lb).unwrap();
                    for target in adce::modulation::TARGETS {
                        let ua = upsilon_coeff(&spec, &tones, target, 0, a_state, b_a);
                        let un = upsilon_coeff(&spec, &tones, target, 0, n_state, b_n);
                        assert!((ua - un).abs() < 1e-9, "Upsilon {target} m={m}");
                    }
                    if a_state.ordinal != b_a.ordinal {
                        let sa = sigma_rate(&params, &analytic, m, a_state.ordinal, b_a.ordinal)
                            .unwrap();
                        let sn = sigma_rate(&params, &numeric, m, n_state.ordinal, b_n.ordinal)
                            .unwrap();
                        assert!((sa - sn).norm() < 1e-9, "sigma m={m}");
                    }
                }
                // Theta from (m-2) up to m
                if m >= 4 {
                    for lo_a in analytic.states(m - 2) {
                        let Some(lo_label) = lo_a.label else { continue };
                        let lo_n = numeric.find(m - 2, lo_label).unwrap();
                        let ta = theta_rate(
                            &spec, &tones, &classes, 0, &analytic, m, lo_a.ordinal,
                            a_state.ordinal,
                        )
                        .unwrap();
                        let tn = theta_rate(
                            &spec, &tones, &classes, 0, &numeric, m, lo_n.ordinal,
                            n_state.ordinal,
                        )
                        .unwrap();
                        assert!((ta - tn).norm() < 1e-9, "Theta m={m}");
                    }
                }
            }
        }
        // slow-tone Xi agreement on a dedicated slow drive
        let mut slow_spec = ModulationSpec::default();
        slow_spec.e1 = Drive::single(0.05 * params.omega01(), 0.05, 0.1);
        let slow_tones = slow_spec.merged_tones();
        let slow_classes = classify_tones(&slow_tones, &numeric, 0..=6).unwrap();
        if slow_classes.slow(0) {
            for m in 2..=5usize {
                for t_a in analytic.states(m) {
                    let Some(tl) = t_a.label else { continue };
                    let t_n = numeric.find(m, tl).unwrap();
                    for s_a in analytic.states(m) {
                        let Some(sl) = s_a.label else { continue };
                        if sl == tl {
                            continue;
                        }
                        let s_n = numeric.find(m, sl).unwrap();
                        let xa = xi_rate(
                            &slow_spec, &slow_tones, &slow_classes, 0, &analytic, m,
                            t_a.ordinal, s_a.ordinal,
                        )
                        .unwrap();
                        let xn = xi_rate(
                            &slow_spec, &slow_tones, &slow_classes, 0, &numeric, m,
                            t_n.ordinal, s_n.ordinal,
                        )
                        .unwrap();
                        assert!((xa - xn).norm() < 1e-9);
                    }
                }
            }
        }
    }
}
