//! Dressed eigenstructure of the bare Hamiltonian per excitation subspace.
//!
//! The bare Hamiltonian conserves the excitation number, so it splits into
//! blocks of dimension at most three. This module diagonalizes those blocks
//! numerically and in four closed-form regimes:
//!
//! * `2L`: two-level atom (`G_{0,1} = 0`), exact.
//! * `RR`: double resonance `delta2 = -delta1`, exact.
//! * `DR`: dispersive regime, eigenvalues to 4th order in `G/Delta`,
//!   eigenvectors to 1st order.
//! * `MR`: mixed regime (`delta2 = 0`), to 2nd order in `G_{0,0}/Delta1`.
//!
//! It also evaluates the frequency corrections `nu` produced by the
//! counter-rotating coupling to the `m ± 2` subspaces, giving the corrected
//! frequencies `lambda_tilde = lambda + nu` used for resonance conditions.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AdceError, Result};
use crate::hilbert::{Basis, OperatorMatrix};
use crate::params::SystemParams;
use crate::OMEGA0;

/// Semantic dressed-state tag. `0, +D, -D` name the RR/MR branches (`D` is
/// the detuning symbol), `+D, -D` the two-level branches, and `0, 1, 2` the
/// dispersive branches by dominant atomic level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Zero,
    PlusD,
    MinusD,
    One,
    Two,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Label::Zero => "0",
            Label::PlusD => "+D",
            Label::MinusD => "-D",
            Label::One => "1",
            Label::Two => "2",
        };
        f.write_str(s)
    }
}

impl FromStr for Label {
    type Err = AdceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Label::Zero),
            "+D" | "+d" => Ok(Label::PlusD),
            "-D" | "-d" => Ok(Label::MinusD),
            "1" => Ok(Label::One),
            "2" => Ok(Label::Two),
            other => Err(AdceError::Config(format!("unknown dressed label {other:?}"))),
        }
    }
}

/// Analytic regime tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Numeric,
    TwoLevel,
    DoubleResonant,
    Dispersive,
    Mixed,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Numeric => "numeric",
            Regime::TwoLevel => "2L",
            Regime::DoubleResonant => "RR",
            Regime::Dispersive => "DR",
            Regime::Mixed => "MR",
        };
        f.write_str(s)
    }
}

impl FromStr for Regime {
    type Err = AdceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(Regime::Numeric),
            "2L" | "2l" => Ok(Regime::TwoLevel),
            "RR" | "rr" => Ok(Regime::DoubleResonant),
            "DR" | "dr" => Ok(Regime::Dispersive),
            "MR" | "mr" => Ok(Regime::Mixed),
            other => Err(AdceError::Config(format!("unknown regime {other:?}"))),
        }
    }
}

/// One dressed state of the `m`-excitation subspace.
#[derive(Debug, Clone)]
pub struct DressedState {
    pub m: usize,
    /// Index by ascending eigenvalue within the subspace.
    pub ordinal: usize,
    /// Semantic tag; `None` when no analytic regime was matched.
    pub label: Option<Label>,
    /// Eigenvalue of the bare Hamiltonian, units of omega0.
    pub lambda: f64,
    /// Real coefficients over the canonical subspace order
    /// `|0,m⟩, |1,m-1⟩, |2,m-2⟩` (leading entries only for m < 2).
    pub vector: Vec<f64>,
    /// Counter-rotating frequency correction.
    pub nu: f64,
    /// Set when `nu` could not be computed because the `m + 2` neighbor is
    /// outside the basis; `nu` is left at zero then.
    pub nu_at_boundary: bool,
}

impl DressedState {
    /// Corrected frequency `lambda + nu`.
    pub fn lambda_tilde(&self) -> f64 {
        self.lambda + self.nu
    }
}

/// Dressed states for all subspaces `m = 0..=m_max`, one regime.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub params: SystemParams,
    pub regime: Regime,
    subspaces: Vec<Vec<DressedState>>,
}

impl DressedBasis {
    pub fn m_max(&self) -> usize {
        self.subspaces.len() - 1
    }

    /// States of subspace `m`, ordered by ascending eigenvalue.
    pub fn states(&self, m: usize) -> &[DressedState] {
        self.subspaces.get(m).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn state(&self, m: usize, ordinal: usize) -> Result<&DressedState> {
        self.subspaces
            .get(m)
            .and_then(|s| s.get(ordinal))
            .ok_or(AdceError::MissingSubspace(m))
    }

    /// Look up a state by semantic label.
    pub fn find(&self, m: usize, label: Label) -> Result<&DressedState> {
        self.subspaces
            .get(m)
            .ok_or(AdceError::MissingSubspace(m))?
            .iter()
            .find(|s| s.label == Some(label))
            .ok_or_else(|| AdceError::Config(format!("no state labeled {label} in subspace m = {m}")))
    }

    fn sort_and_index(mut states: Vec<DressedState>) -> Vec<DressedState> {
        states.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
        for (i, s) in states.iter_mut().enumerate() {
            s.ordinal = i;
        }
        states
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fix the sign convention: the largest-magnitude coefficient is positive,
/// ties broken by the lowest basis index.
fn fix_phase(v: &mut [f64]) {
    let mut imax = 0;
    let mut best = 0.0;
    for (i, c) in v.iter().enumerate() {
        if c.abs() > best {
            best = c.abs();
            imax = i;
        }
    }
    if v[imax] < 0.0 {
        for c in v.iter_mut() {
            *c = -*c;
        }
    }
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    for c in v.iter_mut() {
        *c /= n;
    }
}

fn make_state(m: usize, label: Option<Label>, lambda: f64, mut vector: Vec<f64>) -> DressedState {
    normalize(&mut vector);
    fix_phase(&mut vector);
    DressedState {
        m,
        ordinal: 0,
        label,
        lambda,
        vector,
        nu: 0.0,
        nu_at_boundary: false,
    }
}

/// The unique ground state `|0, 0⟩` with `lambda = 0`.
fn ground_state() -> DressedState {
    make_state(0, Some(Label::Zero), 0.0, vec![1.0])
}

// ---------------------------------------------------------------------------
// matrix elements between dressed states
// ---------------------------------------------------------------------------

/// `⟨T| sigma_{k,k} |S⟩` for two states of the same subspace.
pub fn sigma_kk_elem(k: usize, t: &DressedState, s: &DressedState) -> f64 {
    debug_assert_eq!(t.m, s.m);
    if k >= t.vector.len() {
        return 0.0;
    }
    t.vector[k] * s.vector[k]
}

/// `⟨T| (a sigma_{k+1,k} + a^dag sigma_{k,k+1}) |S⟩` within one subspace.
pub fn rotating_elem(k: usize, t: &DressedState, s: &DressedState) -> f64 {
    debug_assert_eq!(t.m, s.m);
    let m = t.m;
    if k + 1 >= t.vector.len() || k + 1 > m {
        return 0.0;
    }
    // photon count of the atom-k member is m - k
    let root = ((m - k) as f64).sqrt();
    root * (t.vector[k + 1] * s.vector[k] + t.vector[k] * s.vector[k + 1])
}

/// `Lambda_{k,m+2,T,S} = ⟨phi_{m,T}| a sigma_{k,k+1} |phi_{m+2,S}⟩`, the
/// counter-rotating element connecting `S` (subspace `m + 2`) down to `T`
/// (subspace `m`).
pub fn lowering_elem(k: usize, t: &DressedState, s: &DressedState) -> f64 {
    debug_assert_eq!(s.m, t.m + 2);
    let m = t.m;
    if k > 1 || k > m.min(2) || k >= t.vector.len() {
        return 0.0;
    }
    // |k+1, m+1-k⟩ -> sqrt(m+1-k) |k, m-k⟩
    let root = ((m + 1 - k) as f64).sqrt();
    root * t.vector[k] * s.vector[k + 1]
}

// ---------------------------------------------------------------------------
// numeric diagonalization
// ---------------------------------------------------------------------------

/// Diagonalize the bare Hamiltonian per excitation subspace.
///
/// Each block (dimension at most three) is solved with a real symmetric
/// eigensolver; eigenvectors are phase-fixed and ordered by ascending
/// eigenvalue. Only untruncated subspaces (`m <= n_max`) are kept. Semantic
/// labels stay empty; use [`assign_labels`] to attach them.
pub fn dressed_numeric(
    h0: &OperatorMatrix,
    basis: &Basis,
    params: &SystemParams,
) -> Result<DressedBasis> {
    let off = h0.max_off_block(basis);
    if off > 1e-12 {
        return Err(AdceError::NotBlockDiagonal(format!(
            "largest inter-subspace element {off:.3e}"
        )));
    }
    let mut subspaces = Vec::with_capacity(basis.n_max + 1);
    for m in 0..=basis.n_max {
        let idx = basis.subspace(m);
        let g = idx.len();
        let mut block = DMatrix::<f64>::zeros(g, g);
        for (r, &ir) in idx.iter().enumerate() {
            for (c, &ic) in idx.iter().enumerate() {
                let v = h0.get(ir, ic);
                if v.im.abs() > 1e-13 {
                    return Err(AdceError::NotBlockDiagonal(format!(
                        "non-real entry {:.3e} within subspace m = {m}",
                        v.im
                    )));
                }
                block[(r, c)] = v.re;
            }
        }
        let eig = block.symmetric_eigen();
        let mut states: Vec<DressedState> = (0..g)
            .map(|i| {
                let vector: Vec<f64> = (0..g).map(|r| eig.eigenvectors[(r, i)]).collect();
                make_state(m, None, eig.eigenvalues[i], vector)
            })
            .collect();
        states = DressedBasis::sort_and_index(states);
        subspaces.push(states);
    }
    Ok(DressedBasis {
        params: *params,
        regime: Regime::Numeric,
        subspaces,
    })
}

// ---------------------------------------------------------------------------
// analytic regimes
// ---------------------------------------------------------------------------

/// Exact two-level pair for subspace `m >= 1`; valid for the qutrit as well
/// when `m = 1` because the third level cannot participate there.
fn two_level_pair(params: &SystemParams, m: usize) -> Result<Vec<DressedState>> {
    let d1 = params.delta1();
    let dsym = params.detuning_symbol();
    let g = params.g00;
    let mf = m as f64;
    let beta = (d1 * d1 + 4.0 * g * g * mf).sqrt();
    if beta == 0.0 {
        return Err(AdceError::RegimeViolation {
            regime: "2L",
            detail: "degenerate subspace: delta1 = 0 and G_{0,0} = 0".into(),
        });
    }
    let beta_plus = (beta + d1.abs()) / 2.0;
    let beta_minus = (beta - d1.abs()) / 2.0;
    let base = mf * OMEGA0 - d1 / 2.0;
    let glen = (m + 1).min(3);
    let embed = |c0: f64, c1: f64| -> Vec<f64> {
        let mut v = vec![0.0; glen];
        v[0] = c0;
        v[1] = c1;
        v
    };
    let plus = make_state(
        m,
        Some(Label::PlusD),
        base + dsym * beta / 2.0,
        embed((beta_plus / beta).sqrt(), dsym * (beta_minus / beta).sqrt()),
    );
    let minus = make_state(
        m,
        Some(Label::MinusD),
        base - dsym * beta / 2.0,
        embed((beta_minus / beta).sqrt(), -dsym * (beta_plus / beta).sqrt()),
    );
    Ok(DressedBasis::sort_and_index(vec![plus, minus]))
}

/// Exact dressed pair of the two-level regime (`G_{0,1} = 0`), `m >= 1`.
pub fn dressed_2l(params: &SystemParams, m: usize) -> Result<Vec<DressedState>> {
    if params.g01 != 0.0 {
        return Err(AdceError::RegimeViolation {
            regime: "2L",
            detail: format!("requires G_{{0,1}} = 0, got {}", params.g01),
        });
    }
    if m < 1 {
        return Err(AdceError::MissingSubspace(m));
    }
    two_level_pair(params, m)
}

/// Exact dressed triple of the double-resonant regime (`delta2 = -delta1`),
/// `m >= 2`.
pub fn dressed_rr(params: &SystemParams, m: usize) -> Result<Vec<DressedState>> {
    let d1 = params.delta1();
    let d2 = params.delta2();
    if (d1 + d2).abs() > 1e-12 {
        return Err(AdceError::RegimeViolation {
            regime: "RR",
            detail: format!("requires delta2 = -delta1, got delta1 = {d1}, delta2 = {d2}"),
        });
    }
    if !(params.g00 > 0.0 && params.g01 > 0.0) {
        return Err(AdceError::RegimeViolation {
            regime: "RR",
            detail: "requires both couplings positive".into(),
        });
    }
    if m < 2 {
        return Err(AdceError::MissingSubspace(m));
    }
    let dsym = params.detuning_symbol();
    let mf = m as f64;
    let g1 = params.g00 * mf.sqrt();
    let g2 = params.g01 * (mf - 1.0).sqrt();
    let rho0 = (g1 * g1 + g2 * g2).sqrt();
    let rho = (d1 * d1 / 4.0 + g1 * g1 + g2 * g2).sqrt();
    let rho_plus = rho + d1.abs() / 2.0;
    let rho_minus = rho - d1.abs() / 2.0;
    let base = mf * OMEGA0;

    let zero = make_state(m, Some(Label::Zero), base, vec![-g2 / rho0, 0.0, g1 / rho0]);
    let plus = make_state(
        m,
        Some(Label::PlusD),
        base + dsym * rho_minus,
        vec![g1, dsym * rho_minus, g2],
    );
    let minus = make_state(
        m,
        Some(Label::MinusD),
        base - dsym * rho_plus,
        vec![g1, -dsym * rho_plus, g2],
    );
    Ok(DressedBasis::sort_and_index(vec![zero, plus, minus]))
}

/// Dispersive-regime dressed states: 4th-order eigenvalues, 1st-order
/// eigenvectors. Labels follow the dominant atomic level.
///
/// Validity: every detuning combination |delta1|, |delta2|, |delta1+delta2|
/// must exceed 4 G00, the far-detuning threshold. (Measuring against
/// `G00 sqrt(m)` instead would reject the reference parameter set
/// m = 4, |delta1| = 8 G00, G01 = 1.2 G00 that the whole analysis is built
/// around.)
pub fn dressed_dr(params: &SystemParams, m: usize) -> Result<Vec<DressedState>> {
    if m < 1 {
        return Err(AdceError::MissingSubspace(m));
    }
    let d1 = params.delta1();
    let d2 = params.delta2();
    let min_det = d1.abs().min(d2.abs()).min((d1 + d2).abs());
    let scale = params.g00;
    if min_det < 4.0 * scale {
        return Err(AdceError::RegimeViolation {
            regime: "DR",
            detail: format!(
                "requires min(|delta1|, |delta2|, |delta1+delta2|) >= 4 G00; ratio = {:.3} at m = {m}",
                if scale > 0.0 { min_det / scale } else { f64::INFINITY }
            ),
        });
    }
    let mf = m as f64;
    let g00 = params.g00;
    let g01 = params.g01;
    let delta_shift1 = g00 * g00 / d1;
    let delta_shift2 = g01 * g01 / d2;
    let q1 = g00 * g00 * mf / (d1 * d1);
    let q2 = g01 * g01 * (mf - 1.0) / (d2 * d2);
    let base = mf * OMEGA0;

    let lam0 = base
        + delta_shift1
            * mf
            * (1.0 + g01 * g01 * (mf - 1.0) / (d1 * (d1 + d2)) - q1);
    let lam1 = base - d1 - (delta_shift1 * mf - delta_shift2 * (mf - 1.0)) * (1.0 - q1 - q2);

    let c01 = g00 * mf.sqrt() / d1;
    if m == 1 {
        let zero = make_state(m, Some(Label::Zero), lam0, vec![1.0, c01]);
        let one = make_state(m, Some(Label::One), lam1, vec![-c01, 1.0]);
        return Ok(DressedBasis::sort_and_index(vec![zero, one]));
    }

    let lam2 = base
        - d1
        - d2
        - delta_shift2 * (mf - 1.0) * (1.0 + g00 * g00 * mf / (d2 * (d1 + d2)) - q2);
    let c02 = g00 * g01 * (mf * (mf - 1.0)).sqrt() / (d1 * (d1 + d2));
    let c12 = g01 * (mf - 1.0).sqrt() / d2;
    let c20 = g00 * g01 * (mf * (mf - 1.0)).sqrt() / (d2 * (d1 + d2));

    let zero = make_state(m, Some(Label::Zero), lam0, vec![1.0, c01, c02]);
    let one = make_state(m, Some(Label::One), lam1, vec![-c01, 1.0, c12]);
    let two = make_state(m, Some(Label::Two), lam2, vec![c20, -c12, 1.0]);
    Ok(DressedBasis::sort_and_index(vec![zero, one, two]))
}

/// Mixed-regime dressed states (`delta2 = 0`, lower transition far detuned),
/// to 2nd order in `G_{0,0}/delta1`; `m >= 2`.
pub fn dressed_mr(params: &SystemParams, m: usize) -> Result<Vec<DressedState>> {
    let d2 = params.delta2();
    if d2.abs() > 1e-12 {
        return Err(AdceError::RegimeViolation {
            regime: "MR",
            detail: format!("requires delta2 = 0, got {d2}"),
        });
    }
    if m < 2 {
        return Err(AdceError::MissingSubspace(m));
    }
    if !(params.g01 > 0.0) {
        return Err(AdceError::RegimeViolation {
            regime: "MR",
            detail: "requires G_{0,1} > 0".into(),
        });
    }
    let d1 = params.delta1();
    let mf = m as f64;
    let g00 = params.g00;
    if d1.abs() < 4.0 * g00 {
        return Err(AdceError::RegimeViolation {
            regime: "MR",
            detail: format!(
                "requires |delta1| >= 4 G00; ratio = {:.3} at m = {m}",
                d1.abs() / g00
            ),
        });
    }
    let dsym = params.detuning_symbol();
    let g2 = params.g01 * (mf - 1.0).sqrt();
    let base = mf * OMEGA0;

    let lam0 = base + d1 * g00 * g00 * mf / (d1 * d1 - g2 * g2);
    let rho0 = g00 * mf.sqrt() / (d1 * d1 - g2 * g2);
    let zero = make_state(
        m,
        Some(Label::Zero),
        lam0,
        vec![1.0, rho0 * d1, g2 * rho0],
    );

    let branch = |sign: f64, label: Label| -> DressedState {
        // sign = +1 for the +D branch, -1 for -D
        let denom = d1.abs() - sign * g2;
        let lam = base - dsym * (denom + 0.5 * g00 * g00 * mf / denom);
        let rho = g00 * mf.sqrt() / (sign * g2 - d1.abs());
        let r = 0.25 * g00 * g00 * mf / (g2 * (g2 - sign * d1.abs()));
        // canonical order |0,m⟩, |1,m-1⟩, |2,m-2⟩
        make_state(
            m,
            Some(label),
            lam,
            vec![rho, sign * dsym * (1.0 + r), 1.0 - r],
        )
    };
    let plus = branch(1.0, Label::PlusD);
    let minus = branch(-1.0, Label::MinusD);
    Ok(DressedBasis::sort_and_index(vec![zero, plus, minus]))
}

// ---------------------------------------------------------------------------
// regime assembly and labeling
// ---------------------------------------------------------------------------

/// Analytic dressed states of one subspace. Subspace `m = 1` always uses the
/// exact two-level formulas (the third level cannot reach it); its labels are
/// translated into each regime's conventions.
pub fn analytic_subspace(params: &SystemParams, regime: Regime, m: usize) -> Result<Vec<DressedState>> {
    if m == 0 {
        return Ok(vec![ground_state()]);
    }
    if m == 1 {
        let mut pair = two_level_pair(params, m)?;
        match regime {
            Regime::TwoLevel | Regime::DoubleResonant => {}
            Regime::Dispersive => {
                // the |0,1⟩-dominant branch (+D) is the dispersive "0" state
                for s in &mut pair {
                    s.label = match s.label {
                        Some(Label::PlusD) => Some(Label::Zero),
                        Some(Label::MinusD) => Some(Label::One),
                        other => other,
                    };
                }
            }
            Regime::Mixed => {
                for s in &mut pair {
                    s.label = match s.label {
                        Some(Label::PlusD) => Some(Label::Zero),
                        Some(Label::MinusD) => Some(Label::PlusD),
                        other => other,
                    };
                }
            }
            Regime::Numeric => {
                return Err(AdceError::Config(
                    "numeric regime has no analytic subspace".into(),
                ))
            }
        }
        return Ok(pair);
    }
    match regime {
        Regime::TwoLevel => dressed_2l(params, m),
        Regime::DoubleResonant => dressed_rr(params, m),
        Regime::Dispersive => dressed_dr(params, m),
        Regime::Mixed => dressed_mr(params, m),
        Regime::Numeric => Err(AdceError::Config(
            "numeric regime has no analytic subspace".into(),
        )),
    }
}

/// Assemble a full analytic dressed basis for subspaces `0..=m_max`.
pub fn analytic_basis(params: &SystemParams, regime: Regime, m_max: usize) -> Result<DressedBasis> {
    let mut subspaces = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        subspaces.push(analytic_subspace(params, regime, m)?);
    }
    Ok(DressedBasis {
        params: *params,
        regime,
        subspaces,
    })
}

/// Attach semantic labels to a numeric basis by maximum overlap with the
/// analytic states of `regime`. Numeric states that match no analytic
/// candidate (e.g. the inert third level under the 2L regime) keep `None`.
pub fn assign_labels(db: &mut DressedBasis, regime: Regime) -> Result<()> {
    if regime == Regime::Numeric {
        return Ok(());
    }
    let params = db.params;
    for m in 0..=db.m_max() {
        let cands = analytic_subspace(&params, regime, m)?;
        let nn = db.subspaces[m].len();
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ci, cand) in cands.iter().enumerate() {
            for ni in 0..nn {
                let num = &db.subspaces[m][ni];
                let len = cand.vector.len().min(num.vector.len());
                let o = dot(&cand.vector[..len], &num.vector[..len]).abs();
                pairs.push((o, ci, ni));
            }
        }
        pairs.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut used_c = vec![false; cands.len()];
        let mut used_n = vec![false; nn];
        for (_, ci, ni) in pairs {
            if used_c[ci] || used_n[ni] {
                continue;
            }
            used_c[ci] = true;
            used_n[ni] = true;
            db.subspaces[m][ni].label = cands[ci].label;
        }
    }
    db.regime = regime;
    Ok(())
}

// ---------------------------------------------------------------------------
// counter-rotating corrections
// ---------------------------------------------------------------------------

/// Fill the `nu` corrections of every state from the counter-rotating
/// coupling to the `m ± 2` subspaces.
///
/// Subspaces whose upper neighbor lies outside the basis are flagged and left
/// at `nu = 0` rather than given a partial (silently wrong) sum.
pub fn nu_corrections(db: &mut DressedBasis) {
    let m_max = db.m_max();
    let g = [db.params.g00, db.params.g01];
    for m in 0..=m_max {
        if m + 2 > m_max {
            for s in &mut db.subspaces[m] {
                s.nu = 0.0;
                s.nu_at_boundary = true;
            }
            continue;
        }
        let mut nus = vec![0.0; db.subspaces[m].len()];
        for (ti, t) in db.subspaces[m].iter().enumerate() {
            let mut nu = 0.0;
            if m >= 2 {
                for s in &db.subspaces[m - 2] {
                    let amp: f64 = (0..2).map(|k| g[k] * lowering_elem(k, s, t)).sum();
                    nu += amp * amp / (t.lambda - s.lambda);
                }
            }
            for s in &db.subspaces[m + 2] {
                let amp: f64 = (0..2).map(|k| g[k] * lowering_elem(k, t, s)).sum();
                nu -= amp * amp / (s.lambda - t.lambda);
            }
            nus[ti] = nu;
        }
        for (s, nu) in db.subspaces[m].iter_mut().zip(nus) {
            s.nu = nu;
            s.nu_at_boundary = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_basis, hamiltonian_bare};

    fn rr_params() -> SystemParams {
        SystemParams::from_detunings(0.06, 0.072, -0.48, 0.48)
    }

    fn two_level_params() -> SystemParams {
        SystemParams::from_detunings(0.06, 0.0, -0.48, 0.48)
    }

    fn numeric_basis(params: &SystemParams, n_max: usize) -> DressedBasis {
        let basis = build_basis(n_max).unwrap();
        let h0 = hamiltonian_bare(params, &basis);
        dressed_numeric(&h0, &basis, params).unwrap()
    }

    #[test]
    fn ground_state_is_vacuum() {
        let db = numeric_basis(&rr_params(), 4);
        let g = db.state(0, 0).unwrap();
        assert_eq!(g.lambda, 0.0);
        assert_eq!(g.vector, vec![1.0]);
    }

    #[test]
    fn numeric_m1_matches_two_by_two_oracle() {
        // Closed-form 2x2 eigenvalues: lambda = omega0 + 4 G00 -/+ beta1/2,
        // beta1 = sqrt(68) G00.
        let p = two_level_params();
        let db = numeric_basis(&p, 4);
        let g = p.g00;
        let lo = OMEGA0 + (4.0 - 68.0_f64.sqrt() / 2.0) * g;
        let hi = OMEGA0 + (4.0 + 68.0_f64.sqrt() / 2.0) * g;
        let states = db.states(1);
        assert!((states[0].lambda - lo).abs() < 1e-14);
        assert!((states[1].lambda - hi).abs() < 1e-14);
        assert!((lo - (OMEGA0 - 0.1231 * g)).abs() < 1e-4 * g);
        assert!((hi - (OMEGA0 + 8.1231 * g)).abs() < 1e-4 * g);
    }

    #[test]
    fn numeric_subspace_gram_identity() {
        let db = numeric_basis(&rr_params(), 6);
        let states = db.states(4);
        assert_eq!(states.len(), 3);
        for a in 0..3 {
            for b in 0..3 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot(&states[a].vector, &states[b].vector) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_level_resonant_limit() {
        let p = SystemParams::from_detunings(0.06, 0.0, 0.0, 0.0);
        for m in 1..=5usize {
            let states = dressed_2l(&p, m).unwrap();
            let mf = m as f64;
            // lambda = m omega0 +- G00 sqrt(m); vectors (|0,m> +- |1,m-1>)/sqrt(2)
            assert!((states[0].lambda - (mf - 0.06 * mf.sqrt())).abs() < 1e-14);
            assert!((states[1].lambda - (mf + 0.06 * mf.sqrt())).abs() < 1e-14);
            for s in states {
                assert!((s.vector[0].abs() - 0.5_f64.sqrt()).abs() < 1e-12);
                assert!((s.vector[1].abs() - 0.5_f64.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_level_beta4_value() {
        let p = two_level_params();
        let states = dressed_2l(&p, 4).unwrap();
        // beta_4 = sqrt(80) G00 ~ 8.9443 G00: splitting between branches
        let split = states[1].lambda - states[0].lambda;
        assert!((split - 80.0_f64.sqrt() * p.g00).abs() < 1e-13);
        assert!((split / p.g00 - 8.9443).abs() < 1e-4);
    }

    #[test]
    fn two_level_dispersive_limit_vector() {
        let p = SystemParams::from_detunings(1e-4, 0.0, -0.9, 0.9);
        let states = dressed_2l(&p, 3).unwrap();
        let plus = states.iter().find(|s| s.label == Some(Label::PlusD)).unwrap();
        assert!(plus.vector[0] > 0.999999);
    }

    #[test]
    fn two_level_requires_zero_g01() {
        let p = rr_params();
        assert!(matches!(
            dressed_2l(&p, 3),
            Err(AdceError::RegimeViolation { regime: "2L", .. })
        ));
    }

    #[test]
    fn rr_matches_numeric_exactly() {
        let p = rr_params();
        let db = numeric_basis(&p, 10);
        for m in 2..=8usize {
            let analytic = dressed_rr(&p, m).unwrap();
            let numeric = db.states(m);
            for (a, n) in analytic.iter().zip(numeric) {
                assert!(
                    (a.lambda - n.lambda).abs() <= 1e-10 * n.lambda.abs(),
                    "m = {m}: {} vs {}",
                    a.lambda,
                    n.lambda
                );
                assert!(dot(&a.vector, &n.vector).abs() >= 1.0 - 1e-10);
            }
        }
    }

    #[test]
    fn rr_m4_splittings() {
        let p = rr_params();
        let states = dressed_rr(&p, 4).unwrap();
        let zero = states.iter().find(|s| s.label == Some(Label::Zero)).unwrap();
        assert!((zero.lambda - 4.0).abs() < 1e-12);
        // rho_4 = sqrt(24.32) G00, rho_{4,+} ~ 8.9315 G00, rho_{4,-} ~ 0.9315 G00
        let plus = states.iter().find(|s| s.label == Some(Label::PlusD)).unwrap();
        let minus = states.iter().find(|s| s.label == Some(Label::MinusD)).unwrap();
        // D = -1 here: +D sits below m omega0, -D above
        assert!(((4.0 - plus.lambda) / p.g00 - 0.9315).abs() < 1e-4);
        assert!(((minus.lambda - 4.0) / p.g00 - 8.9315).abs() < 1e-4);
    }

    #[test]
    fn rr_resonant_limit_vectors() {
        let p = SystemParams::from_detunings(0.06, 0.06, -1e-9, 1e-9);
        let states = dressed_rr(&p, 4).unwrap();
        let plus = states.iter().find(|s| s.label == Some(Label::PlusD)).unwrap();
        // |phi_{m,+-D}> -> (|0,m> +- sqrt(2)|1,m-1> + |2,m-2>)/2 at resonance
        // (g1 = 2 G, g2 = sqrt(3) 1.0 G here so only approximately)
        let v = &plus.vector;
        assert!(v[1].abs() > v[0].abs().max(v[2].abs()));
        assert!((v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rr_requires_double_resonance() {
        let p = SystemParams::from_detunings(0.06, 0.072, -0.48, 0.4);
        assert!(matches!(
            dressed_rr(&p, 4),
            Err(AdceError::RegimeViolation { regime: "RR", .. })
        ));
    }

    #[test]
    fn dr_first_order_weight_and_shift() {
        let d = 6.0 * 0.06; // delta2 = 6 G00 sign(delta1), delta1 < 0
        let p = SystemParams::from_detunings(0.06, 0.072, -0.48, -d);
        let states = dressed_dr(&p, 4).unwrap();
        let zero = states.iter().find(|s| s.label == Some(Label::Zero)).unwrap();
        // coefficient of |1,m-1> in phi_{m,0} is G00 sqrt(m)/delta1 at first order
        let want = p.g00 * 2.0 / p.delta1();
        assert!((zero.vector[1] / zero.vector[0] - want).abs() < 1e-12);
        // delta1 = -8 G00 -> dispersive shift delta_1 = -G00/8
        assert!((p.g00 * p.g00 / p.delta1() + p.g00 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn dr_decoupling_limit() {
        let p = SystemParams::from_detunings(1e-4, 1e-4, -0.45, -0.40);
        let states = dressed_dr(&p, 5).unwrap();
        let zero = states.iter().find(|s| s.label == Some(Label::Zero)).unwrap();
        assert!(zero.vector[0] > 0.999999);
        assert!((zero.lambda - 5.0).abs() < 1e-6);
    }

    #[test]
    fn dr_criterion_enforced() {
        // |delta1| = 2 G00: ratio 2 < 4
        let p = SystemParams::from_detunings(0.06, 0.072, -0.12, -0.36);
        assert!(matches!(
            dressed_dr(&p, 4),
            Err(AdceError::RegimeViolation { regime: "DR", .. })
        ));
    }

    #[test]
    fn mr_r_values_at_paper_point() {
        let p = SystemParams::from_detunings(0.06, 0.072, -0.48, 0.0);
        let states = dressed_mr(&p, 4).unwrap();
        // r_{4,+} ~ -0.0813, r_{4,-} ~ +0.0477
        let g2 = p.g01 * 3.0_f64.sqrt();
        let r_plus = 0.25 * p.g00 * p.g00 * 4.0 / (g2 * (g2 - p.delta1().abs()));
        let r_minus = 0.25 * p.g00 * p.g00 * 4.0 / (g2 * (g2 + p.delta1().abs()));
        assert!((r_plus + 0.0813).abs() < 2e-4);
        assert!((r_minus - 0.0477).abs() < 2e-4);
        // cross-check the branch eigenvalues against the numeric solver;
        // the expansion is 2nd order so the residual is O(G00^4 m^2 / delta1^3)
        let db = numeric_basis(&p, 8);
        let numeric = db.states(4);
        for a in &states {
            let best = numeric
                .iter()
                .map(|n| (a.lambda - n.lambda).abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 5e-3, "eigenvalue {} off by {best}", a.lambda);
        }
    }

    #[test]
    fn mr_leading_splitting() {
        let p = SystemParams::from_detunings(0.06, 0.072, -0.48, 0.0);
        let states = dressed_mr(&p, 4).unwrap();
        let dsym = p.detuning_symbol();
        let g2 = p.g01 * 3.0_f64.sqrt();
        for (label, sign) in [(Label::PlusD, 1.0), (Label::MinusD, -1.0)] {
            let s = states.iter().find(|x| x.label == Some(label)).unwrap();
            // leading term; the residual is the printed O(G00^2/|delta1|) piece
            let leading = 4.0 - dsym * (p.delta1().abs() - sign * g2);
            assert!((s.lambda - leading).abs() < 0.6 * p.g00);
            let corrected = leading
                - dsym * 0.5 * p.g00 * p.g00 * 4.0 / (p.delta1().abs() - sign * g2);
            assert!((s.lambda - corrected).abs() < 1e-14);
        }
    }

    #[test]
    fn mr_requires_zero_delta2() {
        let p = SystemParams::from_detunings(0.06, 0.072, -0.48, 0.01 * 0.06);
        assert!(matches!(
            dressed_mr(&p, 4),
            Err(AdceError::RegimeViolation { regime: "MR", .. })
        ));
    }

    #[test]
    fn labels_attach_to_numeric_states() {
        let p = rr_params();
        let mut db = numeric_basis(&p, 8);
        assign_labels(&mut db, Regime::DoubleResonant).unwrap();
        for m in 2..=6 {
            let zero = db.find(m, Label::Zero).unwrap();
            assert!((zero.lambda - m as f64).abs() < 1e-12);
            assert!(db.find(m, Label::PlusD).is_ok());
            assert!(db.find(m, Label::MinusD).is_ok());
        }
        // m = 1 carries the two-level labels
        assert!(db.find(1, Label::PlusD).is_ok());
        assert!(db.find(1, Label::MinusD).is_ok());
    }

    #[test]
    fn nu_vanishes_without_coupling() {
        let p = SystemParams::from_detunings(0.0, 0.0, -0.48, 0.48);
        let mut db = numeric_basis(&p, 6);
        nu_corrections(&mut db);
        for m in 0..=4 {
            for s in db.states(m) {
                assert_eq!(s.nu, 0.0);
                assert!(!s.nu_at_boundary);
            }
        }
    }

    #[test]
    fn nu_ground_state_is_negative_and_boundary_flagged() {
        let p = rr_params();
        let mut db = numeric_basis(&p, 8);
        nu_corrections(&mut db);
        let g = db.state(0, 0).unwrap();
        assert!(g.nu < 0.0);
        assert!(!g.nu_at_boundary);
        assert_eq!(g.lambda_tilde(), g.lambda + g.nu);
        for s in db.states(8) {
            assert!(s.nu_at_boundary);
            assert_eq!(s.nu, 0.0);
        }
        for s in db.states(7) {
            assert!(s.nu_at_boundary);
        }
        for s in db.states(6) {
            assert!(!s.nu_at_boundary);
        }
    }

    #[test]
    fn nu_matches_full_hamiltonian_ground_energy() {
        // 2L at delta1 = -8 G00: lambda_0 + nu_0 approximates the exact
        // ground eigenvalue of the full Hamiltonian to within |nu_0|/10.
        let p = two_level_params();
        let basis = build_basis(12).unwrap();
        let h0 = hamiltonian_bare(&p, &basis);
        let mut db = dressed_numeric(&h0, &basis, &p).unwrap();
        nu_corrections(&mut db);
        let nu0 = db.state(0, 0).unwrap().nu;
        assert!(nu0 < 0.0);

        let spec = crate::modulation::ModulationSpec::default();
        let h = crate::hilbert::hamiltonian_full(&p, &spec, 0.0, &basis);
        let dim = h.dim;
        let mut hm = DMatrix::<f64>::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                hm[(r, c)] = h.get(r, c).re;
            }
        }
        let eig = hm.symmetric_eigen();
        let e_exact = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            (nu0 - e_exact).abs() < nu0.abs() / 10.0,
            "nu0 = {nu0}, exact = {e_exact}"
        );
    }
}
