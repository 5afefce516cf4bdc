//! Perturbative transition-rate coefficients between dressed states.
//!
//! The weak multi-tone modulation induces, to first order in the depths,
//! three kinds of couplings between dressed states:
//!
//! * `sigma`: modulation-independent intra-subspace couplings generated by
//!   the counter-rotating terms alone,
//! * `Xi`: intra-subspace couplings driven by slow tones (near the
//!   intra-subspace gaps),
//! * `Theta`: inter-subspace couplings `m ↔ m ± 2` driven by fast tones
//!   (near twice the cavity frequency); these set the ADCE speed.
//!
//! All of them are built from two elementary families of matrix elements:
//! the modulation elements `Upsilon` and the counter-rotating elements
//! `Lambda` between neighboring subspaces. Everything here is evaluated
//! once per parameter set and cached in a [`RateTable`].

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::dressed::{lowering_elem, rotating_elem, sigma_kk_elem, DressedBasis, DressedState, Label};
use crate::error::{AdceError, Result};
use crate::modulation::{MergedTones, ModulationSpec, Target, TARGETS};
use crate::params::SystemParams;
use crate::OMEGA0;

/// Threshold below which an energy denominator makes the perturbative rate
/// meaningless.
const DENOM_TOL: f64 = 1e-9 * OMEGA0;

/// Window for matching a tone against the fast/slow gap families.
const TONE_WINDOW: f64 = OMEGA0 / 2.0;

/// Classification of one global tone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToneKind {
    /// Near an inter-subspace gap `lambda_{m+2,S} - lambda_{m,T}` (about two
    /// cavity quanta); enters the `Theta` terms.
    Fast,
    /// Near an intra-subspace gap `|lambda_{m,S} - lambda_{m,T}|`; enters the
    /// `Xi` terms.
    Slow,
    /// Matches neither family; excluded from the effective dynamics with a
    /// warning.
    Inert,
}

/// Per-tone classification for one dressed basis and subspace range.
#[derive(Debug, Clone)]
pub struct ToneClass {
    pub kinds: Vec<ToneKind>,
}

impl ToneClass {
    /// Treat every tone as fast; for drives built directly on inter-subspace
    /// resonances, where the window heuristic can misfire.
    pub fn all_fast(n: usize) -> Self {
        ToneClass {
            kinds: vec![ToneKind::Fast; n],
        }
    }

    pub fn fast(&self, j: usize) -> bool {
        self.kinds[j] == ToneKind::Fast
    }

    pub fn slow(&self, j: usize) -> bool {
        self.kinds[j] == ToneKind::Slow
    }

    pub fn inert_tones(&self) -> Vec<usize> {
        self.kinds
            .iter()
            .enumerate()
            .filter_map(|(j, k)| (*k == ToneKind::Inert).then_some(j))
            .collect()
    }
}

/// Sort each tone into the fast or slow family by its distance (window
/// omega0/2) to the realized gaps over `m_range`.
pub fn classify_tones(
    tones: &MergedTones,
    dressed: &DressedBasis,
    m_range: std::ops::RangeInclusive<usize>,
) -> Result<ToneClass> {
    let mut fast_gaps = Vec::new();
    let mut slow_gaps = Vec::new();
    for m in m_range.clone() {
        for t in dressed.states(m) {
            if m + 2 <= dressed.m_max() {
                for s in dressed.states(m + 2) {
                    fast_gaps.push(s.lambda - t.lambda);
                }
            }
            for s in dressed.states(m) {
                if s.ordinal != t.ordinal {
                    slow_gaps.push((s.lambda - t.lambda).abs());
                }
            }
        }
    }
    let dist = |gaps: &[f64], eta: f64| -> f64 {
        gaps.iter()
            .map(|g| (g - eta).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let mut kinds = Vec::with_capacity(tones.len());
    for (j, &eta) in tones.freqs.iter().enumerate() {
        let is_fast = dist(&fast_gaps, eta) <= TONE_WINDOW;
        let is_slow = dist(&slow_gaps, eta) <= TONE_WINDOW;
        let kind = match (is_fast, is_slow) {
            (true, true) => return Err(AdceError::AmbiguousTone { index: j, eta }),
            (true, false) => ToneKind::Fast,
            (false, true) => ToneKind::Slow,
            (false, false) => ToneKind::Inert,
        };
        kinds.push(kind);
    }
    Ok(ToneClass { kinds })
}

/// Modulation matrix element
/// `Upsilon^{L,k,j}_{m,T,S} = eps_l w^(j)_l ⟨phi_{m,T}| O_l |phi_{m,S}⟩`
/// where `O_l` is `sigma_{k,k}` for energy targets and the rotating coupling
/// for `G` targets. Zero when the target does not carry tone `j`. The
/// formally defined `E0` and `G2` components never appear because they are
/// not modulable.
pub fn upsilon_coeff(
    spec: &ModulationSpec,
    tones: &MergedTones,
    target: Target,
    j: usize,
    t: &DressedState,
    s: &DressedState,
) -> f64 {
    let depth = spec.drive(target).depth;
    if depth == 0.0 {
        return 0.0;
    }
    let Some((w, _)) = tones.component(target, j) else {
        return 0.0;
    };
    let (kind, k) = target.kind();
    let elem = match kind {
        'E' => sigma_kk_elem(k, t, s),
        _ => rotating_elem(k, t, s),
    };
    depth * w * elem
}

/// Counter-rotating element `Lambda_{k,m+2,T,S}` between `T` (subspace `m`)
/// and `S` (subspace `m + 2`). `k` must be 0 or 1.
pub fn lambda_coeff(k: usize, t: &DressedState, s: &DressedState) -> Result<f64> {
    if k > 1 {
        return Err(AdceError::Config(format!("coupling index {k} out of range")));
    }
    Ok(lowering_elem(k, t, s))
}

/// Combined counter-rotating amplitude `sum_k G_{0,k} Lambda_{k}` between a
/// state of subspace `m` and one of `m + 2`.
pub fn coupling_amplitude(params: &SystemParams, t: &DressedState, s: &DressedState) -> f64 {
    params.g00 * lowering_elem(0, t, s) + params.g01 * lowering_elem(1, t, s)
}

/// Modulation-independent intra-subspace rate `sigma_{m,T,S}` produced by
/// virtual transitions through the `m ± 2` subspaces.
pub fn sigma_rate(
    params: &SystemParams,
    dressed: &DressedBasis,
    m: usize,
    t_ord: usize,
    s_ord: usize,
) -> Result<C64> {
    if t_ord == s_ord {
        return Err(AdceError::Config("sigma requires T != S".into()));
    }
    if m + 2 > dressed.m_max() {
        return Err(AdceError::BoundarySubspace { m, what: "sigma" });
    }
    let t = dressed.state(m, t_ord)?;
    let s = dressed.state(m, s_ord)?;
    let mut sum = 0.0;
    for r in dressed.states(m + 2) {
        let amp_t = coupling_amplitude(params, t, r);
        let amp_s = coupling_amplitude(params, s, r);
        sum += amp_t * amp_s / (r.lambda - s.lambda);
    }
    if m >= 2 {
        for r in dressed.states(m - 2) {
            let amp_t = coupling_amplitude(params, r, t);
            let amp_s = coupling_amplitude(params, r, s);
            sum -= amp_t * amp_s / (s.lambda - r.lambda);
        }
    }
    Ok(C64::new(0.0, sum))
}

/// Slow-tone intra-subspace rate `Xi^(j)_{m,T,S}`.
pub fn xi_rate(
    spec: &ModulationSpec,
    tones: &MergedTones,
    classes: &ToneClass,
    j: usize,
    dressed: &DressedBasis,
    m: usize,
    t_ord: usize,
    s_ord: usize,
) -> Result<C64> {
    if !classes.slow(j) {
        return Err(AdceError::ToneClass {
            index: j,
            detail: "Xi is defined for slow tones only".into(),
        });
    }
    if t_ord == s_ord {
        return Err(AdceError::Config("Xi requires T != S".into()));
    }
    let t = dressed.state(m, t_ord)?;
    let s = dressed.state(m, s_ord)?;
    let varpi = if t.lambda_tilde() >= s.lambda_tilde() {
        1.0
    } else {
        -1.0
    };
    let mut sum = C64::new(0.0, 0.0);
    for &target in &TARGETS {
        let ups = upsilon_coeff(spec, tones, target, j, t, s);
        if ups == 0.0 {
            continue;
        }
        let (_, phase) = tones.component(target, j).expect("nonzero upsilon has a tone");
        sum += ups * C64::from_polar(1.0, -varpi * phase);
    }
    Ok(0.5 * varpi * sum)
}

/// Fast-tone inter-subspace rate `Theta^(j)_{m+2,T,S}` coupling `T` (subspace
/// `m = m_plus_2 - 2`) to `S` (subspace `m_plus_2`); the ADCE amplitude.
pub fn theta_rate(
    spec: &ModulationSpec,
    tones: &MergedTones,
    classes: &ToneClass,
    j: usize,
    dressed: &DressedBasis,
    m_plus_2: usize,
    t_ord: usize,
    s_ord: usize,
) -> Result<C64> {
    if !classes.fast(j) {
        return Err(AdceError::ToneClass {
            index: j,
            detail: "Theta is defined for fast tones only".into(),
        });
    }
    if m_plus_2 < 2 {
        return Err(AdceError::MissingSubspace(m_plus_2));
    }
    let m = m_plus_2 - 2;
    let eta = tones.freqs[j];
    let t = dressed.state(m, t_ord)?;
    let s = dressed.state(m_plus_2, s_ord)?;

    let mut theta = C64::new(0.0, 0.0);
    for k in 0..2usize {
        let g0k = if k == 0 {
            dressed.params.g00
        } else {
            dressed.params.g01
        };

        // direct term: -eps^(j)_{G,k} Lambda_k / G_{0,k}, with the G_{0,k}/2
        // prefactor cancelled analytically so G_{0,k} = 0 stays finite
        let g_target = if k == 0 { Target::G0 } else { Target::G1 };
        let gd = spec.drive(g_target);
        if gd.depth != 0.0 {
            if let Some((w, phase)) = tones.component(g_target, j) {
                let eps = gd.depth * w * C64::from_polar(1.0, phase);
                theta -= 0.5 * eps * lowering_elem(k, t, s);
            }
        }

        if g0k == 0.0 {
            continue;
        }
        let mut bracket = C64::new(0.0, 0.0);
        for &target in &TARGETS {
            let Some((_, phase)) = tones.component(target, j) else {
                continue;
            };
            let rot = C64::from_polar(1.0, phase);
            // sum over R in the upper subspace
            for r in dressed.states(m_plus_2) {
                let ups = upsilon_coeff(spec, tones, target, j, r, s);
                if ups == 0.0 {
                    continue;
                }
                let den = r.lambda - s.lambda + eta;
                if den.abs() < DENOM_TOL {
                    return Err(AdceError::NearDegeneracy(format!(
                        "lambda_({m_plus_2},{}) - lambda_({m_plus_2},{}) + eta = {den:.3e}",
                        r.ordinal, s.ordinal
                    )));
                }
                bracket += lowering_elem(k, t, r) * ups * rot / den;
            }
            // sum over R in the lower subspace
            for r in dressed.states(m) {
                let ups = upsilon_coeff(spec, tones, target, j, t, r);
                if ups == 0.0 {
                    continue;
                }
                let den = t.lambda - r.lambda + eta;
                if den.abs() < DENOM_TOL {
                    return Err(AdceError::NearDegeneracy(format!(
                        "lambda_({m},{}) - lambda_({m},{}) + eta = {den:.3e}",
                        t.ordinal, r.ordinal
                    )));
                }
                bracket -= lowering_elem(k, r, s) * ups * rot / den;
            }
        }
        theta += 0.5 * g0k * bracket;
    }
    Ok(theta)
}

/// Second-order level shift of one dressed state induced by the drive
/// itself: the intra-subspace modulation elements act like detuned
/// two-state couplings `Upsilon/2` and push the level by
/// `sum |Upsilon/2|^2 [1/(gap - eta) + 1/(gap + eta)]`.
///
/// The corrected frequencies drop this shift together with the rest of the
/// neglected corrections, but at reference drive strength it reaches the
/// size of `Theta` itself and detunes the transfer visibly, so the dynamics
/// scenarios fold it into their resonant tone frequencies.
pub fn drive_level_shift(
    spec: &ModulationSpec,
    tones: &MergedTones,
    dressed: &DressedBasis,
    m: usize,
    t_ord: usize,
) -> Result<f64> {
    let t = dressed.state(m, t_ord)?;
    let mut shift = 0.0;
    for (j, &eta) in tones.freqs.iter().enumerate() {
        for s in dressed.states(m) {
            if s.ordinal == t_ord {
                continue;
            }
            // coherent sum over targets, phases included
            let mut amp = C64::new(0.0, 0.0);
            for &target in &TARGETS {
                let u = upsilon_coeff(spec, tones, target, j, t, s);
                if u == 0.0 {
                    continue;
                }
                let (_, phase) = tones.component(target, j).expect("tone exists");
                amp += u * C64::from_polar(1.0, phase);
            }
            let u2 = amp.norm_sqr() / 4.0;
            if u2 == 0.0 {
                continue;
            }
            let gap = t.lambda_tilde() - s.lambda_tilde();
            for den in [gap - eta, gap + eta] {
                if den.abs() > 1e-6 {
                    shift += u2 / den;
                }
            }
        }
    }
    Ok(shift)
}

/// Resonant modulation frequency for the transition `(m, T) -> (m-2, S)`:
/// the corrected gap `lambda~_{m,T} - lambda~_{m-2,S}`. The boolean marks a
/// boundary-flagged `nu` on either side (the value then degrades toward the
/// uncorrected gap).
pub fn resonance_frequency(
    dressed: &DressedBasis,
    m: usize,
    t_ord: usize,
    s_ord: usize,
) -> Result<(f64, bool)> {
    if m < 2 {
        return Err(AdceError::MissingSubspace(m));
    }
    let t = dressed.state(m, t_ord)?;
    let s = dressed.state(m - 2, s_ord)?;
    let warn = t.nu_at_boundary || s.nu_at_boundary;
    Ok((t.lambda_tilde() - s.lambda_tilde(), warn))
}

/// Thermal occupation `rho_m = nbar^m / (nbar+1)^(m+1)`.
pub fn thermal_weight(nbar: f64, m: usize) -> f64 {
    nbar.powi(m as i32) / (nbar + 1.0).powi(m as i32 + 1)
}

/// Initial population of a dressed state for the separable start
/// `|0⟩⟨0| ⊗ rho_th`: `P_{m,T} = rho_m |⟨phi_{m,T}|0,m⟩|^2`.
pub fn initial_population(state: &DressedState, nbar: f64) -> f64 {
    let c = state.vector[0];
    thermal_weight(nbar, state.m) * c * c
}

/// Initial population difference `P(m,T,S) = P_{m,T} - P_{m-2,S}` deciding
/// whether the transition can annihilate excitations.
pub fn population_difference(
    dressed: &DressedBasis,
    nbar: f64,
    m: usize,
    t_label: Label,
    s_label: Label,
) -> Result<f64> {
    if m < 2 {
        return Err(AdceError::MissingSubspace(m));
    }
    let t = dressed.find(m, t_label)?;
    let s = dressed.find(m - 2, s_label)?;
    Ok(initial_population(t, nbar) - initial_population(s, nbar))
}

/// Precomputed coefficient tables for one `(params, modulation)` pair over a
/// subspace range. The effective equations evaluate these couplings millions
/// of times, so they are built once and shared immutably.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub m_min: usize,
    pub m_max: usize,
    pub tones: MergedTones,
    pub classes: ToneClass,
    /// `(m, t, s) -> sigma_{m,T,S}`, `t != s`.
    pub sigma: BTreeMap<(usize, usize, usize), C64>,
    /// `(j, m, t, s) -> Xi^(j)_{m,T,S}` for slow tones.
    pub xi: BTreeMap<(usize, usize, usize, usize), C64>,
    /// `(j, m_plus_2, t, s) -> Theta^(j)_{m+2,T,S}` for fast tones; `t` lives
    /// in `m_plus_2 - 2`, `s` in `m_plus_2`.
    pub theta: BTreeMap<(usize, usize, usize, usize), C64>,
    /// `(m, t, s) -> (eta_res, boundary_warning)` for `(m,T) -> (m-2,S)`.
    pub resonances: BTreeMap<(usize, usize, usize), (f64, bool)>,
    /// `(target index, j, m, t, s) -> Upsilon`.
    pub upsilon: BTreeMap<(usize, usize, usize, usize, usize), f64>,
}

impl RateTable {
    /// Build every coefficient for subspaces `m_min..=m_max`. The dressed
    /// basis must extend two subspaces beyond `m_max` so no sum is silently
    /// truncated.
    pub fn build(
        params: &SystemParams,
        spec: &ModulationSpec,
        dressed: &DressedBasis,
        m_min: usize,
        m_max: usize,
    ) -> Result<RateTable> {
        let tones = spec.merged_tones();
        let classes = classify_tones(&tones, dressed, m_min..=m_max)?;
        Self::build_with_classes(params, spec, dressed, m_min, m_max, classes)
    }

    /// Like [`RateTable::build`] but with a caller-supplied tone
    /// classification, for drives whose tones are resonant by construction.
    pub fn build_with_classes(
        params: &SystemParams,
        spec: &ModulationSpec,
        dressed: &DressedBasis,
        m_min: usize,
        m_max: usize,
        classes: ToneClass,
    ) -> Result<RateTable> {
        spec.validate()?;
        if m_max + 2 > dressed.m_max() {
            return Err(AdceError::BoundarySubspace {
                m: m_max,
                what: "rate table (need dressed subspaces up to m_max + 2)",
            });
        }
        let tones = spec.merged_tones();

        let mut sigma = BTreeMap::new();
        let mut xi = BTreeMap::new();
        let mut theta = BTreeMap::new();
        let mut resonances = BTreeMap::new();
        let mut upsilon = BTreeMap::new();

        for m in m_min..=m_max {
            let g = dressed.states(m).len();
            for t in 0..g {
                for s in 0..g {
                    if t != s {
                        sigma.insert((m, t, s), sigma_rate(params, dressed, m, t, s)?);
                        for j in 0..tones.len() {
                            if classes.slow(j) {
                                xi.insert(
                                    (j, m, t, s),
                                    xi_rate(spec, &tones, &classes, j, dressed, m, t, s)?,
                                );
                            }
                        }
                    }
                    for j in 0..tones.len() {
                        for &target in &TARGETS {
                            let v = upsilon_coeff(
                                spec,
                                &tones,
                                target,
                                j,
                                dressed.state(m, t)?,
                                dressed.state(m, s)?,
                            );
                            if v != 0.0 {
                                upsilon.insert((target.index(), j, m, t, s), v);
                            }
                        }
                    }
                }
            }
            if m >= m_min + 2 {
                let g_lo = dressed.states(m - 2).len();
                for t in 0..g_lo {
                    for s in 0..g {
                        resonances.insert((m, s, t), resonance_frequency(dressed, m, s, t)?);
                        for j in 0..tones.len() {
                            if classes.fast(j) {
                                theta.insert(
                                    (j, m, t, s),
                                    theta_rate(spec, &tones, &classes, j, dressed, m, t, s)?,
                                );
                            }
                        }
                    }
                }
            }
        }
        Ok(RateTable {
            m_min,
            m_max,
            tones,
            classes,
            sigma,
            xi,
            theta,
            resonances,
            upsilon,
        })
    }

    pub fn sigma_at(&self, m: usize, t: usize, s: usize) -> C64 {
        self.sigma.get(&(m, t, s)).copied().unwrap_or_default()
    }

    pub fn theta_at(&self, j: usize, m_plus_2: usize, t: usize, s: usize) -> C64 {
        self.theta
            .get(&(j, m_plus_2, t, s))
            .copied()
            .unwrap_or_default()
    }

    pub fn xi_at(&self, j: usize, m: usize, t: usize, s: usize) -> C64 {
        self.xi.get(&(j, m, t, s)).copied().unwrap_or_default()
    }
}
