//! Validity report for the assumptions behind the effective description.
//!
//! The rotating-wave derivation assumes four families of inequalities; each
//! is checked over the requested subspaces and reported with its worst
//! ratio. "Much smaller" is operationalized as a ratio of 0.2 and "of
//! order or below" as 0.5.
//!
//! The intra-subspace gap family needs care: a pair of dressed states may
//! either be near-degenerate (its coupling is then kept coherently, so the
//! gap itself must be small against the cavity frequency) or well split (its
//! coupling then self-averages, so only the coupling-to-gap ratio matters).
//! A pair passes through whichever mechanism applies; demanding small gaps
//! from every pair would reject the reference two-level configuration whose
//! branch splitting is half the cavity frequency.

use crate::dressed::{lowering_elem, DressedBasis};
use crate::error::Result;
use crate::modulation::ModulationSpec;
use crate::params::SystemParams;
use crate::rates::RateTable;
use crate::OMEGA0;

pub const MUCH_SMALLER: f64 = 0.2;
pub const OF_ORDER: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct ConstraintEntry {
    pub name: &'static str,
    pub worst_ratio: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Where the worst ratio occurred.
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ConstraintReport {
    pub entries: Vec<ConstraintEntry>,
}

impl ConstraintReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn summary(&self) -> String {
        self.entries
            .iter()
            .map(|e| {
                format!(
                    "{}: {} (worst ratio {:.3} vs {:.1}; {})",
                    e.name,
                    if e.pass { "pass" } else { "FAIL" },
                    e.worst_ratio,
                    e.threshold,
                    e.detail
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

struct Worst {
    ratio: f64,
    detail: String,
}

impl Worst {
    fn new() -> Self {
        Worst {
            ratio: 0.0,
            detail: "none".into(),
        }
    }

    fn update(&mut self, ratio: f64, detail: impl FnOnce() -> String) {
        if ratio > self.ratio {
            self.ratio = ratio;
            self.detail = detail();
        }
    }

    fn entry(self, name: &'static str, threshold: f64) -> ConstraintEntry {
        ConstraintEntry {
            name,
            pass: self.ratio <= threshold,
            worst_ratio: self.ratio,
            threshold,
            detail: self.detail,
        }
    }
}

/// Evaluate every validity inequality over `m_range`. Report-only: nothing
/// fails hard here.
pub fn validate_constraints(
    params: &SystemParams,
    _spec: &ModulationSpec,
    dressed: &DressedBasis,
    rates: &RateTable,
    m_range: std::ops::RangeInclusive<usize>,
) -> Result<ConstraintReport> {
    let g0 = [params.g00, params.g01];

    let mut gaps = Worst::new();
    let mut upsilon = Worst::new();
    let mut virtual_rate = Worst::new();
    let mut cr_strength = Worst::new();

    for m in m_range.clone() {
        let states = dressed.states(m);
        let g = states.len();
        // (i) intra-subspace pairs: near-degenerate or self-averaging
        for t in 0..g {
            for s in t + 1..g {
                let gap = (states[t].lambda - states[s].lambda).abs();
                let mut coupling = rates.sigma_at(m, t, s).norm();
                for j in 0..rates.tones.len() {
                    if rates.classes.slow(j) {
                        coupling += rates.xi_at(j, m, t, s).norm();
                    }
                }
                let ratio = if gap == 0.0 {
                    0.0
                } else {
                    (gap / OMEGA0).min(coupling / gap)
                };
                gaps.update(ratio, || {
                    format!("m = {m}, pair ({t},{s}): gap {gap:.3}, coupling {coupling:.2e}")
                });
            }
        }
        // (iii) virtual-transition rates and (iv) counter-rotating strengths
        if m + 2 <= dressed.m_max() {
            for t in states {
                for s in dressed.states(m + 2) {
                    let den = (s.lambda - t.lambda).abs();
                    for l in 0..2usize {
                        let lam = lowering_elem(l, t, s).abs();
                        cr_strength.update(g0[l] * lam / OMEGA0, || {
                            format!("m = {m}, k = {l}, ({},{}): G|Lambda| = {:.3e}", t.ordinal, s.ordinal, g0[l] * lam)
                        });
                        for k in 0..2usize {
                            let ratio = g0[k] * g0[l] * lam / den / OMEGA0;
                            virtual_rate.update(ratio, || {
                                format!(
                                    "m = {m}, (k,l) = ({k},{l}), ({},{}): G G Lambda / gap = {:.3e}",
                                    t.ordinal, s.ordinal, ratio
                                )
                            });
                        }
                    }
                }
            }
        }
    }

    // (ii) modulation matrix elements
    for (&(target, j, m, t, s), &v) in rates.upsilon.iter() {
        if !m_range.contains(&m) {
            continue;
        }
        upsilon.update(v.abs() / OMEGA0, || {
            format!(
                "m = {m}, target index {target}, tone {j}, pair ({t},{s}): |Upsilon| = {:.3e}",
                v.abs()
            )
        });
    }

    Ok(ConstraintReport {
        entries: vec![
            gaps.entry("intra-subspace gaps vs couplings", MUCH_SMALLER),
            upsilon.entry("modulation elements |Upsilon| << omega0", MUCH_SMALLER),
            virtual_rate.entry("virtual rates G G Lambda / gap << omega0", MUCH_SMALLER),
            cr_strength.entry("counter-rotating strength G |Lambda| <~ omega0", OF_ORDER),
        ],
    })
}
