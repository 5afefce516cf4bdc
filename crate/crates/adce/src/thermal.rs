//! Thermal initial state of the cavity, realized as a weighted ensemble of
//! Fock states.
//!
//! The initial density matrix `|0⟩⟨0| ⊗ rho_th` is diagonal in the product
//! basis and the evolution is unitary, so mixed-state dynamics reduces to
//! propagating each `|0, m⟩` member separately and averaging observables
//! with the geometric weights `rho_m = nbar^m / (nbar+1)^(m+1)`.

use crate::error::{AdceError, Result};
use crate::rates::thermal_weight;

#[derive(Debug, Clone, Copy)]
pub struct ThermalMember {
    pub photons: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct ThermalEnsemble {
    pub nbar: f64,
    pub members: Vec<ThermalMember>,
    /// `1 - sum of weights`, reported rather than renormalized so initial
    /// observable deviations stay attributable.
    pub deficit: f64,
}

impl ThermalEnsemble {
    pub fn max_photons(&self) -> usize {
        self.members.last().map(|m| m.photons).unwrap_or(0)
    }
}

/// Truncate the thermal state at the smallest `M` whose geometric tail
/// `(nbar/(nbar+1))^M` drops to `tail_tol`, keeping Fock states `0..M-1`.
pub fn thermal_ensemble(nbar: f64, tail_tol: f64) -> Result<ThermalEnsemble> {
    if !(nbar >= 0.0) {
        return Err(AdceError::Config(format!("nbar must be >= 0, got {nbar}")));
    }
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(AdceError::Config(format!(
            "tail tolerance must lie in (0, 1), got {tail_tol}"
        )));
    }
    let q = nbar / (nbar + 1.0);
    let mut m_count = 1usize;
    let mut tail = q;
    while tail > tail_tol {
        m_count += 1;
        tail = q.powi(m_count as i32);
    }
    let members = (0..m_count)
        .map(|m| ThermalMember {
            photons: m,
            weight: thermal_weight(nbar, m),
        })
        .collect();
    Ok(ThermalEnsemble {
        nbar,
        members,
        deficit: tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_single_member() {
        let e = thermal_ensemble(0.0, 1e-8).unwrap();
        assert_eq!(e.members.len(), 1);
        assert_eq!(e.members[0].photons, 0);
        assert_eq!(e.members[0].weight, 1.0);
        assert_eq!(e.deficit, 0.0);
    }

    #[test]
    fn paper_thermal_state() {
        let e = thermal_ensemble(1.5, 1e-8).unwrap();
        // tail = 0.6^M: M = 37 is the first below 1e-8
        assert_eq!(e.members.len(), 37);
        assert!((e.members[0].weight - 0.4).abs() < 1e-15);
        assert!(e.deficit <= 1e-8);
        assert!(0.6_f64.powi(36) > 1e-8);
        // weights decrease monotonically
        for w in e.members.windows(2) {
            assert!(w[1].weight < w[0].weight);
        }
        // mean photon number of the truncated ensemble approaches nbar
        let mean: f64 = e
            .members
            .iter()
            .map(|m| m.weight * m.photons as f64)
            .sum();
        assert!((mean - 1.5).abs() < 1e-6);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(thermal_ensemble(-0.1, 1e-3).is_err());
        assert!(thermal_ensemble(1.0, 0.0).is_err());
        assert!(thermal_ensemble(1.0, 1.0).is_err());
    }
}
