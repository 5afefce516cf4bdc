//! Static physical parameters of the qutrit-cavity system.

use serde::{Deserialize, Serialize};

use crate::error::{AdceError, Result};
use crate::OMEGA0;

/// Bare (unmodulated) system parameters, all in units of the cavity
/// frequency `omega0 = 1`.
///
/// The three atomic levels have energies `E0 = 0`, `E1` and `E2`; the two
/// ladder couplings are `g00` (levels 0-1) and `g01` (levels 1-2). The third
/// coupling `G_{0,2}` is identically zero. Detunings are defined against the
/// cavity: `delta1 = omega0 - (E1 - E0)` and `delta2 = omega0 - (E2 - E1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Energy of atomic level 1 (level 0 sits at zero).
    pub e1: f64,
    /// Energy of atomic level 2.
    pub e2: f64,
    /// Coupling between levels 0 and 1.
    pub g00: f64,
    /// Coupling between levels 1 and 2.
    pub g01: f64,
}

impl SystemParams {
    /// Build from the detunings instead of the level energies.
    pub fn from_detunings(g00: f64, g01: f64, delta1: f64, delta2: f64) -> Self {
        let omega01 = OMEGA0 - delta1;
        let omega12 = OMEGA0 - delta2;
        SystemParams {
            e1: omega01,
            e2: omega01 + omega12,
            g00,
            g01,
        }
    }

    /// Energy of atomic level `k` (0, 1 or 2).
    pub fn level_energy(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            1 => self.e1,
            2 => self.e2,
            _ => panic!("atomic level {k} out of range"),
        }
    }

    /// Coupling between levels `k` and `k+1`; `G_{0,2} = 0` identically.
    pub fn coupling(&self, k: usize) -> f64 {
        match k {
            0 => self.g00,
            1 => self.g01,
            2 => 0.0,
            _ => panic!("coupling index {k} out of range"),
        }
    }

    /// Transition frequency between levels 0 and 1.
    pub fn omega01(&self) -> f64 {
        self.e1
    }

    /// Transition frequency between levels 1 and 2.
    pub fn omega12(&self) -> f64 {
        self.e2 - self.e1
    }

    /// Bare detuning of the 0-1 transition from the cavity.
    pub fn delta1(&self) -> f64 {
        OMEGA0 - self.omega01()
    }

    /// Bare detuning of the 1-2 transition from the cavity.
    pub fn delta2(&self) -> f64 {
        OMEGA0 - self.omega12()
    }

    /// Detuning symbol: +1 for `delta1 >= 0`, -1 otherwise. Selects which
    /// dressed branch is labeled `+D`.
    pub fn detuning_symbol(&self) -> f64 {
        if self.delta1() >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Check the structural invariants (nonnegative couplings, finite
    /// energies).
    pub fn validate(&self) -> Result<()> {
        if !(self.g00 >= 0.0 && self.g01 >= 0.0) {
            return Err(AdceError::Config(format!(
                "couplings must be nonnegative, got g00 = {}, g01 = {}",
                self.g00, self.g01
            )));
        }
        for v in [self.e1, self.e2, self.g00, self.g01] {
            if !v.is_finite() {
                return Err(AdceError::Config("non-finite system parameter".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detunings_round_trip() {
        let p = SystemParams::from_detunings(0.06, 0.072, -0.48, 0.48);
        assert!((p.delta1() + 0.48).abs() < 1e-15);
        assert!((p.delta2() - 0.48).abs() < 1e-15);
        assert!((p.omega01() - 1.48).abs() < 1e-15);
        assert!((p.omega12() - 0.52).abs() < 1e-15);
        // double resonance: E2 = 2 omega0 when delta2 = -delta1
        assert!((p.e2 - 2.0).abs() < 1e-15);
        assert_eq!(p.detuning_symbol(), -1.0);
    }

    #[test]
    fn detuning_symbol_at_zero() {
        let p = SystemParams::from_detunings(0.06, 0.0, -0.0, 0.0);
        assert_eq!(p.detuning_symbol(), 1.0);
    }

    #[test]
    fn negative_coupling_rejected() {
        let p = SystemParams {
            e1: 1.0,
            e2: 2.0,
            g00: -0.1,
            g01: 0.0,
        };
        assert!(p.validate().is_err());
    }
}
