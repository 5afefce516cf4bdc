//! Multi-tone parametric modulation of the atomic parameters.
//!
//! Each modulated parameter `l` follows `l(t) = l_0 + eps_l * f_l(t)` with
//! `f_l(t) = sum_j w^(j) sin(eta^(j) t + phi^(j))` and weights normalized to
//! `sum_j w^(j) = 1`, so the depth `eps_l` alone sets the drive strength.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AdceError, Result};

/// Modulated parameter: the two upper atomic energies or the two couplings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Target {
    E1,
    E2,
    G0,
    G1,
}

/// All modulation targets in canonical order.
pub const TARGETS: [Target; 4] = [Target::E1, Target::E2, Target::G0, Target::G1];

impl Target {
    /// Index into per-target tables, in [`TARGETS`] order.
    pub fn index(self) -> usize {
        match self {
            Target::E1 => 0,
            Target::E2 => 1,
            Target::G0 => 2,
            Target::G1 => 3,
        }
    }

    /// Whether this target is an energy (`E`) or a coupling (`G`), and which
    /// atomic index `k` it carries.
    pub fn kind(self) -> (char, usize) {
        match self {
            Target::E1 => ('E', 1),
            Target::E2 => ('E', 2),
            Target::G0 => ('G', 0),
            Target::G1 => ('G', 1),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Target::E1 => "E1",
            Target::E2 => "E2",
            Target::G0 => "G0",
            Target::G1 => "G1",
        };
        f.write_str(s)
    }
}

impl FromStr for Target {
    type Err = AdceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "E1" | "e1" => Ok(Target::E1),
            "E2" | "e2" => Ok(Target::E2),
            "G0" | "g0" => Ok(Target::G0),
            "G1" | "g1" => Ok(Target::G1),
            other => Err(AdceError::Config(format!(
                "unknown modulation target {other:?} (expected E1, E2, G0 or G1)"
            ))),
        }
    }
}

/// One harmonic component of a drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    /// Angular frequency, units of omega0.
    pub freq: f64,
    /// Weight in [0, 1]; weights of one drive sum to 1.
    pub weight: f64,
    /// Phase in radians.
    pub phase: f64,
}

/// Drive applied to a single target parameter. An unmodulated parameter has
/// zero depth and no tones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// Modulation depth, same units as the target parameter.
    #[serde(default)]
    pub depth: f64,
    #[serde(default)]
    pub tones: Vec<Tone>,
}

impl Drive {
    pub fn single(depth: f64, freq: f64, phase: f64) -> Self {
        Drive {
            depth,
            tones: vec![Tone {
                freq,
                weight: 1.0,
                phase,
            }],
        }
    }

    fn envelope(&self, t: f64) -> f64 {
        self.tones
            .iter()
            .map(|tone| tone.weight * (tone.freq * t + tone.phase).sin())
            .sum()
    }
}

/// Complete modulation prescription for the four modulable parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    #[serde(default)]
    pub e1: Drive,
    #[serde(default)]
    pub e2: Drive,
    #[serde(default)]
    pub g0: Drive,
    #[serde(default)]
    pub g1: Drive,
}

impl ModulationSpec {
    pub fn drive(&self, target: Target) -> &Drive {
        match target {
            Target::E1 => &self.e1,
            Target::E2 => &self.e2,
            Target::G0 => &self.g0,
            Target::G1 => &self.g1,
        }
    }

    pub fn drive_mut(&mut self, target: Target) -> &mut Drive {
        match target {
            Target::E1 => &mut self.e1,
            Target::E2 => &mut self.e2,
            Target::G0 => &mut self.g0,
            Target::G1 => &mut self.g1,
        }
    }

    /// True when no parameter carries a drive.
    pub fn is_static(&self) -> bool {
        TARGETS.iter().all(|&t| self.drive(t).depth == 0.0)
    }

    /// Instantaneous offset `eps_l * f_l(t)` of a target from its bare value.
    pub fn offset(&self, target: Target, t: f64) -> f64 {
        let d = self.drive(target);
        if d.depth == 0.0 {
            0.0
        } else {
            d.depth * d.envelope(t)
        }
    }

    /// Instantaneous parameter value `bare + eps_l * f_l(t)`. Returns `bare`
    /// exactly for an unmodulated target.
    pub fn value(&self, target: Target, bare: f64, t: f64) -> f64 {
        bare + self.offset(target, t)
    }

    /// Check the structural invariants: positive tone frequencies, weights of
    /// every modulated drive summing to one, unmodulated drives empty.
    pub fn validate(&self) -> Result<()> {
        for &target in &TARGETS {
            let d = self.drive(target);
            if d.depth == 0.0 {
                if !d.tones.is_empty() {
                    return Err(AdceError::Config(format!(
                        "drive {target} has tones but zero depth"
                    )));
                }
                continue;
            }
            if !d.depth.is_finite() {
                return Err(AdceError::Config(format!("drive {target} has non-finite depth")));
            }
            if d.tones.is_empty() {
                return Err(AdceError::Config(format!(
                    "drive {target} has depth {} but no tones",
                    d.depth
                )));
            }
            let mut wsum = 0.0;
            for tone in &d.tones {
                if !(tone.freq > 0.0) {
                    return Err(AdceError::Config(format!(
                        "drive {target} has a nonpositive tone frequency {}",
                        tone.freq
                    )));
                }
                if !(0.0..=1.0).contains(&tone.weight) {
                    return Err(AdceError::Config(format!(
                        "drive {target} has weight {} outside [0, 1]",
                        tone.weight
                    )));
                }
                wsum += tone.weight;
            }
            if (wsum - 1.0).abs() > 1e-9 {
                return Err(AdceError::Config(format!(
                    "weights of drive {target} sum to {wsum}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// Collect the distinct tone frequencies across all drives into one
    /// global table. Frequencies matching within a relative 1e-12 are merged.
    pub fn merged_tones(&self) -> MergedTones {
        let mut freqs: Vec<f64> = Vec::new();
        for &target in &TARGETS {
            for tone in &self.drive(target).tones {
                let found = freqs
                    .iter()
                    .any(|&f| (f - tone.freq).abs() <= 1e-12 * f.max(tone.freq));
                if !found {
                    freqs.push(tone.freq);
                }
            }
        }
        freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut components = [const { Vec::new() }; 4];
        for &target in &TARGETS {
            let d = self.drive(target);
            let mut per_tone: Vec<Option<(f64, f64)>> = vec![None; freqs.len()];
            for tone in &d.tones {
                let j = freqs
                    .iter()
                    .position(|&f| (f - tone.freq).abs() <= 1e-12 * f.max(tone.freq))
                    .expect("tone frequency registered above");
                per_tone[j] = Some((tone.weight, tone.phase));
            }
            components[target.index()] = per_tone;
        }
        MergedTones { freqs, components }
    }
}

/// Global tone table: one entry per distinct drive frequency, with each
/// target's weight and phase at that frequency (absent if the target does
/// not carry the tone).
#[derive(Debug, Clone)]
pub struct MergedTones {
    pub freqs: Vec<f64>,
    components: [Vec<Option<(f64, f64)>>; 4],
}

impl MergedTones {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Weight and phase of `target` at global tone `j`, or `None` when the
    /// target does not participate in that tone.
    pub fn component(&self, target: Target, j: usize) -> Option<(f64, f64)> {
        self.components[target.index()][j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn two_tone_spec() -> ModulationSpec {
        ModulationSpec {
            e1: Drive {
                depth: 0.1,
                tones: vec![
                    Tone {
                        freq: 2.0,
                        weight: 10.0 / 17.0,
                        phase: 0.0,
                    },
                    Tone {
                        freq: 3.0,
                        weight: 7.0 / 17.0,
                        phase: PI,
                    },
                ],
            },
            ..Default::default()
        }
    }

    #[test]
    fn static_target_returns_bare_exactly() {
        let spec = ModulationSpec::default();
        assert_eq!(spec.value(Target::G0, 0.06, 123.456), 0.06);
        assert!(spec.is_static());
    }

    #[test]
    fn single_tone_values() {
        let mut spec = ModulationSpec::default();
        spec.e1 = Drive::single(0.074, 1.5, 0.0);
        spec.validate().unwrap();
        // f(0) = 0
        assert_eq!(spec.value(Target::E1, 1.48, 0.0), 1.48);
        // eta t = pi/2 -> bare + depth
        let t = PI / 2.0 / 1.5;
        assert!((spec.value(Target::E1, 1.48, t) - (1.48 + 0.074)).abs() < 1e-12);
    }

    #[test]
    fn two_tone_opposed_phases() {
        // both tones at eta^(j) t = pi/2: f = 10/17 - 7/17 = 3/17
        let spec = two_tone_spec();
        spec.validate().unwrap();
        let mut spec = spec;
        // choose frequencies so that both hit pi/2 at t = 1
        spec.e1.tones[0].freq = PI / 2.0;
        spec.e1.tones[1].freq = PI / 2.0 + 2.0 * PI;
        let got = spec.value(Target::E1, 1.0, 1.0);
        let want = 1.0 + 0.1 * (3.0 / 17.0);
        assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
    }

    #[test]
    fn single_tone_periodicity() {
        let mut spec = ModulationSpec::default();
        spec.e1 = Drive::single(0.05, 1.7, 0.3);
        let period = 2.0 * PI / 1.7;
        for i in 0..20 {
            let t = 0.37 * i as f64;
            let a = spec.offset(Target::E1, t);
            let b = spec.offset(Target::E1, t + period);
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_normalization_enforced() {
        let mut spec = ModulationSpec::default();
        spec.e1 = Drive {
            depth: 0.1,
            tones: vec![Tone {
                freq: 1.0,
                weight: 0.5,
                phase: 0.0,
            }],
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn unknown_target_string_rejected() {
        assert!("E3".parse::<Target>().is_err());
        assert!("G1".parse::<Target>().is_ok());
    }

    #[test]
    fn merged_tones_align_targets() {
        let mut spec = two_tone_spec();
        spec.e2 = Drive {
            depth: 0.05,
            tones: vec![Tone {
                freq: 3.0,
                weight: 1.0,
                phase: 0.5,
            }],
        };
        let merged = spec.merged_tones();
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.freqs, vec![2.0, 3.0]);
        assert!(merged.component(Target::E2, 0).is_none());
        assert_eq!(merged.component(Target::E2, 1), Some((1.0, 0.5)));
        assert_eq!(merged.component(Target::E1, 0), Some((10.0 / 17.0, 0.0)));
    }
}
