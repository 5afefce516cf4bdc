//! User-facing experiment layer: configuration documents, preset scenarios,
//! parameter sweeps and file emission.
//!
//! One JSON document describes one reproducible experiment. Every field is
//! optional except `scenario`; omitted fields take the scenario's reference
//! defaults (couplings `G00 = 0.06`, `G01 = 1.2 G00`, detuning
//! `delta1 = -8 G00`, thermal mean `nbar = 1.5`, target subspace `m = 4`).
//! The fully resolved configuration is echoed into the metadata JSON, so a
//! run can be repeated bit-identically from its own output.
//!
//! Times in configuration files and CSV outputs are in units of `1/G00`;
//! frequencies and energies are in units of the cavity frequency.

pub mod output;
pub mod scenarios;
pub mod sweep;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dressed::Regime;
use crate::error::{AdceError, Result};
use crate::exact::Frame;
use crate::modulation::ModulationSpec;
use crate::params::SystemParams;
use output::ResultBundle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Fig1,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig4,
    Rates,
    Dressed,
    Simulate,
    Sweep,
}

pub const SCENARIOS: [Scenario; 11] = [
    Scenario::Fig1,
    Scenario::Fig2a,
    Scenario::Fig2b,
    Scenario::Fig3a,
    Scenario::Fig3b,
    Scenario::Fig3c,
    Scenario::Fig4,
    Scenario::Rates,
    Scenario::Dressed,
    Scenario::Simulate,
    Scenario::Sweep,
];

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::Fig1 => "fig1",
            Scenario::Fig2a => "fig2a",
            Scenario::Fig2b => "fig2b",
            Scenario::Fig3a => "fig3a",
            Scenario::Fig3b => "fig3b",
            Scenario::Fig3c => "fig3c",
            Scenario::Fig4 => "fig4",
            Scenario::Rates => "rates",
            Scenario::Dressed => "dressed",
            Scenario::Simulate => "simulate",
            Scenario::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

impl FromStr for Scenario {
    type Err = AdceError;

    fn from_str(s: &str) -> Result<Self> {
        SCENARIOS
            .iter()
            .find(|sc| sc.to_string() == s.to_lowercase())
            .copied()
            .ok_or_else(|| {
                let valid: Vec<String> = SCENARIOS.iter().map(|s| s.to_string()).collect();
                AdceError::Config(format!(
                    "unknown scenario {s:?}; valid scenarios: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Partial physical parameters, omega0 units.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub g00: Option<f64>,
    pub g01: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
}

/// Partial numerical controls; times in 1/G00.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub n_max: Option<usize>,
    pub tail_tol: Option<f64>,
    pub t_end: Option<f64>,
    pub dt_out: Option<f64>,
    pub frame: Option<String>,
    pub norm_tol: Option<f64>,
    pub leak_tol: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// One of `delta1`, `eta`, `epsilon_scale`, `nbar`.
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<SweepAxis>,
}

/// One experiment as read from a configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub scenario: String,
    #[serde(default)]
    pub regime: Option<String>,
    #[serde(default)]
    pub params: Option<ParamsConfig>,
    #[serde(default)]
    pub nbar: Option<f64>,
    #[serde(default)]
    pub m_target: Option<usize>,
    #[serde(default)]
    pub modulation: Option<ModulationSpec>,
    #[serde(default)]
    pub numerics: Option<NumericsConfig>,
    /// Dressed states to record, e.g. `[[4, "+D"], [2, "-D"]]`.
    #[serde(default)]
    pub track: Option<Vec<(usize, String)>>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

fn schema_version_default() -> u32 {
    1
}

impl ExperimentConfig {
    pub fn bare(scenario: Scenario) -> Self {
        ExperimentConfig {
            schema_version: 1,
            scenario: scenario.to_string(),
            regime: None,
            params: None,
            nbar: None,
            m_target: None,
            modulation: None,
            numerics: None,
            track: None,
            sweep: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Fully resolved experiment: every value concrete, serialized into the run
/// metadata for bit-identical re-runs.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub regime: String,
    pub params: SystemParams,
    pub nbar: f64,
    pub m_target: usize,
    /// Concrete drives, including scenario-computed resonant tones.
    pub modulation: ModulationSpec,
    pub numerics: ResolvedNumerics,
    pub track: Vec<(usize, String)>,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedNumerics {
    pub n_max: Option<usize>,
    pub tail_tol: f64,
    /// Simulated span, units 1/G00 (dynamics scenarios only).
    pub t_end: f64,
    pub dt_out: f64,
    pub frame: String,
    pub norm_tol: f64,
    pub leak_tol: f64,
}

impl Resolved {
    pub fn frame(&self) -> Frame {
        if self.numerics.frame == "lab" {
            Frame::Lab
        } else {
            Frame::Rotating
        }
    }

    pub fn regime_tag(&self) -> Result<Regime> {
        self.regime.parse()
    }
}

/// Scenario defaults for `(g01, delta2)` given `g00` and `delta1`.
fn regime_defaults(regime: Regime, g00: f64, delta1: f64) -> (f64, f64) {
    let dsym = if delta1 >= 0.0 { 1.0 } else { -1.0 };
    match regime {
        Regime::TwoLevel => (0.0, -delta1),
        Regime::DoubleResonant | Regime::Numeric => (1.2 * g00, -delta1),
        Regime::Dispersive => (1.2 * g00, 6.0 * g00 * dsym),
        Regime::Mixed => (1.2 * g00, 0.0),
    }
}

/// Fill every omitted field with the scenario defaults and compute the
/// resonant drive tones where the scenario prescribes them.
pub fn resolve(config: &ExperimentConfig) -> Result<Resolved> {
    let scenario: Scenario = config.scenario.parse()?;
    let regime: Regime = match (&config.regime, scenario) {
        (Some(r), _) => r.parse()?,
        (None, Scenario::Fig3a) => Regime::TwoLevel,
        (None, _) => Regime::DoubleResonant,
    };

    let pc = config.params.clone().unwrap_or_default();
    let g00 = pc.g00.unwrap_or(0.06);
    let delta1 = pc.delta1.unwrap_or(-8.0 * g00);
    let (g01_default, delta2_default) = regime_defaults(regime, g00, delta1);
    let g01 = pc.g01.unwrap_or(g01_default);
    let delta2 = pc.delta2.unwrap_or(delta2_default);
    let params = SystemParams::from_detunings(g00, g01, delta1, delta2);
    params.validate()?;

    let nbar = config.nbar.unwrap_or(1.5);
    let m_target = config.m_target.unwrap_or(4);
    if m_target < 2 {
        return Err(AdceError::Config("m_target must be at least 2".into()));
    }

    let nc = config.numerics.clone().unwrap_or_default();
    let mut numerics = ResolvedNumerics {
        n_max: nc.n_max,
        tail_tol: nc.tail_tol.unwrap_or(1e-3),
        t_end: nc.t_end.unwrap_or(0.0),
        dt_out: nc.dt_out.unwrap_or(0.0),
        frame: nc.frame.clone().unwrap_or_else(|| "rotating".into()),
        norm_tol: nc.norm_tol.unwrap_or(1e-8),
        leak_tol: nc.leak_tol.unwrap_or(1e-6),
    };
    if numerics.frame != "rotating" && numerics.frame != "lab" {
        return Err(AdceError::Config(format!(
            "frame must be \"rotating\" or \"lab\", got {:?}",
            numerics.frame
        )));
    }

    let mut modulation = config.modulation.clone().unwrap_or_default();
    modulation.validate()?;

    let mut track = config.track.clone().unwrap_or_default();

    // dynamics scenarios: fill in resonant tones, span and tracked states
    match scenario {
        Scenario::Fig3a | Scenario::Fig3b | Scenario::Fig3c | Scenario::Fig4 => {
            let prepared = scenarios::prepare_dynamics(
                scenario, &params, regime, m_target, &modulation, &numerics,
            )?;
            modulation = prepared.modulation;
            numerics.t_end = prepared.t_end_g00;
            numerics.dt_out = prepared.dt_out_g00;
            if track.is_empty() {
                track = prepared.track;
            }
        }
        Scenario::Simulate => {
            if modulation.is_static() {
                return Err(AdceError::Config(
                    "simulate requires an explicit modulation".into(),
                ));
            }
            if numerics.t_end <= 0.0 {
                return Err(AdceError::Config(
                    "simulate requires numerics.t_end (units 1/G00)".into(),
                ));
            }
            if numerics.dt_out <= 0.0 {
                numerics.dt_out = numerics.t_end / 2000.0;
            }
            if track.is_empty() {
                track = default_track(m_target);
            }
        }
        Scenario::Sweep => {
            let axes = &config
                .sweep
                .as_ref()
                .ok_or_else(|| AdceError::Config("sweep requires a sweep.axes section".into()))?
                .axes;
            if axes.is_empty() || axes.len() > 2 {
                return Err(AdceError::Config(format!(
                    "sweep supports 1 or 2 axes, got {}",
                    axes.len()
                )));
            }
            for axis in axes {
                if !["delta1", "eta", "epsilon_scale", "nbar"].contains(&axis.param.as_str()) {
                    return Err(AdceError::Config(format!(
                        "unknown sweep parameter {:?} (expected delta1, eta, epsilon_scale or nbar)",
                        axis.param
                    )));
                }
                if axis.values.is_empty() {
                    return Err(AdceError::Config(format!(
                        "sweep axis {} has no values",
                        axis.param
                    )));
                }
            }
        }
        _ => {}
    }

    Ok(Resolved {
        schema_version: config.schema_version,
        scenario,
        regime: regime.to_string(),
        params,
        nbar,
        m_target,
        modulation,
        numerics,
        track,
        sweep: config.sweep.clone(),
    })
}

pub(crate) fn default_track(m_target: usize) -> Vec<(usize, String)> {
    vec![
        (m_target, "+D".into()),
        (m_target, "0".into()),
        (m_target - 2, "-D".into()),
        (m_target - 1, "-D".into()),
    ]
}

/// Execute a resolved experiment, writing its files under `out_dir`.
pub fn run_scenario(resolved: &Resolved, out_dir: &Path) -> Result<ResultBundle> {
    std::fs::create_dir_all(out_dir)?;
    let start = std::time::Instant::now();
    let mut bundle = match resolved.scenario {
        Scenario::Fig1 => scenarios::run_fig1(resolved, out_dir)?,
        Scenario::Fig2a | Scenario::Fig2b => scenarios::run_fig2(resolved, out_dir)?,
        Scenario::Fig3a | Scenario::Fig3b | Scenario::Fig3c | Scenario::Fig4 => {
            scenarios::run_fig3(resolved, out_dir)?
        }
        Scenario::Rates => scenarios::run_rates(resolved, out_dir)?,
        Scenario::Dressed => scenarios::run_dressed(resolved, out_dir)?,
        Scenario::Simulate => scenarios::run_simulate(resolved, out_dir)?,
        Scenario::Sweep => sweep::run_sweep(resolved, out_dir)?,
    };
    let resolved_json = serde_json::to_value(resolved)?;
    let meta = serde_json::json!({
        "schema_version": resolved.schema_version,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "scenario": resolved.scenario.to_string(),
        "config": resolved_json,
        "config_sha256": output::config_hash(&serde_json::to_value(resolved)?),
        "runtime_seconds": start.elapsed().as_secs_f64(),
        "results": bundle.metadata,
    });
    let meta_path = out_dir.join(format!("{}_meta.json", resolved.scenario));
    output::write_json(&meta_path, &meta)?;
    bundle.files.push(meta_path);
    bundle.metadata = meta;
    Ok(bundle)
}
