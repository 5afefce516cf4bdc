//! Grids over detuning, drive frequency, drive strength or thermal
//! occupation, generalizing the rate curves to arbitrary axes.
//!
//! Each grid point reports the candidate transitions' resonance frequencies,
//! rates and population differences plus the validity flags; points that
//! violate the regime preconditions are flagged, not dropped.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::dressed::Regime;
use crate::error::{AdceError, Result};
use super::output::{fmt_float, write_csv, write_gnuplot, ResultBundle};
use super::scenarios::{regime_point, ModTemplate, PointOverrides};
use super::Resolved;

struct GridPoint {
    delta1: f64,
    eta: Option<f64>,
    epsilon_scale: f64,
    nbar: f64,
    coords: Vec<f64>,
}

pub fn run_sweep(resolved: &Resolved, out_dir: &Path) -> Result<ResultBundle> {
    let sweep = resolved
        .sweep
        .as_ref()
        .ok_or_else(|| AdceError::Config("sweep requires a sweep section".into()))?;
    let regime = resolved.regime_tag()?;
    let regime = if regime == Regime::Numeric {
        Regime::DoubleResonant
    } else {
        regime
    };
    let cands = super::scenarios::candidates(regime);

    // build the grid in row-major order (first axis outer)
    let axes = &sweep.axes;
    let mut points = Vec::new();
    let outer = &axes[0];
    let inner = axes.get(1);
    for &a in &outer.values {
        let inner_values: &[f64] = inner.map(|ax| ax.values.as_slice()).unwrap_or(&[f64::NAN]);
        for &b in inner_values {
            let mut point = GridPoint {
                delta1: resolved.params.delta1(),
                eta: None,
                epsilon_scale: 1.0,
                nbar: resolved.nbar,
                coords: if inner.is_some() { vec![a, b] } else { vec![a] },
            };
            for (axis, value) in [(Some(outer), a), (inner, b)] {
                let Some(axis) = axis else { continue };
                match axis.param.as_str() {
                    "delta1" => point.delta1 = value,
                    "eta" => point.eta = Some(value),
                    "epsilon_scale" => point.epsilon_scale = value,
                    "nbar" => point.nbar = value,
                    _ => unreachable!("validated at resolve time"),
                }
            }
            points.push(point);
        }
    }

    let mut header: Vec<String> = axes
        .iter()
        .map(|ax| {
            let unit = match ax.param.as_str() {
                "delta1" | "eta" => "[omega0]",
                _ => "",
            };
            format!("{}{unit}", ax.param)
        })
        .collect();
    for (t, s) in cands.iter() {
        header.push(format!("eta_res({t};{s})[omega0]"));
        header.push(format!("theta_abs({t};{s})[omega0]"));
        header.push(format!("t_half({t};{s})[1/G00]"));
        header.push(format!("pop_diff({t};{s})"));
    }
    header.push("valid_regime".into());
    header.push("constraints_pass".into());
    header.push("tone_forced".into());

    // evaluate points in a worker pool; rows assembled in grid order
    let results: Vec<Result<Option<super::scenarios::RegimePoint>>> = points
        .par_iter()
        .map(|p| {
            let params =
                super::scenarios::regime_params_pub(&resolved.params, regime, p.delta1);
            let overrides = PointOverrides {
                eta: p.eta,
                epsilon_scale: p.epsilon_scale,
            };
            match regime_point(
                &params,
                regime,
                resolved.m_target,
                &ModTemplate::E1_ONLY,
                &overrides,
                p.nbar,
                cands,
                true,
            ) {
                Ok(point) => Ok(Some(point)),
                Err(AdceError::RegimeViolation { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(points.len());
    for (p, res) in points.iter().zip(results) {
        let mut row: Vec<String> = p.coords.iter().map(|v| fmt_float(*v)).collect();
        match res? {
            Some(point) => {
                for (_, _, v) in &point.candidates {
                    match v {
                        Some(v) => {
                            row.push(fmt_float(v.eta));
                            row.push(fmt_float(v.theta.norm()));
                            row.push(fmt_float(
                                PI / (2.0 * v.theta.norm()) * resolved.params.g00,
                            ));
                            row.push(fmt_float(v.pop_diff));
                        }
                        None => {
                            for _ in 0..4 {
                                row.push("nan".into());
                            }
                        }
                    }
                }
                row.push("1".into());
                row.push(match point.constraints_pass {
                    Some(true) => "1".into(),
                    Some(false) => "0".into(),
                    None => "nan".into(),
                });
                row.push(if point.forced_fast { "1" } else { "0" }.into());
            }
            None => {
                for _ in cands.iter() {
                    for _ in 0..4 {
                        row.push("nan".into());
                    }
                }
                row.push("0".into());
                row.push("nan".into());
                row.push("nan".into());
            }
        }
        rows.push(row);
    }

    let csv = out_dir.join("sweep.csv");
    write_csv(&csv, &header, rows)?;
    let gp = out_dir.join("sweep.gp");
    write_gnuplot(&gp, "sweep.csv", "Parameter sweep", &header)?;
    Ok(ResultBundle {
        files: vec![csv, gp],
        metadata: serde_json::json!({
            "regime": regime.to_string(),
            "axes": axes,
            "points": points.len(),
        }),
    })
}
