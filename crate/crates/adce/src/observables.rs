//! Sampled observable traces and small analysis utilities shared by the
//! exact and effective propagators.

use serde::Serialize;

/// One named observable trace.
#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

/// Uniformly sampled observables.
#[derive(Debug, Clone, Serialize)]
pub struct TimeSeries {
    /// Unit annotation for the time axis (e.g. "1/omega0" or "1/G00").
    pub time_unit: String,
    pub times: Vec<f64>,
    pub columns: Vec<Column>,
}

impl TimeSeries {
    pub fn new(time_unit: impl Into<String>, times: Vec<f64>) -> Self {
        TimeSeries {
            time_unit: time_unit.into(),
            times,
            columns: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.times.len(), "column length mismatch");
        self.columns.push(Column {
            name: name.into(),
            values,
        });
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    /// Rescale the time axis in place (e.g. from 1/omega0 to 1/G00).
    pub fn rescale_time(&mut self, factor: f64, unit: impl Into<String>) {
        for t in &mut self.times {
            *t *= factor;
        }
        self.time_unit = unit.into();
    }
}

/// Centered moving average with the given half-window (in samples); used to
/// strip the fast counter-rotating wiggles off a trace before locating its
/// slow extrema.
pub fn moving_average(values: &[f64], half_window: usize) -> Vec<f64> {
    if half_window == 0 {
        return values.to_vec();
    }
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half_window);
        let hi = (i + half_window).min(n - 1);
        let sum: f64 = values[lo..=hi].iter().sum();
        out.push(sum / (hi - lo + 1) as f64);
    }
    out
}

/// Locate the first local minimum of a smoothed trace, refined by a parabola
/// through the three samples around the discrete minimum. Returns `(t, v)`.
///
/// `half_window` is the smoothing half-width in samples. The first and last
/// `half_window` samples are excluded so boundary artifacts of the moving
/// average cannot masquerade as extrema.
pub fn first_minimum(times: &[f64], values: &[f64], half_window: usize) -> Option<(f64, f64)> {
    let smooth = moving_average(values, half_window);
    let n = smooth.len();
    if n < 5 {
        return None;
    }
    let lo = half_window.max(1);
    let hi = n - 1 - half_window.max(1);
    if lo + 2 >= hi {
        return None;
    }
    // residual smoothing ripple also forms shallow local minima, including on
    // descending slopes; a candidate counts only if the dip so far reaches
    // half the global depth and the trace then rises by a quarter of the
    // depth before ever going lower (valley confirmation)
    let global_min = smooth[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
    let depth = smooth[lo] - global_min;
    if depth <= 0.0 {
        return None;
    }
    let mut run_max = smooth[lo];
    for i in lo + 1..hi {
        run_max = run_max.max(smooth[i]);
        if !(smooth[i] <= smooth[i - 1] && smooth[i] <= smooth[i + 1]) {
            continue;
        }
        if run_max - smooth[i] < 0.5 * depth {
            continue;
        }
        let floor = smooth[i] - 0.05 * depth;
        let mut rise = 0.0f64;
        let mut j = i + 1;
        while j <= hi && smooth[j] >= floor {
            rise = rise.max(smooth[j] - smooth[i]);
            j += 1;
        }
        if rise < 0.25 * depth {
            continue;
        }
        // confirmed valley: walk to its true bottom (ripple can place the
        // first local minimum anywhere on a flat floor), stopping once the
        // trace has risen half a depth above the running bottom
        let mut i = i;
        let mut bottom = smooth[i];
        let mut j = i + 1;
        while j < hi && smooth[j] - bottom < 0.5 * depth {
            if smooth[j] < bottom {
                bottom = smooth[j];
                i = j;
            }
            j += 1;
        }
        let (a, b, c) = (smooth[i - 1], smooth[i], smooth[i + 1]);
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 1e-300 {
            0.5 * (a - c) / denom
        } else {
            0.0
        };
        let dt = times[i + 1] - times[i];
        let tmin = times[i] + shift.clamp(-1.0, 1.0) * dt;
        let vmin = b - 0.25 * (a - c) * shift;
        return Some((tmin, vmin));
    }
    None
}

/// Global minimum of the smoothed trace (edges excluded): the deepest point
/// of the full run, which for beating multi-channel transfers can lie past
/// the first dip.
pub fn global_minimum(times: &[f64], values: &[f64], half_window: usize) -> Option<(f64, f64)> {
    let smooth = moving_average(values, half_window);
    let n = smooth.len();
    let lo = half_window.max(1);
    if n < 5 || lo + 2 >= n - 1 - lo {
        return None;
    }
    let hi = n - 1 - lo;
    let mut imin = lo;
    for i in lo..=hi {
        if smooth[i] < smooth[imin] {
            imin = i;
        }
    }
    Some((times[imin], smooth[imin]))
}

/// Mean of the first `k` samples of a smoothed trace; the baseline against
/// which a dip amplitude is measured.
pub fn initial_baseline(values: &[f64], half_window: usize) -> f64 {
    let smooth = moving_average(values, half_window);
    let k = (2 * half_window + 1).min(smooth.len());
    smooth[..k].iter().sum::<f64>() / k as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_minimum_of_wiggly_cosine() {
        let n = 4000;
        let times: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        // slow dip at t = 10 plus fast wiggle
        let values: Vec<f64> = times
            .iter()
            .map(|&t| 1.0 - 0.1 * (1.0 - (std::f64::consts::PI * t / 10.0).cos()) / 2.0
                + 0.01 * (37.0 * t).sin())
            .collect();
        let (tmin, vmin) = first_minimum(&times, &values, 40).unwrap();
        assert!((tmin - 10.0).abs() < 1.0, "tmin = {tmin}");
        assert!((vmin - 0.9).abs() < 0.01, "vmin = {vmin}");
    }

    #[test]
    fn moving_average_preserves_constants() {
        let v = vec![2.5; 100];
        assert_eq!(moving_average(&v, 7), v);
    }

    #[test]
    fn column_round_trip() {
        let mut ts = TimeSeries::new("1/omega0", vec![0.0, 1.0, 2.0]);
        ts.push("n_ph", vec![1.0, 2.0, 3.0]);
        assert_eq!(ts.column("n_ph").unwrap(), &[1.0, 2.0, 3.0]);
        assert!(ts.column("nope").is_none());
        ts.rescale_time(0.5, "1/G00");
        assert_eq!(ts.times, vec![0.0, 0.5, 1.0]);
    }
}
