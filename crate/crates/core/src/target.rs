//! Reference power curves the dispatcher tracks: the real-time clamp rule,
//! the centered moving-average curve, the variance-damped curve, ramp
//! clamping, and moving-average window tuning.

use crate::control::{run_predictive, ControllerConfig, ControllerMode};
use crate::error::{Error, Result};
use crate::timeseries::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Realtime,
    MovingAverage,
    Variance,
}

/// A reference trajectory aligned to scenario steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetCurve {
    pub values: Vec<f64>,
    pub kind: TargetKind,
}

/// Real-time reference rule: the raw net power, clamped to within one ramp
/// step of the previous output. Equal to the raw value whenever that would
/// not violate the limit.
pub fn realtime_reference(prev_output_kw: f64, raw_net_kw: f64, ramp_limit_kw: f64) -> f64 {
    debug_assert!(ramp_limit_kw > 0.0);
    raw_net_kw.clamp(prev_output_kw - ramp_limit_kw, prev_output_kw + ramp_limit_kw)
}

/// Centered moving-average target at the current step: the mean of the
/// `2n + 1` net-power values from `n` steps back to `n` steps ahead, the
/// future half taken from forecasts.
///
/// `net_past` holds observed values up to (excluding) the current one; only
/// its tail is read. Near the series start the window shrinks symmetrically
/// to `2k + 1` with `k = min(n, available past)`.
pub fn moving_average_curve(
    net_past: &[f64],
    net_now: f64,
    net_forecast: &[f64],
    n: usize,
) -> Result<f64> {
    if net_forecast.len() < n {
        return Err(Error::Parameter {
            name: "net_forecast",
            reason: format!(
                "forecast horizon {} is shorter than the half-window n = {n}",
                net_forecast.len()
            ),
        });
    }
    let k = n.min(net_past.len());
    let past = &net_past[net_past.len() - k..];
    let sum: f64 = past.iter().sum::<f64>() + net_now + net_forecast[..k].iter().sum::<f64>();
    Ok(sum / (2 * k + 1) as f64)
}

/// Damping coefficient floor below which PV is treated as absent.
const PV_SUM_EPS_KW: f64 = 1e-6;

/// Variance-damped target for step `t + h`, computed at step `t`.
///
/// The forecast PV change over the window is scaled by
/// `1 - std(pv window) / sum(pv window)` (clamped to [0, 1]); the window is
/// the current PV value plus the `h` forecast values, with population
/// variance. With no PV the target is simply `-load_now`.
pub fn variance_curve(pv_now_kw: f64, load_now_kw: f64, pv_forecast: &[f64]) -> f64 {
    if pv_forecast.is_empty() {
        return pv_now_kw - load_now_kw;
    }
    let window_len = (pv_forecast.len() + 1) as f64;
    let sum: f64 = pv_now_kw + pv_forecast.iter().sum::<f64>();
    let damping = if sum <= PV_SUM_EPS_KW {
        0.0
    } else {
        let mean = sum / window_len;
        let var = (pv_now_kw - mean).powi(2)
            + pv_forecast.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let var = var / window_len;
        (1.0 - var.sqrt() / sum).clamp(0.0, 1.0)
    };
    let pv_at_horizon = *pv_forecast.last().unwrap();
    damping * (pv_at_horizon - pv_now_kw) + pv_now_kw - load_now_kw
}

/// Forward-clamps a curve so consecutive values never differ by more than
/// the ramp limit, starting from `start_kw`. Idempotent.
pub fn clamp_to_ramp(curve: &TargetCurve, start_kw: f64, ramp_limit_kw: f64) -> TargetCurve {
    debug_assert!(ramp_limit_kw > 0.0);
    let mut prev = start_kw;
    let values = curve
        .values
        .iter()
        .map(|&v| {
            let clamped = v.clamp(prev - ramp_limit_kw, prev + ramp_limit_kw);
            prev = clamped;
            clamped
        })
        .collect();
    TargetCurve {
        values,
        kind: curve.kind,
    }
}

/// Per-candidate outcome of a window sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    /// `(n, total ramp violation in kW)` sorted by ascending `n`.
    pub rows: Vec<(usize, f64)>,
    pub best_n: usize,
}

/// Runs the full moving-average predictive simulation once per candidate
/// half-window and picks the one with the least total ramp violation,
/// breaking ties toward the smaller window.
pub fn tune_window(
    scenario: &Scenario,
    candidate_ns: &[usize],
    base_config: &ControllerConfig,
) -> Result<TuneReport> {
    if candidate_ns.is_empty() {
        return Err(Error::Parameter {
            name: "candidate_ns",
            reason: "candidate set must be non-empty".into(),
        });
    }
    let mut candidates: Vec<usize> = candidate_ns.to_vec();
    candidates.sort_unstable();
    candidates.dedup();
    for &n in &candidates {
        if n > base_config.horizon {
            return Err(Error::Parameter {
                name: "candidate_ns",
                reason: format!("n = {n} exceeds forecast horizon {}", base_config.horizon),
            });
        }
    }

    let mut rows = Vec::with_capacity(candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for &n in &candidates {
        let mut config = base_config.clone();
        config.mode = ControllerMode::PredictiveMa;
        config.n = n;
        let result = run_predictive(scenario, &config)?;
        let total = result.summary.total_violation_kw;
        rows.push((n, total));
        // Strict comparison on an ascending sweep keeps ties at the smaller n.
        if best.map_or(true, |(_, t)| total < t) {
            best = Some((n, total));
        }
    }
    Ok(TuneReport {
        rows,
        best_n: best.unwrap().0,
    })
}
