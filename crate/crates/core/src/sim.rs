//! Scenario orchestration: violation metrics, per-step traces, controller
//! comparison, and the bundled synthetic day used by the default CLI config
//! and the test suite.

use std::path::Path;
use std::time::Duration;

use crate::assets::{BatterySpec, EvSession};
use crate::control::{run, run_baseline, ControllerConfig};
use crate::error::{Error, Result};
use crate::timeseries::{synth_pv_day, CloudEvent, PowerSeries, Scenario};

/// One simulated step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// PV minus load, before any battery or EV action.
    pub raw_net_kw: f64,
    /// Reference the dispatcher tracked this step.
    pub target_kw: f64,
    pub achieved_kw: f64,
    pub batt_soc_pct: f64,
    /// Ramp excess of the achieved output versus the previous step.
    pub violation_kw: f64,
    pub ev_soc_pct: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub total_violation_kw: f64,
    pub violation_count: usize,
    pub max_violation_kw: f64,
    pub final_batt_soc_pct: f64,
    pub ev_completed: Vec<bool>,
    pub runtime: Duration,
}

/// Full outcome of one controller run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub trace: Vec<StepRecord>,
    pub summary: Summary,
}

impl ScenarioResult {
    pub(crate) fn from_trace(
        trace: Vec<StepRecord>,
        ev_completed: Vec<bool>,
        runtime: Duration,
    ) -> Self {
        let total_violation_kw = trace.iter().map(|r| r.violation_kw).sum();
        let violation_count = trace.iter().filter(|r| r.violation_kw > 0.0).count();
        let max_violation_kw = trace.iter().map(|r| r.violation_kw).fold(0.0, f64::max);
        let final_batt_soc_pct = trace.last().map_or(0.0, |r| r.batt_soc_pct);
        Self {
            trace,
            summary: Summary {
                total_violation_kw,
                violation_count,
                max_violation_kw,
                final_batt_soc_pct,
                ev_completed,
                runtime,
            },
        }
    }
}

/// Per-step ramp violations of a power trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    /// Aligned with the input; index 0 is always zero.
    pub per_step: Vec<f64>,
    pub total_kw: f64,
    pub count: usize,
    pub max_kw: f64,
}

/// Violation at step `t` is `max(0, |out[t] - out[t-1]| - limit)`.
pub fn violation(values: &[f64], ramp_limit_kw: f64) -> ViolationReport {
    let mut per_step = Vec::with_capacity(values.len());
    if !values.is_empty() {
        per_step.push(0.0);
        for pair in values.windows(2) {
            per_step.push(((pair[1] - pair[0]).abs() - ramp_limit_kw).max(0.0));
        }
    }
    let total_kw = per_step.iter().sum();
    let count = per_step.iter().filter(|&&v| v > 0.0).count();
    let max_kw = per_step.iter().cloned().fold(0.0, f64::max);
    ViolationReport {
        per_step,
        total_kw,
        count,
        max_kw,
    }
}

/// One row of a controller comparison.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub name: String,
    pub summary: Option<Summary>,
    pub error: Option<String>,
}

/// Comparison of several controllers plus the uncontrolled baseline, rows
/// sorted by controller name (baseline first alphabetically).
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

/// Runs every controller on identical copies of the scenario and tabulates
/// their summaries next to the uncontrolled baseline. A failing run becomes
/// an error row without aborting the others.
pub fn compare(scenario: &Scenario, controllers: &[ControllerConfig]) -> Result<CompareReport> {
    if controllers.is_empty() {
        return Err(Error::Parameter {
            name: "controllers",
            reason: "need at least one controller".into(),
        });
    }
    let mut rows = Vec::with_capacity(controllers.len() + 1);
    rows.push(match run_baseline(scenario) {
        Ok(result) => CompareRow {
            name: "baseline".into(),
            summary: Some(result.summary),
            error: None,
        },
        Err(e) => CompareRow {
            name: "baseline".into(),
            summary: None,
            error: Some(e.to_string()),
        },
    });
    for config in controllers {
        let name = config.mode.label().to_string();
        rows.push(match run(scenario, config) {
            Ok(result) => CompareRow {
                name,
                summary: Some(result.summary),
                error: None,
            },
            Err(e) => CompareRow {
                name,
                summary: None,
                error: Some(e.to_string()),
            },
        });
    }
    rows.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(CompareReport { rows })
}

/// Writes the per-step trace as CSV:
/// `step, raw_net_kw, target_kw, achieved_kw, batt_soc_pct, violation_kw`
/// followed by one `ev_<i>_soc_pct` column per session.
pub fn write_trace_csv(result: &ScenarioResult, path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let sessions = result.trace.first().map_or(0, |r| r.ev_soc_pct.len());
    let mut out = String::from("step,raw_net_kw,target_kw,achieved_kw,batt_soc_pct,violation_kw");
    for i in 0..sessions {
        out.push_str(&format!(",ev_{i}_soc_pct"));
    }
    out.push('\n');
    for record in &result.trace {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            record.step,
            record.raw_net_kw,
            record.target_kw,
            record.achieved_kw,
            record.batt_soc_pct,
            record.violation_kw
        ));
        for soc in &record.ev_soc_pct {
            out.push_str(&format!(",{soc:.6}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: display,
        source,
    })
}

/// Renders one summary as a `[controller.<name>]` record. Runtime is left
/// out so that fixed-seed reruns produce byte-identical files.
pub fn format_summary_record(name: &str, summary: &Summary) -> String {
    let ev_all = summary.ev_completed.iter().all(|&c| c);
    format!(
        "[controller.{name}]\n\
         total_violation_kw = {:.6}\n\
         violation_count = {}\n\
         max_violation_kw = {:.6}\n\
         final_batt_soc_pct = {:.6}\n\
         ev_all_completed = {ev_all}\n",
        summary.total_violation_kw,
        summary.violation_count,
        summary.max_violation_kw,
        summary.final_batt_soc_pct,
    )
}

/// Renders a comparison as one record per row; failed rows carry the error.
pub fn format_compare_report(report: &CompareReport) -> String {
    let mut out = String::new();
    for row in &report.rows {
        match (&row.summary, &row.error) {
            (Some(summary), _) => {
                out.push_str(&format_summary_record(&row.name, summary));
            }
            (None, Some(error)) => {
                out.push_str(&format!(
                    "[controller.{}]\nerror = {:?}\n",
                    row.name, error
                ));
            }
            (None, None) => {}
        }
        out.push('\n');
    }
    out
}

/// Comparison table as CSV.
pub fn write_compare_csv(report: &CompareReport, path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::from(
        "name,total_violation_kw,violation_count,max_violation_kw,final_batt_soc_pct,ev_all_completed,error\n",
    );
    for row in &report.rows {
        match &row.summary {
            Some(s) => out.push_str(&format!(
                "{},{:.6},{},{:.6},{:.6},{},\n",
                row.name,
                s.total_violation_kw,
                s.violation_count,
                s.max_violation_kw,
                s.final_batt_soc_pct,
                s.ev_completed.iter().all(|&c| c)
            )),
            None => out.push_str(&format!(
                "{},,,,,,{:?}\n",
                row.name,
                row.error.clone().unwrap_or_default()
            )),
        }
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: display,
        source,
    })
}

/// The bundled one-day synthetic scenario: an 80 kW PV array over a 40 kW
/// site with a volatile cloudy midday, a 40 kWh / 10 kW battery, four EV
/// sessions, and a 0.4 kW/min ramp limit (1% of max load per minute).
pub mod bundled {
    use super::*;

    pub const PV_PEAK_KW: f64 = 80.0;
    pub const MAX_LOAD_KW: f64 = 40.0;
    pub const RAMP_LIMIT_KW_PER_MIN: f64 = 0.4;
    pub const HORIZON_MIN: u32 = 15;
    pub const MA_HALF_WINDOW: usize = 10;
    pub const INPUT_WINDOW: usize = 30;

    /// Midday cloud transients for the default day.
    pub fn cloud_events() -> Vec<CloudEvent> {
        vec![
            CloudEvent::new(585, 20, 0.75),
            CloudEvent::new(622, 10, 0.9),
            CloudEvent::new(648, 35, 0.55),
            CloudEvent::new(702, 15, 0.85),
            CloudEvent::new(733, 45, 0.65),
            CloudEvent::new(793, 12, 0.9),
            CloudEvent::new(815, 30, 0.5),
            CloudEvent::new(862, 25, 0.8),
            CloudEvent::new(905, 15, 0.7),
            CloudEvent::new(941, 35, 0.6),
            CloudEvent::new(995, 20, 0.85),
        ]
    }

    /// Smooth working-day load profile, well under the 40 kW installed max.
    pub fn load_profile() -> PowerSeries {
        let values = (0..1440)
            .map(|minute| {
                let m = f64::from(minute);
                // Base load plus a working-hours hump centered mid-afternoon.
                let hump = ((m - 420.0) / 480.0 * std::f64::consts::PI).sin();
                let hump = if (420.0..=900.0).contains(&m) { hump.max(0.0) } else { 0.0 };
                10.0 + 12.0 * hump + 1.5 * (m / 180.0 * std::f64::consts::PI).sin().abs()
            })
            .collect();
        PowerSeries::new(0, 1, values).unwrap()
    }

    pub fn pv_profile(seed: u64) -> PowerSeries {
        synth_pv_day(PV_PEAK_KW, &cloud_events(), seed).unwrap()
    }

    /// The four charging-station sessions of the default day.
    pub fn ev_sessions() -> Vec<EvSession> {
        vec![
            EvSession::new(480, 840, 24.0, 30.0, 7.0, 0.9).unwrap(),
            EvSession::new(520, 900, 24.0, 25.0, 7.0, 0.9).unwrap(),
            EvSession::new(600, 960, 24.0, 40.0, 7.0, 0.9).unwrap(),
            EvSession::new(780, 1140, 24.0, 20.0, 7.0, 0.9).unwrap(),
        ]
    }

    pub fn battery() -> BatterySpec {
        BatterySpec::default()
    }

    pub fn scenario(seed: u64) -> Scenario {
        Scenario::new(
            pv_profile(seed),
            load_profile(),
            ev_sessions(),
            battery(),
            50.0,
            RAMP_LIMIT_KW_PER_MIN,
            HORIZON_MIN,
        )
        .unwrap()
    }

    /// Multi-day synthetic history for forecaster training: the same site
    /// under different cloud patterns. Does not include the default day's
    /// event sequence, so evaluation data stays out of training.
    pub fn training_history(days: usize, seed: u64) -> (PowerSeries, PowerSeries) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut pv_values = Vec::with_capacity(days * 1440);
        let mut load_values = Vec::with_capacity(days * 1440);
        let base_load = load_profile();
        for day in 0..days {
            let mut events = Vec::new();
            let mut cursor = 480u32;
            let count = rng.gen_range(4..=10);
            for _ in 0..count {
                cursor += rng.gen_range(15..=70);
                let duration = rng.gen_range(8..=45);
                if cursor + duration >= 1060 {
                    break;
                }
                events.push(CloudEvent::new(cursor, duration, rng.gen_range(0.3..=0.95)));
                cursor += duration;
            }
            let day_seed = seed.wrapping_add(day as u64 + 1);
            let pv = synth_pv_day(PV_PEAK_KW, &events, day_seed).unwrap();
            pv_values.extend_from_slice(pv.values());
            let scale: f64 = rng.gen_range(0.9..=1.1);
            load_values.extend(base_load.values().iter().map(|v| v * scale));
        }
        (
            PowerSeries::new(0, 1, pv_values).unwrap(),
            PowerSeries::new(0, 1, load_values).unwrap(),
        )
    }
}
