//! Power time series: CSV ingestion, validation, resampling, and the
//! synthetic PV day generator used in place of site measurements.
//!
//! Everything here is immutable after construction and freely shareable
//! across concurrent scenario runs.

use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::assets::{BatterySpec, EvSession};
use crate::error::{Error, Result};

/// Uniformly sampled power series in kW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    start_min: i64,
    step_minutes: u32,
    values: Vec<f64>,
}

impl PowerSeries {
    /// `start_min` is the timestamp of the first sample, in minutes.
    pub fn new(start_min: i64, step_minutes: u32, values: Vec<f64>) -> Result<Self> {
        if step_minutes == 0 {
            return Err(Error::Parameter {
                name: "step_minutes",
                reason: "must be >= 1".into(),
            });
        }
        if values.is_empty() {
            return Err(Error::Parameter {
                name: "values",
                reason: "series must be non-empty".into(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter {
                name: "values",
                reason: format!("non-finite sample at index {idx}"),
            });
        }
        Ok(Self {
            start_min,
            step_minutes,
            values,
        })
    }

    pub fn start_min(&self) -> i64 {
        self.start_min
    }

    pub fn step_minutes(&self) -> u32 {
        self.step_minutes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Timestamp of sample `idx`, minutes.
    pub fn time_at(&self, idx: usize) -> i64 {
        self.start_min + idx as i64 * i64::from(self.step_minutes)
    }

    /// Errors if any sample is negative; used for PV and load inputs.
    pub fn validate_nonnegative(&self, what: &'static str) -> Result<()> {
        if let Some(idx) = self.values.iter().position(|&v| v < 0.0) {
            return Err(Error::Parameter {
                name: what,
                reason: format!("negative sample {} at index {idx}", self.values[idx]),
            });
        }
        Ok(())
    }

    /// Two series cover the same steps.
    pub fn aligned_with(&self, other: &PowerSeries) -> bool {
        self.start_min == other.start_min
            && self.step_minutes == other.step_minutes
            && self.values.len() == other.values.len()
    }
}

/// Maps logical CSV columns to the header names present in a file.
#[derive(Debug, Clone)]
pub struct CsvColumns {
    pub timestamp: String,
    pub kw: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            kw: "kw".into(),
        }
    }
}

fn parse_timestamp(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(minutes) = raw.parse::<i64>() {
        return Some(minutes);
    }
    let formats = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"];
    for fmt in formats {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc().timestamp() / 60);
        }
    }
    None
}

/// Loads a power series from a CSV file with a header row.
///
/// Timestamps may be integer minutes or ISO-8601 date-times (minute
/// resolution); they must be strictly increasing and uniformly spaced.
/// Values must be nonnegative finite kW.
pub fn load_csv(path: &Path, columns: &CsvColumns) -> Result<PowerSeries> {
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io {
            path: display.clone(),
            source: std::io::Error::other(e.to_string()),
        },
        _ => Error::Ingestion {
            path: display.clone(),
            row: 0,
            column: "*".into(),
            reason: e.to_string(),
        },
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Ingestion {
            path: display.clone(),
            row: 0,
            column: "*".into(),
            reason: e.to_string(),
        })?
        .clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Ingestion {
                path: display.clone(),
                row: 0,
                column: name.to_string(),
                reason: "column missing from header".into(),
            })
    };
    let ts_col = find(&columns.timestamp)?;
    let kw_col = find(&columns.kw)?;

    let mut timestamps: Vec<i64> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Ingestion {
            path: display.clone(),
            row,
            column: "*".into(),
            reason: e.to_string(),
        })?;
        let ts_raw = record.get(ts_col).ok_or_else(|| Error::Ingestion {
            path: display.clone(),
            row,
            column: columns.timestamp.clone(),
            reason: "missing value".into(),
        })?;
        let ts = parse_timestamp(ts_raw).ok_or_else(|| Error::Ingestion {
            path: display.clone(),
            row,
            column: columns.timestamp.clone(),
            reason: format!("unparsable timestamp `{ts_raw}`"),
        })?;
        let kw_raw = record.get(kw_col).ok_or_else(|| Error::Ingestion {
            path: display.clone(),
            row,
            column: columns.kw.clone(),
            reason: "missing value".into(),
        })?;
        let kw = kw_raw
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Ingestion {
                path: display.clone(),
                row,
                column: columns.kw.clone(),
                reason: format!("unparsable number `{kw_raw}`: {e}"),
            })?;
        if !kw.is_finite() || kw < 0.0 {
            return Err(Error::Ingestion {
                path: display.clone(),
                row,
                column: columns.kw.clone(),
                reason: format!("power must be finite and >= 0, got {kw}"),
            });
        }
        timestamps.push(ts);
        values.push(kw);
    }

    if values.is_empty() {
        return Err(Error::Data {
            what: "csv series",
            required: 1,
            actual: 0,
        });
    }
    let step = if timestamps.len() >= 2 {
        let step = timestamps[1] - timestamps[0];
        if step <= 0 {
            return Err(Error::TimestampGap {
                path: display.clone(),
                row: 1,
                expected: timestamps[0] + 1,
                found: timestamps[1],
            });
        }
        step
    } else {
        1
    };
    for (row, pair) in timestamps.windows(2).enumerate() {
        let expected = pair[0] + step;
        if pair[1] != expected {
            return Err(Error::TimestampGap {
                path: display.clone(),
                row: row + 1,
                expected,
                found: pair[1],
            });
        }
    }
    PowerSeries::new(timestamps[0], step as u32, values)
}

/// Writes a series in the same `timestamp,kw` layout read by [`load_csv`].
/// Values are printed with six decimal places.
pub fn write_csv(series: &PowerSeries, path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::from("timestamp,kw\n");
    for (idx, value) in series.values().iter().enumerate() {
        out.push_str(&format!("{},{:.6}\n", series.time_at(idx), value));
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: display,
        source,
    })
}

/// Downsamples by an integer factor; each output sample is the mean of the
/// covered input samples (the final window may be partial).
pub fn resample(series: &PowerSeries, new_step_minutes: u32) -> Result<PowerSeries> {
    if new_step_minutes == 0 || new_step_minutes % series.step_minutes() != 0 {
        return Err(Error::Parameter {
            name: "new_step_minutes",
            reason: format!(
                "{new_step_minutes} is not a positive integer multiple of step {}",
                series.step_minutes()
            ),
        });
    }
    let factor = (new_step_minutes / series.step_minutes()) as usize;
    if factor == 1 {
        return Ok(series.clone());
    }
    let values = series
        .values()
        .chunks(factor)
        .map(|chunk| chunk.iter().sum::<f64>() / chunk.len() as f64)
        .collect();
    PowerSeries::new(series.start_min(), new_step_minutes, values)
}

/// One cloud passage: the clear-sky envelope is scaled by `1 - depth` from
/// `start_min` for `duration_min` minutes, with linear edge ramps outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudEvent {
    pub start_min: u32,
    pub duration_min: u32,
    pub depth: f64,
}

impl CloudEvent {
    pub fn new(start_min: u32, duration_min: u32, depth: f64) -> Self {
        Self {
            start_min,
            duration_min,
            depth,
        }
    }

    fn end_min(&self) -> u32 {
        self.start_min + self.duration_min
    }
}

/// Shape parameters for [`synth_pv_day`].
#[derive(Debug, Clone)]
pub struct SynthPvConfig {
    pub peak_kw: f64,
    pub sunrise_min: u32,
    pub sunset_min: u32,
    /// Linear occlusion ramp on each side of an event, minutes.
    pub edge_ramp_min: u32,
    /// Relative transmittance jitter inside events; 0 disables it.
    pub jitter: f64,
}

impl Default for SynthPvConfig {
    fn default() -> Self {
        Self {
            peak_kw: 80.0,
            sunrise_min: 360,
            sunset_min: 1080,
            edge_ramp_min: 2,
            jitter: 0.15,
        }
    }
}

const MINUTES_PER_DAY: u32 = 1440;

/// Synthesizes one day (1440 one-minute samples) of PV output: a cosine
/// clear-sky envelope occluded by the given cloud events. Deterministic for a
/// given seed; the seed only drives the in-event transmittance jitter.
pub fn synth_pv_day(peak_kw: f64, events: &[CloudEvent], seed: u64) -> Result<PowerSeries> {
    let cfg = SynthPvConfig {
        peak_kw,
        ..SynthPvConfig::default()
    };
    synth_pv_day_with(&cfg, events, seed)
}

pub fn synth_pv_day_with(
    cfg: &SynthPvConfig,
    events: &[CloudEvent],
    seed: u64,
) -> Result<PowerSeries> {
    use rand::{Rng, SeedableRng};

    if !(cfg.peak_kw.is_finite() && cfg.peak_kw >= 0.0) {
        return Err(Error::Parameter {
            name: "peak_kw",
            reason: format!("must be finite and >= 0, got {}", cfg.peak_kw),
        });
    }
    if cfg.sunrise_min >= cfg.sunset_min || cfg.sunset_min > MINUTES_PER_DAY {
        return Err(Error::Parameter {
            name: "sunrise_min/sunset_min",
            reason: format!("need sunrise < sunset <= 1440, got [{}, {}]", cfg.sunrise_min, cfg.sunset_min),
        });
    }
    for event in events {
        if !(0.0..=1.0).contains(&event.depth) {
            return Err(Error::Parameter {
                name: "cloud_events",
                reason: format!("depth must be in [0, 1], got {}", event.depth),
            });
        }
        if event.duration_min == 0 || event.end_min() > MINUTES_PER_DAY {
            return Err(Error::Parameter {
                name: "cloud_events",
                reason: format!(
                    "event [{} + {} min] must lie within a 1440-minute day",
                    event.start_min, event.duration_min
                ),
            });
        }
    }
    let mut sorted: Vec<&CloudEvent> = events.iter().collect();
    sorted.sort_by_key(|e| e.start_min);
    for pair in sorted.windows(2) {
        if pair[1].start_min < pair[0].end_min() {
            return Err(Error::Parameter {
                name: "cloud_events",
                reason: format!(
                    "events starting at {} and {} overlap",
                    pair[0].start_min, pair[1].start_min
                ),
            });
        }
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noon = f64::from(cfg.sunrise_min + cfg.sunset_min) / 2.0;
    let half_span = f64::from(cfg.sunset_min - cfg.sunrise_min) / 2.0;

    let mut values = Vec::with_capacity(MINUTES_PER_DAY as usize);
    for minute in 0..MINUTES_PER_DAY {
        let envelope = if minute < cfg.sunrise_min || minute > cfg.sunset_min {
            0.0
        } else {
            let phase = (f64::from(minute) - noon) / half_span * std::f64::consts::FRAC_PI_2;
            cfg.peak_kw * phase.cos().max(0.0)
        };

        // Strongest occlusion among events covering this minute (incl. ramps).
        let mut occlusion: f64 = 0.0;
        for event in &sorted {
            let ramp = f64::from(cfg.edge_ramp_min.max(1));
            let m = f64::from(minute);
            let start = f64::from(event.start_min);
            let end = f64::from(event.end_min());
            let shape = if m < start - ramp || m > end + ramp {
                0.0
            } else if m < start {
                (m - (start - ramp)) / ramp
            } else if m <= end {
                1.0
            } else {
                ((end + ramp) - m) / ramp
            };
            occlusion = occlusion.max(event.depth * shape);
        }

        let mut transmittance = 1.0 - occlusion;
        if occlusion > 0.0 && cfg.jitter > 0.0 {
            let xi: f64 = rng.gen_range(-1.0..=1.0);
            transmittance = (transmittance * (1.0 + cfg.jitter * xi)).clamp(0.0, 1.0);
        }
        values.push((envelope * transmittance).max(0.0));
    }
    PowerSeries::new(0, 1, values)
}

/// A complete simulation input: aligned PV and load series, the flexible
/// assets, and the ramp rule.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub pv: PowerSeries,
    pub load: PowerSeries,
    pub ev_sessions: Vec<EvSession>,
    pub battery: BatterySpec,
    pub battery_initial_soc_pct: f64,
    pub ramp_limit_kw_per_step: f64,
    pub horizon_minutes: u32,
}

impl Scenario {
    pub fn new(
        pv: PowerSeries,
        load: PowerSeries,
        ev_sessions: Vec<EvSession>,
        battery: BatterySpec,
        battery_initial_soc_pct: f64,
        ramp_limit_kw_per_step: f64,
        horizon_minutes: u32,
    ) -> Result<Self> {
        if !pv.aligned_with(&load) {
            return Err(Error::Parameter {
                name: "pv/load",
                reason: format!(
                    "series must share start, step and length (pv: {} @ {} x{}, load: {} @ {} x{})",
                    pv.start_min(),
                    pv.step_minutes(),
                    pv.len(),
                    load.start_min(),
                    load.step_minutes(),
                    load.len()
                ),
            });
        }
        pv.validate_nonnegative("pv")?;
        load.validate_nonnegative("load")?;
        if !(ramp_limit_kw_per_step.is_finite() && ramp_limit_kw_per_step > 0.0) {
            return Err(Error::Parameter {
                name: "ramp_limit_kw_per_step",
                reason: format!("must be positive, got {ramp_limit_kw_per_step}"),
            });
        }
        if horizon_minutes == 0 {
            return Err(Error::Parameter {
                name: "horizon_minutes",
                reason: "must be >= 1".into(),
            });
        }
        battery.initial_state(battery_initial_soc_pct)?;
        let duration = pv.len() as u32 * pv.step_minutes();
        for session in &ev_sessions {
            if session.departure_min > duration {
                return Err(Error::Parameter {
                    name: "ev_sessions",
                    reason: format!(
                        "session departing at minute {} outlives the {duration}-minute scenario",
                        session.departure_min
                    ),
                });
            }
        }
        Ok(Self {
            pv,
            load,
            ev_sessions,
            battery,
            battery_initial_soc_pct,
            ramp_limit_kw_per_step,
            horizon_minutes,
        })
    }

    pub fn len(&self) -> usize {
        self.pv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pv.is_empty()
    }

    pub fn step_minutes(&self) -> u32 {
        self.pv.step_minutes()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write_tmp(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("series.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn load_csv_reads_minutes_back() {
        let (_dir, path) = write_tmp("timestamp,kw\n0,5.0\n1,6.0\n2,7.0\n");
        let series = load_csv(&path, &CsvColumns::default()).unwrap();
        assert_eq!(series.len(), 3);
        assert_eq!(series.step_minutes(), 1);
        assert_eq!(series.values(), &[5.0, 6.0, 7.0]);
    }

    #[test]
    fn load_csv_rejects_negative_power() {
        let (_dir, path) = write_tmp("timestamp,kw\n0,5.0\n1,-1.0\n");
        let err = load_csv(&path, &CsvColumns::default()).unwrap_err();
        match err {
            Error::Ingestion { row, .. } => assert_eq!(row, 1),
            other => panic!("expected ingestion error, got {other}"),
        }
    }

    #[test]
    fn load_csv_reports_first_gap() {
        let (_dir, path) = write_tmp("timestamp,kw\n0,1.0\n1,2.0\n3,3.0\n");
        let err = load_csv(&path, &CsvColumns::default()).unwrap_err();
        match err {
            Error::TimestampGap { row, expected, found, .. } => {
                assert_eq!(row, 2);
                assert_eq!(expected, 2);
                assert_eq!(found, 3);
            }
            other => panic!("expected gap error, got {other}"),
        }
    }

    #[test]
    fn load_csv_parses_iso_timestamps() {
        let (_dir, path) = write_tmp(
            "timestamp,kw\n2021-06-01T08:00:00,5.0\n2021-06-01T08:01:00,6.0\n",
        );
        let series = load_csv(&path, &CsvColumns::default()).unwrap();
        assert_eq!(series.step_minutes(), 1);
        assert_eq!(series.values(), &[5.0, 6.0]);
    }

    #[test]
    fn load_csv_honors_column_map() {
        let (_dir, path) = write_tmp("t,power,other\n0,5.0,x\n1,6.0,y\n");
        let columns = CsvColumns {
            timestamp: "t".into(),
            kw: "power".into(),
        };
        let series = load_csv(&path, &columns).unwrap();
        assert_eq!(series.values(), &[5.0, 6.0]);
    }

    #[test]
    fn load_csv_missing_column_names_it() {
        let (_dir, path) = write_tmp("timestamp,power\n0,5.0\n");
        let err = load_csv(&path, &CsvColumns::default()).unwrap_err();
        match err {
            Error::Ingestion { column, .. } => assert_eq!(column, "kw"),
            other => panic!("expected ingestion error, got {other}"),
        }
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let series = PowerSeries::new(0, 1, vec![0.0, 1.234567, 80.0, 12.5]).unwrap();
        write_csv(&series, &path).unwrap();
        let back = load_csv(&path, &CsvColumns::default()).unwrap();
        assert_eq!(back.len(), series.len());
        for (a, b) in back.values().iter().zip(series.values()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn resample_means_pairs() {
        let series = PowerSeries::new(0, 1, vec![2.0, 4.0, 6.0, 8.0]).unwrap();
        let out = resample(&series, 2).unwrap();
        assert_eq!(out.values(), &[3.0, 7.0]);
        assert_eq!(out.step_minutes(), 2);
    }

    #[test]
    fn resample_factor_one_is_identity() {
        let series = PowerSeries::new(0, 1, vec![2.0, 4.0, 6.0, 8.0]).unwrap();
        assert_eq!(resample(&series, 1).unwrap(), series);
    }

    #[test]
    fn resample_partial_last_window() {
        let series = PowerSeries::new(0, 1, vec![2.0, 4.0, 6.0, 8.0]).unwrap();
        let out = resample(&series, 3).unwrap();
        assert_eq!(out.values(), &[4.0, 8.0]);
    }

    #[test]
    fn resample_rejects_non_multiple() {
        let series = PowerSeries::new(0, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(resample(&series, 3), Err(Error::Parameter { .. })));
    }

    #[test]
    fn synth_clear_day_peaks_at_noon() {
        let series = synth_pv_day(80.0, &[], 1).unwrap();
        assert_eq!(series.len(), 1440);
        let max = series.values().iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - 80.0).abs() < 1e-9);
        assert_eq!(series.values()[720], 80.0);
        for (idx, &v) in series.values().iter().enumerate() {
            assert!(v >= 0.0);
            if idx < 360 || idx > 1080 {
                assert_eq!(v, 0.0, "nonzero outside daylight at minute {idx}");
            }
        }
    }

    #[test]
    fn synth_full_occlusion_zeroes_event() {
        let event = CloudEvent::new(700, 40, 1.0);
        let series = synth_pv_day(80.0, &[event], 7).unwrap();
        for minute in 700..740 {
            assert_eq!(series.values()[minute], 0.0, "minute {minute}");
        }
    }

    #[test]
    fn synth_is_deterministic() {
        let events = [CloudEvent::new(600, 30, 0.6), CloudEvent::new(700, 20, 0.9)];
        let a = synth_pv_day(80.0, &events, 99).unwrap();
        let b = synth_pv_day(80.0, &events, 99).unwrap();
        assert_eq!(a, b);
        let c = synth_pv_day(80.0, &events, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn synth_rejects_overlapping_events() {
        let events = [CloudEvent::new(600, 30, 0.6), CloudEvent::new(620, 20, 0.9)];
        let err = synth_pv_day(80.0, &events, 1).unwrap_err();
        assert!(matches!(err, Error::Parameter { .. }), "{err}");
    }

    #[test]
    fn scenario_requires_aligned_series() {
        let pv = PowerSeries::new(0, 1, vec![1.0, 2.0]).unwrap();
        let load = PowerSeries::new(0, 1, vec![1.0]).unwrap();
        let err = Scenario::new(pv, load, vec![], BatterySpec::default(), 50.0, 0.4, 15);
        assert!(matches!(err, Err(Error::Parameter { .. })));
    }

    proptest! {
        /// Resampling conserves energy up to one partial window.
        #[test]
        fn resample_energy_bound(
            values in proptest::collection::vec(0.0_f64..100.0, 1..200),
            factor in 1u32..8,
        ) {
            let series = PowerSeries::new(0, 1, values.clone()).unwrap();
            let out = resample(&series, factor).unwrap();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let max_in = values.iter().cloned().fold(0.0_f64, f64::max);
            let in_energy = mean(series.values()) * series.len() as f64;
            let out_energy = mean(out.values()) * out.len() as f64 * f64::from(factor);
            prop_assert!((in_energy - out_energy).abs() <= f64::from(factor) * max_in + 1e-9);
        }

        /// The generator never emits negative power or daylight leakage.
        #[test]
        fn synth_nonnegative_and_dark_at_night(
            seed in 0u64..1000,
            start in 400u32..900,
            dur in 1u32..120,
            depth in 0.0_f64..1.0,
        ) {
            let series = synth_pv_day(80.0, &[CloudEvent::new(start, dur, depth)], seed).unwrap();
            for (idx, &v) in series.values().iter().enumerate() {
                prop_assert!(v >= 0.0);
                if idx < 360 || idx > 1080 {
                    prop_assert!(v == 0.0, "minute {idx} = {v}");
                }
            }
        }
    }
}
