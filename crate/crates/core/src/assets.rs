//! Battery and EV state models: SoC dynamics, rate limits, and the EV
//! departure-deadline charging floor.
//!
//! All state transitions are pure functions over value-like types, so states
//! can be copied freely between threads and scenario runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance (in SoC percent) allowed past a bound before a step is rejected.
/// Callers that pre-clamp through [`feasible_battery_range`] stay well inside it.
pub const SOC_BOUNDS_TOL_PCT: f64 = 1e-9;

/// Slack added to the EV energy need (kWh) so that rounding in long
/// floor-following schedules cannot land a hair below the target.
const EV_NEED_UPLIFT_KWH: f64 = 1e-9;

/// Battery nameplate parameters.
///
/// Charge and discharge share one symmetric rate cap `p_max_kw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub capacity_kwh: f64,
    pub p_max_kw: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
    pub soc_min_pct: f64,
    pub soc_max_pct: f64,
}

impl BatterySpec {
    pub fn new(
        capacity_kwh: f64,
        p_max_kw: f64,
        eta_ch: f64,
        eta_dis: f64,
        soc_min_pct: f64,
        soc_max_pct: f64,
    ) -> Result<Self> {
        if !(capacity_kwh.is_finite() && capacity_kwh > 0.0) {
            return Err(Error::Parameter {
                name: "capacity_kwh",
                reason: format!("must be positive, got {capacity_kwh}"),
            });
        }
        if !(p_max_kw.is_finite() && p_max_kw > 0.0) {
            return Err(Error::Parameter {
                name: "p_max_kw",
                reason: format!("must be positive, got {p_max_kw}"),
            });
        }
        for (name, eta) in [("eta_ch", eta_ch), ("eta_dis", eta_dis)] {
            if !(eta.is_finite() && eta > 0.0 && eta <= 1.0) {
                return Err(Error::Parameter {
                    name,
                    reason: format!("must be in (0, 1], got {eta}"),
                });
            }
        }
        if !(0.0..=100.0).contains(&soc_min_pct)
            || !(0.0..=100.0).contains(&soc_max_pct)
            || soc_min_pct >= soc_max_pct
        {
            return Err(Error::Parameter {
                name: "soc_min_pct/soc_max_pct",
                reason: format!("need 0 <= min < max <= 100, got [{soc_min_pct}, {soc_max_pct}]"),
            });
        }
        Ok(Self {
            capacity_kwh,
            p_max_kw,
            eta_ch,
            eta_dis,
            soc_min_pct,
            soc_max_pct,
        })
    }

    /// Builds a state after checking the SoC against this spec's bounds.
    pub fn initial_state(&self, soc_pct: f64) -> Result<BatteryState> {
        if soc_pct < self.soc_min_pct - SOC_BOUNDS_TOL_PCT {
            return Err(Error::SocBounds {
                bound: "minimum",
                soc_pct,
                limit_pct: self.soc_min_pct,
            });
        }
        if soc_pct > self.soc_max_pct + SOC_BOUNDS_TOL_PCT {
            return Err(Error::SocBounds {
                bound: "maximum",
                soc_pct,
                limit_pct: self.soc_max_pct,
            });
        }
        Ok(BatteryState {
            soc_pct: soc_pct.clamp(self.soc_min_pct, self.soc_max_pct),
        })
    }
}

impl Default for BatterySpec {
    /// Case-study battery: 40 kWh at 10 kW. Efficiencies and SoC bounds are
    /// project defaults, not measured values.
    fn default() -> Self {
        Self {
            capacity_kwh: 40.0,
            p_max_kw: 10.0,
            eta_ch: 0.9,
            eta_dis: 0.9,
            soc_min_pct: 10.0,
            soc_max_pct: 90.0,
        }
    }
}

/// Battery state of charge, percent of capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc_pct: f64,
}

/// Advances the battery one step.
///
/// SoC moves by `(p_ch * eta_ch - p_dis / eta_dis) * (dt/60) * (100/capacity)`.
/// Charging and discharging in the same step is rejected, as is any step whose
/// resulting SoC would leave the configured band; callers bound their request
/// through [`feasible_battery_range`] first.
pub fn battery_step(
    state: BatteryState,
    spec: &BatterySpec,
    p_ch_kw: f64,
    p_dis_kw: f64,
    dt_minutes: u32,
) -> Result<BatteryState> {
    if dt_minutes == 0 {
        return Err(Error::Parameter {
            name: "dt_minutes",
            reason: "must be positive".into(),
        });
    }
    if p_ch_kw < 0.0 || p_dis_kw < 0.0 {
        return Err(Error::Contract(format!(
            "battery powers must be nonnegative (p_ch={p_ch_kw}, p_dis={p_dis_kw})"
        )));
    }
    if p_ch_kw > 0.0 && p_dis_kw > 0.0 {
        return Err(Error::Contract(format!(
            "battery cannot charge and discharge in the same step (p_ch={p_ch_kw}, p_dis={p_dis_kw})"
        )));
    }
    let rate_tol = 1e-9;
    if p_ch_kw > spec.p_max_kw + rate_tol || p_dis_kw > spec.p_max_kw + rate_tol {
        return Err(Error::Contract(format!(
            "battery rate exceeds cap {} kW (p_ch={p_ch_kw}, p_dis={p_dis_kw})",
            spec.p_max_kw
        )));
    }

    let dt_hours = f64::from(dt_minutes) / 60.0;
    let delta_pct =
        (p_ch_kw * spec.eta_ch - p_dis_kw / spec.eta_dis) * dt_hours * 100.0 / spec.capacity_kwh;
    let soc_pct = state.soc_pct + delta_pct;
    if soc_pct > spec.soc_max_pct + SOC_BOUNDS_TOL_PCT {
        return Err(Error::SocBounds {
            bound: "maximum",
            soc_pct,
            limit_pct: spec.soc_max_pct,
        });
    }
    if soc_pct < spec.soc_min_pct - SOC_BOUNDS_TOL_PCT {
        return Err(Error::SocBounds {
            bound: "minimum",
            soc_pct,
            limit_pct: spec.soc_min_pct,
        });
    }
    Ok(BatteryState {
        soc_pct: soc_pct.clamp(spec.soc_min_pct, spec.soc_max_pct),
    })
}

/// Closed interval `[b_min, b_max]` of net battery injection
/// `b = p_dis - p_ch` feasible this step, honoring both the rate cap and the
/// SoC band after [`battery_step`]. Always contains zero.
pub fn feasible_battery_range(
    state: BatteryState,
    spec: &BatterySpec,
    dt_minutes: u32,
) -> (f64, f64) {
    let dt_hours = f64::from(dt_minutes.max(1)) / 60.0;
    let dis_headroom_kwh = (state.soc_pct - spec.soc_min_pct).max(0.0) / 100.0 * spec.capacity_kwh;
    let ch_headroom_kwh = (spec.soc_max_pct - state.soc_pct).max(0.0) / 100.0 * spec.capacity_kwh;
    // Discharging draws p/eta_dis from storage; charging banks p*eta_ch.
    let dis_cap_kw = dis_headroom_kwh * spec.eta_dis / dt_hours;
    let ch_cap_kw = ch_headroom_kwh / (spec.eta_ch * dt_hours);
    (
        -spec.p_max_kw.min(ch_cap_kw),
        spec.p_max_kw.min(dis_cap_kw),
    )
}

/// One vehicle's plug-in interval with its charging constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvSession {
    pub arrival_min: u32,
    pub departure_min: u32,
    pub capacity_kwh: f64,
    pub soc_init_pct: f64,
    pub soc_target_pct: f64,
    pub p_max_kw: f64,
    pub eta_ch: f64,
    /// Current SoC; equals `soc_init_pct` at construction.
    pub soc_pct: f64,
}

/// Default departure-deadline target, percent.
pub const DEFAULT_EV_TARGET_PCT: f64 = 90.0;

impl EvSession {
    pub fn new(
        arrival_min: u32,
        departure_min: u32,
        capacity_kwh: f64,
        soc_init_pct: f64,
        p_max_kw: f64,
        eta_ch: f64,
    ) -> Result<Self> {
        Self::with_target(
            arrival_min,
            departure_min,
            capacity_kwh,
            soc_init_pct,
            DEFAULT_EV_TARGET_PCT,
            p_max_kw,
            eta_ch,
        )
    }

    pub fn with_target(
        arrival_min: u32,
        departure_min: u32,
        capacity_kwh: f64,
        soc_init_pct: f64,
        soc_target_pct: f64,
        p_max_kw: f64,
        eta_ch: f64,
    ) -> Result<Self> {
        if arrival_min >= departure_min {
            return Err(Error::Parameter {
                name: "arrival_min/departure_min",
                reason: format!("arrival {arrival_min} must precede departure {departure_min}"),
            });
        }
        if !(capacity_kwh.is_finite() && capacity_kwh > 0.0) {
            return Err(Error::Parameter {
                name: "capacity_kwh",
                reason: format!("must be positive, got {capacity_kwh}"),
            });
        }
        if !(p_max_kw.is_finite() && p_max_kw > 0.0) {
            return Err(Error::Parameter {
                name: "p_max_kw",
                reason: format!("must be positive, got {p_max_kw}"),
            });
        }
        if !(eta_ch.is_finite() && eta_ch > 0.0 && eta_ch <= 1.0) {
            return Err(Error::Parameter {
                name: "eta_ch",
                reason: format!("must be in (0, 1], got {eta_ch}"),
            });
        }
        if !(0.0 <= soc_init_pct && soc_init_pct <= soc_target_pct && soc_target_pct <= 100.0) {
            return Err(Error::Parameter {
                name: "soc_init_pct/soc_target_pct",
                reason: format!(
                    "need 0 <= init <= target <= 100, got init {soc_init_pct}, target {soc_target_pct}"
                ),
            });
        }
        let session = Self {
            arrival_min,
            departure_min,
            capacity_kwh,
            soc_init_pct,
            soc_target_pct,
            p_max_kw,
            eta_ch,
            soc_pct: soc_init_pct,
        };
        // Reaching the target by departure must be possible at full rate.
        let window_h = f64::from(departure_min - arrival_min) / 60.0;
        let max_gain_pct = p_max_kw * eta_ch * window_h * 100.0 / capacity_kwh;
        if soc_init_pct + max_gain_pct < soc_target_pct - 1e-9 {
            return Err(Error::EvInfeasible {
                arrival_min,
                departure_min,
                reason: format!(
                    "target {soc_target_pct}% unreachable: init {soc_init_pct}% + max gain {max_gain_pct:.3}%"
                ),
            });
        }
        Ok(session)
    }

    /// Whether the vehicle is connected during the step starting at `now_min`.
    pub fn is_active(&self, now_min: u32) -> bool {
        self.arrival_min <= now_min && now_min < self.departure_min
    }

    /// Largest useful charging rate this step: the station cap, reduced when
    /// less than a full step of energy fits below 100% SoC.
    pub fn max_rate_kw(&self, dt_minutes: u32) -> f64 {
        let dt_hours = f64::from(dt_minutes.max(1)) / 60.0;
        let headroom_kwh = (100.0 - self.soc_pct).max(0.0) / 100.0 * self.capacity_kwh;
        let fill_rate_kw = headroom_kwh / (self.eta_ch * dt_hours);
        self.p_max_kw.min(fill_rate_kw)
    }

    /// Percent still missing to the departure target.
    fn deficit_pct(&self) -> f64 {
        (self.soc_target_pct - self.soc_pct).max(0.0)
    }
}

/// Advances one EV session by one charging step. SoC saturates at 100%.
pub fn ev_step(session: &EvSession, p_ev_kw: f64, dt_minutes: u32) -> Result<EvSession> {
    if p_ev_kw < 0.0 {
        return Err(Error::Contract(format!(
            "ev charging rate must be nonnegative (no vehicle-to-grid), got {p_ev_kw}"
        )));
    }
    if p_ev_kw > session.p_max_kw + 1e-9 {
        return Err(Error::Contract(format!(
            "ev rate {p_ev_kw} kW exceeds station cap {} kW",
            session.p_max_kw
        )));
    }
    let dt_hours = f64::from(dt_minutes.max(1)) / 60.0;
    let delta_pct = p_ev_kw * session.eta_ch * dt_hours * 100.0 / session.capacity_kwh;
    let mut next = session.clone();
    next.soc_pct = (session.soc_pct + delta_pct).min(100.0);
    Ok(next)
}

/// Smallest charging rate this step that keeps the departure target reachable
/// assuming full rate afterwards. Zero when there is slack; never above the
/// station cap.
pub fn ev_min_rate(session: &EvSession, now_min: u32, dt_minutes: u32) -> Result<f64> {
    if !session.is_active(now_min) {
        return Err(Error::Contract(format!(
            "session (arrival {}, departure {}) not active at minute {now_min}",
            session.arrival_min, session.departure_min
        )));
    }
    let deficit_pct = session.deficit_pct();
    if deficit_pct <= 0.0 {
        return Ok(0.0);
    }
    let need_kwh = deficit_pct / 100.0 * session.capacity_kwh / session.eta_ch + EV_NEED_UPLIFT_KWH;
    let dt_eff_min = dt_minutes.min(session.departure_min - now_min);
    let dt_hours = f64::from(dt_eff_min.max(1)) / 60.0;
    let later_hours = f64::from(session.departure_min - now_min - dt_eff_min) / 60.0;
    let required_kw = (need_kwh - session.p_max_kw * later_hours) / dt_hours;
    if required_kw > session.p_max_kw + 1e-6 {
        return Err(Error::EvInfeasible {
            arrival_min: session.arrival_min,
            departure_min: session.departure_min,
            reason: format!(
                "needs {required_kw:.3} kW this step at minute {now_min}, cap is {} kW",
                session.p_max_kw
            ),
        });
    }
    Ok(required_kw.clamp(0.0, session.p_max_kw))
}

/// Reads EV sessions from a CSV with columns
/// `arrival_min, departure_min, capacity_kwh, soc_init_pct, p_max_kw, eta_ch`.
pub fn load_sessions_csv(path: &Path) -> Result<Vec<EvSession>> {
    let display = path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io {
        path: display.clone(),
        source: std::io::Error::other(e),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Io {
            path: display.clone(),
            source: std::io::Error::other(e),
        })?
        .clone();
    let col = |name: &str| -> Result<usize> {
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
    let cols = [
        col("arrival_min")?,
        col("departure_min")?,
        col("capacity_kwh")?,
        col("soc_init_pct")?,
        col("p_max_kw")?,
        col("eta_ch")?,
    ];
    let names = [
        "arrival_min",
        "departure_min",
        "capacity_kwh",
        "soc_init_pct",
        "p_max_kw",
        "eta_ch",
    ];

    let mut sessions = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Ingestion {
            path: display.clone(),
            row,
            column: "*".into(),
            reason: e.to_string(),
        })?;
        let mut fields = [0.0_f64; 6];
        for (slot, (&idx, name)) in fields.iter_mut().zip(cols.iter().zip(names)) {
            let raw = record.get(idx).ok_or_else(|| Error::Ingestion {
                path: display.clone(),
                row,
                column: name.to_string(),
                reason: "missing value".into(),
            })?;
            *slot = raw.trim().parse::<f64>().map_err(|e| Error::Ingestion {
                path: display.clone(),
                row,
                column: name.to_string(),
                reason: format!("unparsable number `{raw}`: {e}"),
            })?;
        }
        sessions.push(EvSession::new(
            fields[0] as u32,
            fields[1] as u32,
            fields[2],
            fields[3],
            fields[4],
            fields[5],
        )?);
    }
    Ok(sessions)
}

/// Writes sessions in the same column layout accepted by [`load_sessions_csv`].
pub fn write_sessions_csv(sessions: &[EvSession], path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::from("arrival_min,departure_min,capacity_kwh,soc_init_pct,p_max_kw,eta_ch\n");
    for s in sessions {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6}\n",
            s.arrival_min, s.departure_min, s.capacity_kwh, s.soc_init_pct, s.p_max_kw, s.eta_ch
        ));
    }
    std::fs::write(path, out).map_err(|source| Error::Io {
        path: display,
        source,
    })
}
