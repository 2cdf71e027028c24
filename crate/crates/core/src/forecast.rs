//! h-step-ahead PV and load forecasting.
//!
//! Three interchangeable forecasters: a persistence baseline, a trainable
//! feedforward network, and a perfect-foresight oracle that isolates
//! controller quality from forecast quality in tests. A fitted model is
//! immutable and can be queried concurrently.

mod mlp;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::PowerSeries;

use mlp::Mlp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Persistence,
    Mlp,
    Perfect,
}

/// Per-channel min/max used to map kW into [0, 1] for the network.
/// A degenerate (constant) channel maps to 0 and inverts back exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub pv_min: f64,
    pub pv_max: f64,
    pub load_min: f64,
    pub load_max: f64,
}

impl Normalization {
    fn from_series(pv: &[f64], load: &[f64]) -> Self {
        let bounds = |v: &[f64]| {
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (min, max)
        };
        let (pv_min, pv_max) = bounds(pv);
        let (load_min, load_max) = bounds(load);
        Self {
            pv_min,
            pv_max,
            load_min,
            load_max,
        }
    }

    fn span(min: f64, max: f64) -> f64 {
        let span = max - min;
        if span > 1e-9 {
            span
        } else {
            1.0
        }
    }

    fn norm_pv(&self, v: f64) -> f64 {
        (v - self.pv_min) / Self::span(self.pv_min, self.pv_max)
    }

    fn norm_load(&self, v: f64) -> f64 {
        (v - self.load_min) / Self::span(self.load_min, self.load_max)
    }

    fn denorm_pv(&self, v: f64) -> f64 {
        v * Self::span(self.pv_min, self.pv_max) + self.pv_min
    }

    fn denorm_load(&self, v: f64) -> f64 {
        v * Self::span(self.load_min, self.load_max) + self.load_min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MlpNets {
    /// One network consuming both histories and emitting both futures.
    Joint(Mlp),
    /// Independent per-channel networks.
    Separate { pv: Mlp, load: Mlp },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub input_window: usize,
    pub horizon: usize,
    pub norm: Normalization,
    pub nets: MlpNets,
}

/// A fitted forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ForecastModel {
    Persistence { input_window: usize, horizon: usize },
    Perfect { input_window: usize, horizon: usize },
    Mlp(MlpModel),
}

impl ForecastModel {
    pub fn persistence(input_window: usize, horizon: usize) -> Self {
        Self::Persistence {
            input_window,
            horizon,
        }
    }

    pub fn perfect(input_window: usize, horizon: usize) -> Self {
        Self::Perfect {
            input_window,
            horizon,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Persistence { .. } => ModelKind::Persistence,
            Self::Perfect { .. } => ModelKind::Perfect,
            Self::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn input_window(&self) -> usize {
        match self {
            Self::Persistence { input_window, .. } | Self::Perfect { input_window, .. } => {
                *input_window
            }
            Self::Mlp(m) => m.input_window,
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Self::Persistence { horizon, .. } | Self::Perfect { horizon, .. } => *horizon,
            Self::Mlp(m) => m.horizon,
        }
    }
}

/// Training configuration; defaults fit a joint two-hidden-layer network on
/// 30 minutes of history predicting 15 minutes ahead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub input_window: usize,
    pub horizon: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub val_fraction: f64,
    pub joint: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Mlp,
            input_window: 30,
            horizon: 15,
            hidden: vec![32, 32],
            epochs: 200,
            learning_rate: 0.8,
            val_fraction: 0.2,
            joint: true,
            seed: 0,
        }
    }
}

/// Forecast for the `horizon` steps after `issued_at`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub pv_hat: Vec<f64>,
    pub load_hat: Vec<f64>,
    pub issued_at: usize,
}

/// Per-epoch training and validation loss (normalized MSE).
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
}

fn check_alignment(pv: &PowerSeries, load: &PowerSeries) -> Result<()> {
    if !pv.aligned_with(load) {
        return Err(Error::Contract(
            "pv and load histories must share start, step and length".into(),
        ));
    }
    Ok(())
}

/// Fits a forecaster. Persistence and perfect kinds have no parameters; the
/// mlp kind trains by full-batch gradient descent on sliding windows, holds
/// out the most recent `val_fraction` of windows, and keeps the weights with
/// the best validation loss. Deterministic for a given seed.
pub fn fit(
    history_pv: &PowerSeries,
    history_load: &PowerSeries,
    config: &TrainConfig,
) -> Result<ForecastModel> {
    fit_with_report(history_pv, history_load, config).map(|(model, _)| model)
}

pub fn fit_with_report(
    history_pv: &PowerSeries,
    history_load: &PowerSeries,
    config: &TrainConfig,
) -> Result<(ForecastModel, TrainReport)> {
    check_alignment(history_pv, history_load)?;
    if config.input_window == 0 || config.horizon == 0 {
        return Err(Error::Parameter {
            name: "input_window/horizon",
            reason: "both must be >= 1".into(),
        });
    }
    let empty_report = TrainReport {
        train_loss: vec![],
        val_loss: vec![],
        best_epoch: 0,
    };
    match config.kind {
        ModelKind::Persistence => {
            return Ok((
                ForecastModel::persistence(config.input_window, config.horizon),
                empty_report,
            ));
        }
        ModelKind::Perfect => {
            return Ok((
                ForecastModel::perfect(config.input_window, config.horizon),
                empty_report,
            ));
        }
        ModelKind::Mlp => {}
    }

    let len = history_pv.len();
    let window_count = (len + 1).saturating_sub(config.input_window + config.horizon);
    if window_count < 2 {
        return Err(Error::Data {
            what: "mlp training history",
            required: config.input_window + config.horizon + 1,
            actual: len,
        });
    }

    let pv = history_pv.values();
    let load = history_load.values();
    let norm = Normalization::from_series(pv, load);
    let w = config.input_window;
    let h = config.horizon;

    // Sliding windows in time order; the validation split is the most recent
    // fraction so training never sees the future.
    let mut val_count = ((window_count as f64) * config.val_fraction).round() as usize;
    val_count = val_count.clamp(1, window_count - 1);
    let train_count = window_count - val_count;

    let build_joint = |origin: usize| -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(2 * w);
        x.extend(pv[origin..origin + w].iter().map(|&v| norm.norm_pv(v)));
        x.extend(load[origin..origin + w].iter().map(|&v| norm.norm_load(v)));
        let mut y = Vec::with_capacity(2 * h);
        y.extend(pv[origin + w..origin + w + h].iter().map(|&v| norm.norm_pv(v)));
        y.extend(
            load[origin + w..origin + w + h]
                .iter()
                .map(|&v| norm.norm_load(v)),
        );
        (x, y)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let train_nets: Result<(MlpNets, TrainReport)> = if config.joint {
        let mut sizes = vec![2 * w];
        sizes.extend(&config.hidden);
        sizes.push(2 * h);
        let mut net = Mlp::new(&sizes, &mut rng);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for origin in 0..window_count {
            let (x, y) = build_joint(origin);
            xs.push(x);
            ys.push(y);
        }
        let (train_x, val_x) = xs.split_at(train_count);
        let (train_y, val_y) = ys.split_at(train_count);
        let report = run_training(&mut net, train_x, train_y, val_x, val_y, config)?;
        Ok((MlpNets::Joint(net), report))
    } else {
        let train_channel = |values: &[f64],
                             normalize: &dyn Fn(f64) -> f64,
                             rng: &mut ChaCha8Rng,
                             config: &TrainConfig|
         -> Result<(Mlp, TrainReport)> {
            let mut sizes = vec![w];
            sizes.extend(&config.hidden);
            sizes.push(h);
            let mut net = Mlp::new(&sizes, rng);
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            for origin in 0..window_count {
                xs.push(values[origin..origin + w].iter().map(|&v| normalize(v)).collect());
                ys.push(
                    values[origin + w..origin + w + h]
                        .iter()
                        .map(|&v| normalize(v))
                        .collect(),
                );
            }
            let (train_x, val_x) = xs.split_at(train_count);
            let (train_y, val_y) = ys.split_at(train_count);
            let report = run_training(&mut net, train_x, train_y, val_x, val_y, config)?;
            Ok((net, report))
        };
        let (pv_net, pv_report) = train_channel(pv, &|v| norm.norm_pv(v), &mut rng, config)?;
        let (load_net, _) = train_channel(load, &|v| norm.norm_load(v), &mut rng, config)?;
        Ok((
            MlpNets::Separate {
                pv: pv_net,
                load: load_net,
            },
            pv_report,
        ))
    };
    let (nets, report) = train_nets?;

    let model = ForecastModel::Mlp(MlpModel {
        input_window: w,
        horizon: h,
        norm,
        nets,
    });
    Ok((model, report))
}

fn run_training(
    net: &mut Mlp,
    train_x: &[Vec<f64>],
    train_y: &[Vec<f64>],
    val_x: &[Vec<f64>],
    val_y: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<TrainReport> {
    let mut train_loss = Vec::with_capacity(config.epochs);
    let mut val_loss = Vec::with_capacity(config.epochs);
    let mut best = (0usize, f64::INFINITY, net.clone());
    for epoch in 0..config.epochs {
        let loss = net.train_epoch(train_x, train_y, config.learning_rate);
        let vloss = net.loss(val_x, val_y);
        train_loss.push(loss);
        val_loss.push(vloss);
        if vloss < best.1 && net.is_finite() {
            best = (epoch, vloss, net.clone());
        }
    }
    if !best.2.is_finite() {
        return Err(Error::Contract(
            "mlp training diverged to non-finite weights; lower the learning rate".into(),
        ));
    }
    *net = best.2;
    Ok(TrainReport {
        train_loss,
        val_loss,
        best_epoch: best.0,
    })
}

/// Truth slices starting one step after the forecast origin, used by the
/// perfect-foresight model. Slices shorter than the horizon are padded by
/// repeating their final value (the series edge).
#[derive(Debug, Clone, Copy)]
pub struct FutureTruth<'a> {
    pub pv: &'a [f64],
    pub load: &'a [f64],
}

/// Produces an h-step forecast from the last `input_window` observations.
/// Outputs are clamped at zero.
pub fn predict(
    model: &ForecastModel,
    recent_pv: &[f64],
    recent_load: &[f64],
    future_truth: Option<FutureTruth<'_>>,
    issued_at: usize,
) -> Result<ForecastResult> {
    let w = model.input_window();
    let h = model.horizon();
    if recent_pv.len() != w || recent_load.len() != w {
        return Err(Error::Contract(format!(
            "window length mismatch: model expects {w}, got pv {} / load {}",
            recent_pv.len(),
            recent_load.len()
        )));
    }

    let (pv_hat, load_hat) = match model {
        ForecastModel::Persistence { .. } => {
            let last_pv = *recent_pv.last().unwrap();
            let last_load = *recent_load.last().unwrap();
            (vec![last_pv; h], vec![last_load; h])
        }
        ForecastModel::Perfect { .. } => {
            let truth = future_truth.ok_or_else(|| {
                Error::Contract("perfect forecaster requires future truth".into())
            })?;
            let take = |truth_slice: &[f64], window: &[f64]| -> Vec<f64> {
                let edge = truth_slice
                    .last()
                    .copied()
                    .unwrap_or_else(|| *window.last().unwrap());
                (0..h)
                    .map(|k| truth_slice.get(k).copied().unwrap_or(edge))
                    .collect()
            };
            (take(truth.pv, recent_pv), take(truth.load, recent_load))
        }
        ForecastModel::Mlp(m) => {
            let forward = |net: &Mlp, input: Vec<f64>| net.forward(&input);
            match &m.nets {
                MlpNets::Joint(net) => {
                    let mut input = Vec::with_capacity(2 * w);
                    input.extend(recent_pv.iter().map(|&v| m.norm.norm_pv(v)));
                    input.extend(recent_load.iter().map(|&v| m.norm.norm_load(v)));
                    let out = forward(net, input);
                    let pv_hat = out[..h].iter().map(|&v| m.norm.denorm_pv(v)).collect();
                    let load_hat = out[h..].iter().map(|&v| m.norm.denorm_load(v)).collect();
                    (pv_hat, load_hat)
                }
                MlpNets::Separate { pv, load } => {
                    let pv_out = forward(pv, recent_pv.iter().map(|&v| m.norm.norm_pv(v)).collect());
                    let load_out = forward(
                        load,
                        recent_load.iter().map(|&v| m.norm.norm_load(v)).collect(),
                    );
                    (
                        pv_out.iter().map(|&v| m.norm.denorm_pv(v)).collect(),
                        load_out.iter().map(|&v| m.norm.denorm_load(v)).collect(),
                    )
                }
            }
        }
    };

    let clamp = |v: Vec<f64>| -> Result<Vec<f64>> {
        v.into_iter()
            .map(|x| {
                if x.is_finite() {
                    Ok(x.max(0.0))
                } else {
                    Err(Error::Contract("forecast produced a non-finite value".into()))
                }
            })
            .collect()
    };
    Ok(ForecastResult {
        pv_hat: clamp(pv_hat)?,
        load_hat: clamp(load_hat)?,
        issued_at,
    })
}

/// Accuracy at one lead time, kW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadError {
    pub lead: usize,
    pub pv_mae_kw: f64,
    pub pv_rmse_kw: f64,
    pub load_mae_kw: f64,
    pub load_rmse_kw: f64,
}

#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub per_lead: Vec<LeadError>,
    pub origins: usize,
}

/// Rolling-origin evaluation over a held-out series pair.
pub fn evaluate(
    model: &ForecastModel,
    test_pv: &PowerSeries,
    test_load: &PowerSeries,
) -> Result<AccuracyReport> {
    check_alignment(test_pv, test_load)?;
    let w = model.input_window();
    let h = model.horizon();
    let len = test_pv.len();
    if len < w + h {
        return Err(Error::Data {
            what: "forecast evaluation series",
            required: w + h,
            actual: len,
        });
    }
    let pv = test_pv.values();
    let load = test_load.values();

    let origins = len - w - h + 1;
    let mut abs_pv = vec![0.0; h];
    let mut sq_pv = vec![0.0; h];
    let mut abs_load = vec![0.0; h];
    let mut sq_load = vec![0.0; h];

    for o in 0..origins {
        let window_pv = &pv[o..o + w];
        let window_load = &load[o..o + w];
        let truth = FutureTruth {
            pv: &pv[o + w..],
            load: &load[o + w..],
        };
        let fc = predict(model, window_pv, window_load, Some(truth), o + w - 1)?;
        for k in 0..h {
            let e_pv = fc.pv_hat[k] - pv[o + w + k];
            let e_load = fc.load_hat[k] - load[o + w + k];
            abs_pv[k] += e_pv.abs();
            sq_pv[k] += e_pv * e_pv;
            abs_load[k] += e_load.abs();
            sq_load[k] += e_load * e_load;
        }
    }

    let n = origins as f64;
    let per_lead = (0..h)
        .map(|k| LeadError {
            lead: k + 1,
            pv_mae_kw: abs_pv[k] / n,
            pv_rmse_kw: (sq_pv[k] / n).sqrt(),
            load_mae_kw: abs_load[k] / n,
            load_rmse_kw: (sq_load[k] / n).sqrt(),
        })
        .collect();
    Ok(AccuracyReport { per_lead, origins })
}

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    model: ForecastModel,
}

/// Saves a model as versioned JSON. The encoding round-trips every weight
/// exactly (shortest-round-trip float formatting).
pub fn save_model(model: &ForecastModel, path: &Path) -> Result<()> {
    let display = path.display().to_string();
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| Error::Config {
        field: "model".into(),
        reason: e.to_string(),
    })?;
    std::fs::write(path, json).map_err(|source| Error::Io {
        path: display,
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ForecastModel> {
    let display = path.display().to_string();
    let json = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: display.clone(),
        source,
    })?;
    let file: ModelFile = serde_json::from_str(&json).map_err(|e| Error::Config {
        field: "model".into(),
        reason: format!("{display}: {e}"),
    })?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Config {
            field: "model.format_version".into(),
            reason: format!(
                "{display}: unsupported version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            ),
        });
    }
    Ok(file.model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_series(value: f64, len: usize) -> PowerSeries {
        PowerSeries::new(0, 1, vec![value; len]).unwrap()
    }

    fn ramp_series(slope: f64, len: usize) -> PowerSeries {
        PowerSeries::new(0, 1, (0..len).map(|i| slope * i as f64).collect()).unwrap()
    }

    fn small_config(kind: ModelKind) -> TrainConfig {
        TrainConfig {
            kind,
            input_window: 6,
            horizon: 3,
            hidden: vec![8],
            epochs: 150,
            learning_rate: 0.5,
            val_fraction: 0.2,
            joint: true,
            seed: 1,
        }
    }

    #[test]
    fn persistence_repeats_last_value() {
        let model = ForecastModel::persistence(4, 5);
        let fc = predict(&model, &[1.0, 2.0, 3.0, 12.3], &[5.0, 5.0, 5.0, 4.0], None, 3).unwrap();
        assert_eq!(fc.pv_hat, vec![12.3; 5]);
        assert_eq!(fc.load_hat, vec![4.0; 5]);
        assert_eq!(fc.issued_at, 3);
    }

    #[test]
    fn perfect_copies_truth() {
        let model = ForecastModel::perfect(2, 3);
        let truth = FutureTruth {
            pv: &[7.0, 8.0, 9.0, 10.0],
            load: &[1.0, 2.0, 3.0],
        };
        let fc = predict(&model, &[0.0, 0.0], &[0.0, 0.0], Some(truth), 1).unwrap();
        assert_eq!(fc.pv_hat, vec![7.0, 8.0, 9.0]);
        assert_eq!(fc.load_hat, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn perfect_pads_past_series_end() {
        let model = ForecastModel::perfect(2, 4);
        let truth = FutureTruth {
            pv: &[7.0, 8.0],
            load: &[],
        };
        let fc = predict(&model, &[0.0, 0.0], &[3.0, 4.0], Some(truth), 1).unwrap();
        assert_eq!(fc.pv_hat, vec![7.0, 8.0, 8.0, 8.0]);
        assert_eq!(fc.load_hat, vec![4.0; 4]);
    }

    #[test]
    fn perfect_without_truth_is_contract_error() {
        let model = ForecastModel::perfect(2, 3);
        let err = predict(&model, &[0.0, 0.0], &[0.0, 0.0], None, 0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn window_mismatch_is_contract_error() {
        let model = ForecastModel::persistence(4, 2);
        let err = predict(&model, &[1.0], &[1.0], None, 0).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn fit_persistence_is_noop() {
        let pv = constant_series(5.0, 50);
        let load = constant_series(3.0, 50);
        let model = fit(&pv, &load, &small_config(ModelKind::Persistence)).unwrap();
        assert_eq!(model.kind(), ModelKind::Persistence);
    }

    #[test]
    fn fit_rejects_short_history() {
        let pv = constant_series(5.0, 8);
        let load = constant_series(3.0, 8);
        let err = fit(&pv, &load, &small_config(ModelKind::Mlp)).unwrap_err();
        match err {
            Error::Data { required, .. } => assert_eq!(required, 10),
            other => panic!("expected data error, got {other}"),
        }
    }

    #[test]
    fn mlp_fits_constant_history() {
        let pv = constant_series(5.0, 60);
        let load = constant_series(2.0, 60);
        let (model, report) =
            fit_with_report(&pv, &load, &small_config(ModelKind::Mlp)).unwrap();
        assert!(*report.val_loss.last().unwrap() < 1e-4);
        let fc = predict(&model, &[5.0; 6], &[2.0; 6], None, 5).unwrap();
        for v in fc.pv_hat {
            assert!((v - 5.0).abs() / 5.0 < 0.01, "{v}");
        }
        for v in fc.load_hat {
            assert!((v - 2.0).abs() / 2.0 < 0.01, "{v}");
        }
    }

    #[test]
    fn fit_is_deterministic() {
        let pv = ramp_series(0.1, 80);
        let load = constant_series(3.0, 80);
        let a = fit(&pv, &load, &small_config(ModelKind::Mlp)).unwrap();
        let b = fit(&pv, &load, &small_config(ModelKind::Mlp)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn training_loss_non_increasing_on_linear_toy() {
        // Convex case: no hidden layer, linear target.
        let pv = ramp_series(0.05, 100);
        let load = constant_series(3.0, 100);
        let config = TrainConfig {
            kind: ModelKind::Mlp,
            input_window: 4,
            horizon: 2,
            hidden: vec![],
            epochs: 120,
            learning_rate: 0.05,
            val_fraction: 0.2,
            joint: true,
            seed: 2,
        };
        let (_, report) = fit_with_report(&pv, &load, &config).unwrap();
        for pair in report.train_loss.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn forecasts_are_nonnegative() {
        let pv = ramp_series(0.2, 80);
        let load = constant_series(1.0, 80);
        let model = fit(&pv, &load, &small_config(ModelKind::Mlp)).unwrap();
        // Feed a window driving the net toward negative raw outputs.
        let fc = predict(&model, &[0.0; 6], &[0.0; 6], None, 0).unwrap();
        for v in fc.pv_hat.iter().chain(&fc.load_hat) {
            assert!(*v >= 0.0 && v.is_finite());
        }
    }

    #[test]
    fn evaluate_perfect_is_zero_error() {
        let pv = ramp_series(0.3, 60);
        let load = constant_series(4.0, 60);
        let model = ForecastModel::perfect(6, 4);
        let report = evaluate(&model, &pv, &load).unwrap();
        assert_eq!(report.per_lead.len(), 4);
        for lead in report.per_lead {
            assert_eq!(lead.pv_mae_kw, 0.0);
            assert_eq!(lead.load_mae_kw, 0.0);
        }
    }

    #[test]
    fn evaluate_persistence_on_ramp_has_linear_lag_error() {
        let slope = 0.25;
        let pv = ramp_series(slope, 100);
        let load = constant_series(4.0, 100);
        let model = ForecastModel::persistence(5, 6);
        let report = evaluate(&model, &pv, &load).unwrap();
        for lead in report.per_lead {
            let expected = slope * lead.lead as f64;
            assert!(
                (lead.pv_mae_kw - expected).abs() < 1e-9,
                "lead {}: {} vs {}",
                lead.lead,
                lead.pv_mae_kw,
                expected
            );
            assert_eq!(lead.load_mae_kw, 0.0);
        }
    }

    #[test]
    fn evaluate_errors_are_nonnegative() {
        let pv = ramp_series(0.1, 60);
        let load = ramp_series(0.05, 60);
        let model = fit(&pv, &load, &small_config(ModelKind::Mlp)).unwrap();
        let report = evaluate(&model, &pv, &load).unwrap();
        for lead in report.per_lead {
            assert!(lead.pv_mae_kw >= 0.0 && lead.pv_rmse_kw >= 0.0);
            assert!(lead.load_mae_kw >= 0.0 && lead.load_rmse_kw >= 0.0);
        }
    }

    #[test]
    fn model_save_load_round_trip_is_lossless() {
        let pv = ramp_series(0.1, 60);
        let load = constant_series(3.0, 60);
        let model = fit(&pv, &load, &small_config(ModelKind::Mlp)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn model_load_rejects_unknown_version() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(
            &path,
            r#"{"format_version": 99, "model": {"Persistence": {"input_window": 1, "horizon": 1}}}"#,
        )
        .unwrap();
        let err = load_model(&path).unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
    }

    #[test]
    fn separate_nets_also_fit() {
        let pv = ramp_series(0.1, 80);
        let load = constant_series(3.0, 80);
        let mut config = small_config(ModelKind::Mlp);
        config.joint = false;
        let model = fit(&pv, &load, &config).unwrap();
        let fc = predict(&model, &pv.values()[..6], &load.values()[..6], None, 5).unwrap();
        assert_eq!(fc.pv_hat.len(), 3);
        for v in fc.load_hat {
            assert!((v - 3.0).abs() < 0.5, "{v}");
        }
    }
}
