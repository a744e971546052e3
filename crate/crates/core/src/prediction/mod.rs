//! Forecasts from early votes: state reconstruction, point predictions,
//! Laplace confidence intervals and corpus metrics.

pub mod forecast;
pub mod metrics;
pub mod state;

pub use forecast::{
    confidence_band, confidence_band_with, confidence_interval, confidence_interval_with, predict, predict_with, Forecast,
    ForecastBand, Interval, PredictOptions, hessian3, quantile,
};
pub use metrics::{evaluate_corpus, evaluate_points, spearman, EvaluationReport, MetricRow, PointForecast};
pub use state::{reconstruct_state, reconstruct_with, PoolSource, Reconstruction};
