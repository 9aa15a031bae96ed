//! Forecasting first daily departure times of a vehicle fleet over a
//! commuter window.
//!
//! Two models are provided:
//!
//! * an approximated-Gaussian model ([`margins`]) that averages per-session
//!   Poisson count histograms ([`binning`]) and puts `k`-sigma margins
//!   around each bin mean, with automatic granularity selection;
//! * a one-dimensional Gaussian mixture fitted by EM ([`gmm`]), integrated
//!   over the bins to give per-bin mass.
//!
//! Both are scored on normalized per-bin values with the error function
//! ([`evaluation`]).

pub mod binning;
pub mod error;
pub mod evaluation;
pub mod gmm;
pub mod ingest;
pub mod margins;
pub mod special;
pub mod time;

pub use binning::{divide_in_intervals, impose_and_avg, normalize, BinStats, CountMatrix};
pub use error::{Error, Result};
pub use evaluation::{ground_truth_bins, pearson_correlation, score, EvaluationReport};
pub use gmm::{fit_em, fit_em_traced, Component, EmConfig, GmmModel, InitStrategy};
pub use ingest::{generate_synthetic, parse_csv, superimpose, trim_range, Dataset, SyntheticSpec};
pub use margins::{compute_margins, scale_granularity, GranularityResult, GranularityRule, MarginForecast, TraceEntry};
pub use special::erf;
pub use time::{BinGrid, DepartureRecord, TimeOfDay, TimeWindow};
