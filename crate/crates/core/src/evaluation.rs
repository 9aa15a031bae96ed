//! Scoring normalized per-bin forecasts with the error function.

use serde::{Deserialize, Serialize};

use crate::binning::{divide_in_intervals, impose_and_avg, normalize};
use crate::error::{Error, Result};
use crate::ingest::{trim_range, Dataset};
use crate::special::erf;
use crate::time::BinGrid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub label: String,
    pub grid: BinGrid,
    pub input_values: Vec<f64>,
    pub erf_values: Vec<f64>,
    pub average_erf: f64,
    /// `average_erf * bin_count`.
    pub normalized_score: f64,
    /// Held-out per-bin fractions the forecast was compared against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<f64>>,
}

/// Applies `erf` to every per-bin value.
pub fn score(values: &[f64], grid: BinGrid, label: impl Into<String>) -> Result<EvaluationReport> {
    if values.len() != grid.bin_count() {
        return Err(Error::LengthMismatch {
            expected: grid.bin_count(),
            actual: values.len(),
        });
    }
    if let Some(&bad) = values.iter().find(|v| v.is_nan() || **v < 0.0) {
        return Err(Error::param("values", format!("per-bin values must be non-negative, got {bad}")));
    }
    let erf_values = values.iter().map(|&v| erf(v)).collect::<Result<Vec<_>>>()?;
    let average_erf = erf_values.iter().sum::<f64>() / erf_values.len() as f64;
    Ok(EvaluationReport {
        label: label.into(),
        grid,
        input_values: values.to_vec(),
        erf_values,
        average_erf,
        normalized_score: average_erf * grid.bin_count() as f64,
        ground_truth: None,
    })
}

/// Per-bin departure fractions of a held-out dataset.
pub fn ground_truth_bins(test: &Dataset, grid: BinGrid) -> Result<Vec<f64>> {
    let cut = trim_range(test, grid.window());
    if cut.is_empty() {
        return Err(Error::param("test", "no test records inside the window"));
    }
    normalize(&impose_and_avg(&divide_in_intervals(&cut, grid)?)?)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::param("x", "need at least two paired observations"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
