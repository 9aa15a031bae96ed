//! Per-session count matrices and their column means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::time::BinGrid;

/// `counts[j][i]` is the number of departures of session `j` in bin `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMatrix {
    pub grid: BinGrid,
    pub session_ids: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl CountMatrix {
    pub fn session_count(&self) -> usize {
        self.session_ids.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.grid.bin_count()];
        for row in &self.counts {
            for (s, c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        sums
    }
}

/// Mean departures per session for each bin. Stored unnormalized; see
/// [`normalize`] for the per-bin fraction view.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub grid: BinGrid,
    pub means: Vec<f64>,
    pub total_sessions: usize,
}

impl BinStats {
    pub fn min_mean(&self) -> f64 {
        self.means.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Buckets every record of `d` into its session row. Records must already
/// lie inside the grid window (see [`crate::ingest::trim_range`]).
pub fn divide_in_intervals(d: &Dataset, grid: BinGrid) -> Result<CountMatrix> {
    let session_ids = d.sessions().to_vec();
    let mut counts = vec![vec![0u64; grid.bin_count()]; session_ids.len()];
    let row_of: std::collections::HashMap<&str, usize> =
        session_ids.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();

    for r in d.records() {
        let i = grid.bin_index(r.departure).ok_or_else(|| Error::OutsideWindow {
            vehicle_id: r.vehicle_id.clone(),
            session_id: r.session_id.clone(),
            departure: r.departure.to_string(),
        })?;
        counts[row_of[r.session_id.as_str()]][i] += 1;
    }
    Ok(CountMatrix {
        grid,
        session_ids,
        counts,
    })
}

pub fn impose_and_avg(k: &CountMatrix) -> Result<BinStats> {
    let n = k.session_count();
    if n == 0 {
        return Err(Error::NoSessions);
    }
    let means = k.column_sums().into_iter().map(|s| s as f64 / n as f64).collect();
    Ok(BinStats {
        grid: k.grid,
        means,
        total_sessions: n,
    })
}

/// Per-bin fraction of all departures; sums to 1.
pub fn normalize(stats: &BinStats) -> Result<Vec<f64>> {
    let total: f64 = stats.means.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyBins);
    }
    Ok(stats.means.iter().map(|m| m / total).collect())
}
