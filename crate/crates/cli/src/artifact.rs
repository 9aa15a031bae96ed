//! JSON hand-off files between subcommands.

use departure_core::{normalize, BinGrid, GmmModel, GranularityResult, MarginForecast};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Artifact {
    MarginForecast(MarginForecast),
    Granularity {
        result: GranularityResult,
        forecast: MarginForecast,
    },
    Gmm {
        grid: BinGrid,
        model: GmmModel,
        bin_mass: Vec<f64>,
    },
    /// Externally produced per-bin fractions.
    Predictions { grid: BinGrid, values: Vec<f64> },
}

impl Artifact {
    pub fn grid(&self) -> BinGrid {
        match self {
            Artifact::MarginForecast(f) => f.grid,
            Artifact::Granularity { forecast, .. } => forecast.grid,
            Artifact::Gmm { grid, .. } | Artifact::Predictions { grid, .. } => *grid,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::MarginForecast(_) => "margin-forecast",
            Artifact::Granularity { .. } => "granularity",
            Artifact::Gmm { .. } => "gmm",
            Artifact::Predictions { .. } => "predictions",
        }
    }

    /// Per-bin fractions to score: normalized bin means for the margin
    /// models, integrated bin mass for a mixture.
    pub fn scored_values(&self) -> departure_core::Result<Vec<f64>> {
        match self {
            Artifact::MarginForecast(f) | Artifact::Granularity { forecast: f, .. } => {
                normalize(&departure_core::BinStats {
                    grid: f.grid,
                    means: f.means(),
                    total_sessions: 1,
                })
            }
            Artifact::Gmm { bin_mass, .. } => Ok(bin_mass.clone()),
            Artifact::Predictions { values, .. } => Ok(values.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }
}
