//! Approximated-Gaussian forecaster.
//!
//! Each session's per-bin count is treated as a Poisson sample, so its
//! standard deviation is `sqrt(m)` for a bin mean `m`. Averaging sessions
//! gives the bin means; a `k`-sigma band around each mean is the count
//! margin. Granularity scaling searches for the largest bin count whose
//! sparsest bin still satisfies an epsilon constraint.

use serde::{Deserialize, Serialize};

use crate::binning::{divide_in_intervals, impose_and_avg, BinStats};
use crate::error::{Error, Result};
use crate::ingest::{trim_range, Dataset};
use crate::special::two_sided_coverage;
use crate::time::{BinGrid, TimeWindow};

pub const DEFAULT_K: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinMargin {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginForecast {
    pub grid: BinGrid,
    pub k: f64,
    /// Exact two-sided normal coverage of `k` sigma.
    pub confidence_level: f64,
    pub bins: Vec<BinMargin>,
}

impl MarginForecast {
    pub fn means(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.mean).collect()
    }
}

/// `[max(0, m - k*sqrt(m)), m + k*sqrt(m)]` for every bin mean `m`.
pub fn compute_margins(stats: &BinStats, k: f64) -> Result<MarginForecast> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::param("k", format!("must be a finite non-negative multiplier, got {k}")));
    }
    let bins = stats
        .means
        .iter()
        .map(|&mean| {
            let half = k * mean.sqrt();
            BinMargin {
                mean,
                lower: (mean - half).max(0.0),
                upper: mean + half,
            }
        })
        .collect();
    Ok(MarginForecast {
        grid: stats.grid,
        k,
        confidence_level: two_sided_coverage(k),
        bins,
    })
}

/// Which reading of the epsilon constraint to apply to the sparsest bin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GranularityRule {
    /// `epsilon <= m_min / sqrt(m_min)`, i.e. `epsilon <= sqrt(m_min)`.
    #[default]
    PaperLiteral,
    /// `sqrt(m_min) / m_min <= epsilon`, i.e. `m_min >= 1 / epsilon^2`.
    RelativeError,
}

impl GranularityRule {
    /// Empty bins never satisfy either rule.
    pub fn satisfied(self, epsilon: f64, min_mean: f64) -> bool {
        if min_mean.is_nan() || min_mean <= 0.0 {
            return false;
        }
        match self {
            GranularityRule::PaperLiteral => epsilon <= min_mean / min_mean.sqrt(),
            GranularityRule::RelativeError => min_mean.sqrt() / min_mean <= epsilon,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub b: usize,
    /// `None` when the candidate was skipped because the window does not
    /// split into `b` whole-second bins.
    pub min_mean: Option<f64>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GranularityResult {
    pub chosen_b: usize,
    pub stats: BinStats,
    pub epsilon: f64,
    pub rule: GranularityRule,
    pub trace: Vec<TraceEntry>,
}

/// Evaluates every bin count in `b_min..=b_max` and returns the largest
/// that satisfies `rule`, together with the full ascending trace.
pub fn scale_granularity(
    d: &Dataset,
    window: TimeWindow,
    epsilon: f64,
    rule: GranularityRule,
    b_min: usize,
    b_max: usize,
) -> Result<GranularityResult> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param("epsilon", format!("must lie in (0, 1], got {epsilon}")));
    }
    if b_min == 0 || b_min > b_max {
        return Err(Error::param("b_min", format!("need 1 <= b_min <= b_max, got {b_min}..{b_max}")));
    }

    let cut = trim_range(d, window);
    if cut.sessions().is_empty() {
        return Err(Error::NoSessions);
    }

    let mut trace = Vec::with_capacity(b_max - b_min + 1);
    let mut best: Option<BinStats> = None;
    for b in b_min..=b_max {
        let Ok(grid) = BinGrid::new(window, b) else {
            trace.push(TraceEntry {
                b,
                min_mean: None,
                satisfied: false,
            });
            continue;
        };
        let stats = impose_and_avg(&divide_in_intervals(&cut, grid)?)?;
        let min_mean = stats.min_mean();
        let satisfied = rule.satisfied(epsilon, min_mean);
        trace.push(TraceEntry {
            b,
            min_mean: Some(min_mean),
            satisfied,
        });
        if satisfied {
            best = Some(stats);
        }
    }

    match best {
        Some(stats) => Ok(GranularityResult {
            chosen_b: stats.grid.bin_count(),
            stats,
            epsilon,
            rule,
            trace,
        }),
        None => Err(Error::NoFeasibleGranularity { trace }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{generate_uniform, parse_csv};
    use crate::time::TimeOfDay;
    use proptest::prelude::*;

    fn stats_of(means: &[f64]) -> BinStats {
        BinStats {
            grid: BinGrid::new(TimeWindow::morning_commute(), means.len()).unwrap(),
            means: means.to_vec(),
            total_sessions: 1,
        }
    }

    #[test]
    fn margin_examples() {
        let f = compute_margins(&stats_of(&[4.0, 0.0, 9.0, 1.0]), 2.0).unwrap();
        let got: Vec<_> = f.bins.iter().map(|b| (b.lower, b.upper)).collect();
        assert_eq!(got, vec![(0.0, 8.0), (0.0, 0.0), (3.0, 15.0), (0.0, 3.0)]);
        assert!((f.confidence_level - 0.9545).abs() < 1e-4);
    }

    #[test]
    fn zero_k_collapses() {
        let f = compute_margins(&stats_of(&[4.0, 2.5, 0.0]), 0.0).unwrap();
        assert!(f.bins.iter().all(|b| b.lower == b.mean && b.upper == b.mean));
        assert!(compute_margins(&stats_of(&[1.0]), -1.0).is_err());
        assert!(compute_margins(&stats_of(&[1.0]), f64::NAN).is_err());
    }

    #[test]
    fn rules_at_boundaries() {
        assert!(GranularityRule::PaperLiteral.satisfied(1.0, 1.0));
        assert!(!GranularityRule::PaperLiteral.satisfied(0.05, 0.0));
        assert!(!GranularityRule::RelativeError.satisfied(0.1, 0.0));
        assert!(GranularityRule::RelativeError.satisfied(0.1, 100.0));
        assert!(!GranularityRule::RelativeError.satisfied(0.1, 99.0));
        assert!(GranularityRule::PaperLiteral.satisfied(0.05, 0.0026));
        assert!(!GranularityRule::PaperLiteral.satisfied(0.05, 0.0024));
    }

    #[test]
    fn single_record_boundary() {
        let d = parse_csv("vehicle_id,session_id,start_tm\nv,s,07:00:00\n".as_bytes()).unwrap();
        let r = scale_granularity(&d, TimeWindow::morning_commute(), 1.0, GranularityRule::PaperLiteral, 1, 1).unwrap();
        assert_eq!(r.chosen_b, 1);
        assert_eq!(r.trace, vec![TraceEntry { b: 1, min_mean: Some(1.0), satisfied: true }]);
    }

    #[test]
    fn chooses_last_nonempty_granularity() {
        // One record per 15-minute bin: every bin is occupied at b = 12 and
        // at least one is empty for any 12 < b <= 24.
        let mut csv = String::from("vehicle_id,session_id,start_tm\n");
        for i in 0..12 {
            let t = TimeOfDay::from_seconds(6 * 3600 + i * 900 + 450).unwrap();
            csv.push_str(&format!("v{i},s,{t}\n"));
        }
        let d = parse_csv(csv.as_bytes()).unwrap();
        let r = scale_granularity(&d, TimeWindow::morning_commute(), 0.05, GranularityRule::PaperLiteral, 1, 24).unwrap();
        assert_eq!(r.chosen_b, 12);
        assert!(r.trace.iter().filter(|e| e.b > 12).all(|e| !e.satisfied));
        // 7, 11, 13, ... do not divide 10800 s.
        let skipped: Vec<_> = r.trace.iter().filter(|e| e.min_mean.is_none()).map(|e| e.b).collect();
        assert_eq!(skipped, vec![7, 11, 13, 14, 17, 19, 21, 22, 23]);
    }

    #[test]
    fn infeasible_carries_trace() {
        let d = parse_csv("vehicle_id,session_id,start_tm\nv,s,07:00:00\n".as_bytes()).unwrap();
        match scale_granularity(&d, TimeWindow::morning_commute(), 0.1, GranularityRule::RelativeError, 1, 4) {
            Err(Error::NoFeasibleGranularity { trace }) => assert_eq!(trace.len(), 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_config() {
        let d = generate_uniform(TimeWindow::morning_commute(), 1, 10, 0);
        let w = TimeWindow::morning_commute();
        assert!(scale_granularity(&d, w, 0.0, GranularityRule::PaperLiteral, 1, 4).is_err());
        assert!(scale_granularity(&d, w, 1.5, GranularityRule::PaperLiteral, 1, 4).is_err());
        assert!(scale_granularity(&d, w, 0.5, GranularityRule::PaperLiteral, 5, 4).is_err());
        assert!(matches!(scale_granularity(&Dataset::default(), w, 0.5, GranularityRule::PaperLiteral, 1, 4), Err(Error::NoSessions)));
    }

    #[test]
    fn relative_rule_never_resatisfies_on_even_splits() {
        // 36 five-minute slots with identical occupancy per slot: counts
        // split evenly for every b dividing 36.
        let mut csv = String::from("vehicle_id,session_id,start_tm\n");
        for slot in 0..36u32 {
            for v in 0..10u32 {
                let t = TimeOfDay::from_seconds(6 * 3600 + slot * 300 + v).unwrap();
                csv.push_str(&format!("v{slot}-{v},s,{t}\n"));
            }
        }
        let d = parse_csv(csv.as_bytes()).unwrap();
        let r = scale_granularity(&d, TimeWindow::morning_commute(), 0.1, GranularityRule::RelativeError, 1, 36).unwrap();
        assert_eq!(r.chosen_b, 3);
        let evaluated: Vec<bool> = r.trace.iter().filter(|e| e.min_mean.is_some() && 36 % e.b == 0).map(|e| e.satisfied).collect();
        let first_fail = evaluated.iter().position(|s| !s).unwrap();
        assert!(evaluated[first_fail..].iter().all(|s| !s));
    }

    proptest! {
        #[test]
        fn margin_invariants(m in 0.0f64..1e4, k in 0.0f64..5.0) {
            let f = compute_margins(&stats_of(&[m]), k).unwrap();
            let b = f.bins[0];
            prop_assert!(0.0 <= b.lower && b.lower <= b.mean && b.mean <= b.upper);
            prop_assert!((b.upper - b.mean - k * m.sqrt()).abs() <= 1e-9 * (1.0 + m));
            prop_assert!((b.mean - b.lower - (k * m.sqrt()).min(m)).abs() <= 1e-9 * (1.0 + m));
        }

        #[test]
        fn width_linear_in_k(m in 0.0f64..1e4, k in 0.0f64..5.0) {
            let one = compute_margins(&stats_of(&[m]), 1.0).unwrap().bins[0];
            let many = compute_margins(&stats_of(&[m]), k).unwrap().bins[0];
            prop_assert!(((many.upper - m) - k * (one.upper - m)).abs() <= 1e-9 * (1.0 + m));
        }
    }
}
