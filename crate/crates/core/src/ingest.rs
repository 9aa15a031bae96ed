//! Reading departure records, window pruning, superimposition of
//! per-city datasets, and seeded synthetic data.

use std::collections::HashSet;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{DepartureRecord, TimeOfDay, TimeWindow};

pub const CSV_HEADER: [&str; 3] = ["vehicle_id", "session_id", "start_tm"];

/// An ordered collection of first-departure records with at most one
/// record per `(vehicle_id, session_id)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    records: Vec<DepartureRecord>,
    sessions: Vec<String>,
}

impl Dataset {
    pub fn new(records: Vec<DepartureRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert((r.vehicle_id.as_str(), r.session_id.as_str())) {
                return Err(Error::DuplicateRecord {
                    vehicle_id: r.vehicle_id.clone(),
                    session_id: r.session_id.clone(),
                });
            }
        }
        Ok(Self::from_unique(records))
    }

    fn from_unique(records: Vec<DepartureRecord>) -> Self {
        let mut sessions = Vec::new();
        let mut seen = HashSet::new();
        for r in &records {
            if seen.insert(r.session_id.as_str()) {
                sessions.push(r.session_id.clone());
            }
        }
        Dataset { records, sessions }
    }

    pub fn records(&self) -> &[DepartureRecord] {
        &self.records
    }

    /// Distinct session ids in order of first appearance.
    pub fn sessions(&self) -> &[String] {
        &self.sessions
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Departure times in seconds since midnight, in record order.
    pub fn departure_seconds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.departure.seconds() as f64).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.records {
            w.write_record([r.vehicle_id.as_str(), r.session_id.as_str(), &r.departure.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Parses `vehicle_id,session_id,start_tm` CSV, preserving row order.
pub fn parse_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);

    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Malformed {
            line: 1,
            field: "header".into(),
            message: format!("expected `{}`, got `{}`", CSV_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Malformed {
                line,
                field: "row".into(),
                message: format!("expected 3 fields, got {}", row.len()),
            });
        }
        for (i, name) in CSV_HEADER.iter().enumerate() {
            if row[i].is_empty() {
                return Err(Error::Malformed {
                    line,
                    field: (*name).into(),
                    message: "empty value".into(),
                });
            }
        }
        let departure: TimeOfDay = row[2].parse().map_err(|e: Error| Error::Malformed {
            line,
            field: "start_tm".into(),
            message: e.to_string(),
        })?;
        records.push(DepartureRecord::new(&row[0], &row[1], departure));
    }
    Dataset::new(records)
}

/// Keeps records with `window.start <= departure < window.end`.
pub fn trim_range(d: &Dataset, window: TimeWindow) -> Dataset {
    let kept = d
        .records
        .iter()
        .filter(|r| window.contains(r.departure))
        .cloned()
        .collect();
    Dataset::from_unique(kept)
}

/// Union of datasets whose session ids are disjoint.
pub fn superimpose(parts: &[Dataset]) -> Result<Dataset> {
    let mut owner = HashSet::new();
    for part in parts {
        for s in &part.sessions {
            if !owner.insert(s.as_str()) {
                return Err(Error::SessionCollision(s.clone()));
            }
        }
    }
    let records = parts.iter().flat_map(|p| p.records.iter().cloned()).collect();
    Ok(Dataset::from_unique(records))
}

/// Parameters of a synthetic dataset of normal departure times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub window: TimeWindow,
    pub true_mean: TimeOfDay,
    /// Seconds.
    pub true_stddev: f64,
    pub session_count: usize,
    pub vehicles_per_session: usize,
    pub rng_seed: u64,
    /// Prepended to generated session ids so several synthetic parts can
    /// be superimposed without collisions.
    pub session_prefix: String,
}

impl SyntheticSpec {
    pub fn new(window: TimeWindow, true_mean: TimeOfDay, true_stddev: f64, session_count: usize, vehicles_per_session: usize, rng_seed: u64) -> Self {
        SyntheticSpec {
            window,
            true_mean,
            true_stddev,
            session_count,
            vehicles_per_session,
            rng_seed,
            session_prefix: "session-".into(),
        }
    }

    pub fn with_prefix(mut self, prefix: impl Into<String>) -> Self {
        self.session_prefix = prefix.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.window.contains(self.true_mean) {
            return Err(Error::param("true_mean", format!("{} is outside the window", self.true_mean)));
        }
        if !(self.true_stddev.is_finite() && self.true_stddev > 0.0) {
            return Err(Error::param("true_stddev", "must be positive and finite"));
        }
        if self.session_count == 0 {
            return Err(Error::param("session_count", "must be at least 1"));
        }
        if self.vehicles_per_session == 0 {
            return Err(Error::param("vehicles_per_session", "must be at least 1"));
        }
        Ok(())
    }
}

const MAX_REJECTIONS: u64 = 10_000_000;

/// Draws normal departure times per session, re-drawing any sample that
/// rounds to a second outside the window.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let normal = Normal::new(spec.true_mean.seconds() as f64, spec.true_stddev)
        .map_err(|e| Error::param("true_stddev", e.to_string()))?;
    let (lo, hi) = (spec.window.start().seconds() as f64, spec.window.end().seconds() as f64);

    let mut records = Vec::with_capacity(spec.session_count * spec.vehicles_per_session);
    for s in 0..spec.session_count {
        let session = format!("{}{s:03}", spec.session_prefix);
        for v in 0..spec.vehicles_per_session {
            let mut attempts = 0u64;
            let secs = loop {
                let x = normal.sample(&mut rng).round();
                if lo <= x && x < hi {
                    break x as u32;
                }
                attempts += 1;
                if attempts > MAX_REJECTIONS {
                    return Err(Error::param("true_stddev", "rejection sampling failed to land in the window"));
                }
            };
            records.push(DepartureRecord::new(format!("V{v:05}"), session.clone(), TimeOfDay::from_seconds(secs)?));
        }
    }
    Ok(Dataset::from_unique(records))
}

/// Uniformly distributed departures, used for test fixtures and benches.
pub fn generate_uniform(window: TimeWindow, session_count: usize, vehicles_per_session: usize, rng_seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (lo, hi) = (window.start().seconds(), window.end().seconds());
    let mut records = Vec::with_capacity(session_count * vehicles_per_session);
    for s in 0..session_count {
        for v in 0..vehicles_per_session {
            let secs = rng.random_range(lo..hi);
            records.push(DepartureRecord::new(format!("V{v:05}"), format!("uniform-{s:03}"), TimeOfDay::from_seconds(secs).expect("in window")));
        }
    }
    Dataset::from_unique(records)
}
