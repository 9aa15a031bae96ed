//! One-dimensional Gaussian mixture fitted by expectation-maximization.
//!
//! The E-step works in log space (log-sum-exp over components) so that
//! points far from every component do not underflow. All reductions run
//! sequentially in data order, making a fit bit-reproducible for a fixed
//! input and [`EmConfig`].

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_cdf;
use crate::time::BinGrid;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    /// Seconds since midnight.
    pub mean: f64,
    /// Seconds squared.
    pub variance: f64,
}

impl Component {
    fn log_pdf(&self, x: f64) -> f64 {
        let d = x - self.mean;
        -0.5 * (LN_2PI + self.variance.ln() + d * d / self.variance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub components: Vec<Component>,
    pub log_likelihood: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Means at the centres of `K` equal slices of the init range, uniform
    /// weights, variance equal to the squared slice width.
    #[default]
    EvenlySpaced,
    /// Means at `K` distinct data points chosen by the seeded RNG.
    SeededRandom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub components: usize,
    pub max_iterations: usize,
    pub rel_loglik_tolerance: f64,
    pub variance_floor: f64,
    pub init: InitStrategy,
    pub rng_seed: u64,
    /// Range sliced by the evenly-spaced init; `None` uses the data range.
    pub init_range: Option<(f64, f64)>,
}

impl EmConfig {
    pub fn new(components: usize) -> Self {
        EmConfig {
            components,
            max_iterations: 500,
            rel_loglik_tolerance: 1e-8,
            variance_floor: 1.0,
            init: InitStrategy::EvenlySpaced,
            rng_seed: 0,
            init_range: None,
        }
    }

    /// Evenly-spaced init over the grid window with one component per bin.
    pub fn for_grid(grid: &BinGrid) -> Self {
        let w = grid.window();
        EmConfig {
            init_range: Some((w.start().seconds() as f64, w.end().seconds() as f64)),
            ..EmConfig::new(grid.bin_count())
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::param("components", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        if self.rel_loglik_tolerance.is_nan() || self.rel_loglik_tolerance <= 0.0 {
            return Err(Error::param("rel_loglik_tolerance", "must be positive"));
        }
        if !(self.variance_floor > 0.0 && self.variance_floor.is_finite()) {
            return Err(Error::param("variance_floor", "must be positive and finite"));
        }
        if let Some((lo, hi)) = self.init_range {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::param("init_range", "must be a finite ordered pair"));
            }
        }
        Ok(())
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn initial_components(times: &[f64], cfg: &EmConfig) -> Vec<Component> {
    let k = cfg.components;
    let weight = 1.0 / k as f64;
    let (data_lo, data_hi) = times
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (lo, hi) = cfg.init_range.unwrap_or((data_lo, data_hi));
    let width = (hi - lo) / k as f64;
    let variance = (width * width).max(cfg.variance_floor);

    match cfg.init {
        InitStrategy::EvenlySpaced => (0..k)
            .map(|i| Component {
                weight,
                mean: lo + (i as f64 + 0.5) * width,
                variance,
            })
            .collect(),
        InitStrategy::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            let mut picks = sample(&mut rng, times.len(), k).into_vec();
            picks.sort_unstable();
            picks
                .into_iter()
                .map(|j| Component {
                    weight,
                    mean: times[j],
                    variance,
                })
                .collect()
        }
    }
}

/// Responsibilities of every component for every point, plus the total
/// log-likelihood of the data under `components`.
fn e_step(times: &[f64], components: &[Component], resp: &mut [Vec<f64>]) -> f64 {
    let mut ll = 0.0;
    let mut logs = vec![0.0; components.len()];
    for (x, row) in times.iter().zip(resp.iter_mut()) {
        for (l, c) in logs.iter_mut().zip(components) {
            *l = c.weight.ln() + c.log_pdf(*x);
        }
        let norm = log_sum_exp(&logs);
        ll += norm;
        for (r, l) in row.iter_mut().zip(&logs) {
            *r = (l - norm).exp();
        }
    }
    ll
}

fn m_step(times: &[f64], resp: &[Vec<f64>], components: &mut [Component], floor: f64) {
    let n = times.len() as f64;
    for (k, c) in components.iter_mut().enumerate() {
        let nk: f64 = resp.iter().map(|r| r[k]).sum();
        c.weight = nk / n;
        if nk <= f64::MIN_POSITIVE {
            // Dead component: weight zero, location irrelevant.
            continue;
        }
        let mean = resp.iter().zip(times).map(|(r, x)| r[k] * x).sum::<f64>() / nk;
        let var = resp
            .iter()
            .zip(times)
            .map(|(r, x)| r[k] * (x - mean) * (x - mean))
            .sum::<f64>()
            / nk;
        c.mean = mean;
        c.variance = var.max(floor);
    }
}

/// Fits a `K`-component mixture to `times` (seconds) and returns the model
/// together with the log-likelihood after initialisation and after every
/// M-step.
pub fn fit_em_traced(times: &[f64], cfg: &EmConfig) -> Result<(GmmModel, Vec<f64>)> {
    cfg.validate()?;
    if let Some(&bad) = times.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(bad));
    }
    if times.len() < cfg.components || times.is_empty() {
        return Err(Error::TooFewPoints {
            points: times.len(),
            components: cfg.components,
        });
    }

    let mut components = initial_components(times, cfg);
    let mut resp = vec![vec![0.0; cfg.components]; times.len()];
    let mut ll = e_step(times, &components, &mut resp);
    let mut history = vec![ll];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        m_step(times, &resp, &mut components, cfg.variance_floor);
        iterations += 1;
        let next = e_step(times, &components, &mut resp);
        history.push(next);
        let rel = (next - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        ll = next;
        if rel < cfg.rel_loglik_tolerance {
            converged = true;
            break;
        }
    }

    Ok((
        GmmModel {
            components,
            log_likelihood: ll,
            iterations_used: iterations,
            converged,
        },
        history,
    ))
}

pub fn fit_em(times: &[f64], cfg: &EmConfig) -> Result<GmmModel> {
    fit_em_traced(times, cfg).map(|(m, _)| m)
}

impl GmmModel {
    pub fn density(&self, t: f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| c.weight * c.log_pdf(t).exp())
            .sum()
    }

    /// Posterior component probabilities for each point; rows sum to 1.
    pub fn responsibilities(&self, times: &[f64]) -> Vec<Vec<f64>> {
        let mut resp = vec![vec![0.0; self.components.len()]; times.len()];
        e_step(times, &self.components, &mut resp);
        resp
    }

    pub fn log_likelihood_of(&self, times: &[f64]) -> f64 {
        let mut resp = vec![vec![0.0; self.components.len()]; times.len()];
        e_step(times, &self.components, &mut resp)
    }

    /// Mixture probability mass in each bin of `grid`, renormalized over
    /// the window so the result sums to 1.
    pub fn bin_mass(&self, grid: &BinGrid) -> Result<Vec<f64>> {
        let cdf = |x: f64| -> f64 {
            self.components
                .iter()
                .map(|c| c.weight * normal_cdf((x - c.mean) / c.variance.sqrt()))
                .sum()
        };
        let edges: Vec<f64> = (0..=grid.bin_count())
            .map(|i| {
                if i == grid.bin_count() {
                    grid.bounds(i - 1).1 as f64
                } else {
                    grid.bounds(i).0 as f64
                }
            })
            .collect();
        let at_edges: Vec<f64> = edges.iter().map(|&e| cdf(e)).collect();
        let mass: Vec<f64> = at_edges.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect();
        let total: f64 = mass.iter().sum();
        if total < 1e-12 {
            return Err(Error::MassOutsideWindow);
        }
        Ok(mass.into_iter().map(|m| m / total).collect())
    }
}

/// Free-function form of [`GmmModel::density`].
pub fn density(model: &GmmModel, t: f64) -> f64 {
    model.density(t)
}

/// Free-function form of [`GmmModel::bin_mass`].
pub fn bin_mass(model: &GmmModel, grid: &BinGrid) -> Result<Vec<f64>> {
    model.bin_mass(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::TimeWindow;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn model(parts: &[(f64, f64, f64)]) -> GmmModel {
        GmmModel {
            components: parts
                .iter()
                .map(|&(weight, mean, variance)| Component { weight, mean, variance })
                .collect(),
            log_likelihood: 0.0,
            iterations_used: 0,
            converged: true,
        }
    }

    fn two_clusters(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Normal::new(25_200.0, 300.0).unwrap();
        let b = Normal::new(30_600.0, 300.0).unwrap();
        let mut xs: Vec<f64> = (0..500).map(|_| a.sample(&mut rng)).collect();
        xs.extend((0..500).map(|_| b.sample(&mut rng)));
        xs
    }

    #[test]
    fn single_component_is_closed_form() {
        let xs = [10.0, 12.0, 15.0, 21.0, 22.0];
        let m = fit_em(&xs, &EmConfig::new(1)).unwrap();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        let c = m.components[0];
        assert_eq!(c.weight, 1.0);
        assert!((c.mean - mean).abs() < 1e-12);
        assert!((c.variance - var).abs() < 1e-9);
        assert!(m.converged);

        let same = fit_em(&[7.0, 7.0, 7.0], &EmConfig::new(1)).unwrap();
        assert_eq!(same.components[0].variance, 1.0);
    }

    #[test]
    fn recovers_two_clusters() {
        let xs = two_clusters(3);
        let m = fit_em(&xs, &EmConfig::new(2)).unwrap();
        let mut cs = m.components.clone();
        cs.sort_by(|a, b| a.mean.total_cmp(&b.mean));
        assert!((cs[0].mean - 25_200.0).abs() < 60.0, "{cs:?}");
        assert!((cs[1].mean - 30_600.0).abs() < 60.0, "{cs:?}");
        assert!((cs[0].weight - 0.5).abs() < 0.05);
    }

    #[test]
    fn deterministic() {
        let xs = two_clusters(11);
        for init in [InitStrategy::EvenlySpaced, InitStrategy::SeededRandom] {
            let cfg = EmConfig { init, rng_seed: 5, ..EmConfig::new(4) };
            let a = fit_em_traced(&xs, &cfg).unwrap();
            let b = fit_em_traced(&xs, &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn precondition_errors() {
        assert!(matches!(fit_em(&[1.0], &EmConfig::new(2)), Err(Error::TooFewPoints { .. })));
        assert!(matches!(fit_em(&[], &EmConfig::new(1)), Err(Error::TooFewPoints { .. })));
        assert!(matches!(fit_em(&[1.0, f64::NAN], &EmConfig::new(1)), Err(Error::NonFinite(_))));
        assert!(fit_em(&[1.0], &EmConfig { variance_floor: 0.0, ..EmConfig::new(1) }).is_err());
    }

    #[test]
    fn density_examples() {
        let m = model(&[(1.0, 0.0, 1.0)]);
        assert!((m.density(0.0) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(m.density(1.7), m.density(-1.7));
    }

    #[test]
    fn density_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = w.iter().sum();
            let parts: Vec<(f64, f64, f64)> = w
                .iter()
                .map(|wi| (wi / s, rng.random_range(-5.0..5.0), rng.random_range(0.2..4.0)))
                .collect();
            let t = rng.random_range(-8.0..8.0);
            let oracle: f64 = parts
                .iter()
                .map(|&(p, mu, var)| p / (2.0 * std::f64::consts::PI * var).sqrt() * (-(t - mu) * (t - mu) / (2.0 * var)).exp())
                .sum();
            assert!((model(&parts).density(t) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn density_integrates_to_one() {
        let m = model(&[(0.3, 100.0, 25.0), (0.7, 160.0, 400.0)]);
        // Simpson over [mu_min - 10 sigma_max, mu_max + 10 sigma_max].
        let (a, b) = (100.0 - 200.0, 160.0 + 200.0);
        let n = 20_000;
        let h = (b - a) / n as f64;
        let mut s = m.density(a) + m.density(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * m.density(a + i as f64 * h);
        }
        assert!((s * h / 3.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn bin_mass_symmetric_and_normalized() {
        let grid = BinGrid::new(TimeWindow::morning_commute(), 12).unwrap();
        let m = model(&[(1.0, 27_000.0, 1200.0f64.powi(2))]);
        let mass = m.bin_mass(&grid).unwrap();
        assert!((mass.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..6 {
            assert!((mass[i] - mass[11 - i]).abs() < 1e-12);
        }
        let far = model(&[(1.0, 80_000.0, 1.0)]);
        assert!(matches!(far.bin_mass(&grid), Err(Error::MassOutsideWindow)));
    }

    #[test]
    fn responsibilities_rows_sum_to_one() {
        let xs = two_clusters(8);
        let m = fit_em(&xs, &EmConfig::new(5)).unwrap();
        for row in m.responsibilities(&xs) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn log_likelihood_non_decreasing(seed in any::<u64>(), k in 1usize..6, n in 20usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(21_600.0..32_400.0f64).round()).collect();
            let cfg = EmConfig { init: InitStrategy::SeededRandom, rng_seed: seed, ..EmConfig::new(k) };
            let (_, hist) = fit_em_traced(&xs, &cfg).unwrap();
            for w in hist.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
            }
        }

        #[test]
        fn translation_equivariant(shift in -5000.0f64..5000.0) {
            let xs = two_clusters(21);
            let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let cfg = EmConfig::new(3);
            let a = fit_em(&xs, &cfg).unwrap();
            let b = fit_em(&moved, &cfg).unwrap();
            for (ca, cb) in a.components.iter().zip(&b.components) {
                prop_assert!((cb.mean - ca.mean - shift).abs() < 1e-3);
                prop_assert!((cb.weight - ca.weight).abs() < 1e-6);
                prop_assert!((cb.variance - ca.variance).abs() < 1e-3 * ca.variance);
            }
            prop_assert!((a.log_likelihood - b.log_likelihood).abs() < 1e-6 * a.log_likelihood.abs());
        }
    }
}
