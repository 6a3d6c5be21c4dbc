//! Empirical tail statistics: CCDFs, Hill estimates, PageRank/degree ratio
//! reports and the neighborhood condition probe.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Number of sorted values strictly greater than `k`.
fn count_above(sorted: &[f64], k: f64) -> usize {
    sorted.len() - sorted.partition_point(|&x| x <= k)
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `0, 1, ..., max` as thresholds.
pub fn integer_grid(max: usize) -> Vec<f64> {
    (0..=max).map(|k| k as f64).collect()
}

/// `points + 1` evenly spaced thresholds from 0 to `hi`.
pub fn linear_grid(hi: f64, points: usize) -> Vec<f64> {
    let points = points.max(1);
    (0..=points).map(|i| hi * i as f64 / points as f64).collect()
}

/// Sorted union of two grids with duplicates removed.
pub fn merge_grids(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut grid: Vec<f64> = a.iter().chain(b).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Roughly `per_decade` log-spaced integer thresholds in `[lo, hi]`, deduplicated.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let (a, b) = (lo.max(1.0).log10(), hi.max(1.0).log10());
    let steps = ((b - a) * per_decade as f64).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..=steps)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / steps as f64).round())
        .collect();
    grid.dedup();
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub k_top: usize,
    pub estimate: f64,
    pub std_error: f64,
}

/// Default number of top order statistics, `⌊√N⌋`.
pub fn default_k_top(n: usize) -> usize {
    (n as f64).sqrt().floor() as usize
}

/// Hill estimator of the tail index: the reciprocal of the mean of
/// `log(X_(i) / X_(k_top+1))` over the `k_top` largest values.
pub fn hill_estimator(values: &[f64], k_top: usize) -> Result<HillEstimate> {
    if k_top < 2 || k_top >= values.len() {
        return Err(Error::InsufficientSample(format!(
            "k_top = {k_top} needs 2 <= k_top < N = {}",
            values.len()
        )));
    }
    if let Some(x) = values.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InsufficientSample(format!("value {x} is not a positive number")));
    }
    let sorted = sorted_copy(values);
    let n = sorted.len();
    let threshold = sorted[n - k_top - 1].ln();
    let mean_log = sorted[n - k_top..].iter().map(|x| x.ln() - threshold).sum::<f64>() / k_top as f64;
    if mean_log <= 0.0 {
        return Err(Error::InsufficientSample("top order statistics are all equal".into()));
    }
    let estimate = 1.0 / mean_log;
    Ok(HillEstimate {
        k_top,
        estimate,
        std_error: estimate / (k_top as f64).sqrt(),
    })
}

/// Empirical complementary distribution function on a grid of thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub sample_count: usize,
    pub grid: Vec<f64>,
    pub ccdf: Vec<f64>,
    /// `#{x_i > k}` per grid point.
    pub counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hill: Vec<HillEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<RatioReport>,
}

/// `P̂(X > k) = #{x_i > k} / N` at each grid point.
pub fn empirical_ccdf(values: &[f64], grid: &[f64]) -> Result<TailReport> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let sorted = sorted_copy(values);
    let n = sorted.len();
    let counts: Vec<usize> = grid.iter().map(|&k| count_above(&sorted, k)).collect();
    Ok(TailReport {
        sample_count: n,
        grid: grid.to_vec(),
        ccdf: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        counts,
        hill: Vec::new(),
        ratios: None,
    })
}

impl TailReport {
    /// Appends Hill estimates for each `k_top`, skipping counts the sample cannot support.
    pub fn with_hill(mut self, values: &[f64], k_tops: &[usize]) -> Self {
        self.hill = k_tops.iter().filter_map(|&k| hill_estimator(values, k).ok()).collect();
        self
    }

    pub fn with_ratios(mut self, ratios: RatioReport) -> Self {
        self.ratios = Some(ratios);
        self
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,ccdf,count")?;
        for ((k, p), c) in self.grid.iter().zip(&self.ccdf).zip(&self.counts) {
            writeln!(w, "{k},{p},{c}")?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub k: f64,
    /// `P̂(R > k)`
    pub pagerank_ccdf: f64,
    /// `P̂(D > βk)`
    pub scaled_degree_ccdf: f64,
    /// `P̂(D > k)`
    pub degree_ccdf: f64,
    /// Omitted where the denominator is zero.
    pub ratio: Option<f64>,
    /// `#{R_i > k} <= #{D_i > k}`.
    pub upper_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub beta: f64,
    pub tolerance: f64,
    pub sample_count: usize,
    pub points: Vec<RatioPoint>,
    /// Grid values where the denominator vanished.
    pub denominator_zero: Vec<f64>,
    /// Longest run of consecutive grid points with `ratio >= 1 - tolerance`.
    pub window: Option<(f64, f64)>,
    pub upper_bound_violations: usize,
}

/// Summary of the ratio over the grid points where both CCDFs reach a minimum mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassWindow {
    pub k_lo: f64,
    pub k_hi: f64,
    pub points: usize,
    pub min_ratio: f64,
}

impl RatioReport {
    pub fn upper_bound_holds(&self) -> bool {
        self.upper_bound_violations == 0
    }

    pub fn mass_window(&self, min_mass: f64) -> Option<MassWindow> {
        let inside: Vec<&RatioPoint> = self
            .points
            .iter()
            .filter(|p| p.pagerank_ccdf >= min_mass && p.scaled_degree_ccdf >= min_mass)
            .collect();
        let first = inside.first()?;
        Some(MassWindow {
            k_lo: first.k,
            k_hi: inside.last()?.k,
            points: inside.len(),
            min_ratio: inside
                .iter()
                .filter_map(|p| p.ratio)
                .fold(f64::INFINITY, f64::min),
        })
    }
}

/// Compares `P̂(R > k)` to `P̂(D > βk)` on a grid, and checks `P̂(R > k) <= P̂(D > k)`.
pub fn ratio_bound_report(
    pagerank: &[f64],
    degrees: &[f64],
    beta: f64,
    grid: &[f64],
    tolerance: f64,
) -> Result<RatioReport> {
    if pagerank.is_empty() || degrees.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::BadParameters(format!("beta must be positive, got {beta}")));
    }
    let (r, d) = (sorted_copy(pagerank), sorted_copy(degrees));
    let (nr, nd) = (r.len() as f64, d.len() as f64);
    let mut points = Vec::with_capacity(grid.len());
    let mut denominator_zero = Vec::new();
    let mut upper_bound_violations = 0;
    for &k in grid {
        let above_r = count_above(&r, k);
        let above_d = count_above(&d, k);
        let above_scaled = count_above(&d, beta * k);
        let (pr, pd, ps) = (above_r as f64 / nr, above_d as f64 / nd, above_scaled as f64 / nd);
        let ratio = if above_scaled == 0 {
            denominator_zero.push(k);
            None
        } else {
            Some(pr / ps)
        };
        let upper_bound_holds = pr <= pd;
        if !upper_bound_holds {
            upper_bound_violations += 1;
        }
        points.push(RatioPoint {
            k,
            pagerank_ccdf: pr,
            scaled_degree_ccdf: ps,
            degree_ccdf: pd,
            ratio,
            upper_bound_holds,
        });
    }
    let mut window: Option<(f64, f64)> = None;
    let mut run: Option<(f64, f64)> = None;
    let mut best_len = 0;
    let mut len = 0;
    for p in &points {
        if p.ratio.is_some_and(|x| x >= 1.0 - tolerance) {
            run = Some((run.map_or(p.k, |r| r.0), p.k));
            len += 1;
            if len > best_len {
                best_len = len;
                window = run;
            }
        } else {
            run = None;
            len = 0;
        }
    }
    Ok(RatioReport {
        beta,
        tolerance,
        sample_count: pagerank.len(),
        points,
        denominator_zero,
        window,
        upper_bound_violations,
    })
}

/// `4 E[D] / (c (1 - c))`
pub fn cm_beta_threshold(mean_degree: f64, c: f64) -> f64 {
    4.0 * mean_degree / (c * (1.0 - c))
}

/// `2 ⌈2m + δ⌉ / (c (1 - c))`
pub fn pa_beta_threshold(m: usize, delta: f64, c: f64) -> f64 {
    2.0 * (2.0 * m as f64 + delta).ceil() / (c * (1.0 - c))
}

/// Degree of a root and the degrees of its neighbors, with multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborhoodSample {
    pub degree: usize,
    pub neighbor_degrees: Vec<usize>,
}

impl NeighborhoodSample {
    pub fn from_graph_vertex(graph: &Graph, v: usize) -> NeighborhoodSample {
        NeighborhoodSample {
            degree: graph.degree(v),
            neighbor_degrees: graph.neighbors(v).iter().map(|&u| graph.degree(u)).collect(),
        }
    }

    /// `d^(>= alpha)`: neighbors of degree at least `alpha`.
    pub fn degree_at_least(&self, alpha: f64) -> usize {
        self.neighbor_degrees.iter().filter(|&&d| d as f64 >= alpha).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionProbe {
    pub alpha: f64,
    pub epsilon: f64,
    pub grid: Vec<f64>,
    /// `#{d > k, d^(>= alpha) >= (1 - ε) d}` per grid point.
    pub joint: Vec<usize>,
    /// `#{d > k}` per grid point.
    pub marginal: Vec<usize>,
    pub sample_count: usize,
}

/// Frequency, among roots of degree above `k`, of having almost all neighbors of degree at least `alpha`.
pub fn condition_probe(samples: &[NeighborhoodSample], alpha: f64, epsilon: f64, grid: &[f64]) -> ConditionProbe {
    let mut joint = vec![0; grid.len()];
    let mut marginal = vec![0; grid.len()];
    for s in samples {
        let d = s.degree as f64;
        let concentrated = s.degree_at_least(alpha) as f64 >= (1.0 - epsilon) * d;
        // Grid points strictly below d.
        for (i, &k) in grid.iter().enumerate() {
            if d > k {
                marginal[i] += 1;
                if concentrated {
                    joint[i] += 1;
                }
            }
        }
    }
    ConditionProbe {
        alpha,
        epsilon,
        grid: grid.to_vec(),
        joint,
        marginal,
        sample_count: samples.len(),
    }
}

impl ConditionProbe {
    /// Conditional frequency per grid point; `None` where no root exceeds `k`.
    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.joint
            .iter()
            .zip(&self.marginal)
            .map(|(&j, &m)| (m > 0).then(|| j as f64 / m as f64))
            .collect()
    }

    /// `(k, ratio)` at grid points with at least `min_count` roots above `k`.
    pub fn populated(&self, min_count: usize) -> Vec<(f64, f64)> {
        self.grid
            .iter()
            .zip(self.ratios())
            .zip(&self.marginal)
            .filter(|(_, &m)| m >= min_count && m > 0)
            .map(|((&k, r), _)| (k, r.expect("populated point has a ratio")))
            .collect()
    }

    /// Ratio at the first populated point divided by the ratio at the last one.
    pub fn decay_factor(&self, min_count: usize) -> Option<f64> {
        let pts = self.populated(min_count);
        let (first, last) = (pts.first()?, pts.last()?);
        Some(first.1 / last.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccdf_small_examples() {
        let r = empirical_ccdf(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.ccdf, vec![1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]);
        let r = empirical_ccdf(&[5.0; 4], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.ccdf, vec![1.0, 0.0, 0.0]);
        assert_eq!(empirical_ccdf(&[], &[1.0]), Err(Error::EmptySample));
    }

    #[test]
    fn ccdf_csv() {
        let r = empirical_ccdf(&[1.0, 2.0], &[1.0]).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,ccdf,count\n1,0.5,1\n");
        assert!(r.to_json().contains("\"sample_count\": 2"));
    }

    #[test]
    fn hill_degenerate_and_bounds() {
        assert!(matches!(hill_estimator(&[3.0; 10], 4), Err(Error::InsufficientSample(_))));
        assert!(hill_estimator(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(hill_estimator(&[1.0, 2.0, 3.0], 1).is_err());
        assert!(hill_estimator(&[1.0, -2.0, 3.0, 4.0], 2).is_err());
    }

    #[test]
    fn hill_two_point() {
        // Top value e, threshold 1: mean log-ratio (1 + 0) / 2.
        let e = std::f64::consts::E;
        let h = hill_estimator(&[1.0, 1.0, 1.0, e], 2).unwrap();
        assert!((h.estimate - 2.0).abs() < 1e-12);
        assert!((h.std_error - 2.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_give_unit_ratio() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let rep = ratio_bound_report(&x, &x, 1.0, &integer_grid(98), 0.0).unwrap();
        assert!(rep.points.iter().all(|p| p.ratio == Some(1.0)));
        assert_eq!(rep.window, Some((0.0, 98.0)));
        assert!(rep.upper_bound_holds());
    }

    #[test]
    fn regular_graph_ratio_vanishes() {
        let r = vec![1.0; 50];
        let d = vec![4.0; 50];
        let rep = ratio_bound_report(&r, &d, 1.0, &[1.0, 2.0, 3.0], 0.1).unwrap();
        assert!(rep.points.iter().all(|p| p.ratio == Some(0.0)));
        assert_eq!(rep.window, None);
        let rep = ratio_bound_report(&r, &d, 2.0, &[1.0, 2.0, 3.0], 0.1).unwrap();
        assert_eq!(rep.denominator_zero, vec![2.0, 3.0]);
    }

    #[test]
    fn upper_bound_violation_is_counted() {
        let rep = ratio_bound_report(&[5.0], &[2.0], 1.0, &[1.0, 3.0, 6.0], 0.1).unwrap();
        assert_eq!(rep.upper_bound_violations, 1);
    }

    #[test]
    fn star_center_probe() {
        let s = NeighborhoodSample {
            degree: 4,
            neighbor_degrees: vec![1; 4],
        };
        assert_eq!(s.degree_at_least(2.0), 0);
        let p = condition_probe(&[s], 2.0, 0.4, &[0.0, 3.0, 4.0]);
        assert_eq!(p.marginal, vec![1, 1, 0]);
        assert_eq!(p.joint, vec![0, 0, 0]);
        assert_eq!(p.ratios(), vec![Some(0.0), Some(0.0), None]);
    }

    #[test]
    fn thresholds() {
        assert!((cm_beta_threshold(2.0, 0.5) - 32.0).abs() < 1e-12);
        assert!((pa_beta_threshold(1, 0.0, 0.5) - 16.0).abs() < 1e-12);
        assert!((pa_beta_threshold(2, -0.5, 0.5) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn merged_grid_is_sorted_and_unique() {
        let g = merge_grids(&integer_grid(2), &linear_grid(1.0, 4));
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0, 2.0]);
    }

    #[test]
    fn log_grid_is_increasing() {
        let g = log_grid(1.0, 1000.0, 5);
        assert_eq!(g.first(), Some(&1.0));
        assert_eq!(g.last(), Some(&1000.0));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
