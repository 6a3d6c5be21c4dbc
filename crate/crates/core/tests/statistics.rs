//! Monte Carlo checks of the samplers against known laws.

use prtail::generators::{counterexample_graph, preferential_attachment, sample_degrees, DegreeDistribution};
use prtail::graph::uniform_roots;
use prtail::limit_trees::{sample_root_stats, TreeModel, UnimodularSampler};
use prtail::pagerank::solve_power_iteration;
use prtail::tail::{empirical_ccdf, hill_estimator};
use prtail::{Damping, SeedStream, SolverOptions};

/// Exact Pareto draws `u^(-1/alpha)` with tail `P(X > x) = x^-alpha` for `x >= 1`.
pub fn pareto_sample(alpha: f64, n: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = SeedStream::new(seed).rng();
    (0..n).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect()
}

/// `P(Poisson(mu) > k)`.
fn poisson_sf(mu: f64, k: usize) -> f64 {
    let mut term = (-mu).exp();
    let mut cdf = term;
    for i in 1..=k {
        term *= mu / i as f64;
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}

#[test]
fn uniform_root_frequencies() {
    let n = 100_000;
    let draws = 1_000_000;
    let mut counts = vec![0u32; n];
    for v in uniform_roots(n, draws, SeedStream::new(2024)) {
        counts[v] += 1;
    }
    let p = 1.0 / n as f64;
    let mean = draws as f64 * p;
    let sd = (draws as f64 * p * (1.0 - p)).sqrt();
    let outside = counts.iter().filter(|&&c| (c as f64 - mean).abs() > 5.0 * sd).count();
    // Only the upper side of the band is reachable (mean - 5 sd < 0); under the binomial
    // model the number of vertices above it is close to Poisson with mean n * P(count > 25).
    let expected = n as f64 * poisson_sf(mean, (mean + 5.0 * sd).floor() as usize);
    assert!(expected < 2.5);
    assert!(outside <= 9, "{outside} vertices outside the 5-sigma band, expected about {expected:.2}");
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - mean).powi(2) / mean).sum();
    // Chi-square with n - 1 degrees of freedom: mean n - 1, sd sqrt(2(n - 1)).
    assert!((chi2 - (n - 1) as f64).abs() < 5.0 * (2.0 * (n - 1) as f64).sqrt());
}

#[test]
fn sampled_degrees_match_pmf() {
    let n = 100_000;
    let law = DegreeDistribution::power_law(2.5, 2, n, false).unwrap();
    let d = sample_degrees(&law, n, SeedStream::new(5));
    let band = 4.0 / (n as f64).sqrt();
    for k in 2..=10 {
        let freq = d.0.iter().filter(|&&x| x == k).count() as f64 / n as f64;
        assert!((freq - law.pmf(k)).abs() <= band, "k = {k}");
    }
}

#[test]
fn unimodular_root_degree_law() {
    let law = DegreeDistribution::power_law(2.5, 1, 50, false).unwrap();
    let model = TreeModel::Unimodular(UnimodularSampler::new(&law).unwrap());
    let samples = 1_000_000;
    let stats = sample_root_stats(&model, samples, 1, Damping::new(0.85).unwrap(), SeedStream::new(17));
    let band = 4.0 / (samples as f64).sqrt();
    let mut counts = vec![0usize; 51];
    for s in &stats {
        counts[s.root_degree] += 1;
    }
    for (k, &c) in counts.iter().enumerate() {
        assert!((c as f64 / samples as f64 - law.pmf(k)).abs() <= band, "k = {k}");
    }
}

#[test]
fn size_biased_offspring_law() {
    let law = DegreeDistribution::explicit(&[(1, 0.5), (3, 0.5)]).unwrap();
    let sampler = UnimodularSampler::new(&law).unwrap();
    assert_eq!(sampler.size_biased().support(), &[0, 2]);
    assert!((sampler.size_biased().pmf(2) - 0.75).abs() < 1e-15);
}

#[test]
fn pareto_ccdf_within_binomial_bands() {
    let n = 1_000_000;
    let x = pareto_sample(1.5, n, 99);
    let grid: Vec<f64> = (0..=40).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let rep = empirical_ccdf(&x, &grid).unwrap();
    for (&k, &p_hat) in grid.iter().zip(&rep.ccdf) {
        let p = k.powf(-1.5);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p_hat - p).abs() <= 4.0 * sd + 1e-12, "k = {k}");
    }
}

#[test]
fn hill_recovers_pareto_index() {
    let x = pareto_sample(1.5, 100_000, 7);
    let h = hill_estimator(&x, 1000).unwrap();
    assert!((h.estimate - 1.5).abs() <= 0.1, "{h:?}");
    assert!((h.std_error - h.estimate / 1000f64.sqrt()).abs() < 1e-12);
}

#[test]
fn preferential_attachment_tail_index() {
    let n = 100_000;
    let hits = (0..5)
        .filter(|&s| {
            let g = preferential_attachment(n, 2, 0.0, SeedStream::new(300 + s)).unwrap();
            let d: Vec<f64> = g.degrees().iter().map(|&x| x as f64).collect();
            let h = hill_estimator(&d, 1000).unwrap();
            (h.estimate - 2.0).abs() <= 0.3
        })
        .count();
    assert!(hits >= 3, "{hits} of 5 seeds within 0.3 of 2");
}

#[test]
fn counterexample_concentrates_at_one() {
    let law = DegreeDistribution::power_law(2.5, 2, 100_000, true).unwrap();
    let u = counterexample_graph(&law, 100_000).unwrap();
    let r = solve_power_iteration(&u.graph, Damping::new(0.85).unwrap(), &SolverOptions::default()).unwrap();
    let far = r.values.iter().filter(|x| (*x - 1.0).abs() > 0.1).count();
    assert!((far as f64) <= 0.01 * r.len() as f64, "{far} of {}", r.len());
}
