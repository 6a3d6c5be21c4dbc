//! Graph families: configuration model, preferential attachment, circulant graphs
//! and their connected unions, plus directed configuration models.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Digraph, Graph};
use crate::pagerank::kahan_sum;
use crate::rng::SeedStream;

/// A probability mass function on the nonnegative integers with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    support: Vec<usize>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Pmf {
    /// Builds a pmf from `(value, weight)` pairs. Weights are normalized; zero weights are dropped.
    pub fn from_weights(weights: impl IntoIterator<Item = (usize, f64)>) -> Result<Pmf> {
        let mut pairs: Vec<(usize, f64)> = weights.into_iter().collect();
        if let Some(&(k, w)) = pairs.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::BadParameters(format!("weight {w} for value {k} is not a nonnegative number")));
        }
        pairs.retain(|&(_, w)| w > 0.0);
        pairs.sort_by_key(|&(k, _)| k);
        pairs.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let total = kahan_sum(pairs.iter().map(|&(_, w)| w));
        if pairs.is_empty() || total <= 0.0 {
            return Err(Error::BadParameters("pmf has no mass".into()));
        }
        let support: Vec<usize> = pairs.iter().map(|&(k, _)| k).collect();
        let probs: Vec<f64> = pairs.iter().map(|&(_, w)| w / total).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let (mut s, mut comp) = (0.0f64, 0.0f64);
        for &p in &probs {
            let y = p - comp;
            let t = s + y;
            comp = (t - s) - y;
            s = t;
            cumulative.push(s);
        }
        Ok(Pmf {
            support,
            probs,
            cumulative,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.support
            .binary_search(&k)
            .map_or(0.0, |i| self.probs[i])
    }

    /// `P(X > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        let idx = self.support.partition_point(|&k| (k as f64) <= x);
        kahan_sum(self.probs[idx..].iter().copied())
    }

    pub fn mean(&self) -> f64 {
        kahan_sum(self.support.iter().zip(&self.probs).map(|(&k, &p)| k as f64 * p))
    }

    pub fn max_value(&self) -> usize {
        *self.support.last().expect("pmf support is nonempty")
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.probs.iter().copied())
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.support[idx.min(self.support.len() - 1)]
    }

    /// `p*_k = (k + 1) p_{k+1} / E[X]`, the offspring law seen along an edge.
    pub fn size_biased(&self) -> Result<Pmf> {
        let mean = self.mean();
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::InfiniteMean);
        }
        Pmf::from_weights(
            self.support
                .iter()
                .zip(&self.probs)
                .filter(|(&k, _)| k >= 1)
                .map(|(&k, &p)| (k - 1, k as f64 * p / mean)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    Explicit,
    PowerLaw {
        tau: f64,
        k_min: usize,
        k_max: usize,
        even_only: bool,
    },
}

/// Degree law on the positive integers.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    kind: DistributionKind,
    pmf: Pmf,
}

impl DegreeDistribution {
    /// Explicit pmf. The masses must already sum to one (within `1e-9`).
    pub fn explicit(masses: &[(usize, f64)]) -> Result<DegreeDistribution> {
        if let Some(&(k, _)) = masses.iter().find(|(k, p)| *k == 0 && *p > 0.0) {
            return Err(Error::BadParameters(format!("degree {k} is not positive")));
        }
        let total: f64 = masses.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::BadParameters(format!("pmf sums to {total}, not 1")));
        }
        Ok(DegreeDistribution {
            kind: DistributionKind::Explicit,
            pmf: Pmf::from_weights(masses.iter().copied())?,
        })
    }

    /// `p_k ∝ k^(-tau)` on `[k_min, k_max]`, optionally restricted to even `k`.
    pub fn power_law(tau: f64, k_min: usize, k_max: usize, even_only: bool) -> Result<DegreeDistribution> {
        if !(tau > 1.0 && tau.is_finite()) {
            return Err(Error::BadParameters(format!("power-law exponent must exceed 1, got {tau}")));
        }
        if k_min == 0 || k_max < k_min {
            return Err(Error::BadParameters(format!("bad support [{k_min}, {k_max}]")));
        }
        let weights = (k_min..=k_max)
            .filter(|k| !even_only || k % 2 == 0)
            .map(|k| (k, (k as f64).powf(-tau)));
        let pmf = Pmf::from_weights(weights)
            .map_err(|_| Error::BadParameters(format!("no admissible degree in [{k_min}, {k_max}]")))?;
        Ok(DegreeDistribution {
            kind: DistributionKind::PowerLaw {
                tau,
                k_min,
                k_max,
                even_only,
            },
            pmf,
        })
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn as_pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.pmf(k)
    }

    pub fn mean(&self) -> f64 {
        self.pmf.mean()
    }

    pub fn support(&self) -> &[usize] {
        self.pmf.support()
    }

    pub fn has_even_support(&self) -> bool {
        self.support().iter().all(|k| k % 2 == 0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.pmf.sample(rng)
    }
}

/// Per-vertex prescribed degrees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeSequence(pub Vec<usize>);

impl DegreeSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn stub_count(&self) -> u64 {
        self.0.iter().map(|&d| d as u64).sum()
    }

    pub fn mean(&self) -> f64 {
        self.stub_count() as f64 / self.len() as f64
    }
}

/// I.i.d. degrees; when the total is odd the last entry is bumped by one.
pub fn sample_degrees(dist: &DegreeDistribution, n: usize, seed: SeedStream) -> DegreeSequence {
    let mut rng = seed.rng();
    let mut d: Vec<usize> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    if d.iter().map(|&x| x as u64).sum::<u64>() % 2 == 1 {
        if let Some(last) = d.last_mut() {
            *last += 1;
        }
    }
    DegreeSequence(d)
}

/// Degrees with counts fixed at `n p_k` (largest-remainder rounding), in random order.
///
/// Unlike [`sample_degrees`] the empirical law matches `p` up to one vertex per
/// support point, which is what balanced directed constructions need.
pub fn stratified_degrees(dist: &DegreeDistribution, n: usize, seed: SeedStream) -> DegreeSequence {
    let pmf = dist.as_pmf();
    let exact: Vec<f64> = pmf.probabilities().iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let missing = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle().take(missing) {
        counts[i] += 1;
    }
    let mut d: Vec<usize> = pmf
        .support()
        .iter()
        .zip(&counts)
        .flat_map(|(&k, &c)| std::iter::repeat_n(k, c))
        .collect();
    d.shuffle(&mut seed.rng());
    DegreeSequence(d)
}

fn stubs(degrees: &[usize]) -> Vec<usize> {
    let mut s = Vec::with_capacity(degrees.iter().sum());
    for (v, &d) in degrees.iter().enumerate() {
        s.extend(std::iter::repeat_n(v, d));
    }
    s
}

/// Uniform perfect matching of half-edges. Self-loops and parallel edges are kept.
pub fn configuration_model(degrees: &DegreeSequence, seed: SeedStream) -> Result<Graph> {
    let total = degrees.stub_count();
    if total % 2 == 1 {
        return Err(Error::OddStubCount(total));
    }
    let mut half_edges = stubs(&degrees.0);
    half_edges.shuffle(&mut seed.rng());
    let edges: Vec<(usize, usize)> = half_edges.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    Graph::from_edge_list(degrees.len(), &edges)
}

/// Pairs out-stubs with in-stubs uniformly at random.
pub fn directed_configuration_model(out_degrees: &[usize], in_degrees: &[usize], seed: SeedStream) -> Result<Digraph> {
    if out_degrees.len() != in_degrees.len() {
        return Err(Error::BadParameters("in- and out-degree sequences differ in length".into()));
    }
    let (outs, ins): (usize, usize) = (out_degrees.iter().sum(), in_degrees.iter().sum());
    if outs != ins {
        return Err(Error::BadParameters(format!("{outs} out-stubs cannot pair with {ins} in-stubs")));
    }
    let tails = stubs(out_degrees);
    let mut heads = stubs(in_degrees);
    heads.shuffle(&mut seed.rng());
    let arcs: Vec<(usize, usize)> = tails.into_iter().zip(heads).collect();
    Digraph::from_arc_list(out_degrees.len(), &arcs)
}

/// Random Eulerian multigraph: every vertex gets `d_i` out-stubs and `d_i` in-stubs.
pub fn eulerian_digraph(degrees: &DegreeSequence, seed: SeedStream) -> Result<Digraph> {
    if let Some(v) = degrees.0.iter().position(|&d| d == 0) {
        return Err(Error::IsolatedVertex(v));
    }
    directed_configuration_model(&degrees.0, &degrees.0, seed)
}

/// Preferential attachment without self-loops, updating the attachment law after
/// every edge.
///
/// Starts from two vertices joined by `m` parallel edges. Each arriving vertex
/// sends `m` edges one at a time; the `(j + 1)`-th lands on existing vertex `i`
/// with probability `(D_i + delta) / (2m(t - 1) + j + delta t)` where `t` is the
/// number of existing vertices and `D_i` already counts the first `j` edges.
pub fn preferential_attachment(n: usize, m: usize, delta: f64, seed: SeedStream) -> Result<Graph> {
    if n < 2 || m < 1 || !(delta > -(m as f64)) || !delta.is_finite() {
        return Err(Error::BadParameters(format!(
            "preferential attachment needs n >= 2, m >= 1 and delta > -m (got n = {n}, m = {m}, delta = {delta})"
        )));
    }
    let mut rng = seed.rng();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(m * (n - 1));
    edges.extend(std::iter::repeat_n((0, 1), m));
    // Every existing vertex has degree >= m, so D_i + delta = (D_i - m) + (m + delta) with both
    // parts nonnegative. `excess` lists each vertex once per edge it received beyond its first m.
    let mut excess: Vec<usize> = Vec::with_capacity(m * n);
    let base = m as f64 + delta;
    for t in 2..n {
        for _ in 0..m {
            let excess_mass = excess.len() as f64;
            let total = excess_mass + base * t as f64;
            let target = if rng.random::<f64>() * total < excess_mass {
                excess[rng.random_range(0..excess.len())]
            } else {
                rng.random_range(0..t)
            };
            edges.push((t, target));
            excess.push(target);
        }
    }
    Graph::from_edge_list(n, &edges)
}

/// The `k`-regular circulant graph on `Z_n`: `i ~ i ± 1, ..., i ± k/2`.
pub fn circulant(k: usize, n: usize) -> Result<Graph> {
    Graph::from_edge_list(n, &circulant_edges(k, n, 0)?)
}

fn circulant_edges(k: usize, n: usize, offset: usize) -> Result<Vec<(usize, usize)>> {
    if k < 2 || k % 2 == 1 || k >= n {
        return Err(Error::BadParameters(format!(
            "circulant graph needs an even degree 2 <= k < n (got k = {k}, n = {n})"
        )));
    }
    Ok((0..n)
        .flat_map(|i| (1..=k / 2).map(move |s| (offset + i, offset + (i + s) % n)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CirculantComponent {
    pub degree: usize,
    pub size: usize,
    /// Id of the component's vertex 0 in the union.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirculantUnion {
    pub graph: Graph,
    pub components: Vec<CirculantComponent>,
    /// Largest component degree `M_n`.
    pub max_degree: usize,
    pub bridges: Vec<(usize, usize)>,
}

impl CirculantUnion {
    pub fn component_of(&self, v: usize) -> &CirculantComponent {
        let idx = self.components.partition_point(|c| c.offset <= v) - 1;
        &self.components[idx]
    }
}

/// Component schedule: degrees in increasing order with sizes `⌊n p_k⌋`, stopping
/// at the first degree whose size would be below `k + 1` and after at most
/// `⌊log2 n⌋` components.
pub fn circulant_schedule(p: &DegreeDistribution, n: usize) -> Result<Vec<(usize, usize)>> {
    if !p.has_even_support() {
        return Err(Error::BadParameters("odd degree in support".into()));
    }
    let cap = (n.max(1) as f64).log2().floor() as usize;
    let mut schedule = Vec::new();
    for &k in p.support() {
        // The relative nudge keeps products like 25 * 0.28 from rounding below an integer.
        let size = (n as f64 * p.pmf(k) * (1.0 + 1e-12)).floor() as usize;
        if size < k + 1 || schedule.len() >= cap {
            break;
        }
        schedule.push((k, size));
    }
    if schedule.is_empty() {
        return Err(Error::UnreachableSchedule { n });
    }
    Ok(schedule)
}

/// Disjoint union of circulant graphs `G(k, ⌊n p_k⌋)`. Every vertex has PageRank exactly one.
pub fn circulant_union(p: &DegreeDistribution, n: usize) -> Result<CirculantUnion> {
    build_union(p, n, false)
}

/// The connected counterexample: the circulant union with consecutive components
/// (in increasing degree order) joined by one bridge edge each.
///
/// The bridge from component `i` leaves at its local vertex 1 and enters
/// component `i + 1` at local vertex 0, so no vertex carries two bridges.
pub fn counterexample_graph(p: &DegreeDistribution, n: usize) -> Result<CirculantUnion> {
    build_union(p, n, true)
}

fn build_union(p: &DegreeDistribution, n: usize, connect: bool) -> Result<CirculantUnion> {
    let schedule = circulant_schedule(p, n)?;
    let mut components = Vec::with_capacity(schedule.len());
    let mut edges = Vec::new();
    let mut offset = 0;
    for &(degree, size) in &schedule {
        edges.extend(circulant_edges(degree, size, offset)?);
        components.push(CirculantComponent { degree, size, offset });
        offset += size;
    }
    let bridges: Vec<(usize, usize)> = if connect {
        components
            .windows(2)
            .map(|w| (w[0].offset + 1, w[1].offset))
            .collect()
    } else {
        Vec::new()
    };
    edges.extend_from_slice(&bridges);
    Ok(CirculantUnion {
        graph: Graph::from_edge_list(offset, &edges)?,
        max_degree: schedule.last().map_or(0, |&(k, _)| k),
        components,
        bridges,
    })
}
