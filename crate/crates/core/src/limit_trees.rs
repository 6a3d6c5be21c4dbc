//! Depth-truncated samples of the two local-limit trees and root PageRank on them.
//!
//! Vertices at the truncation depth are boundary vertices: their degree is
//! sampled but their children are not built. Every walk of length at most `S`
//! that ends at the root only needs degrees of vertices at depth at most `S`,
//! so the truncated Neumann sum is exact.

use std::io::Write;
use std::ops::Range;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{DegreeDistribution, Pmf};
use crate::pagerank::{kahan_sum, Damping};
use crate::rng::{SeedStream, StreamRng};

/// Age label of a non-root vertex in the Pólya point tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    /// Younger than its parent.
    Y,
    /// Older than its parent.
    O,
}

#[derive(Debug, Clone, PartialEq)]
struct Node {
    parent: Option<usize>,
    depth: usize,
    degree: usize,
    first_child: usize,
    child_count: usize,
    age: Option<f64>,
    label: Option<Label>,
}

/// A finite rooted tree in breadth-first arena form. Vertex 0 is the root and the
/// children of every vertex occupy a contiguous id range.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedRootedTree {
    nodes: Vec<Node>,
    max_depth: usize,
}

/// Offspring of one vertex as produced by a sampler.
struct Offspring {
    count: usize,
    /// Age and label per child; empty when the model carries no ages.
    annotations: Vec<(f64, Label)>,
}

impl TruncatedRootedTree {
    /// Grows a tree breadth-first. `offspring(node, materialize)` returns the
    /// children of a vertex; annotations are only needed when `materialize` is set.
    fn grow<F>(max_depth: usize, root_age: Option<f64>, mut offspring: F) -> TruncatedRootedTree
    where
        F: FnMut(&Node, bool) -> Offspring,
    {
        let mut nodes = vec![Node {
            parent: None,
            depth: 0,
            degree: 0,
            first_child: 1,
            child_count: 0,
            age: root_age,
            label: None,
        }];
        let mut v = 0;
        while v < nodes.len() {
            let materialize = nodes[v].depth < max_depth;
            let off = offspring(&nodes[v], materialize);
            let is_root = nodes[v].parent.is_none();
            nodes[v].degree = off.count + usize::from(!is_root);
            if materialize {
                let first = nodes.len();
                nodes[v].first_child = first;
                nodes[v].child_count = off.count;
                let depth = nodes[v].depth + 1;
                for i in 0..off.count {
                    let (age, label) = match off.annotations.get(i) {
                        Some(&(a, l)) => (Some(a), Some(l)),
                        None => (None, None),
                    };
                    nodes.push(Node {
                        parent: Some(v),
                        depth,
                        degree: 0,
                        first_child: 0,
                        child_count: 0,
                        age,
                        label,
                    });
                }
            } else {
                nodes[v].first_child = nodes.len();
            }
            v += 1;
        }
        TruncatedRootedTree { nodes, max_depth }
    }

    /// Builds a tree from child counts listed in breadth-first order, one entry per
    /// vertex including boundary vertices (whose children are not built).
    pub fn from_offspring_counts(counts: &[usize], max_depth: usize) -> Result<TruncatedRootedTree> {
        let mut next = counts.iter();
        let mut missing = false;
        let tree = Self::grow(max_depth, None, |_, _| Offspring {
            count: *next.next().unwrap_or_else(|| {
                missing = true;
                &0
            }),
            annotations: Vec::new(),
        });
        if missing || next.next().is_some() {
            return Err(Error::BadParameters(format!(
                "{} child counts given for a tree with {} vertices",
                counts.len(),
                tree.len()
            )));
        }
        if let Some(v) = (0..tree.len()).find(|&v| tree.degree(v) == 0) {
            return Err(Error::IsolatedVertex(v));
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn root_degree(&self) -> usize {
        self.nodes[0].degree
    }

    pub fn degree(&self, v: usize) -> usize {
        self.nodes[v].degree
    }

    pub fn depth(&self, v: usize) -> usize {
        self.nodes[v].depth
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.nodes[v].parent
    }

    /// Materialized children; empty for boundary vertices.
    pub fn children(&self, v: usize) -> Range<usize> {
        let n = &self.nodes[v];
        n.first_child..n.first_child + n.child_count
    }

    pub fn age(&self, v: usize) -> Option<f64> {
        self.nodes[v].age
    }

    pub fn label(&self, v: usize) -> Option<Label> {
        self.nodes[v].label
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.nodes[v].depth == self.max_depth
    }

    /// Degrees of the root's neighbors.
    pub fn root_neighbor_degrees(&self) -> Vec<usize> {
        self.children(0).map(|u| self.degree(u)).collect()
    }

    /// The same tree cut at a smaller depth, keeping the degrees of the new boundary.
    pub fn truncated(&self, depth: usize) -> TruncatedRootedTree {
        let depth = depth.min(self.max_depth);
        let keep = self.nodes.partition_point(|n| n.depth <= depth);
        let nodes = self.nodes[..keep]
            .iter()
            .map(|n| {
                let mut n = n.clone();
                if n.depth == depth {
                    n.child_count = 0;
                    n.first_child = keep;
                }
                n
            })
            .collect();
        TruncatedRootedTree { nodes, max_depth: depth }
    }

    /// Structural and age-ordering checks; returns a description of the first failure.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for (v, n) in self.nodes.iter().enumerate() {
            if n.degree == 0 {
                return Err(format!("vertex {v} has degree zero"));
            }
            let expected_children = n.degree - usize::from(n.parent.is_some());
            if n.depth < self.max_depth && n.child_count != expected_children {
                return Err(format!("vertex {v} has {} children but degree {}", n.child_count, n.degree));
            }
            if let Some(p) = n.parent {
                if self.nodes[p].depth + 1 != n.depth {
                    return Err(format!("vertex {v} depth does not follow its parent"));
                }
                if !self.children(p).contains(&v) {
                    return Err(format!("vertex {v} is not listed among its parent's children"));
                }
            }
            let parent_age = n.parent.and_then(|p| self.nodes[p].age);
            match (n.label, n.age, parent_age) {
                (Some(Label::O), Some(a), Some(pa)) if !(a < pa) => {
                    return Err(format!("older child {v} has age {a} not below parent age {pa}"));
                }
                (Some(Label::Y), Some(a), Some(pa)) if !(pa <= a && a <= 1.0) => {
                    return Err(format!("younger child {v} has age {a} outside [{pa}, 1]"));
                }
                _ => {}
            }
            let young: Vec<f64> = self
                .children(v)
                .filter(|&u| self.nodes[u].label == Some(Label::Y))
                .filter_map(|u| self.nodes[u].age)
                .collect();
            if young.windows(2).any(|w| w[0] > w[1]) {
                return Err(format!("younger children of {v} are not in age order"));
            }
        }
        Ok(())
    }
}

/// Offspring sampler for the local limit of the configuration model.
#[derive(Debug, Clone)]
pub struct UnimodularSampler {
    root: Pmf,
    size_biased: Pmf,
}

impl UnimodularSampler {
    pub fn new(p: &DegreeDistribution) -> Result<UnimodularSampler> {
        Ok(UnimodularSampler {
            root: p.as_pmf().clone(),
            size_biased: p.as_pmf().size_biased()?,
        })
    }

    pub fn size_biased(&self) -> &Pmf {
        &self.size_biased
    }

    /// Expected number of vertices of a tree truncated at `depth`.
    pub fn expected_size(&self, depth: usize) -> f64 {
        let (root, offspring) = (self.root.mean(), self.size_biased.mean());
        let mut generation = root;
        let mut total = 1.0;
        for _ in 0..depth {
            total += generation;
            generation *= offspring;
        }
        total
    }

    pub fn sample(&self, depth: usize, seed: SeedStream) -> TruncatedRootedTree {
        let mut rng = seed.rng();
        TruncatedRootedTree::grow(depth, None, |node, _| {
            let law = if node.parent.is_none() { &self.root } else { &self.size_biased };
            Offspring {
                count: law.sample(&mut rng),
                annotations: Vec::new(),
            }
        })
    }
}

/// Root offspring from `p`, later generations from the size-biased law.
pub fn sample_unimodular_tree(p: &DegreeDistribution, depth: usize, seed: SeedStream) -> Result<TruncatedRootedTree> {
    Ok(UnimodularSampler::new(p)?.sample(depth, seed))
}

/// Parameters of the preferential-attachment limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyaParams {
    m: usize,
    delta: f64,
}

impl PolyaParams {
    pub fn new(m: usize, delta: f64) -> Result<PolyaParams> {
        if m == 0 || !delta.is_finite() || delta <= -(m as f64) {
            return Err(Error::BadParameters(format!("need m >= 1 and delta > -m, got m = {m}, delta = {delta}")));
        }
        Ok(PolyaParams { m, delta })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(m + delta) / (2m + delta)`
    pub fn chi(&self) -> f64 {
        let m = self.m as f64;
        (m + self.delta) / (2.0 * m + self.delta)
    }

    /// `3 + delta / m`
    pub fn tau(&self) -> f64 {
        3.0 + self.delta / self.m as f64
    }

    /// Inverse CDF of the younger-child age law on `[t, 1]` with density
    /// `x^(1/(tau-1) - 1) / ((tau - 1)(1 - t^(1/(tau-1))))`.
    pub fn younger_age_quantile(&self, t: f64, u: f64) -> f64 {
        let e = self.tau() - 1.0;
        let lo = t.powf(1.0 / e);
        (lo + u * (1.0 - lo)).powf(e)
    }

    /// CDF of the same law.
    pub fn younger_age_cdf(&self, t: f64, x: f64) -> f64 {
        let inv = 1.0 / (self.tau() - 1.0);
        let lo = t.powf(inv);
        ((x.clamp(t, 1.0).powf(inv) - lo) / (1.0 - lo)).clamp(0.0, 1.0)
    }

    fn strength(&self, label: Option<Label>, rng: &mut StreamRng) -> f64 {
        let shape = self.m as f64 + self.delta + if label == Some(Label::O) { 1.0 } else { 0.0 };
        Gamma::new(shape, 1.0).expect("shape is positive").sample(rng)
    }
}

fn poisson_count(mean: f64, rng: &mut StreamRng) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(p) => p.sample(rng) as usize,
        // Beyond the sampler's range the relative fluctuation is below 1e-7.
        Err(_) => mean.min(usize::MAX as f64) as usize,
    }
}

/// Samples the Pólya point tree to the given depth.
///
/// Every vertex `w` with age `a` gets `m` older children (`m - 1` when labelled
/// `Y`) with ages `U^chi a`, and a Poisson number of younger children with mean
/// `Gamma_w (1 - a^(1/(tau-1))) / a^(1/(tau-1))`, whose ages are i.i.d. from the
/// younger-age law and listed in increasing order.
pub fn sample_polya_point_tree(params: PolyaParams, depth: usize, seed: SeedStream) -> TruncatedRootedTree {
    let mut rng = seed.rng();
    // 1 - U lies in (0, 1], so ages are never zero.
    let root_age = 1.0 - rng.random::<f64>();
    let chi = params.chi();
    let inv = 1.0 / (params.tau() - 1.0);
    TruncatedRootedTree::grow(depth, Some(root_age), |node, materialize| {
        let age = node.age.expect("every Pólya vertex has an age");
        let older = if node.label == Some(Label::Y) { params.m - 1 } else { params.m };
        let gamma = params.strength(node.label, &mut rng);
        let scale = age.powf(inv);
        let younger = poisson_count(gamma * (1.0 - scale) / scale, &mut rng);
        let mut annotations = Vec::new();
        if materialize {
            annotations.reserve(older + younger);
            for _ in 0..older {
                let u = 1.0 - rng.random::<f64>();
                annotations.push((u.powf(chi) * age, Label::O));
            }
            let start = annotations.len();
            for _ in 0..younger {
                let u: f64 = rng.random();
                annotations.push((params.younger_age_quantile(age, u), Label::Y));
            }
            annotations[start..].sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        Offspring {
            count: older + younger,
            annotations,
        }
    })
}

/// `P(d = n) = (m + delta) / ((n + delta)(n + delta + 1))` for `n >= m`.
pub fn tilde_degree_pmf(params: PolyaParams, n: usize) -> Result<f64> {
    if n < params.m {
        return Err(Error::BadParameters(format!("degree {n} is below m = {}", params.m)));
    }
    let (a, x) = (params.m as f64 + params.delta, n as f64 + params.delta);
    Ok(a / (x * (x + 1.0)))
}

/// `P(d >= t) = (m + delta) / (t + delta)` for `t >= m`.
pub fn tilde_degree_tail(params: PolyaParams, t: usize) -> Result<f64> {
    if t < params.m {
        return Err(Error::BadParameters(format!("threshold {t} is below m = {}", params.m)));
    }
    Ok((params.m as f64 + params.delta) / (t as f64 + params.delta))
}

/// Root PageRank of a truncated tree with its certified truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreePageRank {
    /// `(1 - c) sum_{s <= S} c^s x_s(root)`.
    pub lower: f64,
    /// `c^(S+1) d_root`, an upper bound on the omitted terms.
    pub tail_bound: f64,
    pub depth: usize,
}

impl TreePageRank {
    pub fn upper(&self) -> f64 {
        self.lower + self.tail_bound
    }
}

/// Walk masses `x_s(root) = sum_j (P^s)_{j, root}` for `s = 0..=depth`.
pub fn root_walk_masses(tree: &TruncatedRootedTree, depth: usize) -> Vec<f64> {
    let depth = depth.min(tree.max_depth);
    let n = tree.nodes.partition_point(|v| v.depth <= depth);
    let mut x = vec![1.0f64; n];
    let mut next = vec![0.0f64; n];
    let mut out = Vec::with_capacity(depth + 1);
    out.push(1.0);
    for s in 1..=depth {
        // After step s only vertices within distance depth - s of the root are still needed.
        let live = tree.nodes.partition_point(|v| v.depth <= depth - s);
        for v in 0..live {
            let node = &tree.nodes[v];
            let mut acc = kahan_sum(tree.children(v).map(|u| x[u] / tree.nodes[u].degree as f64));
            if let Some(p) = node.parent {
                acc += x[p] / tree.nodes[p].degree as f64;
            }
            next[v] = acc;
        }
        std::mem::swap(&mut x, &mut next);
        out.push(x[0]);
    }
    out
}

/// Truncated root PageRank using walks of length at most `depth` (capped at the tree depth).
pub fn root_pagerank_at_depth(tree: &TruncatedRootedTree, c: Damping, depth: usize) -> TreePageRank {
    let c = c.value();
    let masses = root_walk_masses(tree, depth);
    let s = masses.len() - 1;
    let lower = (1.0 - c) * kahan_sum(masses.iter().enumerate().map(|(i, &x)| c.powi(i as i32) * x));
    TreePageRank {
        lower,
        tail_bound: c.powi(s as i32 + 1) * tree.root_degree() as f64,
        depth: s,
    }
}

pub fn root_pagerank_on_tree(tree: &TruncatedRootedTree, c: Damping) -> TreePageRank {
    root_pagerank_at_depth(tree, c, tree.max_depth)
}

/// Which limit tree a Monte Carlo farm draws from.
#[derive(Debug, Clone)]
pub enum TreeModel {
    Unimodular(UnimodularSampler),
    Polya(PolyaParams),
}

impl TreeModel {
    pub fn sample(&self, depth: usize, seed: SeedStream) -> TruncatedRootedTree {
        match self {
            TreeModel::Unimodular(s) => s.sample(depth, seed),
            TreeModel::Polya(p) => sample_polya_point_tree(*p, depth, seed),
        }
    }
}

/// Per-sample root statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootStats {
    pub sample_id: u64,
    pub root_degree: usize,
    pub root_pagerank_lower: f64,
    pub tail_bound: f64,
    pub neighbor_degrees: Vec<usize>,
}

/// Samples `count` trees on disjoint seed sub-streams, in parallel, and returns
/// their root statistics in sample order.
pub fn sample_root_stats(model: &TreeModel, count: u64, depth: usize, c: Damping, seed: SeedStream) -> Vec<RootStats> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let tree = model.sample(depth, seed.index(i));
            let pr = root_pagerank_on_tree(&tree, c);
            RootStats {
                sample_id: i,
                root_degree: tree.root_degree(),
                root_pagerank_lower: pr.lower,
                tail_bound: pr.tail_bound,
                neighbor_degrees: tree.root_neighbor_degrees(),
            }
        })
        .collect()
}

pub fn write_root_stats_csv<W: Write>(stats: &[RootStats], mut w: W) -> std::io::Result<()> {
    writeln!(w, "sample_id,root_degree,root_pagerank_lower,tail_bound")?;
    for s in stats {
        writeln!(w, "{},{},{},{}", s.sample_id, s.root_degree, s.root_pagerank_lower, s.tail_bound)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Damping {
        Damping::new(x).unwrap()
    }

    #[test]
    fn depth_zero_is_teleport_mass() {
        let tree = TruncatedRootedTree::from_offspring_counts(&[3, 0, 2, 1], 1).unwrap();
        assert_eq!(root_pagerank_at_depth(&tree, c(0.85), 0).lower, 1.0 - 0.85);
    }

    #[test]
    fn star_first_term() {
        let k = 5;
        let tree = TruncatedRootedTree::from_offspring_counts(&[k, 0, 0, 0, 0, 0], 1).unwrap();
        assert_eq!(root_walk_masses(&tree, 1), vec![1.0, k as f64]);
        let pr = root_pagerank_on_tree(&tree, c(0.5));
        assert!((pr.lower - (0.5 + 0.5 * 0.5 * k as f64)).abs() < 1e-15);
        assert_eq!(pr.tail_bound, 0.25 * k as f64);
    }

    #[test]
    fn offspring_count_mismatch() {
        assert!(TruncatedRootedTree::from_offspring_counts(&[2, 0], 1).is_err());
        assert!(TruncatedRootedTree::from_offspring_counts(&[1, 0, 0], 1).is_err());
        assert_eq!(
            TruncatedRootedTree::from_offspring_counts(&[0], 1),
            Err(Error::IsolatedVertex(0))
        );
    }

    #[test]
    fn path_tree_is_regular() {
        let p = DegreeDistribution::explicit(&[(2, 1.0)]).unwrap();
        let tree = sample_unimodular_tree(&p, 20, SeedStream::new(1)).unwrap();
        assert_eq!(tree.len(), 41);
        assert!((0..tree.len()).all(|v| tree.degree(v) == 2));
        let pr = root_pagerank_on_tree(&tree, c(0.5));
        assert!(pr.lower <= 1.0 && 1.0 <= pr.upper());
        assert!((pr.lower - (1.0 - 0.5f64.powi(21))).abs() < 1e-12);
    }

    #[test]
    fn expected_size_of_binary_tree() {
        let p = DegreeDistribution::explicit(&[(3, 1.0)]).unwrap();
        let s = UnimodularSampler::new(&p).unwrap();
        assert_eq!(s.expected_size(0), 1.0);
        assert_eq!(s.expected_size(3), 1.0 + 3.0 + 6.0 + 12.0);
        assert_eq!(s.sample(3, SeedStream::new(0)).len(), 22);
    }

    #[test]
    fn truncation_is_prefix_stable() {
        let p = DegreeDistribution::power_law(2.5, 1, 50, false).unwrap();
        let tree = sample_unimodular_tree(&p, 6, SeedStream::new(3)).unwrap();
        let full = root_walk_masses(&tree, 6);
        for s in 0..=6 {
            let cut = tree.truncated(s);
            assert_eq!(root_walk_masses(&cut, s), full[..=s].to_vec());
        }
    }

    #[test]
    fn polya_parameters() {
        let p = PolyaParams::new(1, 0.0).unwrap();
        assert_eq!(p.tau(), 3.0);
        assert_eq!(p.chi(), 0.5);
        assert!(PolyaParams::new(2, -2.0).is_err());
        assert!(PolyaParams::new(0, 1.0).is_err());
    }

    #[test]
    fn polya_root_structure() {
        let p = PolyaParams::new(1, 0.0).unwrap();
        for s in 0..200 {
            let tree = sample_polya_point_tree(p, 3, SeedStream::new(s));
            tree.check_invariants().unwrap();
            let older: Vec<_> = tree.children(0).filter(|&u| tree.label(u) == Some(Label::O)).collect();
            assert_eq!(older.len(), 1);
            assert!(tree.age(older[0]).unwrap() < tree.age(0).unwrap());
        }
    }

    #[test]
    fn younger_age_law_roundtrip() {
        let p = PolyaParams::new(2, 1.0).unwrap();
        for &t in &[0.01, 0.3, 0.9] {
            assert!((p.younger_age_quantile(t, 0.0) - t).abs() < 1e-15);
            assert!((p.younger_age_quantile(t, 1.0) - 1.0).abs() < 1e-15);
            for &u in &[0.1, 0.5, 0.77] {
                let x = p.younger_age_quantile(t, u);
                assert!((p.younger_age_cdf(t, x) - u).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dominating_pmf_values() {
        let p = PolyaParams::new(1, 0.0).unwrap();
        assert_eq!(tilde_degree_pmf(p, 1).unwrap(), 0.5);
        assert_eq!(tilde_degree_tail(p, 4).unwrap(), 0.25);
        let q = PolyaParams::new(3, 0.5).unwrap();
        assert!(tilde_degree_pmf(q, 2).is_err());
        assert!(tilde_degree_tail(q, 2).is_err());
        let cutoff = 100_000;
        let head = kahan_sum((3..cutoff).map(|n| tilde_degree_pmf(q, n).unwrap()));
        assert!((head + tilde_degree_tail(q, cutoff).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn root_stats_csv_and_determinism() {
        let model = TreeModel::Polya(PolyaParams::new(1, 0.0).unwrap());
        let a = sample_root_stats(&model, 50, 3, c(0.85), SeedStream::new(8));
        let b = sample_root_stats(&model, 50, 3, c(0.85), SeedStream::new(8));
        assert_eq!(a, b);
        let mut buf = Vec::new();
        write_root_stats_csv(&a[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sample_id,root_degree,root_pagerank_lower,tail_bound\n0,"));
    }
}
