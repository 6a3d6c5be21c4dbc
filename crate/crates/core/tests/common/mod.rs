//! Shared test fixtures: a dense direct solver used as an independent oracle,
//! a corpus of small graphs, and a few statistical helpers.
#![allow(dead_code)]

use prtail::generators::{
    circulant, configuration_model, counterexample_graph, directed_configuration_model, eulerian_digraph,
    preferential_attachment, sample_degrees, DegreeDistribution, DegreeSequence,
};
use prtail::{Digraph, Graph, SeedStream};

/// Solves `x A = b` for a square row-major matrix by Gaussian elimination with
/// partial pivoting on the transposed system.
pub fn solve_left(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    // Rows of the transposed system: sum_i x_i a_ik = b_k.
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut row: Vec<f64> = (0..n).map(|i| a[i][k]).collect();
            row.push(b[k]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-14, "singular system");
        for r in col + 1..n {
            let f = m[r][col] / p;
            if f != 0.0 {
                for k in col..=n {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

/// Dense PageRank: `R (I - c P) = (1 - c) 1` with `P = D^-1 A` built from raw arc
/// multiplicities (`rows[i]` lists the heads of arcs out of `i`).
fn dense_pagerank(n: usize, rows: impl Fn(usize) -> Vec<usize>, c: f64) -> Vec<f64> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        let out = rows(i);
        let d = out.len() as f64;
        for j in out {
            a[i][j] -= c / d;
        }
        a[i][i] += 1.0;
    }
    solve_left(&a, &vec![1.0 - c; n])
}

pub fn dense_undirected(g: &Graph, c: f64) -> Vec<f64> {
    dense_pagerank(g.num_vertices(), |i| g.neighbors(i).to_vec(), c)
}

pub fn dense_directed(g: &Digraph, c: f64) -> Vec<f64> {
    dense_pagerank(g.num_vertices(), |i| g.out_neighbors(i).to_vec(), c)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn star(leaves: usize) -> Graph {
    let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
    Graph::from_edge_list(leaves + 1, &edges).unwrap()
}

pub fn path(n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_edge_list(n, &edges).unwrap()
}

pub fn complete(n: usize) -> Graph {
    let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    Graph::from_edge_list(n, &edges).unwrap()
}

pub fn figure_one_law() -> DegreeDistribution {
    DegreeDistribution::explicit(&[(2, 0.4), (4, 0.32), (6, 0.28)]).unwrap()
}

/// Small undirected graphs, all with at most 50 vertices, covering trees, regular
/// graphs, multigraphs with loops, and samples of every random family.
pub fn undirected_corpus() -> Vec<(String, Graph)> {
    let mut out: Vec<(String, Graph)> = Vec::new();
    for k in [1, 2, 4, 9, 30] {
        out.push((format!("star-{k}"), star(k)));
    }
    for n in [2, 3, 7, 50] {
        out.push((format!("path-{n}"), path(n)));
    }
    for n in [3, 5, 12] {
        out.push((format!("complete-{n}"), complete(n)));
    }
    for (k, n) in [(2, 10), (4, 8), (6, 7), (8, 31), (12, 50)] {
        out.push((format!("circulant-{k}-{n}"), circulant(k, n).unwrap()));
    }
    out.push(("figure-one".into(), counterexample_graph(&figure_one_law(), 25).unwrap().graph));
    out.push(("loop-pair".into(), Graph::from_edge_list(2, &[(0, 0), (0, 1)]).unwrap()));
    out.push((
        "loops-and-parallels".into(),
        Graph::from_edge_list(4, &[(0, 1), (0, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 0)]).unwrap(),
    ));
    out.push((
        "barbell".into(),
        Graph::from_edge_list(8, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3), (3, 4), (4, 5), (5, 6), (5, 7), (6, 7)])
            .unwrap(),
    ));
    let law = DegreeDistribution::power_law(2.5, 1, 20, false).unwrap();
    for s in 0..20 {
        let n = 10 + 2 * s as usize;
        let d = sample_degrees(&law, n, SeedStream::new(s).derive("degrees"));
        out.push((format!("cm-{s}"), configuration_model(&d, SeedStream::new(s).derive("pairing")).unwrap()));
    }
    for (i, (m, delta)) in [(1, 0.0), (2, -1.5), (3, 1.0), (1, -0.5), (4, 0.0)].into_iter().enumerate() {
        for s in 0..4 {
            let seed = SeedStream::new(100 + 10 * i as u64 + s);
            out.push((format!("pa-{m}-{delta}-{s}"), preferential_attachment(20 + 7 * s as usize, m, delta, seed).unwrap()));
        }
    }
    out
}

pub fn directed_corpus() -> Vec<(String, Digraph)> {
    let mut out = Vec::new();
    for n in [1, 2, 5, 17] {
        let arcs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        out.push((format!("cycle-{n}"), Digraph::from_arc_list(n, &arcs).unwrap()));
    }
    let mut star: Vec<_> = (1..6).map(|l| (l, 0)).collect();
    star.push((0, 1));
    out.push(("directed-star".into(), Digraph::from_arc_list(6, &star).unwrap()));
    let law = DegreeDistribution::power_law(2.5, 1, 10, false).unwrap();
    for s in 0..10 {
        let d = sample_degrees(&law, 30, SeedStream::new(s));
        out.push((format!("eulerian-{s}"), eulerian_digraph(&d, SeedStream::new(s).derive("arcs")).unwrap()));
        let ins = sample_degrees(&DegreeDistribution::explicit(&[(1, 0.5), (3, 0.5)]).unwrap(), 40, SeedStream::new(s));
        let mut ins = ins.0;
        // Rebalance so the in-stubs match the 2-out stubs exactly.
        let total: usize = ins.iter().sum();
        let target = 80;
        if total > target {
            let mut excess = total - target;
            for d in ins.iter_mut() {
                while *d > 1 && excess > 0 {
                    *d -= 1;
                    excess -= 1;
                }
            }
        } else {
            ins[0] += target - total;
        }
        out.push((
            format!("two-out-{s}"),
            directed_configuration_model(&[2; 40], &ins, SeedStream::new(s).derive("arcs")).unwrap(),
        ));
    }
    out
}

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 99% critical value of the one-sample KS statistic.
pub fn ks_critical_99(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn eulerian_sequence(n: usize, seed: u64) -> DegreeSequence {
    sample_degrees(&DegreeDistribution::power_law(2.5, 1, n, false).unwrap(), n, SeedStream::new(seed))
}
