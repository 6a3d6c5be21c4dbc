//! Graph-normalized PageRank: solvers for `R = c R P + (1 - c) 1` and the degree
//! bound checkers.
//!
//! Transition weights are `p_ij = a_ij / d_i` (undirected) or `a_ij / d_i^+`
//! (directed). Every solver works in "pull" form: entry `k` of `x P` is a sum
//! over the slots pointing into `k`, so each output entry is computed by one
//! sequential loop and the parallel matvec is bit-identical to the serial one.
//!
//! Fixed-point solvers stop once the L1 residual of the returned iterate,
//! bounded by `c * ||R_{t+1} - R_t||_1`, drops below the tolerance. The L1
//! distance to the exact solution is then at most `residual / (1 - c)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Digraph, Graph};

/// Damping factor `c`, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Damping(f64);

impl Damping {
    pub fn new(c: f64) -> Result<Damping> {
        if c > 0.0 && c < 1.0 {
            Ok(Damping(c))
        } else {
            Err(Error::InvalidDamping(c))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Damping {
    type Error = Error;
    fn try_from(c: f64) -> Result<Self> {
        Damping::new(c)
    }
}

impl From<Damping> for f64 {
    fn from(c: Damping) -> f64 {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PowerIteration,
    Neumann { depth: usize },
    UndirectedClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRankVector {
    pub values: Vec<f64>,
    pub damping: Damping,
    pub method: Method,
    /// Upper bound on the L1 fixed-point residual `||R - (c R P + (1 - c) 1)||_1`.
    /// For the Neumann solver this is the exact truncated mass `n c^(S+1)`.
    pub residual: f64,
    pub iterations: usize,
}

impl PageRankVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mass(&self) -> f64 {
        kahan_sum(self.values.iter().copied())
    }

    /// Upper bound on the L1 distance to the exact solution.
    pub fn error_bound(&self) -> f64 {
        match self.method {
            Method::Neumann { .. } => self.residual,
            _ => self.residual / (1.0 - self.damping.value()),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `vertex,degree,pagerank`
    pub fn write_csv<W: Write>(&self, graph: &Graph, mut w: W) -> std::io::Result<()> {
        writeln!(w, "vertex,degree,pagerank")?;
        for (v, r) in self.values.iter().enumerate() {
            writeln!(w, "{v},{},{r}", graph.degree(v))?;
        }
        Ok(())
    }

    /// `vertex,degree,pagerank,in_degree,out_degree`, with `degree = in + out`.
    pub fn write_directed_csv<W: Write>(&self, digraph: &Digraph, mut w: W) -> std::io::Result<()> {
        writeln!(w, "vertex,degree,pagerank,in_degree,out_degree")?;
        for (v, r) in self.values.iter().enumerate() {
            let (din, dout) = (digraph.in_degree(v), digraph.out_degree(v));
            writeln!(w, "{v},{},{r},{din},{dout}", din + dout)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    /// `None` picks an a priori bound from the contraction rate.
    pub max_iter: Option<usize>,
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: None,
            parallel: false,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

/// Rounding floor for the L1 residual of a vector of total mass `n`.
///
/// Each update injects rounding noise of relative size `ε` per entry, and modes of
/// `P` near `-1` (bipartite graphs) keep it alive for about `1 / (1 - c)` steps,
/// so residuals below this level are not reliably reachable.
pub fn rounding_floor(n: usize, c: f64) -> f64 {
    64.0 * f64::EPSILON * n as f64 / (1.0 - c)
}

fn effective_tol(tol: f64, n: usize, c: f64) -> f64 {
    tol.max(rounding_floor(n, c))
}

fn default_max_iter(c: f64, tol: f64, n: usize) -> usize {
    // ||R_{t+1} - R_t||_1 <= c^t * 2cn and the residual check needs c * delta <= tol.
    let target = tol / (2.0 * c * c * n as f64);
    ((target.ln() / c.ln()).ceil().max(1.0) as usize) + 16
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::BadParameters(format!("tolerance must be positive, got {tol}")))
    }
}

/// One pull-style update `next[k] = base(k) + c * scale(k) * sum_{j in rows(k)} x[j]`.
fn pull_step<'a, R, B, S>(x: &[f64], next: &mut [f64], c: f64, rows: R, base: B, scale: S, parallel: bool)
where
    R: Fn(usize) -> &'a [usize] + Sync,
    B: Fn(usize) -> f64 + Sync,
    S: Fn(usize) -> f64 + Sync,
{
    let kernel = |(k, out): (usize, &mut f64)| {
        let mut acc = 0.0;
        for &j in rows(k) {
            acc += x[j];
        }
        *out = base(k) + c * scale(k) * acc;
    };
    if parallel {
        next.par_iter_mut().enumerate().for_each(kernel);
    } else {
        next.iter_mut().enumerate().for_each(kernel);
    }
}

fn weighted_l1_diff(a: &[f64], b: &[f64], weight: impl Fn(usize) -> f64) -> f64 {
    kahan_sum(a.iter().zip(b).enumerate().map(|(i, (x, y))| weight(i) * (x - y).abs()))
}

pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Iterates `R <- c R P + (1 - c) 1` where entry `k` pulls `R_j / d_j` over `rows(k)`.
fn fixed_point<'a, R>(
    n: usize,
    inv_out: &[f64],
    rows: R,
    c: Damping,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, f64, usize)>
where
    R: Fn(usize) -> &'a [usize] + Sync,
{
    check_tol(opts.tol)?;
    let c = c.value();
    let tol = effective_tol(opts.tol, n, c);
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(c, tol, n));
    let mut r = vec![1.0; n];
    let mut scaled = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        for j in 0..n {
            scaled[j] = r[j] * inv_out[j];
        }
        pull_step(&scaled, &mut next, c, &rows, |_| 1.0 - c, |_| 1.0, opts.parallel);
        let delta = weighted_l1_diff(&next, &r, |_| 1.0);
        std::mem::swap(&mut r, &mut next);
        residual = c * delta;
        if residual <= tol {
            return Ok((r, residual, it));
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
        tol,
    })
}

/// Power iteration from `R = 1` on an undirected graph.
pub fn solve_power_iteration(graph: &Graph, c: Damping, opts: &SolverOptions) -> Result<PageRankVector> {
    let n = graph.num_vertices();
    let inv: Vec<f64> = (0..n).map(|v| 1.0 / graph.degree(v) as f64).collect();
    let (values, residual, iterations) = fixed_point(n, &inv, |k| graph.neighbors(k), c, opts)?;
    Ok(PageRankVector {
        values,
        damping: c,
        method: Method::PowerIteration,
        residual,
        iterations,
    })
}

/// Truncated Neumann series `R_S = (1 - c) sum_{s <= S} c^s 1 P^s`.
///
/// The discarded tail has L1 mass exactly `n c^(S+1)`, reported as the residual.
pub fn solve_neumann(graph: &Graph, c: Damping, depth: usize) -> PageRankVector {
    let n = graph.num_vertices();
    let cv = c.value();
    let inv: Vec<f64> = (0..n).map(|v| 1.0 / graph.degree(v) as f64).collect();
    let mut x = vec![1.0; n];
    let mut scaled = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut weight = 1.0 - cv;
    let mut acc: Vec<f64> = x.iter().map(|&v| weight * v).collect();
    for _ in 0..depth {
        for j in 0..n {
            scaled[j] = x[j] * inv[j];
        }
        // c = 1 and base = 0 gives the plain product x P.
        pull_step(&scaled, &mut next, 1.0, |k| graph.neighbors(k), |_| 0.0, |_| 1.0, false);
        std::mem::swap(&mut x, &mut next);
        weight *= cv;
        for (a, &v) in acc.iter_mut().zip(&x) {
            *a += weight * v;
        }
    }
    PageRankVector {
        values: acc,
        damping: c,
        method: Method::Neumann { depth },
        residual: n as f64 * cv.powi(depth as i32 + 1),
        iterations: depth,
    }
}

/// Depth needed for the Neumann tail mass `n c^(S+1)` to fall below `tol`.
pub fn neumann_depth_for(n: usize, c: Damping, tol: f64) -> usize {
    ((tol / n as f64).ln() / c.value().ln()).ceil().max(0.0) as usize
}

/// Solves `v = c P v + (1 - c) Q 1` with `Q = diag(1/d)` and returns `R = d ⊙ v`.
///
/// Here `P` acts from the left, which is only equivalent to the standard equation
/// because the adjacency matrix is symmetric.
pub fn solve_undirected_closed(graph: &Graph, c: Damping, opts: &SolverOptions) -> Result<PageRankVector> {
    check_tol(opts.tol)?;
    let n = graph.num_vertices();
    let cv = c.value();
    let tol = effective_tol(opts.tol, n, cv);
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(cv, tol, n));
    let deg: Vec<f64> = (0..n).map(|v| graph.degree(v) as f64).collect();
    let mut v: Vec<f64> = deg.iter().map(|d| 1.0 / d).collect();
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        pull_step(
            &v,
            &mut next,
            cv,
            |k| graph.neighbors(k),
            |k| (1.0 - cv) / deg[k],
            |k| 1.0 / deg[k],
            opts.parallel,
        );
        // Distances are measured on R = d ⊙ v so the certificate matches the other solvers.
        let delta = weighted_l1_diff(&next, &v, |i| deg[i]);
        std::mem::swap(&mut v, &mut next);
        residual = cv * delta;
        if residual <= tol {
            let values = v.iter().zip(&deg).map(|(x, d)| x * d).collect();
            return Ok(PageRankVector {
                values,
                damping: c,
                method: Method::UndirectedClosedForm,
                residual,
                iterations: it,
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
        tol,
    })
}

/// Directed PageRank with `p_ij = a_ij / d_i^+`. Dangling vertices are rejected.
pub fn solve_directed(digraph: &Digraph, c: Damping, opts: &SolverOptions) -> Result<PageRankVector> {
    if let Some(v) = digraph.first_dangling() {
        return Err(Error::DanglingVertex(v));
    }
    let n = digraph.num_vertices();
    let inv: Vec<f64> = (0..n).map(|v| 1.0 / digraph.out_degree(v) as f64).collect();
    let (values, residual, iterations) = fixed_point(n, &inv, |k| digraph.in_neighbors(k), c, opts)?;
    Ok(PageRankVector {
        values,
        damping: c,
        method: Method::PowerIteration,
        residual,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeBoundReport {
    /// `max_i (R_i - d_i)`.
    pub max_violation: f64,
    pub argmax: usize,
    /// Vertex attaining the maximum when it exceeds the tolerance.
    pub violating: Option<usize>,
    pub tol: f64,
}

impl DegreeBoundReport {
    pub fn holds(&self) -> bool {
        self.violating.is_none()
    }
}

/// Compares `R_i` against `d_i` for every vertex.
pub fn check_degree_bound(pagerank: &PageRankVector, graph: &Graph, tol: f64) -> DegreeBoundReport {
    let (argmax, max_violation) = pagerank
        .values
        .iter()
        .enumerate()
        .map(|(i, &r)| (i, r - graph.degree(i) as f64))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    DegreeBoundReport {
        max_violation,
        argmax,
        violating: (max_violation > tol).then_some(argmax),
        tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectedRatioReport {
    /// `K_n = max_i d_i^- / d_i^+`.
    pub max_ratio: f64,
    /// `m_n = min_i d_i^-`.
    pub min_in_degree: usize,
    pub hypothesis_met: bool,
    /// `K_n / m_n`, present when the hypothesis holds.
    pub bound_factor: Option<f64>,
    /// `max_i (R_i - (K_n / m_n) d_i^-)`, present when the hypothesis holds.
    pub max_violation: Option<f64>,
    pub violating: Option<usize>,
    /// `(1 - c) / ((1 - c K_n) m_n)`, present when `c K_n < 1` and `m_n >= 1`.
    pub series_factor: Option<f64>,
    /// `max_i (R_i - series_factor d_i^-)`.
    pub series_violation: Option<f64>,
    pub tol: f64,
}

impl DirectedRatioReport {
    pub fn holds(&self) -> bool {
        self.violating.is_none()
    }

    /// Whether the series bound holds, when it applies.
    pub fn series_holds(&self) -> bool {
        self.series_violation.is_none_or(|v| v <= self.tol)
    }
}

fn worst_excess(pagerank: &PageRankVector, digraph: &Digraph, factor: f64) -> (usize, f64) {
    pagerank
        .values
        .iter()
        .enumerate()
        .map(|(i, &r)| (i, r - factor * digraph.in_degree(i) as f64))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

/// Checks `R_i <= (K_n / m_n) d_i^-` whenever `m_n >= 1` and `K_n < m_n / c`.
///
/// That bound is exact for `K_n = 1` but can fail on multigraphs with `K_n > 1`
/// (see the tests). The report also carries the bound obtained by summing
/// `R / d^- <= c K_n P^rev (R / d^-) + (1 - c) / d^-` as a geometric series,
/// `R_i <= (1 - c) / ((1 - c K_n) m_n) d_i^-`, which holds whenever `c K_n < 1`.
pub fn check_directed_ratio_bound(
    digraph: &Digraph,
    pagerank: &PageRankVector,
    c: Damping,
    tol: f64,
) -> DirectedRatioReport {
    let n = digraph.num_vertices();
    let max_ratio = (0..n)
        .map(|i| digraph.in_degree(i) as f64 / digraph.out_degree(i) as f64)
        .fold(0.0, f64::max);
    let min_in_degree = (0..n).map(|i| digraph.in_degree(i)).min().unwrap_or(0);
    let hypothesis_met = min_in_degree >= 1 && max_ratio < min_in_degree as f64 / c.value();
    let mut report = DirectedRatioReport {
        max_ratio,
        min_in_degree,
        hypothesis_met,
        bound_factor: None,
        max_violation: None,
        violating: None,
        series_factor: None,
        series_violation: None,
        tol,
    };
    if hypothesis_met {
        let factor = max_ratio / min_in_degree as f64;
        let (arg, worst) = worst_excess(pagerank, digraph, factor);
        report.bound_factor = Some(factor);
        report.max_violation = Some(worst);
        report.violating = (worst > tol).then_some(arg);
    }
    let ck = c.value() * max_ratio;
    if min_in_degree >= 1 && ck < 1.0 {
        let factor = (1.0 - c.value()) / ((1.0 - ck) * min_in_degree as f64);
        report.series_factor = Some(factor);
        report.series_violation = Some(worst_excess(pagerank, digraph, factor).1);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Damping {
        Damping::new(v).unwrap()
    }

    fn star(leaves: usize) -> Graph {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        Graph::from_edge_list(leaves + 1, &edges).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edge_list(n, &edges).unwrap()
    }

    #[test]
    fn damping_rejects_endpoints() {
        assert!(Damping::new(0.0).is_err());
        assert!(Damping::new(1.0).is_err());
        assert!(Damping::new(f64::NAN).is_err());
        assert!(Damping::new(0.85).is_ok());
    }

    #[test]
    fn single_edge_is_uniform() {
        let g = Graph::from_edge_list(2, &[(0, 1)]).unwrap();
        for cv in [0.1, 0.5, 0.85, 0.99] {
            let r = solve_power_iteration(&g, c(cv), &SolverOptions::default()).unwrap();
            assert!((r.values[0] - 1.0).abs() < 1e-12 && (r.values[1] - 1.0).abs() < 1e-12);
        }
    }

    // Star with 4 leaves at c = 1/2: R_center = 2, R_leaf = 3/4 (dense solve of the 5x5 system).
    #[test]
    fn star_values() {
        let g = star(4);
        let opts = SolverOptions::with_tol(1e-12);
        let expect = [2.0, 0.75, 0.75, 0.75, 0.75];
        for r in [
            solve_power_iteration(&g, c(0.5), &opts).unwrap(),
            solve_undirected_closed(&g, c(0.5), &opts).unwrap(),
        ] {
            for (a, b) in r.values.iter().zip(expect) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b}");
            }
        }
        let report = check_degree_bound(&solve_power_iteration(&g, c(0.5), &opts).unwrap(), &g, 1e-10);
        assert!(report.holds());
        assert!((report.max_violation - (-0.25)).abs() < 1e-10);
    }

    #[test]
    fn neumann_zero_depth() {
        let g = star(3);
        let r = solve_neumann(&g, c(0.3), 0);
        assert!(r.values.iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn neumann_matches_power_on_star() {
        let g = star(4);
        let p = solve_power_iteration(&g, c(0.5), &SolverOptions::with_tol(1e-12)).unwrap();
        let s = solve_neumann(&g, c(0.5), 20);
        let l1: f64 = p.values.iter().zip(&s.values).map(|(a, b)| (a - b).abs()).sum();
        assert!(l1 <= 5.0 * 2f64.powi(-21), "{l1}");
        assert!((s.mass() - 5.0 * (1.0 - 0.5f64.powi(21))).abs() < 1e-12);
    }

    #[test]
    fn neumann_depth_formula() {
        let cc = c(0.85);
        let s = neumann_depth_for(1000, cc, 1e-12);
        assert!(1000.0 * 0.85f64.powi(s as i32) <= 1e-12);
        assert!(1000.0 * 0.85f64.powi(s as i32 - 1) > 1e-12);
    }

    #[test]
    fn closed_form_on_regular_graph() {
        let g = cycle(9);
        let r = solve_undirected_closed(&g, c(0.85), &SolverOptions::default()).unwrap();
        assert!(r.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn not_converged_is_reported() {
        let g = star(4);
        let opts = SolverOptions {
            tol: 1e-12,
            max_iter: Some(3),
            parallel: false,
        };
        assert!(matches!(
            solve_power_iteration(&g, c(0.9), &opts),
            Err(Error::NotConverged { iterations: 3, .. })
        ));
        assert!(solve_power_iteration(&g, c(0.9), &SolverOptions::with_tol(0.0)).is_err());
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let edges: Vec<_> = (0..500).map(|i| (i, (i * 7 + 3) % 500)).chain((0..500).map(|i| (i, (i + 1) % 500))).collect();
        let g = Graph::from_edge_list(500, &edges).unwrap();
        let serial = solve_power_iteration(&g, c(0.85), &SolverOptions::default()).unwrap();
        let par = solve_power_iteration(
            &g,
            c(0.85),
            &SolverOptions {
                parallel: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(serial.values, par.values);
    }

    #[test]
    fn directed_cycle_and_dangling() {
        let n = 6;
        let arcs: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let d = Digraph::from_arc_list(n, &arcs).unwrap();
        let r = solve_directed(&d, c(0.85), &SolverOptions::default()).unwrap();
        assert!(r.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        let report = check_directed_ratio_bound(&d, &r, c(0.85), 1e-10);
        assert!(report.hypothesis_met && report.holds());
        assert_eq!(report.max_ratio, 1.0);
        assert_eq!(report.min_in_degree, 1);

        let dangling = Digraph::from_arc_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(
            solve_directed(&dangling, c(0.5), &SolverOptions::default()),
            Err(Error::DanglingVertex(2))
        );
    }

    #[test]
    fn directed_hypothesis_not_met() {
        // K = 3 (vertex 0: in 3, out 1) and m = 1, so K < m / c fails at c = 1/2.
        let d = Digraph::from_arc_list(4, &[(1, 0), (2, 0), (3, 0), (0, 1), (1, 2), (2, 3), (3, 1)]).unwrap();
        let r = solve_directed(&d, c(0.5), &SolverOptions::default()).unwrap();
        let report = check_directed_ratio_bound(&d, &r, c(0.5), 1e-10);
        assert!(!report.hypothesis_met);
        assert!(report.max_violation.is_none() && report.holds());
    }

    #[test]
    fn csv_layout() {
        let g = Graph::from_edge_list(2, &[(0, 1)]).unwrap();
        let r = solve_power_iteration(&g, c(0.5), &SolverOptions::default()).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "vertex,degree,pagerank\n0,1,1\n1,1,1\n");
    }
}
