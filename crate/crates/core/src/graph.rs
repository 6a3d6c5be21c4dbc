//! Immutable undirected and directed multigraphs in compressed adjacency form.
//!
//! Vertex ids are dense and 0-based. Parallel edges are kept with their
//! multiplicity. A self-loop at `v` appears twice in `v`'s own neighbor list and
//! contributes 2 to its degree, so `a_vv = 2` in adjacency-matrix terms.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;

/// Compressed sparse rows: the neighbors of `v` are `targets[offsets[v]..offsets[v + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Csr {
    fn build(n: usize, slots: impl Iterator<Item = (usize, usize)> + Clone) -> Csr {
        let mut offsets = vec![0usize; n + 1];
        for (u, _) in slots.clone() {
            offsets[u + 1] += 1;
        }
        for v in 0..n {
            offsets[v + 1] += offsets[v];
        }
        let mut cursor = offsets.clone();
        let mut targets = vec![0usize; offsets[n]];
        for (u, v) in slots {
            targets[cursor[u]] = v;
            cursor[u] += 1;
        }
        for v in 0..n {
            targets[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Csr { offsets, targets }
    }

    #[inline]
    fn row(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    fn len(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }
}

fn check_endpoints(n: usize, edges: &[(usize, usize)]) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    for &(u, v) in edges {
        for w in [u, v] {
            if w >= n {
                return Err(Error::OutOfRange { vertex: w, n });
            }
        }
    }
    Ok(())
}

/// Undirected multigraph without isolated vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Csr,
}

impl Graph {
    /// Builds a graph from an edge list. Every vertex must end up with degree at least one.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Graph> {
        check_endpoints(n, edges)?;
        let slots = edges
            .iter()
            .flat_map(|&(u, v)| [(u, v), (v, u)].into_iter());
        let adj = Csr::build(n, slots);
        if let Some(v) = (0..n).find(|&v| adj.len(v) == 0) {
            return Err(Error::IsolatedVertex(v));
        }
        Ok(Graph { adj })
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.offsets.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.adj.targets.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.adj.len(v)
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_vertices()).map(|v| self.degree(v)).collect()
    }

    /// Neighbor slots of `v`, sorted, with multiplicity.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adj.row(v)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Number of neighbor slots `j` of `v` with `d_j >= alpha`. Parallel edges count once per slot.
    pub fn degree_at_least(&self, v: usize, alpha: f64) -> usize {
        self.neighbors(v)
            .iter()
            .filter(|&&j| self.degree(j) as f64 >= alpha)
            .count()
    }

    /// Checks that the multiplicity of `j` around `i` equals that of `i` around `j`.
    pub fn is_symmetric(&self) -> bool {
        (0..self.num_vertices()).all(|i| {
            let row = self.neighbors(i);
            let mut k = 0;
            while k < row.len() {
                let j = row[k];
                let run = row[k..].iter().take_while(|&&x| x == j).count();
                let back = self.neighbors(j).iter().filter(|&&x| x == i).count();
                if run != back {
                    return false;
                }
                k += run;
            }
            true
        })
    }

    /// Each undirected edge once, self-loops included.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for u in 0..self.num_vertices() {
            let mut loops = 0usize;
            for &v in self.neighbors(u) {
                if v > u {
                    out.push((u, v));
                } else if v == u {
                    loops += 1;
                    if loops % 2 == 0 {
                        out.push((u, u));
                    }
                }
            }
        }
        out
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let edges = self.edges();
        writeln!(w, "{} {}", self.num_vertices(), edges.len())?;
        for (u, v) in edges {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Graph> {
        let (n, edges) = parse_edge_list(r)?;
        Graph::from_edge_list(n, &edges)
    }
}

/// Directed multigraph with both out- and in-adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    out_adj: Csr,
    in_adj: Csr,
}

impl Digraph {
    /// Arc `(u, v)` means `u -> v`. Vertices without outgoing arcs are allowed here and
    /// rejected by the solver.
    pub fn from_arc_list(n: usize, arcs: &[(usize, usize)]) -> Result<Digraph> {
        check_endpoints(n, arcs)?;
        let out_adj = Csr::build(n, arcs.iter().copied());
        let in_adj = Csr::build(n, arcs.iter().map(|&(u, v)| (v, u)));
        Ok(Digraph { out_adj, in_adj })
    }

    pub fn num_vertices(&self) -> usize {
        self.out_adj.offsets.len() - 1
    }

    pub fn num_arcs(&self) -> usize {
        self.out_adj.targets.len()
    }

    #[inline]
    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj.len(v)
    }

    #[inline]
    pub fn in_degree(&self, v: usize) -> usize {
        self.in_adj.len(v)
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        self.out_adj.row(v)
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        self.in_adj.row(v)
    }

    /// Number of in-neighbor slots `j -> v` with `d_j^+ >= alpha`.
    pub fn in_degree_at_least(&self, v: usize, alpha: f64) -> usize {
        self.in_neighbors(v)
            .iter()
            .filter(|&&j| self.out_degree(j) as f64 >= alpha)
            .count()
    }

    pub fn is_consistent(&self) -> bool {
        (0..self.num_vertices()).all(|i| {
            self.out_neighbors(i).iter().all(|&j| {
                let fwd = self.out_neighbors(i).iter().filter(|&&x| x == j).count();
                let back = self.in_neighbors(j).iter().filter(|&&x| x == i).count();
                fwd == back
            })
        })
    }

    pub fn first_dangling(&self) -> Option<usize> {
        (0..self.num_vertices()).find(|&v| self.out_degree(v) == 0)
    }

    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (0..self.num_vertices())
            .flat_map(|u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
            .collect()
    }

    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.num_vertices(), self.num_arcs())?;
        for (u, v) in self.arcs() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R) -> Result<Digraph> {
        let (n, arcs) = parse_edge_list(r)?;
        Digraph::from_arc_list(n, &arcs)
    }
}

/// Parses the `n m` header followed by `m` lines of `u v`.
pub fn parse_edge_list<R: BufRead>(r: R) -> Result<(usize, Vec<(usize, usize)>)> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let header = header.map_err(|e| parse_err(hline, e.to_string()))?;
    let pair = |line: usize, s: &str| -> Result<(usize, usize)> {
        let mut it = s.split_whitespace();
        let mut next = || -> Result<usize> {
            it.next()
                .ok_or_else(|| parse_err(line, "expected two integers".into()))?
                .parse::<usize>()
                .map_err(|e| parse_err(line, e.to_string()))
        };
        let a = next()?;
        let b = next()?;
        if it.next().is_some() {
            return Err(parse_err(line, "trailing tokens".into()));
        }
        Ok((a, b))
    };
    let (n, m) = pair(hline, &header)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let l = l.map_err(|e| parse_err(line, e.to_string()))?;
        edges.push(pair(line, &l)?);
    }
    if edges.len() != m {
        return Err(parse_err(
            hline,
            format!("header announces {m} edges, found {}", edges.len()),
        ));
    }
    Ok((n, edges))
}

/// A vertex drawn uniformly at random, together with the stream it came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootSample {
    pub vertex: usize,
    pub seed: u64,
}

pub fn uniform_root(graph: &Graph, seed: SeedStream) -> RootSample {
    let vertex = seed.rng().random_range(0..graph.num_vertices());
    RootSample {
        vertex,
        seed: seed.seed(),
    }
}

/// `count` independent uniform roots from one stream.
pub fn uniform_roots(n: usize, count: usize, seed: SeedStream) -> Vec<usize> {
    let mut rng = seed.rng();
    (0..count).map(|_| rng.random_range(0..n)).collect()
}
