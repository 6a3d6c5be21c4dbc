//! Experiment execution: builds graphs or tree samples, solves, analyzes and
//! writes artifacts plus a manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use prtail::generators::{
    configuration_model, counterexample_graph, directed_configuration_model, eulerian_digraph,
    preferential_attachment, sample_degrees, stratified_degrees, CirculantUnion, DegreeDistribution,
};
use prtail::limit_trees::{sample_root_stats, write_root_stats_csv, PolyaParams, TreeModel, UnimodularSampler};
use prtail::pagerank::{
    check_degree_bound, check_directed_ratio_bound, neumann_depth_for, solve_directed, solve_neumann,
    solve_power_iteration, solve_undirected_closed,
};
use prtail::tail::{
    condition_probe, default_k_top, empirical_ccdf, hill_estimator, integer_grid, linear_grid, merge_grids, ratio_bound_report,
    NeighborhoodSample,
};
use prtail::{Damping, Digraph, Graph, PageRankVector, SeedStream, SolverOptions};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{validate, ExperimentConfig, ExperimentKind, SolverMethod};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeedRecord {
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub kind: String,
    pub master_seed: u64,
    pub replications: u64,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub config: String,
    pub seeds: Vec<SeedRecord>,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl Manifest {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Named seed streams, recorded as they are handed out.
#[derive(Debug, Default)]
pub struct SeedLedger {
    records: Mutex<Vec<SeedRecord>>,
}

impl SeedLedger {
    pub fn take(&self, parent: SeedStream, prefix: &str, label: &str) -> SeedStream {
        let s = parent.derive(label);
        self.records.lock().expect("seed ledger lock").push(SeedRecord {
            label: format!("{prefix}{label}"),
            seed: s.seed(),
        });
        s
    }

    fn into_sorted(self) -> Vec<SeedRecord> {
        let mut v = self.records.into_inner().expect("seed ledger lock");
        v.sort_by(|a, b| a.label.cmp(&b.label));
        v
    }
}

/// In-memory outputs of one replication, written by a single writer afterwards.
#[derive(Debug, Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    checks: Vec<Check>,
}

impl Outputs {
    fn file(&mut self, path: String, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    fn json(&mut self, path: String, value: &impl Serialize) {
        let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
        s.push('\n');
        self.file(path, s.into_bytes());
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

pub fn damping(config: &ExperimentConfig) -> Result<Damping, CliError> {
    Ok(Damping::new(config.solver.damping)?)
}

fn solver_options(config: &ExperimentConfig) -> SolverOptions {
    SolverOptions {
        tol: config.solver.tol,
        max_iter: None,
        parallel: config.solver.parallel,
    }
}

/// Solves with the configured undirected method.
pub fn solve(graph: &Graph, config: &ExperimentConfig) -> Result<PageRankVector, CliError> {
    let c = damping(config)?;
    let opts = solver_options(config);
    Ok(match config.solver.method {
        SolverMethod::Power => solve_power_iteration(graph, c, &opts)?,
        SolverMethod::Closed => solve_undirected_closed(graph, c, &opts)?,
        SolverMethod::Neumann => {
            let depth = config
                .solver
                .depth
                .unwrap_or_else(|| neumann_depth_for(graph.num_vertices(), c, config.solver.tol));
            solve_neumann(graph, c, depth)
        }
    })
}

/// A generated instance.
pub enum Instance {
    Undirected(Graph),
    Counterexample(CirculantUnion),
    Directed(Digraph),
}

impl Instance {
    pub fn edge_list(&self) -> Vec<u8> {
        csv_bytes(|w| match self {
            Instance::Undirected(g) => g.write_edge_list(w),
            Instance::Counterexample(u) => u.graph.write_edge_list(w),
            Instance::Directed(d) => d.write_edge_list(w),
        })
    }
}

/// Builds the graph for a graph-valued experiment kind.
pub fn generate(
    config: &ExperimentConfig,
    seed: SeedStream,
    ledger: &SeedLedger,
    prefix: &str,
) -> Result<Instance, CliError> {
    let n = config.n();
    Ok(match config.kind() {
        ExperimentKind::Cm => {
            let p = config.degree_distribution()?;
            let d = sample_degrees(&p, n, ledger.take(seed, prefix, "degrees"));
            Instance::Undirected(configuration_model(&d, ledger.take(seed, prefix, "pairing"))?)
        }
        ExperimentKind::Pa => Instance::Undirected(preferential_attachment(
            n,
            config.m(),
            config.delta(),
            ledger.take(seed, prefix, "graph"),
        )?),
        ExperimentKind::Counterexample => {
            Instance::Counterexample(counterexample_graph(&config.degree_distribution()?, n)?)
        }
        ExperimentKind::DirectedRatio => {
            let p = config.degree_distribution()?;
            match config.model.out_degree {
                Some(out) => {
                    let ins = stratified_degrees(&p, n, ledger.take(seed, prefix, "in_degrees"));
                    Instance::Directed(directed_configuration_model(
                        &vec![out; n],
                        &ins.0,
                        ledger.take(seed, prefix, "arcs"),
                    )?)
                }
                None => {
                    let d = sample_degrees(&p, n, ledger.take(seed, prefix, "degrees"));
                    Instance::Directed(eulerian_digraph(&d, ledger.take(seed, prefix, "arcs"))?)
                }
            }
        }
        kind @ (ExperimentKind::PolyaTree | ExperimentKind::UnimodularTree) => {
            return Err(CliError::Validation(vec![format!("kind: {kind} samples trees, not graphs")]))
        }
    })
}

fn as_f64(v: &[usize]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

fn undirected_analysis(
    config: &ExperimentConfig,
    graph: &Graph,
    pagerank: &PageRankVector,
    prefix: &str,
    out: &mut Outputs,
) -> Result<Value, CliError> {
    let n = graph.num_vertices();
    let tol = 1e-8;
    let bound = check_degree_bound(pagerank, graph, tol);
    out.check(
        format!("{prefix}degree_bound"),
        bound.holds(),
        format!("max_i (R_i - d_i) = {:e}", bound.max_violation),
    );
    let mass_err = (pagerank.mass() - n as f64).abs();
    let mass_ok = match pagerank.method {
        prtail::pagerank::Method::Neumann { .. } => mass_err <= pagerank.residual * (1.0 + 1e-9),
        _ => mass_err <= pagerank.error_bound() + 1e-9 * n as f64,
    };
    out.check(format!("{prefix}mass"), mass_ok, format!("|sum R - n| = {mass_err:e}"));

    let degrees = as_f64(&graph.degrees());
    let grid = integer_grid(graph.max_degree());
    let deg_tail = empirical_ccdf(&degrees, &grid)?;
    let pr_tail = empirical_ccdf(&pagerank.values, &grid)?;
    let mean_degree = degrees.iter().sum::<f64>() / n as f64;
    let beta = config.beta(mean_degree);
    // With a large beta only k below max_degree / beta has a nonzero denominator.
    let ratio_grid = merge_grids(&grid, &linear_grid(graph.max_degree() as f64 / beta, 1000));
    let ratios = ratio_bound_report(&pagerank.values, &degrees, beta, &ratio_grid, config.analysis.ratio_tolerance)?;
    out.check(
        format!("{prefix}ccdf_upper_bound"),
        ratios.upper_bound_holds(),
        format!("{} grid points with P(R > k) > P(D > k)", ratios.upper_bound_violations),
    );
    let window = ratios.mass_window(config.analysis.min_count as f64 / n as f64);
    let k_top = config.analysis.hill_k_top.unwrap_or_else(|| default_k_top(n));
    let hill = hill_estimator(&degrees, k_top).ok();
    let samples: Vec<_> = (0..n).map(|v| NeighborhoodSample::from_graph_vertex(graph, v)).collect();
    let probe = condition_probe(&samples, config.alpha(mean_degree), config.analysis.epsilon, &grid);

    out.file(format!("{prefix}pagerank.csv"), csv_bytes(|w| pagerank.write_csv(graph, w)));
    out.file(format!("{prefix}degree_ccdf.csv"), csv_bytes(|w| deg_tail.write_csv(w)));
    out.file(format!("{prefix}pagerank_ccdf.csv"), csv_bytes(|w| pr_tail.write_csv(w)));
    out.json(format!("{prefix}ratio_report.json"), &ratios);
    out.json(format!("{prefix}condition_probe.json"), &probe);
    Ok(json!({
        "n": n,
        "edges": graph.num_edges(),
        "mean_degree": mean_degree,
        "max_degree": graph.max_degree(),
        "beta": beta,
        "beta_threshold": config.beta_threshold(mean_degree),
        "solver": { "method": pagerank.method, "iterations": pagerank.iterations, "residual": pagerank.residual },
        "degree_bound": bound,
        "ratio_window": window,
        "hill": hill,
        "pagerank_max": pagerank.values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "pagerank_min": pagerank.min(),
    }))
}

fn run_graph_replication(config: &ExperimentConfig, r: u64, ledger: &SeedLedger) -> Result<Outputs, CliError> {
    let prefix = if config.seeds.replications > 1 {
        format!("rep-{r:03}/")
    } else {
        String::new()
    };
    let seed = SeedStream::new(config.seeds.master).index(r);
    let instance = generate(config, seed, ledger, &prefix)?;
    let mut out = Outputs::default();
    out.file(format!("{prefix}graph.txt"), instance.edge_list());
    let summary = match &instance {
        Instance::Undirected(g) => {
            let pr = solve(g, config)?;
            undirected_analysis(config, g, &pr, &prefix, &mut out)?
        }
        Instance::Counterexample(u) => {
            let pr = solve(&u.graph, config)?;
            let mut s = undirected_analysis(config, &u.graph, &pr, &prefix, &mut out)?;
            let far = pr.values.iter().filter(|x| (*x - 1.0).abs() > 0.1).count();
            let fraction = far as f64 / pr.len() as f64;
            out.json(format!("{prefix}components.json"), &u.components);
            s["components"] = json!(u.components.iter().map(|c| (c.degree, c.size)).collect::<Vec<_>>());
            s["max_component_degree"] = json!(u.max_degree);
            s["bridges"] = json!(u.bridges);
            s["fraction_far_from_one"] = json!(fraction);
            s
        }
        Instance::Directed(d) => {
            let c = damping(config)?;
            let pr = solve_directed(d, c, &solver_options(config))?;
            let report = check_directed_ratio_bound(d, &pr, c, 1e-8);
            out.check(
                format!("{prefix}directed_ratio_bound"),
                report.holds(),
                format!(
                    "K = {}, m = {}, hypothesis met: {}, max violation {:?}",
                    report.max_ratio, report.min_in_degree, report.hypothesis_met, report.max_violation
                ),
            );
            out.check(
                format!("{prefix}directed_series_bound"),
                report.series_holds(),
                format!("factor {:?}, max violation {:?}", report.series_factor, report.series_violation),
            );
            out.file(format!("{prefix}pagerank.csv"), csv_bytes(|w| pr.write_directed_csv(d, w)));
            out.json(format!("{prefix}ratio_bound.json"), &report);
            json!({
                "n": d.num_vertices(),
                "arcs": d.num_arcs(),
                "solver": { "iterations": pr.iterations, "residual": pr.residual },
                "ratio_bound": report,
            })
        }
    };
    out.json(format!("{prefix}summary.json"), &summary);
    Ok(out)
}

fn run_tree_replication(config: &ExperimentConfig, r: u64, ledger: &SeedLedger) -> Result<Outputs, CliError> {
    let prefix = if config.seeds.replications > 1 {
        format!("rep-{r:03}/")
    } else {
        String::new()
    };
    let seed = SeedStream::new(config.seeds.master).index(r);
    let c = damping(config)?;
    let (model, mean_degree) = match config.kind() {
        ExperimentKind::PolyaTree => {
            let params = PolyaParams::new(config.m(), config.delta())?;
            (TreeModel::Polya(params), 2.0 * config.m() as f64)
        }
        _ => {
            let p: DegreeDistribution = config.degree_distribution()?;
            let sb_mean = p.as_pmf().size_biased()?.mean();
            (TreeModel::Unimodular(UnimodularSampler::new(&p)?), sb_mean + 1.0)
        }
    };
    let depth = config.tree_depth();
    let stats = sample_root_stats(&model, config.solver.samples, depth, c, ledger.take(seed, &prefix, "trees"));
    let count = stats.len() as f64;
    let lower: Vec<f64> = stats.iter().map(|s| s.root_pagerank_lower).collect();
    let mean = lower.iter().sum::<f64>() / count;
    let var = lower.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0).max(1.0);
    let se = (var / count).sqrt();
    let mean_tail = stats.iter().map(|s| s.tail_bound).sum::<f64>() / count;
    let mut out = Outputs::default();
    out.check(
        format!("{prefix}root_pagerank_mean"),
        mean <= 1.0 + 3.0 * se,
        format!("mean lower bound {mean:.6} vs 1 + 3 se = {:.6}", 1.0 + 3.0 * se),
    );
    let max_degree = stats.iter().map(|s| s.root_degree).max().unwrap_or(0);
    let grid = integer_grid(max_degree);
    let samples: Vec<NeighborhoodSample> = stats
        .iter()
        .map(|s| NeighborhoodSample {
            degree: s.root_degree,
            neighbor_degrees: s.neighbor_degrees.clone(),
        })
        .collect();
    let probe = condition_probe(&samples, config.alpha(mean_degree), config.analysis.epsilon, &grid);
    let degrees: Vec<f64> = stats.iter().map(|s| s.root_degree as f64).collect();
    out.file(format!("{prefix}root_stats.csv"), csv_bytes(|w| write_root_stats_csv(&stats, w)));
    out.file(
        format!("{prefix}root_degree_ccdf.csv"),
        csv_bytes(|w| empirical_ccdf(&degrees, &grid).expect("nonempty").write_csv(w)),
    );
    out.file(
        format!("{prefix}root_pagerank_ccdf.csv"),
        csv_bytes(|w| empirical_ccdf(&lower, &grid).expect("nonempty").write_csv(w)),
    );
    out.json(format!("{prefix}condition_probe.json"), &probe);
    out.json(
        format!("{prefix}summary.json"),
        &json!({
            "samples": stats.len(),
            "depth": depth,
            "root_pagerank_lower_mean": mean,
            "root_pagerank_lower_se": se,
            "mean_tail_bound": mean_tail,
            "alpha": probe.alpha,
            "epsilon": probe.epsilon,
            "condition_decay_factor": probe.decay_factor(config.analysis.min_count),
        }),
    );
    Ok(out)
}

/// Validates, runs all replications concurrently and writes artifacts in a fixed order.
pub fn run(config: &ExperimentConfig) -> Result<Manifest, CliError> {
    let report = validate(config);
    if !report.is_ok() {
        return Err(CliError::Validation(report.violations));
    }
    let start = Instant::now();
    let ledger = SeedLedger::default();
    let tree = matches!(config.kind(), ExperimentKind::PolyaTree | ExperimentKind::UnimodularTree);
    let outputs: Vec<Outputs> = (0..config.seeds.replications)
        .into_par_iter()
        .map(|r| {
            if tree {
                run_tree_replication(config, r, &ledger)
            } else {
                run_graph_replication(config, r, &ledger)
            }
        })
        .collect::<Result<_, _>>()?;
    let root: &PathBuf = &config.out;
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();
    for o in outputs {
        for (rel, bytes) in &o.files {
            write_file(&root.join(rel), bytes)?;
            artifacts.push(Artifact {
                path: rel.clone(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            });
        }
        checks.extend(o.checks);
    }
    let config_toml = config.to_toml();
    write_file(&root.join("config.toml"), config_toml.as_bytes())?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        core_version: prtail::VERSION,
        kind: config.kind().to_string(),
        master_seed: config.seeds.master,
        replications: config.seeds.replications,
        threads: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        config: config_toml,
        seeds: ledger.into_sorted(),
        artifacts,
        checks,
        warnings: report.warnings,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&root.join("manifest.json"), text.as_bytes())?;
    Ok(manifest)
}
