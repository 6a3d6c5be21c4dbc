//! Experiment configuration: TOML schema, defaults and validation.
//!
//! Precedence: command-line flags override the config file, which overrides the
//! per-kind defaults below.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use prtail::generators::DegreeDistribution;
use prtail::limit_trees::UnimodularSampler;
use prtail::tail::{cm_beta_threshold, pa_beta_threshold};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    Cm,
    Pa,
    Counterexample,
    PolyaTree,
    UnimodularTree,
    DirectedRatio,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::Cm => "cm",
            ExperimentKind::Pa => "pa",
            ExperimentKind::Counterexample => "counterexample",
            ExperimentKind::PolyaTree => "polya_tree",
            ExperimentKind::UnimodularTree => "unimodular_tree",
            ExperimentKind::DirectedRatio => "directed_ratio",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum SolverMethod {
    #[default]
    Power,
    Closed,
    Neumann,
}

/// Explicit β or `"auto"` (1.05 times the lower-bound threshold).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BetaPolicy {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for BetaPolicy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            BetaPolicy::Auto => s.serialize_str("auto"),
            BetaPolicy::Fixed(b) => s.serialize_f64(*b),
        }
    }
}

impl<'de> Deserialize<'de> for BetaPolicy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => Ok(BetaPolicy::Fixed(b)),
            Raw::Int(b) => Ok(BetaPolicy::Fixed(b as f64)),
            Raw::Str(s) if s == "auto" => Ok(BetaPolicy::Auto),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("beta must be a number or \"auto\", got {s:?}"))),
        }
    }
}

/// Model parameters. Which fields apply depends on the experiment kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub delta: Option<f64>,
    pub tau: Option<f64>,
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    /// Explicit degree law as `[[k, p_k], ...]`; overrides the power law.
    pub pmf: Option<Vec<(usize, f64)>>,
    /// Directed experiments: fixed out-degree, with in-degrees from `pmf` (or the power law).
    pub out_degree: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub damping: f64,
    pub method: SolverMethod,
    pub tol: f64,
    /// Neumann truncation depth, or tree depth for tree experiments.
    pub depth: Option<usize>,
    /// Number of tree samples.
    pub samples: u64,
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            damping: 0.85,
            method: SolverMethod::Power,
            tol: 1e-10,
            depth: None,
            samples: 10_000,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub beta: BetaPolicy,
    pub alpha: Option<f64>,
    pub epsilon: f64,
    /// Ratios are summarized where both CCDFs are at least `min_count / N`.
    pub min_count: usize,
    /// Tolerance used for the ratio window flag.
    pub ratio_tolerance: f64,
    pub hill_k_top: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            beta: BetaPolicy::Auto,
            alpha: None,
            epsilon: 0.4,
            min_count: 100,
            ratio_tolerance: 0.1,
            hill_k_top: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    pub master: u64,
    pub replications: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            master: 1,
            replications: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind: Some(kind),
            model: ModelConfig::default(),
            solver: SolverConfig::default(),
            analysis: AnalysisConfig::default(),
            seeds: SeedConfig::default(),
            out: default_out(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        text.parse()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn kind(&self) -> ExperimentKind {
        self.kind.expect("kind is set before validation")
    }

    pub fn n(&self) -> usize {
        self.model.n.unwrap_or(match self.kind() {
            ExperimentKind::Counterexample => 10_000,
            ExperimentKind::DirectedRatio => 1_000,
            _ => 10_000,
        })
    }

    pub fn m(&self) -> usize {
        self.model.m.unwrap_or(1)
    }

    pub fn delta(&self) -> f64 {
        self.model.delta.unwrap_or(0.0)
    }

    /// Tree truncation depth. Unimodular trees default to the deepest level up to 8
    /// whose expected size stays below 10^5 vertices.
    pub fn tree_depth(&self) -> usize {
        if let Some(d) = self.solver.depth {
            return d;
        }
        match self.unimodular_sampler() {
            Some(s) => (1..=8).rev().find(|&d| s.expected_size(d) <= 1e5).unwrap_or(1),
            None => 8,
        }
    }

    fn unimodular_sampler(&self) -> Option<UnimodularSampler> {
        if self.kind() != ExperimentKind::UnimodularTree {
            return None;
        }
        UnimodularSampler::new(&self.degree_distribution().ok()?).ok()
    }

    /// Degree (or in-degree) law for the kinds that need one.
    pub fn degree_distribution(&self) -> prtail::Result<DegreeDistribution> {
        if let Some(pmf) = &self.model.pmf {
            return DegreeDistribution::explicit(pmf);
        }
        let even = self.kind() == ExperimentKind::Counterexample;
        let k_min = self.model.k_min.unwrap_or(if even { 2 } else { 1 });
        let k_max = self.model.k_max.unwrap_or(match self.kind() {
            // Tree offspring tables stay small; graph laws are cut at n.
            ExperimentKind::UnimodularTree => 1_000,
            _ => self.n(),
        });
        DegreeDistribution::power_law(self.model.tau.unwrap_or(2.5), k_min, k_max, even)
    }

    /// Lower-bound threshold for β given a mean degree (ignored for PA).
    pub fn beta_threshold(&self, mean_degree: f64) -> f64 {
        let c = self.solver.damping;
        match self.kind() {
            ExperimentKind::Pa => pa_beta_threshold(self.m(), self.delta(), c),
            _ => cm_beta_threshold(mean_degree, c),
        }
    }

    pub fn beta(&self, mean_degree: f64) -> f64 {
        match self.analysis.beta {
            BetaPolicy::Fixed(b) => b,
            BetaPolicy::Auto => 1.05 * self.beta_threshold(mean_degree),
        }
    }

    /// Threshold α for the condition probe: `⌈2m + δ⌉` for the Pólya tree,
    /// `2⌈E[d̃]⌉` otherwise, unless set explicitly.
    pub fn alpha(&self, mean_degree: f64) -> f64 {
        self.analysis.alpha.unwrap_or(match self.kind() {
            ExperimentKind::PolyaTree | ExperimentKind::Pa => (2.0 * self.m() as f64 + self.delta()).ceil(),
            ExperimentKind::Counterexample => 2.0,
            _ => 2.0 * mean_degree.ceil(),
        })
    }
}

impl FromStr for ExperimentConfig {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        toml::from_str(s).map_err(|e| CliError::Validation(vec![format!("config: {}", e.message())]))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

const MAX_EXPECTED_TREE_SIZE: f64 = 1e7;

/// Checks every parameter constraint before any work starts.
pub fn validate(config: &ExperimentConfig) -> ValidationReport {
    let mut r = ValidationReport::default();
    let Some(kind) = config.kind else {
        r.violations.push("kind: experiment kind is required".into());
        return r;
    };
    let c = config.solver.damping;
    if !(c > 0.0 && c < 1.0) {
        r.violations.push("solver.damping: damping must lie in (0,1)".into());
    }
    if !(config.solver.tol > 0.0 && config.solver.tol.is_finite()) {
        r.violations.push("solver.tol: tolerance must be positive".into());
    }
    if config.seeds.replications == 0 {
        r.violations.push("seeds.replications: at least one replication is required".into());
    }
    let eps = config.analysis.epsilon;
    if !(eps > 0.0 && eps < 1.0) {
        r.violations.push("analysis.epsilon: epsilon must lie in (0,1)".into());
    }
    if let BetaPolicy::Fixed(b) = config.analysis.beta {
        if !(b > 0.0 && b.is_finite()) {
            r.violations.push("analysis.beta: beta must be positive".into());
        }
    }
    if let Some(tau) = config.model.tau {
        if !(tau > 1.0) {
            r.violations.push("model.tau: power-law exponent must exceed 1".into());
        }
    }
    let needs_law = matches!(
        kind,
        ExperimentKind::Cm | ExperimentKind::Counterexample | ExperimentKind::UnimodularTree | ExperimentKind::DirectedRatio
    );
    let uses_pa = matches!(kind, ExperimentKind::Pa | ExperimentKind::PolyaTree);
    if matches!(kind, ExperimentKind::PolyaTree | ExperimentKind::UnimodularTree) {
        if config.solver.depth == Some(0) {
            r.violations.push("solver.depth: tree depth must be at least 1".into());
        }
        if config.solver.samples == 0 {
            r.violations.push("solver.samples: at least one tree sample is required".into());
        }
    } else if config.n() < 2 {
        r.violations.push("model.n: at least two vertices are required".into());
    }
    if uses_pa {
        if config.m() == 0 {
            r.violations.push("model.m: m must be at least 1".into());
        }
        let (m, delta) = (config.m() as f64, config.delta());
        if !(delta > -m) {
            r.violations.push(format!("model.delta: delta must exceed -m (got delta = {delta}, m = {m})"));
        }
    }
    let mut mean_degree = None;
    if needs_law {
        match config.degree_distribution() {
            Ok(p) => {
                if kind == ExperimentKind::Counterexample && !p.has_even_support() {
                    r.violations.push("model.pmf: odd degree in support".into());
                }
                mean_degree = Some(p.mean());
            }
            Err(e) => r.violations.push(format!("model: {e}")),
        }
    }
    if let (Some(sampler), Some(depth)) = (config.unimodular_sampler(), config.solver.depth) {
        let size = sampler.expected_size(depth);
        if size > MAX_EXPECTED_TREE_SIZE {
            r.violations.push(format!(
                "solver.depth: expected tree size {size:.3e} exceeds {MAX_EXPECTED_TREE_SIZE:e} vertices"
            ));
        }
    }
    if kind == ExperimentKind::DirectedRatio {
        if let (Some(out), Some(mean)) = (config.model.out_degree, mean_degree) {
            if out == 0 {
                r.violations.push("model.out_degree: out-degree must be at least 1".into());
            } else if (mean - out as f64).abs() > 1e-9 {
                r.violations.push(format!(
                    "model.pmf: in-degree mean {mean} must equal the out-degree {out}"
                ));
            }
        }
    }
    if r.is_ok() && matches!(kind, ExperimentKind::Cm | ExperimentKind::Pa) {
        let threshold = config.beta_threshold(mean_degree.unwrap_or(0.0));
        if let BetaPolicy::Fixed(b) = config.analysis.beta {
            if b <= threshold {
                let which = if kind == ExperimentKind::Pa { "2⌈2m+δ⌉/(c(1−c))" } else { "4E[D]/(c(1−c))" };
                r.warnings.push(format!("analysis.beta: {b} is below the threshold {which} = {threshold:.3}"));
            }
        }
    }
    r
}
