//! End-to-end structure-recovery benchmark: generate confounded and
//! unconfounded SCMs, sample each, run discovery and score against the
//! endogenous part of the true graph.

use std::fmt::Write as _;

use thiserror::Error;

use crate::distributions::Distribution;
use crate::generate::{create_from_graph, FunctionClass, ScmGenConfig};
use crate::graph::{
    default_max_retries, generate_unique_graph_set_where, CausalGraph, GraphError, GraphGenConfig,
};
use crate::metrics::{
    compare_structures, corr_threshold_discovery, AdjacencyMatrix, DataTable, MetricsError,
    StructureMetrics,
};
use crate::rng::RngState;
use crate::scm::ScmError;

#[derive(Debug, Error)]
pub enum UseCaseError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Scm(#[from] ScmError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("invalid use-case config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    CorrThreshold {
        threshold: f64,
    },
    /// Returns the true structure; checks the plumbing.
    Oracle,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::CorrThreshold { .. } => "corr_threshold",
            Algorithm::Oracle => "oracle",
        }
    }

    fn discover(
        &self,
        data: &DataTable,
        truth: &AdjacencyMatrix,
    ) -> Result<AdjacencyMatrix, MetricsError> {
        match *self {
            Algorithm::CorrThreshold { threshold } => corr_threshold_discovery(data, threshold),
            Algorithm::Oracle => Ok(truth.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regime {
    Confounded,
    Unconfounded,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Confounded => "confounded",
            Regime::Unconfounded => "unconfounded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UseCaseConfig {
    pub n_endo: usize,
    pub n_exo: usize,
    /// Total SCMs; the confounded regime gets half (rounded down).
    pub scm_count: usize,
    pub samples_per_scm: usize,
    pub function_classes: Vec<FunctionClass>,
    pub algorithms: Vec<Algorithm>,
    pub edge_prob: f64,
    pub confounder_child_prob: f64,
    pub exo_distribution: Distribution,
}

impl Default for UseCaseConfig {
    fn default() -> Self {
        UseCaseConfig {
            n_endo: 4,
            n_exo: 4,
            scm_count: 30,
            samples_per_scm: 100,
            function_classes: vec![FunctionClass::linear(), FunctionClass::Interaction],
            algorithms: vec![Algorithm::CorrThreshold { threshold: 0.5 }],
            edge_prob: 0.5,
            confounder_child_prob: 0.5,
            exo_distribution: Distribution::Gauss {
                mu: 0.0,
                sigma: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub regime: Regime,
    pub algorithm: String,
    pub f1_mean: f64,
    pub f1_sd: f64,
    pub tpr_mean: f64,
    pub tpr_sd: f64,
    pub n_scms: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmScore {
    pub regime: Regime,
    pub index: usize,
    pub algorithm: String,
    pub metrics: StructureMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UseCaseReport {
    pub rows: Vec<MetricsRow>,
    pub scores: Vec<ScmScore>,
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn regime_graphs(
    config: &UseCaseConfig,
    regime: Regime,
    count: usize,
    rng: &mut RngState,
) -> Result<Vec<CausalGraph>, GraphError> {
    let graph_config = GraphGenConfig {
        n_endo: config.n_endo,
        n_exo: config.n_exo,
        allow_exo_confounders: regime == Regime::Confounded,
        edge_prob: config.edge_prob,
        confounder_child_prob: config.confounder_child_prob,
    };
    // a confounded-regime draw may still leave every noise term with one child
    generate_unique_graph_set_where(&graph_config, count, rng, default_max_retries(count), |g| {
        regime == Regime::Unconfounded || g.is_confounded()
    })
}

pub fn run_usecase(config: &UseCaseConfig, rng: &RngState) -> Result<UseCaseReport, UseCaseError> {
    if config.scm_count < 1 {
        return Err(UseCaseError::Config("scm_count must be at least 1".into()));
    }
    if config.algorithms.is_empty() {
        return Err(UseCaseError::Config(
            "at least one algorithm is required".into(),
        ));
    }
    let gen_config = ScmGenConfig {
        function_classes: config.function_classes.clone(),
        exo_distribution: config.exo_distribution,
        ..ScmGenConfig::default()
    };
    gen_config.validate()?;

    let confounded = config.scm_count / 2;
    let plan = [
        (Regime::Confounded, confounded),
        (Regime::Unconfounded, config.scm_count - confounded),
    ];

    let mut rows = Vec::new();
    let mut scores = Vec::new();
    for (regime, count) in plan {
        if count == 0 {
            continue;
        }
        let mut regime_rng = rng.fork(regime.name());
        let (mut graph_rng, scm_root) = regime_rng.split();
        let graphs = regime_graphs(config, regime, count, &mut graph_rng)?;

        let mut per_algorithm: Vec<Vec<StructureMetrics>> =
            vec![Vec::new(); config.algorithms.len()];
        for (index, graph) in graphs.iter().enumerate() {
            let (mut eq_rng, mut sample_rng) = scm_root.fork(&format!("scm{index}")).split();
            let model = create_from_graph(graph, &gen_config, &mut eq_rng)?;
            let samples = model.sample_n(config.samples_per_scm, &mut sample_rng)?;
            let data = DataTable::endogenous(&samples);
            let truth = AdjacencyMatrix::from_graph(&model.effective_graph());
            for (alg, bucket) in config.algorithms.iter().zip(per_algorithm.iter_mut()) {
                let predicted = alg.discover(&data, &truth)?;
                let metrics = compare_structures(&predicted, &truth)?;
                bucket.push(metrics);
                scores.push(ScmScore {
                    regime,
                    index,
                    algorithm: alg.name().to_string(),
                    metrics,
                });
            }
        }

        for (alg, bucket) in config.algorithms.iter().zip(&per_algorithm) {
            let f1: Vec<f64> = bucket.iter().map(|m| m.f1).collect();
            let tpr: Vec<f64> = bucket.iter().map(|m| m.tpr).collect();
            let (f1_mean, f1_sd) = mean_sd(&f1);
            let (tpr_mean, tpr_sd) = mean_sd(&tpr);
            rows.push(MetricsRow {
                regime,
                algorithm: alg.name().to_string(),
                f1_mean,
                f1_sd,
                tpr_mean,
                tpr_sd,
                n_scms: bucket.len(),
            });
        }
    }
    Ok(UseCaseReport { rows, scores })
}

/// Aligned plain-text table of the summary rows.
pub fn render_table(rows: &[MetricsRow]) -> String {
    let header = [
        "regime",
        "algorithm",
        "f1_mean",
        "f1_sd",
        "tpr_mean",
        "tpr_sd",
        "n_scms",
    ];
    let body: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.regime.name().to_string(),
                r.algorithm.clone(),
                format!("{:.4}", r.f1_mean),
                format!("{:.4}", r.f1_sd),
                format!("{:.4}", r.tpr_mean),
                format!("{:.4}", r.tpr_sd),
                r.n_scms.to_string(),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            body.iter()
                .map(|r| r[c].len())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c < 2 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&header);
    for r in &body {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}
