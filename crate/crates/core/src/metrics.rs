//! Directed-edge structure recovery metrics and a correlation-threshold
//! baseline.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::graph::CausalGraph;
use crate::scm::Sample;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(String),
    #[error("invalid adjacency matrix: {0}")]
    Invalid(String),
}

/// Square 0/1 matrix over named nodes; entry `(i, j)` is an edge `i -> j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    nodes: Vec<String>,
    entries: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn empty(nodes: Vec<String>) -> Self {
        let n = nodes.len();
        AdjacencyMatrix {
            nodes,
            entries: vec![false; n * n],
        }
    }

    /// Node names are sorted; edges must connect listed nodes and must not
    /// be self-loops.
    pub fn from_edges<'a>(
        nodes: impl IntoIterator<Item = &'a str>,
        edges: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Self, MetricsError> {
        let nodes: BTreeSet<&str> = nodes.into_iter().collect();
        let mut m = AdjacencyMatrix::empty(nodes.into_iter().map(str::to_string).collect());
        for (from, to) in edges {
            let i = m.position(from)?;
            let j = m.position(to)?;
            if i == j {
                return Err(MetricsError::Invalid(format!("self-loop on `{from}`")));
            }
            m.set(i, j, true);
        }
        Ok(m)
    }

    pub fn from_rows(nodes: Vec<String>, rows: &[Vec<u8>]) -> Result<Self, MetricsError> {
        let n = nodes.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(MetricsError::Invalid(format!("expected a {n}x{n} matrix")));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricsError::Invalid(
                "node names must be sorted and distinct".into(),
            ));
        }
        let mut m = AdjacencyMatrix::empty(nodes);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                match (v, i == j) {
                    (0, _) => {}
                    (1, false) => m.set(i, j, true),
                    (1, true) => return Err(MetricsError::Invalid("diagonal must be zero".into())),
                    _ => {
                        return Err(MetricsError::Invalid(format!(
                            "entry ({i}, {j}) is {v}, not 0/1"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }

    /// Directed adjacency among the endogenous nodes of `graph`; exogenous
    /// nodes are deleted.
    pub fn from_graph(graph: &CausalGraph) -> Self {
        let edges = graph.endogenous_edges();
        AdjacencyMatrix::from_edges(
            graph.endogenous().iter().map(String::as_str),
            edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        )
        .expect("graph edges connect graph nodes")
    }

    fn position(&self, name: &str) -> Result<usize, MetricsError> {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(name))
            .map_err(|_| MetricsError::Invalid(format!("unknown node `{name}`")))
    }

    fn set(&mut self, i: usize, j: usize, v: bool) {
        let n = self.nodes.len();
        self.entries[i * n + j] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.nodes.len() + j]
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().filter(|&&e| e).count()
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        let n = self.nodes.len();
        (0..n)
            .map(|i| (0..n).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        let n = self.nodes.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if self.get(i, j) {
                    out.push((self.nodes[i].clone(), self.nodes[j].clone()));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureMetrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub f1: f64,
    pub tpr: f64,
}

impl StructureMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        StructureMetrics {
            tp,
            fp,
            fn_,
            tn,
            f1: ratio(2 * tp, 2 * tp + fp + fn_),
            tpr: ratio(tp, tp + fn_),
        }
    }
}

/// Confusion counts over ordered pairs `(i, j)`, `i != j`.
pub fn compare_structures(
    predicted: &AdjacencyMatrix,
    truth: &AdjacencyMatrix,
) -> Result<StructureMetrics, MetricsError> {
    if predicted.nodes != truth.nodes {
        return Err(MetricsError::DimensionMismatch(format!(
            "predicted nodes {:?} vs true nodes {:?}",
            predicted.nodes, truth.nodes
        )));
    }
    let n = truth.len();
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            match (predicted.get(i, j), truth.get(i, j)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    Ok(StructureMetrics::from_counts(tp, fp, fn_, tn))
}

/// Rows of observations over named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl DataTable {
    /// Endogenous columns of `samples`, in name order.
    pub fn endogenous(samples: &[Sample]) -> Self {
        let columns: Vec<String> = samples
            .first()
            .map(|s| s.endogenous.keys().cloned().collect())
            .unwrap_or_default();
        let rows = samples
            .iter()
            .map(|s| s.endogenous.values().copied().collect())
            .collect();
        DataTable { columns, rows }
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[j])
    }
}

/// Pearson correlation; zero when either column is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Weak baseline: edge `i -> j` iff `|corr(i, j)| > threshold` and
/// `name_i < name_j`.
pub fn corr_threshold_discovery(
    data: &DataTable,
    threshold: f64,
) -> Result<AdjacencyMatrix, MetricsError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(MetricsError::InvalidThreshold(threshold.to_string()));
    }
    if data.rows.len() < 2 {
        return Err(MetricsError::InsufficientData(format!(
            "need at least 2 rows, got {}",
            data.rows.len()
        )));
    }
    if data.rows.iter().any(|r| r.len() != data.columns.len()) {
        return Err(MetricsError::DimensionMismatch(
            "row width differs from column count".into(),
        ));
    }
    let mut order: Vec<usize> = (0..data.columns.len()).collect();
    order.sort_by(|&a, &b| data.columns[a].cmp(&data.columns[b]));
    let cols: Vec<Vec<f64>> = order.iter().map(|&j| data.column(j).collect()).collect();
    let mut m = AdjacencyMatrix::empty(order.iter().map(|&j| data.columns[j].clone()).collect());
    if m.nodes.windows(2).any(|w| w[0] == w[1]) {
        return Err(MetricsError::Invalid("duplicate column name".into()));
    }
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            if pearson(&cols[i], &cols[j]).abs() > threshold {
                m.set(i, j, true);
            }
        }
    }
    Ok(m)
}
