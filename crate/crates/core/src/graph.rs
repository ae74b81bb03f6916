//! Causal graphs over endogenous and exogenous nodes, and random generation
//! of single graphs and sets of distinct graphs.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::rng::RngState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("graph contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error(
        "gave up after {retries} consecutive duplicate graphs with {produced} of {requested} unique graphs generated; the configuration admits too few distinct graphs"
    )]
    ExhaustedRetries {
        requested: usize,
        produced: usize,
        retries: usize,
    },
}

pub type Edge = (String, String);

/// Orders `nodes` so every edge points forward; ties are broken
/// lexicographically. On failure returns the nodes of one cycle, with the
/// first node repeated at the end.
pub(crate) fn topological_order<'a>(
    nodes: impl IntoIterator<Item = &'a str>,
    edges: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<Vec<String>, Vec<String>> {
    let mut indegree: BTreeMap<&str, usize> = nodes.into_iter().map(|n| (n, 0)).collect();
    let mut children: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (from, to) in edges {
        if children.entry(from).or_default().insert(to) {
            *indegree.entry(to).or_insert(0) += 1;
            indegree.entry(from).or_insert(0);
        }
    }
    let mut ready: BTreeSet<&str> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    let mut order = Vec::with_capacity(indegree.len());
    let mut remaining = indegree.clone();
    while let Some(n) = ready.pop_first() {
        order.push(n.to_string());
        remaining.remove(n);
        for c in children.get(n).into_iter().flatten() {
            let d = remaining.get_mut(c).expect("child is a node");
            *d -= 1;
            if *d == 0 {
                ready.insert(c);
            }
        }
    }
    if remaining.is_empty() {
        return Ok(order);
    }
    let mut parents: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (&from, cs) in &children {
        for &c in cs {
            parents.entry(c).or_default().insert(from);
        }
    }
    Err(find_cycle(&remaining.keys().copied().collect(), &parents))
}

fn find_cycle<'a>(
    candidates: &BTreeSet<&'a str>,
    parents: &BTreeMap<&'a str, BTreeSet<&'a str>>,
) -> Vec<String> {
    // every node left over has a left-over parent; walk parents until one repeats
    let mut path: Vec<&str> = Vec::new();
    let mut on_path: HashSet<&str> = HashSet::new();
    let mut node = *candidates.iter().next().expect("nonempty");
    loop {
        if on_path.contains(node) {
            let start = path.iter().position(|&n| n == node).expect("on path");
            let mut cycle: Vec<String> =
                path[start..].iter().rev().map(|s| s.to_string()).collect();
            cycle.insert(0, node.to_string());
            return cycle;
        }
        path.push(node);
        on_path.insert(node);
        node = parents
            .get(node)
            .and_then(|ps| ps.iter().find(|p| candidates.contains(*p)))
            .copied()
            .expect("nodes left after Kahn's algorithm keep a parent");
    }
}

/// Directed acyclic graph with labeled endogenous and exogenous nodes.
///
/// Exogenous nodes have no parents and point only at endogenous nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CausalGraph {
    endogenous: Vec<String>,
    exogenous: Vec<String>,
    edges: BTreeSet<Edge>,
}

impl CausalGraph {
    pub fn new(
        endogenous: Vec<String>,
        exogenous: Vec<String>,
        edges: impl IntoIterator<Item = Edge>,
    ) -> Result<Self, GraphError> {
        let endo: HashSet<&str> = endogenous.iter().map(String::as_str).collect();
        let exo: HashSet<&str> = exogenous.iter().map(String::as_str).collect();
        if endo.len() != endogenous.len() || exo.len() != exogenous.len() {
            return Err(GraphError::InvalidGraph("duplicate node name".into()));
        }
        if let Some(n) = endo.intersection(&exo).next() {
            return Err(GraphError::InvalidGraph(format!(
                "`{n}` is both endogenous and exogenous"
            )));
        }
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        for (from, to) in &edges {
            if !endo.contains(from.as_str()) && !exo.contains(from.as_str()) {
                return Err(GraphError::InvalidGraph(format!("unknown node `{from}`")));
            }
            if exo.contains(to.as_str()) {
                return Err(GraphError::InvalidGraph(format!(
                    "exogenous node `{to}` cannot have a parent ({from} -> {to})"
                )));
            }
            if !endo.contains(to.as_str()) {
                return Err(GraphError::InvalidGraph(format!("unknown node `{to}`")));
            }
        }
        let graph = CausalGraph {
            endogenous,
            exogenous,
            edges,
        };
        graph.topological_order()?;
        Ok(graph)
    }

    /// For callers that already guarantee the invariants.
    pub(crate) fn from_parts_unchecked(
        endogenous: Vec<String>,
        exogenous: Vec<String>,
        edges: BTreeSet<Edge>,
    ) -> Self {
        CausalGraph {
            endogenous,
            exogenous,
            edges,
        }
    }

    pub fn endogenous(&self) -> &[String] {
        &self.endogenous
    }

    pub fn exogenous(&self) -> &[String] {
        &self.exogenous
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.contains(&(from.to_string(), to.to_string()))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.endogenous
            .iter()
            .chain(self.exogenous.iter())
            .map(String::as_str)
    }

    /// Parents of `node`, sorted.
    pub fn parents(&self, node: &str) -> Vec<String> {
        self.edges
            .iter()
            .filter(|(_, to)| to == node)
            .map(|(from, _)| from.clone())
            .collect()
    }

    pub fn out_degree(&self, node: &str) -> usize {
        self.edges.iter().filter(|(from, _)| from == node).count()
    }

    pub fn topological_order(&self) -> Result<Vec<String>, GraphError> {
        topological_order(
            self.nodes(),
            self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        )
        .map_err(GraphError::Cycle)
    }

    /// True iff some exogenous node feeds two or more endogenous nodes.
    pub fn is_confounded(&self) -> bool {
        self.exogenous.iter().any(|u| self.out_degree(u) >= 2)
    }

    /// Edges between endogenous nodes only; exogenous nodes are dropped.
    pub fn endogenous_edges(&self) -> BTreeSet<Edge> {
        let exo: HashSet<&str> = self.exogenous.iter().map(String::as_str).collect();
        self.edges
            .iter()
            .filter(|(from, _)| !exo.contains(from.as_str()))
            .cloned()
            .collect()
    }
}

pub fn is_confounded(graph: &CausalGraph) -> bool {
    graph.is_confounded()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphGenConfig {
    pub n_endo: usize,
    pub n_exo: usize,
    pub allow_exo_confounders: bool,
    /// Probability of each forward edge between endogenous nodes.
    pub edge_prob: f64,
    /// Per-child probability for an exogenous node when confounders are
    /// allowed.
    pub confounder_child_prob: f64,
}

impl Default for GraphGenConfig {
    fn default() -> Self {
        GraphGenConfig {
            n_endo: 5,
            n_exo: 4,
            allow_exo_confounders: false,
            edge_prob: 0.5,
            confounder_child_prob: 0.5,
        }
    }
}

impl GraphGenConfig {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.n_endo < 1 {
            return Err(GraphError::InvalidConfig(
                "n_endo must be at least 1".into(),
            ));
        }
        for (name, p) in [
            ("edge_prob", self.edge_prob),
            ("confounder_child_prob", self.confounder_child_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphError::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.allow_exo_confounders && self.n_exo > 0 && self.confounder_child_prob == 0.0 {
            return Err(GraphError::InvalidConfig(
                "confounder_child_prob must be positive when confounders are allowed".into(),
            ));
        }
        Ok(())
    }

    pub fn endogenous_names(&self) -> Vec<String> {
        (0..self.n_endo).map(|i| format!("X{i}")).collect()
    }

    pub fn exogenous_names(&self) -> Vec<String> {
        (0..self.n_exo).map(|i| format!("U{i}")).collect()
    }
}

/// Samples one graph: a random ordering of the endogenous nodes with
/// independent forward edges, plus exogenous nodes wired to endogenous
/// children (exactly one child each unless confounders are allowed).
pub fn generate_graph(
    config: &GraphGenConfig,
    rng: &mut RngState,
) -> Result<CausalGraph, GraphError> {
    config.validate()?;
    let endo = config.endogenous_names();
    let exo = config.exogenous_names();

    let mut order: Vec<usize> = (0..endo.len()).collect();
    rng.shuffle(&mut order);
    let mut edges = BTreeSet::new();
    for i in 0..order.len() {
        for j in (i + 1)..order.len() {
            if rng.next_f64() < config.edge_prob {
                edges.insert((endo[order[i]].clone(), endo[order[j]].clone()));
            }
        }
    }

    for u in &exo {
        if config.allow_exo_confounders {
            loop {
                let children: Vec<&String> = endo
                    .iter()
                    .filter(|_| rng.next_f64() < config.confounder_child_prob)
                    .collect();
                if !children.is_empty() {
                    edges.extend(children.into_iter().map(|x| (u.clone(), x.clone())));
                    break;
                }
            }
        } else {
            let child = &endo[rng.index(endo.len())];
            edges.insert((u.clone(), child.clone()));
        }
    }

    Ok(CausalGraph::from_parts_unchecked(endo, exo, edges))
}

pub fn default_max_retries(count: usize) -> usize {
    count.saturating_mul(100)
}

/// Generates `count` graphs with pairwise distinct labeled edge sets.
pub fn generate_unique_graph_set(
    config: &GraphGenConfig,
    count: usize,
    rng: &mut RngState,
    max_retries: usize,
) -> Result<Vec<CausalGraph>, GraphError> {
    generate_unique_graph_set_where(config, count, rng, max_retries, |_| true)
}

/// Like [`generate_unique_graph_set`] but keeps only graphs accepted by
/// `accept`. Rejected graphs count as failed attempts.
pub fn generate_unique_graph_set_where(
    config: &GraphGenConfig,
    count: usize,
    rng: &mut RngState,
    max_retries: usize,
    accept: impl Fn(&CausalGraph) -> bool,
) -> Result<Vec<CausalGraph>, GraphError> {
    if count < 1 {
        return Err(GraphError::InvalidConfig("count must be at least 1".into()));
    }
    config.validate()?;
    let mut seen: HashSet<BTreeSet<Edge>> = HashSet::new();
    let mut graphs = Vec::with_capacity(count);
    let mut misses = 0;
    while graphs.len() < count {
        let g = generate_graph(config, rng)?;
        if accept(&g) && seen.insert(g.edges.clone()) {
            graphs.push(g);
            misses = 0;
        } else {
            misses += 1;
            if misses >= max_retries {
                return Err(GraphError::ExhaustedRetries {
                    requested: count,
                    produced: graphs.len(),
                    retries: max_retries,
                });
            }
        }
    }
    Ok(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_endo: usize, n_exo: usize, confounders: bool) -> GraphGenConfig {
        GraphGenConfig {
            n_endo,
            n_exo,
            allow_exo_confounders: confounders,
            ..GraphGenConfig::default()
        }
    }

    fn e(a: &str, b: &str) -> Edge {
        (a.to_string(), b.to_string())
    }

    #[test]
    fn unconfounded_exogenous_have_one_child() {
        let mut rng = RngState::new(1);
        for _ in 0..200 {
            let g = generate_graph(&cfg(5, 4, false), &mut rng).unwrap();
            for u in g.exogenous() {
                assert_eq!(g.out_degree(u), 1);
            }
            assert!(!g.is_confounded());
            assert!(g.topological_order().is_ok());
        }
    }

    #[test]
    fn confounded_exogenous_have_at_least_one_child() {
        let mut rng = RngState::new(2);
        let mut any_confounded = false;
        for _ in 0..200 {
            let g = generate_graph(&cfg(5, 4, true), &mut rng).unwrap();
            for u in g.exogenous() {
                assert!(g.out_degree(u) >= 1);
            }
            any_confounded |= g.is_confounded();
        }
        assert!(any_confounded);
    }

    #[test]
    fn single_node() {
        let g = generate_graph(&cfg(1, 0, true), &mut RngState::new(3)).unwrap();
        assert_eq!(g.endogenous(), ["X0"]);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn full_edge_prob_gives_a_tournament() {
        let config = GraphGenConfig {
            edge_prob: 1.0,
            ..cfg(3, 0, false)
        };
        let mut rng = RngState::new(4);
        for _ in 0..20 {
            let g = generate_graph(&config, &mut rng).unwrap();
            assert_eq!(g.edges().len(), 3);
            assert_eq!(g.topological_order().unwrap().len(), 3);
        }
    }

    #[test]
    fn exhaustion_on_tiny_space() {
        let config = cfg(2, 0, false);
        let mut rng = RngState::new(5);
        let three = generate_unique_graph_set(&config, 3, &mut rng, 300).unwrap();
        assert_eq!(three.len(), 3);
        let err = generate_unique_graph_set(&config, 4, &mut rng, 400).unwrap_err();
        assert!(matches!(
            err,
            GraphError::ExhaustedRetries { produced: 3, .. }
        ));
    }

    #[test]
    fn unique_sets_are_distinct_and_deterministic() {
        let config = cfg(4, 4, false);
        let a = generate_unique_graph_set(&config, 30, &mut RngState::new(6), 3000).unwrap();
        let b = generate_unique_graph_set(&config, 30, &mut RngState::new(6), 3000).unwrap();
        assert_eq!(a, b);
        let distinct: HashSet<_> = a.iter().map(|g| g.edges().clone()).collect();
        assert_eq!(distinct.len(), 30);
    }

    #[test]
    fn filtered_set_only_keeps_accepted() {
        let set = generate_unique_graph_set_where(
            &cfg(4, 4, true),
            10,
            &mut RngState::new(8),
            1000,
            CausalGraph::is_confounded,
        )
        .unwrap();
        assert!(set.iter().all(CausalGraph::is_confounded));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0, 0, false).validate().is_err());
        assert!(GraphGenConfig {
            edge_prob: 1.5,
            ..cfg(2, 0, false)
        }
        .validate()
        .is_err());
        assert!(GraphGenConfig {
            confounder_child_prob: 0.0,
            ..cfg(2, 1, true)
        }
        .validate()
        .is_err());
        assert!(
            generate_unique_graph_set(&cfg(2, 0, false), 0, &mut RngState::new(1), 10).is_err()
        );
    }

    #[test]
    fn constructor_rejects_bad_graphs() {
        let endo = vec!["A".to_string(), "B".to_string()];
        let exo = vec!["U".to_string()];
        assert!(matches!(
            CausalGraph::new(endo.clone(), exo.clone(), [e("A", "B"), e("B", "A")]),
            Err(GraphError::Cycle(_))
        ));
        assert!(CausalGraph::new(endo.clone(), exo.clone(), [e("A", "U")]).is_err());
        assert!(CausalGraph::new(endo.clone(), exo.clone(), [e("A", "Z")]).is_err());
        assert!(CausalGraph::new(endo.clone(), endo.clone(), []).is_err());
        let g = CausalGraph::new(endo, exo, [e("U", "A"), e("U", "B"), e("A", "B")]).unwrap();
        assert!(g.is_confounded());
        assert_eq!(g.parents("B"), ["A", "U"]);
        assert_eq!(g.endogenous_edges(), BTreeSet::from([e("A", "B")]));
    }

    #[test]
    fn cycle_report_names_the_cycle() {
        let err = topological_order(
            ["a", "b", "c", "d"],
            [("a", "b"), ("b", "c"), ("c", "b"), ("c", "d")],
        )
        .unwrap_err();
        assert_eq!(err, ["b", "c", "b"]);
    }

    #[test]
    fn lexicographic_tie_breaking() {
        let order = topological_order(["c", "b", "a", "z"], [("z", "a")]).unwrap();
        assert_eq!(order, ["b", "c", "z", "a"]);
    }
}
