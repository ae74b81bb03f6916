//! Random SCM generation from a function class and a causal graph.

use std::collections::BTreeMap;

use crate::distributions::Distribution;
use crate::expr::Expr;
use crate::graph::{
    default_max_retries, generate_graph, generate_unique_graph_set, CausalGraph, GraphError,
    GraphGenConfig,
};
use crate::rng::RngState;
use crate::scm::ScmModel;

/// Family of structural equations to draw from.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionClass {
    /// `w_0*p_0 + ... + w_k*p_k + bias` with `|w_i|` uniform in
    /// `[weight_low, weight_high]` and a uniformly random sign.
    Linear {
        weight_low: f64,
        weight_high: f64,
        bias: f64,
    },
    /// Sum of all parents plus the product of two distinct random parents.
    Interaction,
}

impl FunctionClass {
    pub fn linear() -> Self {
        FunctionClass::Linear {
            weight_low: 0.5,
            weight_high: 2.0,
            bias: 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FunctionClass::Linear { .. } => "linear",
            FunctionClass::Interaction => "interaction",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "linear" => Some(FunctionClass::linear()),
            "interaction" => Some(FunctionClass::Interaction),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if let FunctionClass::Linear {
            weight_low,
            weight_high,
            bias,
        } = *self
        {
            if !(weight_low > 0.0 && weight_low <= weight_high && weight_high.is_finite()) {
                return Err(GraphError::InvalidConfig(format!(
                    "linear weights need 0 < low <= high, got [{weight_low}, {weight_high}]"
                )));
            }
            if !bias.is_finite() {
                return Err(GraphError::InvalidConfig(
                    "linear bias must be finite".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScmGenConfig {
    pub graph: GraphGenConfig,
    pub function_classes: Vec<FunctionClass>,
    pub exo_distribution: Distribution,
    /// Require pairwise distinct graphs in [`create_random`].
    pub unique_graphs: bool,
}

impl Default for ScmGenConfig {
    fn default() -> Self {
        ScmGenConfig {
            graph: GraphGenConfig::default(),
            function_classes: vec![FunctionClass::linear()],
            exo_distribution: Distribution::Gauss {
                mu: 0.0,
                sigma: 1.0,
            },
            unique_graphs: false,
        }
    }
}

impl ScmGenConfig {
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.function_classes.is_empty() {
            return Err(GraphError::InvalidConfig(
                "at least one function class is required".into(),
            ));
        }
        self.function_classes
            .iter()
            .try_for_each(FunctionClass::validate)
    }
}

fn sum(terms: impl IntoIterator<Item = Expr>) -> Option<Expr> {
    terms.into_iter().reduce(Expr::add)
}

/// Draws an equation of `class` over exactly `parents`.
pub fn materialize_equation(class: &FunctionClass, parents: &[String], rng: &mut RngState) -> Expr {
    match *class {
        FunctionClass::Linear {
            weight_low,
            weight_high,
            bias,
        } => {
            let terms: Vec<Expr> = parents
                .iter()
                .map(|p| {
                    let magnitude = weight_low + (weight_high - weight_low) * rng.next_f64();
                    let weight = if rng.next_u64() & 1 == 0 {
                        magnitude
                    } else {
                        -magnitude
                    };
                    Expr::mul(Expr::num(weight), Expr::var(p.clone()))
                })
                .collect();
            match sum(terms) {
                Some(s) => Expr::add(s, Expr::num(bias)),
                None => Expr::num(bias),
            }
        }
        FunctionClass::Interaction => {
            let additive = sum(parents.iter().map(|p| Expr::var(p.clone())));
            let Some(additive) = additive else {
                return Expr::num(0.0);
            };
            if parents.len() < 2 {
                return additive;
            }
            let a = rng.index(parents.len());
            let mut b = rng.index(parents.len() - 1);
            if b >= a {
                b += 1;
            }
            let (a, b) = (a.min(b), a.max(b));
            Expr::add(
                additive,
                Expr::mul(Expr::var(parents[a].clone()), Expr::var(parents[b].clone())),
            )
        }
    }
}

/// Builds an SCM whose effective graph is exactly `graph`.
pub fn create_from_graph(
    graph: &CausalGraph,
    config: &ScmGenConfig,
    rng: &mut RngState,
) -> Result<ScmModel, GraphError> {
    config.validate()?;
    let exogenous: BTreeMap<String, Distribution> = graph
        .exogenous()
        .iter()
        .map(|u| (u.clone(), config.exo_distribution))
        .collect();
    let mut endo_names = graph.endogenous().to_vec();
    endo_names.sort();
    let mut endogenous = BTreeMap::new();
    for name in endo_names {
        let class = &config.function_classes[rng.index(config.function_classes.len())];
        let parents = graph.parents(&name);
        endogenous.insert(name, materialize_equation(class, &parents, rng));
    }
    ScmModel::from_parts(endogenous, exogenous)
        .map_err(|e| GraphError::InvalidGraph(format!("graph does not yield a valid SCM: {e}")))
}

/// Generates `count` random graphs and one SCM per graph.
pub fn create_random(
    count: usize,
    config: &ScmGenConfig,
    rng: &mut RngState,
) -> Result<Vec<ScmModel>, GraphError> {
    if count < 1 {
        return Err(GraphError::InvalidConfig("count must be at least 1".into()));
    }
    config.validate()?;
    let (mut graph_rng, mut eq_rng) = rng.split();
    let graphs = if config.unique_graphs {
        generate_unique_graph_set(
            &config.graph,
            count,
            &mut graph_rng,
            default_max_retries(count),
        )?
    } else {
        (0..count)
            .map(|_| generate_graph(&config.graph, &mut graph_rng))
            .collect::<Result<_, _>>()?
    };
    graphs
        .iter()
        .map(|g| create_from_graph(g, config, &mut eq_rng))
        .collect()
}
