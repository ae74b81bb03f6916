//! Structural causal models: equations over endogenous variables, noise
//! distributions over exogenous variables, do-interventions and ancestral
//! sampling.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::distributions::Distribution;
use crate::expr::{is_identifier, Bindings, EvalError, Expr};
use crate::graph::{topological_order, CausalGraph};
use crate::rng::RngState;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmError {
    #[error("variable `{0}` is already declared")]
    DuplicateName(String),
    #[error("`{0}` is not a valid variable name")]
    InvalidName(String),
    #[error("equation of `{variable}` references undeclared variable `{reference}`")]
    UnknownVariable { variable: String, reference: String },
    #[error("equations would form a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("`{0}` is not an endogenous variable and cannot be intervened on")]
    UnknownTarget(String),
    #[error("`{0}` is targeted by more than one intervention")]
    DuplicateTarget(String),
    #[error("evaluating `{variable}`: {source}")]
    Evaluation {
        variable: String,
        #[source]
        source: EvalError,
    },
}

/// Replace the equation of `target` with `equation`.
#[derive(Debug, Clone, PartialEq)]
pub struct Intervention {
    pub target: String,
    pub equation: Expr,
}

impl Intervention {
    pub fn new(target: impl Into<String>, equation: Expr) -> Self {
        Intervention {
            target: target.into(),
            equation,
        }
    }

    /// Parses the right-hand side from the expression language.
    pub fn parse(
        target: impl Into<String>,
        equation: &str,
    ) -> Result<Self, crate::expr::ParseError> {
        Ok(Intervention::new(target, Expr::parse(equation)?))
    }
}

/// One joint draw of every variable in a model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    pub endogenous: BTreeMap<String, f64>,
    pub exogenous: BTreeMap<String, f64>,
}

impl Sample {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.endogenous
            .get(name)
            .or_else(|| self.exogenous.get(name))
            .copied()
    }

    /// All values, endogenous and exogenous, keyed by name.
    pub fn values(&self) -> BTreeMap<String, f64> {
        self.endogenous
            .iter()
            .chain(&self.exogenous)
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }
}

impl Bindings for Sample {
    fn value(&self, name: &str) -> Option<f64> {
        self.get(name)
    }
}

/// A structural causal model.
///
/// The declared equations are never modified by interventions; active
/// interventions shadow them until undone.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScmModel {
    endogenous: BTreeMap<String, Expr>,
    exogenous: BTreeMap<String, Distribution>,
    interventions: BTreeMap<String, Expr>,
    order: Vec<String>,
}

impl ScmModel {
    pub fn new() -> Self {
        ScmModel::default()
    }

    /// Builds a model from complete equation and distribution sets, so
    /// equations may refer to variables listed after them.
    pub fn from_parts(
        endogenous: BTreeMap<String, Expr>,
        exogenous: BTreeMap<String, Distribution>,
    ) -> Result<Self, ScmError> {
        for name in endogenous.keys().chain(exogenous.keys()) {
            if !is_identifier(name) {
                return Err(ScmError::InvalidName(name.clone()));
            }
        }
        if let Some(name) = endogenous.keys().find(|n| exogenous.contains_key(*n)) {
            return Err(ScmError::DuplicateName(name.clone()));
        }
        let mut model = ScmModel {
            endogenous,
            exogenous,
            interventions: BTreeMap::new(),
            order: Vec::new(),
        };
        model.order = model.check(&model.interventions)?;
        Ok(model)
    }

    pub fn add_exogenous(
        &mut self,
        name: impl Into<String>,
        dist: Distribution,
    ) -> Result<&mut Self, ScmError> {
        let name = name.into();
        self.check_new_name(&name)?;
        self.exogenous.insert(name, dist);
        Ok(self)
    }

    /// Adds an endogenous variable. Every variable the equation references
    /// must already be declared.
    pub fn add_endogenous(
        &mut self,
        name: impl Into<String>,
        equation: Expr,
    ) -> Result<&mut Self, ScmError> {
        let name = name.into();
        self.check_new_name(&name)?;
        if equation.references(&name) {
            return Err(ScmError::Cycle(vec![name.clone(), name]));
        }
        for r in equation.free_variables() {
            if !self.is_declared(&r) {
                return Err(ScmError::UnknownVariable {
                    variable: name,
                    reference: r,
                });
            }
        }
        self.endogenous.insert(name.clone(), equation);
        match self.check(&self.interventions) {
            Ok(order) => {
                self.order = order;
                Ok(self)
            }
            Err(e) => {
                self.endogenous.remove(&name);
                Err(e)
            }
        }
    }

    fn check_new_name(&self, name: &str) -> Result<(), ScmError> {
        if !is_identifier(name) {
            return Err(ScmError::InvalidName(name.to_string()));
        }
        if self.is_declared(name) {
            return Err(ScmError::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.endogenous.contains_key(name) || self.exogenous.contains_key(name)
    }

    /// Validates references and acyclicity of the equations in effect under
    /// `interventions`, returning the endogenous evaluation order.
    fn check(&self, interventions: &BTreeMap<String, Expr>) -> Result<Vec<String>, ScmError> {
        let effective = |name: &str| interventions.get(name).unwrap_or(&self.endogenous[name]);
        let mut edges = Vec::new();
        for name in self.endogenous.keys() {
            let eq = effective(name);
            for parent in eq.free_variables() {
                if !self.is_declared(&parent) {
                    return Err(ScmError::UnknownVariable {
                        variable: name.clone(),
                        reference: parent,
                    });
                }
                if self.endogenous.contains_key(&parent) {
                    edges.push((parent, name.clone()));
                }
            }
        }
        topological_order(
            self.endogenous.keys().map(String::as_str),
            edges.iter().map(|(a, b)| (a.as_str(), b.as_str())),
        )
        .map_err(ScmError::Cycle)
    }

    /// Applies all interventions simultaneously, or none of them on error.
    pub fn do_interventions(&mut self, interventions: &[Intervention]) -> Result<(), ScmError> {
        let mut next = self.interventions.clone();
        let mut targets = BTreeSet::new();
        for iv in interventions {
            if !self.endogenous.contains_key(&iv.target) {
                return Err(ScmError::UnknownTarget(iv.target.clone()));
            }
            if !targets.insert(iv.target.as_str()) {
                return Err(ScmError::DuplicateTarget(iv.target.clone()));
            }
            if iv.equation.references(&iv.target) {
                return Err(ScmError::Cycle(vec![iv.target.clone(), iv.target.clone()]));
            }
            next.insert(iv.target.clone(), iv.equation.clone());
        }
        self.order = self.check(&next)?;
        self.interventions = next;
        Ok(())
    }

    /// Restores every intervened equation.
    pub fn undo_interventions(&mut self) {
        if self.interventions.is_empty() {
            return;
        }
        self.interventions.clear();
        self.order = self
            .check(&self.interventions)
            .expect("declared equations were acyclic when added");
    }

    pub fn endogenous_names(&self) -> impl Iterator<Item = &String> {
        self.endogenous.keys()
    }

    pub fn exogenous_names(&self) -> impl Iterator<Item = &String> {
        self.exogenous.keys()
    }

    pub fn endogenous_count(&self) -> usize {
        self.endogenous.len()
    }

    pub fn exogenous_count(&self) -> usize {
        self.exogenous.len()
    }

    /// Declared equation, ignoring interventions.
    pub fn equation(&self, name: &str) -> Option<&Expr> {
        self.endogenous.get(name)
    }

    /// Equation currently in effect.
    pub fn effective_equation(&self, name: &str) -> Option<&Expr> {
        self.interventions
            .get(name)
            .or_else(|| self.endogenous.get(name))
    }

    pub fn distribution(&self, name: &str) -> Option<&Distribution> {
        self.exogenous.get(name)
    }

    pub fn equations(&self) -> &BTreeMap<String, Expr> {
        &self.endogenous
    }

    pub fn distributions(&self) -> &BTreeMap<String, Distribution> {
        &self.exogenous
    }

    pub fn active_interventions(&self) -> &BTreeMap<String, Expr> {
        &self.interventions
    }

    /// Evaluation order of the endogenous variables under the equations in
    /// effect, ties broken by name.
    pub fn topological_order(&self) -> &[String] {
        &self.order
    }

    /// Ancestral sampling. Each exogenous variable draws from its own stream
    /// derived from one word of `rng` and its name, so declaring or removing
    /// a variable leaves the draws of the others unchanged.
    pub fn sample(&self, rng: &mut RngState) -> Result<Sample, ScmError> {
        let base = RngState::new(rng.next_u64());
        let mut sample = Sample::default();
        for (name, dist) in &self.exogenous {
            let mut stream = base.fork(name);
            sample
                .exogenous
                .insert(name.clone(), dist.draw(&mut stream));
        }
        for name in &self.order {
            let eq = self
                .effective_equation(name)
                .expect("ordered names are endogenous");
            let value = eq
                .evaluate(&sample)
                .map_err(|source| ScmError::Evaluation {
                    variable: name.clone(),
                    source,
                })?;
            sample.endogenous.insert(name.clone(), value);
        }
        Ok(sample)
    }

    pub fn sample_n(&self, n: usize, rng: &mut RngState) -> Result<Vec<Sample>, ScmError> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// Graph induced by the equations in effect.
    pub fn effective_graph(&self) -> CausalGraph {
        let edges = self
            .endogenous
            .keys()
            .flat_map(|name| {
                let eq = self.effective_equation(name).expect("declared");
                eq.free_variables()
                    .into_iter()
                    .map(move |parent| (parent, name.clone()))
            })
            .collect();
        CausalGraph::from_parts_unchecked(
            self.endogenous.keys().cloned().collect(),
            self.exogenous.keys().cloned().collect(),
            edges,
        )
    }

    /// True iff every endogenous value in `sample` is exactly what its
    /// equation in effect produces from the other values.
    pub fn is_consistent(&self, sample: &Sample) -> bool {
        if !sample.endogenous.keys().eq(self.endogenous.keys())
            || !sample.exogenous.keys().eq(self.exogenous.keys())
        {
            return false;
        }
        self.endogenous.keys().all(|name| {
            let eq = self.effective_equation(name).expect("declared");
            matches!(eq.evaluate(sample), Ok(v) if v.to_bits() == sample.endogenous[name].to_bits())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    /// A <- U + 5, Effect <- 2A, U ~ uniform_int(3, 8)
    fn worked_example() -> ScmModel {
        let mut m = ScmModel::new();
        m.add_exogenous("U", Distribution::uniform_int(3.0, 8.0).unwrap())
            .unwrap()
            .add_endogenous("A", p("U + 5"))
            .unwrap()
            .add_endogenous("Effect", p("A * 2"))
            .unwrap();
        m
    }

    fn edges(g: &CausalGraph) -> Vec<(&str, &str)> {
        g.edges()
            .iter()
            .map(|(a, b)| (a.as_str(), b.as_str()))
            .collect()
    }

    #[test]
    fn build_and_graph() {
        let m = worked_example();
        assert_eq!(edges(&m.effective_graph()), [("A", "Effect"), ("U", "A")]);
        assert_eq!(m.topological_order(), ["A", "Effect"]);
    }

    #[test]
    fn add_errors() {
        let mut m = worked_example();
        assert_eq!(
            m.add_exogenous("U", Distribution::gauss(0.0, 1.0).unwrap())
                .unwrap_err(),
            ScmError::DuplicateName("U".into())
        );
        assert!(matches!(
            m.add_endogenous("B", p("B + 1")),
            Err(ScmError::Cycle(_))
        ));
        assert!(matches!(
            m.add_endogenous("C", p("Z")),
            Err(ScmError::UnknownVariable { .. })
        ));
        assert!(matches!(
            m.add_endogenous("1x", p("A")),
            Err(ScmError::InvalidName(_))
        ));
        assert_eq!(m, worked_example());
        m.add_exogenous("U2", Distribution::gauss(0.0, 1.0).unwrap())
            .unwrap();
        assert_eq!(m.exogenous_count(), 2);
    }

    #[test]
    fn from_parts_allows_any_declaration_order() {
        let m = ScmModel::from_parts(
            BTreeMap::from([("A".into(), p("U + 5")), ("Effect".into(), p("A * 2"))]),
            BTreeMap::from([("U".into(), Distribution::uniform_int(3.0, 8.0).unwrap())]),
        )
        .unwrap();
        assert_eq!(m, worked_example());
        let cyclic = ScmModel::from_parts(
            BTreeMap::from([("A".into(), p("B")), ("B".into(), p("A"))]),
            BTreeMap::new(),
        );
        assert_eq!(
            cyclic.unwrap_err(),
            ScmError::Cycle(vec!["A".into(), "B".into(), "A".into()])
        );
    }

    #[test]
    fn intervention_replaces_and_undo_restores() {
        let mut m = worked_example();
        m.do_interventions(&[Intervention::new("Effect", p("A + 1"))])
            .unwrap();
        assert_eq!(m.effective_equation("Effect"), Some(&p("A + 1")));
        assert_eq!(m.equation("Effect"), Some(&p("A * 2")));
        let mut rng = RngState::new(3);
        for _ in 0..1000 {
            let s = m.sample(&mut rng).unwrap();
            assert_eq!(s.endogenous["Effect"] - s.endogenous["A"], 1.0);
        }
        m.undo_interventions();
        assert_eq!(m, worked_example());
    }

    #[test]
    fn constant_intervention_cuts_edge() {
        let mut m = worked_example();
        m.do_interventions(&[Intervention::new("A", p("5"))])
            .unwrap();
        assert_eq!(edges(&m.effective_graph()), [("A", "Effect")]);
        let s = m.sample(&mut RngState::new(0)).unwrap();
        assert_eq!((s.endogenous["A"], s.endogenous["Effect"]), (5.0, 10.0));
    }

    #[test]
    fn cyclic_intervention_is_rejected_atomically() {
        let mut m = worked_example();
        let err = m
            .do_interventions(&[
                Intervention::new("Effect", p("A + 1")),
                Intervention::new("A", p("Effect")),
            ])
            .unwrap_err();
        assert!(matches!(err, ScmError::Cycle(_)));
        assert!(m.active_interventions().is_empty());
        let err = m
            .do_interventions(&[Intervention::new("A", p("Effect"))])
            .unwrap_err();
        assert_eq!(
            err,
            ScmError::Cycle(vec!["A".into(), "Effect".into(), "A".into()])
        );
        assert_eq!(m, worked_example());
    }

    #[test]
    fn intervention_errors() {
        let mut m = worked_example();
        assert_eq!(
            m.do_interventions(&[Intervention::new("U", p("1"))])
                .unwrap_err(),
            ScmError::UnknownTarget("U".into())
        );
        assert_eq!(
            m.do_interventions(&[
                Intervention::new("A", p("1")),
                Intervention::new("A", p("2"))
            ])
            .unwrap_err(),
            ScmError::DuplicateTarget("A".into())
        );
        assert!(matches!(
            m.do_interventions(&[Intervention::new("A", p("A + 1"))]),
            Err(ScmError::Cycle(_))
        ));
        assert!(matches!(
            m.do_interventions(&[Intervention::new("A", p("Q"))]),
            Err(ScmError::UnknownVariable { .. })
        ));
        assert_eq!(m, worked_example());
    }

    #[test]
    fn multi_target_undo() {
        let mut m = worked_example();
        m.do_interventions(&[
            Intervention::new("A", p("U")),
            Intervention::new("Effect", p("U - A")),
        ])
        .unwrap();
        assert_eq!(m.active_interventions().len(), 2);
        m.undo_interventions();
        assert_eq!(m, worked_example());
        let mut fresh = ScmModel::new();
        fresh.undo_interventions();
        assert_eq!(fresh, ScmModel::new());
    }

    #[test]
    fn worked_example_support() {
        let m = worked_example();
        let mut rng = RngState::new(9);
        for _ in 0..2000 {
            let s = m.sample(&mut rng).unwrap();
            let u = s.exogenous["U"];
            assert!((3.0..=8.0).contains(&u) && u.fract() == 0.0);
            assert_eq!(s.endogenous["A"], u + 5.0);
            assert_eq!(s.endogenous["Effect"], 2.0 * s.endogenous["A"]);
            assert!(m.is_consistent(&s));
        }
    }

    #[test]
    fn degenerate_exogenous_only() {
        let mut m = ScmModel::new();
        m.add_exogenous("U", Distribution::uniform(2.0, 2.0).unwrap())
            .unwrap();
        let s = m.sample(&mut RngState::new(1)).unwrap();
        assert!(s.endogenous.is_empty());
        assert_eq!(s.exogenous, BTreeMap::from([("U".to_string(), 2.0)]));
        assert!(ScmModel::new().effective_graph().edges().is_empty());
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = worked_example();
        let a = m.sample_n(100, &mut RngState::new(5)).unwrap();
        let b = m.sample_n(100, &mut RngState::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exogenous_draws_ignore_interventions_and_new_variables() {
        let base = worked_example();
        let mut intervened = worked_example();
        intervened
            .do_interventions(&[Intervention::new("A", p("5"))])
            .unwrap();
        let mut extended = worked_example();
        extended
            .add_exogenous("N", Distribution::gauss(0.0, 1.0).unwrap())
            .unwrap();
        let (mut r1, mut r2, mut r3) = (RngState::new(4), RngState::new(4), RngState::new(4));
        for _ in 0..100 {
            let u = base.sample(&mut r1).unwrap().exogenous["U"];
            assert_eq!(intervened.sample(&mut r2).unwrap().exogenous["U"], u);
            assert_eq!(extended.sample(&mut r3).unwrap().exogenous["U"], u);
        }
    }

    #[test]
    fn evaluation_error_names_variable() {
        let mut m = ScmModel::new();
        m.add_exogenous("U", Distribution::uniform(-2.0, -1.0).unwrap())
            .unwrap()
            .add_endogenous("L", p("log(U)"))
            .unwrap();
        match m.sample(&mut RngState::new(1)) {
            Err(ScmError::Evaluation {
                variable,
                source: EvalError::Domain(_),
            }) => {
                assert_eq!(variable, "L")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn replacement_may_use_exogenous() {
        let mut m = worked_example();
        m.add_exogenous("V", Distribution::bernoulli(0.5).unwrap())
            .unwrap();
        m.do_interventions(&[Intervention::new("Effect", p("V * 100"))])
            .unwrap();
        let g = m.effective_graph();
        assert!(g.has_edge("V", "Effect") && !g.has_edge("A", "Effect"));
    }
}
